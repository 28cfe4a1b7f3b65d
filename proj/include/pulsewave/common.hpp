#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pulsewave {

enum class ErrorCode {
  Parse,
  Monotonicity,
  Range,
  Length,
  NoBeats,
  TooFewSamples,
  DegenerateBeat,
  EmptyWindow,
  ParallelLines,
  ZeroDenominator,
  ZeroArea,
  NoValidBeats,
  TooShort,
  Precondition,
  ZeroTotalPower,
  ConstantCovariate,
  TooFewRows,
  InsufficientData,
  RankDeficient,
  DimensionMismatch,
  EmptyInput,
  LengthMismatch,
  InvalidTemplate,
  InvalidSpec,
  MissingTarget,
  Config,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Linear-interpolation ("type 7") percentile, q in [0, 1]. Throws on empty input.
double percentile(std::span<const double> values, double q);
// Same convention on an already sorted range.
double percentile_sorted(std::span<const double> sorted, double q);
double median(std::span<const double> values);

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double sample_sd(std::span<const double> values);
// Pearson correlation; NaN when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Two-sided p-value of a Student t statistic.
double t_two_sided_p(double t, double dof);

// Sub-sample vertex of the parabola through (-1, ym), (0, y0), (1, yp).
// Returns the offset in (-1, 1) and the vertex value; offset 0 when flat.
struct Vertex {
  double offset;
  double value;
};
Vertex parabolic_vertex(double ym, double y0, double yp);

/// Portable deterministic generator. The engine stream is fixed by the
/// standard; the distributions here are hand-rolled so sequences do not
/// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mu, double sd) { return mu + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Independent stream seeds for (seed, index) pairs, e.g. per-tree or per-session.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Runs fn(i) for i in [0, count) on up to `threads` workers (0 means hardware
// concurrency). Results must be written by index; the first exception is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace pulsewave
