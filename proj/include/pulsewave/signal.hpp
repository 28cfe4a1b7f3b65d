#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pulsewave {

struct BeatSeries;

/// Per-frame RGB channel means. Channel values live in [0, 256).
struct FrameSeries {
  std::vector<double> t;
  std::vector<double> r;
  std::vector<double> g;
  std::vector<double> b;
  double nominal_fps = 0.0;

  std::size_t size() const { return t.size(); }
};

/// Uniformly sampled composite pulse signal in z-score units.
struct CompositeSignal {
  std::vector<double> t;
  std::vector<double> z;
  double fs = 0.0;

  std::size_t size() const { return z.size(); }
  double duration() const;
};

struct ValidityCriteria {
  double min_points_per_beat = 15.0;
  double min_duration_s = 100.0;
  double min_sqi = 0.8;  // strict: sqi must be larger than this
};

struct ValidityReport {
  double points_per_beat = 0.0;
  double duration_s = 0.0;
  double sqi = 0.0;
  bool is_valid = false;
  std::vector<std::string> reasons;  // subset of {"points_per_beat", "duration", "sqi"}
};

// Throws Error(Monotonicity | Range | Length) when the invariants do not hold.
void check_frames(const FrameSeries& frames);

// Parses the frames CSV (`t,r_mean,g_mean,b_mean`).
FrameSeries parse_frames_csv(const std::string& text, const std::string& source = "frames");
FrameSeries load_frames(const std::filesystem::path& path);
std::string frames_to_csv(const FrameSeries& frames);

/// Moving z-score per channel over a centered window of `window` samples,
/// then the unweighted mean of the three channel z-scores. Samples within
/// window/2 of either end reuse the nearest full window. Windows with
/// SD < 1e-12 produce z = 0.
CompositeSignal compose_signal(const FrameSeries& frames, std::size_t window = 100);

std::string signal_to_csv(const CompositeSignal& signal);

ValidityReport validate_sample(const CompositeSignal& signal, const BeatSeries& beats, double sqi,
                               const ValidityCriteria& criteria = {});

/// Template-matching quality proxy in [0, 1]: mean clipped correlation of
/// each normalized beat (resampled to 64 points) with the mean beat.
double estimate_sqi(const BeatSeries& beats);

}  // namespace pulsewave
