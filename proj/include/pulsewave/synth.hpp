#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pulsewave/beats.hpp"
#include "pulsewave/features.hpp"
#include "pulsewave/fiducials.hpp"
#include "pulsewave/signal.hpp"

namespace pulsewave {

struct GaussianLobe {
  double center = 0.0;  // s from beat start
  double width = 0.0;   // s
  double amplitude = 0.0;
};

struct BeatTemplate {
  std::vector<GaussianLobe> lobes;
  double period = 1.0;  // s

  // Throws Error(InvalidTemplate).
  void validate() const;
  // Lobe times stretched to a new period.
  BeatTemplate scaled(double new_period) const;
  // t -> period - t.
  BeatTemplate reflected() const;
};

// Systolic and diastolic lobes.
BeatTemplate default_template();
// Adds a late-systolic lobe between the two.
BeatTemplate three_lobe_template();

/// Sum of Gaussian lobes at absolute times, with closed-form derivatives.
class AnalyticSignal {
 public:
  AnalyticSignal() = default;
  explicit AnalyticSignal(std::vector<GaussianLobe> lobes);

  // order 0..4
  double eval(double t, int order = 0) const;
  const std::vector<GaussianLobe>& lobes() const { return lobes_; }
  double min_width() const { return min_width_; }

 private:
  std::vector<GaussianLobe> lobes_;  // sorted by center
  double min_width_ = 0.0;
  double max_width_ = 0.0;
};

/// Location of an extremum of the `order`-th derivative on [a, b]: the best
/// strict interior local extremum, or the better endpoint when none exists.
struct AnalyticExtremum {
  double t = 0.0;
  double value = 0.0;
  bool interior = false;
};
AnalyticExtremum analytic_extremum(const AnalyticSignal& f, int order, double a, double b, bool want_max);

// Roots of the `order`-th derivative in [a, b], ascending, to ~1e-12 s.
std::vector<double> analytic_roots(const AnalyticSignal& f, int order, double a, double b);

/// Ground-truth fiducials for the beat running from foot `t_lv` to the next
/// foot `t_end`, using the continuous forms of the detection rules. Indices
/// are left at 0.
FiducialSet analytic_fiducials(const AnalyticSignal& f, double t_lv, double t_end);

struct SampledBeat {
  Beat beat;          // samples of the template over [0, period]
  FiducialSet truth;  // analytic, times relative to beat start
};

// Throws Error(InvalidTemplate).
SampledBeat generate_beat(const BeatTemplate& tmpl, double fs);

struct AutoexposureParams {
  bool enabled = false;
  double gain = 1.0;
  double setpoint = 128.0;
  double rate = 0.0;        // per-frame exponent of the multiplicative update
  double smoothing = 0.05;  // EMA weight of the tracked output mean
  // Start from setpoint / (mean of the first warm_start_s of input).
  bool warm_start = false;
  double warm_start_s = 1.0;
};

/// Per channel: y = clip(gain * e * x) into [0, 256), then the exposure e is
/// pulled toward setpoint / (running output mean) by rate. Zero rate with unit
/// gain and no warm start is the identity on valid frames.
FrameSeries apply_autoexposure(const FrameSeries& frames, const AutoexposureParams& params);

// Largest representable channel value.
double channel_ceiling();

struct SessionSpec {
  double duration_s = 120.0;
  double fps = 30.0;
  double hr_mean = 75.0;
  double hr_sd = 0.0;
  double drift_amplitude = 0.0;
  double drift_frequency = 0.1;
  double noise_sd = 0.0;
  double dc = 150.0;
  double pulse_amplitude = 40.0;
  // Start of the first beat relative to t = 0, in periods (negative leads in mid-beat).
  double phase = -0.3;
  BeatTemplate tmpl = default_template();
  AutoexposureParams autoexposure;
  std::uint64_t seed = 1;

  // Throws Error(InvalidSpec).
  void validate() const;
};

// Pulse amplitude ratio of the R, G and B channels.
inline constexpr double kChannelGains[3] = {0.6, 1.0, 0.3};

struct TruthBeat {
  double t_start = 0.0;
  double t_end = 0.0;
  double hr_bpm = 0.0;
  FiducialSet fiducials;
  BeatFeatures features;
};

struct Session {
  std::string id;
  std::string subject_id;
  double height_cm = 170.0;
  double age = 40.0;
  double sbp = 0.0;
  double dbp = 0.0;
  SessionSpec spec;
  FrameSeries frames;
  AnalyticSignal pulse;
  std::vector<TruthBeat> beats;  // complete beats the pipeline can recover
  std::size_t planted_beats = 0;
  double ri_true = 0.0;  // median over truth beats
  // Median truth feature values over beats, per waveform feature.
  std::array<std::optional<double>, kBeatFeatureNames.size()> features_true{};
};

/// Renders one session. Beats are period-jittered copies of the template;
/// every channel is gain_c * (dc + A * pulse + drift) plus noise, limited to
/// [0, 256) and then passed through the autoexposure model when enabled.
Session generate_session(const SessionSpec& spec, double height_cm = 170.0);

struct BpModel {
  double c0 = 0.0;
  double c1 = 0.0;
  double noise_sd = 0.0;
};

struct SynthBatchSpec {
  std::size_t sessions = 10;
  std::uint64_t seed = 1;
  SessionSpec session;
  // Relative SD of lobe amplitudes (lobes after the first) and of lobe times.
  double amplitude_jitter = 0.0;
  double time_jitter = 0.0;
  // Relative SD of the session's mean HR.
  double hr_mean_jitter = 0.0;
  BpModel sbp{120.0, 0.0, 0.0};
  BpModel dbp{80.0, 0.0, 0.0};
  double height_mean = 170.0;
  double height_sd = 0.0;
  double age_min = 20.0;
  double age_max = 70.0;

  void validate() const;
};

// Session i draws from derive_seed(seed, i); output does not depend on threads.
std::vector<Session> generate_batch(const SynthBatchSpec& spec, unsigned threads = 1);

std::string labels_to_json(const std::vector<Session>& sessions, const std::vector<std::string>& files);
// `sample_id,subject_id,height_cm,age,SBP,DBP`
std::string meta_to_csv(const std::vector<Session>& sessions);

}  // namespace pulsewave
