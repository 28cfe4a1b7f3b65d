#pragma once

#include <string>
#include <vector>

#include "pulsewave/beats.hpp"

namespace pulsewave {

/// A waveform landmark. `index` is the sample the rule selected; `time`
/// and `amplitude` carry sub-sample refinement where the neighbourhood
/// allows it.
struct WavePoint {
  std::size_t index = 0;
  double time = 0.0;
  double amplitude = 0.0;
};

/// An extremum of the second-derivative series.
struct AccelPoint {
  std::size_t index = 0;
  double time = 0.0;
  double value = 0.0;
};

struct IspPoint {
  double time = 0.0;
  double amplitude = 0.0;
  bool in_range = true;  // false when the intersection falls outside [LV, RV]
};

struct FiducialSet {
  WavePoint LV, ESP, IP, DN, DP, RV;
  bool has_second_peak = false;

  AccelPoint A, B, E, F, G, H;
  bool accel_located = false;

  // Maximum first-derivative sample on the upstroke, used as the tangent point.
  WavePoint max_slope;
  double max_slope_value = 0.0;

  IspPoint ISP;
  bool isp_located = false;
};

struct FiducialOptions {
  std::size_t min_samples = 15;
  // 3-point moving average over the second-difference series.
  bool smooth_second_derivative = true;
};

// Derivative series of a beat's samples on its uniform grid.
std::vector<double> beat_first_derivative(const Beat& beat);
std::vector<double> beat_second_derivative(const Beat& beat, bool smooth);

/// LV, ESP, IP, DN, DP and RV of one normalized beat.
/// Throws Error(TooFewSamples) or Error(DegenerateBeat).
FiducialSet detect_fiducials(const Beat& beat, const FiducialOptions& opts = {});

/// Fills A, B, E, F, G, H from the second derivative. Each point is the
/// best interior local extremum in its window, falling back to the window's
/// global extremum. F's window starts where the second derivative first
/// turns non-negative after ESP, so the systolic b-wave is not reused. G is
/// taken on (F, RV) and H on [G, RV].
/// Throws Error(EmptyWindow).
FiducialSet detect_accel_points(const Beat& beat, const FiducialSet& fid, const FiducialOptions& opts = {});

struct Line {
  double t0 = 0.0;
  double a0 = 0.0;
  double slope = 0.0;
  double at(double t) const { return a0 + slope * (t - t0); }
};

// Throws Error(ParallelLines) when the slopes differ by less than 1e-12.
IspPoint intersect_lines(const Line& l1, const Line& l2);

/// Intersection of the tangent at the maximum-slope upstroke sample with the
/// line through DP and RV. Out-of-range intersections are flagged, not thrown.
IspPoint construct_isp(const Beat& beat, const FiducialSet& fid);

// All three stages; the returned set has accel points and ISP filled.
FiducialSet locate_all(const Beat& beat, const FiducialOptions& opts = {});

std::string fiducials_to_json(const std::vector<FiducialSet>& sets);

}  // namespace pulsewave
