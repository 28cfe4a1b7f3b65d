#pragma once

#include <string>
#include <vector>

#include "pulsewave/signal.hpp"

namespace pulsewave {

/// One beat-to-beat interval spanning foot to foot. `peak_idx` is the
/// maximum-upstroke sample that anchored the beat.
struct Beat {
  std::size_t start_idx = 0;
  std::size_t peak_idx = 0;
  std::size_t end_idx = 0;
  double t_start = 0.0;  // time of start_idx, seconds
  double dt = 0.0;       // sample interval, seconds
  // Sub-sample position of the foot minima at either end, in samples.
  double start_offset = 0.0;
  double end_offset = 0.0;
  std::vector<double> samples;  // start_idx ..= end_idx
  double hr_bpm = 0.0;
  bool normalized = false;

  std::size_t size() const { return samples.size(); }
  double time_at(double index) const { return t_start + index * dt; }
};

struct DroppedBeat {
  std::size_t start_idx = 0;
  std::size_t peak_idx = 0;
  std::size_t end_idx = 0;
  double hr_bpm = 0.0;
  std::string reason;
};

struct BeatSeries {
  std::vector<Beat> beats;
  std::vector<DroppedBeat> dropped;
  double fs = 0.0;
};

struct SegmentationOptions {
  double percentile = 0.70;
  // Candidate onsets closer than this to a stronger onset are suppressed.
  // Defaults to the beat period at the HR cutoff.
  double refractory_s = 60.0 / 150.0;
};

// Central differences over the signal's own timestamps, one-sided at the ends.
std::vector<double> first_derivative(const CompositeSignal& signal);

/// Onsets are the strongest strict local maxima of the first derivative
/// above the percentile of all derivative samples, one per refractory
/// interval. Each Beat spans from the minimum preceding its onset to the
/// minimum preceding the next onset. Throws Error(NoBeats) when fewer than
/// two onsets exist.
BeatSeries segment_beats(const CompositeSignal& signal, const SegmentationOptions& opts = {});

/// Removes the line joining each beat's end values then maps it onto
/// [0, 1]. Beats with no height left are moved to `dropped`.
BeatSeries normalize_amplitude(const BeatSeries& beats, const CompositeSignal& signal);

// Drops beats with hr_bpm strictly above max_bpm; order preserved.
BeatSeries filter_hr(const BeatSeries& beats, double max_bpm = 150.0);

std::string beats_to_json(const BeatSeries& beats);

}  // namespace pulsewave
