#include "pulsewave/beats.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pulsewave/common.hpp"

namespace pulsewave {

std::vector<double> first_derivative(const CompositeSignal& s) {
  const std::size_t n = s.size();
  if (n < 3) throw Error(ErrorCode::Length, "derivative needs at least 3 samples");
  if (s.t.size() != n) throw Error(ErrorCode::Length, "signal time axis length mismatch");
  std::vector<double> d(n);
  d[0] = (s.z[1] - s.z[0]) / (s.t[1] - s.t[0]);
  d[n - 1] = (s.z[n - 1] - s.z[n - 2]) / (s.t[n - 1] - s.t[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (s.z[i + 1] - s.z[i - 1]) / (s.t[i + 1] - s.t[i - 1]);
  return d;
}

namespace {

double foot_offset(const std::vector<double>& z, std::size_t i) {
  if (i == 0 || i + 1 >= z.size()) return 0.0;
  if (!(z[i] < z[i - 1] && z[i] < z[i + 1])) return 0.0;
  return parabolic_vertex(z[i - 1], z[i], z[i + 1]).offset;
}

}  // namespace

BeatSeries segment_beats(const CompositeSignal& signal, const SegmentationOptions& opts) {
  const auto d = first_derivative(signal);
  const std::size_t n = d.size();
  const double threshold = percentile(d, opts.percentile);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i] > 0.0 && d[i] > threshold && d[i] > d[i - 1] && d[i] >= d[i + 1]) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  const double refractory = std::max(0.0, opts.refractory_s) * signal.fs;
  std::vector<std::size_t> onsets;
  for (std::size_t c : candidates) {
    bool clear = true;
    for (std::size_t o : onsets) {
      const double gap = std::fabs(static_cast<double>(c) - static_cast<double>(o));
      if (gap < refractory) {
        clear = false;
        break;
      }
    }
    if (clear) onsets.push_back(c);
  }
  std::sort(onsets.begin(), onsets.end());
  if (onsets.size() < 2)
    throw Error(ErrorCode::NoBeats, "found " + std::to_string(onsets.size()) + " onset(s); need at least 2");

  const auto& z = signal.z;
  std::vector<std::size_t> feet(onsets.size());
  for (std::size_t k = 0; k < onsets.size(); ++k) {
    const std::size_t lo = k == 0 ? 0 : onsets[k - 1] + 1;
    std::size_t best = lo;
    for (std::size_t i = lo; i <= onsets[k]; ++i)
      if (z[i] < z[best]) best = i;
    feet[k] = best;
  }

  // A leading beat much shorter than the rest began mid-cycle.
  bool partial_lead = false;
  if (onsets.size() > 2) {
    std::vector<double> rest;
    for (std::size_t k = 1; k + 1 < onsets.size(); ++k) rest.push_back(static_cast<double>(feet[k + 1] - feet[k]));
    partial_lead = static_cast<double>(feet[1] - feet[0]) < 0.8 * median(rest);
  }

  BeatSeries out;
  out.fs = signal.fs;
  for (std::size_t k = 0; k + 1 < onsets.size(); ++k) {
    const std::size_t start = feet[k], end = feet[k + 1], peak = onsets[k];
    const double dur = signal.t[end] - signal.t[start];
    const double hr = dur > 0.0 ? 60.0 / dur : 0.0;
    if (start == 0 || (k == 0 && partial_lead) || !(start < peak && peak < end)) {
      out.dropped.push_back({start, peak, end, hr, "edge"});
      continue;
    }
    Beat b;
    b.start_idx = start;
    b.peak_idx = peak;
    b.end_idx = end;
    b.t_start = signal.t[start];
    b.dt = dur / static_cast<double>(end - start);
    b.start_offset = foot_offset(z, start);
    b.end_offset = foot_offset(z, end);
    b.samples.assign(z.begin() + static_cast<std::ptrdiff_t>(start), z.begin() + static_cast<std::ptrdiff_t>(end) + 1);
    b.hr_bpm = hr;
    out.beats.push_back(std::move(b));
  }
  return out;
}

BeatSeries normalize_amplitude(const BeatSeries& beats, const CompositeSignal& signal) {
  BeatSeries out;
  out.fs = beats.fs;
  out.dropped = beats.dropped;
  for (const auto& src : beats.beats) {
    if (src.end_idx >= signal.size() || src.end_idx - src.start_idx + 1 < 3) {
      out.dropped.push_back({src.start_idx, src.peak_idx, src.end_idx, src.hr_bpm, "too_short"});
      continue;
    }
    Beat b = src;
    const std::size_t m = src.end_idx - src.start_idx + 1;
    b.samples.resize(m);
    const double y0 = signal.z[src.start_idx];
    const double y1 = signal.z[src.end_idx];
    for (std::size_t j = 0; j < m; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(m - 1);
      b.samples[j] = signal.z[src.start_idx + j] - (y0 + frac * (y1 - y0));
    }
    const auto [lo_it, hi_it] = std::minmax_element(b.samples.begin(), b.samples.end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    if (!(span >= 1e-12)) {
      out.dropped.push_back({src.start_idx, src.peak_idx, src.end_idx, src.hr_bpm, "zero_height"});
      continue;
    }
    for (double& v : b.samples) v = (v - lo) / span;
    b.normalized = true;
    out.beats.push_back(std::move(b));
  }
  return out;
}

BeatSeries filter_hr(const BeatSeries& beats, double max_bpm) {
  BeatSeries out;
  out.fs = beats.fs;
  out.dropped = beats.dropped;
  for (const auto& b : beats.beats) {
    if (b.hr_bpm > max_bpm)
      out.dropped.push_back({b.start_idx, b.peak_idx, b.end_idx, b.hr_bpm, "hr_above_max"});
    else
      out.beats.push_back(b);
  }
  return out;
}

std::string beats_to_json(const BeatSeries& beats) {
  using nlohmann::json;
  struct Row {
    std::size_t start, peak, end;
    double hr;
    const std::string* reason;
  };
  std::vector<Row> rows;
  for (const auto& b : beats.beats) rows.push_back({b.start_idx, b.peak_idx, b.end_idx, b.hr_bpm, nullptr});
  for (const auto& b : beats.dropped) rows.push_back({b.start_idx, b.peak_idx, b.end_idx, b.hr_bpm, &b.reason});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.start < b.start; });
  json arr = json::array();
  for (const auto& r : rows) {
    json j = {{"start_idx", r.start}, {"peak_idx", r.peak}, {"end_idx", r.end}, {"hr_bpm", r.hr}};
    if (r.reason) j["dropped_reason"] = *r.reason;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace pulsewave
