#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pulsewave/beats.hpp"
#include "pulsewave/common.hpp"
#include "pulsewave/signal.hpp"

namespace testutil {

// Frames with every channel equal to dc + amp * f(t).
inline pulsewave::FrameSeries frames_from(const std::function<double(double)>& f, double fps, double seconds,
                                          double dc = 128.0, double amp = 20.0) {
  pulsewave::FrameSeries out;
  const auto n = static_cast<std::size_t>(std::llround(seconds * fps));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fps;
    const double v = dc + amp * f(t);
    out.t.push_back(t);
    out.r.push_back(v);
    out.g.push_back(v);
    out.b.push_back(v);
  }
  out.nominal_fps = fps;
  return out;
}

inline pulsewave::CompositeSignal signal_from(const std::vector<double>& z, double fs) {
  pulsewave::CompositeSignal s;
  s.fs = fs;
  for (std::size_t i = 0; i < z.size(); ++i) s.t.push_back(static_cast<double>(i) / fs);
  s.z = z;
  return s;
}

// A beat whose samples are given directly, on a grid of spacing dt.
inline pulsewave::Beat beat_from(const std::vector<double>& samples, double dt) {
  pulsewave::Beat b;
  b.samples = samples;
  b.dt = dt;
  b.start_idx = 0;
  b.end_idx = samples.size() - 1;
  b.peak_idx = 1;
  b.t_start = 0.0;
  b.hr_bpm = 60.0 / (dt * static_cast<double>(samples.size() - 1));
  b.normalized = true;
  return b;
}

inline double gauss(double t, double c, double w) { return std::exp(-0.5 * (t - c) * (t - c) / (w * w)); }

inline pulsewave::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const pulsewave::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected pulsewave::Error");
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("pulsewave_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
