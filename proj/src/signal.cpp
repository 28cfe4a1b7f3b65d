#include "pulsewave/signal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pulsewave/beats.hpp"
#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

double CompositeSignal::duration() const {
  if (z.empty() || fs <= 0.0) return 0.0;
  return static_cast<double>(z.size()) / fs;
}

void check_frames(const FrameSeries& f) {
  const std::size_t n = f.t.size();
  if (f.r.size() != n || f.g.size() != n || f.b.size() != n)
    throw Error(ErrorCode::Length, "frame channels differ in length");
  if (n < 2) throw Error(ErrorCode::Length, "frame series needs at least 2 frames");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(f.t[i])) throw Error(ErrorCode::Parse, "non-finite timestamp at frame " + std::to_string(i));
    if (i > 0 && !(f.t[i] > f.t[i - 1]))
      throw Error(ErrorCode::Monotonicity, "timestamps not strictly increasing at frame " + std::to_string(i));
    for (double v : {f.r[i], f.g[i], f.b[i]}) {
      if (!std::isfinite(v) || v < 0.0 || v >= 256.0)
        throw Error(ErrorCode::Range, "channel value out of [0, 256) at frame " + std::to_string(i));
    }
  }
}

FrameSeries parse_frames_csv(const std::string& text, const std::string& source) {
  const auto table = io::parse_csv(text);
  const int it = table.column("t"), ir = table.column("r_mean"), ig = table.column("g_mean"),
            ib = table.column("b_mean");
  if (it < 0 || ir < 0 || ig < 0 || ib < 0)
    throw Error(ErrorCode::Parse, source + ": header must be t,r_mean,g_mean,b_mean");
  FrameSeries f;
  const auto n = table.rows.size();
  f.t.reserve(n);
  f.r.reserve(n);
  f.g.reserve(n);
  f.b.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& row = table.rows[k];
    const std::string ctx = source + ":" + std::to_string(table.lines[k]);
    f.t.push_back(io::parse_double(row[it], ctx));
    f.r.push_back(io::parse_double(row[ir], ctx));
    f.g.push_back(io::parse_double(row[ig], ctx));
    f.b.push_back(io::parse_double(row[ib], ctx));
  }
  check_frames(f);
  f.nominal_fps = static_cast<double>(n - 1) / (f.t.back() - f.t.front());
  return f;
}

FrameSeries load_frames(const std::filesystem::path& path) {
  return parse_frames_csv(io::read_file(path), path.filename().string());
}

std::string frames_to_csv(const FrameSeries& f) {
  std::string out = "t,r_mean,g_mean,b_mean\n";
  out.reserve(f.size() * 48);
  for (std::size_t i = 0; i < f.size(); ++i) {
    out += io::format_double(f.t[i]);
    out += ',';
    out += io::format_double(f.r[i]);
    out += ',';
    out += io::format_double(f.g[i]);
    out += ',';
    out += io::format_double(f.b[i]);
    out += '\n';
  }
  return out;
}

namespace {

// Mean and population SD of every full window [j, j + w), j = 0 .. n - w.
// Running sums over mean-shifted data, resynchronised periodically so
// round-off cannot accumulate across long recordings.
void window_stats(const std::vector<double>& x, std::size_t w, std::vector<double>& mu,
                  std::vector<double>& sd) {
  const std::size_t n = x.size();
  const std::size_t nw = n - w + 1;
  double shift = 0.0;
  for (double v : x) shift += v;
  shift /= static_cast<double>(n);

  mu.assign(nw, 0.0);
  sd.assign(nw, 0.0);
  constexpr std::size_t kResync = 512;
  double s1 = 0.0, s2 = 0.0;
  const double inv = 1.0 / static_cast<double>(w);
  for (std::size_t j = 0; j < nw; ++j) {
    if (j % kResync == 0) {
      s1 = s2 = 0.0;
      for (std::size_t i = j; i < j + w; ++i) {
        const double d = x[i] - shift;
        s1 += d;
        s2 += d * d;
      }
    } else {
      const double out = x[j - 1] - shift;
      const double in = x[j + w - 1] - shift;
      s1 += in - out;
      s2 += in * in - out * out;
    }
    const double m = s1 * inv;
    const double var = std::max(0.0, s2 * inv - m * m);
    mu[j] = m + shift;
    sd[j] = std::sqrt(var);
  }
}

}  // namespace

CompositeSignal compose_signal(const FrameSeries& frames, std::size_t window) {
  const std::size_t n = frames.size();
  if (window < 2) throw Error(ErrorCode::Precondition, "compose window must be at least 2");
  if (n < window)
    throw Error(ErrorCode::Length, "series of " + std::to_string(n) + " frames is shorter than window " +
                                       std::to_string(window));
  CompositeSignal out;
  out.t = frames.t;
  out.z.assign(n, 0.0);
  const std::size_t nw = n - window + 1;
  const std::size_t half = window / 2;
  std::vector<double> mu, sd;
  for (const auto* ch : {&frames.r, &frames.g, &frames.b}) {
    window_stats(*ch, window, mu, sd);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = std::min(i >= half ? i - half : 0, nw - 1);
      if (sd[j] >= 1e-12) out.z[i] += ((*ch)[i] - mu[j]) / sd[j];
    }
  }
  for (double& v : out.z) v /= 3.0;
  out.fs = static_cast<double>(n - 1) / (frames.t.back() - frames.t.front());
  return out;
}

std::string signal_to_csv(const CompositeSignal& s) {
  std::string out = "t,z\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += io::format_double(s.t[i]);
    out += ',';
    out += io::format_double(s.z[i]);
    out += '\n';
  }
  return out;
}

ValidityReport validate_sample(const CompositeSignal& signal, const BeatSeries& beats, double sqi,
                               const ValidityCriteria& criteria) {
  ValidityReport rep;
  rep.sqi = sqi;
  rep.duration_s = signal.duration();
  if (!beats.beats.empty()) {
    std::vector<double> lengths;
    lengths.reserve(beats.beats.size());
    for (const auto& b : beats.beats) lengths.push_back(static_cast<double>(b.end_idx - b.start_idx));
    rep.points_per_beat = median(lengths);
  }
  if (rep.points_per_beat < criteria.min_points_per_beat) rep.reasons.emplace_back("points_per_beat");
  if (rep.duration_s < criteria.min_duration_s) rep.reasons.emplace_back("duration");
  if (!(sqi > criteria.min_sqi)) rep.reasons.emplace_back("sqi");
  rep.is_valid = rep.reasons.empty();
  return rep;
}

double estimate_sqi(const BeatSeries& beats) {
  constexpr std::size_t kPoints = 64;
  if (beats.beats.size() < 2) return 0.0;
  std::vector<std::vector<double>> resampled;
  resampled.reserve(beats.beats.size());
  for (const auto& b : beats.beats) {
    const auto& s = b.samples;
    if (s.size() < 2) continue;
    std::vector<double> r(kPoints);
    for (std::size_t k = 0; k < kPoints; ++k) {
      const double pos = static_cast<double>(k) * static_cast<double>(s.size() - 1) / (kPoints - 1);
      const auto lo = std::min(static_cast<std::size_t>(pos), s.size() - 2);
      const double frac = pos - static_cast<double>(lo);
      r[k] = s[lo] + frac * (s[lo + 1] - s[lo]);
    }
    resampled.push_back(std::move(r));
  }
  if (resampled.size() < 2) return 0.0;
  std::vector<double> templ(kPoints, 0.0);
  for (const auto& r : resampled)
    for (std::size_t k = 0; k < kPoints; ++k) templ[k] += r[k];
  for (double& v : templ) v /= static_cast<double>(resampled.size());
  double acc = 0.0;
  for (const auto& r : resampled) {
    const double c = pearson(r, templ);
    acc += std::isfinite(c) ? std::max(0.0, c) : 0.0;
  }
  return acc / static_cast<double>(resampled.size());
}

}  // namespace pulsewave
