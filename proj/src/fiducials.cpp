#include "pulsewave/fiducials.hpp"

#include <cmath>

#include <json.hpp>

#include "pulsewave/common.hpp"

namespace pulsewave {

std::vector<double> beat_first_derivative(const Beat& beat) {
  const auto& y = beat.samples;
  const std::size_t m = y.size();
  std::vector<double> d(m, 0.0);
  if (m < 2 || beat.dt <= 0.0) return d;
  d[0] = (y[1] - y[0]) / beat.dt;
  d[m - 1] = (y[m - 1] - y[m - 2]) / beat.dt;
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * beat.dt);
  return d;
}

std::vector<double> beat_second_derivative(const Beat& beat, bool smooth) {
  const auto& y = beat.samples;
  const std::size_t m = y.size();
  std::vector<double> d(m, 0.0);
  if (m < 3 || beat.dt <= 0.0) return d;
  const double inv = 1.0 / (beat.dt * beat.dt);
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) * inv;
  d[0] = d[1];
  d[m - 1] = d[m - 2];
  if (!smooth) return d;
  std::vector<double> s(m);
  s[0] = 0.5 * (d[0] + d[1]);
  s[m - 1] = 0.5 * (d[m - 2] + d[m - 1]);
  for (std::size_t i = 1; i + 1 < m; ++i) s[i] = (d[i - 1] + d[i] + d[i + 1]) / 3.0;
  return s;
}

namespace {

bool strict_max(const std::vector<double>& y, std::size_t i) {
  return i > 0 && i + 1 < y.size() && y[i - 1] < y[i] && y[i] > y[i + 1];
}
bool strict_min(const std::vector<double>& y, std::size_t i) {
  return i > 0 && i + 1 < y.size() && y[i - 1] > y[i] && y[i] < y[i + 1];
}

WavePoint point_at(const Beat& beat, std::size_t i) {
  return {i, beat.time_at(static_cast<double>(i)), beat.samples[i]};
}

// Waveform extremum with parabolic refinement when it is strict.
WavePoint refined_extremum(const Beat& beat, std::size_t i) {
  const auto& y = beat.samples;
  WavePoint p = point_at(beat, i);
  if (strict_max(y, i) || strict_min(y, i)) {
    const auto v = parabolic_vertex(y[i - 1], y[i], y[i + 1]);
    p.time = beat.time_at(static_cast<double>(i) + v.offset);
    p.amplitude = v.value;
  }
  return p;
}

double interp(const std::vector<double>& y, double pos) {
  if (pos <= 0.0) return y.front();
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= y.size()) return y.back();
  const double frac = pos - static_cast<double>(lo);
  return y[lo] + frac * (y[lo + 1] - y[lo]);
}

struct Pick {
  std::size_t index;
  double offset;
  double value;
};

// Best interior local extremum of d within [lo, hi]; global extremum otherwise.
Pick pick_extremum(const std::vector<double>& d, std::size_t lo, std::size_t hi, bool want_max,
                   const char* name) {
  if (lo > hi || hi >= d.size())
    throw Error(ErrorCode::EmptyWindow, std::string("empty search window for point ") + name);
  const auto better = [&](double a, double b) { return want_max ? a > b : a < b; };
  bool found = false;
  std::size_t best = lo;
  for (std::size_t i = std::max<std::size_t>(lo, 1); i <= hi && i + 1 < d.size(); ++i) {
    const bool local = want_max ? (d[i] > d[i - 1] && d[i] >= d[i + 1]) : (d[i] < d[i - 1] && d[i] <= d[i + 1]);
    if (!local) continue;
    if (!found || better(d[i], d[best])) {
      best = i;
      found = true;
    }
  }
  if (found) {
    const auto v = parabolic_vertex(d[best - 1], d[best], d[best + 1]);
    return {best, v.offset, v.value};
  }
  best = lo;
  for (std::size_t i = lo; i <= hi; ++i)
    if (better(d[i], d[best])) best = i;
  return {best, 0.0, d[best]};
}

AccelPoint to_accel(const Beat& beat, const Pick& p) {
  return {p.index, beat.time_at(static_cast<double>(p.index) + p.offset), p.value};
}

}  // namespace

FiducialSet detect_fiducials(const Beat& beat, const FiducialOptions& opts) {
  const auto& y = beat.samples;
  const std::size_t m = y.size();
  if (m < std::max<std::size_t>(opts.min_samples, 3))
    throw Error(ErrorCode::TooFewSamples, "beat has " + std::to_string(m) + " samples");

  std::size_t esp = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (y[i] > y[esp]) esp = i;
  if (esp == 0 || esp + 1 >= m) throw Error(ErrorCode::DegenerateBeat, "systolic peak at the beat boundary");
  std::size_t rv = esp + 1;
  for (std::size_t i = esp + 1; i < m; ++i)
    if (y[i] < y[rv]) rv = i;
  if (!(y[esp] > y[0] && y[esp] > y[rv]))
    throw Error(ErrorCode::DegenerateBeat, "systolic peak not above both valleys");

  FiducialSet f;
  f.LV = point_at(beat, 0);
  f.LV.time = beat.time_at(beat.start_offset);
  f.ESP = refined_extremum(beat, esp);
  f.RV = point_at(beat, rv);
  if (rv + 1 == m)
    f.RV.time = beat.time_at(static_cast<double>(rv) + beat.end_offset);
  else
    f.RV = refined_extremum(beat, rv);

  const auto d2 = beat_second_derivative(beat, opts.smooth_second_derivative);

  std::size_t dp = 0;
  for (std::size_t i = esp + 1; i < rv; ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1] && (y[i - 1] - 2.0 * y[i] + y[i + 1]) < 0.0) {
      dp = i;
      break;
    }
  }
  f.has_second_peak = dp != 0;
  if (f.has_second_peak) {
    f.DP = refined_extremum(beat, dp);
    std::size_t dn = esp;
    for (std::size_t i = esp; i <= dp; ++i)
      if (y[i] < y[dn]) dn = i;
    f.DN = refined_extremum(beat, dn);

    f.IP = f.DN;
    for (std::size_t i = dn; i >= esp + 2; --i) {
      const double a = d2[i - 1], b = d2[i];
      if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
        const double pos = static_cast<double>(i - 1) + a / (a - b);
        f.IP.index = static_cast<std::size_t>(std::lround(pos));
        f.IP.time = beat.time_at(pos);
        f.IP.amplitude = interp(y, pos);
        break;
      }
    }
  } else {
    if (rv < esp + 2) throw Error(ErrorCode::DegenerateBeat, "no samples between ESP and RV");
    const auto p = pick_extremum(d2, esp + 1, rv - 1, false, "DP");
    const double pos = static_cast<double>(p.index) + p.offset;
    f.DP = {p.index, beat.time_at(pos), interp(y, pos)};
    f.DN = f.DP;
    f.IP = f.DN;
  }

  const auto d1 = beat_first_derivative(beat);
  std::size_t ms = 0;
  for (std::size_t i = 1; i <= esp; ++i)
    if (d1[i] > d1[ms]) ms = i;
  f.max_slope = point_at(beat, ms);
  f.max_slope_value = d1[ms];
  return f;
}

FiducialSet detect_accel_points(const Beat& beat, const FiducialSet& fid, const FiducialOptions& opts) {
  const auto d2 = beat_second_derivative(beat, opts.smooth_second_derivative);
  const std::size_t esp = fid.ESP.index, rv = fid.RV.index;
  if (esp == 0 || rv <= esp + 1 || rv >= d2.size())
    throw Error(ErrorCode::EmptyWindow, "no room for acceleration points");

  FiducialSet f = fid;
  const auto a = pick_extremum(d2, 0, esp - 1, true, "A");
  std::size_t f_lo = esp + 1;
  while (f_lo < rv && d2[f_lo] < 0.0) ++f_lo;
  if (f_lo >= rv) f_lo = esp + 1;
  const auto pf = pick_extremum(d2, f_lo, rv - 1, false, "F");
  if (pf.index == 0) throw Error(ErrorCode::EmptyWindow, "empty search window for point E");
  const auto pe = pick_extremum(d2, esp + 1, pf.index - 1, true, "E");
  const auto pb = pick_extremum(d2, a.index, pe.index, false, "B");
  // G first: without a late diastolic wave the H minimum would sit next to F
  // and leave no room for G.
  const auto pg = pick_extremum(d2, pf.index + 1, rv - 1, true, "G");
  const auto ph = pick_extremum(d2, pg.index, rv - 1, false, "H");

  f.A = to_accel(beat, a);
  f.B = to_accel(beat, pb);
  f.E = to_accel(beat, pe);
  f.F = to_accel(beat, pf);
  f.G = to_accel(beat, pg);
  f.H = to_accel(beat, ph);
  f.accel_located = true;
  return f;
}

IspPoint intersect_lines(const Line& l1, const Line& l2) {
  const double ds = l1.slope - l2.slope;
  if (std::fabs(ds) < 1e-12) throw Error(ErrorCode::ParallelLines, "tangent and DP-RV lines are parallel");
  const double t = (l2.a0 - l1.a0 + l1.slope * l1.t0 - l2.slope * l2.t0) / ds;
  return {t, l1.at(t), true};
}

IspPoint construct_isp(const Beat& /*beat*/, const FiducialSet& fid) {
  const double span = fid.RV.time - fid.DP.time;
  if (std::fabs(span) < 1e-12) throw Error(ErrorCode::Precondition, "DP and RV coincide in time");
  const Line tangent{fid.max_slope.time, fid.max_slope.amplitude, fid.max_slope_value};
  const Line decay{fid.DP.time, fid.DP.amplitude, (fid.RV.amplitude - fid.DP.amplitude) / span};
  IspPoint p = intersect_lines(tangent, decay);
  p.in_range = p.time >= fid.LV.time && p.time <= fid.RV.time;
  return p;
}

FiducialSet locate_all(const Beat& beat, const FiducialOptions& opts) {
  FiducialSet f = detect_fiducials(beat, opts);
  try {
    f = detect_accel_points(beat, f, opts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyWindow) throw;
  }
  try {
    f.ISP = construct_isp(beat, f);
    f.isp_located = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParallelLines && e.code() != ErrorCode::Precondition) throw;
  }
  return f;
}

std::string fiducials_to_json(const std::vector<FiducialSet>& sets) {
  using nlohmann::json;
  const auto wp = [](const WavePoint& p) {
    return json{{"index", p.index}, {"time", p.time}, {"amplitude", p.amplitude}};
  };
  const auto ap = [](const AccelPoint& p) {
    return json{{"index", p.index}, {"time", p.time}, {"value", p.value}};
  };
  json arr = json::array();
  for (const auto& f : sets) {
    json j = {{"LV", wp(f.LV)}, {"ESP", wp(f.ESP)}, {"IP", wp(f.IP)}, {"DN", wp(f.DN)},
              {"DP", wp(f.DP)}, {"RV", wp(f.RV)}, {"has_second_peak", f.has_second_peak}};
    if (f.accel_located) {
      j["A"] = ap(f.A);
      j["B"] = ap(f.B);
      j["E"] = ap(f.E);
      j["F"] = ap(f.F);
      j["G"] = ap(f.G);
      j["H"] = ap(f.H);
    }
    j["accel_located"] = f.accel_located;
    if (f.isp_located)
      j["ISP"] = {{"time", f.ISP.time}, {"amplitude", f.ISP.amplitude}, {"in_range", f.ISP.in_range}};
    j["isp_located"] = f.isp_located;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace pulsewave
