#include "pulsewave/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

void BeatTemplate::validate() const {
  if (!(period > 0.0)) throw Error(ErrorCode::InvalidTemplate, "template period must be positive");
  if (lobes.empty()) throw Error(ErrorCode::InvalidTemplate, "template needs at least one lobe");
  for (const auto& l : lobes) {
    if (!(l.amplitude > 0.0)) throw Error(ErrorCode::InvalidTemplate, "lobe amplitudes must be positive");
    if (!(l.width > 0.0)) throw Error(ErrorCode::InvalidTemplate, "lobe widths must be positive");
    if (!(l.center > 0.0 && l.center < period))
      throw Error(ErrorCode::InvalidTemplate, "lobe centers must lie inside the period");
  }
}

BeatTemplate BeatTemplate::scaled(double new_period) const {
  BeatTemplate out = *this;
  const double k = new_period / period;
  for (auto& l : out.lobes) {
    l.center *= k;
    l.width *= k;
  }
  out.period = new_period;
  return out;
}

BeatTemplate BeatTemplate::reflected() const {
  BeatTemplate out = *this;
  for (auto& l : out.lobes) l.center = period - l.center;
  return out;
}

BeatTemplate default_template() {
  return {{{0.25, 0.07, 1.0}, {0.55, 0.10, 0.45}}, 1.0};
}

BeatTemplate three_lobe_template() {
  return {{{0.25, 0.07, 1.0}, {0.45, 0.08, 0.5}, {0.65, 0.10, 0.3}}, 1.0};
}

AnalyticSignal::AnalyticSignal(std::vector<GaussianLobe> lobes) : lobes_(std::move(lobes)) {
  std::sort(lobes_.begin(), lobes_.end(), [](const auto& a, const auto& b) { return a.center < b.center; });
  if (lobes_.empty()) return;
  min_width_ = max_width_ = lobes_.front().width;
  for (const auto& l : lobes_) {
    min_width_ = std::min(min_width_, l.width);
    max_width_ = std::max(max_width_, l.width);
  }
}

double AnalyticSignal::eval(double t, int order) const {
  if (lobes_.empty()) return 0.0;
  // Lobes beyond 12 widths contribute below 1e-31 of their amplitude.
  const double reach = 12.0 * max_width_;
  auto it = std::lower_bound(lobes_.begin(), lobes_.end(), t - reach,
                             [](const GaussianLobe& l, double v) { return l.center < v; });
  double acc = 0.0;
  for (; it != lobes_.end() && it->center <= t + reach; ++it) {
    const double u = (t - it->center) / it->width;
    const double g = it->amplitude * std::exp(-0.5 * u * u);
    const double w = it->width;
    switch (order) {
      case 0: acc += g; break;
      case 1: acc += -u * g / w; break;
      case 2: acc += (u * u - 1.0) * g / (w * w); break;
      case 3: acc += -(u * u * u - 3.0 * u) * g / (w * w * w); break;
      case 4: acc += (u * u * u * u - 6.0 * u * u + 3.0) * g / (w * w * w * w); break;
      default: throw Error(ErrorCode::Precondition, "derivative order above 4");
    }
  }
  return acc;
}

std::vector<double> analytic_roots(const AnalyticSignal& f, int order, double a, double b) {
  std::vector<double> roots;
  if (!(b > a)) return roots;
  const double step = std::max(f.min_width() / 32.0, 1e-6);
  const auto n = static_cast<std::size_t>(std::ceil((b - a) / step));
  double t0 = a, g0 = f.eval(a, order);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t1 = i == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    const double g1 = f.eval(t1, order);
    if (g0 == 0.0) {
      if (roots.empty() || roots.back() != t0) roots.push_back(t0);
    } else if ((g0 < 0.0) != (g1 < 0.0) && g1 != 0.0) {
      double lo = t0, hi = t1, glo = g0;
      for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = f.eval(mid, order);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    t0 = t1;
    g0 = g1;
  }
  if (g0 == 0.0 && (roots.empty() || roots.back() != t0)) roots.push_back(t0);
  return roots;
}

namespace {

AnalyticExtremum extremum_impl(const AnalyticSignal& f, int order, double a, double b, bool want_max,
                               bool prefer_interior) {
  const auto better = [&](double x, double y) { return want_max ? x > y : x < y; };
  AnalyticExtremum best;
  bool found = false;
  for (double r : analytic_roots(f, order + 1, a, b)) {
    if (r <= a || r >= b) continue;
    const double curv = f.eval(r, order + 2);
    if (want_max ? !(curv < 0.0) : !(curv > 0.0)) continue;
    const double v = f.eval(r, order);
    if (!found || better(v, best.value)) {
      best = {r, v, true};
      found = true;
    }
  }
  const double va = f.eval(a, order), vb = f.eval(b, order);
  const AnalyticExtremum end = better(vb, va) ? AnalyticExtremum{b, vb, false} : AnalyticExtremum{a, va, false};
  if (!found) return end;
  if (!prefer_interior && better(end.value, best.value)) return end;
  return best;
}

AnalyticExtremum global_extremum(const AnalyticSignal& f, int order, double a, double b, bool want_max) {
  return extremum_impl(f, order, a, b, want_max, false);
}

WavePoint wave_at(const AnalyticSignal& f, double t) { return {0, t, f.eval(t)}; }
AccelPoint accel_at(const AnalyticExtremum& e) { return {0, e.t, e.value}; }

}  // namespace

AnalyticExtremum analytic_extremum(const AnalyticSignal& f, int order, double a, double b, bool want_max) {
  return extremum_impl(f, order, a, b, want_max, true);
}

FiducialSet analytic_fiducials(const AnalyticSignal& f, double t_lv, double t_end) {
  FiducialSet fid;
  fid.LV = wave_at(f, t_lv);
  const double t_esp = global_extremum(f, 0, t_lv, t_end, true).t;
  fid.ESP = wave_at(f, t_esp);
  const double t_rv = global_extremum(f, 0, t_esp, t_end, false).t;
  fid.RV = wave_at(f, t_rv);

  // Roots within kSep of an endpoint are the endpoint itself.
  constexpr double kSep = 1e-9;
  double t_dp = -1.0;
  for (double r : analytic_roots(f, 1, t_esp, t_rv)) {
    if (r > t_esp + kSep && r < t_rv - kSep && f.eval(r, 2) < 0.0) {
      t_dp = r;
      break;
    }
  }
  fid.has_second_peak = t_dp > 0.0;
  if (fid.has_second_peak) {
    fid.DP = wave_at(f, t_dp);
    const double t_dn = global_extremum(f, 0, t_esp, t_dp, false).t;
    fid.DN = wave_at(f, t_dn);
    fid.IP = fid.DN;
    const auto infl = analytic_roots(f, 2, t_esp, t_dn);
    for (auto it = infl.rbegin(); it != infl.rend(); ++it) {
      if (*it > t_esp + kSep && *it < t_dn - kSep) {
        fid.IP = wave_at(f, *it);
        break;
      }
    }
  } else {
    const auto p = analytic_extremum(f, 2, t_esp, t_rv, false);
    fid.DP = wave_at(f, p.t);
    fid.DN = fid.DP;
    fid.IP = fid.DP;
  }

  const auto a = analytic_extremum(f, 2, t_lv, t_esp, true);
  double f_lo = t_esp;
  for (double r : analytic_roots(f, 2, t_esp, t_rv)) {
    if (r > t_esp + kSep) {
      f_lo = r;
      break;
    }
  }
  const auto pf = analytic_extremum(f, 2, f_lo, t_rv, false);
  const auto pe = analytic_extremum(f, 2, t_esp, pf.t, true);
  const auto pb = analytic_extremum(f, 2, a.t, pe.t, false);
  const auto pg = analytic_extremum(f, 2, pf.t, t_rv, true);
  const auto ph = analytic_extremum(f, 2, pg.t, t_rv, false);
  fid.A = accel_at(a);
  fid.B = accel_at(pb);
  fid.E = accel_at(pe);
  fid.F = accel_at(pf);
  fid.G = accel_at(pg);
  fid.H = accel_at(ph);
  fid.accel_located = true;

  const auto ms = analytic_extremum(f, 1, t_lv, t_esp, true);
  fid.max_slope = wave_at(f, ms.t);
  fid.max_slope_value = ms.value;
  try {
    fid.ISP = construct_isp(Beat{}, fid);
    fid.isp_located = true;
  } catch (const Error&) {
    fid.isp_located = false;
  }
  return fid;
}

SampledBeat generate_beat(const BeatTemplate& tmpl, double fs) {
  tmpl.validate();
  if (!(fs > 0.0)) throw Error(ErrorCode::InvalidTemplate, "sample rate must be positive");
  const AnalyticSignal f(tmpl.lobes);
  SampledBeat out;
  const auto n = static_cast<std::size_t>(std::floor(tmpl.period * fs + 1e-9)) + 1;
  out.beat.dt = 1.0 / fs;
  out.beat.t_start = 0.0;
  out.beat.start_idx = 0;
  out.beat.end_idx = n - 1;
  out.beat.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.beat.samples[i] = f.eval(static_cast<double>(i) / fs);
  out.beat.hr_bpm = 60.0 / tmpl.period;
  const auto& y = out.beat.samples;
  std::size_t peak = 1;
  for (std::size_t i = 2; i + 1 < n; ++i)
    if (y[i + 1] - y[i - 1] > y[peak + 1] - y[peak - 1]) peak = i;
  out.beat.peak_idx = peak;
  out.truth = analytic_fiducials(f, 0.0, static_cast<double>(n - 1) / fs);
  return out;
}

double channel_ceiling() { return std::nextafter(256.0, 0.0); }

FrameSeries apply_autoexposure(const FrameSeries& frames, const AutoexposureParams& p) {
  FrameSeries out = frames;
  const double ceil = channel_ceiling();
  std::vector<double>* chans[3] = {&out.r, &out.g, &out.b};
  for (auto* ch : chans) {
    auto& x = *ch;
    if (x.empty()) continue;
    double e = 1.0;
    if (p.warm_start) {
      std::size_t m = 0;
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size() && frames.t[i] - frames.t[0] < p.warm_start_s; ++i, ++m) acc += x[i];
      const double mean = m > 0 ? acc / static_cast<double>(m) : x[0];
      if (mean > 0.0) e = p.setpoint / (p.gain * mean);
    }
    double tracked = std::clamp(p.gain * e * x[0], 0.0, ceil);
    for (double& v : x) {
      const double y = std::clamp(p.gain * e * v, 0.0, ceil);
      v = y;
      if (p.rate != 0.0) {
        tracked += p.smoothing * (y - tracked);
        e *= std::pow(p.setpoint / std::max(tracked, 1e-9), p.rate);
      }
    }
  }
  return out;
}

void SessionSpec::validate() const {
  if (!(fps >= 15.0)) throw Error(ErrorCode::InvalidSpec, "fps must be at least 15");
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidSpec, "duration must be positive");
  if (!(hr_mean >= 20.0 && hr_mean <= 250.0)) throw Error(ErrorCode::InvalidSpec, "hr_mean must lie in [20, 250] bpm");
  if (!(hr_sd >= 0.0)) throw Error(ErrorCode::InvalidSpec, "hr_sd must be non-negative");
  if (!(noise_sd >= 0.0)) throw Error(ErrorCode::InvalidSpec, "noise_sd must be non-negative");
  if (!(pulse_amplitude >= 0.0)) throw Error(ErrorCode::InvalidSpec, "pulse amplitude must be non-negative");
  try {
    tmpl.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("template: ") + e.what());
  }
}

Session generate_session(const SessionSpec& spec, double height_cm) {
  spec.validate();
  Session s;
  s.spec = spec;
  s.height_cm = height_cm;
  Rng hr_rng(derive_seed(spec.seed, 1));
  Rng noise_rng(derive_seed(spec.seed, 2));

  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fps));
  const double t_last = static_cast<double>(n - 1) / spec.fps;
  const auto draw_period = [&] {
    double hr = spec.hr_mean;
    if (spec.hr_sd > 0.0) hr += spec.hr_sd * hr_rng.normal();
    return 60.0 / std::clamp(hr, 20.0, 250.0);
  };

  std::vector<double> starts, periods;
  double start = 0.0, period = draw_period();
  start = spec.phase * period;
  std::vector<GaussianLobe> lobes;
  while (start < t_last + 2.0 * period) {
    starts.push_back(start);
    periods.push_back(period);
    const double k = period / spec.tmpl.period;
    for (const auto& l : spec.tmpl.lobes) lobes.push_back({start + l.center * k, l.width * k, l.amplitude});
    start += period;
    period = draw_period();
  }
  s.pulse = AnalyticSignal(lobes);

  s.frames.nominal_fps = spec.fps;
  s.frames.t.resize(n);
  s.frames.r.resize(n);
  s.frames.g.resize(n);
  s.frames.b.resize(n);
  const double ceil = channel_ceiling();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.fps;
    s.frames.t[i] = t;
    const double base = spec.dc + spec.pulse_amplitude * s.pulse.eval(t) +
                        spec.drift_amplitude * std::sin(2.0 * std::numbers::pi * spec.drift_frequency * t);
    double* out[3] = {&s.frames.r[i], &s.frames.g[i], &s.frames.b[i]};
    for (int c = 0; c < 3; ++c) {
      double v = kChannelGains[c] * base;
      if (spec.noise_sd > 0.0) v += spec.noise_sd * noise_rng.normal();
      *out[c] = std::clamp(v, 0.0, ceil);
    }
  }
  if (spec.autoexposure.enabled) s.frames = apply_autoexposure(s.frames, spec.autoexposure);

  // Truth beats run foot to foot; feet are the minima between systolic peaks.
  std::vector<double> esp(starts.size()), feet(starts.size(), 0.0), onset(starts.size(), 0.0);
  for (std::size_t k = 0; k < starts.size(); ++k) esp[k] = global_extremum(s.pulse, 0, starts[k], starts[k] + periods[k], true).t;
  for (std::size_t k = 1; k < starts.size(); ++k) {
    feet[k] = global_extremum(s.pulse, 0, esp[k - 1], esp[k], false).t;
    onset[k] = analytic_extremum(s.pulse, 1, feet[k], esp[k], true).t;
  }
  const double dt = 1.0 / spec.fps;
  for (std::size_t k = 1; k + 1 < starts.size(); ++k) {
    // The next onset must fall before the last sample so its peak has a successor.
    if (feet[k] < 2.0 * dt || onset[k + 1] > t_last - dt) continue;
    TruthBeat tb;
    tb.t_start = feet[k];
    tb.t_end = feet[k + 1];
    tb.hr_bpm = 60.0 / (tb.t_end - tb.t_start);
    tb.fiducials = analytic_fiducials(s.pulse, tb.t_start, tb.t_end);
    tb.features = compute_beat_features(tb.fiducials, height_cm, tb.hr_bpm);
    s.beats.push_back(std::move(tb));
  }
  s.planted_beats = s.beats.size();

  for (std::size_t f = 0; f < kBeatFeatureNames.size(); ++f) {
    std::vector<double> vals;
    for (const auto& b : s.beats)
      if (b.features.values[f]) vals.push_back(*b.features.values[f]);
    if (!vals.empty()) s.features_true[f] = median(vals);
  }
  s.ri_true = s.features_true[static_cast<std::size_t>(beat_feature_index("RI"))].value_or(
      std::numeric_limits<double>::quiet_NaN());
  return s;
}

void SynthBatchSpec::validate() const {
  if (sessions == 0) throw Error(ErrorCode::InvalidSpec, "sessions must be positive");
  if (amplitude_jitter < 0.0 || time_jitter < 0.0 || hr_mean_jitter < 0.0 || height_sd < 0.0)
    throw Error(ErrorCode::InvalidSpec, "jitter and spread parameters must be non-negative");
  if (age_max < age_min) throw Error(ErrorCode::InvalidSpec, "age range is empty");
  session.validate();
}

std::vector<Session> generate_batch(const SynthBatchSpec& spec, unsigned threads) {
  spec.validate();
  std::vector<Session> out(spec.sessions);
  parallel_for(spec.sessions, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(spec.seed, i);
    Rng rng(derive_seed(seed, 10));
    SessionSpec ss = spec.session;
    ss.seed = seed;
    auto& lobes = ss.tmpl.lobes;
    for (std::size_t j = 0; j < lobes.size(); ++j) {
      if (j > 0 && spec.amplitude_jitter > 0.0)
        lobes[j].amplitude *= std::max(0.05, 1.0 + spec.amplitude_jitter * rng.normal());
      if (spec.time_jitter > 0.0) {
        lobes[j].center *= std::clamp(1.0 + spec.time_jitter * rng.normal(), 0.5, 1.5);
        lobes[j].width *= std::clamp(1.0 + spec.time_jitter * rng.normal(), 0.5, 1.5);
        lobes[j].center = std::clamp(lobes[j].center, 0.02 * ss.tmpl.period, 0.98 * ss.tmpl.period);
      }
    }
    if (spec.hr_mean_jitter > 0.0) ss.hr_mean *= std::clamp(1.0 + spec.hr_mean_jitter * rng.normal(), 0.5, 1.5);
    const double height = spec.height_mean + spec.height_sd * rng.normal();
    const double age = rng.uniform(spec.age_min, spec.age_max);
    const double e_sbp = rng.normal();
    const double e_dbp = rng.normal();

    Session s = generate_session(ss, height);
    char id[32];
    std::snprintf(id, sizeof id, "s%04zu", i + 1);
    s.id = id;
    s.subject_id = id;
    s.age = age;
    s.sbp = spec.sbp.c0 + spec.sbp.c1 * s.ri_true + spec.sbp.noise_sd * e_sbp;
    s.dbp = spec.dbp.c0 + spec.dbp.c1 * s.ri_true + spec.dbp.noise_sd * e_dbp;
    out[i] = std::move(s);
  });
  return out;
}

std::string labels_to_json(const std::vector<Session>& sessions, const std::vector<std::string>& files) {
  using nlohmann::json;
  json arr = json::array();
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    json j;
    j["sample_id"] = s.id;
    j["subject_id"] = s.subject_id;
    if (i < files.size()) j["file"] = files[i];
    j["height_cm"] = s.height_cm;
    j["age"] = s.age;
    j["SBP"] = s.sbp;
    j["DBP"] = s.dbp;
    j["hr_mean_bpm"] = s.spec.hr_mean;
    j["fps"] = s.spec.fps;
    j["duration_s"] = s.spec.duration_s;
    j["seed"] = s.spec.seed;
    json lobes = json::array();
    for (const auto& l : s.spec.tmpl.lobes)
      lobes.push_back({{"center_s", l.center}, {"width_s", l.width}, {"amplitude", l.amplitude}});
    j["template"] = {{"period_s", s.spec.tmpl.period}, {"lobes", lobes}};
    j["planted_beats"] = s.planted_beats;
    j["RI_true"] = s.ri_true;
    json feats;
    for (std::size_t f = 0; f < kBeatFeatureNames.size(); ++f)
      feats[std::string(kBeatFeatureNames[f])] = s.features_true[f] ? json(*s.features_true[f]) : json(nullptr);
    j["features_true"] = feats;
    std::vector<FiducialSet> fids;
    for (const auto& b : s.beats) fids.push_back(b.fiducials);
    json fj = json::parse(fiducials_to_json(fids));
    json beats = json::array();
    for (std::size_t k = 0; k < s.beats.size(); ++k) {
      const auto& b = s.beats[k];
      json bf;
      for (std::size_t f = 0; f < kBeatFeatureNames.size(); ++f)
        bf[std::string(kBeatFeatureNames[f])] = b.features.values[f] ? json(*b.features.values[f]) : json(nullptr);
      beats.push_back({{"t_start", b.t_start}, {"t_end", b.t_end}, {"hr_bpm", b.hr_bpm}, {"fiducials", fj[k]},
                       {"features", bf}});
    }
    j["beats"] = beats;
    arr.push_back(std::move(j));
  }
  json root;
  root["sessions"] = arr;
  return root.dump(1) + "\n";
}

std::string meta_to_csv(const std::vector<Session>& sessions) {
  std::string out = "sample_id,subject_id,height_cm,age,SBP,DBP\n";
  for (const auto& s : sessions)
    out += s.id + "," + s.subject_id + "," + io::format_double(s.height_cm) + "," + io::format_double(s.age) + "," +
           io::format_double(s.sbp) + "," + io::format_double(s.dbp) + "\n";
  return out;
}

}  // namespace pulsewave
