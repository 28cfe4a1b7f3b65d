#include "pulsewave/features.hpp"

#include <cmath>
#include <limits>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

namespace {
constexpr double kTiny = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

int feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i)
    if (kFeatureNames[i] == name) return static_cast<int>(i);
  return -1;
}

int beat_feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kBeatFeatureNames.size(); ++i)
    if (kBeatFeatureNames[i] == name) return static_cast<int>(i);
  return -1;
}

std::optional<double> BeatFeatures::get(std::string_view name) const {
  const int i = beat_feature_index(name);
  if (i < 0) throw Error(ErrorCode::Precondition, "unknown beat feature " + std::string(name));
  return values[static_cast<std::size_t>(i)];
}

void BeatFeatures::set(std::string_view name, std::optional<double> v) {
  const int i = beat_feature_index(name);
  if (i < 0) throw Error(ErrorCode::Precondition, "unknown beat feature " + std::string(name));
  values[static_cast<std::size_t>(i)] = v;
}

double SampleFeatures::get(std::string_view name) const {
  const int i = feature_index(name);
  if (i < 0) throw Error(ErrorCode::Precondition, "unknown feature " + std::string(name));
  return values[static_cast<std::size_t>(i)];
}

TimeAltitude time_altitude_features(const FiducialSet& fid, double height_cm, std::optional<double> ba,
                                    const FeatureOptions& opts) {
  TimeAltitude out;
  const double base = fid.LV.amplitude;
  const double esph = fid.ESP.amplitude - base;
  const double dph = fid.DP.amplitude - base;

  const double ppt = fid.DP.time - fid.ESP.time;
  if (ppt > kTiny) {
    out.PPT = ppt;
    out.SI = height_cm / ppt;
  } else {
    out.exclusions.emplace_back("PPT: zero denominator");
  }
  if (esph > kTiny)
    out.RI = dph / esph;
  else
    out.exclusions.emplace_back("RI: zero ESP height");

  if (fid.isp_located && (fid.ISP.in_range || !opts.reject_out_of_range_isp)) {
    const double isph = fid.ISP.amplitude - base;
    if (isph > kTiny)
      out.ERI = dph / isph;
    else
      out.exclusions.emplace_back("ERI: zero ISP height");
  } else {
    out.exclusions.emplace_back("ERI: no usable ISP");
  }
  if (ba) out.ARI = *ba <= 1.0 ? out.ERI : out.RI;

  const double ct = fid.ESP.time - fid.LV.time;
  const double nt = fid.DN.time - fid.LV.time;
  const double dt = fid.RV.time - fid.ESP.time;
  if (ct > kTiny) out.CT = ct;
  if (nt > kTiny) out.NT = nt;
  if (dt > kTiny) out.DT = dt;
  if (out.CT && out.NT)
    out.RCA = ct / nt;
  else
    out.exclusions.emplace_back("RCA: zero denominator");
  if (out.NT && out.CT && out.DT)
    out.RDA = nt / (ct + dt);
  else
    out.exclusions.emplace_back("RDA: zero denominator");
  return out;
}

double polygon_area(std::span<const Vec2> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::fabs(acc);
}

double area_features(const FiducialSet& fid) {
  const Vec2 lv{fid.LV.time, fid.LV.amplitude}, esp{fid.ESP.time, fid.ESP.amplitude},
      dn{fid.DN.time, fid.DN.amplitude}, dnb{fid.DN.time, fid.LV.amplitude},
      ip{fid.IP.time, fid.IP.amplitude}, rv{fid.RV.time, fid.RV.amplitude};
  const std::array<Vec2, 4> systole{lv, esp, dn, dnb};
  const std::array<Vec2, 3> diastole{ip, dn, rv};
  const double a1 = polygon_area(systole);
  if (a1 <= kTiny) throw Error(ErrorCode::ZeroArea, "systolic polygon has no area");
  const double a2 = polygon_area(diastole);
  if (a2 <= kTiny) throw Error(ErrorCode::ZeroArea, "diastolic triangle has no area");
  return a2 / a1;
}

AccelFeatures accel_features(const FiducialSet& fid) {
  const double a = fid.A.value;
  if (!fid.accel_located || std::fabs(a) <= kTiny)
    throw Error(ErrorCode::ZeroDenominator, "second derivative at A is zero");
  AccelFeatures out;
  out.BA = std::fabs(fid.B.value / a);
  out.EA = fid.E.value / a;
  out.FA = std::fabs(fid.F.value / a);
  out.GA = fid.G.value / a;
  out.HA = std::fabs(fid.H.value / a);
  out.AI = out.BA - out.EA;
  return out;
}

BeatFeatures compute_beat_features(const FiducialSet& fid, double height_cm, double hr_bpm,
                                   const FeatureOptions& opts) {
  BeatFeatures bf;
  bf.hr_bpm = hr_bpm;
  std::optional<double> ba;
  try {
    const auto acc = accel_features(fid);
    ba = acc.BA;
    bf.set("BA", acc.BA);
    bf.set("EA", acc.EA);
    bf.set("FA", acc.FA);
    bf.set("GA", acc.GA);
    bf.set("HA", acc.HA);
    bf.set("AI", acc.AI);
  } catch (const Error& e) {
    bf.exclusions.emplace_back(std::string("accel: ") + e.what());
  }
  const auto ta = time_altitude_features(fid, height_cm, ba, opts);
  bf.set("PPT", ta.PPT);
  bf.set("RI", ta.RI);
  bf.set("ERI", ta.ERI);
  bf.set("ARI", ta.ARI);
  bf.set("SI", ta.SI);
  bf.set("CT", ta.CT);
  bf.set("NT", ta.NT);
  bf.set("DT", ta.DT);
  bf.set("RCA", ta.RCA);
  bf.set("RDA", ta.RDA);
  bf.exclusions.insert(bf.exclusions.end(), ta.exclusions.begin(), ta.exclusions.end());
  try {
    bf.set("IPA", area_features(fid));
  } catch (const Error& e) {
    bf.exclusions.emplace_back(std::string("IPA: ") + e.what());
  }
  return bf;
}

std::optional<double> median_field(std::span<const BeatFeatures> per_beat, std::string_view name) {
  const int idx = beat_feature_index(name);
  if (idx < 0) throw Error(ErrorCode::Precondition, "unknown beat feature " + std::string(name));
  std::vector<double> vals;
  for (const auto& b : per_beat)
    if (const auto& v = b.values[static_cast<std::size_t>(idx)]; v && std::isfinite(*v)) vals.push_back(*v);
  if (vals.empty()) return std::nullopt;
  return median(vals);
}

SampleFeatures aggregate_sample(std::span<const BeatFeatures> per_beat, const SpectralBands& spectral,
                                const SampleMeta& meta) {
  SampleFeatures s;
  s.meta = meta;
  s.values.fill(kNaN);
  std::size_t used = 0;
  for (const auto& b : per_beat) {
    bool any = false;
    for (const auto& v : b.values) any = any || v.has_value();
    if (any) ++used;
  }
  if (used == 0) throw Error(ErrorCode::NoValidBeats, "no beat contributed a waveform feature");
  s.n_beats_used = used;

  for (std::size_t f = 0; f < kBeatFeatureNames.size(); ++f) {
    std::vector<double> vals;
    for (const auto& b : per_beat)
      if (b.values[f] && std::isfinite(*b.values[f])) vals.push_back(*b.values[f]);
    s.field_counts[f] = vals.size();
    if (!vals.empty()) s.values[static_cast<std::size_t>(feature_index(kBeatFeatureNames[f]))] = median(vals);
  }
  std::vector<double> hrs;
  for (const auto& b : per_beat)
    if (b.hr_bpm > 0.0) hrs.push_back(b.hr_bpm);
  s.values[static_cast<std::size_t>(feature_index("HR"))] = hrs.empty() ? kNaN : median(hrs);
  s.values[static_cast<std::size_t>(feature_index("Height"))] = meta.height_cm;
  s.values[static_cast<std::size_t>(feature_index("Age"))] = meta.age;
  for (std::size_t i = 0; i < 6; ++i)
    s.values[static_cast<std::size_t>(feature_index(kSpectralFeatureNames[i]))] = spectral.psd[i];
  s.values[static_cast<std::size_t>(feature_index("NHA"))] = spectral.nha;
  s.values[static_cast<std::size_t>(feature_index("IHAR"))] = spectral.ihar;
  return s;
}

std::string features_csv_header(bool with_targets) {
  std::string h = "sample_id,subject_id";
  for (auto n : kFeatureNames) {
    h += ',';
    h += n;
  }
  if (with_targets) h += ",SBP,DBP";
  h += '\n';
  return h;
}

std::string features_csv_row(const SampleFeatures& s, bool with_targets) {
  std::string r = s.meta.sample_id + "," + s.meta.subject_id;
  for (double v : s.values) {
    r += ',';
    r += io::format_double(v);
  }
  if (with_targets) {
    r += ',';
    r += s.meta.sbp ? io::format_double(*s.meta.sbp) : "NA";
    r += ',';
    r += s.meta.dbp ? io::format_double(*s.meta.dbp) : "NA";
  }
  r += '\n';
  return r;
}

}  // namespace pulsewave
