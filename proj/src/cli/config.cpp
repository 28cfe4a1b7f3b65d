#include "pulsewave/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    auto t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

void Config::add(const std::string& key, const std::string& value, const std::string& comment) {
  entries_[key] = {value, comment};
  order_.push_back(key);
}

Config Config::defaults() {
  Config c;
  c.add("signal.window", "100", "moving z-score window, samples");
  c.add("beats.derivative_percentile", "70", "onset candidates exceed this percentile of the first derivative");
  c.add("beats.refractory_s", "0.4", "minimum onset spacing, s (one beat at the HR cutoff)");
  c.add("beats.max_hr_bpm", "150", "beats faster than this are dropped");
  c.add("validity.min_points_per_beat", "15", "median samples per beat must reach this");
  c.add("validity.min_duration_s", "100", "recording length must reach this, s");
  c.add("validity.min_sqi", "0.8", "signal quality must exceed this (strict)");
  c.add("fiducials.smooth_second_derivative", "true", "3-point moving average on the second difference");
  c.add("features.reject_out_of_range_isp", "false", "drop ERI when the ISP falls outside [LV, RV]");
  c.add("spectral.hann", "false", "Hann window before the periodogram");
  c.add("analyze.log_transform", "true", "natural log of the skewed acceleration and spectral features");
  c.add("analyze.normalize", "true", "residualize on HR then height");
  c.add("analyze.iqr", "true", "single-pass IQR outlier removal");
  c.add("analyze.prune", "true", "collinearity pruning before model fitting");
  c.add("analyze.targets", "SBP,DBP,PP", "targets analyzed when present");
  c.add("analyze.models", "mlr,stepwise,rf", "model families fitted and cross-validated");
  c.add("analyze.feature_set", "all", "all: 28 features; waveform: the 25 waveform features");
  c.add("normalize.hr_reference_bpm", "75", "HR reference value");
  c.add("normalize.height_reference_cm", "170", "height reference value");
  c.add("iqr.multiplier", "1.5", "fence distance in IQRs");
  c.add("stats.alpha", "0.05", "family-wise significance level");
  c.add("stats.n_tests", "28", "comparisons per target for the Bonferroni correction");
  c.add("collinearity.threshold", "0.7", "pairs with |r| above this are pruned");
  c.add("collinearity.overrides", "RI:ARI", "drop:keep pairs applied after pruning");
  c.add("cv.k", "10", "cross-validation folds");
  c.add("cv.seed", "42", "fold assignment seed");
  c.add("rf.n_trees", "500", "trees per forest");
  c.add("rf.mtry", "0", "features tried per split; 0 means max(1, p/3)");
  c.add("rf.min_leaf", "5", "minimum rows per leaf");
  c.add("rf.max_depth", "0", "0 means unlimited");
  c.add("rf.bootstrap", "true", "resample rows with replacement per tree");
  c.add("rf.seed", "7", "forest seed; tree i uses a seed derived from (seed, i)");
  c.add("aami.limits_mmHg", "5,10,15", "absolute-error limits");
  c.add("aami.required_pct", "50,75,90", "share of errors required within each limit");
  return c;
}

Config Config::synth_defaults() {
  Config c;
  const auto t = default_template();
  std::string lobes;
  for (const auto& l : t.lobes) {
    if (!lobes.empty()) lobes += ",";
    lobes += io::format_double(l.center) + ":" + io::format_double(l.width) + ":" + io::format_double(l.amplitude);
  }
  const SessionSpec s;
  c.add("sessions", "10", "number of sessions");
  c.add("seed", "1", "batch seed; session i uses a seed derived from (seed, i)");
  c.add("duration_s", io::format_double(s.duration_s), "session length, s");
  c.add("fps", io::format_double(s.fps), "frame rate");
  c.add("hr_mean", io::format_double(s.hr_mean), "mean HR, bpm");
  c.add("hr_sd", io::format_double(s.hr_sd), "beat-to-beat HR SD, bpm");
  c.add("hr_mean_jitter", "0", "relative SD of the session mean HR across sessions");
  c.add("drift_amplitude", io::format_double(s.drift_amplitude), "baseline drift amplitude");
  c.add("drift_frequency", io::format_double(s.drift_frequency), "baseline drift frequency, Hz");
  c.add("noise_sd", io::format_double(s.noise_sd), "additive channel noise SD");
  c.add("dc", io::format_double(s.dc), "channel level before gains");
  c.add("pulse_amplitude", io::format_double(s.pulse_amplitude), "pulse amplitude before gains");
  c.add("phase", io::format_double(s.phase), "first beat start, periods relative to t = 0");
  c.add("template.period", io::format_double(t.period), "template period, s");
  c.add("template.lobes", lobes, "center:width:amplitude per Gaussian lobe, s");
  c.add("amplitude_jitter", "0", "relative SD of later-lobe amplitudes across sessions");
  c.add("time_jitter", "0", "relative SD of lobe centers and widths across sessions");
  c.add("autoexposure.enabled", "false", "apply the exposure and clipping model");
  c.add("autoexposure.gain", "1", "fixed gain");
  c.add("autoexposure.setpoint", "128", "target channel mean");
  c.add("autoexposure.rate", "0", "per-frame adaptation exponent");
  c.add("autoexposure.smoothing", "0.05", "EMA weight of the tracked mean");
  c.add("autoexposure.warm_start", "false", "start exposure at setpoint / initial mean");
  c.add("autoexposure.warm_start_s", "1", "initial window for the warm start, s");
  c.add("sbp.c0", "120", "planted SBP intercept, mmHg");
  c.add("sbp.c1", "0", "planted SBP slope on the true RI");
  c.add("sbp.noise_sd", "0", "planted SBP noise SD, mmHg");
  c.add("dbp.c0", "80", "planted DBP intercept, mmHg");
  c.add("dbp.c1", "0", "planted DBP slope on the true RI");
  c.add("dbp.noise_sd", "0", "planted DBP noise SD, mmHg");
  c.add("height_mean", "170", "subject height mean, cm");
  c.add("height_sd", "0", "subject height SD, cm");
  c.add("age_min", "20", "subject age lower bound");
  c.add("age_max", "70", "subject age upper bound");
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
  it->second.value = value;
}

void Config::merge_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Config, source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  merge_text(text, path.string());
}

const std::string& Config::str(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
  return it->second.value;
}

double Config::num(const std::string& key) const {
  const auto& v = str(key);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error(ErrorCode::Config, key + ": '" + v + "' is not a number");
  return out;
}

long long Config::integer(const std::string& key) const {
  const auto& v = str(key);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw Error(ErrorCode::Config, key + ": '" + v + "' is not an integer");
  return out;
}

bool Config::flag(const std::string& key) const {
  const auto& v = str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::Config, key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> Config::list(const std::string& key) const { return split(str(key), ','); }

std::string Config::dump() const {
  std::string out;
  for (const auto& k : order_) {
    const auto& e = entries_.at(k);
    out += k + " = " + e.value;
    if (!e.comment.empty()) out += "  # " + e.comment;
    out += '\n';
  }
  return out;
}

namespace {

std::size_t non_negative(const Config& c, const std::string& key) {
  const auto v = c.integer(key);
  if (v < 0) throw Error(ErrorCode::Config, key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::array<double, 3> triple(const Config& c, const std::string& key) {
  const auto parts = c.list(key);
  if (parts.size() != 3) throw Error(ErrorCode::Config, key + " needs three comma-separated values");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = io::parse_double(parts[i], key);
  return out;
}

}  // namespace

PipelineSettings pipeline_settings(const Config& c) {
  PipelineSettings s;
  s.window = non_negative(c, "signal.window");
  if (s.window < 2) throw Error(ErrorCode::Config, "signal.window must be at least 2");
  s.segmentation.percentile = c.num("beats.derivative_percentile") / 100.0;
  if (!(s.segmentation.percentile >= 0.0 && s.segmentation.percentile <= 1.0))
    throw Error(ErrorCode::Config, "beats.derivative_percentile must lie in [0, 100]");
  s.segmentation.refractory_s = c.num("beats.refractory_s");
  s.max_hr_bpm = c.num("beats.max_hr_bpm");
  s.validity.min_points_per_beat = c.num("validity.min_points_per_beat");
  s.validity.min_duration_s = c.num("validity.min_duration_s");
  s.validity.min_sqi = c.num("validity.min_sqi");
  s.fiducials.min_samples = static_cast<std::size_t>(std::max(3.0, std::ceil(s.validity.min_points_per_beat)));
  s.fiducials.smooth_second_derivative = c.flag("fiducials.smooth_second_derivative");
  s.features.reject_out_of_range_isp = c.flag("features.reject_out_of_range_isp");
  s.spectrum.hann = c.flag("spectral.hann");
  return s;
}

AnalysisSettings analysis_settings(const Config& c) {
  AnalysisSettings a;
  a.log_transform = c.flag("analyze.log_transform");
  a.normalize = c.flag("analyze.normalize");
  a.iqr = c.flag("analyze.iqr");
  a.prune = c.flag("analyze.prune");
  a.hr_reference = c.num("normalize.hr_reference_bpm");
  a.height_reference = c.num("normalize.height_reference_cm");
  a.iqr_multiplier = c.num("iqr.multiplier");
  a.alpha = c.num("stats.alpha");
  a.n_tests = non_negative(c, "stats.n_tests");
  if (a.n_tests == 0) throw Error(ErrorCode::Config, "stats.n_tests must be positive");
  a.collinearity_threshold = c.num("collinearity.threshold");
  for (const auto& pair : c.list("collinearity.overrides")) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::Config, "collinearity.overrides entries are drop:keep");
    a.overrides.emplace_back(trim(std::string_view(pair).substr(0, colon)), trim(std::string_view(pair).substr(colon + 1)));
  }
  a.targets = c.list("analyze.targets");
  for (const auto& t : a.targets)
    if (t != "SBP" && t != "DBP" && t != "PP") throw Error(ErrorCode::Config, "unknown target '" + t + "'");
  for (const auto& m : c.list("analyze.models")) {
    if (m == "mlr")
      a.models.push_back(ModelKind::Mlr);
    else if (m == "stepwise")
      a.models.push_back(ModelKind::Stepwise);
    else if (m == "rf")
      a.models.push_back(ModelKind::Forest);
    else
      throw Error(ErrorCode::Config, "unknown model '" + m + "'");
  }
  const auto& fs = c.str("analyze.feature_set");
  if (fs != "all" && fs != "waveform") throw Error(ErrorCode::Config, "analyze.feature_set is all or waveform");
  a.waveform_only = fs == "waveform";
  a.cv_k = non_negative(c, "cv.k");
  a.cv_seed = static_cast<std::uint64_t>(c.integer("cv.seed"));
  a.forest.n_trees = non_negative(c, "rf.n_trees");
  a.forest.mtry = non_negative(c, "rf.mtry");
  a.forest.min_leaf = std::max<std::size_t>(1, non_negative(c, "rf.min_leaf"));
  a.forest.max_depth = non_negative(c, "rf.max_depth");
  a.forest.bootstrap = c.flag("rf.bootstrap");
  a.forest.seed = static_cast<std::uint64_t>(c.integer("rf.seed"));
  a.aami.limits_mmHg = triple(c, "aami.limits_mmHg");
  a.aami.required_pct = triple(c, "aami.required_pct");
  return a;
}

std::vector<GaussianLobe> parse_lobes(const std::string& text) {
  std::vector<GaussianLobe> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw Error(ErrorCode::InvalidSpec, "lobe '" + item + "' is not center:width:amplitude");
    out.push_back({io::parse_double(parts[0], "template.lobes"), io::parse_double(parts[1], "template.lobes"),
                   io::parse_double(parts[2], "template.lobes")});
  }
  return out;
}

SynthBatchSpec synth_spec(const Config& c) {
  SynthBatchSpec s;
  try {
    const auto n = c.integer("sessions");
    if (n <= 0) throw Error(ErrorCode::InvalidSpec, "sessions must be positive");
    s.sessions = static_cast<std::size_t>(n);
    s.seed = static_cast<std::uint64_t>(c.integer("seed"));
    auto& ss = s.session;
    ss.duration_s = c.num("duration_s");
    ss.fps = c.num("fps");
    ss.hr_mean = c.num("hr_mean");
    ss.hr_sd = c.num("hr_sd");
    ss.drift_amplitude = c.num("drift_amplitude");
    ss.drift_frequency = c.num("drift_frequency");
    ss.noise_sd = c.num("noise_sd");
    ss.dc = c.num("dc");
    ss.pulse_amplitude = c.num("pulse_amplitude");
    ss.phase = c.num("phase");
    ss.tmpl.period = c.num("template.period");
    ss.tmpl.lobes = parse_lobes(c.str("template.lobes"));
    ss.autoexposure.enabled = c.flag("autoexposure.enabled");
    ss.autoexposure.gain = c.num("autoexposure.gain");
    ss.autoexposure.setpoint = c.num("autoexposure.setpoint");
    ss.autoexposure.rate = c.num("autoexposure.rate");
    ss.autoexposure.smoothing = c.num("autoexposure.smoothing");
    ss.autoexposure.warm_start = c.flag("autoexposure.warm_start");
    ss.autoexposure.warm_start_s = c.num("autoexposure.warm_start_s");
    s.hr_mean_jitter = c.num("hr_mean_jitter");
    s.amplitude_jitter = c.num("amplitude_jitter");
    s.time_jitter = c.num("time_jitter");
    s.sbp = {c.num("sbp.c0"), c.num("sbp.c1"), c.num("sbp.noise_sd")};
    s.dbp = {c.num("dbp.c0"), c.num("dbp.c1"), c.num("dbp.noise_sd")};
    s.height_mean = c.num("height_mean");
    s.height_sd = c.num("height_sd");
    s.age_min = c.num("age_min");
    s.age_max = c.num("age_max");
    s.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidSpec) throw;
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  return s;
}

}  // namespace pulsewave::cli
