#include "pulsewave/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "pulsewave/agreement.hpp"
#include "pulsewave/beats.hpp"
#include "pulsewave/cli/report.hpp"
#include "pulsewave/common.hpp"
#include "pulsewave/explain.hpp"
#include "pulsewave/io.hpp"
#include "pulsewave/models.hpp"
#include "pulsewave/signal.hpp"
#include "pulsewave/synth.hpp"

namespace pulsewave::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void apply_sets(Config& c, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "--set expects key=value, got '" + s + "'");
    c.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

int fail(std::ostream& err, const Error& e) {
  err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
  return e.code() == ErrorCode::Config ? kExitUsage : kExitFailed;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory " + p.string() + ": " + ec.message());
}

std::vector<fs::path> collect_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename() != "meta.csv")
          found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw Error(ErrorCode::Io, "input " + in.string() + " does not exist");
    }
  }
  return files;
}

std::optional<fs::path> find_meta(const ExtractOptions& o) {
  if (o.meta) return o.meta;
  for (const auto& in : o.inputs) {
    if (!fs::is_directory(in)) continue;
    for (const auto& cand : {in / "meta.csv", fs::absolute(in).parent_path() / "meta.csv"})
      if (fs::is_regular_file(cand)) return cand;
  }
  return std::nullopt;
}

json validity_json(const ValidityReport& v) {
  return {{"points_per_beat", num(v.points_per_beat)},
          {"duration_s", num(v.duration_s)},
          {"sqi", num(v.sqi)},
          {"is_valid", v.is_valid},
          {"reasons", v.reasons}};
}

json linear_json(const LinearModel& m) {
  json coefs = json::array();
  for (std::size_t i = 0; i < m.beta.size(); ++i)
    coefs.push_back({{"feature", m.names[i]},
                     {"beta", num(m.beta[i])},
                     {"beta_std", num(m.beta_std[i])},
                     {"se", num(m.se[i])},
                     {"t", num(m.t[i])},
                     {"p", num(m.p[i])}});
  return {{"intercept", num(m.intercept)}, {"intercept_p", num(m.intercept_p)}, {"coefficients", coefs},
          {"r2", num(m.r2)},               {"adj_r2", num(m.adj_r2)},           {"rss", num(m.rss)},
          {"aic", num(m.aic)},             {"n", m.n}};
}

json forest_json(const ForestModel& f) {
  std::size_t nodes = 0, leaves = 0;
  for (const auto& t : f.trees) {
    nodes += t.nodes.size();
    for (const auto& n : t.nodes) leaves += n.feature < 0;
  }
  return {{"n_trees", f.trees.size()},
          {"mtry", f.config.mtry},
          {"min_leaf", f.config.min_leaf},
          {"max_depth", f.config.max_depth},
          {"bootstrap", f.config.bootstrap},
          {"seed", f.config.seed},
          {"total_nodes", nodes},
          {"total_leaves", leaves}};
}

json cv_json(const CVResult& cv) {
  return {{"k", cv.k},          {"seed", cv.seed},           {"r2_pearson", num(cv.r2_pearson)},
          {"r2_cod", num(cv.r2_cod)}, {"mae", num(cv.mae)}, {"mean_error", num(cv.mean_error)},
          {"sd_error", num(cv.sd_error)}};
}

ModelKind parse_model(const std::string& m) {
  if (m == "mlr") return ModelKind::Mlr;
  if (m == "stepwise") return ModelKind::Stepwise;
  if (m == "rf") return ModelKind::Forest;
  throw Error(ErrorCode::Config, "unknown model '" + m + "' (mlr, stepwise, rf)");
}

std::vector<Attribution> attribute(const FittedModel& fit, const Eigen::MatrixXd& X) {
  std::vector<Attribution> out(static_cast<std::size_t>(X.rows()));
  const Eigen::RowVectorXd bg = X.colwise().mean();
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const Eigen::RowVectorXd x = X.row(r);
    out[static_cast<std::size_t>(r)] = fit.kind == ModelKind::Forest
                                           ? tree_shap(fit.forest, x, static_cast<std::size_t>(X.cols()))
                                           : linear_shap(fit.linear, x, bg);
  }
  return out;
}

// Skips a covariate step when the covariate is absent or constant.
FeatureTable normalize_step(const FeatureTable& t, const std::string& covariate, double reference,
                            const std::vector<std::string>& columns, json& log) {
  if (t.column_index(covariate) < 0) {
    log[covariate] = "skipped: column absent";
    return t;
  }
  try {
    auto out = normalize_covariate(t, covariate, reference, columns);
    log[covariate] = {{"reference", reference}};
    return out;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstantCovariate) throw;
    log[covariate] = "skipped: constant covariate";
    return t;
  }
}

bool is_constant(const std::vector<double>& col) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : col)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return !(hi > lo);
}

std::string file_tag(const std::string& target, ModelKind k) { return target + "_" + to_string(k); }

}  // namespace

Config resolve_config(const GlobalOptions& g) {
  auto c = Config::defaults();
  std::optional<fs::path> path = g.config;
  if (!path) {
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = fs::path(env);
  }
  if (path) c.merge_file(*path);
  apply_sets(c, g.sets);
  return c;
}

Config resolve_synth_config(const GlobalOptions& g, const std::optional<fs::path>& spec) {
  auto c = Config::synth_defaults();
  if (spec) c.merge_file(*spec);
  apply_sets(c, g.sets);
  return c;
}

std::map<std::string, SampleMeta> parse_meta_csv(const std::string& text) {
  const auto csv = io::parse_csv(text);
  const int id = csv.column("sample_id"), subj = csv.column("subject_id"), h = csv.column("height_cm"),
            age = csv.column("age"), sbp = csv.column("SBP"), dbp = csv.column("DBP");
  if (id < 0 || h < 0 || age < 0) throw Error(ErrorCode::Parse, "meta CSV needs sample_id, height_cm and age");
  std::map<std::string, SampleMeta> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string ctx = "meta:" + std::to_string(csv.lines[r]);
    SampleMeta m;
    m.sample_id = row[id];
    m.subject_id = subj >= 0 ? row[subj] : row[id];
    m.height_cm = io::parse_double(row[h], ctx);
    m.age = io::parse_double(row[age], ctx);
    if (sbp >= 0)
      if (const double v = io::parse_optional_double(row[sbp], ctx); std::isfinite(v)) m.sbp = v;
    if (dbp >= 0)
      if (const double v = io::parse_optional_double(row[dbp], ctx); std::isfinite(v)) m.dbp = v;
    if (!out.emplace(m.sample_id, m).second) throw Error(ErrorCode::Parse, ctx + ": duplicate sample_id " + m.sample_id);
  }
  return out;
}

ExtractResult extract_sample(const FrameSeries& frames, const SampleMeta& meta, const PipelineSettings& s) {
  ExtractResult r;
  r.sample_id = meta.sample_id;
  try {
    check_frames(frames);
    const auto signal = compose_signal(frames, s.window);
    const auto seg = segment_beats(signal, s.segmentation);
    const auto norm = normalize_amplitude(seg, signal);
    const auto beats = filter_hr(norm, s.max_hr_bpm);
    r.beats_detected = seg.beats.size();
    r.beats_hr_dropped = norm.beats.size() - beats.beats.size();
    for (const auto& b : beats.beats) {
      try {
        auto fid = locate_all(b, s.fiducials);
        auto bf = compute_beat_features(fid, meta.height_cm, b.hr_bpm, s.features);
        r.fiducials.push_back(std::move(fid));
        r.per_beat.push_back(std::move(bf));
      } catch (const Error& e) {
        ++r.beats_failed;
        ++r.beat_errors[to_string(e.code())];
      }
    }
    r.validity = validate_sample(signal, beats, estimate_sqi(beats), s.validity);
    if (!r.validity.is_valid) return r;

    std::vector<double> hrs;
    for (const auto& b : r.per_beat) hrs.push_back(b.hr_bpm);
    if (hrs.empty()) throw Error(ErrorCode::NoValidBeats, "no beat yielded fiducials");
    r.psd = power_spectrum(signal, s.spectrum);
    r.harmonics = segment_harmonics(*r.psd, median(hrs) / 60.0);
    const auto ipa = median_field(r.per_beat, "IPA");
    const bool ipa_ok = ipa && *ipa > 0.0;
    auto bands = psd_features(*r.psd, r.harmonics->edges, ipa_ok ? *ipa : 1.0);
    if (!ipa_ok) bands.ihar = kNaN;
    r.features = aggregate_sample(r.per_beat, bands, meta);
  } catch (const Error& e) {
    r.error = e.what();
    r.error_code = to_string(e.code());
  }
  return r;
}

int cmd_extract(const ExtractOptions& o, const GlobalOptions& g, std::ostream& err) {
  PipelineSettings settings;
  std::vector<fs::path> files;
  try {
    settings = pipeline_settings(resolve_config(g));
    files = collect_inputs(o.inputs);
  } catch (const Error& e) {
    return fail(err, e);
  }
  if (files.empty()) {
    err << "error: no input files\n";
    return kExitUsage;
  }
  std::optional<std::map<std::string, SampleMeta>> meta;
  std::optional<fs::path> meta_path;
  try {
    meta_path = find_meta(o);
    if (meta_path) meta = parse_meta_csv(io::read_file(*meta_path));
  } catch (const Error& e) {
    return fail(err, e);
  }

  std::vector<ExtractResult> results(files.size());
  parallel_for(files.size(), g.threads, [&](std::size_t i) {
    auto& r = results[i];
    const std::string id = files[i].stem().string();
    r.sample_id = id;
    r.source = files[i].string();
    SampleMeta m;
    m.sample_id = id;
    m.subject_id = id;
    m.height_cm = kNaN;
    m.age = kNaN;
    if (meta) {
      const auto it = meta->find(id);
      if (it == meta->end()) {
        r.error = "no metadata row for sample " + id;
        r.error_code = to_string(ErrorCode::Parse);
        return;
      }
      m = it->second;
    }
    try {
      const auto frames = load_frames(files[i]);
      r = extract_sample(frames, m, settings);
      r.source = files[i].string();
    } catch (const Error& e) {
      r.error = e.what();
      r.error_code = to_string(e.code());
    }
  });

  std::string csv = features_csv_header(true);
  std::size_t valid = 0, invalid = 0, failed = 0;
  json samples = json::array(), errors = json::array();
  for (const auto& r : results) {
    json js = {{"sample_id", r.sample_id}, {"source", r.source}};
    if (!r.error.empty()) {
      ++failed;
      errors.push_back({{"sample_id", r.sample_id}, {"source", r.source}, {"code", r.error_code}, {"message", r.error}});
      js["status"] = "error";
    } else {
      js["status"] = r.ok() ? "valid" : "invalid";
      if (r.ok()) {
        ++valid;
        csv += features_csv_row(*r.features, true);
      } else {
        ++invalid;
      }
    }
    js["validity"] = validity_json(r.validity);
    js["beats_detected"] = r.beats_detected;
    js["beats_hr_dropped"] = r.beats_hr_dropped;
    js["beats_located"] = r.fiducials.size();
    js["beats_failed"] = r.beats_failed;
    js["beat_errors"] = r.beat_errors;
    if (r.ok()) js["beats_used"] = r.features->n_beats_used;
    samples.push_back(js);
  }
  json report = {{"inputs", files.size()},
                 {"valid", valid},
                 {"invalid", invalid},
                 {"failed", failed},
                 {"meta", meta_path ? json(meta_path->string()) : json(nullptr)},
                 {"samples", samples},
                 {"errors", errors}};
  try {
    if (o.out.has_parent_path()) ensure_dir(o.out.parent_path());
    const fs::path report_path =
        o.report ? *o.report : o.out.parent_path() / (o.out.stem().string() + "_report.json");
    if (valid > 0) io::write_atomic(o.out, csv);
    io::write_atomic(report_path, dump(report));
    if (o.details) {
      ensure_dir(*o.details);
      for (const auto& r : results) {
        if (!r.error.empty()) continue;
        io::write_atomic(*o.details / (r.sample_id + "_fiducials.json"), fiducials_to_json(r.fiducials));
        if (r.psd) io::write_atomic(*o.details / (r.sample_id + "_psd.csv"), psd_to_csv(*r.psd));
        if (r.harmonics) io::write_atomic(*o.details / (r.sample_id + "_bands.json"), band_edges_to_json(*r.harmonics));
      }
    }
  } catch (const Error& e) {
    return fail(err, e);
  }
  err << "extract: " << files.size() << " inputs, " << valid << " valid, " << invalid << " invalid, " << failed
      << " failed\n";
  if (valid == 0) return kExitFailed;
  if (failed > 0 && o.strict) return kExitPartial;
  return kExitOk;
}

Prepared prepare_analysis(const FeatureTable& input, const AnalysisSettings& s) {
  for (const auto& t : s.targets)
    if (!input.has_target(t)) throw Error(ErrorCode::MissingTarget, "target " + t + " is missing from the features file");
  const auto wave = waveform_columns();
  std::vector<std::string> cols;
  for (const auto& c : input.columns)
    if (!s.waveform_only || std::find(wave.begin(), wave.end(), c) != wave.end()) cols.push_back(c);

  json pre;
  pre["rows_input"] = input.rows();
  pre["feature_set"] = s.waveform_only ? "waveform" : "all";
  FeatureTable t = input;

  if (s.log_transform) {
    std::vector<std::string> logc;
    for (const auto& c : default_log_columns())
      if (t.column_index(c) >= 0) logc.push_back(c);
    auto res = log_transform(t, logc);
    t = std::move(res.table);
    json flagged = json::array();
    for (const auto& f : res.flagged)
      flagged.push_back({{"sample_id", t.sample_ids[f.row]}, {"column", f.column}, {"value", num(f.value)}});
    pre["log_transform"] = {{"columns", logc}, {"non_positive", flagged}};
  }

  if (s.normalize) {
    json log;
    t = normalize_step(t, "HR", s.hr_reference, wave, log);
    std::vector<std::string> hcols;
    for (const auto& c : wave)
      if (c != "SI") hcols.push_back(c);
    t = normalize_step(t, "Height", s.height_reference, hcols, log);
    pre["normalize"] = log;
  }

  if (s.iqr) {
    auto res = iqr_filter(t, cols, s.iqr_multiplier);
    t = std::move(res.table);
    json removed = json::array();
    for (const auto& r : res.removed) removed.push_back({{"sample_id", r.sample_id}, {"columns", r.columns}});
    json fences;
    for (const auto& [name, f] : res.fences)
      fences[name] = {{"q1", num(f.q1)}, {"q3", num(f.q3)}, {"lo", num(f.lo)}, {"hi", num(f.hi)}};
    pre["iqr"] = {{"multiplier", s.iqr_multiplier}, {"removed", removed}, {"fences", fences}};
  }
  pre["rows_after_filtering"] = t.rows();

  std::vector<std::string> constant, usable;
  for (const auto& c : cols) (is_constant(t.column(c)) ? constant : usable).push_back(c);
  pre["constant_columns"] = constant;

  Prepared p;
  p.feature_columns = usable;
  pre["bonferroni_alpha"] = s.bonferroni();
  json targets;
  for (const auto& target : s.targets) {
    PreparedTarget pt;
    pt.target = target;
    std::vector<std::size_t> rows;
    const auto& y = t.target(target);
    for (std::size_t r = 0; r < t.rows(); ++r)
      if (std::isfinite(y[r])) rows.push_back(r);
    pt.table = t.select_rows(rows);
    pt.correlations = correlations(pt.table, target, usable, s.bonferroni());
    if (s.prune) {
      pt.prune = prune_collinear(pt.table, target, usable, s.collinearity_threshold, s.overrides);
    } else {
      pt.prune.retained = usable;
    }
    pt.columns = pt.prune.retained;

    std::vector<std::size_t> complete;
    for (std::size_t r = 0; r < pt.table.rows(); ++r) {
      bool ok = true;
      for (const auto& c : pt.columns) ok = ok && std::isfinite(pt.table.column(c)[r]);
      if (ok) complete.push_back(r);
    }
    if (complete.size() != pt.table.rows()) pt.table = pt.table.select_rows(complete);
    const auto n = static_cast<Eigen::Index>(pt.table.rows());
    pt.X.resize(n, static_cast<Eigen::Index>(pt.columns.size()));
    pt.y.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      pt.y(r) = pt.table.target(target)[ru];
      for (std::size_t c = 0; c < pt.columns.size(); ++c)
        pt.X(r, static_cast<Eigen::Index>(c)) = pt.table.column(pt.columns[c])[ru];
    }
    json dropped = json::array();
    for (const auto& d : pt.prune.dropped)
      dropped.push_back({{"column", d.column}, {"partner", d.partner}, {"pair_r", num(d.pair_r)}, {"reason", d.reason}});
    targets[target] = {{"rows", pt.table.rows()}, {"retained", pt.columns}, {"dropped", dropped}};
    p.targets.push_back(std::move(pt));
  }
  pre["targets"] = targets;
  p.cleaned = std::move(t);
  p.preprocessing_json = dump(pre);
  return p;
}

int cmd_analyze(const AnalyzeOptions& o, const GlobalOptions& g, std::ostream& err) {
  AnalysisSettings s;
  try {
    s = analysis_settings(resolve_config(g));
    if (!o.targets.empty()) s.targets = o.targets;
    for (const auto& t : s.targets)
      if (t != "SBP" && t != "DBP" && t != "PP") throw Error(ErrorCode::Config, "unknown target '" + t + "'");
  } catch (const Error& e) {
    return fail(err, e);
  }
  s.forest.threads = g.threads;
  try {
    const auto table = read_features_csv(o.features);
    const auto p = prepare_analysis(table, s);
    ensure_dir(o.out);
    if (g.plots) ensure_dir(o.out / "plots");
    io::write_atomic(o.out / "cleaned_features.csv", features_table_to_csv(p.cleaned));
    io::write_atomic(o.out / "preprocessing.json", p.preprocessing_json);

    std::string corr = "target,feature,r,p,n,alpha,significant\n";
    for (const auto& pt : p.targets)
      for (const auto& e : pt.correlations.entries)
        corr += pt.target + "," + e.feature + "," + io::format_double(e.r) + "," + io::format_double(e.p) + "," +
                std::to_string(e.n) + "," + io::format_double(pt.correlations.alpha) + "," +
                (e.significant ? "true" : "false") + "\n";
    io::write_atomic(o.out / "correlations.csv", corr);

    json models;
    for (const auto& pt : p.targets) {
      json jt = {{"n", pt.X.rows()}, {"columns", pt.columns}};
      json jm;
      for (const auto kind : s.models) {
        ModelSpec spec;
        spec.kind = kind;
        spec.forest = s.forest;
        const auto tag = file_tag(pt.target, kind);
        const auto cv = cross_validate(spec, pt.X, pt.y, pt.columns, s.cv_k, s.cv_seed, g.threads);
        const auto fit = fit_model(spec, pt.X, pt.y, pt.columns, g.threads);
        const auto attrs = attribute(fit, pt.X);
        const auto imp = global_importance(attrs, pt.columns);
        const auto ba = bland_altman(cv.predicted, cv.reference, s.aami);

        json entry = {{"cv", cv_json(cv)}};
        entry["fit"] = kind == ModelKind::Forest ? forest_json(fit.forest) : linear_json(fit.linear);
        entry["aami_pass"] = ba.aami.pass;
        jm[to_string(kind)] = entry;

        io::write_atomic(o.out / ("predictions_" + tag + ".csv"), predictions_csv(pt.table.sample_ids, cv));
        io::write_atomic(o.out / ("shap_" + tag + ".csv"),
                         attributions_to_csv(attrs, pt.table.sample_ids, pt.columns, pt.X));
        io::write_atomic(o.out / ("importance_" + tag + ".json"), importance_to_json(imp));
        io::write_atomic(o.out / ("agreement_" + tag + ".json"), agreement_to_json(ba, s.aami));
        io::write_atomic(o.out / ("bland_altman_" + tag + ".csv"), agreement_plot_csv(ba));
        if (g.plots) {
          io::write_atomic(o.out / "plots" / ("scatter_" + tag + ".svg"),
                           scatter_svg(cv.predicted, cv.reference, pt.target + " " + to_string(kind) + " (CV)"));
          io::write_atomic(o.out / "plots" / ("bland_altman_" + tag + ".svg"),
                           agreement_svg(ba, pt.target + " " + to_string(kind)));
          io::write_atomic(o.out / "plots" / ("importance_" + tag + ".svg"),
                           importance_svg(imp, pt.target + " " + to_string(kind) + " mean |SHAP|"));
        }
      }
      jt["models"] = jm;
      models[pt.target] = jt;
    }
    json top = {{"cv_k", s.cv_k}, {"cv_seed", s.cv_seed}, {"targets", models}};
    io::write_atomic(o.out / "models.json", dump(top));
    err << "analyze: " << p.targets.size() << " targets, " << s.models.size() << " models, outputs in "
        << o.out.string() << "\n";
  } catch (const Error& e) {
    return fail(err, e);
  }
  return kExitOk;
}

int cmd_explain(const ExplainOptions& o, const GlobalOptions& g, std::ostream& err) {
  AnalysisSettings s;
  ModelKind kind;
  try {
    s = analysis_settings(resolve_config(g));
    kind = parse_model(o.model);
    if (o.target != "SBP" && o.target != "DBP" && o.target != "PP")
      throw Error(ErrorCode::Config, "unknown target '" + o.target + "'");
  } catch (const Error& e) {
    return fail(err, e);
  }
  s.targets = {o.target};
  s.forest.threads = g.threads;
  try {
    const auto p = prepare_analysis(read_features_csv(o.features), s);
    const auto& pt = p.targets.front();
    ModelSpec spec;
    spec.kind = kind;
    spec.forest = s.forest;
    const auto fit = fit_model(spec, pt.X, pt.y, pt.columns, g.threads);
    const auto attrs = attribute(fit, pt.X);
    const auto imp = global_importance(attrs, pt.columns);
    const auto tag = file_tag(pt.target, kind);
    ensure_dir(o.out);
    io::write_atomic(o.out / ("shap_" + tag + ".csv"), attributions_to_csv(attrs, pt.table.sample_ids, pt.columns, pt.X));
    io::write_atomic(o.out / ("importance_" + tag + ".json"), importance_to_json(imp));
    if (g.plots) {
      ensure_dir(o.out / "plots");
      io::write_atomic(o.out / "plots" / ("importance_" + tag + ".svg"),
                       importance_svg(imp, pt.target + " " + to_string(kind) + " mean |SHAP|"));
    }
    err << "explain: " << attrs.size() << " samples, " << pt.columns.size() << " features\n";
  } catch (const Error& e) {
    return fail(err, e);
  }
  return kExitOk;
}

int cmd_agreement(const AgreementOptions& o, const GlobalOptions& g, std::ostream& err) {
  AnalysisSettings s;
  try {
    s = analysis_settings(resolve_config(g));
  } catch (const Error& e) {
    return fail(err, e);
  }
  try {
    const auto csv = io::read_csv(o.input);
    const int ip = csv.column("predicted"), ir = csv.column("reference");
    if (ip < 0 || ir < 0) throw Error(ErrorCode::Parse, o.input.string() + ": needs predicted and reference columns");
    std::vector<double> pred, ref;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const std::string ctx = o.input.filename().string() + ":" + std::to_string(csv.lines[r]);
      pred.push_back(io::parse_double(csv.rows[r][static_cast<std::size_t>(ip)], ctx));
      ref.push_back(io::parse_double(csv.rows[r][static_cast<std::size_t>(ir)], ctx));
    }
    const auto rep = bland_altman(pred, ref, s.aami);
    if (o.out.has_parent_path()) ensure_dir(o.out.parent_path());
    io::write_atomic(o.out, agreement_to_json(rep, s.aami));
    if (o.plot_csv) io::write_atomic(*o.plot_csv, agreement_plot_csv(rep));
    if (o.svg) io::write_atomic(*o.svg, agreement_svg(rep, "Bland-Altman"));
    err << "agreement: n = " << rep.n << ", AAMI " << (rep.aami.pass ? "pass" : "fail") << "\n";
  } catch (const Error& e) {
    return fail(err, e);
  }
  return kExitOk;
}

int cmd_synth(const SynthOptions& o, const GlobalOptions& g, std::ostream& err) {
  SynthBatchSpec spec;
  Config cfg = Config::synth_defaults();
  try {
    cfg = resolve_synth_config(g, o.spec);
    spec = synth_spec(cfg);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitUsage;
  }
  std::error_code ec;
  if (fs::exists(o.out) && !(fs::is_directory(o.out) && fs::is_empty(o.out, ec)) && !g.force) {
    err << "error: " << o.out.string() << " already exists; use --force to overwrite\n";
    return kExitUsage;
  }
  try {
    const auto sessions = generate_batch(spec, g.threads);
    ensure_dir(o.out / "frames");
    std::vector<std::string> files(sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) files[i] = "frames/" + sessions[i].id + ".csv";
    parallel_for(sessions.size(), g.threads,
                 [&](std::size_t i) { io::write_atomic(o.out / files[i], frames_to_csv(sessions[i].frames)); });
    io::write_atomic(o.out / "labels.json", labels_to_json(sessions, files));
    io::write_atomic(o.out / "meta.csv", meta_to_csv(sessions));
    io::write_atomic(o.out / "spec_resolved.txt", cfg.dump());
    err << "synth: " << sessions.size() << " sessions written to " << o.out.string() << "\n";
  } catch (const Error& e) {
    return fail(err, e);
  }
  return kExitOk;
}

int cmd_config_dump(const GlobalOptions& g, bool synth, std::ostream& out, std::ostream& err) {
  try {
    if (synth) {
      out << resolve_synth_config(g, std::nullopt).dump();
      return kExitOk;
    }
    const auto c = resolve_config(g);
    const auto s = analysis_settings(c);
    pipeline_settings(c);
    out << c.dump();
    out << "# derived: stats.bonferroni_alpha = " << io::format_double(s.bonferroni())
        << "  (stats.alpha / stats.n_tests)\n";
  } catch (const Error& e) {
    return fail(err, e);
  }
  return kExitOk;
}

}  // namespace pulsewave::cli
