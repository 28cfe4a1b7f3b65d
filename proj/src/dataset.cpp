#include "pulsewave/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int FeatureTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<double>& FeatureTable::column(std::string_view name) const {
  const int i = column_index(name);
  if (i < 0) throw Error(ErrorCode::Precondition, "no column " + std::string(name));
  return data[static_cast<std::size_t>(i)];
}

std::vector<double>& FeatureTable::column(std::string_view name) {
  const int i = column_index(name);
  if (i < 0) throw Error(ErrorCode::Precondition, "no column " + std::string(name));
  return data[static_cast<std::size_t>(i)];
}

bool FeatureTable::has_target(std::string_view name) const {
  const auto it = targets.find(std::string(name));
  if (it == targets.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [](double v) { return std::isfinite(v); });
}

const std::vector<double>& FeatureTable::target(std::string_view name) const {
  const auto it = targets.find(std::string(name));
  if (it == targets.end()) throw Error(ErrorCode::MissingTarget, "no target column " + std::string(name));
  return it->second;
}

FeatureTable FeatureTable::select_rows(const std::vector<std::size_t>& rows) const {
  FeatureTable out;
  out.columns = columns;
  out.transformed = transformed;
  out.normalized = normalized;
  out.data.assign(columns.size(), {});
  for (std::size_t r : rows) {
    out.sample_ids.push_back(sample_ids[r]);
    out.subject_ids.push_back(subject_ids[r]);
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.data[c].reserve(rows.size());
    for (std::size_t r : rows) out.data[c].push_back(data[c][r]);
  }
  for (const auto& [name, vals] : targets) {
    auto& dst = out.targets[name];
    for (std::size_t r : rows) dst.push_back(vals[r]);
  }
  return out;
}

namespace {

void derive_pp(FeatureTable& t) {
  if (!t.targets.count("SBP") || !t.targets.count("DBP")) return;
  const auto& s = t.targets["SBP"];
  const auto& d = t.targets["DBP"];
  std::vector<double> pp(s.size(), kNaN);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::isfinite(s[i]) && std::isfinite(d[i])) pp[i] = s[i] - d[i];
  t.targets["PP"] = std::move(pp);
}

}  // namespace

FeatureTable table_from_samples(const std::vector<SampleFeatures>& samples) {
  FeatureTable t;
  t.columns.assign(kFeatureNames.begin(), kFeatureNames.end());
  t.data.assign(t.columns.size(), {});
  auto& sbp = t.targets["SBP"];
  auto& dbp = t.targets["DBP"];
  for (const auto& s : samples) {
    t.sample_ids.push_back(s.meta.sample_id);
    t.subject_ids.push_back(s.meta.subject_id);
    for (std::size_t c = 0; c < t.columns.size(); ++c) t.data[c].push_back(s.values[c]);
    sbp.push_back(s.meta.sbp.value_or(kNaN));
    dbp.push_back(s.meta.dbp.value_or(kNaN));
  }
  derive_pp(t);
  return t;
}

FeatureTable parse_features_csv(const std::string& text) {
  const auto csv = io::parse_csv(text);
  FeatureTable t;
  const int isample = csv.column("sample_id");
  const int isubject = csv.column("subject_id");
  if (isample < 0) throw Error(ErrorCode::Parse, "features CSV lacks sample_id");
  std::vector<int> idx;
  for (auto name : kFeatureNames) {
    const int i = csv.column(name);
    if (i < 0) continue;
    t.columns.emplace_back(name);
    idx.push_back(i);
  }
  if (t.columns.empty()) throw Error(ErrorCode::Parse, "features CSV has no feature columns");
  t.data.assign(t.columns.size(), {});
  std::map<std::string, int> target_cols;
  for (const char* name : {"SBP", "DBP"})
    if (const int i = csv.column(name); i >= 0) target_cols[name] = i;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string ctx = "features:" + std::to_string(csv.lines[r]);
    t.sample_ids.push_back(row[isample]);
    t.subject_ids.push_back(isubject >= 0 ? row[isubject] : row[isample]);
    for (std::size_t c = 0; c < idx.size(); ++c)
      t.data[c].push_back(io::parse_optional_double(row[idx[c]], ctx));
    for (const auto& [name, i] : target_cols) t.targets[name].push_back(io::parse_optional_double(row[i], ctx));
  }
  derive_pp(t);
  return t;
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
  return parse_features_csv(io::read_file(path));
}

std::string features_table_to_csv(const FeatureTable& t) {
  std::string out = "sample_id,subject_id";
  for (const auto& c : t.columns) out += "," + c;
  const bool targets = t.targets.count("SBP") && t.targets.count("DBP");
  if (targets) out += ",SBP,DBP";
  out += '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out += t.sample_ids[r] + "," + t.subject_ids[r];
    for (const auto& col : t.data) out += "," + io::format_double(col[r]);
    if (targets) {
      out += "," + io::format_double(t.targets.at("SBP")[r]);
      out += "," + io::format_double(t.targets.at("DBP")[r]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> default_log_columns() {
  return {"BA", "EA", "FA", "GA", "HA", "PSD1", "PSD2", "PSD3", "PSD4", "PSD5", "PSD6", "NHA", "IHAR"};
}

std::vector<std::string> waveform_columns() {
  std::vector<std::string> out;
  for (auto n : kFeatureNames)
    if (n != "Height" && n != "HR" && n != "Age") out.emplace_back(n);
  return out;
}

LogTransformResult log_transform(const FeatureTable& table, const std::vector<std::string>& columns) {
  LogTransformResult res{table, {}};
  for (const auto& name : columns) {
    if (res.table.column_index(name) < 0) continue;
    auto& col = res.table.column(name);
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (std::isnan(col[r])) continue;
      if (col[r] > 0.0) {
        col[r] = std::log(col[r]);
      } else {
        res.flagged.push_back({r, name, col[r]});
        col[r] = kNaN;
      }
    }
    res.table.transformed.insert(name);
  }
  return res;
}

FeatureTable normalize_covariate(const FeatureTable& table, std::string_view covariate, double reference,
                                 const std::vector<std::string>& columns) {
  FeatureTable out = table;
  const auto& cov = table.column(covariate);
  for (const auto& name : columns) {
    if (name == covariate || out.column_index(name) < 0) continue;
    auto& col = out.column(name);
    double n = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (!std::isfinite(col[r]) || !std::isfinite(cov[r])) continue;
      n += 1.0;
      mx += cov[r];
      my += col[r];
    }
    if (n < 2.0) continue;
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (!std::isfinite(col[r]) || !std::isfinite(cov[r])) continue;
      sxx += (cov[r] - mx) * (cov[r] - mx);
      sxy += (cov[r] - mx) * (col[r] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::ConstantCovariate, "covariate " + std::string(covariate) + " is constant");
    const double slope = sxy / sxx;
    for (std::size_t r = 0; r < col.size(); ++r)
      if (std::isfinite(col[r]) && std::isfinite(cov[r])) col[r] += slope * (reference - cov[r]);
    out.normalized.insert(name);
  }
  return out;
}

FeatureTable normalize_features(const FeatureTable& table, double hr_reference, double height_reference) {
  const auto wave = waveform_columns();
  auto t = normalize_covariate(table, "HR", hr_reference, wave);
  std::vector<std::string> height_cols;
  for (const auto& c : wave)
    if (c != "SI") height_cols.push_back(c);
  return normalize_covariate(t, "Height", height_reference, height_cols);
}

IqrResult iqr_filter(const FeatureTable& table, const std::vector<std::string>& columns, double multiplier) {
  if (table.rows() < 4) throw Error(ErrorCode::TooFewRows, "IQR filtering needs at least 4 rows");
  IqrResult res;
  for (const auto& name : columns) {
    if (table.column_index(name) < 0) continue;
    std::vector<double> vals;
    for (double v : table.column(name))
      if (std::isfinite(v)) vals.push_back(v);
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    Fence f;
    f.q1 = percentile_sorted(vals, 0.25);
    f.q3 = percentile_sorted(vals, 0.75);
    const double iqr = f.q3 - f.q1;
    f.lo = f.q1 - multiplier * iqr;
    f.hi = f.q3 + multiplier * iqr;
    res.fences[name] = f;
  }
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    RemovedRow rr{r, table.sample_ids[r], {}};
    for (const auto& name : columns) {
      if (table.column_index(name) < 0) continue;
      const double v = table.column(name)[r];
      const auto it = res.fences.find(name);
      if (!std::isfinite(v) || it == res.fences.end() || v < it->second.lo || v > it->second.hi)
        rr.columns.push_back(name);
    }
    if (rr.columns.empty())
      keep.push_back(r);
    else
      res.removed.push_back(std::move(rr));
  }
  res.table = table.select_rows(keep);
  return res;
}

PearsonTest pearson_test(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      a.push_back(x[i]);
      b.push_back(y[i]);
    }
  }
  PearsonTest out;
  out.n = a.size();
  if (out.n < 3) throw Error(ErrorCode::InsufficientData, "fewer than 3 complete pairs");
  const double r = pearson(a, b);
  if (!std::isfinite(r)) return out;  // a constant side carries no linear association
  out.r = r;
  const double dof = static_cast<double>(out.n) - 2.0;
  const double denom = 1.0 - r * r;
  out.p = denom <= 0.0 ? 0.0 : t_two_sided_p(r * std::sqrt(dof / denom), dof);
  return out;
}

CorrelationReport correlations(const FeatureTable& table, std::string_view target,
                               const std::vector<std::string>& columns, double alpha) {
  if (!table.has_target(target)) throw Error(ErrorCode::MissingTarget, "target " + std::string(target) + " missing");
  CorrelationReport rep;
  rep.target = std::string(target);
  rep.alpha = alpha;
  const auto& y = table.target(target);
  for (const auto& name : columns) {
    if (table.column_index(name) < 0) continue;
    const auto t = pearson_test(table.column(name), y);
    rep.entries.push_back({name, t.r, t.p, t.n, t.p < alpha});
  }
  return rep;
}

PruneResult prune_collinear(const FeatureTable& table, std::string_view target,
                            const std::vector<std::string>& columns, double threshold,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<std::string> cols;
  for (const auto& c : columns)
    if (table.column_index(c) >= 0) cols.push_back(c);
  const std::size_t p = cols.size();
  const auto& y = table.target(target);

  const auto safe_r = [](const std::vector<double>& a, const std::vector<double>& b) {
    try {
      return std::fabs(pearson_test(a, b).r);
    } catch (const Error&) {
      return 0.0;
    }
  };
  std::vector<double> to_target(p);
  for (std::size_t i = 0; i < p; ++i) to_target[i] = safe_r(table.column(cols[i]), y);
  std::vector<std::vector<double>> r(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) r[i][j] = r[j][i] = safe_r(table.column(cols[i]), table.column(cols[j]));

  std::vector<bool> alive(p, true);
  PruneResult res;
  while (true) {
    double best = threshold;
    std::size_t bi = p, bj = p;
    for (std::size_t i = 0; i < p; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < p; ++j) {
        if (alive[j] && r[i][j] > best) {
          best = r[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == p) break;
    // Ties on the target keep the earlier column.
    const std::size_t drop = to_target[bj] <= to_target[bi] ? bj : bi;
    const std::size_t keep = drop == bi ? bj : bi;
    alive[drop] = false;
    res.dropped.push_back({cols[drop], cols[keep], best, "collinear"});
  }
  for (const auto& [drop, keep] : overrides) {
    const auto di = std::find(cols.begin(), cols.end(), drop);
    const auto ki = std::find(cols.begin(), cols.end(), keep);
    if (di == cols.end() || ki == cols.end()) continue;
    const auto d = static_cast<std::size_t>(di - cols.begin());
    const auto k = static_cast<std::size_t>(ki - cols.begin());
    if (alive[d] && alive[k]) {
      alive[d] = false;
      res.dropped.push_back({drop, keep, r[d][k], "override"});
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    if (alive[i]) res.retained.push_back(cols[i]);
  return res;
}

}  // namespace pulsewave
