#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pulsewave/features.hpp"

namespace pulsewave {

/// Column-major table of per-sample features. Targets SBP, DBP and the
/// derived PP = SBP - DBP are kept apart from the feature columns; NaN
/// marks a missing cell.
struct FeatureTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> subject_ids;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[column][row]
  std::map<std::string, std::vector<double>> targets;
  std::set<std::string> transformed;
  std::set<std::string> normalized;

  std::size_t rows() const { return sample_ids.size(); }
  int column_index(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const;
  std::vector<double>& column(std::string_view name);
  bool has_target(std::string_view name) const;
  const std::vector<double>& target(std::string_view name) const;
  FeatureTable select_rows(const std::vector<std::size_t>& rows) const;
};

FeatureTable table_from_samples(const std::vector<SampleFeatures>& samples);
FeatureTable parse_features_csv(const std::string& text);
FeatureTable read_features_csv(const std::filesystem::path& path);
// Same schema as the extract output; `retained` limits the feature columns written.
std::string features_table_to_csv(const FeatureTable& table);

// Columns log-transformed by default (right-skewed acceleration and spectral features).
std::vector<std::string> default_log_columns();
// The 25 waveform features, i.e. everything except Height, HR and Age.
std::vector<std::string> waveform_columns();

struct FlaggedCell {
  std::size_t row;
  std::string column;
  double value;
};

struct LogTransformResult {
  FeatureTable table;
  std::vector<FlaggedCell> flagged;  // non-positive inputs, set to NaN
};

LogTransformResult log_transform(const FeatureTable& table, const std::vector<std::string>& columns);

/// Residualizes each listed column on `covariate` by least squares and
/// re-centres it at `reference`: x + b * (reference - covariate).
/// Throws Error(ConstantCovariate).
FeatureTable normalize_covariate(const FeatureTable& table, std::string_view covariate, double reference,
                                 const std::vector<std::string>& columns);

// HR first, then height; SI is left out of the height step.
FeatureTable normalize_features(const FeatureTable& table, double hr_reference = 75.0,
                                double height_reference = 170.0);

struct RemovedRow {
  std::size_t row;
  std::string sample_id;
  std::vector<std::string> columns;  // offending columns ("missing" cells included)
};

struct Fence {
  double q1 = 0.0, q3 = 0.0, lo = 0.0, hi = 0.0;
};

struct IqrResult {
  FeatureTable table;
  std::vector<RemovedRow> removed;
  std::map<std::string, Fence> fences;
};

/// One pass: fences [Q1 - k IQR, Q3 + k IQR] per column from the full table;
/// a row goes if any listed column is outside its fences or missing.
/// Throws Error(TooFewRows) below 4 rows.
IqrResult iqr_filter(const FeatureTable& table, const std::vector<std::string>& columns,
                     double multiplier = 1.5);

struct CorrelationEntry {
  std::string feature;
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  bool significant = false;
};

struct CorrelationReport {
  std::string target;
  double alpha = 0.0;
  std::vector<CorrelationEntry> entries;
};

// Bonferroni threshold over n_tests comparisons.
inline double bonferroni_alpha(double alpha, std::size_t n_tests) { return alpha / static_cast<double>(n_tests); }

struct PearsonTest {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};
// Pearson r over pairwise-complete rows, two-sided p from t with n - 2 dof.
PearsonTest pearson_test(const std::vector<double>& x, const std::vector<double>& y);

/// Throws Error(InsufficientData) when a pair has fewer than 3 complete rows.
CorrelationReport correlations(const FeatureTable& table, std::string_view target,
                               const std::vector<std::string>& columns, double alpha);

struct PruneDrop {
  std::string column;
  std::string partner;
  double pair_r = 0.0;
  std::string reason;
};

struct PruneResult {
  std::vector<std::string> retained;
  std::vector<PruneDrop> dropped;
};

/// Repeatedly takes the retained pair with the largest |r| above the
/// threshold and drops the member less correlated with the target. Then
/// applies (drop, keep) overrides: `drop` goes if `keep` is still retained.
PruneResult prune_collinear(const FeatureTable& table, std::string_view target,
                            const std::vector<std::string>& columns, double threshold = 0.7,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {{"RI", "ARI"}});

}  // namespace pulsewave
