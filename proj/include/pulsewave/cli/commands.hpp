#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pulsewave/cli/config.hpp"
#include "pulsewave/dataset.hpp"
#include "pulsewave/features.hpp"
#include "pulsewave/fiducials.hpp"
#include "pulsewave/spectral.hpp"

namespace pulsewave::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad arguments or configuration
inline constexpr int kExitFailed = 2;   // nothing produced, or a precondition failed
inline constexpr int kExitPartial = 3;  // some inputs failed (extract --strict)

inline constexpr const char* kConfigEnv = "PULSEWAVE_CONFIG";

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::vector<std::string> sets;  // key=value, applied last
  unsigned threads = 1;
  bool force = false;
  bool plots = false;
};

// defaults, then the config file (--config, else $PULSEWAVE_CONFIG), then --set.
Config resolve_config(const GlobalOptions& g);
Config resolve_synth_config(const GlobalOptions& g, const std::optional<std::filesystem::path>& spec);

// Per-sample metadata keyed by sample_id, from `sample_id,subject_id,height_cm,age[,SBP,DBP]`.
std::map<std::string, SampleMeta> parse_meta_csv(const std::string& text);

struct ExtractResult {
  std::string sample_id;
  std::string source;
  // File-level failure, e.g. a parse error; empty on success.
  std::string error;
  std::string error_code;
  ValidityReport validity;
  std::size_t beats_detected = 0;
  std::size_t beats_hr_dropped = 0;
  std::size_t beats_failed = 0;
  std::map<std::string, std::size_t> beat_errors;  // error code -> count
  std::vector<FiducialSet> fiducials;
  std::vector<BeatFeatures> per_beat;
  std::optional<HarmonicEdges> harmonics;
  std::optional<RawPsd> psd;
  std::optional<SampleFeatures> features;  // set for valid samples

  bool ok() const { return features.has_value(); }
};

// Pipeline for one recording; stage errors are captured in the result.
ExtractResult extract_sample(const FrameSeries& frames, const SampleMeta& meta, const PipelineSettings& settings);

struct ExtractOptions {
  std::vector<std::filesystem::path> inputs;  // frame CSVs or directories of them
  std::optional<std::filesystem::path> meta;
  std::filesystem::path out = "features.csv";
  std::optional<std::filesystem::path> report;    // default: <out stem>_report.json
  std::optional<std::filesystem::path> details;   // per-sample fiducials and PSD
  bool strict = false;                            // partial failure exits kExitPartial
};

struct PreparedTarget {
  std::string target;
  FeatureTable table;  // rows with a finite target
  CorrelationReport correlations;
  PruneResult prune;
  std::vector<std::string> columns;  // model inputs
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

struct Prepared {
  FeatureTable cleaned;
  std::vector<std::string> feature_columns;
  std::vector<PreparedTarget> targets;
  std::string preprocessing_json;
};

// The shared preprocessing of analyze and explain. Throws Error.
Prepared prepare_analysis(const FeatureTable& table, const AnalysisSettings& s);

struct AnalyzeOptions {
  std::filesystem::path features;
  std::filesystem::path out = "analysis";
  std::vector<std::string> targets;  // overrides analyze.targets when set
};

struct ExplainOptions {
  std::filesystem::path features;
  std::filesystem::path out = "explain";
  std::string target = "SBP";
  std::string model = "rf";
};

struct AgreementOptions {
  std::filesystem::path input;  // CSV with predicted,reference columns
  std::filesystem::path out = "agreement.json";
  std::optional<std::filesystem::path> plot_csv;
  std::optional<std::filesystem::path> svg;
};

struct SynthOptions {
  std::optional<std::filesystem::path> spec;
  std::filesystem::path out = "synth";
};

int cmd_extract(const ExtractOptions& o, const GlobalOptions& g, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& o, const GlobalOptions& g, std::ostream& err);
int cmd_explain(const ExplainOptions& o, const GlobalOptions& g, std::ostream& err);
int cmd_agreement(const AgreementOptions& o, const GlobalOptions& g, std::ostream& err);
int cmd_synth(const SynthOptions& o, const GlobalOptions& g, std::ostream& err);
int cmd_config_dump(const GlobalOptions& g, bool synth, std::ostream& out, std::ostream& err);

}  // namespace pulsewave::cli
