#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pulsewave/agreement.hpp"
#include "pulsewave/beats.hpp"
#include "pulsewave/features.hpp"
#include "pulsewave/fiducials.hpp"
#include "pulsewave/models.hpp"
#include "pulsewave/signal.hpp"
#include "pulsewave/spectral.hpp"
#include "pulsewave/synth.hpp"

namespace pulsewave::cli {

/// Flat dotted-key configuration. Every key has a default; unknown keys are
/// rejected. Values are stored as text and parsed on access.
class Config {
 public:
  struct Entry {
    std::string value;
    std::string comment;
  };

  // Pipeline defaults.
  static Config defaults();
  // Synthetic batch defaults (the `synth` spec file).
  static Config synth_defaults();

  // Throws Error(Config) for unknown keys.
  void set(const std::string& key, const std::string& value);
  // Parses `key = value` lines; `#` starts a comment. Throws Error(Config).
  void merge_text(const std::string& text, const std::string& source);
  void merge_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;

  // Resolved configuration with comments, one `key = value` per line.
  std::string dump() const;

 private:
  void add(const std::string& key, const std::string& value, const std::string& comment);
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

struct PipelineSettings {
  std::size_t window = 100;
  SegmentationOptions segmentation;
  double max_hr_bpm = 150.0;
  ValidityCriteria validity;
  FiducialOptions fiducials;
  FeatureOptions features;
  SpectrumOptions spectrum;
};

struct AnalysisSettings {
  bool log_transform = true;
  bool normalize = true;
  bool iqr = true;
  bool prune = true;
  double hr_reference = 75.0;
  double height_reference = 170.0;
  double iqr_multiplier = 1.5;
  double alpha = 0.05;
  std::size_t n_tests = 28;
  double collinearity_threshold = 0.7;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> targets;
  std::vector<ModelKind> models;
  bool waveform_only = false;
  std::size_t cv_k = 10;
  std::uint64_t cv_seed = 42;
  ForestConfig forest;
  AamiThresholds aami;

  double bonferroni() const { return alpha / static_cast<double>(n_tests); }
};

PipelineSettings pipeline_settings(const Config& c);
AnalysisSettings analysis_settings(const Config& c);
SynthBatchSpec synth_spec(const Config& c);

// `c:w:a,c:w:a,...`
std::vector<GaussianLobe> parse_lobes(const std::string& text);

}  // namespace pulsewave::cli
