#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pulsewave/fiducials.hpp"
#include "pulsewave/spectral.hpp"

namespace pulsewave {

// Per-beat waveform features, in feature-table order.
inline constexpr std::array<std::string_view, 17> kBeatFeatureNames = {
    "SI", "RI", "ERI", "ARI", "PPT", "AI", "CT", "NT", "DT",
    "IPA", "RCA", "RDA", "BA", "EA", "FA", "GA", "HA"};
inline constexpr std::array<std::string_view, 8> kSpectralFeatureNames = {
    "PSD1", "PSD2", "PSD3", "PSD4", "PSD5", "PSD6", "NHA", "IHAR"};
// The full 28-column feature vector.
inline constexpr std::array<std::string_view, 28> kFeatureNames = {
    "Height", "HR", "Age", "SI", "RI", "ERI", "ARI", "PPT", "AI", "CT",
    "NT", "DT", "IPA", "RCA", "RDA", "BA", "EA", "FA", "GA", "HA",
    "PSD1", "PSD2", "PSD3", "PSD4", "PSD5", "PSD6", "NHA", "IHAR"};

// Index into kFeatureNames, or -1.
int feature_index(std::string_view name);
int beat_feature_index(std::string_view name);

struct BeatFeatures {
  std::array<std::optional<double>, kBeatFeatureNames.size()> values{};
  double hr_bpm = 0.0;
  std::vector<std::string> exclusions;  // "<field>: <reason>"

  std::optional<double> get(std::string_view name) const;
  void set(std::string_view name, std::optional<double> v);
};

struct TimeAltitude {
  std::optional<double> PPT, RI, ERI, ARI, SI, CT, NT, DT, RCA, RDA;
  std::vector<std::string> exclusions;
};

struct AccelFeatures {
  double BA = 0.0, EA = 0.0, FA = 0.0, GA = 0.0, HA = 0.0, AI = 0.0;
};

struct FeatureOptions {
  // Drop ERI (and ARI when it would use ERI) for beats whose ISP fell outside [LV, RV].
  bool reject_out_of_range_isp = false;
};

/// Time and altitude features. Heights are measured above LV. `ba` (the
/// post-absolute-value B/A ratio) selects ARI; without it ARI is absent.
/// Degenerate denominators exclude only the affected fields.
TimeAltitude time_altitude_features(const FiducialSet& fid, double height_cm, std::optional<double> ba,
                                    const FeatureOptions& opts = {});

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};
// Absolute shoelace area.
double polygon_area(std::span<const Vec2> vertices);

/// A2 / A1 with A1 the polygon LV-ESP-DN-DNB (DNB at DN's time on LV's
/// level) and A2 the triangle IP-DN-RV. Throws Error(ZeroArea).
double area_features(const FiducialSet& fid);

// Second-derivative ratios to A. Throws Error(ZeroDenominator).
AccelFeatures accel_features(const FiducialSet& fid);

BeatFeatures compute_beat_features(const FiducialSet& fid, double height_cm, double hr_bpm,
                                   const FeatureOptions& opts = {});

struct SampleMeta {
  std::string sample_id;
  std::string subject_id;
  double height_cm = 0.0;
  double age = 0.0;
  std::optional<double> sbp;
  std::optional<double> dbp;
};

struct SampleFeatures {
  SampleMeta meta;
  std::array<double, kFeatureNames.size()> values{};  // NaN when unavailable
  std::size_t n_beats_used = 0;
  // Beats contributing to each waveform field.
  std::array<std::size_t, kBeatFeatureNames.size()> field_counts{};

  double get(std::string_view name) const;
};

/// Median over contributing beats for each waveform field; HR is the median
/// beat HR. Throws Error(NoValidBeats) if no beat contributes anything.
SampleFeatures aggregate_sample(std::span<const BeatFeatures> per_beat, const SpectralBands& spectral,
                                const SampleMeta& meta);

// Median IPA over beats that have one; nullopt when none do.
std::optional<double> median_field(std::span<const BeatFeatures> per_beat, std::string_view name);

std::string features_csv_header(bool with_targets = true);
std::string features_csv_row(const SampleFeatures& s, bool with_targets = true);

}  // namespace pulsewave
