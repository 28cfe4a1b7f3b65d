#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace pulsewave {

struct AamiThresholds {
  std::array<double, 3> limits_mmHg{5.0, 10.0, 15.0};
  std::array<double, 3> required_pct{50.0, 75.0, 90.0};
};

struct AamiGrade {
  double within5_pct = 0.0;
  double within10_pct = 0.0;
  double within15_pct = 0.0;
  std::array<bool, 3> meets{};
  // Percentage points above (positive) or below each threshold.
  std::array<double, 3> margins{};
  bool pass = false;
};

struct AgreementReport {
  std::size_t n = 0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double loa_lower = 0.0;
  double loa_upper = 0.0;
  double mae = 0.0;
  double sd_ae = 0.0;
  double bias_slope = 0.0;
  double bias_intercept = 0.0;
  double bias_p = 1.0;
  // Absolute-error bins [0,L1], (L1,L2], (L2,L3], (L3,inf) over the AAMI limits.
  std::array<std::size_t, 4> bin_counts{};
  std::array<double, 4> bin_pct{};
  AamiGrade aami;
  std::vector<double> means;
  std::vector<double> differences;
};

/// Differences are predicted - reference. Throws Error(LengthMismatch) or
/// Error(TooFewRows) below 3 pairs.
AgreementReport bland_altman(const std::vector<double>& predicted, const std::vector<double>& reference,
                             const AamiThresholds& thresholds = {});

// Each percentage must reach its requirement (inclusive).
AamiGrade grade_aami(double within5_pct, double within10_pct, double within15_pct,
                     const AamiThresholds& thresholds = {});
AamiGrade grade_aami(const AgreementReport& report, const AamiThresholds& thresholds = {});

std::string agreement_to_json(const AgreementReport& r, const AamiThresholds& thresholds = {});
// Rows `mean,difference`.
std::string agreement_plot_csv(const AgreementReport& r);
std::string agreement_svg(const AgreementReport& r, const std::string& title);

}  // namespace pulsewave
