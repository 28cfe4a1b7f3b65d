#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pulsewave/models.hpp"

namespace pulsewave {

struct Attribution {
  std::vector<double> shap;  // one per design column
  double base = 0.0;
  double prediction = 0.0;
};

/// Independent-features linear SHAP: shap_j = beta_j (x_j - mean_j) for the
/// model's columns, 0 for the others. Throws Error(DimensionMismatch).
Attribution linear_shap(const LinearModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        const Eigen::Ref<const Eigen::RowVectorXd>& background_mean);

// Path-dependent TreeSHAP for one tree; phi has one slot per feature.
void tree_shap_single(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                      std::vector<double>& phi);

/// Path-dependent TreeSHAP averaged over trees; base is the mean of the
/// trees' cover-weighted expected values. Throws Error(DimensionMismatch).
Attribution tree_shap(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                      std::size_t n_features);

struct GlobalImportance {
  std::vector<std::string> names;
  std::vector<double> mean_abs;   // per feature, input order
  std::vector<std::size_t> rank;  // 1-based, per feature
  std::vector<std::size_t> order;  // feature indices, most important first
};

/// Mean |shap| ranking, descending, ties broken by feature name.
/// Throws Error(EmptyInput) or Error(DimensionMismatch).
GlobalImportance global_importance(const std::vector<Attribution>& attributions, const std::vector<std::string>& names);

// Rows `sample_id,feature,shap_mmHg,raw_value`.
std::string attributions_to_csv(const std::vector<Attribution>& attributions, const std::vector<std::string>& sample_ids,
                                const std::vector<std::string>& names, const Eigen::MatrixXd& raw);
std::string importance_to_json(const GlobalImportance& g);

}  // namespace pulsewave
