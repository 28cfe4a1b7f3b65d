#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pulsewave {

struct LinearModel {
  std::vector<std::string> names;
  std::vector<std::size_t> columns;  // indices into the design matrix used for fitting
  double intercept = 0.0;
  double intercept_p = 1.0;
  std::vector<double> beta;
  std::vector<double> beta_std;  // beta * sd(x) / sd(y)
  std::vector<double> se;
  std::vector<double> t;
  std::vector<double> p;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double rss = 0.0;
  double aic = 0.0;
  std::size_t n = 0;

  // `x` is a full design row; only `columns` are read.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

// AIC = n ln(RSS / n) + 2k, k counting the intercept.
double aic_value(std::size_t n, double rss, std::size_t k);

/// Least squares with an intercept on all columns of X.
/// Throws Error(TooFewRows) unless n > p + 1, Error(RankDeficient) for a
/// singular design.
LinearModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names);
// Same on a subset of columns; an empty subset fits the intercept alone.
LinearModel fit_ols_subset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                           const std::vector<std::size_t>& columns);

enum class StepDirection { Both, Forward, Backward };

/// Greedy AIC search. Both and Backward start from the full model, Forward
/// from the intercept. Moves are scored by AIC; ties keep the earliest move
/// (drops before adds, then column order).
LinearModel stepwise_aic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                         StepDirection direction = StepDirection::Both);

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the training rows reaching the node
  double cover = 0.0;  // number of training rows reaching the node
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // Cover-weighted mean of the leaves.
  double expected_value() const;
};

struct ForestConfig {
  std::size_t n_trees = 500;
  std::size_t mtry = 0;  // 0: max(1, p / 3)
  std::size_t min_leaf = 5;
  std::size_t max_depth = 0;  // 0: unlimited
  bool bootstrap = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  ForestConfig config;
  std::vector<std::string> names;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Bagged CART regression trees. Tree i draws from derive_seed(seed, i), so
/// the forest does not depend on the thread count. Throws Error(TooFewRows)
/// below 10 rows.
ForestModel fit_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                              const ForestConfig& config);

enum class ModelKind { Mlr, Stepwise, Forest };
const char* to_string(ModelKind k);

struct ModelSpec {
  ModelKind kind = ModelKind::Mlr;
  ForestConfig forest;
  StepDirection direction = StepDirection::Both;
};

struct CVResult {
  std::vector<double> predicted;
  std::vector<double> reference;
  std::vector<int> fold;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double r2_pearson = 0.0;
  double r2_cod = 0.0;  // coefficient of determination
  double mae = 0.0;
  double mean_error = 0.0;
  double sd_error = 0.0;
};

// Random fold labels; the first n % k folds hold one extra row.
std::vector<int> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// Out-of-fold predictions for every row. Throws Error(TooFewRows) if n < k.
CVResult cross_validate(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::string>& names, std::size_t k, std::uint64_t seed,
                        unsigned threads = 1);

struct FittedModel {
  ModelKind kind = ModelKind::Mlr;
  LinearModel linear;
  ForestModel forest;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

FittedModel fit_model(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<std::string>& names, unsigned threads = 1);

struct ErrorSummary {
  double r2_pearson = 0.0;
  double r2_cod = 0.0;
  double mae = 0.0;
  double mean_error = 0.0;
  double sd_error = 0.0;
};
ErrorSummary summarize_errors(const std::vector<double>& predicted, const std::vector<double>& reference);

}  // namespace pulsewave
