#include "pulsewave/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "pulsewave/common.hpp"

namespace pulsewave {

namespace {

constexpr double kRankTolerance = 1e-10;

double column_sd(const Eigen::VectorXd& v) {
  const auto n = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / (n - 1.0));
}

}  // namespace

double LinearModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double acc = intercept;
  for (std::size_t j = 0; j < columns.size(); ++j) acc += beta[j] * x(static_cast<Eigen::Index>(columns[j]));
  return acc;
}

double aic_value(std::size_t n, double rss, std::size_t k) {
  const double nn = static_cast<double>(n);
  const double r = std::max(rss, std::numeric_limits<double>::min());
  return nn * std::log(r / nn) + 2.0 * static_cast<double>(k);
}

LinearModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  std::vector<std::size_t> all(static_cast<std::size_t>(X.cols()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_ols_subset(X, y, names, all);
}

LinearModel fit_ols_subset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                           const std::vector<std::size_t>& columns) {
  if (X.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "design rows differ from target length");
  const auto n = static_cast<std::size_t>(X.rows());
  const std::size_t p = columns.size();
  if (n <= p + 1) throw Error(ErrorCode::TooFewRows, "least squares needs n > p + 1");
  const auto k = static_cast<Eigen::Index>(p + 1);

  Eigen::MatrixXd A(X.rows(), k);
  A.col(0).setOnes();
  for (std::size_t j = 0; j < p; ++j) A.col(static_cast<Eigen::Index>(j + 1)) = X.col(static_cast<Eigen::Index>(columns[j]));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < k) throw Error(ErrorCode::RankDeficient, "design matrix is rank deficient");
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd resid = y - A * coef;

  LinearModel m;
  m.columns = columns;
  for (auto c : columns) m.names.push_back(c < names.size() ? names[c] : "x" + std::to_string(c));
  m.n = n;
  m.rss = resid.squaredNorm();
  m.aic = aic_value(n, m.rss, p + 1);
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  m.r2 = tss > 0.0 ? 1.0 - m.rss / tss : 0.0;
  m.adj_r2 = 1.0 - (1.0 - m.r2) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n - p) - 1.0);

  // (A'A)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  const Eigen::MatrixXd inv = perm * (Rinv * Rinv.transpose()) * perm.transpose();
  const double dof = static_cast<double>(n - p - 1);
  const double sigma2 = m.rss / dof;

  const double sdy = column_sd(y);
  m.intercept = coef(0);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double se = std::sqrt(std::max(0.0, sigma2 * inv(j, j)));
    const double t = se > 0.0 ? coef(j) / se : (coef(j) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    const double pv = std::isfinite(t) ? t_two_sided_p(t, dof) : 0.0;
    if (j == 0) {
      m.intercept_p = pv;
      continue;
    }
    m.beta.push_back(coef(j));
    m.se.push_back(se);
    m.t.push_back(t);
    m.p.push_back(pv);
    const double sdx = column_sd(A.col(j));
    m.beta_std.push_back(sdy > 0.0 ? coef(j) * sdx / sdy : 0.0);
  }
  return m;
}

LinearModel stepwise_aic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                         StepDirection direction) {
  const auto p = static_cast<std::size_t>(X.cols());
  std::vector<bool> in(p, direction != StepDirection::Forward);

  const auto subset = [&](const std::vector<bool>& mask) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < p; ++j)
      if (mask[j]) cols.push_back(j);
    return cols;
  };
  const auto try_fit = [&](const std::vector<bool>& mask) -> std::optional<LinearModel> {
    try {
      return fit_ols_subset(X, y, names, subset(mask));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::RankDeficient || e.code() == ErrorCode::TooFewRows) return std::nullopt;
      throw;
    }
  };

  auto current = try_fit(in);
  if (!current) {
    if (direction == StepDirection::Backward) throw Error(ErrorCode::RankDeficient, "full model cannot be fitted");
    std::fill(in.begin(), in.end(), false);
    current = try_fit(in);
    if (!current) throw Error(ErrorCode::TooFewRows, "intercept-only model cannot be fitted");
  }

  while (true) {
    std::optional<LinearModel> best;
    std::vector<bool> best_mask;
    const auto consider = [&](std::vector<bool> mask) {
      auto fit = try_fit(mask);
      if (fit && (!best || fit->aic < best->aic)) {
        best = std::move(fit);
        best_mask = std::move(mask);
      }
    };
    if (direction != StepDirection::Forward)
      for (std::size_t j = 0; j < p; ++j)
        if (in[j]) {
          auto mask = in;
          mask[j] = false;
          consider(std::move(mask));
        }
    if (direction != StepDirection::Backward)
      for (std::size_t j = 0; j < p; ++j)
        if (!in[j]) {
          auto mask = in;
          mask[j] = true;
          consider(std::move(mask));
        }
    if (!best || !(best->aic < current->aic - 1e-12)) break;
    current = std::move(best);
    in = std::move(best_mask);
  }
  return *current;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(i)];
    i = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

double RegressionTree::expected_value() const {
  double acc = 0.0;
  for (const auto& nd : nodes)
    if (nd.feature < 0) acc += nd.value * nd.cover;
  return acc / nodes.front().cover;
}

double ForestModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double acc = 0.0;
  for (const auto& t : trees) acc += t.predict(x);
  return acc / static_cast<double>(trees.size());
}

namespace {

RegressionTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& cfg,
                         std::size_t mtry, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  std::vector<std::size_t> rows(n);
  if (cfg.bootstrap)
    for (auto& r : rows) r = rng.below(n);
  else
    std::iota(rows.begin(), rows.end(), std::size_t{0});

  struct Pending {
    int node;
    std::vector<std::size_t> idx;
    std::size_t depth;
  };
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, std::move(rows), 0});
  std::vector<std::size_t> features(p);

  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    const std::size_t m = cur.idx.size();
    double sum = 0.0;
    for (auto r : cur.idx) sum += y(static_cast<Eigen::Index>(r));
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (auto r : cur.idx) {
      const double d = y(static_cast<Eigen::Index>(r)) - mean;
      ss += d * d;
    }
    {
      auto& nd = tree.nodes[static_cast<std::size_t>(cur.node)];
      nd.value = mean;
      nd.cover = static_cast<double>(m);
    }
    if (m < 2 * cfg.min_leaf || ss <= 0.0 || (cfg.max_depth > 0 && cur.depth >= cfg.max_depth)) continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry; ++i) std::swap(features[i], features[i + rng.below(p - i)]);

    const double base = sum * sum / static_cast<double>(m);
    double best_gain = 1e-12 * ss;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> best_order;
    std::size_t best_split = 0;
    std::vector<std::size_t> order;
    for (std::size_t fi = 0; fi < mtry; ++fi) {
      const auto f = static_cast<Eigen::Index>(features[fi]);
      order = cur.idx;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return X(static_cast<Eigen::Index>(a), f) < X(static_cast<Eigen::Index>(b), f);
      });
      double left = 0.0;
      bool improved = false;
      for (std::size_t s = 1; s < m; ++s) {
        left += y(static_cast<Eigen::Index>(order[s - 1]));
        if (s < cfg.min_leaf || m - s < cfg.min_leaf) continue;
        const double xl = X(static_cast<Eigen::Index>(order[s - 1]), f);
        const double xr = X(static_cast<Eigen::Index>(order[s]), f);
        if (!(xl < xr)) continue;
        const double right = sum - left;
        const double gain = left * left / static_cast<double>(s) +
                            right * right / static_cast<double>(m - s) - base;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          const double mid = 0.5 * (xl + xr);
          best_threshold = mid < xr ? mid : xl;
          best_split = s;
          improved = true;
        }
      }
      if (improved) best_order = order;
    }
    if (best_feature < 0) continue;

    const int l = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& nd = tree.nodes[static_cast<std::size_t>(cur.node)];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = l;
    nd.right = l + 1;
    std::vector<std::size_t> li(best_order.begin(), best_order.begin() + static_cast<std::ptrdiff_t>(best_split));
    std::vector<std::size_t> ri(best_order.begin() + static_cast<std::ptrdiff_t>(best_split), best_order.end());
    stack.push_back({l + 1, std::move(ri), cur.depth + 1});
    stack.push_back({l, std::move(li), cur.depth + 1});
  }
  return tree;
}

}  // namespace

ForestModel fit_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                              const ForestConfig& config) {
  if (X.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "design rows differ from target length");
  if (X.rows() < 10) throw Error(ErrorCode::TooFewRows, "random forest needs at least 10 rows");
  if (X.cols() < 1) throw Error(ErrorCode::Precondition, "random forest needs at least one feature");
  if (config.n_trees == 0) throw Error(ErrorCode::Precondition, "random forest needs at least one tree");
  const auto p = static_cast<std::size_t>(X.cols());
  const std::size_t mtry = config.mtry == 0 ? std::max<std::size_t>(1, p / 3) : std::min(config.mtry, p);
  ForestModel model;
  model.config = config;
  model.config.mtry = mtry;
  model.names = names;
  model.trees.resize(config.n_trees);
  parallel_for(config.n_trees, config.threads, [&](std::size_t i) {
    model.trees[i] = grow_tree(X, y, config, mtry, derive_seed(config.seed, i));
  });
  return model;
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Mlr: return "mlr";
    case ModelKind::Stepwise: return "stepwise";
    case ModelKind::Forest: return "rf";
  }
  return "?";
}

double FittedModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return kind == ModelKind::Forest ? forest.predict(x) : linear.predict(x);
}

FittedModel fit_model(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<std::string>& names, unsigned threads) {
  FittedModel m;
  m.kind = spec.kind;
  switch (spec.kind) {
    case ModelKind::Mlr: m.linear = fit_ols(X, y, names); break;
    case ModelKind::Stepwise: m.linear = stepwise_aic(X, y, names, spec.direction); break;
    case ModelKind::Forest: {
      auto cfg = spec.forest;
      cfg.threads = threads;
      m.forest = fit_random_forest(X, y, names, cfg);
      break;
    }
  }
  return m;
}

std::vector<int> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::Precondition, "cross-validation needs k >= 2");
  if (n < k) throw Error(ErrorCode::TooFewRows, "fewer rows than folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<int> fold(n);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold[perm[pos++]] = static_cast<int>(f);
  }
  return fold;
}

ErrorSummary summarize_errors(const std::vector<double>& predicted, const std::vector<double>& reference) {
  ErrorSummary s;
  const std::size_t n = predicted.size();
  if (n == 0 || n != reference.size()) throw Error(ErrorCode::LengthMismatch, "prediction and reference lengths differ");
  std::vector<double> err(n);
  double abs_sum = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = predicted[i] - reference[i];
    abs_sum += std::fabs(err[i]);
    sse += err[i] * err[i];
  }
  s.mae = abs_sum / static_cast<double>(n);
  s.mean_error = mean(err);
  s.sd_error = sample_sd(err);
  const double r = pearson(predicted, reference);
  s.r2_pearson = std::isfinite(r) ? r * r : 0.0;
  const double m = mean(reference);
  double tss = 0.0;
  for (double v : reference) tss += (v - m) * (v - m);
  s.r2_cod = tss > 0.0 ? 1.0 - sse / tss : 0.0;
  return s;
}

CVResult cross_validate(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::string>& names, std::size_t k, std::uint64_t seed, unsigned threads) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n) throw Error(ErrorCode::DimensionMismatch, "design rows differ from target length");
  CVResult res;
  res.k = k;
  res.seed = seed;
  res.fold = assign_folds(n, k, seed);
  res.predicted.assign(n, 0.0);
  res.reference.assign(y.data(), y.data() + n);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i)
      (res.fold[i] == static_cast<int>(f) ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd Xt = X(train, Eigen::all);
    const Eigen::VectorXd yt = y(train);
    const auto model = fit_model(spec, Xt, yt, names, threads);
    for (auto i : test) res.predicted[static_cast<std::size_t>(i)] = model.predict(X.row(i));
  }
  const auto s = summarize_errors(res.predicted, res.reference);
  res.r2_pearson = s.r2_pearson;
  res.r2_cod = s.r2_cod;
  res.mae = s.mae;
  res.mean_error = s.mean_error;
  res.sd_error = s.sd_error;
  return res;
}

}  // namespace pulsewave
