#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pulsewave/explain.hpp"

using namespace pulsewave;
using testutil::code_of;
using oracle::brute_force_shapley;
using oracle::gaussian_matrix;

namespace {

ForestModel stump() {
  RegressionTree t;
  t.nodes = {{0, 0.0, 1, 2, 0.0, 100.0}, {-1, 0.0, -1, -1, -1.0, 50.0}, {-1, 0.0, -1, -1, 1.0, 50.0}};
  ForestModel f;
  f.trees.push_back(t);
  return f;
}

}  // namespace

TEST_SUITE("explain") {
  TEST_CASE("linear SHAP closed form") {
    LinearModel m;
    m.columns = {0, 1};
    m.beta = {2.0, -1.0};
    m.intercept = 5.0;
    Eigen::RowVectorXd mean(2), x(2);
    mean << 1.0, 1.0;
    x << 4.0, 5.0;
    const auto a = linear_shap(m, x, mean);
    CHECK(a.shap[0] == doctest::Approx(6.0));
    CHECK(a.shap[1] == doctest::Approx(-4.0));
    CHECK(a.base == doctest::Approx(6.0));
    CHECK(a.prediction == doctest::Approx(8.0));
    const auto z = linear_shap(m, mean, mean);
    CHECK(z.shap[0] == 0.0);
    CHECK(z.shap[1] == 0.0);
    Eigen::RowVectorXd shortx(1);
    shortx << 1.0;
    CHECK(code_of([&] { linear_shap(m, shortx, mean); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("linear SHAP efficiency and dummy columns") {
    std::mt19937_64 gen(3);
    const auto X = gaussian_matrix(60, 4, gen);
    Eigen::VectorXd y = 2.0 * X.col(0) - X.col(2) + 0.1 * gaussian_matrix(60, 1, gen).col(0);
    const std::vector<std::string> names{"a", "b", "c", "d"};
    auto m = fit_ols_subset(X, y, names, {0, 2});
    const Eigen::RowVectorXd mean = X.colwise().mean();
    for (int i = 0; i < 60; ++i) {
      const auto a = linear_shap(m, X.row(i), mean);
      double sum = a.base;
      for (double s : a.shap) sum += s;
      CHECK(std::fabs(sum - m.predict(X.row(i))) < 1e-9);
      CHECK(a.shap[1] == 0.0);
      CHECK(a.shap[3] == 0.0);
    }
  }

  TEST_CASE("stump attribution") {
    const auto f = stump();
    Eigen::RowVectorXd lo(3), hi(3);
    lo << -0.5, 3.0, 2.0;
    hi << 0.5, -3.0, 1.0;
    const auto a = tree_shap(f, lo, 3);
    const auto b = tree_shap(f, hi, 3);
    CHECK(a.shap[0] == doctest::Approx(-1.0));
    CHECK(b.shap[0] == doctest::Approx(1.0));
    CHECK(a.shap[1] == 0.0);
    CHECK(a.shap[2] == 0.0);
    CHECK(a.base == doctest::Approx(0.0));
  }

  TEST_CASE("TreeSHAP matches exhaustive Shapley values") {
    std::mt19937_64 gen(19);
    for (int p : {2, 4, 7}) {
      const auto X = gaussian_matrix(150, p, gen);
      Eigen::VectorXd y = X.col(0).array().square() + X.col(1).array() * X.col(p - 1).array();
      ForestConfig cfg;
      cfg.n_trees = 8;
      cfg.min_leaf = 3;
      cfg.max_depth = 6;
      cfg.seed = static_cast<std::uint64_t>(p);
      std::vector<std::string> names;
      for (int j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
      const auto f = fit_random_forest(X, y, names, cfg);
      for (int i = 0; i < 5; ++i) {
        const Eigen::RowVectorXd x = X.row(i);
        const auto a = tree_shap(f, x, static_cast<std::size_t>(p));
        const auto want = brute_force_shapley(f, x, p);
        for (int j = 0; j < p; ++j) CHECK(std::fabs(a.shap[static_cast<std::size_t>(j)] - want[static_cast<std::size_t>(j)]) < 1e-9);
        double sum = a.base;
        for (double s : a.shap) sum += s;
        CHECK(std::fabs(sum - f.predict(x)) < 1e-6);
        CHECK(a.prediction == doctest::Approx(f.predict(x)));
      }
    }
  }

  TEST_CASE("unused feature gets zero") {
    std::mt19937_64 gen(2);
    Eigen::MatrixXd X = gaussian_matrix(100, 3, gen);
    X.col(2).setConstant(4.0);
    const Eigen::VectorXd y = X.col(0);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.mtry = 3;
    const auto f = fit_random_forest(X, y, {"a", "b", "c"}, cfg);
    for (const auto& t : f.trees)
      for (const auto& nd : t.nodes) REQUIRE(nd.feature != 2);
    for (int i = 0; i < 10; ++i) CHECK(tree_shap(f, X.row(i), 3).shap[2] == 0.0);
    CHECK(tree_shap(stump(), X.row(1), 3).shap[1] == 0.0);
  }

  TEST_CASE("global ranking and tie-break") {
    Attribution a{{0.5, -2.0, 2.0}, 0.0, 0.5};
    const auto g = global_importance({a}, {"z", "b", "a"});
    CHECK(g.order == std::vector<std::size_t>{2, 1, 0});
    CHECK(g.rank == std::vector<std::size_t>{3, 2, 1});
    CHECK(code_of([] { global_importance({}, {"a"}); }) == ErrorCode::EmptyInput);
    CHECK(code_of([&] { global_importance({a}, {"a"}); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("dominant planted coefficient ranks first") {
    std::mt19937_64 gen(10);
    const auto X = gaussian_matrix(200, 3, gen);
    const Eigen::VectorXd y = 10.0 * X.col(1) + X.col(0) + 0.5 * X.col(2);
    const std::vector<std::string> names{"a", "b", "c"};
    const auto m = fit_ols(X, y, names);
    const Eigen::RowVectorXd mean = X.colwise().mean();
    std::vector<Attribution> atts;
    for (int i = 0; i < 200; ++i) atts.push_back(linear_shap(m, X.row(i), mean));
    const auto g = global_importance(atts, names);
    CHECK(g.order[0] == 1);
    // Mean |beta (x - mean)| is |beta| times the mean absolute deviation.
    double mad = 0.0;
    for (int i = 0; i < 200; ++i) mad += std::fabs(X(i, 1) - mean(1));
    CHECK(g.mean_abs[1] == doctest::Approx(std::fabs(m.beta[1]) * mad / 200.0));
  }

  TEST_CASE("symmetric features share importance") {
    std::mt19937_64 gen(14);
    const auto X = gaussian_matrix(2000, 2, gen);
    const Eigen::VectorXd y = X.col(0) + X.col(1);
    const auto m = fit_ols(X, y, {"a", "b"});
    const Eigen::RowVectorXd mean = X.colwise().mean();
    std::vector<Attribution> atts;
    for (int i = 0; i < 2000; ++i) atts.push_back(linear_shap(m, X.row(i), mean));
    const auto g = global_importance(atts, {"a", "b"});
    CHECK(g.mean_abs[0] == doctest::Approx(g.mean_abs[1]).epsilon(0.05));
  }

  TEST_CASE("attributions CSV layout") {
    Attribution a{{1.5, -0.25}, 0.0, 1.25};
    Eigen::MatrixXd raw(1, 2);
    raw << 3.0, 4.0;
    CHECK(attributions_to_csv({a}, {"s1"}, {"RI", "CT"}, raw) ==
          "sample_id,feature,shap_mmHg,raw_value\ns1,RI,1.5,3\ns1,CT,-0.25,4\n");
  }
}
