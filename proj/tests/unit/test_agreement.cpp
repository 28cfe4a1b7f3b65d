#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "pulsewave/agreement.hpp"

using namespace pulsewave;
using testutil::code_of;

TEST_SUITE("agreement") {
  TEST_CASE("perfect agreement") {
    std::vector<double> ref{110, 120, 130, 140, 150};
    const auto r = bland_altman(ref, ref);
    CHECK(r.mean_error == 0.0);
    CHECK(r.sd_error == 0.0);
    CHECK(r.bin_pct[0] == 100.0);
    CHECK(r.aami.pass);
  }

  TEST_CASE("alternating differences") {
    const auto r = bland_altman({102, 98, 102, 98}, {100, 100, 100, 100});
    // Sample SD with n - 1: sqrt(16 / 3).
    CHECK(r.mean_error == doctest::Approx(0.0));
    CHECK(r.sd_error == doctest::Approx(std::sqrt(16.0 / 3.0)));
    CHECK(r.sd_error == doctest::Approx(2.309).epsilon(1e-3));
    CHECK(r.mae == doctest::Approx(2.0));
    CHECK(r.loa_upper == doctest::Approx(1.96 * std::sqrt(16.0 / 3.0)));
    CHECK(r.loa_lower == doctest::Approx(-1.96 * std::sqrt(16.0 / 3.0)));
    CHECK(r.differences == std::vector<double>{2, -2, 2, -2});
  }

  TEST_CASE("halved predictions show a negative bias slope") {
    std::vector<double> ref, pred;
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 100; ++i) {
      ref.push_back(90 + i * 0.8 + nd(gen));
      pred.push_back(0.5 * ref.back());
    }
    const auto r = bland_altman(pred, ref);
    // d = -0.5 ref and m = 0.75 ref, so d = -(2/3) m exactly.
    CHECK(r.bias_slope == doctest::Approx(-2.0 / 3.0));
    CHECK(r.bias_intercept == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.bias_p < 1e-6);
  }

  TEST_CASE("bins partition the absolute errors") {
    const auto r = bland_altman({100, 105, 110, 115.5, 130, 100}, {100, 100, 100, 100, 100, 95});
    CHECK(r.bin_counts == std::array<std::size_t, 4>{3, 1, 0, 2});
    std::size_t total = 0;
    for (auto c : r.bin_counts) total += c;
    CHECK(total == 6);
    CHECK(r.aami.within5_pct == doctest::Approx(50.0));
    CHECK(r.aami.within10_pct <= r.aami.within15_pct);
  }

  TEST_CASE("AAMI boundaries are inclusive") {
    CHECK(grade_aami(50.0, 75.0, 90.0).pass);
    CHECK(grade_aami(60.0, 80.0, 95.0).pass);
    const auto g = grade_aami(49.99, 80.0, 95.0);
    CHECK_FALSE(g.pass);
    CHECK_FALSE(g.meets[0]);
    CHECK(g.meets[1]);
    CHECK(g.margins[0] == doctest::Approx(-0.01));
  }

  TEST_CASE("reported 84.64% within 15 mmHg fails") {
    const auto g = grade_aami(60.0, 80.0, 84.64);
    CHECK_FALSE(g.meets[2]);
    CHECK_FALSE(g.pass);
    CHECK(grade_aami(60.0, 80.0, 94.69).meets[2]);
  }

  TEST_CASE("swapping and shifting") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    std::vector<double> ref, pred;
    for (int i = 0; i < 50; ++i) {
      ref.push_back(120 + 15 * nd(gen));
      pred.push_back(0.8 * ref.back() + 20 + 6 * nd(gen));
    }
    const auto a = bland_altman(pred, ref);
    const auto b = bland_altman(ref, pred);
    CHECK(b.mean_error == doctest::Approx(-a.mean_error));
    CHECK(b.bias_slope == doctest::Approx(-a.bias_slope));
    CHECK(b.sd_error == doctest::Approx(a.sd_error));
    CHECK(b.mae == doctest::Approx(a.mae));
    CHECK(b.bin_counts == a.bin_counts);

    auto shifted = pred;
    for (double& v : shifted) v += 3.5;
    const auto c = bland_altman(shifted, ref);
    CHECK(c.mean_error == doctest::Approx(a.mean_error + 3.5));
    CHECK(c.sd_error == doctest::Approx(a.sd_error));
  }

  TEST_CASE("input checks") {
    CHECK(code_of([] { bland_altman({1, 2, 3}, {1, 2}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([] { bland_altman({1, 2}, {1, 2}); }) == ErrorCode::TooFewRows);
  }

  TEST_CASE("plot CSV rows") {
    const auto r = bland_altman({102, 98, 101}, {100, 100, 100});
    CHECK(agreement_plot_csv(r) == "mean,difference\n101,2\n99,-2\n100.5,1\n");
    CHECK(agreement_to_json(r).find("\"aami\"") != std::string::npos);
  }
}
