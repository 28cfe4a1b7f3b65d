#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pulsewave/fiducials.hpp"
#include "pulsewave/synth.hpp"

using namespace pulsewave;
using testutil::code_of;

namespace {

BeatTemplate spec_template() {
  BeatTemplate t;
  t.lobes = {{0.30, 0.08, 1.0}, {0.55, 0.10, 0.45}};
  t.period = 0.8;
  return t;
}

struct DenseOracle {
  double esp, dp, dn;
};

// Grid search at 100x the sample rate over the closed form.
DenseOracle dense_oracle(const BeatTemplate& tmpl, double fs) {
  const AnalyticSignal f(tmpl.lobes);
  const double h = 1.0 / (100.0 * fs);
  const auto n = static_cast<std::size_t>(tmpl.period / h);
  std::vector<double> y(n + 1);
  for (std::size_t i = 0; i <= n; ++i) y[i] = f.eval(static_cast<double>(i) * h);
  std::size_t esp = 0;
  for (std::size_t i = 0; i <= n; ++i)
    if (y[i] > y[esp]) esp = i;
  std::size_t dp = esp + 1;
  while (dp < n && !(y[dp] > y[dp - 1] && y[dp] >= y[dp + 1])) ++dp;
  std::size_t dn = esp;
  for (std::size_t i = esp; i <= dp; ++i)
    if (y[i] < y[dn]) dn = i;
  return {static_cast<double>(esp) * h, static_cast<double>(dp) * h, static_cast<double>(dn) * h};
}

void check_ordering(const FiducialSet& f) {
  CHECK(f.LV.time <= f.ESP.time);
  CHECK(f.ESP.time <= f.DP.time);
  CHECK(f.DP.time <= f.RV.time);
  if (f.has_second_peak) {
    CHECK(f.ESP.time <= f.IP.time);
    CHECK(f.IP.time <= f.DN.time);
    CHECK(f.DN.time <= f.DP.time);
  } else {
    CHECK(f.IP.time == f.DN.time);
  }
  if (f.accel_located) {
    CHECK(f.A.index < f.ESP.index);
    CHECK(f.ESP.index < f.E.index);
    CHECK(f.E.index < f.F.index);
    CHECK(f.F.index < f.G.index);
    CHECK(f.G.index <= f.H.index);
    CHECK(f.H.index < f.RV.index);
  }
}

}  // namespace

TEST_SUITE("fiducials") {
  TEST_CASE("two-Gaussian beat matches a dense grid search") {
    for (double fs : {30.0, 60.0, 100.0}) {
      const auto sb = generate_beat(spec_template(), fs);
      const auto f = detect_fiducials(sb.beat);
      const auto o = dense_oracle(spec_template(), fs);
      REQUIRE(f.has_second_peak);
      CHECK(std::fabs(f.ESP.time - o.esp) <= 1.0 / fs);
      CHECK(std::fabs(f.DP.time - o.dp) <= 1.0 / fs);
      CHECK(std::fabs(f.DN.time - o.dn) <= 1.0 / fs);
    }
  }

  TEST_CASE("monotone decay has no second peak") {
    std::vector<double> y;
    for (int i = 0; i <= 40; ++i) {
      const double t = i / 40.0;
      y.push_back(t < 0.2 ? testutil::gauss(t, 0.2, 0.07) : std::exp(-(t - 0.2) / 0.15) * (1.0 - t));
    }
    const auto b = testutil::beat_from(y, 1.0 / 40.0);
    const auto f = detect_fiducials(b);
    CHECK_FALSE(f.has_second_peak);
    const auto d2 = beat_second_derivative(b, true);
    std::size_t best = f.ESP.index + 1;
    for (std::size_t i = f.ESP.index + 1; i < f.RV.index; ++i)
      if (d2[i] < d2[best]) best = i;
    CHECK(f.DP.index == best);
    CHECK(f.IP.time == f.DN.time);
    CHECK(f.DN.time == f.DP.time);
  }

  TEST_CASE("global minimum at the last sample is RV") {
    std::vector<double> y;
    for (int i = 0; i <= 30; ++i) y.push_back(testutil::gauss(i / 30.0, 0.3, 0.1) - 0.01 * i / 30.0);
    const auto f = detect_fiducials(testutil::beat_from(y, 1.0 / 30.0));
    CHECK(f.RV.index == 30);
  }

  TEST_CASE("too few samples and degenerate beats") {
    std::vector<double> small(10, 0.0);
    small[4] = 1.0;
    CHECK(code_of([&] { detect_fiducials(testutil::beat_from(small, 0.05)); }) == ErrorCode::TooFewSamples);
    std::vector<double> ramp;
    for (int i = 0; i < 20; ++i) ramp.push_back(i);
    CHECK(code_of([&] { detect_fiducials(testutil::beat_from(ramp, 0.05)); }) == ErrorCode::DegenerateBeat);
  }

  TEST_CASE("acceleration points match the closed-form second derivative") {
    for (const auto& tmpl : {default_template(), three_lobe_template(), spec_template()}) {
      const double fs = 500.0;
      const auto sb = generate_beat(tmpl, fs);
      const auto f = locate_all(sb.beat);
      REQUIRE(f.accel_located);
      const auto& t = sb.truth;
      for (const auto& [got, want] : {std::pair{f.A, t.A}, {f.B, t.B}, {f.E, t.E}, {f.F, t.F}, {f.G, t.G}, {f.H, t.H}})
        CHECK(std::fabs(got.time - want.time) <= 1.0 / fs + 1e-9);
    }
  }

  TEST_CASE("acceleration ordering A, B, E, F") {
    const auto sb = generate_beat(default_template(), 200.0);
    const auto f = locate_all(sb.beat);
    CHECK(f.A.time < f.B.time);
    CHECK(f.B.time < f.E.time);
    CHECK(f.E.time < f.F.time);
  }

  TEST_CASE("three-sample beat has no acceleration windows") {
    const auto b = testutil::beat_from({0.0, 1.0, 0.0}, 0.1);
    FiducialSet f;
    f.ESP.index = 1;
    f.RV.index = 2;
    CHECK(code_of([&] { detect_accel_points(b, f); }) == ErrorCode::EmptyWindow);
  }

  TEST_CASE("line intersection") {
    const auto p = intersect_lines({0.0, 0.0, 2.0}, {0.0, 1.0, 0.0});
    CHECK(p.time == doctest::Approx(0.5));
    CHECK(p.amplitude == doctest::Approx(1.0));
    CHECK(code_of([] { intersect_lines({0.0, 0.0, 2.0}, {1.0, 3.0, 2.0}); }) == ErrorCode::ParallelLines);
  }

  TEST_CASE("ISP coincides with ESP for a tangent through ESP and a flat decay line") {
    FiducialSet f;
    f.LV = {0, 0.0, 0.0};
    f.ESP = {2, 0.2, 1.0};
    f.max_slope = {1, 0.1, 0.5};
    f.max_slope_value = 5.0;
    f.DP = {4, 0.4, 1.0};
    f.RV = {6, 0.6, 1.0};
    const auto p = construct_isp(Beat{}, f);
    CHECK(p.time == doctest::Approx(0.2));
    CHECK(p.amplitude == doctest::Approx(1.0));
    CHECK(p.in_range);
  }

  TEST_CASE("out-of-range ISP is flagged") {
    FiducialSet f;
    // Lines meet at t = 0.025, before LV.
    f.LV = {1, 0.05, 0.0};
    f.max_slope = {2, 0.1, 0.5};
    f.max_slope_value = 10.0;
    f.DP = {4, 0.4, 0.5};
    f.RV = {6, 0.6, 0.9};
    const auto p = construct_isp(Beat{}, f);
    CHECK_FALSE(p.in_range);
  }

  TEST_CASE("ordering holds over a family of synthetic beats") {
    Rng rng(11);
    for (int k = 0; k < 60; ++k) {
      BeatTemplate t;
      t.period = rng.uniform(0.6, 1.2);
      t.lobes = {{rng.uniform(0.18, 0.3) * t.period, rng.uniform(0.05, 0.08) * t.period, 1.0},
                 {rng.uniform(0.5, 0.6) * t.period, rng.uniform(0.08, 0.11) * t.period, rng.uniform(0.2, 0.6)}};
      const auto sb = generate_beat(t, rng.uniform(30.0, 120.0));
      check_ordering(locate_all(sb.beat));
    }
  }

  TEST_CASE("detection is invariant to a time shift") {
    auto sb = generate_beat(default_template(), 60.0);
    const auto a = locate_all(sb.beat);
    sb.beat.t_start += 12.5;
    const auto b = locate_all(sb.beat);
    CHECK(a.ESP.index == b.ESP.index);
    CHECK(a.DN.index == b.DN.index);
    CHECK(a.F.index == b.F.index);
    CHECK(b.ESP.time - a.ESP.time == doctest::Approx(12.5));
    CHECK(b.ISP.time - a.ISP.time == doctest::Approx(12.5));
    CHECK(b.ISP.amplitude == doctest::Approx(a.ISP.amplitude));
  }

  TEST_CASE("fiducials JSON names every point") {
    const auto sb = generate_beat(default_template(), 60.0);
    const auto j = fiducials_to_json({locate_all(sb.beat)});
    for (const char* key : {"\"LV\"", "\"ESP\"", "\"IP\"", "\"DN\"", "\"DP\"", "\"RV\"", "\"A\"", "\"H\"", "\"ISP\""})
      CHECK(j.find(key) != std::string::npos);
  }
}
