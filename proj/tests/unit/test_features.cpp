#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "pulsewave/features.hpp"

using namespace pulsewave;
using testutil::code_of;

namespace {

// A hand-placed beat with LV on the zero baseline.
FiducialSet sample_fiducials() {
  FiducialSet f;
  f.LV = {0, 0.0, 0.0};
  f.ESP = {6, 0.2, 1.0};
  f.IP = {9, 0.3, 0.6};
  f.DN = {11, 0.36, 0.5};
  f.DP = {14, 0.45, 0.7};
  f.RV = {30, 1.0, 0.05};
  f.has_second_peak = true;
  f.ISP = {0.22, 1.25, true};
  f.isp_located = true;
  f.A = {2, 0.06, 40.0};
  f.B = {5, 0.16, -36.0};
  f.E = {8, 0.26, 12.0};
  f.F = {10, 0.33, -4.0};
  f.G = {13, 0.42, 6.0};
  f.H = {16, 0.52, -2.0};
  f.accel_located = true;
  return f;
}

BeatFeatures with_ppt(double ppt) {
  BeatFeatures b;
  b.set("PPT", ppt);
  b.set("IPA", 2.0 * ppt);
  b.hr_bpm = 60.0 + ppt;
  return b;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("equal diastolic and systolic heights give RI = 1") {
    auto f = sample_fiducials();
    f.DP.amplitude = f.ESP.amplitude;
    const auto ta = time_altitude_features(f, 170.0, std::nullopt);
    CHECK(*ta.RI == doctest::Approx(1.0));
  }

  TEST_CASE("stiffness index from height and PPT") {
    auto f = sample_fiducials();
    f.DP.time = f.ESP.time + 0.25;
    const auto ta = time_altitude_features(f, 170.0, std::nullopt);
    CHECK(*ta.PPT == doctest::Approx(0.25));
    CHECK(*ta.SI == doctest::Approx(680.0));
    const auto doubled = time_altitude_features(f, 340.0, std::nullopt);
    CHECK(*doubled.SI == doctest::Approx(2.0 * *ta.SI));
  }

  TEST_CASE("time and altitude formulas") {
    const auto f = sample_fiducials();
    const auto ta = time_altitude_features(f, 160.0, 0.5);
    CHECK(*ta.PPT == doctest::Approx(0.25));
    CHECK(*ta.RI == doctest::Approx(0.7));
    CHECK(*ta.ERI == doctest::Approx(0.7 / 1.25));
    CHECK(*ta.CT == doctest::Approx(0.2));
    CHECK(*ta.NT == doctest::Approx(0.36));
    CHECK(*ta.DT == doctest::Approx(0.8));
    CHECK(*ta.RCA == doctest::Approx(0.2 / 0.36));
    CHECK(*ta.RDA == doctest::Approx(0.36 / 1.0));
  }

  TEST_CASE("heights are measured above LV") {
    auto f = sample_fiducials();
    const auto a = time_altitude_features(f, 170.0, 0.5);
    for (auto* p : {&f.LV, &f.ESP, &f.IP, &f.DN, &f.DP, &f.RV}) p->amplitude += 3.0;
    f.ISP.amplitude += 3.0;
    const auto b = time_altitude_features(f, 170.0, 0.5);
    CHECK(*a.RI == doctest::Approx(*b.RI));
    CHECK(*a.ERI == doctest::Approx(*b.ERI));
  }

  TEST_CASE("ARI branches on BA at 1") {
    const auto f = sample_fiducials();
    const auto lo = time_altitude_features(f, 170.0, 0.8);
    const auto hi = time_altitude_features(f, 170.0, 1.2);
    const auto edge = time_altitude_features(f, 170.0, 1.0);
    CHECK(*lo.ARI == *lo.ERI);
    CHECK(*hi.ARI == *hi.RI);
    CHECK(*edge.ARI == *edge.ERI);
    CHECK(*lo.RI == *hi.RI);
    CHECK(*lo.ERI == *hi.ERI);
    CHECK(*lo.PPT == *hi.PPT);
    CHECK(*lo.RDA == *hi.RDA);
    CHECK_FALSE(time_altitude_features(f, 170.0, std::nullopt).ARI.has_value());
  }

  TEST_CASE("ISP at ESP gives ERI = RI") {
    auto f = sample_fiducials();
    f.ISP = {f.ESP.time, f.ESP.amplitude, true};
    const auto ta = time_altitude_features(f, 170.0, std::nullopt);
    CHECK(std::fabs(*ta.ERI - *ta.RI) < 1e-12);
  }

  TEST_CASE("degenerate denominators exclude only their fields") {
    auto f = sample_fiducials();
    f.DP.time = f.ESP.time;
    f.ISP.amplitude = f.LV.amplitude;
    const auto ta = time_altitude_features(f, 170.0, 0.5);
    CHECK_FALSE(ta.PPT.has_value());
    CHECK_FALSE(ta.SI.has_value());
    CHECK_FALSE(ta.ERI.has_value());
    CHECK_FALSE(ta.ARI.has_value());
    CHECK(ta.RI.has_value());
    CHECK(ta.CT.has_value());
    CHECK(ta.exclusions.size() == 2);
  }

  TEST_CASE("out-of-range ISP may be rejected") {
    auto f = sample_fiducials();
    f.ISP.in_range = false;
    CHECK(time_altitude_features(f, 170.0, std::nullopt).ERI.has_value());
    CHECK_FALSE(time_altitude_features(f, 170.0, std::nullopt, {.reject_out_of_range_isp = true}).ERI.has_value());
  }

  TEST_CASE("shoelace areas") {
    const std::array<Vec2, 4> square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    CHECK(polygon_area(square) == doctest::Approx(1.0));
    const std::array<Vec2, 3> tri{{{0, 0}, {2, 0}, {0, 3}}};
    CHECK(polygon_area(tri) == doctest::Approx(3.0));
  }

  TEST_CASE("IPA of a unit square and a half-unit triangle") {
    FiducialSet f;
    f.LV = {0, 0.0, 0.0};
    f.ESP = {1, 0.0, 1.0};
    f.DN = {2, 1.0, 1.0};
    f.IP = {2, 1.0, 0.0};
    f.RV = {3, 2.0, 1.0};
    CHECK(area_features(f) == doctest::Approx(0.5));
    f.RV = {3, 3.0, 1.0};
    CHECK(area_features(f) == doctest::Approx(1.0));
  }

  TEST_CASE("collinear systolic vertices have no area") {
    FiducialSet f;
    f.LV = {0, 0.0, 0.0};
    f.ESP = {1, 0.5, 0.0};
    f.DN = {2, 1.0, 0.0};
    f.IP = {1, 0.8, 1.0};
    f.RV = {3, 2.0, 1.0};
    CHECK(code_of([&] { area_features(f); }) == ErrorCode::ZeroArea);
  }

  TEST_CASE("acceleration ratios") {
    auto f = sample_fiducials();
    f.A.value = 1.0;
    f.B.value = -0.9;
    f.E.value = 0.3;
    const auto a = accel_features(f);
    CHECK(a.BA == doctest::Approx(0.9));
    CHECK(a.EA == doctest::Approx(0.3));
    CHECK(a.AI == doctest::Approx(0.6));
    CHECK(a.FA == doctest::Approx(4.0));
    CHECK(a.GA == doctest::Approx(6.0));
    CHECK(a.HA == doctest::Approx(2.0));
    f.A.value = 0.0;
    CHECK(code_of([&] { accel_features(f); }) == ErrorCode::ZeroDenominator);
  }

  TEST_CASE("beat features keep fields that survive") {
    auto f = sample_fiducials();
    f.A.value = 0.0;
    const auto bf = compute_beat_features(f, 170.0, 70.0);
    CHECK_FALSE(bf.get("BA").has_value());
    CHECK_FALSE(bf.get("ARI").has_value());
    CHECK(bf.get("RI").has_value());
    CHECK(bf.get("IPA").has_value());
    CHECK_FALSE(bf.exclusions.empty());
  }

  TEST_CASE("median aggregation") {
    std::vector<BeatFeatures> beats{with_ppt(1.0), with_ppt(2.0), with_ppt(100.0)};
    SampleMeta meta;
    meta.height_cm = 170.0;
    meta.age = 40.0;
    const auto s = aggregate_sample(beats, SpectralBands{}, meta);
    CHECK(s.get("PPT") == 2.0);
    CHECK(s.get("HR") == 62.0);
    CHECK(s.get("Height") == 170.0);
    CHECK(std::isnan(s.get("RI")));
    CHECK(s.n_beats_used == 3);

    const auto one = aggregate_sample(std::vector<BeatFeatures>{with_ppt(0.3)}, SpectralBands{}, meta);
    CHECK(one.get("PPT") == 0.3);

    beats[2].set("IPA", std::nullopt);
    const auto two = aggregate_sample(beats, SpectralBands{}, meta);
    CHECK(two.get("IPA") == doctest::Approx(3.0));
    CHECK(two.field_counts[static_cast<std::size_t>(beat_feature_index("IPA"))] == 2);
  }

  TEST_CASE("aggregation is permutation invariant") {
    std::vector<BeatFeatures> beats;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.1, 0.5);
    for (int i = 0; i < 10; ++i) beats.push_back(with_ppt(u(gen)));
    const auto ref = aggregate_sample(beats, SpectralBands{}, SampleMeta{});
    for (int r = 0; r < 5; ++r) {
      std::shuffle(beats.begin(), beats.end(), gen);
      const auto s = aggregate_sample(beats, SpectralBands{}, SampleMeta{});
      CHECK(s.get("PPT") == ref.get("PPT"));
      CHECK(s.get("IPA") == ref.get("IPA"));
    }
  }

  TEST_CASE("no contributing beat is an error") {
    CHECK(code_of([] { aggregate_sample(std::vector<BeatFeatures>(3), SpectralBands{}, SampleMeta{}); }) ==
          ErrorCode::NoValidBeats);
  }

  TEST_CASE("features CSV header order") {
    CHECK(features_csv_header() ==
          "sample_id,subject_id,Height,HR,Age,SI,RI,ERI,ARI,PPT,AI,CT,NT,DT,IPA,RCA,RDA,BA,EA,FA,GA,HA,"
          "PSD1,PSD2,PSD3,PSD4,PSD5,PSD6,NHA,IHAR,SBP,DBP\n");
  }
}
