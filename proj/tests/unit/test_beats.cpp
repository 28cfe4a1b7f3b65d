#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pulsewave/beats.hpp"
#include "pulsewave/synth.hpp"

using namespace pulsewave;
using testutil::code_of;

namespace {

CompositeSignal pulse_train(double bpm, double fps, double seconds) {
  SessionSpec spec;
  spec.hr_mean = bpm;
  spec.fps = fps;
  spec.duration_s = seconds;
  const auto s = generate_session(spec);
  return compose_signal(s.frames, 100);
}

}  // namespace

TEST_SUITE("beats") {
  TEST_CASE("derivative of a ramp is exact") {
    std::vector<double> z;
    for (int i = 0; i < 20; ++i) z.push_back(2.0 * i / 30.0);
    const auto d = first_derivative(testutil::signal_from(z, 30.0));
    for (double v : d) CHECK(v == doctest::Approx(2.0));
  }

  TEST_CASE("derivative of a sine is second-order accurate") {
    const double fs = 100.0, h = 1.0 / fs;
    std::vector<double> z;
    for (int i = 0; i < 200; ++i) z.push_back(std::sin(i * h));
    const auto d = first_derivative(testutil::signal_from(z, fs));
    for (int i = 1; i < 199; ++i) CHECK(std::fabs(d[i] - std::cos(i * h)) <= h * h / 6.0 + 1e-12);
  }

  TEST_CASE("derivative needs three samples") {
    CHECK(code_of([] { first_derivative(testutil::signal_from({0.0, 1.0}, 10.0)); }) == ErrorCode::Length);
  }

  TEST_CASE("60 bpm train at 30 fps over 120 s") {
    const auto sig = pulse_train(60.0, 30.0, 120.0);
    const auto beats = segment_beats(sig);
    CHECK(beats.beats.size() >= 118);
    CHECK(beats.beats.size() <= 121);
    for (std::size_t k = 1; k < beats.beats.size(); ++k) {
      const auto gap = static_cast<long>(beats.beats[k].peak_idx) - static_cast<long>(beats.beats[k - 1].peak_idx);
      CHECK(std::labs(gap - 30) <= 1);
    }
  }

  TEST_CASE("median beat duration matches the period") {
    const auto sig = pulse_train(72.0, 30.0, 60.0);
    const auto beats = segment_beats(sig);
    std::vector<double> dur;
    for (const auto& b : beats.beats) dur.push_back(static_cast<double>(b.end_idx - b.start_idx) / sig.fs);
    CHECK(std::fabs(median(dur) - 60.0 / 72.0) <= 1.0 / 30.0);
  }

  TEST_CASE("constant signal has no beats") {
    CHECK(code_of([] { segment_beats(testutil::signal_from(std::vector<double>(300, 1.0), 30.0)); }) ==
          ErrorCode::NoBeats);
  }

  TEST_CASE("two pulses give one beat") {
    std::vector<double> z;
    for (int i = 0; i < 120; ++i) {
      const double t = i / 30.0;
      z.push_back(0.4 * std::exp(-t / 0.3) + testutil::gauss(t, 1.3, 0.1) + testutil::gauss(t, 2.6, 0.1));
    }
    const auto beats = segment_beats(testutil::signal_from(z, 30.0));
    CHECK(beats.beats.size() == 1);
  }

  TEST_CASE("segmentation ignores a constant offset") {
    auto sig = pulse_train(75.0, 30.0, 30.0);
    auto moved = sig;
    for (double& v : moved.z) v += 5.0;
    const auto a = segment_beats(sig), b = segment_beats(moved);
    REQUIRE(a.beats.size() == b.beats.size());
    for (std::size_t k = 0; k < a.beats.size(); ++k) {
      CHECK(a.beats[k].start_idx == b.beats[k].start_idx);
      CHECK(a.beats[k].end_idx == b.beats[k].end_idx);
    }
  }

  TEST_CASE("normalized beats span [0, 1]") {
    const auto sig = pulse_train(75.0, 30.0, 30.0);
    const auto beats = normalize_amplitude(segment_beats(sig), sig);
    REQUIRE_FALSE(beats.beats.empty());
    for (const auto& b : beats.beats) {
      CHECK(*std::min_element(b.samples.begin(), b.samples.end()) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(*std::max_element(b.samples.begin(), b.samples.end()) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(b.start_idx < b.peak_idx);
      CHECK(b.peak_idx < b.end_idx);
    }
  }

  TEST_CASE("normalization is scale invariant") {
    const auto sig = pulse_train(75.0, 30.0, 30.0);
    const auto seg = segment_beats(sig);
    auto x4 = sig, x17 = sig;
    for (double& v : x4.z) v *= 4.0;
    for (double& v : x17.z) v *= 1.7;
    const auto a = normalize_amplitude(seg, sig), b = normalize_amplitude(seg, x4), c = normalize_amplitude(seg, x17);
    for (std::size_t k = 0; k < a.beats.size(); ++k)
      for (std::size_t j = 0; j < a.beats[k].size(); ++j) {
        CHECK(a.beats[k].samples[j] == b.beats[k].samples[j]);
        CHECK(std::fabs(a.beats[k].samples[j] - c.beats[k].samples[j]) < 1e-12);
      }
  }

  TEST_CASE("linear drift is removed") {
    std::vector<double> clean, drifted;
    for (int i = 0; i <= 60; ++i) {
      const double t = i / 30.0;
      const double v = testutil::gauss(t, 0.6, 0.12) + 0.4 * testutil::gauss(t, 1.2, 0.15);
      clean.push_back(v);
      drifted.push_back(v + 0.8 * t - 0.1);
    }
    BeatSeries seg;
    Beat b;
    b.start_idx = 0;
    b.peak_idx = 15;
    b.end_idx = 60;
    b.hr_bpm = 30.0;
    seg.beats.push_back(b);
    const auto a = normalize_amplitude(seg, testutil::signal_from(clean, 30.0));
    const auto d = normalize_amplitude(seg, testutil::signal_from(drifted, 30.0));
    for (std::size_t j = 0; j < clean.size(); ++j)
      CHECK(std::fabs(a.beats[0].samples[j] - d.beats[0].samples[j]) <= 0.02);
  }

  TEST_CASE("flat beat is dropped with a reason") {
    BeatSeries seg;
    Beat b;
    b.start_idx = 2;
    b.peak_idx = 5;
    b.end_idx = 20;
    seg.beats.push_back(b);
    const auto out = normalize_amplitude(seg, testutil::signal_from(std::vector<double>(30, 3.0), 30.0));
    CHECK(out.beats.empty());
    REQUIRE(out.dropped.size() == 1);
    CHECK(out.dropped[0].reason == "zero_height");
  }

  TEST_CASE("HR filter") {
    BeatSeries s;
    for (double hr : {75.0, 200.0, 150.0, 150.0000001, 80.0}) {
      Beat b;
      b.hr_bpm = hr;
      s.beats.push_back(b);
    }
    const auto f = filter_hr(s);
    REQUIRE(f.beats.size() == 3);
    CHECK(f.beats[0].hr_bpm == 75.0);
    CHECK(f.beats[1].hr_bpm == 150.0);
    CHECK(f.beats[2].hr_bpm == 80.0);
    CHECK(f.dropped.size() == 2);
    const auto again = filter_hr(f);
    CHECK(again.beats.size() == f.beats.size());

    BeatSeries all75;
    for (int i = 0; i < 4; ++i) {
      Beat b;
      b.hr_bpm = 75.0;
      all75.beats.push_back(b);
    }
    CHECK(filter_hr(all75).beats.size() == 4);
  }

  TEST_CASE("beats JSON lists dropped beats with reasons") {
    BeatSeries s;
    Beat b;
    b.start_idx = 1;
    b.peak_idx = 3;
    b.end_idx = 9;
    b.hr_bpm = 200.0;
    s.beats.push_back(b);
    const auto j = beats_to_json(filter_hr(s));
    CHECK(j.find("\"dropped_reason\": \"hr_above_max\"") != std::string::npos);
  }
}
