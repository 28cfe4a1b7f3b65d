#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pulsewave/signal.hpp"

namespace pulsewave {

struct RawPsd {
  std::vector<double> freq;   // Hz, 0 .. Nyquist
  std::vector<double> power;  // per Hz
};

struct SpectrumOptions {
  bool hann = false;
};

struct HarmonicEdges {
  std::array<double, 7> edges{};  // band k spans [edges[k], edges[k + 1]]
  std::array<double, 7> peaks{};  // located peak frequency of harmonics 1..7
  std::array<bool, 7> missing{};  // harmonic fell back to k * f0
  double f0 = 0.0;
};

struct SpectralBands {
  RawPsd raw_psd;
  std::array<double, 7> band_edges{};
  std::array<double, 6> raw{};  // band areas before normalization
  std::array<double, 6> psd{};
  double nha = 0.0;
  double ihar = 0.0;
};

// Removes the least-squares line from x.
std::vector<double> detrend_linear(std::span<const double> x);

/// Periodogram |X_k|^2 / (N fs) of the linearly detrended signal for
/// k = 0 .. N/2. Throws Error(TooShort) below 256 samples.
RawPsd power_spectrum(const CompositeSignal& signal, const SpectrumOptions& opts = {});
RawPsd power_spectrum(std::span<const double> x, double fs, const SpectrumOptions& opts = {});

/// Locates harmonic peaks in k*f0 +- f0/2 (k = 1..7) and places band edges
/// at f0/2 and at midpoints between successive peaks.
/// Throws Error(Precondition) if the spectrum stops short of 7*f0.
HarmonicEdges segment_harmonics(const RawPsd& psd, double f0);

// Trapezoidal area of the PSD between lo and hi, interpolating at the ends.
double band_area(const RawPsd& psd, double lo, double hi);

/// Normalized band strengths, NHA and IHAR. Throws Error(ZeroTotalPower)
/// or Error(Precondition) for non-positive IPA.
SpectralBands psd_features(const RawPsd& psd, const std::array<double, 7>& band_edges, double ipa);

std::string psd_to_csv(const RawPsd& psd);
std::string band_edges_to_json(const HarmonicEdges& edges);

}  // namespace pulsewave
