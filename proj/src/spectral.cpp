#include "pulsewave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <json.hpp>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

namespace {
// FFTW planning is not re-entrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<double> detrend_linear(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(x.begin(), x.end());
  if (n < 2) {
    for (double& v : out) v = 0.0;
    return out;
  }
  const double tm = 0.5 * static_cast<double>(n - 1);
  double xm = 0.0;
  for (double v : x) xm += v;
  xm /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tm;
    sxy += dt * (x[i] - xm);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - xm - slope * (static_cast<double>(i) - tm);
  return out;
}

RawPsd power_spectrum(std::span<const double> x, double fs, const SpectrumOptions& opts) {
  const std::size_t n = x.size();
  if (n < 256) throw Error(ErrorCode::TooShort, "spectrum needs at least 256 samples, got " + std::to_string(n));
  if (!(fs > 0.0)) throw Error(ErrorCode::Precondition, "sample rate must be positive");
  auto data = detrend_linear(x);
  double wnorm = static_cast<double>(n);
  if (opts.hann) {
    wnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
      data[i] *= w;
      wnorm += w * w;
    }
  }
  const std::size_t nb = n / 2 + 1;
  std::vector<std::complex<double>> spec(nb);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), data.data(),
                                reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  RawPsd out;
  out.freq.resize(nb);
  out.power.resize(nb);
  const double scale = 1.0 / (wnorm * fs);
  for (std::size_t k = 0; k < nb; ++k) {
    out.freq[k] = static_cast<double>(k) * fs / static_cast<double>(n);
    out.power[k] = std::norm(spec[k]) * scale;
  }
  return out;
}

RawPsd power_spectrum(const CompositeSignal& signal, const SpectrumOptions& opts) {
  return power_spectrum(signal.z, signal.fs, opts);
}

HarmonicEdges segment_harmonics(const RawPsd& psd, double f0) {
  if (!(f0 > 0.0)) throw Error(ErrorCode::Precondition, "fundamental frequency must be positive");
  if (psd.freq.size() < 3 || psd.freq.back() < 7.0 * f0)
    throw Error(ErrorCode::Precondition, "spectrum does not reach the 7th harmonic");
  HarmonicEdges h;
  h.f0 = f0;
  const auto& f = psd.freq;
  const auto& p = psd.power;
  for (int k = 1; k <= 7; ++k) {
    const double lo = k * f0 - 0.5 * f0, hi = k * f0 + 0.5 * f0;
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      if (f[i] < lo) continue;
      if (f[i] > hi) break;
      if (p[i] > p[i - 1] && p[i] >= p[i + 1] && (!found || p[i] > p[best])) {
        best = i;
        found = true;
      }
    }
    h.peaks[k - 1] = found ? f[best] : k * f0;
    h.missing[k - 1] = !found;
  }
  h.edges[0] = 0.5 * f0;
  for (int k = 1; k < 7; ++k) h.edges[k] = 0.5 * (h.peaks[k - 1] + h.peaks[k]);
  return h;
}

double band_area(const RawPsd& psd, double lo, double hi) {
  const auto& f = psd.freq;
  const auto& p = psd.power;
  if (hi <= lo || f.size() < 2) return 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double a = std::max(lo, f[i]), b = std::min(hi, f[i + 1]);
    if (b <= a) continue;
    const double w = f[i + 1] - f[i];
    const double pa = p[i] + (p[i + 1] - p[i]) * (a - f[i]) / w;
    const double pb = p[i] + (p[i + 1] - p[i]) * (b - f[i]) / w;
    area += 0.5 * (pa + pb) * (b - a);
  }
  return area;
}

SpectralBands psd_features(const RawPsd& psd, const std::array<double, 7>& edges, double ipa) {
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw Error(ErrorCode::Precondition, "band edges must increase strictly");
  if (!(ipa > 0.0)) throw Error(ErrorCode::Precondition, "IPA must be positive");
  SpectralBands s;
  s.raw_psd = psd;
  s.band_edges = edges;
  double total = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    s.raw[i] = band_area(psd, edges[i], edges[i + 1]);
    total += s.raw[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroTotalPower, "no power in the harmonic bands");
  for (std::size_t i = 0; i < 6; ++i) s.psd[i] = s.raw[i] / total;
  s.nha = 1.0 - s.psd[0];
  s.ihar = s.psd[0] / ipa;
  return s;
}

std::string psd_to_csv(const RawPsd& psd) {
  std::string out = "freq_hz,power\n";
  for (std::size_t i = 0; i < psd.freq.size(); ++i) {
    out += io::format_double(psd.freq[i]);
    out += ',';
    out += io::format_double(psd.power[i]);
    out += '\n';
  }
  return out;
}

std::string band_edges_to_json(const HarmonicEdges& h) {
  nlohmann::json j;
  j["f0_hz"] = h.f0;
  j["edges_hz"] = h.edges;
  j["peaks_hz"] = h.peaks;
  j["missing"] = h.missing;
  return j.dump(2) + "\n";
}

}  // namespace pulsewave
