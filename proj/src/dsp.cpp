// SPDX-License-Identifier: Apache-2.0
#include "qisim/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace qisim {

void Biquad::settle(double x) {
  const double gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
  const double y = gain * x;
  z2 = b2 * x - a2 * y;
  z1 = b1 * x - a1 * y + z2;
}

Biquad lowpass_section(double cutoff, double q, double sample_rate) {
  if (cutoff <= 0 || cutoff >= sample_rate / 2) throw std::invalid_argument("lowpass cutoff out of range");
  const double w0 = 2.0 * std::numbers::pi * cutoff / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = (1.0 - c) / 2.0 / a0;
  s.b1 = (1.0 - c) / a0;
  s.b2 = s.b0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff, double sample_rate) {
  if (order <= 0 || order % 2 != 0) throw std::invalid_argument("butterworth order must be even");
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order);
    sections.push_back(lowpass_section(cutoff, 1.0 / (2.0 * std::sin(theta)), sample_rate));
  }
  return sections;
}

std::vector<double> filter_cascade(std::vector<Biquad> sections, const std::vector<double>& x,
                                   bool settle_on_first) {
  std::vector<double> y(x);
  if (y.empty()) return y;
  for (auto& s : sections) {
    if (settle_on_first) s.settle(y.front());
    for (auto& v : y) v = s.step(v);
  }
  return y;
}

double butterworth2_gain(double f, double cutoff) {
  const double r = f / cutoff;
  return 1.0 / std::sqrt(1.0 + r * r * r * r);
}

std::vector<double> leaky_difference(const std::vector<double>& x, double tau, double sample_rate) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  const double a = std::exp(-1.0 / (tau * sample_rate));
  double prev = x.front();
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    acc = a * acc + (x[n] - prev);
    prev = x[n];
    y[n] = acc;
  }
  return y;
}

std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& kernel) {
  std::vector<double> y(x.size(), 0.0);
  if (kernel.empty()) return y;
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto m = static_cast<std::ptrdiff_t>(kernel.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < m; ++k) {
      const std::ptrdiff_t j = i + half - k;
      if (j >= 0 && j < n) acc += kernel[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

double median(std::vector<double> v) { return percentile(std::move(v), 50.0); }

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace qisim
