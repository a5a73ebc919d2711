// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

namespace qisim {

// Real-to-complex forward DFT, unnormalized. Returns n/2+1 bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Inverse of rfft, normalized so irfft(rfft(x), x.size()) == x.
std::vector<double> irfft(const std::vector<std::complex<double>>& X, std::size_t n);

// Zero-phase filtering: multiplies each bin by gain(f) and transforms back.
// The signal is treated as periodic.
template <typename Gain>
std::vector<double> apply_spectral_gain(const std::vector<double>& x, double sample_rate, Gain gain) {
  if (x.empty()) return {};
  auto X = rfft(x);
  const double df = sample_rate / static_cast<double>(x.size());
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= gain(df * static_cast<double>(k));
  return irfft(X, x.size());
}

}  // namespace qisim
