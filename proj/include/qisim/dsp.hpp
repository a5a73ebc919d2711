// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace qisim {

// Direct-form-II-transposed second-order section.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double z1 = 0, z2 = 0;

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
  // Sets the state to the steady response for a constant input x.
  void settle(double x);
};

// Bilinear-transform low-pass section with quality factor q.
Biquad lowpass_section(double cutoff, double q, double sample_rate);

// Cascade of sections realizing an even-order Butterworth low-pass.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff, double sample_rate);

std::vector<double> filter_cascade(std::vector<Biquad> sections, const std::vector<double>& x,
                                   bool settle_on_first = true);

// 2nd-order Butterworth magnitude |H(f)| = 1/sqrt(1 + (f/fc)^4).
double butterworth2_gain(double f, double cutoff);

// y[n] = a*y[n-1] + (x[n] - x[n-1]), a = exp(-1/(tau*rate)), x[-1] = x[0].
std::vector<double> leaky_difference(const std::vector<double>& x, double tau, double sample_rate);

// Full linear convolution truncated to x's length, centred on the kernel midpoint.
std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& kernel);

double median(std::vector<double> v);
// Linear-interpolated percentile, p in [0, 100].
double percentile(std::vector<double> v, double p);
double mean(const std::vector<double>& v);

}  // namespace qisim
