// SPDX-License-Identifier: Apache-2.0
#include "qisim/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace qisim {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  if (!in || !out) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  std::memcpy(in, x.data(), n * sizeof(double));
  fftw_execute(plan);
  std::vector<std::complex<double>> X(n / 2 + 1);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] = {out[k][0], out[k][1]};
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return X;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& X, std::size_t n) {
  if (n == 0) return {};
  if (X.size() != n / 2 + 1) throw std::invalid_argument("irfft: bin count does not match length");
  fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
  double* out = fftw_alloc_real(n);
  if (!in || !out) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  for (std::size_t k = 0; k < X.size(); ++k) {
    in[k][0] = X[k].real();
    in[k][1] = X[k].imag();
  }
  fftw_execute(plan);
  std::vector<double> x(out, out + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : x) v *= scale;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return x;
}

}  // namespace qisim
