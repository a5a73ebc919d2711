// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "qisim/dsp.hpp"
#include "qisim/fft.hpp"
#include "qisim/signal.hpp"

using namespace qisim;

TEST_SUITE("signal") {

TEST_CASE("unit tags round-trip and reject unknown tags") {
  for (Unit u : {Unit::Volts, Unit::Amperes, Unit::Watts, Unit::Dimensionless}) CHECK(parse_unit(unit_tag(u)) == u);
  CHECK_THROWS_AS(parse_unit("furlongs"), std::invalid_argument);
}

TEST_CASE("synth_sine matches the closed form sample by sample") {
  const auto t = synth_sine(2.5, 1000.0, 0.01, 100e3, 0.3);
  REQUIRE(t.size() == 1000);
  CHECK(t.unit == Unit::Volts);
  for (std::size_t k = 0; k < t.size(); k += 37) {
    const double expect = 2.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(k) / 100e3 + 0.3);
    CHECK(t.samples[k] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("validate rejects bad traces") {
  Trace t;
  t.sample_rate = 0.0;
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
  t.sample_rate = 10.0;
  t.samples = {1.0, std::nan("")};
  CHECK_THROWS_AS(validate(t), std::invalid_argument);
}

TEST_CASE("superimpose adds over the common length and checks compatibility") {
  const auto a = synth_sine(1.0, 100.0, 0.02, 10e3);
  const auto b = synth_sine(1.0, 100.0, 0.01, 10e3, std::numbers::pi);
  const auto s = superimpose(a, b);
  CHECK(s.size() == b.size());
  for (double v : s.samples) CHECK(std::fabs(v) < 1e-12);
  auto c = b;
  c.sample_rate = 20e3;
  CHECK_THROWS(superimpose(a, c));
  c = b;
  c.unit = Unit::Amperes;
  CHECK_THROWS(superimpose(a, c));
}

TEST_CASE("CSV round-trip is exact") {
  auto t = synth_sine(0.123456789, 777.0, 0.005, 48e3, 1.0, Unit::Amperes);
  t.t0 = 0.25;
  std::stringstream ss;
  write_trace_csv(ss, t);
  const auto r = read_trace_csv(ss);
  CHECK(r.sample_rate == t.sample_rate);
  CHECK(r.unit == t.unit);
  CHECK(r.t0 == t.t0);
  CHECK(r.samples == t.samples);
}

TEST_CASE("CSV reader rejects malformed input") {
  std::stringstream no_header("1\n2\n");
  CHECK_THROWS_AS(read_trace_csv(no_header), std::invalid_argument);
  std::stringstream no_rate("# unit=V\n1\n");
  CHECK_THROWS_AS(read_trace_csv(no_rate), std::invalid_argument);
  std::stringstream bad_sample("# sample_rate=10\n1\nabc\n");
  CHECK_THROWS_AS(read_trace_csv(bad_sample), std::invalid_argument);
}

TEST_CASE("stft places a tone in the right bin") {
  const double fs = 8192.0;
  const auto t = synth_sine(1.0, 1000.0, 1.0, fs);
  const auto s = stft(t, 1024, 256);
  CHECK(s.frames() == (t.size() - 1024) / 256 + 1);
  CHECK(s.bins() == 513);
  for (std::size_t m = 0; m < s.frames(); m += 5) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.bins(); ++k)
      if (s.magnitudes[m][k] > s.magnitudes[m][best]) best = k;
    CHECK(s.bin_freq(best) == doctest::Approx(1000.0));
    // Periodic Hann: coherent gain 1/2, one-sided amplitude A*N/4.
    CHECK(s.magnitudes[m][best] == doctest::Approx(1024.0 / 4.0).epsilon(1e-6));
  }
  CHECK_THROWS(stft(synth_sine(1, 1, 0.01, fs), 1024, 256));
}

TEST_CASE("envelope of a modulated carrier recovers amplitude and modulation") {
  const double fc = 140e3, fs = 2e6, fm = 1000.0, m = 0.3;
  Trace t;
  t.sample_rate = fs;
  t.samples.resize(200000);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double tt = static_cast<double>(k) / fs;
    t.samples[k] = 3.0 * (1.0 + m * std::sin(2 * std::numbers::pi * fm * tt)) * std::sin(2 * std::numbers::pi * fc * tt);
  }
  const auto e = envelope(t, fc);
  const std::vector<double> mid(e.samples.begin() + 40000, e.samples.end() - 40000);
  CHECK(mean(mid) == doctest::Approx(3.0).epsilon(0.01));
  CHECK(relative_depth(mid) == doctest::Approx(m).epsilon(0.03));
  CHECK_THROWS(envelope(t, 1.5e6));
  CHECK_THROWS(envelope(t, fc, 20e3));
}

TEST_CASE("relative_depth is max deviation from the mean") {
  CHECK(relative_depth({1.0, 1.0, 1.0}) == 0.0);
  CHECK(relative_depth({0.5, 1.5}) == doctest::Approx(0.5));
  CHECK(relative_depth({}) == 0.0);
}

TEST_CASE("rfft/irfft round-trip and Parseval") {
  std::vector<double> x(1000);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(0.1 * static_cast<double>(k * k % 97));
  const auto X = rfft(x);
  const auto y = irfft(X, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(y[k] == doctest::Approx(x[k]).epsilon(1e-12));
  double et = 0, ef = 0;
  for (double v : x) et += v * v;
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double w = (k == 0 || k == x.size() / 2) ? 1.0 : 2.0;
    ef += w * std::norm(X[k]);
  }
  CHECK(ef / static_cast<double>(x.size()) == doctest::Approx(et).epsilon(1e-9));
}

TEST_CASE("butterworth cascade has unity DC gain and -3 dB at cutoff") {
  const double fs = 100e3, fc = 2e3;
  std::vector<double> dc(2000, 1.0);
  const auto y = filter_cascade(butterworth_lowpass(4, fc, fs), dc);
  CHECK(y.back() == doctest::Approx(1.0).epsilon(1e-9));
  const auto tone = synth_sine(1.0, fc, 0.2, fs);
  const auto z = filter_cascade(butterworth_lowpass(4, fc, fs), tone.samples);
  double peak = 0;
  for (std::size_t k = z.size() / 2; k < z.size(); ++k) peak = std::max(peak, std::fabs(z[k]));
  // Bilinear warping moves the corner slightly; allow 2%.
  CHECK(peak == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
  CHECK_THROWS(butterworth_lowpass(3, fc, fs));
}

TEST_CASE("median, percentile, mean") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == doctest::Approx(2.5));
  CHECK(percentile({0, 10}, 25) == doctest::Approx(2.5));
  CHECK(mean({1, 2, 3, 6}) == doctest::Approx(3.0));
}

}  // TEST_SUITE
