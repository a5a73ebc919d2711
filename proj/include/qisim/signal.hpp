// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qisim {

// Canonical rates for the two simulation domains.
inline constexpr double kEnvelopeRate = 100e3;
inline constexpr double kCarrierRate = 2e6;

enum class Unit { Volts, Amperes, Watts, Dimensionless };

std::string_view unit_tag(Unit u);
// Throws std::invalid_argument on an unknown tag.
Unit parse_unit(std::string_view tag);

// Uniformly sampled time series.
struct Trace {
  double sample_rate = 1.0;
  std::vector<double> samples;
  Unit unit = Unit::Dimensionless;
  double t0 = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate; }
};

// Throws std::invalid_argument when the rate is not positive or a sample is not finite.
void validate(const Trace& t);

// Magnitude STFT. magnitudes[m][k] is frame m, bin k (k = 0 .. window/2).
struct Spectrogram {
  std::size_t window_size = 0;
  std::size_t hop = 0;
  double sample_rate = 0.0;
  double t0 = 0.0;
  std::vector<std::vector<double>> magnitudes;

  double bin_width() const { return sample_rate / static_cast<double>(window_size); }
  double bin_freq(std::size_t k) const { return bin_width() * static_cast<double>(k); }
  // Centre time of frame m.
  double frame_time(std::size_t m) const;
  std::size_t frames() const { return magnitudes.size(); }
  std::size_t bins() const { return window_size / 2 + 1; }
};

Trace synth_sine(double amplitude, double freq, double duration, double sample_rate,
                 double phase = 0.0, Unit unit = Unit::Volts);

// Pointwise sum over the common length. Rates and units must match.
Trace superimpose(const Trace& a, const Trace& b);

Spectrogram stft(const Trace& t, std::size_t window_size, std::size_t hop);

// Rectify then 4th-order Butterworth low-pass at carrier_freq/5, scaled so a
// sine of amplitude A yields A. envelope_bandwidth, when positive, is checked
// against the carrier (ratio >= 10).
Trace envelope(const Trace& t, double carrier_freq, double envelope_bandwidth = 0.0);

// Mean-subtracted peak deviation relative to the mean, max|x/mean - 1|.
double relative_depth(const std::vector<double>& x);

void write_trace_csv(std::ostream& os, const Trace& t);
void write_trace_csv(const std::string& path, const Trace& t);
Trace read_trace_csv(std::istream& is);
Trace read_trace_csv(const std::string& path);

}  // namespace qisim
