// SPDX-License-Identifier: Apache-2.0
#include "qisim/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qisim/dsp.hpp"
#include "qisim/fft.hpp"

namespace qisim {

std::string_view unit_tag(Unit u) {
  switch (u) {
    case Unit::Volts: return "volts";
    case Unit::Amperes: return "amperes";
    case Unit::Watts: return "watts";
    case Unit::Dimensionless: return "dimensionless";
  }
  return "dimensionless";
}

Unit parse_unit(std::string_view tag) {
  if (tag == "volts") return Unit::Volts;
  if (tag == "amperes") return Unit::Amperes;
  if (tag == "watts") return Unit::Watts;
  if (tag == "dimensionless") return Unit::Dimensionless;
  throw std::invalid_argument("unknown unit tag: " + std::string(tag));
}

void validate(const Trace& t) {
  if (!(t.sample_rate > 0) || !std::isfinite(t.sample_rate))
    throw std::invalid_argument("trace sample rate must be positive");
  for (double v : t.samples)
    if (!std::isfinite(v)) throw std::invalid_argument("trace contains a non-finite sample");
}

double Spectrogram::frame_time(std::size_t m) const {
  return t0 + (static_cast<double>(m * hop) + static_cast<double>(window_size) / 2.0) / sample_rate;
}

Trace synth_sine(double amplitude, double freq, double duration, double sample_rate, double phase,
                 Unit unit) {
  if (!(sample_rate > 0)) throw std::invalid_argument("synth_sine: sample rate must be positive");
  if (freq < 0 || freq >= sample_rate / 2) throw std::invalid_argument("synth_sine: frequency aliases");
  if (duration < 0) throw std::invalid_argument("synth_sine: negative duration");
  Trace t;
  t.sample_rate = sample_rate;
  t.unit = unit;
  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  t.samples.resize(n);
  const double w = 2.0 * std::numbers::pi * freq / sample_rate;
  for (std::size_t k = 0; k < n; ++k) t.samples[k] = amplitude * std::sin(w * static_cast<double>(k) + phase);
  return t;
}

Trace superimpose(const Trace& a, const Trace& b) {
  if (a.sample_rate != b.sample_rate) throw std::invalid_argument("superimpose: sample rate mismatch");
  if (a.unit != b.unit) throw std::invalid_argument("superimpose: unit mismatch");
  Trace out;
  out.sample_rate = a.sample_rate;
  out.unit = a.unit;
  out.t0 = a.t0;
  const std::size_t n = std::min(a.size(), b.size());
  out.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.samples[k] = a.samples[k] + b.samples[k];
  return out;
}

Spectrogram stft(const Trace& t, std::size_t window_size, std::size_t hop) {
  if (window_size < 2) throw std::invalid_argument("stft: window too small");
  if (hop < 1) throw std::invalid_argument("stft: hop must be at least 1");
  if (t.size() < window_size) throw std::invalid_argument("stft: trace shorter than one window");
  Spectrogram s;
  s.window_size = window_size;
  s.hop = hop;
  s.sample_rate = t.sample_rate;
  s.t0 = t.t0;
  // Periodic Hann window.
  std::vector<double> w(window_size);
  for (std::size_t n = 0; n < window_size; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(window_size));
  std::vector<double> frame(window_size);
  for (std::size_t start = 0; start + window_size <= t.size(); start += hop) {
    for (std::size_t n = 0; n < window_size; ++n) frame[n] = t.samples[start + n] * w[n];
    const auto X = rfft(frame);
    std::vector<double> mag(X.size());
    for (std::size_t k = 0; k < X.size(); ++k) mag[k] = std::abs(X[k]);
    s.magnitudes.push_back(std::move(mag));
  }
  return s;
}

Trace envelope(const Trace& t, double carrier_freq, double envelope_bandwidth) {
  if (!(carrier_freq > 0)) throw std::invalid_argument("envelope: carrier must be positive");
  if (carrier_freq >= t.sample_rate / 2) throw std::invalid_argument("envelope: carrier above Nyquist");
  if (envelope_bandwidth > 0 && carrier_freq / envelope_bandwidth < 10.0)
    throw std::invalid_argument("envelope: carrier must exceed envelope bandwidth by 10x");
  Trace out;
  out.sample_rate = t.sample_rate;
  out.unit = t.unit;
  out.t0 = t.t0;
  std::vector<double> rect(t.samples.size());
  std::transform(t.samples.begin(), t.samples.end(), rect.begin(), [](double v) { return std::fabs(v); });
  out.samples = filter_cascade(butterworth_lowpass(4, carrier_freq / 5.0, t.sample_rate), rect, false);
  // Mean of |sin| is 2/pi.
  for (auto& v : out.samples) v *= std::numbers::pi / 2.0;
  return out;
}

double relative_depth(const std::vector<double>& x) {
  const double m = mean(x);
  if (x.empty() || m == 0.0) return 0.0;
  double dev = 0.0;
  for (double v : x) dev = std::max(dev, std::fabs(v / m - 1.0));
  return dev;
}

void write_trace_csv(std::ostream& os, const Trace& t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", t.sample_rate);
  os << "# sample_rate=" << buf << " unit=" << unit_tag(t.unit);
  std::snprintf(buf, sizeof buf, "%.17g", t.t0);
  os << " t0=" << buf << "\n";
  for (double v : t.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << '\n';
  }
}

void write_trace_csv(const std::string& path, const Trace& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write trace file: " + path);
  write_trace_csv(os, t);
  if (!os) throw std::runtime_error("error while writing trace file: " + path);
}

Trace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("#", 0) != 0)
    throw std::invalid_argument("trace csv: missing header line");
  Trace t;
  bool have_rate = false;
  std::istringstream hdr(line.substr(1));
  std::string field;
  while (hdr >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("trace csv: malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "sample_rate") {
      t.sample_rate = std::stod(val);
      have_rate = true;
    } else if (key == "unit") {
      t.unit = parse_unit(val);
    } else if (key == "t0") {
      t.t0 = std::stod(val);
    }
  }
  if (!have_rate) throw std::invalid_argument("trace csv: header lacks sample_rate");
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(0, comma);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) throw std::invalid_argument("trace csv: bad sample '" + cell + "'");
    t.samples.push_back(v);
  }
  validate(t);
  return t;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace_csv(is);
}

}  // namespace qisim
