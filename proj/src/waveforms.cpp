// SPDX-License-Identifier: Apache-2.0
#include "qisim/waveforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qisim {

using std::numbers::pi;

Trace synth_voice(double duration, double rate) {
  struct Formant {
    double freq;
    double bandwidth;
  };
  constexpr std::array<Formant, 2> formants{{{300.0, 80.0}, {700.0, 100.0}}};
  constexpr double f0 = 110.0;
  Trace t;
  t.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  t.samples.assign(n, 0.0);
  // Harmonic amplitudes follow the formant resonances and spectral tilt.
  std::vector<double> amp;
  for (int k = 1; f0 * k <= 4000.0; ++k) {
    double a = 0.0;
    for (const auto& f : formants) {
      const double r = (f0 * k - f.freq) / (f.bandwidth / 2.0);
      a += 1.0 / std::sqrt(1.0 + r * r);
    }
    amp.push_back(a / (static_cast<double>(k) * k));
  }
  double phase = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double time = static_cast<double>(s) / rate;
    phase += 2.0 * pi * f0 * (1.0 + 0.05 * std::sin(2.0 * pi * 3.0 * time)) / rate;
    double v = 0.0;
    for (std::size_t k = 0; k < amp.size(); ++k) v += amp[k] * std::sin(static_cast<double>(k + 1) * phase);
    t.samples[s] = v * (0.55 + 0.45 * std::sin(2.0 * pi * 4.0 * time));
  }
  double peak = 0.0;
  for (double v : t.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0)
    for (auto& v : t.samples) v /= peak;
  return t;
}

Trace synth_chirp(double f0, double f1, double duration, double rate) {
  if (std::max(f0, f1) >= rate / 2) throw std::invalid_argument("synth_chirp: sweep exceeds Nyquist");
  Trace t;
  t.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  t.samples.resize(n);
  const double k = (f1 - f0) / duration;
  for (std::size_t s = 0; s < n; ++s) {
    const double time = static_cast<double>(s) / rate;
    t.samples[s] = std::sin(2.0 * pi * (f0 * time + 0.5 * k * time * time));
  }
  return t;
}

Trace named_waveform(const std::string& name, double f_i, double duration, double rate) {
  if (name == "voice") return synth_voice(duration, rate);
  if (name == "chirp") return synth_chirp(100.0, 5000.0, duration, rate);
  if (name == "sine") {
    Trace t = synth_sine(1.0, f_i, duration, rate, 0.0, Unit::Dimensionless);
    return t;
  }
  throw std::invalid_argument("unknown waveform '" + name + "'");
}

}  // namespace qisim
