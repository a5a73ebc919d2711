// SPDX-License-Identifier: Apache-2.0
#include "qisim/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qisim/dsp.hpp"
#include "qisim/fft.hpp"

namespace qisim {

using std::numbers::pi;
using cplx = std::complex<double>;

void SystemParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(V_ad, "V_ad");
  positive(R_cable, "R_cable");
  positive(C_bus, "C_bus");
  positive(R_eq, "R_eq");
  positive(C_p, "C_p");
  positive(C_s, "C_s");
  positive(L_p, "L_p");
  positive(L_s, "L_s");
  positive(M, "M");
  positive(tau_settle, "tau_settle");
  if (Z_ad < 0) throw std::invalid_argument("Z_ad must be non-negative");
  if (!(D > 0) || D > 1) throw std::invalid_argument("D must lie in (0, 1]");
  if (M > std::sqrt(L_p * L_s)) throw std::invalid_argument("M exceeds sqrt(L_p*L_s)");
  if (f_p < 110e3 || f_p > 205e3) throw std::invalid_argument("f_p outside the 110-205 kHz band");
  if (input_filter_cutoff < 0) throw std::invalid_argument("input_filter_cutoff must be non-negative");
}

double scaling_factor(const SystemParams& p, double f_i) {
  if (f_i < 0) throw std::invalid_argument("scaling_factor: negative frequency");
  const double num = p.R_eq + p.R_cable;
  const cplx den(p.R_eq + p.R_cable + p.Z_ad, 2.0 * pi * f_i * p.R_eq * (p.R_cable + p.Z_ad) * p.C_bus);
  return num / std::abs(den);
}

double interference_gain(const SystemParams& p, double f) {
  double g = scaling_factor(p, f);
  if (p.input_filter_cutoff > 0) g *= butterworth2_gain(f, p.input_filter_cutoff);
  return g;
}

Trace interference_waveform(const InterferenceSpec& i, double duration, double rate) {
  if (i.m_i < 0 || i.m_i >= 1) throw std::invalid_argument("interference depth must lie in [0, 1)");
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  Trace w;
  w.sample_rate = rate;
  w.samples.assign(n, 0.0);
  if (i.m_i == 0.0) return w;
  if (!i.waveform) {
    const double k = 2.0 * pi * i.f_i / rate;
    for (std::size_t s = 0; s < n; ++s) w.samples[s] = i.m_i * std::sin(k * static_cast<double>(s));
    return w;
  }
  const Trace& src = *i.waveform;
  if (src.sample_rate != rate) throw std::invalid_argument("interference waveform rate mismatch");
  if (src.samples.empty()) return w;
  for (std::size_t s = 0; s < n; ++s) w.samples[s] = i.m_i * src.samples[s % src.size()];
  return w;
}

Trace propagate_interference(const SystemParams& p, const Trace& relative) {
  Trace out = relative;
  out.samples = apply_spectral_gain(relative.samples, relative.sample_rate,
                                    [&](double f) { return interference_gain(p, f); });
  return out;
}

double bus_dc_voltage(const SystemParams& p) {
  return p.R_eq / (p.R_eq + p.R_cable + p.Z_ad) * p.V_ad;
}

Trace bus_voltage(const SystemParams& p, const InterferenceSpec& i, double duration, double rate) {
  Trace w = interference_waveform(i, duration, rate);
  Trace out;
  if (!i.waveform && p.input_filter_cutoff == 0.0) {
    // Closed form for a pure tone avoids FFT edge effects.
    const double k = scaling_factor(p, i.f_i);
    for (auto& v : w.samples) v *= k;
    out = std::move(w);
  } else if (!i.waveform) {
    const double k = interference_gain(p, i.f_i);
    for (auto& v : w.samples) v *= k;
    out = std::move(w);
  } else {
    out = propagate_interference(p, w);
  }
  const double vbus = bus_dc_voltage(p);
  for (auto& v : out.samples) v = vbus * (1.0 + v);
  out.unit = Unit::Volts;
  return out;
}

Trace inverter_staircase(double v_bus, double D, double f_p, double duration, double rate) {
  if (rate < 10.0 * f_p) throw std::invalid_argument("inverter_staircase: rate must be at least 10*f_p");
  if (D < 0 || D > 1) throw std::invalid_argument("inverter_staircase: duty out of range");
  Trace t;
  t.sample_rate = rate;
  t.unit = Unit::Volts;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  t.samples.resize(n);
  const double T = 1.0 / f_p;
  const double lo = T / 4.0 * (1.0 - D);
  const double hi = T / 4.0 * (1.0 + D);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = std::fmod(static_cast<double>(k) / rate, T);
    double v = 0.0;
    if (tau > lo && tau < hi)
      v = v_bus;
    else if (tau > lo + T / 2.0 && tau < hi + T / 2.0)
      v = -v_bus;
    t.samples[k] = v;
  }
  return t;
}

double inverter_fundamental(double v_bus, double D) {
  if (D < 0 || D > 1) throw std::invalid_argument("inverter_fundamental: duty out of range");
  return 4.0 / pi * std::sin(pi * D / 2.0) * v_bus;
}

std::complex<double> tank_impedance(const SystemParams& p) {
  if (!(p.f_p > 0)) throw std::invalid_argument("tank_impedance: f_p must be positive");
  const double w = 2.0 * pi * p.f_p;
  const cplx j(0.0, 1.0);
  const cplx z_rp = 1.0 / (j * w * p.C_p) + j * w * (p.L_p - p.M);
  const cplx z_rs = 1.0 / (j * w * p.C_s) + j * w * (p.L_s - p.M);
  const cplx a = p.Z_load + z_rs;
  const cplx b = j * w * p.M;
  if (std::abs(a + b) == 0.0) {
    if (std::abs(a) == 0.0 && std::abs(b) == 0.0) throw DegenerateCircuit("tank_impedance: both branches are zero");
    throw DegenerateCircuit("tank_impedance: parallel branches resonate to an open circuit");
  }
  return a * b / (a + b) + z_rp;
}

double phase_total(const SystemParams& p) { return -std::arg(tank_impedance(p)); }

double tx_current_amplitude(const SystemParams& p) {
  return 4.0 * bus_dc_voltage(p) * std::sin(pi * p.D / 2.0) / (pi * std::abs(tank_impedance(p)));
}

Trace tx_coil_current(const SystemParams& p, const InterferenceSpec& i, double duration, double rate) {
  const double I_tx = tx_current_amplitude(p);
  const double phi = phase_total(p);
  Trace w = interference_waveform(i, duration, rate);
  if (!i.waveform) {
    const double k = interference_gain(p, i.f_i);
    for (auto& v : w.samples) v *= k;
  } else {
    w = propagate_interference(p, w);
  }
  Trace out;
  out.sample_rate = rate;
  out.unit = Unit::Amperes;
  out.samples.resize(w.size());
  const double k = 2.0 * pi * p.f_p / rate;
  for (std::size_t s = 0; s < w.size(); ++s)
    out.samples[s] = I_tx * (1.0 + w.samples[s]) * std::sin(k * static_cast<double>(s) + phi);
  return out;
}

BusCurrent bus_current(const SystemParams& p, double I_tx) {
  const double c = std::cos(phase_total(p));
  if (std::fabs(c) < 1e-12) throw DegenerateCircuit("bus_current: purely reactive load (cos phi = 0)");
  BusCurrent b;
  b.dc = 2.0 * I_tx * std::sin(pi * p.D / 2.0) * c / pi;
  b.ac = b.dc / c;
  b.freq = 2.0 * p.f_p;
  return b;
}

double adapter_ripple_amplitude(const SystemParams& p, double I_bus_dc, double phi_total) {
  const double c = std::cos(phi_total);
  if (std::fabs(c) < 1e-12) throw DegenerateCircuit("adapter_ripple: purely reactive load (cos phi = 0)");
  const cplx den(1.0, 4.0 * pi * p.f_p * p.C_bus * (p.R_cable + p.Z_ad));
  return p.Z_ad * I_bus_dc / (c * std::abs(den));
}

Trace adapter_ripple(const SystemParams& p, double I_bus_dc, double phi_total, double duration, double rate) {
  const double amp = adapter_ripple_amplitude(p, I_bus_dc, phi_total);
  if (2.0 * p.f_p >= rate / 2.0) throw std::invalid_argument("adapter_ripple: rate too low for 2*f_p");
  Trace t;
  t.sample_rate = rate;
  t.unit = Unit::Volts;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  t.samples.resize(n);
  const double k = 4.0 * pi * p.f_p / rate;
  for (std::size_t s = 0; s < n; ++s) t.samples[s] = amp * std::sin(k * static_cast<double>(s) + phi_total);
  return t;
}

Trace load_change_trace(const SystemParams& p, const Trace& bus_current) {
  Trace out;
  out.sample_rate = bus_current.sample_rate;
  out.t0 = bus_current.t0;
  out.unit = Unit::Volts;
  out.samples = leaky_difference(bus_current.samples, p.tau_settle, bus_current.sample_rate);
  for (auto& v : out.samples) v *= -p.Z_ad;
  return out;
}

Trace load_change_response(const SystemParams& p, double step, double rate, double step_time, double duration) {
  Trace i;
  i.sample_rate = rate;
  i.unit = Unit::Amperes;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  const auto k0 = static_cast<std::size_t>(std::llround(step_time * rate));
  i.samples.assign(n, 0.0);
  for (std::size_t k = k0; k < n; ++k) i.samples[k] = step;
  return load_change_trace(p, i);
}

Trace countermeasure_filter(const Trace& t, double cutoff) {
  if (!(cutoff > 0) || cutoff >= t.sample_rate / 2) throw std::invalid_argument("countermeasure cutoff out of range");
  Trace out = t;
  out.samples = apply_spectral_gain(t.samples, t.sample_rate, [&](double f) { return butterworth2_gain(f, cutoff); });
  return out;
}

double transmitted_power(const SystemParams& p, double duty) {
  SystemParams q = p;
  q.D = std::clamp(duty, 1e-9, 1.0);
  const double v_tx = inverter_fundamental(bus_dc_voltage(q), q.D);
  return 0.5 * v_tx * tx_current_amplitude(q) * std::cos(phase_total(q));
}

double duty_for_power(const SystemParams& p, double power) {
  const double pmax = transmitted_power(p, 1.0);
  if (power <= 0) return 0.0;
  if (power >= pmax) return 1.0;
  // P(D) = pmax * sin^2(pi D / 2)
  return 2.0 / pi * std::asin(std::sqrt(power / pmax));
}

}  // namespace qisim
