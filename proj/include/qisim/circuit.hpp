// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <optional>
#include <stdexcept>

#include "qisim/signal.hpp"

namespace qisim {

// Raised for physically degenerate operating points (e.g. a purely reactive load).
class DegenerateCircuit : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SystemParams {
  double V_ad = 12.0;      // nominal adapter output, V
  double Z_ad = 0.01;      // adapter Thevenin impedance, ohm
  double R_cable = 0.1;    // ohm
  double C_bus = 50e-6;    // F
  double R_eq = 5.0;       // ohm
  double C_p = 210e-9;     // F
  double C_s = 200e-9;     // F
  double L_p = 8e-6;       // H
  double L_s = 8e-6;       // H
  double M = 2.4e-6;       // H
  double D = 1.0;          // inverter duty
  double f_p = 140e3;      // Hz
  std::complex<double> Z_load{8.0, 0.0};
  // DC/DC input filter cutoff in Hz; 0 disables the countermeasure.
  double input_filter_cutoff = 0.0;
  // Settling time constant of the adapter's response to load steps.
  double tau_settle = 200e-6;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct InterferenceSpec {
  double m_i = 0.0;
  double f_i = 1000.0;
  // Arbitrary waveform normalized to peak 1; a sine at f_i when empty.
  std::optional<Trace> waveform;
};

double scaling_factor(const SystemParams& p, double f_i);

// Adapter-to-bus gain for an interference component at f, including the
// input filter when enabled.
double interference_gain(const SystemParams& p, double f);

// Dimensionless interference w(t)*m_i sampled at rate; loops an arbitrary
// waveform when it is shorter than the duration.
Trace interference_waveform(const InterferenceSpec& i, double duration, double rate);

// Propagates an adapter-side relative interference trace to the bus, scaling
// each spectral component by interference_gain.
Trace propagate_interference(const SystemParams& p, const Trace& relative);

double bus_dc_voltage(const SystemParams& p);
Trace bus_voltage(const SystemParams& p, const InterferenceSpec& i, double duration, double rate);

Trace inverter_staircase(double v_bus, double D, double f_p, double duration, double rate);
double inverter_fundamental(double v_bus, double D);

std::complex<double> tank_impedance(const SystemParams& p);
// -arg(Z_total)
double phase_total(const SystemParams& p);
// Peak coil current at the configured duty.
double tx_current_amplitude(const SystemParams& p);
Trace tx_coil_current(const SystemParams& p, const InterferenceSpec& i, double duration, double rate);

struct BusCurrent {
  double dc = 0.0;
  double ac = 0.0;
  double freq = 0.0;
};
BusCurrent bus_current(const SystemParams& p, double I_tx);

double adapter_ripple_amplitude(const SystemParams& p, double I_bus_dc, double phi_total);
Trace adapter_ripple(const SystemParams& p, double I_bus_dc, double phi_total, double duration, double rate);

// Adapter voltage deviation produced by a bus current trace:
// dV = -Z_ad * leaky_difference(i_bus, tau_settle).
Trace load_change_trace(const SystemParams& p, const Trace& bus_current);
// Response to a single current step at step_time within a trace of the given duration.
Trace load_change_response(const SystemParams& p, double step, double rate, double step_time = 1e-3,
                           double duration = 5e-3);

// Zero-phase 2nd-order Butterworth magnitude applied per spectral component.
Trace countermeasure_filter(const Trace& t, double cutoff);

// Transmitted power (1/2)|V_tx| I_tx cos(phi) at the given duty.
double transmitted_power(const SystemParams& p, double duty);
// Largest duty whose transmitted power does not exceed the cap, clamped to [0, 1].
double duty_for_power(const SystemParams& p, double power);

}  // namespace qisim
