// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "qisim/signal.hpp"

namespace qisim {

// Synthetic voiced speech proxy: harmonics of a 110 Hz glottal pitch with 3 Hz
// vibrato, shaped by two low formants and a 1/k^2 tilt, with a 4 Hz syllabic
// envelope. Peak-normalized to 1. A 2 s clip loops seamlessly.
Trace synth_voice(double duration, double rate);

// Linear chirp from f0 to f1, amplitude 1.
Trace synth_chirp(double f0, double f1, double duration, double rate);

// Named waveform: "voice", "chirp" (100 Hz to 5 kHz) or "sine" (at f_i).
Trace named_waveform(const std::string& name, double f_i, double duration, double rate);

}  // namespace qisim
