// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qisim/codec.hpp"
#include "qisim/signal.hpp"

namespace qisim {

enum class Direction { RxToTx, TxToRx };

struct RecoveredMessage {
  Direction direction = Direction::RxToTx;
  std::variant<QiPacket, FskResponse> message;
  double confidence = 0.0;
  double t_start = 0.0;
};

const char* direction_name(Direction d);
// Report line: t=<s> dir=<..> kind=<..> payload=<hex> conf=<..>
std::string format_message(const RecoveredMessage& m);

// Convolution with the unit-area triangle 1 - f|tau| on [-1/f, 1/f].
// Edges are padded by replicating the end samples.
Trace filter_h1(const Trace& t, double f);
// y(t) = x(t - 1/(2f)) - x(t + 1/(2f)); fractional shifts use linear interpolation.
Trace filter_h2(const Trace& t, double f);

// Matched-filter recovery of receiver ASK packets from adapter-side voltage.
std::vector<RecoveredMessage> recover_ask(const Trace& adapter_trace, double f_ask = kAskBitRate);

struct FskRecoveryOptions {
  std::size_t window = 4096;
  std::size_t hop = 1024;
  double delta_f = kFskDeltaF;
  int cycles_per_bit = kFskCyclesPerBit;
};

// Spectrogram recovery of transmitter FSK responses from the 2*f_p adapter
// ripple. diagnostic (optional) receives a reason when nothing is returned.
std::vector<RecoveredMessage> recover_fsk(const Trace& adapter_trace, double f_p_nominal,
                                          const FskRecoveryOptions& opts = {},
                                          std::string* diagnostic = nullptr);

// Per-frame dominant ripple frequency near 2*f_p (NaN where no carrier is found).
std::vector<double> track_ripple_frequency(const Spectrogram& s, double f_p_nominal, double delta_f);

}  // namespace qisim
