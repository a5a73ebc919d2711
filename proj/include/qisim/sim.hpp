// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qisim/attacker.hpp"
#include "qisim/charger.hpp"
#include "qisim/circuit.hpp"
#include "qisim/codec.hpp"
#include "qisim/eavesdropper.hpp"
#include "qisim/receiver.hpp"
#include "qisim/signal.hpp"

namespace qisim {

struct SimConfig {
  SystemParams system;
  ChargerProfile charger;
  std::optional<ReceiverProfile> receiver;
  std::optional<ForeignObject> object;
  AttackPlan attack;
  double duration = 10.0;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  // Relative noise on the charger's coil-current sensing.
  double sensing_noise = 0.002;
  // Run passive ASK recovery on the adapter voltage for every receiver packet.
  bool eavesdrop = false;

  void validate() const;
};

struct PacketEvent {
  double t = 0.0;
  QiPacket packet;
};

struct SimResult {
  std::vector<std::string> transitions;  // one line per tick
  std::vector<std::string> attacker_transcript;
  std::vector<RecoveredMessage> recovered;  // passive eavesdropping, both directions

  // 1 kS/s traces
  Trace adapter_voltage;
  Trace tx_envelope;
  Trace power;
  Trace temperature;

  ChargerState charger;
  std::optional<ReceiverState> receiver;
  std::optional<ForeignObject> object;
  HandshakeStatus handshake = HandshakeStatus::Idle;

  std::vector<PacketEvent> accepted;  // packets the charger demodulated
  std::size_t rx_packets = 0;
  // Receiver packets the charger failed to demodulate (charging-stability proxy).
  std::size_t rx_lost = 0;
  // Bursts containing a receiver packet that decoded to a different valid packet.
  std::size_t collisions = 0;
  std::size_t terminations = 0;
  std::size_t forged = 0;
  std::size_t jams = 0;
  bool reached_extended = false;
  double max_power = 0.0;
  double max_temp = 0.0;
  // First time each protection latched; negative when it never did.
  double p1_time = -1.0;
  double p2_time = -1.0;
  double p3_time = -1.0;
  double damage_time = -1.0;
};

SimResult simulate(const SimConfig& cfg);

// Adapter-side 2*f_p ripple carrying an FSK schedule, padded with the nominal
// carrier on both sides. noise_sigma is absolute, in volts.
Trace render_fsk_ripple(const std::vector<FskSegment>& schedule, double f_p, double amplitude, double pad,
                        double noise_sigma, std::uint64_t seed, double rate = kCarrierRate);

}  // namespace qisim
