// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qisim/circuit.hpp"
#include "qisim/codec.hpp"

namespace qisim {

enum class Phase { Ping, Configuration, Negotiation, PowerTransfer, Terminated };
enum class Protocol { Undecided, Baseline, Extended };

const char* phase_name(Phase p);
const char* protocol_name(Protocol p);

inline constexpr double kDutyMin = 0.05;

struct ChargerProfile {
  std::string name = "charger_15w";
  double rated_power = 15.0;
  // Highest transmitted power the hardware delivers under the extended protocol.
  double power_limit = 18.0;
  double baseline_cap = 5.0;
  double fod_loss_threshold = 0.35;
  double k_p = 0.1;
  double k_i = 0.02;
  double integrator_decay = 0.8;
  double ce_timeout = 1.5;
  double rp_timeout = 24.0;
  double sig_deadline = 0.065;
  double ping_interval = 0.4;
  double config_timeout = 0.5;
  double negotiation_timeout = 1.0;
  double restart_cooldown = 5.0;
  double probe_duty = 0.2;
  // Quality factor of the empty pad, tenths of Q.
  std::uint8_t empty_q = 250;
  std::vector<std::uint8_t> id_bytes{0x12, 0x00, 0x4C, 0x51, 0x49, 0x54, 0x58};

  void validate() const;
};

struct PidState {
  double integrator = 0.0;
  double last_error = 0.0;

  bool operator==(const PidState&) const = default;
};

struct ChargerTimers {
  double sig_deadline = 0.0;
  double ce_deadline = 0.0;
  double rp_deadline = 0.0;
  double phase_deadline = 0.0;
  double next_ping = 0.0;

  bool operator==(const ChargerTimers&) const = default;
};

struct ChargerState {
  Phase phase = Phase::Ping;
  Protocol protocol = Protocol::Undecided;
  double now = 0.0;
  bool power_on = false;
  double duty = 0.2;
  double f_p = 140e3;
  PidState pid;
  ChargerTimers timers;
  // Quality factor seen by the coil, tenths of Q.
  std::uint8_t measured_q = 250;
  double guaranteed_power = 0.0;
  double transmitted_power_estimate = 0.0;
  bool got_id = false;
  bool fod_acked = false;

  bool operator==(const ChargerState&) const = default;
};

struct DemodEvent {
  enum class Kind { Silence, Packet, ParseError };
  Kind kind = Kind::Silence;
  QiPacket packet;

  static DemodEvent silence() { return {}; }
  static DemodEvent parse_error() { return {Kind::ParseError, {}}; }
  static DemodEvent of(QiPacket p) { return {Kind::Packet, std::move(p)}; }
};

std::string event_tag(const DemodEvent& e);

struct ChargerActions {
  bool power_applied = false;
  double duty = 0.0;
  std::optional<FskResponse> response;
  bool terminate = false;
  // Short reason for the last transition, empty when nothing happened.
  std::string note;
};

struct ChargerConfig {
  ChargerProfile profile;
  SystemParams params;
};

ChargerState initial_charger_state(const ChargerConfig& cfg);

struct ChargerStep {
  ChargerState state;
  ChargerActions actions;
};

// Deterministic transition function; advances the clock by dt.
ChargerStep charger_tick(const ChargerConfig& cfg, const ChargerState& s, double dt, const DemodEvent& ev);

// Duty ceiling imposed by the active protocol's power cap.
double duty_cap(const ChargerConfig& cfg, const ChargerState& s);
double pid_update(const ChargerConfig& cfg, ChargerState& s, int ce);

enum class FodVerdict { Ack, Nak };
FodVerdict fod_prepower(const ChargerState& s, const QiPacket& fod);

enum class Continuation { Continue, Terminate };
Continuation fod_inpower(const ChargerConfig& cfg, const ChargerState& s, const QiPacket& rp);
Continuation timeout_check(const ChargerState& s, double now);

// The charger's identification packet, as returned for GRQ(ID).
QiPacket charger_id_packet(const ChargerProfile& p);

// One transition log line: t=<s> phase=<..> event=<..> duty=<..> ptx=<W>
std::string format_transition(const ChargerState& s, const std::string& event);

}  // namespace qisim
