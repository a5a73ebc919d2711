// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qisim/circuit.hpp"
#include "qisim/codec.hpp"
#include "qisim/eavesdropper.hpp"
#include "qisim/signal.hpp"

namespace qisim {

// ---------------------------------------------------------------------------
// Waveform primitives. All return adapter-relative interference, i.e. the
// dimensionless m_i*w(t) term of v_ad = V_ad*(1 + m_i*w(t)).

// v_ad(t) = base(t)*(1 + m_i*w(t)). Rejects m_i >= 1.
Trace inject_noise(const Trace& base, const InterferenceSpec& spec);

Trace forge_ask_packet(const QiPacket& p, double depth, double f_ask = kAskBitRate, double rate = kEnvelopeRate);

// Audio must be band-limited to 10 kHz; it is normalized to peak 1 and scaled by depth.
Trace inject_voice(const Trace& audio, double depth);

// Pseudo-random phase bursts of an f_ask square wave with levels {0, depth}.
Trace jam_ask(double duration, double depth, std::uint64_t seed, double f_ask = kAskBitRate,
              double rate = kEnvelopeRate);

// ---------------------------------------------------------------------------
// Attack plans

enum class AttackKind { None, VoiceInjection, QiInjection, Jam, FodHandshake, Toast };
enum class ActionType { Voice, ForgePacket, CeStream, Jam, FodHandshake, Toast, Stop };

const char* attack_kind_name(AttackKind k);
AttackKind parse_attack_kind(const std::string& s);
const char* action_type_name(ActionType t);
ActionType parse_action_type(const std::string& s);

struct AttackAction {
  double at = 0.0;
  ActionType type = ActionType::Stop;
  // forge / ce_stream / toast
  double depth = 0.1;
  QiPacket packet;
  int ce_value = 0;
  double period = 0.25;
  double until = std::numeric_limits<double>::infinity();
  // voice
  std::string waveform = "voice";
  double m_i = 0.3;
  double f_i = 1000.0;
  // jam / toast
  bool jam = true;
  double jam_depth = 0.8;
  double duration = 0.04;
  // fod_handshake
  std::uint8_t reference_q = 0;
  bool neg_bit = true;
  double guaranteed_power = 127.5;
  bool then_toast = true;
};

struct AttackPlan {
  AttackKind kind = AttackKind::None;
  std::vector<AttackAction> schedule;

  // Throws std::invalid_argument when actions are out of order or depths are >= 1.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Interactive attacker driven by the simulator.

struct AttackerObservation {
  double now = 0.0;
  // Adapter output power measured at the attacker's tap, W.
  double adapter_power = 0.0;
  // Charger responses recovered from the adapter ripple during this tick.
  std::vector<RecoveredMessage> fsk;
  // Detected start times of receiver transmissions during this tick.
  std::vector<double> rx_activity;
};

struct AttackerEmission {
  Trace interference;   // adapter-relative, envelope-domain rate
  double start = 0.0;   // absolute start time
  std::string tag;      // "forge" or "jam"
  std::optional<QiPacket> packet;
};

struct ToastSettings {
  double period = 0.125;
  double forge_depth = 0.1;
  bool jam = true;
  double jam_depth = 0.8;
  double jam_length = 0.04;
  double rp_period = 1.5;
  double until = std::numeric_limits<double>::infinity();
};

enum class HandshakeStatus { Idle, WaitingForPing, Running, Succeeded, Aborted };
const char* handshake_status_name(HandshakeStatus s);

class AttackerAgent {
 public:
  AttackerAgent(AttackPlan plan, std::uint64_t seed);

  std::vector<AttackerEmission> step(const AttackerObservation& obs);

  // Energy detector run on an adapter-side segment around a receiver
  // transmission; returns the first detection time, if any.
  std::optional<double> detect_activity(const Trace& adapter_segment) const;

  bool wants_fsk() const;
  bool toast_active() const { return toast_.has_value(); }
  HandshakeStatus handshake_status() const { return hs_status_; }
  const std::vector<std::string>& transcript() const { return transcript_; }
  std::size_t forged_count() const { return forged_; }
  std::size_t jam_count() const { return jams_; }

 private:
  void start_action(const AttackAction& a, double now);
  void forge(const QiPacket& p, double depth, double start, std::vector<AttackerEmission>& out);
  void handshake_step(const AttackerObservation& obs, std::vector<AttackerEmission>& out);
  void toast_step(const AttackerObservation& obs, std::vector<AttackerEmission>& out);
  void log(double t, const std::string& line);

  AttackPlan plan_;
  std::size_t next_action_ = 0;
  std::uint64_t seed_;
  std::uint64_t jam_counter_ = 0;
  double busy_until_ = 0.0;

  struct CeStream {
    int value;
    double period;
    double depth;
    double until;
    double next;
  };
  std::optional<CeStream> ce_stream_;

  std::optional<ToastSettings> toast_;
  double toast_anchor_ = -1.0;
  double toast_started_ = 0.0;
  long toast_slot_ = 0;

  // Handshake
  HandshakeStatus hs_status_ = HandshakeStatus::Idle;
  AttackAction hs_;
  std::vector<QiPacket> hs_queue_;
  std::size_t hs_index_ = 0;
  bool hs_waiting_ = false;
  double hs_wait_since_ = 0.0;
  double last_power_ = 0.0;

  std::vector<std::string> transcript_;
  std::size_t forged_ = 0;
  std::size_t jams_ = 0;
};

}  // namespace qisim
