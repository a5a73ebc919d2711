// SPDX-License-Identifier: Apache-2.0
#include "qisim/charger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace qisim {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Ping: return "Ping";
    case Phase::Configuration: return "Configuration";
    case Phase::Negotiation: return "Negotiation";
    case Phase::PowerTransfer: return "PowerTransfer";
    case Phase::Terminated: return "Terminated";
  }
  return "?";
}

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Undecided: return "Undecided";
    case Protocol::Baseline: return "Baseline";
    case Protocol::Extended: return "Extended";
  }
  return "?";
}

void ChargerProfile::validate() const {
  if (rated_power != 5.0 && rated_power != 10.0 && rated_power != 15.0)
    throw std::invalid_argument("charger profile '" + name + "': rated_power must be 5, 10 or 15 W");
  if (!(power_limit > 0) || !(baseline_cap > 0)) throw std::invalid_argument("charger profile '" + name + "': power caps must be positive");
  if (fod_loss_threshold < 0) throw std::invalid_argument("charger profile '" + name + "': negative FOD threshold");
  if (k_p < 0 || k_i < 0) throw std::invalid_argument("charger profile '" + name + "': negative PID gain");
  if (integrator_decay < 0 || integrator_decay > 1) throw std::invalid_argument("charger profile '" + name + "': integrator_decay outside [0, 1]");
  for (double t : {ce_timeout, rp_timeout, sig_deadline, ping_interval, config_timeout, negotiation_timeout})
    if (!(t > 0)) throw std::invalid_argument("charger profile '" + name + "': timeouts must be positive");
  if (restart_cooldown < 0) throw std::invalid_argument("charger profile '" + name + "': negative restart cool-down");
  if (probe_duty < kDutyMin || probe_duty > 1) throw std::invalid_argument("charger profile '" + name + "': probe_duty outside [D_min, 1]");
  if (id_bytes.size() != payload_length(header::ID)) throw std::invalid_argument("charger profile '" + name + "': id must be 7 bytes");
}

std::string event_tag(const DemodEvent& e) {
  switch (e.kind) {
    case DemodEvent::Kind::Silence: return "none";
    case DemodEvent::Kind::ParseError: return "parse_error";
    case DemodEvent::Kind::Packet: return describe(e.packet);
  }
  return "none";
}

ChargerState initial_charger_state(const ChargerConfig& cfg) {
  ChargerState s;
  s.duty = cfg.profile.probe_duty;
  s.f_p = cfg.params.f_p;
  s.measured_q = cfg.profile.empty_q;
  return s;
}

double duty_cap(const ChargerConfig& cfg, const ChargerState& s) {
  const double cap_power = s.protocol == Protocol::Extended ? cfg.profile.power_limit : cfg.profile.baseline_cap;
  return std::max(kDutyMin, duty_for_power(cfg.params, cap_power));
}

double pid_update(const ChargerConfig& cfg, ChargerState& s, int ce) {
  const double e = static_cast<double>(std::clamp(ce, -128, 127)) / 128.0;
  s.pid.integrator = cfg.profile.integrator_decay * s.pid.integrator + e;
  s.pid.last_error = e;
  const double d = s.duty + cfg.profile.k_p * e + cfg.profile.k_i * s.pid.integrator;
  s.duty = std::clamp(d, kDutyMin, duty_cap(cfg, s));
  return s.duty;
}

FodVerdict fod_prepower(const ChargerState& s, const QiPacket& fod) {
  return s.measured_q >= reference_q(fod) ? FodVerdict::Ack : FodVerdict::Nak;
}

Continuation fod_inpower(const ChargerConfig& cfg, const ChargerState& s, const QiPacket& rp) {
  const double reported = static_cast<double>(received_power_mw(rp)) / 1000.0;
  return s.transmitted_power_estimate - reported > cfg.profile.fod_loss_threshold ? Continuation::Terminate
                                                                                    : Continuation::Continue;
}

Continuation timeout_check(const ChargerState& s, double now) {
  return (now > s.timers.ce_deadline || now > s.timers.rp_deadline) ? Continuation::Terminate : Continuation::Continue;
}

QiPacket charger_id_packet(const ChargerProfile& p) { return make_id(p.id_bytes); }

namespace {

void terminate(const ChargerConfig& cfg, ChargerState& s, ChargerActions& a, const char* why) {
  s.phase = Phase::Terminated;
  s.protocol = Protocol::Undecided;
  s.power_on = false;
  s.duty = cfg.profile.probe_duty;
  s.pid = {};
  s.got_id = false;
  s.fod_acked = false;
  s.timers.next_ping = s.now + cfg.profile.restart_cooldown;
  a.terminate = true;
  a.note = why;
}

void enter_power_transfer(const ChargerConfig& cfg, ChargerState& s, Protocol proto) {
  s.phase = Phase::PowerTransfer;
  s.protocol = proto;
  s.timers.ce_deadline = s.now + cfg.profile.ce_timeout;
  s.timers.rp_deadline = s.now + cfg.profile.rp_timeout;
  s.pid = {};
  s.duty = std::clamp(s.duty, kDutyMin, duty_cap(cfg, s));
}

bool is_packet(const DemodEvent& ev, PacketKind k) {
  return ev.kind == DemodEvent::Kind::Packet && ev.packet.kind == k;
}

}  // namespace

ChargerStep charger_tick(const ChargerConfig& cfg, const ChargerState& prev, double dt, const DemodEvent& ev) {
  if (!(dt > 0)) throw std::invalid_argument("charger_tick: dt must be positive");
  ChargerStep out{prev, {}};
  ChargerState& s = out.state;
  ChargerActions& a = out.actions;
  const ChargerProfile& prof = cfg.profile;
  s.now = prev.now + dt;

  if (is_packet(ev, PacketKind::EPT) && s.phase != Phase::Terminated && s.power_on) {
    terminate(cfg, s, a, "ept");
  } else {
    switch (s.phase) {
      case Phase::Ping:
        if (!s.power_on) {
          if (s.now >= s.timers.next_ping) {
            s.power_on = true;
            s.duty = prof.probe_duty;
            s.timers.sig_deadline = s.now + prof.sig_deadline;
            a.note = "probe";
          }
        } else if (is_packet(ev, PacketKind::SIG)) {
          s.phase = Phase::Configuration;
          s.got_id = false;
          s.timers.phase_deadline = s.now + prof.config_timeout;
          a.note = "sig";
        } else if (s.now > s.timers.sig_deadline) {
          s.power_on = false;
          s.timers.next_ping = s.now + prof.ping_interval;
          a.note = "no-sig";
        }
        break;

      case Phase::Configuration:
        if (is_packet(ev, PacketKind::ID)) {
          s.got_id = true;
          s.timers.phase_deadline = s.now + prof.config_timeout;
        } else if (is_packet(ev, PacketKind::CFG) && s.got_id) {
          if (neg_bit(ev.packet)) {
            s.phase = Phase::Negotiation;
            s.fod_acked = false;
            s.timers.phase_deadline = s.now + prof.negotiation_timeout;
            a.note = "negotiate";
          } else {
            enter_power_transfer(cfg, s, Protocol::Baseline);
            a.note = "baseline";
          }
        } else if (s.now > s.timers.phase_deadline) {
          terminate(cfg, s, a, "config-timeout");
        }
        break;

      case Phase::Negotiation:
        if (ev.kind == DemodEvent::Kind::Packet) {
          const QiPacket& p = ev.packet;
          s.timers.phase_deadline = s.now + prof.negotiation_timeout;
          if (p.kind == PacketKind::FOD) {
            s.fod_acked = fod_prepower(s, p) == FodVerdict::Ack;
            a.response = s.fod_acked ? fsk_ack() : fsk_nak();
          } else if (p.kind == PacketKind::GRQ) {
            a.response = p.payload[0] == header::ID ? fsk_data(charger_id_packet(prof)) : fsk_nak();
          } else if (p.kind == PacketKind::SRQ) {
            if (p.payload[0] == kSrqGuaranteedPower) {
              s.guaranteed_power = 0.5 * p.payload[1];
              a.response = fsk_ack();
            } else if (p.payload[0] == kSrqEndNegotiation) {
              if (s.fod_acked) {
                a.response = fsk_ack();
                enter_power_transfer(cfg, s, Protocol::Extended);
                a.note = "extended";
              } else {
                a.response = fsk_nak();
              }
            } else {
              a.response = fsk_nak();
            }
          }
        }
        if (s.phase == Phase::Negotiation && s.now > s.timers.phase_deadline) terminate(cfg, s, a, "negotiation-timeout");
        break;

      case Phase::PowerTransfer:
        if (is_packet(ev, PacketKind::CE)) {
          pid_update(cfg, s, control_error(ev.packet));
          s.timers.ce_deadline = s.now + prof.ce_timeout;
        } else if (is_packet(ev, PacketKind::RP)) {
          s.timers.rp_deadline = s.now + prof.rp_timeout;
          if (fod_inpower(cfg, s, ev.packet) == Continuation::Terminate) terminate(cfg, s, a, "fod-loss");
        }
        if (s.phase == Phase::PowerTransfer && timeout_check(s, s.now) == Continuation::Terminate)
          terminate(cfg, s, a, "comm-timeout");
        break;

      case Phase::Terminated:
        if (s.now >= s.timers.next_ping) {
          s.phase = Phase::Ping;
          s.timers.next_ping = s.now;
          a.note = "restart";
        }
        break;
    }
  }

  s.transmitted_power_estimate = s.power_on ? transmitted_power(cfg.params, s.duty) : 0.0;
  a.power_applied = s.power_on;
  a.duty = s.duty;
  return out;
}

std::string format_transition(const ChargerState& s, const std::string& event) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "t=%.3f phase=%s event=%s duty=%.4f ptx=%.3f", s.now, phase_name(s.phase), event.c_str(),
                s.power_on ? s.duty : 0.0, s.transmitted_power_estimate);
  return buf;
}

}  // namespace qisim
