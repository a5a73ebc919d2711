// SPDX-License-Identifier: Apache-2.0
#include "qisim/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qisim {

void ThermalBody::validate() const {
  if (!(heat_capacity > 0)) throw std::invalid_argument("thermal body: heat_capacity must be positive");
  if (!(dissipation > 0)) throw std::invalid_argument("thermal body: dissipation must be positive");
  if (temp < ambient - 1.0) throw std::invalid_argument("thermal body: temperature below ambient");
}

double thermal_step(const ThermalBody& b, double power_in, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("thermal_step: dt must be positive");
  return b.temp + dt * (power_in - b.dissipation * (b.temp - b.ambient)) / b.heat_capacity;
}

double steady_state_temp(const ThermalBody& b, double power_in) { return b.ambient + power_in / b.dissipation; }

std::string ProtectionSet::str() const {
  std::string s;
  if (p1) s += "P1";
  if (p2) s += s.empty() ? "P2" : ",P2";
  if (p3) s += s.empty() ? "P3" : ",P3";
  return s.empty() ? "none" : s;
}

void ReceiverProfile::validate() const {
  thermal.validate();
  if (!(protection.p1 <= protection.p2 && protection.p2 <= protection.p3))
    throw std::invalid_argument("receiver profile '" + name + "': protection thresholds must be ordered");
  if (!(target_power > 0)) throw std::invalid_argument("receiver profile '" + name + "': target_power must be positive");
  if (!(efficiency > 0) || efficiency > 1) throw std::invalid_argument("receiver profile '" + name + "': efficiency outside (0, 1]");
  if (!(ask_depth > 0) || ask_depth >= 1) throw std::invalid_argument("receiver profile '" + name + "': ask_depth outside (0, 1)");
  if (device_id.size() != payload_length(header::ID)) throw std::invalid_argument("receiver profile '" + name + "': device_id must be 7 bytes");
  if (!(ce_period > 0) || !(rp_period > 0)) throw std::invalid_argument("receiver profile '" + name + "': periods must be positive");
}

ProtectionSet protection_check(const ReceiverProfile& profile, double temp, const ProtectionSet& latched) {
  ProtectionSet p = latched;
  p.p1 = p.p1 || temp >= profile.protection.p1;
  p.p2 = p.p2 || temp >= profile.protection.p2;
  p.p3 = p.p3 || temp >= profile.protection.p3;
  return p;
}

int control_error_value(double target_power, double received_power) {
  const double v = std::round(128.0 * (target_power - received_power) / target_power);
  return static_cast<int>(std::clamp(v, -128.0, 127.0));
}

const char* rx_phase_name(RxPhase p) {
  switch (p) {
    case RxPhase::Off: return "Off";
    case RxPhase::Startup: return "Startup";
    case RxPhase::Negotiating: return "Negotiating";
    case RxPhase::Charging: return "Charging";
    case RxPhase::Disabled: return "Disabled";
  }
  return "?";
}

ReceiverState initial_receiver_state(const ReceiverProfile& profile) {
  ReceiverState s;
  s.thermal = profile.thermal;
  return s;
}

namespace {

constexpr double kWakeDelay = 0.005;
constexpr double kInterPacketGap = 0.007;
constexpr double kPowerLossTime = 0.02;

std::vector<QiPacket> startup_packets(const ReceiverProfile& p) {
  return {make_sig(p.sig_strength), make_id(p.device_id), make_cfg(p.neg_bit)};
}

std::vector<QiPacket> negotiation_packets(const ReceiverProfile& p) {
  const auto halfwatts = static_cast<std::uint8_t>(std::clamp(std::lround(p.guaranteed_power_request * 2.0), 0L, 255L));
  return {make_fod(p.reference_q), make_grq(header::ID), make_srq(kSrqGuaranteedPower, halfwatts),
          make_srq(kSrqEndNegotiation, 0)};
}

void emit(RxStep& out, const QiPacket& p) {
  out.packets.push_back(p);
  out.state.busy_until = out.state.now + ask_packet_duration(p) + kInterPacketGap;
}

void start_charging(const ReceiverProfile& profile, ReceiverState& s) {
  s.phase = RxPhase::Charging;
  s.charging_since = s.now;
  s.next_ce = std::max(s.now, s.busy_until);
  s.next_rp = s.next_ce + profile.rp_offset;
}

}  // namespace

RxStep rx_step(const ReceiverProfile& profile, const ReceiverState& prev, double received_power, double dt,
               const std::optional<FskResponse>& response) {
  if (!(dt > 0)) throw std::invalid_argument("rx_step: dt must be positive");
  RxStep out{prev, {}};
  ReceiverState& s = out.state;
  s.now = prev.now + dt;
  s.thermal.temp = thermal_step(prev.thermal, received_power, dt);
  s.protections = protection_check(profile, s.thermal.temp, prev.protections);

  if (s.protections.p1 && (s.phase == RxPhase::Startup || s.phase == RxPhase::Negotiating)) s.phase = RxPhase::Disabled;
  if (s.phase == RxPhase::Disabled) return out;

  const bool powered = received_power >= profile.wake_power;
  s.unpowered_for = powered ? 0.0 : prev.unpowered_for + dt;
  if (s.phase != RxPhase::Off && s.unpowered_for >= kPowerLossTime) {
    const auto thermal = s.thermal;
    const auto prot = s.protections;
    s = initial_receiver_state(profile);
    s.now = prev.now + dt;
    s.thermal = thermal;
    s.protections = prot;
    return out;
  }
  if (response && s.awaiting_response) {
    s.awaiting_response = false;
    s.last_response = response;
  }
  const bool busy = s.now < s.busy_until;

  switch (s.phase) {
    case RxPhase::Off:
      if (powered && !s.protections.p1) {
        s.phase = RxPhase::Startup;
        s.step = 0;
        s.busy_until = s.now + kWakeDelay;
      }
      break;

    case RxPhase::Startup: {
      if (busy) break;
      const auto pk = startup_packets(profile);
      if (s.step < pk.size()) {
        emit(out, pk[s.step]);
        ++s.step;
      } else if (profile.neg_bit) {
        s.phase = RxPhase::Negotiating;
        s.step = 0;
      } else {
        start_charging(profile, s);
      }
      break;
    }

    case RxPhase::Negotiating: {
      if (busy) break;
      if (s.awaiting_response) {
        if (s.now - s.awaiting_since < profile.response_timeout) break;
        s.awaiting_response = false;
        s.last_response.reset();
      }
      const auto pk = negotiation_packets(profile);
      if (s.step > 0 && s.step == pk.size()) {
        if (s.last_response && s.last_response->kind == FskKind::ACK) start_charging(profile, s);
        // Otherwise wait for the charger to drop power.
        break;
      }
      if (s.step < pk.size()) {
        emit(out, pk[s.step]);
        ++s.step;
        s.awaiting_response = true;
        s.awaiting_since = s.busy_until;
      }
      break;
    }

    case RxPhase::Charging:
      if (busy) break;
      if (s.protections.p1 && !s.ept_sent) {
        if (s.now >= s.next_ce) {
          emit(out, make_ept(kEptOverTemperature));
          s.ept_sent = true;
          s.phase = RxPhase::Disabled;
        }
        break;
      }
      if (profile.charge_complete_after > 0 && s.now - s.charging_since >= profile.charge_complete_after &&
          s.now >= s.next_ce) {
        emit(out, make_ept(kEptChargeComplete));
        s.ept_sent = true;
        s.phase = RxPhase::Disabled;
        break;
      }
      if (s.now >= s.next_ce) {
        emit(out, make_ce(control_error_value(profile.target_power, received_power)));
        while (s.next_ce <= s.now) s.next_ce += profile.ce_period;
      } else if (s.now >= s.next_rp) {
        emit(out, make_rp(received_power));
        while (s.next_rp <= s.now) s.next_rp += profile.rp_period;
      }
      break;

    case RxPhase::Disabled: break;
  }
  return out;
}

void ForeignObject::validate() const {
  thermal.validate();
  if (!(absorption > 0) || absorption > 1) throw std::invalid_argument("object '" + name + "': absorption outside (0, 1]");
}

ForeignObject foreign_object_step(const ForeignObject& obj, double transmitted_power, double dt) {
  ForeignObject o = obj;
  o.thermal.temp = thermal_step(obj.thermal, obj.absorption * transmitted_power, dt);
  o.damaged = obj.damaged || o.thermal.temp >= o.damage_temp;
  return o;
}

}  // namespace qisim
