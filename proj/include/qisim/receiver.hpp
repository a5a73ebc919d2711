// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qisim/codec.hpp"

namespace qisim {

// Lumped first-order thermal model. Temperatures in degrees Fahrenheit.
struct ThermalBody {
  double heat_capacity = 1.78;  // J/°F
  double dissipation = 0.178;   // W/°F
  double ambient = 77.0;
  double temp = 77.0;

  void validate() const;
};

// Forward-Euler step: temp + dt*(power_in - dissipation*(temp - ambient))/heat_capacity.
double thermal_step(const ThermalBody& body, double power_in, double dt);
double steady_state_temp(const ThermalBody& body, double power_in);

struct ProtectionThresholds {
  double p1 = 113.0;
  double p2 = 126.0;
  double p3 = 170.0;
};

struct ProtectionSet {
  bool p1 = false;
  bool p2 = false;
  bool p3 = false;

  bool operator==(const ProtectionSet&) const = default;
  std::string str() const;
};

struct ReceiverProfile {
  std::string name = "phone";
  std::vector<std::uint8_t> device_id{0x12, 0x00, 0x5A, 0x00, 0x00, 0x31, 0x07};
  double target_power = 5.0;
  bool neg_bit = true;
  ThermalBody thermal;
  ProtectionThresholds protection;
  // Received power as a fraction of transmitted power.
  double efficiency = 0.985;
  double ask_depth = 0.5;
  // Honest FOD reference quality factor, tenths of Q.
  std::uint8_t reference_q = 200;
  double guaranteed_power_request = 15.0;
  std::uint8_t sig_strength = 0x84;
  double ce_period = 0.25;
  double rp_period = 1.5;
  // Offset of the RP slot after a CE slot.
  double rp_offset = 0.13;
  double wake_power = 0.1;
  double response_timeout = 0.6;
  // When positive, an EPT(charge complete) is sent after this long in power transfer.
  double charge_complete_after = 0.0;

  void validate() const;
};

ProtectionSet protection_check(const ReceiverProfile& profile, double temp, const ProtectionSet& latched = {});

int control_error_value(double target_power, double received_power);

enum class RxPhase { Off, Startup, Negotiating, Charging, Disabled };
const char* rx_phase_name(RxPhase p);

struct ReceiverState {
  RxPhase phase = RxPhase::Off;
  double now = 0.0;
  double busy_until = 0.0;
  std::size_t step = 0;
  bool awaiting_response = false;
  double awaiting_since = 0.0;
  std::optional<FskResponse> last_response;
  double next_ce = 0.0;
  double next_rp = 0.0;
  double charging_since = 0.0;
  double unpowered_for = 0.0;
  ThermalBody thermal;
  ProtectionSet protections;
  bool ept_sent = false;
};

ReceiverState initial_receiver_state(const ReceiverProfile& profile);

struct RxStep {
  ReceiverState state;
  std::vector<QiPacket> packets;
};

// Advances the receiver by dt. response carries an FSK response that
// completed during this step. Heating uses the received power.
RxStep rx_step(const ReceiverProfile& profile, const ReceiverState& s, double received_power, double dt,
               const std::optional<FskResponse>& response = std::nullopt);

struct ForeignObject {
  std::string name = "paper_clip";
  ThermalBody thermal;
  double absorption = 0.6;
  double damage_temp = 450.0;
  bool damaged = false;
  // Pad quality factor with the object present, tenths of Q.
  std::uint8_t q_factor = 120;

  void validate() const;
};

ForeignObject foreign_object_step(const ForeignObject& obj, double transmitted_power, double dt);

}  // namespace qisim
