// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qisim/attacker.hpp"
#include "qisim/charger.hpp"
#include "qisim/circuit.hpp"
#include "qisim/receiver.hpp"

namespace qisim {

// Invalid or inconsistent configuration: unknown profile, bad field, bad value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Named parameter sets. Entries in the JSON document override the built-in
// struct defaults field by field.
struct ProfileRegistry {
  std::map<std::string, SystemParams> systems;
  std::map<std::string, ChargerProfile> chargers;
  std::map<std::string, ReceiverProfile> receivers;
  std::map<std::string, ForeignObject> objects;

  const SystemParams& system(const std::string& name) const;
  const ChargerProfile& charger(const std::string& name) const;
  const ReceiverProfile& receiver(const std::string& name) const;
  const ForeignObject& object(const std::string& name) const;

  static ProfileRegistry from_json(const nlohmann::json& doc);
  // The registry shipped in configs/profiles.json.
  static const ProfileRegistry& builtin();
};

// Field-by-field overrides; unknown keys raise ConfigError.
void apply_overrides(SystemParams& p, const nlohmann::json& j);
void apply_overrides(ChargerProfile& p, const nlohmann::json& j);
void apply_overrides(ReceiverProfile& p, const nlohmann::json& j);
void apply_overrides(ForeignObject& p, const nlohmann::json& j);

nlohmann::json to_json(const SystemParams& p);
nlohmann::json to_json(const ChargerProfile& p);
nlohmann::json to_json(const ReceiverProfile& p);
nlohmann::json to_json(const ForeignObject& p);

// Attack plans as they appear under "attack" in a scenario config:
// {"kind": "toast", "schedule": [{"at": 2.0, "action": "toast", ...}]}
AttackPlan attack_plan_from_json(const nlohmann::json& j);
nlohmann::json attack_plan_to_json(const AttackPlan& plan);

namespace embedded {
extern const char* const kProfilesJson;
// (name, JSON text) of every built-in demo scenario, sorted by name.
const std::vector<std::pair<std::string, std::string>>& demo_configs();
}  // namespace embedded

}  // namespace qisim
