// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qisim/profiles.hpp"
#include "qisim/sim.hpp"

namespace qisim {

enum class ScenarioKind { BaselineCharge, EavesdropDemo, VoiceInjection, PowerToast, FodDestruction };

const char* scenario_name(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& s);

// Scenario-specific checks. Unset fields are not checked.
struct Expectations {
  std::optional<bool> power_transfer;             // charger ends in PowerTransfer
  std::optional<double> steady_power_tolerance;   // |mean received - target| / target over the last 5 s
  std::optional<std::string> protections;         // exact latched set, e.g. "P1,P2,P3" or "none"
  std::optional<std::pair<double, double>> final_temp;
  std::optional<double> max_temp_below;
  std::optional<bool> object_damaged;
  std::optional<double> object_temp_above;
  std::optional<std::string> handshake;
  std::optional<bool> reached_extended;
  std::optional<bool> terminated;                 // at least one charger termination
  std::vector<std::string> recovered;             // kinds the eavesdropper must report
  std::optional<double> depth_tolerance;          // envelope depth against the transfer law
};

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::BaselineCharge;
  std::string system = "typical";
  std::string charger = "charger_15w";
  std::optional<std::string> receiver = "phone";
  std::optional<std::string> object;
  // Per-section field overrides: {"system": {...}, "charger": {...}, ...}
  nlohmann::json overrides = nlohmann::json::object();
  AttackPlan attack;
  double duration = 30.0;
  std::uint64_t seed = 1;
  std::string outputs = "out";
  bool countermeasure = false;
  double countermeasure_cutoff = 90.0;
  bool eavesdrop = false;
  Expectations expect;
};

// Parses a scenario document; missing "expect" falls back to the scenario's defaults.
ScenarioConfig parse_scenario_config(const std::string& text);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json scenario_config_to_json(const ScenarioConfig& cfg);
Expectations default_expectations(ScenarioKind k);

// Resolves profile names and overrides into a simulator configuration.
SimConfig resolve_scenario(const ScenarioConfig& cfg, const ProfileRegistry& profiles = ProfileRegistry::builtin());

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioReport {
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> metrics;
  std::vector<Assertion> assertions;
  std::vector<std::string> files;  // paths of every emitted file
  SimResult sim;

  bool passed() const;
  std::string metric(const std::string& key) const;
  // Line-oriented summary: key=value metrics, then one line per assertion.
  std::string summary() const;
};

// Carrier-domain TX-coil envelope depth for the given interference over a
// 0.25 s window (filter transients trimmed).
double measure_envelope_depth(const SystemParams& p, const InterferenceSpec& i, double window = 0.25);
// Amplitude of the f_i component on the bus relative to V_bus*m_i.
double measure_bus_scaling(const SystemParams& p, double m_i, double f_i, double window = 0.25);

ScenarioReport run_scenario(const ScenarioConfig& cfg, bool write_outputs = true,
                            const ProfileRegistry& profiles = ProfileRegistry::builtin());

struct SweepTable {
  std::string parameter;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  // First value whose charging-stability proxy tripped, if any.
  std::optional<std::string> first_trip;

  std::string csv() const;
};

// Parameters: m_i, f_i, charger, depth, jam_depth. Unknown names raise ConfigError.
SweepTable sweep(const ScenarioConfig& cfg, const std::string& parameter, const std::vector<std::string>& values,
                 const ProfileRegistry& profiles = ProfileRegistry::builtin());

}  // namespace qisim
