// SPDX-License-Identifier: Apache-2.0
#include "qisim/profiles.hpp"

#include <cmath>
#include <set>

namespace qisim {

using nlohmann::json;

namespace {

// Reads known keys out of a JSON object and rejects anything left over.
class Fields {
 public:
  Fields(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object()) throw ConfigError(what_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read(*it, key, out);
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(what_ + ": unknown field '" + k + "'");
  }

 private:
  [[noreturn]] void bad(const std::string& key, const std::string& expect) const {
    throw ConfigError(what_ + "." + key + ": expected " + expect);
  }

  void read(const json& v, const std::string& key, double& out) const {
    if (!v.is_number()) bad(key, "a number");
    out = v.get<double>();
    if (!std::isfinite(out)) bad(key, "a finite number");
  }
  void read(const json& v, const std::string& key, bool& out) const {
    if (!v.is_boolean()) bad(key, "true or false");
    out = v.get<bool>();
  }
  void read(const json& v, const std::string& key, std::string& out) const {
    if (!v.is_string()) bad(key, "a string");
    out = v.get<std::string>();
  }
  void read(const json& v, const std::string& key, int& out) const {
    if (!v.is_number_integer()) bad(key, "an integer");
    out = v.get<int>();
  }
  void read(const json& v, const std::string& key, std::uint8_t& out) const {
    if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 255) bad(key, "an integer in [0, 255]");
    out = static_cast<std::uint8_t>(v.get<int>());
  }
  void read(const json& v, const std::string& key, std::complex<double>& out) const {
    if (v.is_number()) {
      out = {v.get<double>(), 0.0};
    } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      out = {v[0].get<double>(), v[1].get<double>()};
    } else {
      bad(key, "a number or [re, im]");
    }
  }
  void read(const json& v, const std::string& key, std::vector<std::uint8_t>& out) const {
    if (!v.is_string()) bad(key, "a hex string");
    out.clear();
    std::string hex;
    for (char c : v.get<std::string>())
      if (c != ' ') hex += c;
    if (hex.size() % 2 != 0) bad(key, "an even number of hex digits");
    for (std::size_t i = 0; i < hex.size(); i += 2) {
      std::size_t used = 0;
      int b = 0;
      try {
        b = std::stoi(hex.substr(i, 2), &used, 16);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != 2) bad(key, "hex digits");
      out.push_back(static_cast<std::uint8_t>(b));
    }
  }
  void read(const json& v, const std::string&, json& out) const { out = v; }
  void read(const json& v, const std::string& key, ThermalBody& out) const {
    Fields f(v, what_ + "." + key);
    f.get("heat_capacity", out.heat_capacity);
    f.get("dissipation", out.dissipation);
    f.get("ambient", out.ambient);
    const bool explicit_temp = f.has("temp");
    f.get("temp", out.temp);
    if (!explicit_temp) out.temp = out.ambient;
    f.finish();
  }
  void read(const json& v, const std::string& key, ProtectionThresholds& out) const {
    Fields f(v, what_ + "." + key);
    f.get("p1", out.p1);
    f.get("p2", out.p2);
    f.get("p3", out.p3);
    f.finish();
  }

  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

template <class T, class F>
std::map<std::string, T> load_section(const json& doc, const char* section, F&& apply) {
  std::map<std::string, T> out;
  if (!doc.contains(section)) return out;
  const json& s = doc.at(section);
  if (!s.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [name, body] : s.items()) {
    T v;
    if constexpr (requires { v.name; }) v.name = name;
    apply(v, body);
    try {
      v.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(section) + "." + name + ": " + e.what());
    }
    out.emplace(name, std::move(v));
  }
  return out;
}

template <class M>
const typename M::mapped_type& lookup(const M& m, const std::string& name, const char* what) {
  auto it = m.find(name);
  if (it == m.end()) throw ConfigError(std::string("unknown ") + what + " profile '" + name + "'");
  return it->second;
}

std::string hex_string(const std::vector<std::uint8_t>& b) { return hex_bytes(b); }

}  // namespace

void apply_overrides(SystemParams& p, const json& j) {
  Fields f(j, "system");
  f.get("V_ad", p.V_ad);
  f.get("Z_ad", p.Z_ad);
  f.get("R_cable", p.R_cable);
  f.get("C_bus", p.C_bus);
  f.get("R_eq", p.R_eq);
  f.get("C_p", p.C_p);
  f.get("C_s", p.C_s);
  f.get("L_p", p.L_p);
  f.get("L_s", p.L_s);
  f.get("M", p.M);
  f.get("D", p.D);
  f.get("f_p", p.f_p);
  f.get("Z_load", p.Z_load);
  f.get("input_filter_cutoff", p.input_filter_cutoff);
  f.get("tau_settle", p.tau_settle);
  f.finish();
}

void apply_overrides(ChargerProfile& p, const json& j) {
  Fields f(j, "charger");
  f.get("rated_power", p.rated_power);
  f.get("power_limit", p.power_limit);
  f.get("baseline_cap", p.baseline_cap);
  f.get("fod_loss_threshold", p.fod_loss_threshold);
  f.get("k_p", p.k_p);
  f.get("k_i", p.k_i);
  f.get("integrator_decay", p.integrator_decay);
  f.get("ce_timeout", p.ce_timeout);
  f.get("rp_timeout", p.rp_timeout);
  f.get("sig_deadline", p.sig_deadline);
  f.get("ping_interval", p.ping_interval);
  f.get("config_timeout", p.config_timeout);
  f.get("negotiation_timeout", p.negotiation_timeout);
  f.get("restart_cooldown", p.restart_cooldown);
  f.get("probe_duty", p.probe_duty);
  f.get("empty_q", p.empty_q);
  f.get("id", p.id_bytes);
  f.finish();
}

void apply_overrides(ReceiverProfile& p, const json& j) {
  Fields f(j, "receiver");
  f.get("device_id", p.device_id);
  f.get("target_power", p.target_power);
  f.get("neg_bit", p.neg_bit);
  f.get("thermal", p.thermal);
  f.get("protection", p.protection);
  f.get("efficiency", p.efficiency);
  f.get("ask_depth", p.ask_depth);
  f.get("reference_q", p.reference_q);
  f.get("guaranteed_power_request", p.guaranteed_power_request);
  f.get("sig_strength", p.sig_strength);
  f.get("ce_period", p.ce_period);
  f.get("rp_period", p.rp_period);
  f.get("rp_offset", p.rp_offset);
  f.get("wake_power", p.wake_power);
  f.get("response_timeout", p.response_timeout);
  f.get("charge_complete_after", p.charge_complete_after);
  f.finish();
}

void apply_overrides(ForeignObject& p, const json& j) {
  Fields f(j, "object");
  f.get("thermal", p.thermal);
  f.get("absorption", p.absorption);
  f.get("damage_temp", p.damage_temp);
  f.get("q_factor", p.q_factor);
  f.finish();
}

json to_json(const SystemParams& p) {
  return {{"V_ad", p.V_ad},   {"Z_ad", p.Z_ad}, {"R_cable", p.R_cable}, {"C_bus", p.C_bus},
          {"R_eq", p.R_eq},   {"C_p", p.C_p},   {"C_s", p.C_s},         {"L_p", p.L_p},
          {"L_s", p.L_s},     {"M", p.M},       {"D", p.D},             {"f_p", p.f_p},
          {"Z_load", {p.Z_load.real(), p.Z_load.imag()}},
          {"input_filter_cutoff", p.input_filter_cutoff},
          {"tau_settle", p.tau_settle}};
}

json to_json(const ChargerProfile& p) {
  return {{"rated_power", p.rated_power},
          {"power_limit", p.power_limit},
          {"baseline_cap", p.baseline_cap},
          {"fod_loss_threshold", p.fod_loss_threshold},
          {"k_p", p.k_p},
          {"k_i", p.k_i},
          {"integrator_decay", p.integrator_decay},
          {"ce_timeout", p.ce_timeout},
          {"rp_timeout", p.rp_timeout},
          {"sig_deadline", p.sig_deadline},
          {"ping_interval", p.ping_interval},
          {"config_timeout", p.config_timeout},
          {"negotiation_timeout", p.negotiation_timeout},
          {"restart_cooldown", p.restart_cooldown},
          {"probe_duty", p.probe_duty},
          {"empty_q", p.empty_q},
          {"id", hex_string(p.id_bytes)}};
}

namespace {
json thermal_json(const ThermalBody& t) {
  return {{"heat_capacity", t.heat_capacity}, {"dissipation", t.dissipation}, {"ambient", t.ambient}, {"temp", t.temp}};
}
}  // namespace

json to_json(const ReceiverProfile& p) {
  return {{"device_id", hex_string(p.device_id)},
          {"target_power", p.target_power},
          {"neg_bit", p.neg_bit},
          {"thermal", thermal_json(p.thermal)},
          {"protection", {{"p1", p.protection.p1}, {"p2", p.protection.p2}, {"p3", p.protection.p3}}},
          {"efficiency", p.efficiency},
          {"ask_depth", p.ask_depth},
          {"reference_q", p.reference_q},
          {"guaranteed_power_request", p.guaranteed_power_request},
          {"sig_strength", p.sig_strength},
          {"ce_period", p.ce_period},
          {"rp_period", p.rp_period},
          {"rp_offset", p.rp_offset},
          {"wake_power", p.wake_power},
          {"response_timeout", p.response_timeout},
          {"charge_complete_after", p.charge_complete_after}};
}

json to_json(const ForeignObject& p) {
  return {{"thermal", thermal_json(p.thermal)},
          {"absorption", p.absorption},
          {"damage_temp", p.damage_temp},
          {"q_factor", p.q_factor}};
}

const SystemParams& ProfileRegistry::system(const std::string& n) const { return lookup(systems, n, "system"); }
const ChargerProfile& ProfileRegistry::charger(const std::string& n) const { return lookup(chargers, n, "charger"); }
const ReceiverProfile& ProfileRegistry::receiver(const std::string& n) const { return lookup(receivers, n, "receiver"); }
const ForeignObject& ProfileRegistry::object(const std::string& n) const { return lookup(objects, n, "object"); }

ProfileRegistry ProfileRegistry::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("profiles: expected an object");
  for (const auto& [k, v] : doc.items())
    if (k != "systems" && k != "chargers" && k != "receivers" && k != "objects")
      throw ConfigError("profiles: unknown section '" + k + "'");
  ProfileRegistry r;
  r.systems = load_section<SystemParams>(doc, "systems", [](SystemParams& p, const json& j) { apply_overrides(p, j); });
  r.chargers = load_section<ChargerProfile>(doc, "chargers", [](ChargerProfile& p, const json& j) { apply_overrides(p, j); });
  r.receivers = load_section<ReceiverProfile>(doc, "receivers", [](ReceiverProfile& p, const json& j) { apply_overrides(p, j); });
  r.objects = load_section<ForeignObject>(doc, "objects", [](ForeignObject& p, const json& j) { apply_overrides(p, j); });
  return r;
}

const ProfileRegistry& ProfileRegistry::builtin() {
  static const ProfileRegistry r = [] {
    try {
      return from_json(json::parse(embedded::kProfilesJson));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("built-in profiles: ") + e.what());
    }
  }();
  return r;
}

// ---------------------------------------------------------------------------

AttackPlan attack_plan_from_json(const json& j) {
  Fields f(j, "attack");
  AttackPlan plan;
  std::string kind = "none";
  f.get("kind", kind);
  try {
    plan.kind = parse_attack_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json schedule = json::array();
  f.get("schedule", schedule);
  f.finish();
  if (!schedule.is_array()) throw ConfigError("attack.schedule: expected an array");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    Fields a(schedule[i], "attack.schedule[" + std::to_string(i) + "]");
    AttackAction act;
    std::string type;
    a.get("action", type);
    try {
      act.type = parse_action_type(type);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    a.get("at", act.at);
    a.get("depth", act.depth);
    std::vector<std::uint8_t> bytes;
    a.get("packet", bytes);
    if (act.type == ActionType::ForgePacket) {
      if (bytes.empty()) throw ConfigError("forge action needs a 'packet' hex string (header and payload)");
      try {
        act.packet = make_packet(bytes[0], {bytes.begin() + 1, bytes.end()});
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("forge packet: ") + e.what());
      }
    }
    a.get("value", act.ce_value);
    if (act.ce_value < -128 || act.ce_value > 127) throw ConfigError("control error value outside [-128, 127]");
    a.get("period", act.period);
    a.get("until", act.until);
    a.get("waveform", act.waveform);
    a.get("m_i", act.m_i);
    a.get("f_i", act.f_i);
    a.get("jam", act.jam);
    a.get("jam_depth", act.jam_depth);
    a.get("duration", act.duration);
    a.get("reference_q", act.reference_q);
    a.get("neg_bit", act.neg_bit);
    a.get("guaranteed_power", act.guaranteed_power);
    a.get("then_toast", act.then_toast);
    a.finish();
    plan.schedule.push_back(std::move(act));
  }
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return plan;
}

json attack_plan_to_json(const AttackPlan& plan) {
  json sched = json::array();
  for (const auto& a : plan.schedule) {
    json j = {{"at", a.at}, {"action", action_type_name(a.type)}};
    switch (a.type) {
      case ActionType::ForgePacket:
        j["depth"] = a.depth;
        j["packet"] = hex_bytes(packet_bytes(a.packet));
        break;
      case ActionType::CeStream:
        j["depth"] = a.depth;
        j["value"] = a.ce_value;
        j["period"] = a.period;
        break;
      case ActionType::Voice:
        j["waveform"] = a.waveform;
        j["m_i"] = a.m_i;
        j["f_i"] = a.f_i;
        break;
      case ActionType::Jam:
        j["jam_depth"] = a.jam_depth;
        j["duration"] = a.duration;
        break;
      case ActionType::Toast:
        j["depth"] = a.depth;
        j["period"] = a.period;
        j["jam"] = a.jam;
        j["jam_depth"] = a.jam_depth;
        j["duration"] = a.duration;
        break;
      case ActionType::FodHandshake:
        j["depth"] = a.depth;
        j["period"] = a.period;
        j["reference_q"] = a.reference_q;
        j["neg_bit"] = a.neg_bit;
        j["guaranteed_power"] = a.guaranteed_power;
        j["then_toast"] = a.then_toast;
        break;
      case ActionType::Stop: break;
    }
    if (std::isfinite(a.until)) j["until"] = a.until;
    sched.push_back(std::move(j));
  }
  return {{"kind", attack_kind_name(plan.kind)}, {"schedule", sched}};
}

}  // namespace qisim
