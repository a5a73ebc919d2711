// SPDX-License-Identifier: Apache-2.0
#include "qisim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "qisim/dsp.hpp"
#include "qisim/waveforms.hpp"

namespace qisim {

using nlohmann::json;
namespace fs = std::filesystem;

const char* scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::BaselineCharge: return "baseline_charge";
    case ScenarioKind::EavesdropDemo: return "eavesdrop_demo";
    case ScenarioKind::VoiceInjection: return "voice_injection";
    case ScenarioKind::PowerToast: return "power_toast";
    case ScenarioKind::FodDestruction: return "fod_destruction";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  for (auto k : {ScenarioKind::BaselineCharge, ScenarioKind::EavesdropDemo, ScenarioKind::VoiceInjection,
                 ScenarioKind::PowerToast, ScenarioKind::FodDestruction})
    if (s == scenario_name(k)) return k;
  throw ConfigError("unknown scenario '" + s + "'");
}

Expectations default_expectations(ScenarioKind k) {
  Expectations e;
  switch (k) {
    case ScenarioKind::BaselineCharge:
      e.power_transfer = true;
      e.steady_power_tolerance = 0.05;
      e.protections = "none";
      break;
    case ScenarioKind::EavesdropDemo: e.recovered = {"SIG", "DATA/ID"}; break;
    case ScenarioKind::VoiceInjection:
      e.power_transfer = true;
      e.depth_tolerance = 0.01;
      break;
    case ScenarioKind::PowerToast:
      e.protections = "P1,P2,P3";
      e.final_temp = {173.0, 183.0};
      break;
    case ScenarioKind::FodDestruction:
      e.handshake = "succeeded";
      e.reached_extended = true;
      e.object_damaged = true;
      e.object_temp_above = 536.0;
      break;
  }
  return e;
}

namespace {

double default_duration(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::BaselineCharge: return 30.0;
    case ScenarioKind::EavesdropDemo: return 3.0;
    case ScenarioKind::VoiceInjection: return 10.0;
    case ScenarioKind::PowerToast: return 60.0;
    case ScenarioKind::FodDestruction: return 60.0;
  }
  return 30.0;
}

void check_keys(const json& j, const std::string& what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw ConfigError(what + ": unknown field '" + k + "'");
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  return j.get<double>();
}

std::string text(const json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + ": expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& what) {
  if (!j.is_boolean()) throw ConfigError(what + ": expected true or false");
  return j.get<bool>();
}

std::optional<std::string> optional_name(const json& j, const std::string& what) {
  if (j.is_null()) return std::nullopt;
  return text(j, what);
}

Expectations parse_expectations(const json& j) {
  check_keys(j, "expect",
             {"power_transfer", "steady_power_tolerance", "protections", "final_temp", "max_temp_below",
              "object_damaged", "object_temp_above", "handshake", "reached_extended", "terminated", "recovered",
              "depth_tolerance"});
  Expectations e;
  if (j.contains("power_transfer")) e.power_transfer = boolean(j["power_transfer"], "expect.power_transfer");
  if (j.contains("steady_power_tolerance"))
    e.steady_power_tolerance = number(j["steady_power_tolerance"], "expect.steady_power_tolerance");
  if (j.contains("protections")) e.protections = text(j["protections"], "expect.protections");
  if (j.contains("final_temp")) {
    const json& r = j["final_temp"];
    if (!r.is_array() || r.size() != 2) throw ConfigError("expect.final_temp: expected [low, high]");
    e.final_temp = {number(r[0], "expect.final_temp"), number(r[1], "expect.final_temp")};
  }
  if (j.contains("max_temp_below")) e.max_temp_below = number(j["max_temp_below"], "expect.max_temp_below");
  if (j.contains("object_damaged")) e.object_damaged = boolean(j["object_damaged"], "expect.object_damaged");
  if (j.contains("object_temp_above")) e.object_temp_above = number(j["object_temp_above"], "expect.object_temp_above");
  if (j.contains("handshake")) e.handshake = text(j["handshake"], "expect.handshake");
  if (j.contains("reached_extended")) e.reached_extended = boolean(j["reached_extended"], "expect.reached_extended");
  if (j.contains("terminated")) e.terminated = boolean(j["terminated"], "expect.terminated");
  if (j.contains("recovered")) {
    if (!j["recovered"].is_array()) throw ConfigError("expect.recovered: expected an array of kinds");
    for (const auto& k : j["recovered"]) e.recovered.push_back(text(k, "expect.recovered"));
  }
  if (j.contains("depth_tolerance")) e.depth_tolerance = number(j["depth_tolerance"], "expect.depth_tolerance");
  return e;
}

json expectations_to_json(const Expectations& e) {
  json j = json::object();
  if (e.power_transfer) j["power_transfer"] = *e.power_transfer;
  if (e.steady_power_tolerance) j["steady_power_tolerance"] = *e.steady_power_tolerance;
  if (e.protections) j["protections"] = *e.protections;
  if (e.final_temp) j["final_temp"] = {e.final_temp->first, e.final_temp->second};
  if (e.max_temp_below) j["max_temp_below"] = *e.max_temp_below;
  if (e.object_damaged) j["object_damaged"] = *e.object_damaged;
  if (e.object_temp_above) j["object_temp_above"] = *e.object_temp_above;
  if (e.handshake) j["handshake"] = *e.handshake;
  if (e.reached_extended) j["reached_extended"] = *e.reached_extended;
  if (e.terminated) j["terminated"] = *e.terminated;
  if (!e.recovered.empty()) j["recovered"] = e.recovered;
  if (e.depth_tolerance) j["depth_tolerance"] = *e.depth_tolerance;
  return j;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_time(double t) { return t < 0 ? "never" : fmt(t); }

const AttackAction* voice_action(const AttackPlan& plan) {
  for (const auto& a : plan.schedule)
    if (a.type == ActionType::Voice) return &a;
  return nullptr;
}

double tail_mean(const Trace& t, double seconds) {
  const auto n = std::min(t.size(), static_cast<std::size_t>(std::llround(seconds * t.sample_rate)));
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t k = t.size() - n; k < t.size(); ++k) s += t.samples[k];
  return s / static_cast<double>(n);
}

}  // namespace

ScenarioConfig scenario_config_from_json(const json& j) {
  check_keys(j, "scenario config",
             {"scenario", "system", "charger", "receiver", "object", "overrides", "attack", "duration", "seed",
              "outputs", "countermeasure", "eavesdrop", "expect", "description"});
  if (!j.contains("scenario")) throw ConfigError("scenario config: missing 'scenario'");
  ScenarioConfig c;
  c.scenario = parse_scenario_kind(text(j["scenario"], "scenario"));
  c.duration = default_duration(c.scenario);
  c.eavesdrop = c.scenario == ScenarioKind::EavesdropDemo;
  if (c.scenario == ScenarioKind::FodDestruction) {
    c.receiver.reset();
    c.object = "paper_clip";
  }
  if (j.contains("system")) c.system = text(j["system"], "system");
  if (j.contains("charger")) c.charger = text(j["charger"], "charger");
  if (j.contains("receiver")) c.receiver = optional_name(j["receiver"], "receiver");
  if (j.contains("object")) c.object = optional_name(j["object"], "object");
  if (j.contains("overrides")) {
    check_keys(j["overrides"], "overrides", {"system", "charger", "receiver", "object"});
    c.overrides = j["overrides"];
  }
  if (j.contains("attack")) c.attack = attack_plan_from_json(j["attack"]);
  if (j.contains("duration")) c.duration = number(j["duration"], "duration");
  if (!(c.duration > 0)) throw ConfigError("duration must be positive");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("outputs")) c.outputs = text(j["outputs"], "outputs");
  if (j.contains("countermeasure")) {
    const json& cm = j["countermeasure"];
    if (cm.is_boolean()) {
      c.countermeasure = cm.get<bool>();
    } else {
      check_keys(cm, "countermeasure", {"enabled", "cutoff"});
      if (cm.contains("enabled")) c.countermeasure = boolean(cm["enabled"], "countermeasure.enabled");
      if (cm.contains("cutoff")) c.countermeasure_cutoff = number(cm["cutoff"], "countermeasure.cutoff");
      if (!(c.countermeasure_cutoff > 0)) throw ConfigError("countermeasure.cutoff must be positive");
    }
  }
  if (j.contains("eavesdrop")) c.eavesdrop = boolean(j["eavesdrop"], "eavesdrop");
  c.expect = j.contains("expect") ? parse_expectations(j["expect"]) : default_expectations(c.scenario);
  return c;
}

ScenarioConfig parse_scenario_config(const std::string& t) {
  json j;
  try {
    j = json::parse(t);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return scenario_config_from_json(j);
}

json scenario_config_to_json(const ScenarioConfig& c) {
  json j = {{"scenario", scenario_name(c.scenario)},
            {"system", c.system},
            {"charger", c.charger},
            {"receiver", c.receiver ? json(*c.receiver) : json(nullptr)},
            {"object", c.object ? json(*c.object) : json(nullptr)},
            {"overrides", c.overrides},
            {"attack", attack_plan_to_json(c.attack)},
            {"duration", c.duration},
            {"seed", c.seed},
            {"outputs", c.outputs},
            {"countermeasure", {{"enabled", c.countermeasure}, {"cutoff", c.countermeasure_cutoff}}},
            {"eavesdrop", c.eavesdrop},
            {"expect", expectations_to_json(c.expect)}};
  return j;
}

SimConfig resolve_scenario(const ScenarioConfig& c, const ProfileRegistry& reg) {
  SimConfig s;
  const json& ov = c.overrides;
  auto section = [&](const char* name) -> const json* { return ov.contains(name) ? &ov[name] : nullptr; };
  s.system = reg.system(c.system);
  if (auto* o = section("system")) apply_overrides(s.system, *o);
  if (c.countermeasure) s.system.input_filter_cutoff = c.countermeasure_cutoff;
  s.charger = reg.charger(c.charger);
  if (auto* o = section("charger")) apply_overrides(s.charger, *o);
  if (c.receiver) {
    s.receiver = reg.receiver(*c.receiver);
    if (auto* o = section("receiver")) apply_overrides(*s.receiver, *o);
  } else if (section("receiver")) {
    throw ConfigError("overrides.receiver given but the scenario has no receiver");
  }
  if (c.object) {
    s.object = reg.object(*c.object);
    if (auto* o = section("object")) apply_overrides(*s.object, *o);
  } else if (section("object")) {
    throw ConfigError("overrides.object given but the scenario has no object");
  }
  s.attack = c.attack;
  s.duration = c.duration;
  s.seed = c.seed;
  s.eavesdrop = c.eavesdrop;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------

double measure_envelope_depth(const SystemParams& p, const InterferenceSpec& i, double window) {
  const Trace coil = tx_coil_current(p, i, window, kCarrierRate);
  const Trace env = envelope(coil, p.f_p);
  const std::size_t trim = env.size() / 5;
  std::vector<double> mid(env.samples.begin() + static_cast<long>(trim), env.samples.end() - static_cast<long>(trim));
  if (!i.waveform) {
    // Tone: project onto f_i over whole cycles, which ignores residual carrier ripple.
    const auto per_cycle = kCarrierRate / i.f_i;
    const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(mid.size()) / per_cycle) * per_cycle);
    if (n == 0) throw std::invalid_argument("measure_envelope_depth: window shorter than one interference cycle");
    double s = 0.0, c = 0.0, dc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ph = 2.0 * std::numbers::pi * i.f_i * static_cast<double>(k) / kCarrierRate;
      s += mid[k] * std::sin(ph);
      c += mid[k] * std::cos(ph);
      dc += mid[k];
    }
    return 2.0 * std::hypot(s, c) / dc;
  }
  // Broadband: drop aliased carrier harmonics above the 10 kHz interference band, then peak deviation.
  mid = filter_cascade(butterworth_lowpass(4, 12e3, kCarrierRate), mid);
  return relative_depth(mid);
}

double measure_bus_scaling(const SystemParams& p, double m_i, double f_i, double window) {
  if (!(m_i > 0)) throw std::invalid_argument("measure_bus_scaling: m_i must be positive");
  const double rate = kEnvelopeRate;
  // Whole number of cycles so the projection is exact for a pure tone.
  const double cycles = std::max(1.0, std::floor(window * f_i));
  const Trace v = bus_voltage(p, InterferenceSpec{m_i, f_i, std::nullopt}, cycles / f_i, rate);
  double s = 0.0;
  double c = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double ph = 2.0 * std::numbers::pi * f_i * static_cast<double>(k) / rate;
    s += v.samples[k] * std::sin(ph);
    c += v.samples[k] * std::cos(ph);
  }
  const double amp = 2.0 * std::hypot(s, c) / static_cast<double>(v.size());
  return amp / (bus_dc_voltage(p) * m_i);
}

bool ScenarioReport::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

std::string ScenarioReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  return {};
}

std::string ScenarioReport::summary() const {
  std::ostringstream os;
  os << "scenario=" << scenario << "\n";
  for (const auto& [k, v] : metrics) os << k << "=" << v << "\n";
  for (const auto& f : files) os << "file=" << fs::path(f).filename().string() << "\n";
  for (const auto& a : assertions) os << "assert " << a.name << " " << (a.pass ? "PASS" : "FAIL") << " " << a.detail << "\n";
  os << "result=" << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

namespace {

void add_assertions(const ScenarioConfig& c, const SimConfig& s, ScenarioReport& r) {
  const Expectations& e = c.expect;
  const SimResult& sim = r.sim;
  auto check = [&](std::string name, bool pass, std::string detail) {
    r.assertions.push_back({std::move(name), pass, std::move(detail)});
  };
  if (e.power_transfer) {
    const bool in = sim.charger.phase == Phase::PowerTransfer;
    check("power_transfer", in == *e.power_transfer, std::string("phase=") + phase_name(sim.charger.phase));
  }
  if (e.steady_power_tolerance && s.receiver) {
    const double got = s.receiver->efficiency * tail_mean(sim.power, 5.0);
    const double err = std::fabs(got - s.receiver->target_power) / s.receiver->target_power;
    check("steady_power", err <= *e.steady_power_tolerance, "received=" + fmt(got) + " rel_err=" + fmt(err));
  }
  if (e.protections) {
    const std::string got = sim.receiver ? sim.receiver->protections.str() : "none";
    check("protections", got == *e.protections, "latched=" + got);
  }
  if (e.final_temp) {
    const double t = sim.temperature.samples.empty() ? 0.0 : sim.temperature.samples.back();
    check("final_temp", t >= e.final_temp->first && t <= e.final_temp->second, "final_temp=" + fmt(t));
  }
  if (e.max_temp_below) check("max_temp", sim.max_temp < *e.max_temp_below, "max_temp=" + fmt(sim.max_temp));
  if (e.object_damaged) {
    const bool d = sim.object && sim.object->damaged;
    check("object_damaged", d == *e.object_damaged, std::string("damaged=") + (d ? "true" : "false"));
  }
  if (e.object_temp_above) {
    const double t = sim.object ? sim.object->thermal.temp : 0.0;
    check("object_temp", t > *e.object_temp_above, "object_temp=" + fmt(t));
  }
  if (e.handshake) check("handshake", *e.handshake == handshake_status_name(sim.handshake),
                         std::string("status=") + handshake_status_name(sim.handshake));
  if (e.reached_extended) check("reached_extended", sim.reached_extended == *e.reached_extended,
                                std::string("extended=") + (sim.reached_extended ? "true" : "false"));
  if (e.terminated) check("terminated", (sim.terminations > 0) == *e.terminated,
                          "terminations=" + std::to_string(sim.terminations));
  for (const auto& kind : e.recovered) {
    const std::string needle = "kind=" + kind + " ";
    const bool found = std::any_of(sim.recovered.begin(), sim.recovered.end(), [&](const RecoveredMessage& m) {
      return format_message(m).find(needle) != std::string::npos;
    });
    check("recovered_" + kind, found, std::to_string(sim.recovered.size()) + " messages");
  }
  if (e.depth_tolerance) {
    const std::string got = r.metric("envelope_depth");
    const std::string want = r.metric("expected_depth");
    if (got.empty() || want.empty()) {
      check("depth_law", false, "no voice action in the attack plan");
    } else {
      const double err = std::fabs(std::stod(got) - std::stod(want));
      check("depth_law", err <= *e.depth_tolerance, "depth=" + got + " expected=" + want);
    }
  }
}

void write_text(const fs::path& p, const std::string& body, std::vector<std::string>& files) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << body;
  files.push_back(p.string());
}

void write_trace(const fs::path& p, const Trace& t, std::vector<std::string>& files) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  write_trace_csv(os, t);
  files.push_back(p.string());
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& c, bool write_outputs, const ProfileRegistry& profiles) {
  const SimConfig s = resolve_scenario(c, profiles);
  const fs::path out = c.outputs;
  if (write_outputs) {
    std::error_code ec;
    fs::create_directories(out, ec);
    const fs::path probe = out / ".write_test";
    std::ofstream test(probe);
    if (ec || !test) throw ConfigError("output directory '" + out.string() + "' is not writable");
    test.close();
    fs::remove(probe, ec);
  }

  ScenarioReport r;
  r.scenario = scenario_name(c.scenario);
  r.sim = simulate(s);
  const SimResult& sim = r.sim;

  auto m = [&](const std::string& k, const std::string& v) { r.metrics.emplace_back(k, v); };
  m("seed", std::to_string(c.seed));
  m("duration", fmt(c.duration));
  m("charger", c.charger);
  m("countermeasure", c.countermeasure ? fmt(c.countermeasure_cutoff) : "off");
  m("final_phase", phase_name(sim.charger.phase));
  m("protocol", protocol_name(sim.charger.protocol));
  m("reached_extended", sim.reached_extended ? "true" : "false");
  m("terminations", std::to_string(sim.terminations));
  m("max_power", fmt(sim.max_power));
  m("final_power", fmt(tail_mean(sim.power, 5.0)));
  if (s.receiver) {
    m("rx_phase", rx_phase_name(sim.receiver->phase));
    m("protections", sim.receiver->protections.str());
    m("p1_time", fmt_time(sim.p1_time));
    m("p2_time", fmt_time(sim.p2_time));
    m("p3_time", fmt_time(sim.p3_time));
    m("max_temp", fmt(sim.max_temp));
    m("final_temp", fmt(sim.receiver->thermal.temp));
  }
  if (s.object) {
    m("object", s.object->name);
    m("object_temp", fmt(sim.object->thermal.temp));
    m("object_steady_temp", fmt(steady_state_temp(s.object->thermal, s.object->absorption * tail_mean(sim.power, 5.0))));
    m("object_damaged", sim.object->damaged ? "true" : "false");
    m("damage_time", fmt_time(sim.damage_time));
  }
  m("rx_packets", std::to_string(sim.rx_packets));
  m("stability_failures", std::to_string(sim.rx_lost));
  m("collisions", std::to_string(sim.collisions));
  if (!s.attack.schedule.empty()) {
    m("attack", attack_kind_name(s.attack.kind));
    m("forged_packets", std::to_string(sim.forged));
    m("jams", std::to_string(sim.jams));
    m("handshake", handshake_status_name(sim.handshake));
  }
  if (s.eavesdrop) m("recovered_messages", std::to_string(sim.recovered.size()));
  if (const AttackAction* v = voice_action(s.attack)) {
    InterferenceSpec spec{v->m_i, v->f_i, std::nullopt};
    double expected = 0.0;
    if (v->waveform == "sine") {
      expected = interference_gain(s.system, v->f_i) * v->m_i;
    } else {
      spec.waveform = named_waveform(v->waveform, v->f_i, 0.25, kCarrierRate);
      const Trace coil = propagate_interference(s.system, interference_waveform(spec, 0.25, kCarrierRate));
      const std::size_t trim = coil.size() / 5;
      for (std::size_t k = trim; k + trim < coil.size(); ++k) expected = std::max(expected, std::fabs(coil.samples[k]));
    }
    m("waveform", v->waveform);
    m("m_i", fmt(v->m_i));
    m("f_i", fmt(v->f_i));
    m("envelope_depth", fmt(measure_envelope_depth(s.system, spec)));
    m("expected_depth", fmt(expected));
    if (v->waveform == "sine" && v->m_i > 0) m("recovered_k", fmt(measure_bus_scaling(s.system, v->m_i, v->f_i)));
  }

  add_assertions(c, s, r);

  if (write_outputs) {
    std::ostringstream log;
    for (const auto& l : sim.transitions) log << l << "\n";
    write_text(out / "transitions.log", log.str(), r.files);
    if (!s.attack.schedule.empty()) {
      std::ostringstream at;
      for (const auto& l : sim.attacker_transcript) at << l << "\n";
      write_text(out / "attacker.log", at.str(), r.files);
    }
    if (s.eavesdrop) {
      std::ostringstream rec;
      for (const auto& msg : sim.recovered) rec << format_message(msg) << "\n";
      write_text(out / "recovered.txt", rec.str(), r.files);
    }
    write_trace(out / "adapter_voltage.csv", sim.adapter_voltage, r.files);
    write_trace(out / "tx_envelope.csv", sim.tx_envelope, r.files);
    write_trace(out / "power.csv", sim.power, r.files);
    write_trace(out / "temperature.csv", sim.temperature, r.files);
    r.files.push_back((out / "summary.txt").string());
    std::vector<std::string> unused;
    write_text(out / "summary.txt", r.summary(), unused);
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string SweepTable::csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

SweepTable sweep(const ScenarioConfig& base, const std::string& parameter, const std::vector<std::string>& values,
                 const ProfileRegistry& profiles) {
  static const std::set<std::string> kSweepable{"m_i", "f_i", "charger", "depth", "jam_depth"};
  if (!kSweepable.count(parameter))
    throw ConfigError("parameter '" + parameter + "' is not sweepable (m_i, f_i, charger, depth, jam_depth)");
  SweepTable t;
  t.parameter = parameter;
  t.columns = {parameter,     "envelope_depth", "expected_depth", "recovered_k", "stability_failures",
               "max_power",   "max_temp",       "final_phase",    "passed"};
  for (const auto& value : values) {
    ScenarioConfig c = base;
    if (parameter == "charger") {
      c.charger = value;
    } else {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError("sweep value '" + value + "' is not a number");
      }
      bool applied = false;
      for (auto& a : c.attack.schedule) {
        if (parameter == "m_i" && a.type == ActionType::Voice) a.m_i = v, applied = true;
        if (parameter == "f_i" && a.type == ActionType::Voice) a.f_i = v, applied = true;
        if (parameter == "depth" && (a.type == ActionType::ForgePacket || a.type == ActionType::CeStream ||
                                     a.type == ActionType::Toast || a.type == ActionType::FodHandshake))
          a.depth = v, applied = true;
        if (parameter == "jam_depth" && (a.type == ActionType::Jam || a.type == ActionType::Toast))
          a.jam_depth = v, applied = true;
      }
      if (!applied) throw ConfigError("no attack action takes parameter '" + parameter + "'");
      try {
        c.attack.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sweep value ") + value + ": " + e.what());
      }
    }
    const ScenarioReport r = run_scenario(c, false, profiles);
    const std::string fails = r.metric("stability_failures");
    t.rows.push_back({value, r.metric("envelope_depth"), r.metric("expected_depth"), r.metric("recovered_k"), fails,
                      r.metric("max_power"), r.metric("max_temp"), r.metric("final_phase"),
                      r.passed() ? "true" : "false"});
    if (!t.first_trip && !fails.empty() && fails != "0") t.first_trip = value;
  }
  return t;
}

}  // namespace qisim
