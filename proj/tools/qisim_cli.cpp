// SPDX-License-Identifier: Apache-2.0
//
// qisim: scenario runner, parameter sweeps, standalone trace decoding and
// built-in demos.
//
//   qisim run <config.json> [--out DIR] [--seed N]
//   qisim sweep <config.json> --param NAME --values CSV
//   qisim decode <trace.csv> [--mode auto|ask|fsk] [--fp HZ]
//   qisim demo <name> [--out DIR] [--seed N]
//   qisim demo --list
//
// Exit status: 0 success, 1 internal error, 2 configuration error, 3 scenario
// assertion failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qisim/eavesdropper.hpp"
#include "qisim/scenario.hpp"
#include "qisim/signal.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAssertion = 3;

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw qisim::ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Accepts "a,b,c" and ranges "start:step:stop" (inclusive), mixed.
std::vector<std::string> expand_values(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(item);
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) throw qisim::ConfigError("range '" + item + "' must be start:step:stop");
    double a = 0, step = 0, b = 0;
    try {
      a = std::stod(item.substr(0, c1));
      step = std::stod(item.substr(c1 + 1, c2 - c1 - 1));
      b = std::stod(item.substr(c2 + 1));
    } catch (const std::exception&) {
      throw qisim::ConfigError("range '" + item + "' is not numeric");
    }
    if (!(step > 0) || b < a) throw qisim::ConfigError("range '" + item + "' needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long k = 0; k <= n; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", a + static_cast<double>(k) * step);
      out.emplace_back(buf);
    }
  }
  return out;
}

int run_config(qisim::ScenarioConfig cfg, const std::string& out, long long seed) {
  if (!out.empty()) cfg.outputs = out;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  const auto report = qisim::run_scenario(cfg);
  std::cout << report.summary();
  return report.passed() ? 0 : kExitAssertion;
}

int decode(const std::string& path, const std::string& mode, double f_p) {
  std::ifstream is(path);
  if (!is) throw qisim::ConfigError("cannot read '" + path + "'");
  qisim::Trace t;
  try {
    t = qisim::read_trace_csv(is);
  } catch (const std::exception& e) {
    throw qisim::ConfigError(path + ": " + e.what());
  }
  const bool fsk = mode == "fsk" || (mode == "auto" && t.sample_rate >= 8.0 * f_p);
  std::string diag;
  std::vector<qisim::RecoveredMessage> msgs;
  try {
    msgs = fsk ? qisim::recover_fsk(t, f_p, {}, &diag) : qisim::recover_ask(t);
  } catch (const std::invalid_argument& e) {
    throw qisim::ConfigError(path + ": " + e.what());
  }
  for (const auto& m : msgs) std::cout << qisim::format_message(m) << "\n";
  if (msgs.empty()) std::cerr << "no messages recovered" << (diag.empty() ? "" : ": " + diag) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qisim: adapter-side interference simulator for Qi wireless charging"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir, param, values, trace_path, mode = "auto", demo_name;
  long long seed = -1;
  double f_p = 140e3;
  bool list = false;

  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", cfg_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--seed", seed, "Random seed (overrides the config)")->check(CLI::NonNegativeNumber);

  auto* sw = app.add_subcommand("sweep", "Sweep one parameter and print a CSV table");
  sw->add_option("config", cfg_path, "Scenario JSON file")->required();
  sw->add_option("--param", param, "m_i, f_i, charger, depth or jam_depth")->required();
  sw->add_option("--values", values, "Comma-separated values; start:step:stop ranges allowed")->required();

  auto* dec = app.add_subcommand("decode", "Recover Qi messages from a trace CSV");
  dec->add_option("trace", trace_path, "Trace CSV file")->required();
  dec->add_option("--mode", mode, "auto, ask or fsk")->check(CLI::IsMember({"auto", "ask", "fsk"}));
  dec->add_option("--fp", f_p, "Nominal power-signal frequency, Hz");

  auto* demo = app.add_subcommand("demo", "Run a built-in scenario");
  demo->add_option("name", demo_name, "Demo name");
  demo->add_flag("--list", list, "List built-in demos");
  demo->add_option("--out", out_dir, "Output directory");
  demo->add_option("--seed", seed, "Random seed")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_config(qisim::parse_scenario_config(read_file(cfg_path)), out_dir, seed);
    if (*sw) {
      const auto table = qisim::sweep(qisim::parse_scenario_config(read_file(cfg_path)), param, expand_values(values));
      std::cout << table.csv();
      if (table.first_trip) std::cerr << "stability proxy first trips at " << param << "=" << *table.first_trip << "\n";
      return 0;
    }
    if (*dec) return decode(trace_path, mode, f_p);
    if (*demo) {
      const auto& demos = qisim::embedded::demo_configs();
      if (list || demo_name.empty()) {
        for (const auto& [name, body] : demos) std::cout << name << "\n";
        return list ? 0 : kExitConfig;
      }
      for (const auto& [name, body] : demos)
        if (name == demo_name) return run_config(qisim::parse_scenario_config(body), out_dir, seed);
      throw qisim::ConfigError("unknown demo '" + demo_name + "' (see: qisim demo --list)");
    }
  } catch (const qisim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
