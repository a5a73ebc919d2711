// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status = number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qisim/attacker.hpp"
#include "qisim/circuit.hpp"
#include "qisim/codec.hpp"
#include "qisim/eavesdropper.hpp"
#include "qisim/fft.hpp"
#include "qisim/profiles.hpp"
#include "qisim/scenario.hpp"
#include "qisim/sim.hpp"

using namespace qisim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

std::string num(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

ScenarioConfig demo(const std::string& name) {
  for (const auto& [n, body] : embedded::demo_configs())
    if (n == name) return parse_scenario_config(body);
  throw ConfigError("no demo named " + name);
}

double window_mean(const Trace& t, double from, double to) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double at = t.t0 + static_cast<double>(k) / t.sample_rate;
    if (at >= from && at < to) {
      s += t.samples[k];
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

QiPacket random_packet(std::mt19937_64& rng, std::size_t max_payload) {
  for (;;) {
    const auto h = static_cast<std::uint8_t>(rng() & 0xFF);
    const auto n = payload_length(h);
    if (n > max_payload) continue;
    std::vector<std::uint8_t> payload(n);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng() & 0xFF);
    return make_packet(h, payload);
  }
}

// --- 1: scaling factor anchors -------------------------------------------
void scaling_anchors(Outcome& o) {
  const SystemParams p;
  const std::pair<double, double> anchors[] = {{1e3, 0.99}, {10e3, 0.95}, {100e3, 0.30}};
  for (auto [f, want] : anchors) {
    const double k = scaling_factor(p, f);
    o.detail << (o.detail.tellp() > 0 ? " " : "") << "K(" << num(f / 1e3) << "k)=" << num(k);
    if (std::fabs(k - want) > 0.02) o.pass = false;
  }
}

// --- 2: envelope depth law -----------------------------------------------
struct DepthGrid {
  double worst = 0.0;
  double smallest_err = 1e9;
};

DepthGrid depth_grid(const SystemParams& p) {
  DepthGrid g;
  for (double m : {0.1, 0.3, 0.5})
    for (double f : {500.0, 1e3, 2e3, 5e3, 10e3}) {
      const double expect = scaling_factor(p, f) * m;
      const double err = std::fabs(measure_envelope_depth(p, {m, f, std::nullopt}) - expect);
      g.worst = std::max(g.worst, err);
      g.smallest_err = std::min(g.smallest_err, err);
    }
  return g;
}

void depth_law(Outcome& o) {
  const auto g = depth_grid(SystemParams{});
  o.detail << "15 points, max |depth - K m_i| = " << num(g.worst, 3);
  o.pass = g.worst <= 0.01;
}

// --- 3: staircase fundamental --------------------------------------------
void staircase(Outcome& o) {
  const double rate = 100 * 140e3, fp = 140e3, v = 12.0;
  double worst = 0.0;
  for (double D : {0.2, 0.5, 0.8, 1.0}) {
    const auto t = inverter_staircase(v, D, fp, 100 / fp, rate);
    const auto spec = rfft(t.samples);
    const std::size_t bin = 100;  // 100 whole cycles
    const double amp = 2.0 * std::abs(spec[bin]) / static_cast<double>(t.size());
    const double expect = 4 * v / std::numbers::pi * std::sin(std::numbers::pi * D / 2);
    worst = std::max(worst, std::fabs(amp - expect) / expect);
  }
  o.detail << "max relative error " << num(worst * 100, 3) << "%";
  o.pass = worst <= 0.005;
}

// --- 4: codec ------------------------------------------------------------
void codec(Outcome& o) {
  std::mt19937_64 rng(4);
  int bad_frame = 0, bad_ask = 0, bad_fsk = 0;
  const double fp = 140e3;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_packet(rng, 27);
    const auto bits = frame_packet(p);
    const auto pr = parse_packet(bits);
    if (!pr.ok() || !(*pr.packet == p)) ++bad_frame;

    auto env = ask_modulate(bits, kAskBitRate, 0.5, kEnvelopeRate);
    for (auto& v : env.samples) v += 1.0;
    const auto d = ask_demodulate(env, kAskBitRate);
    const auto ar = d.ok() ? parse_packet(d.bits) : ParseResult{};
    if (!ar.ok() || !(*ar.packet == p)) ++bad_ask;

    const auto resp = fsk_data(p);
    std::vector<Level> lv;
    for (const auto& seg : fsk_modulate(resp, fp)) lv.push_back(seg.freq > fp + kFskDeltaF / 2 ? Level::High : Level::Low);
    const auto back = classify_fsk_bits(bmc_decode(lv));
    if (!back || !(*back == resp)) ++bad_fsk;
  }
  std::size_t flips = 0, missed = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = random_packet(rng, 6);
    const auto bits = frame_packet(p);
    for (std::size_t k = kPreambleBits; k < bits.size(); ++k) {
      auto bad = bits;
      bad[k] ^= 1;
      if (parse_packet(bad).ok()) ++missed;
      ++flips;
    }
  }
  o.detail << "round-trip failures frame/ask/fsk=" << bad_frame << "/" << bad_ask << "/" << bad_fsk
           << ", undetected flips " << missed << "/" << flips;
  o.pass = bad_frame == 0 && bad_ask == 0 && bad_fsk == 0 && missed == 0;
}

// --- 5: eavesdropping ----------------------------------------------------
void eavesdrop(Outcome& o) {
  const SystemParams sys;
  const std::vector<QiPacket> kinds{make_sig(0x84), make_id({0x12, 0x00, 0x5A, 0x00, 0x00, 0x31, 0x07}),
                                    make_cfg(true), make_fod(200), make_grq(header::ID), make_srq(1, 30),
                                    make_rp(5.0),   make_ce(-7),   make_ept(1), make_packet(0x30, {1, 2, 3})};
  int ask_ok = 0;
  for (const auto& p : kinds) {
    const auto rx = ask_modulate(frame_packet(p), kAskBitRate, 0.5, kEnvelopeRate);
    Trace i;
    i.sample_rate = kEnvelopeRate;
    i.samples.assign(rx.size() + 1000, 0.6);
    for (std::size_t k = 0; k < rx.size(); ++k) i.samples[500 + k] = 0.6 * (1.0 + rx.samples[k]);
    const auto msgs = recover_ask(load_change_trace(sys, i));
    if (msgs.size() == 1 && std::get<QiPacket>(msgs[0].message) == p) ++ask_ok;
  }
  const double fp = 140e3, amp = 3e-3;
  const auto id = make_id({0x12, 0x00, 0x4C, 0x51, 0x49, 0x54, 0x58});
  const auto t = render_fsk_ripple(fsk_modulate(fsk_data(id), fp), fp, amp, 0.01, amp / 10, 7);
  const auto fsk = recover_fsk(t, fp);
  const bool id_ok = fsk.size() == 1 && fsk_data_packet(std::get<FskResponse>(fsk[0].message)) == id;
  double lo = 1e12, hi = 0;
  for (double f : track_ripple_frequency(stft(t, 4096, 1024), fp, kFskDeltaF))
    if (!std::isnan(f)) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  const bool near = lo >= 2 * fp - 3 * kFskDeltaF && hi <= 2 * fp + 3 * kFskDeltaF && hi > lo;
  o.detail << "ASK kinds " << ask_ok << "/" << kinds.size() << ", FSK ID " << (id_ok ? "recovered" : "missed")
           << ", ripple " << num(lo / 1e3, 5) << ".." << num(hi / 1e3, 5) << " kHz";
  o.pass = ask_ok == static_cast<int>(kinds.size()) && id_ok && near;
}

// --- 6: forged control errors --------------------------------------------
ScenarioConfig ce_stream(int value, bool countermeasure) {
  auto c = demo("ce_injection");
  c.attack.schedule.at(0).ce_value = value;
  c.countermeasure = countermeasure;
  c.expect = {};
  return c;
}

// Mean transmitted power in the 2 s before the stream and over its last 3 s.
std::pair<double, double> ce_effect(int value, bool countermeasure) {
  const auto c = ce_stream(value, countermeasure);
  const double at = c.attack.schedule.at(0).at;
  const auto r = run_scenario(c, false);
  return {window_mean(r.sim.power, at - 2.0, at), window_mean(r.sim.power, c.duration - 3.0, c.duration)};
}

enum class Move { Up, Hold, Down };

Move classify(double before, double after) {
  if (after > before * 1.2) return Move::Up;
  if (after < before * 0.8) return Move::Down;
  return Move::Hold;
}

bool ce_streams(Outcome& o, bool countermeasure) {
  bool all = true;
  for (auto [value, want] : {std::pair{112, Move::Up}, {0, Move::Hold}, {-128, Move::Down}}) {
    const auto [before, after] = ce_effect(value, countermeasure);
    const Move got = classify(before, after);
    o.detail << (o.detail.tellp() > 0 ? ", " : "") << "CE(" << value << ") " << num(before) << "->" << num(after) << " W";
    if (countermeasure ? got != Move::Hold : got != want) all = false;
  }
  return all;
}

// --- 7: toast --------------------------------------------------------------
struct ToastResult {
  std::string protections;
  double final_temp = 0, max_temp = 0;
  bool passed = false;
};

ToastResult toast(const std::string& name, bool countermeasure) {
  auto c = demo(name);
  c.countermeasure = countermeasure;
  const auto r = run_scenario(c, false);
  return {r.metric("protections"), r.sim.receiver->thermal.temp, r.sim.max_temp, r.passed()};
}

void power_toast(Outcome& o) {
  const auto jam = toast("power_toast", false);
  const auto nojam = toast("power_toast_nojam", false);
  o.detail << "jam: " << jam.protections << " final " << num(jam.final_temp) << " F; no jam: " << nojam.protections
           << " max " << num(nojam.max_temp) << " F";
  o.pass = jam.passed && nojam.passed;
}

// --- 8: foreign object ---------------------------------------------------
void fod(Outcome& o) {
  const auto r = run_scenario(demo("fod_destruction"), false);
  const auto h = run_scenario(demo("fod_honest_reference"), false);
  o.detail << "handshake " << r.metric("handshake") << ", extended " << r.metric("reached_extended") << ", clip "
           << r.metric("object_temp") << " F (steady " << r.metric("object_steady_temp") << "), damaged "
           << r.metric("object_damaged") << "; honest Q: " << h.metric("handshake");
  o.pass = r.passed() && h.passed() && h.sim.handshake == HandshakeStatus::Aborted;
}

// --- 9: countermeasure -----------------------------------------------------
void countermeasure(Outcome& o) {
  SystemParams plain, filtered;
  filtered.input_filter_cutoff = 90.0;
  double min_db = 1e9;
  for (double f = 500.0; f <= 10e3 + 1; f *= 1.25) {
    const double db = 20 * std::log10(interference_gain(plain, f) / interference_gain(filtered, f));
    min_db = std::min(min_db, db);
  }
  o.detail << "min attenuation " << num(min_db, 3) << " dB";
  o.require(min_db >= 15.0, "attenuation below 15 dB");

  const auto g = depth_grid(filtered);
  o.detail << "; depth law miss >= " << num(g.smallest_err, 3);
  o.require(g.smallest_err > 0.01, "depth law still holds");

  Outcome ce;
  const bool ce_blocked = ce_streams(ce, true);
  o.detail << "; " << ce.detail.str();
  o.require(ce_blocked, "forged CE still moves power");

  const auto t = toast("power_toast", true);
  o.detail << "; toast " << t.protections << " max " << num(t.max_temp) << " F";
  o.require(t.max_temp < 126.0, "toast still reaches P2");
}

// --- 10: determinism ---------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void determinism(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "qisim_acceptance";
  fs::remove_all(root);
  std::size_t compared = 0, differing = 0;
  for (const char* name : {"power_toast", "eavesdrop_demo", "fod_destruction"}) {
    auto c = demo(name);
    c.duration = std::min(c.duration, 20.0);
    std::vector<fs::path> dirs;
    for (int run = 0; run < 2; ++run) {
      c.outputs = (root / name / std::to_string(run)).string();
      run_scenario(c, true);
      dirs.emplace_back(c.outputs);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      ++compared;
      if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) ++differing;
    }
  }
  fs::remove_all(root);
  o.detail << compared << " files compared, " << differing << " differ";
  o.pass = compared > 0 && differing == 0;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"scaling factor anchors", scaling_anchors},
      {"envelope depth law", depth_law},
      {"inverter staircase fundamental", staircase},
      {"codec round-trips and corruption detection", codec},
      {"eavesdropping ASK and FSK", eavesdrop},
      {"forged CE streams steer power", [](Outcome& o) { o.pass = ce_streams(o, false); }},
      {"power toast with and without jamming", power_toast},
      {"foreign object handshake", fod},
      {"input filter countermeasure", countermeasure},
      {"deterministic outputs", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu: %s  %s [%s] (%.2f s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
