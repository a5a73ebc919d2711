// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "qisim/attacker.hpp"
#include "qisim/circuit.hpp"
#include "qisim/waveforms.hpp"

using namespace qisim;

namespace {

// Charger-side coil envelope (relative) for an adapter-side interference trace.
std::vector<double> coil_envelope(const SystemParams& p, const Trace& interference, std::size_t pad) {
  Trace padded = interference;
  padded.samples.insert(padded.samples.begin(), pad, 0.0);
  padded.samples.insert(padded.samples.end(), pad, 0.0);
  const auto bus = propagate_interference(p, padded);
  std::vector<double> env(bus.samples.size());
  for (std::size_t k = 0; k < env.size(); ++k) env[k] = 1.0 + bus.samples[k];
  return env;
}

std::optional<QiPacket> demod_parse(const std::vector<double>& env) {
  Trace t;
  t.sample_rate = kEnvelopeRate;
  t.samples = env;
  const auto d = ask_demodulate(t, kAskBitRate);
  if (!d.ok()) return std::nullopt;
  const auto r = parse_packet(d.bits);
  if (!r.ok()) return std::nullopt;
  return r.packet;
}

AttackerObservation obs_at(double t, double power = 0.0) {
  AttackerObservation o;
  o.now = t;
  o.adapter_power = power;
  return o;
}

}  // namespace

TEST_SUITE("attacker") {

TEST_CASE("inject_noise scales the base waveform by 1 + m_i w") {
  Trace base;
  base.sample_rate = 100e3;
  base.samples.assign(1000, 12.0);
  const auto out = inject_noise(base, {0.2, 1000.0, {}});
  for (std::size_t k = 0; k < out.size(); k += 13)
    CHECK(out.samples[k] == doctest::Approx(12.0 * (1 + 0.2 * std::sin(2 * std::numbers::pi * 1000.0 * k / 100e3))));
  CHECK_THROWS(inject_noise(base, {1.0, 1000.0, {}}));
}

TEST_CASE("forged packets demodulate to themselves through the circuit") {
  const SystemParams p;
  std::mt19937_64 rng(3);
  const std::vector<QiPacket> fixed{make_sig(0x84), make_id({0x12, 0x00, 0x5A, 0x00, 0x00, 0x31, 0x07}), make_cfg(true),
                                    make_fod(0),    make_grq(header::ID), make_srq(1, 255), make_srq(0, 0),
                                    make_ce(127),   make_ce(-128), make_rp(17.3), make_ept(1)};
  for (const auto& pk : fixed) {
    CAPTURE(describe(pk));
    for (double depth : {0.05, 0.1, 0.3}) {
      const auto x = forge_ask_packet(pk, depth);
      CHECK(x.sample_rate == kEnvelopeRate);
      const auto got = demod_parse(coil_envelope(p, x, 200));
      REQUIRE(got);
      CHECK(*got == pk);
    }
  }
  CHECK_THROWS(forge_ask_packet(make_ce(0), 1.0));
}

TEST_CASE("jam_ask is seeded, bounded and two-level") {
  const auto a = jam_ask(0.04, 0.8, 42);
  const auto b = jam_ask(0.04, 0.8, 42);
  const auto c = jam_ask(0.04, 0.8, 43);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK(a.size() == 4000);
  for (double v : a.samples) CHECK((v == 0.0 || v == 0.8));
}

TEST_CASE("Monte Carlo: jamming destroys legitimate packets and never forges a different one") {
  constexpr int kTrials = 10000;
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> noise(0.0, 0.002);
  const std::vector<QiPacket> legit{make_ce(0), make_ce(-20), make_rp(5.0), make_ce(15), make_ept(3)};
  int destroyed = 0, collisions = 0;
  for (int i = 0; i < kTrials; ++i) {
    const auto& pk = legit[static_cast<std::size_t>(i) % legit.size()];
    // Receiver load modulation lowers the coil amplitude by ask_depth.
    auto rx = ask_modulate(frame_packet(pk), kAskBitRate, 0.5, kEnvelopeRate);
    const double onset = 1e-3 + 3e-3 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto jam = jam_ask(0.04, 0.8, rng());
    const std::size_t pad = 200;
    std::vector<double> env(rx.size() + 2 * pad, 1.0);
    for (std::size_t k = 0; k < rx.size(); ++k) env[pad + k] -= rx.samples[k];
    const auto j0 = pad + static_cast<std::size_t>(std::llround(onset * kEnvelopeRate));
    for (std::size_t k = 0; k < jam.size() && j0 + k < env.size(); ++k) env[j0 + k] += jam.samples[k];
    for (auto& v : env) v += noise(rng);
    const auto got = demod_parse(env);
    if (!got || !(*got == pk)) ++destroyed;
    if (got && !(*got == pk)) ++collisions;
  }
  MESSAGE("destroyed " << destroyed << "/" << kTrials << ", collisions " << collisions);
  CHECK(destroyed >= 0.99 * kTrials);
  CHECK(static_cast<double>(collisions) / kTrials < 1e-3);
}

TEST_CASE("inject_voice normalizes and rejects out-of-band audio") {
  const auto v = synth_voice(0.5, 48e3);
  const auto x = inject_voice(v, 0.3);
  double peak = 0;
  for (double s : x.samples) peak = std::max(peak, std::fabs(s));
  CHECK(peak == doctest::Approx(0.3));
  CHECK_THROWS(inject_voice(synth_sine(1.0, 15e3, 0.1, 48e3), 0.3));
  CHECK_NOTHROW(inject_voice(synth_sine(1.0, 5e3, 0.1, 48e3), 0.3));
}

TEST_CASE("attack plan validation") {
  AttackPlan plan;
  AttackAction a;
  a.at = 2.0;
  AttackAction b;
  b.at = 1.0;
  plan.schedule = {a, b};
  CHECK_THROWS(plan.validate());
  plan.schedule = {a};
  plan.schedule[0].jam_depth = 1.0;
  CHECK_THROWS(plan.validate());
  CHECK(parse_attack_kind("toast") == AttackKind::Toast);
  CHECK(parse_action_type("ce_stream") == ActionType::CeStream);
  CHECK_THROWS(parse_action_type("explode"));
}

TEST_CASE("scheduled forge and CE stream emissions") {
  AttackPlan plan;
  plan.kind = AttackKind::QiInjection;
  AttackAction f;
  f.at = 0.5;
  f.type = ActionType::ForgePacket;
  f.packet = make_ept(1);
  AttackAction s;
  s.at = 1.0;
  s.type = ActionType::CeStream;
  s.ce_value = 112;
  s.period = 0.25;
  s.until = 2.0;
  plan.schedule = {f, s};
  AttackerAgent agent(plan, 1);
  std::vector<AttackerEmission> all;
  for (int k = 0; k <= 3000; ++k) {
    auto e = agent.step(obs_at(k * 1e-3));
    for (auto& x : e) all.push_back(std::move(x));
  }
  REQUIRE(all.size() >= 2);
  CHECK(all[0].packet == make_ept(1));
  CHECK(all[0].start == doctest::Approx(0.5));
  int ce = 0;
  for (const auto& e : all)
    if (e.packet && e.packet->kind == PacketKind::CE) {
      CHECK(control_error(*e.packet) == 112);
      CHECK(e.start >= 1.0);
      CHECK(e.start <= 2.0);
      ++ce;
    }
  CHECK(ce == 5);
  CHECK(agent.forged_count() == 6);
}

TEST_CASE("handshake forges the negotiation sequence and waits for responses") {
  AttackPlan plan;
  plan.kind = AttackKind::FodHandshake;
  AttackAction h;
  h.type = ActionType::FodHandshake;
  h.reference_q = 0;
  h.then_toast = false;
  plan.schedule = {h};
  AttackerAgent agent(plan, 1);
  std::vector<QiPacket> sent;
  double t = 0;
  auto tick = [&](double power, std::vector<RecoveredMessage> fsk = {}) {
    auto o = obs_at(t, power);
    o.fsk = std::move(fsk);
    for (auto& e : agent.step(o))
      if (e.packet) sent.push_back(*e.packet);
    t += 1e-3;
  };
  for (int k = 0; k < 10; ++k) tick(0.0);
  CHECK(agent.handshake_status() == HandshakeStatus::WaitingForPing);
  for (int k = 0; k < 200; ++k) tick(1.0);
  CHECK(agent.handshake_status() == HandshakeStatus::Running);
  CHECK(agent.wants_fsk());
  REQUIRE(sent.size() == 4);
  CHECK(sent[0] == make_sig(0x84));
  CHECK(sent[2] == make_cfg(true));
  CHECK(sent[3] == make_fod(0));
  auto reply = [](FskResponse r) {
    RecoveredMessage m;
    m.direction = Direction::TxToRx;
    m.message = std::move(r);
    return std::vector<RecoveredMessage>{m};
  };
  tick(1.0, reply(fsk_ack()));
  for (int k = 0; k < 100; ++k) tick(1.0);
  REQUIRE(sent.size() == 5);
  CHECK(sent[4] == make_grq(header::ID));
  tick(1.0, reply(fsk_data(make_id({1, 2, 3, 4, 5, 6, 7}))));
  for (int k = 0; k < 100; ++k) tick(1.0);
  CHECK(sent.back().kind == PacketKind::SRQ);
  tick(1.0, reply(fsk_ack()));
  for (int k = 0; k < 100; ++k) tick(1.0);
  CHECK(sent.back() == make_srq(kSrqEndNegotiation, 0));
  tick(1.0, reply(fsk_ack()));
  CHECK(agent.handshake_status() == HandshakeStatus::Succeeded);

  SUBCASE("a NAK aborts") {
    AttackerAgent b(plan, 1);
    t = 0;
    for (int k = 0; k < 10; ++k) b.step(obs_at(t += 1e-3, 0.0));
    for (int k = 0; k < 200; ++k) b.step(obs_at(t += 1e-3, 1.0));
    auto o = obs_at(t += 1e-3, 1.0);
    o.fsk = reply(fsk_nak());
    b.step(o);
    CHECK(b.handshake_status() == HandshakeStatus::Aborted);
  }
}

TEST_CASE("activity detector finds a receiver packet onset and ignores noise") {
  SystemParams p;
  std::mt19937_64 rng(8);
  const double i_dc = 0.5;
  const double sigma = 0.1 * p.Z_ad * i_dc * 0.5;
  AttackerAgent agent({}, 1);
  int false_pos = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::normal_distribution<double> nd(0.0, sigma);
    const auto rx = ask_modulate(frame_packet(make_ce(trial - 50)), kAskBitRate, 0.5, kEnvelopeRate);
    Trace i;
    i.sample_rate = kEnvelopeRate;
    i.t0 = 1.0 - 2e-3;
    i.samples.assign(1000, i_dc);
    for (std::size_t k = 0; k < 800; ++k) i.samples[200 + k] = i_dc * (1 + rx.samples[k]);
    Trace dv = load_change_trace(p, i);
    for (auto& v : dv.samples) v += nd(rng);
    const auto hit = agent.detect_activity(dv);
    REQUIRE(hit);
    // The h1/h2 cascade spreads each pulse by 3/(8 f_ask) on either side.
    CHECK(*hit >= 1.0 - 4e-4);
    CHECK(*hit <= 1.0 + 1e-3);

    Trace quiet = dv;
    for (auto& v : quiet.samples) v = nd(rng);
    if (agent.detect_activity(quiet)) ++false_pos;
  }
  CHECK(false_pos <= 2);
}

}  // TEST_SUITE
