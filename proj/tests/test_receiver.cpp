// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "qisim/profiles.hpp"
#include "qisim/receiver.hpp"

using namespace qisim;

namespace {

const ReceiverProfile& phone() { return ProfileRegistry::builtin().receiver("phone"); }

struct RxDriver {
  ReceiverProfile prof;
  ReceiverState s;
  std::vector<std::pair<double, QiPacket>> sent;

  explicit RxDriver(ReceiverProfile p) : prof(std::move(p)), s(initial_receiver_state(prof)) {}

  void run(double seconds, double power, const std::optional<FskResponse>& first_response = std::nullopt) {
    std::optional<FskResponse> r = first_response;
    for (int i = 0; i < static_cast<int>(std::lround(seconds / 1e-3)); ++i) {
      auto step = rx_step(prof, s, power, 1e-3, r);
      r.reset();
      s = step.state;
      for (auto& p : step.packets) sent.emplace_back(s.now, p);
    }
  }
};

}  // namespace

TEST_SUITE("receiver") {

TEST_CASE("thermal step is forward Euler of the lumped model") {
  ThermalBody b;
  b.temp = 100.0;
  const double next = thermal_step(b, 5.0, 0.01);
  CHECK(next == doctest::Approx(100.0 + 0.01 * (5.0 - 0.178 * 23.0) / 1.78));
  CHECK(steady_state_temp(b, 0.0) == 77.0);
  CHECK_THROWS(thermal_step(b, 1.0, 0.0));
}

TEST_CASE("phone plateaus near 176.6 F at 18 W transmitted") {
  const auto& p = phone();
  const double heat = 18.0 * p.efficiency;
  const double plateau = p.thermal.ambient + heat / p.thermal.dissipation;
  CHECK(plateau == doctest::Approx(176.6).epsilon(0.05 / 176.6));
  ThermalBody b = p.thermal;
  const double tau = b.heat_capacity / b.dissipation;
  for (int k = 1; k <= 60000; ++k) {
    b.temp = thermal_step(b, heat, 1e-3);
    if (k % 10000 == 0) {
      // Closed-form exponential approach; Euler error at dt/tau = 1e-4 is tiny.
      const double t = k * 1e-3;
      const double exact = plateau - (plateau - 77.0) * std::exp(-t / tau);
      CHECK(b.temp == doctest::Approx(exact).epsilon(1e-3));
    }
  }
}

TEST_CASE("protections latch in order and never clear") {
  const auto& p = phone();
  auto set = protection_check(p, 112.9);
  CHECK(set.str() == "none");
  set = protection_check(p, 113.0, set);
  CHECK(set.str() == "P1");
  set = protection_check(p, 130.0, set);
  CHECK(set.str() == "P1,P2");
  set = protection_check(p, 90.0, set);
  CHECK(set.str() == "P1,P2");
  set = protection_check(p, 171.0, set);
  CHECK(set.str() == "P1,P2,P3");
}

TEST_CASE("control error encoding") {
  CHECK(control_error_value(5.0, 5.0) == 0);
  CHECK(control_error_value(5.0, 0.0) == 127);
  CHECK(control_error_value(5.0, 2.5) == 64);
  CHECK(control_error_value(5.0, 20.0) == -128);
}

TEST_CASE("profile validation") {
  CHECK_NOTHROW(phone().validate());
  auto p = phone();
  p.protection.p2 = 100;
  CHECK_THROWS(p.validate());
  p = phone();
  p.efficiency = 1.5;
  CHECK_THROWS(p.validate());
}

TEST_CASE("startup then negotiation then charging with acknowledged responses") {
  RxDriver d(phone());
  d.run(0.2, 1.0);
  REQUIRE(d.sent.size() >= 4);
  CHECK(d.sent[0].second == make_sig(0x84));
  CHECK(d.sent[1].second.kind == PacketKind::ID);
  CHECK(d.sent[2].second == make_cfg(true));
  CHECK(d.sent[3].second == make_fod(200));
  CHECK(d.s.phase == RxPhase::Negotiating);
  CHECK(d.s.awaiting_response);
  // Answer each request; the GRQ gets a DATA response.
  const std::vector<FskResponse> answers{fsk_ack(), fsk_data(make_id({1, 2, 3, 4, 5, 6, 7})), fsk_ack(), fsk_ack()};
  for (const auto& a : answers) {
    d.run(0.001, 1.0, a);
    d.run(0.2, 1.0);
  }
  CHECK(d.s.phase == RxPhase::Charging);
  const double from = d.s.now;
  d.run(1.0, 3.0);
  int ce = 0;
  for (const auto& [t, p] : d.sent)
    if (p.kind == PacketKind::CE && t > from) {
      CHECK(control_error(p) == control_error_value(5.0, 3.0));
      ++ce;
    }
  CHECK(ce >= 3);
}

TEST_CASE("receiver without negotiation goes straight to charging") {
  auto p = phone();
  p.neg_bit = false;
  RxDriver d(p);
  d.run(0.2, 1.0);
  CHECK(d.s.phase == RxPhase::Charging);
}

TEST_CASE("power loss resets to Off but keeps thermal state") {
  RxDriver d(phone());
  d.run(0.1, 1.0);
  const double temp = d.s.thermal.temp;
  d.run(0.05, 0.0);
  CHECK(d.s.phase == RxPhase::Off);
  CHECK(d.s.thermal.temp <= temp);
  CHECK(d.s.thermal.temp > 77.0);
}

TEST_CASE("P1 during charging sends EPT(over temperature) once") {
  auto p = phone();
  p.neg_bit = false;
  RxDriver d(p);
  d.run(0.2, 1.0);
  REQUIRE(d.s.phase == RxPhase::Charging);
  d.s.thermal.temp = 114.0;
  d.run(0.5, 1.0);
  int ept = 0;
  for (const auto& [t, pk] : d.sent)
    if (pk.kind == PacketKind::EPT) {
      CHECK(pk == make_ept(kEptOverTemperature));
      ++ept;
    }
  CHECK(ept == 1);
  CHECK(d.s.phase == RxPhase::Disabled);
}

TEST_CASE("foreign objects heat with absorbed power and latch damage") {
  const auto& reg = ProfileRegistry::builtin();
  ForeignObject clip = reg.object("paper_clip");
  CHECK_NOTHROW(clip.validate());
  const double steady = steady_state_temp(clip.thermal, clip.absorption * 18.0);
  CHECK(steady > 536.0);
  for (int k = 0; k < 60000 && !clip.damaged; ++k) clip = foreign_object_step(clip, 18.0, 1e-3);
  CHECK(clip.damaged);
  const double t_damage = clip.thermal.temp;
  clip = foreign_object_step(clip, 0.0, 1.0);
  CHECK(clip.damaged);
  CHECK(clip.thermal.temp < t_damage);
  for (const auto& [name, obj] : reg.objects) {
    CAPTURE(name);
    CHECK(obj.q_factor < reg.charger("charger_15w").empty_q);
  }
}

}  // TEST_SUITE
