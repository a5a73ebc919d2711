// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "qisim/codec.hpp"

using namespace qisim;

namespace {

// Reference framing: 11-bit preamble, then per byte start 0, LSB-first data,
// odd parity, stop 1.
BitStream reference_frame(const std::vector<std::uint8_t>& bytes) {
  BitStream out(11, 1);
  for (auto b : bytes) {
    out.push_back(0);
    int ones = 0;
    for (int i = 0; i < 8; ++i) {
      out.push_back((b >> i) & 1);
      ones += (b >> i) & 1;
    }
    out.push_back(ones % 2 == 0 ? 1 : 0);
    out.push_back(1);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(const std::string& s) {
  std::vector<std::uint8_t> v;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) v.push_back(static_cast<std::uint8_t>(std::stoul(s.substr(i, 2), nullptr, 16)));
  return v;
}

QiPacket random_packet(std::mt19937_64& rng, std::size_t max_payload = 27) {
  for (;;) {
    const auto h = static_cast<std::uint8_t>(rng() & 0xFF);
    const auto n = payload_length(h);
    if (n > max_payload) continue;
    std::vector<std::uint8_t> payload(n);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng() & 0xFF);
    return make_packet(h, payload);
  }
}

BitStream random_bits(std::mt19937_64& rng, std::size_t n) {
  BitStream b(n);
  for (auto& v : b) v = rng() & 1;
  return b;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("BMC: transition at every boundary, extra mid-bit transition for ONE") {
  const BitStream bits{1, 0, 0, 1, 1, 0};
  const auto lv = bmc_encode(bits, Level::Low);
  REQUIRE(lv.size() == 12);
  Level prev = Level::Low;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    CHECK(lv[2 * k] != prev);
    CHECK((lv[2 * k + 1] != lv[2 * k]) == (bits[k] == 1));
    prev = lv[2 * k + 1];
  }
  CHECK(bmc_decode(lv) == bits);
  CHECK(bmc_decode(bmc_encode(bits, Level::High)) == bits);
}

TEST_CASE("BMC decoder rejects missing boundary transitions and odd lengths") {
  auto lv = bmc_encode({1, 0, 1, 1}, Level::Low);
  lv[4] = lv[3];
  try {
    bmc_decode(lv);
    FAIL("expected BmcError");
  } catch (const BmcError& e) {
    CHECK(e.bit_index() == 2);
  }
  CHECK(bmc_decode_prefix(lv) == BitStream{1, 0});
  CHECK_THROWS_AS(bmc_decode({Level::High}), BmcError);
}

TEST_CASE("BMC round-trips random streams") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto b = random_bits(rng, 1 + rng() % 300);
    CHECK(bmc_decode(bmc_encode(b, (rng() & 1) ? Level::High : Level::Low)) == b);
  }
}

TEST_CASE("header length classes") {
  CHECK(payload_length(0x01) == 1);
  CHECK(payload_length(0x1F) == 1);
  CHECK(payload_length(0x20) == 2);
  CHECK(payload_length(0x51) == 5);
  CHECK(payload_length(0x71) == 7);
  CHECK(payload_length(0x80) == 8);
  CHECK(payload_length(0xE0) == 20);
  CHECK_THROWS(make_packet(header::CE, {1, 2}));
}

TEST_CASE("framing matches the reference layout and checksum is XOR") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_packet(rng);
    std::uint8_t x = p.header;
    for (auto b : p.payload) x ^= b;
    CHECK(checksum(p.header, p.payload) == x);
    auto bytes = packet_bytes(p);
    CHECK(bytes.back() == x);
    CHECK(frame_packet(p) == reference_frame(bytes));
  }
}

TEST_CASE("packet constructors and accessors") {
  CHECK(control_error(make_ce(112)) == 112);
  CHECK(control_error(make_ce(-200)) == -128);
  CHECK(control_error(make_ce(500)) == 127);
  CHECK(received_power_mw(make_rp(5.0)) == 5000);
  CHECK(received_power_mw(make_rp(99.0)) == 25500);
  CHECK(neg_bit(make_cfg(true)));
  CHECK_FALSE(neg_bit(make_cfg(false)));
  CHECK(reference_q(make_fod(200)) == 200);
  CHECK(describe(make_srq(kSrqGuaranteedPower, 30)) == "SRQ(01,30)");
  CHECK(describe(make_grq(header::ID)) == "GRQ(71)");
  CHECK(kind_for_header(0x71) == PacketKind::ID);
  CHECK(kind_for_header(0x30) == PacketKind::PROP);
}

TEST_CASE("golden packet corpus") {
  std::ifstream is(std::string(QISIM_TEST_DATA) + "/golden_packets.txt");
  REQUIRE(is.good());
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string hex, status, kind, desc;
    ls >> hex >> status >> kind >> desc;
    CAPTURE(line);
    const auto bytes = from_hex(hex);
    const auto r = parse_packet(reference_frame(bytes));
    CHECK(std::string(status_name(r.status)) == status);
    if (status == "ok") {
      REQUIRE(r.packet);
      CHECK(std::string(kind_name(r.packet->kind)) == kind);
      CHECK(describe(*r.packet) == desc);
      CHECK(packet_bytes(*r.packet) == bytes);
    }
    ++rows;
  }
  CHECK(rows >= 20);
}

TEST_CASE("parse status for short and empty streams") {
  CHECK(parse_packet({}).status == ParseStatus::NoPreamble);
  CHECK(parse_packet(BitStream{1, 1, 1, 0, 1, 1}).status == ParseStatus::NoPreamble);
  auto bits = frame_packet(make_ce(3));
  bits.resize(bits.size() - 5);
  CHECK(parse_packet(bits).status == ParseStatus::Truncated);
}

TEST_CASE("1000 random packets round-trip through framing, BMC and ASK") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_packet(rng);
    const auto bits = frame_packet(p);
    CHECK(bmc_decode(bmc_encode(bits, Level::Low)) == bits);
    const auto pr = parse_packet(bits);
    REQUIRE(pr.ok());
    CHECK(*pr.packet == p);

    auto env = ask_modulate(bits, kAskBitRate, 0.5, kEnvelopeRate);
    for (auto& v : env.samples) v += 1.0;
    const auto d = ask_demodulate(env, kAskBitRate);
    REQUIRE(d.ok());
    const auto ar = parse_packet(d.bits);
    REQUIRE(ar.ok());
    CHECK(*ar.packet == p);
  }
}

TEST_CASE("FSK responses round-trip through the half-bit schedule") {
  std::mt19937_64 rng(99);
  auto schedule_to_bits = [](const std::vector<FskSegment>& s, double fp) {
    std::vector<Level> lv;
    for (const auto& seg : s) lv.push_back(seg.freq > fp + kFskDeltaF / 2 ? Level::High : Level::Low);
    return bmc_decode(lv);
  };
  const double fp = 140e3;
  std::vector<FskResponse> cases{fsk_ack(), fsk_nak()};
  for (int i = 0; i < 200; ++i) cases.push_back(fsk_data(random_packet(rng, 8)));
  for (const auto& r : cases) {
    const auto s = fsk_modulate(r, fp);
    for (const auto& seg : s) CHECK(seg.duration == doctest::Approx(256.0 / fp));
    const auto back = classify_fsk_bits(schedule_to_bits(s, fp));
    REQUIRE(back);
    CHECK(*back == r);
  }
  CHECK(fsk_modulate({FskKind::ND, {}}, fp).empty());
  CHECK(schedule_duration(fsk_modulate(fsk_ack(), fp)) == doctest::Approx(8 * 512 / fp));
}

TEST_CASE("every single-bit corruption in packets up to 8 bytes is detected") {
  std::mt19937_64 rng(5);
  std::size_t checked = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = random_packet(rng, 6);
    REQUIRE(packet_bytes(p).size() <= 8);
    const auto bits = frame_packet(p);
    for (std::size_t k = 0; k < bits.size(); ++k) {
      auto bad = bits;
      bad[k] ^= 1;
      const auto r = parse_packet(bad);
      if (k < kPreambleBits) {
        // A preamble flip may shift sync; it must never yield a different packet.
        if (r.ok()) CHECK(*r.packet == p);
      } else {
        CHECK_FALSE(r.ok());
      }
      ++checked;
    }
  }
  CHECK(checked > 10000);
}

TEST_CASE("single parity error repair uses the checksum syndrome") {
  const auto p = make_id({0x12, 0x00, 0x5A, 0x00, 0x00, 0x31, 0x07});
  auto bits = frame_packet(p);
  // Flip data bit 3 of payload byte 2.
  bits[kPreambleBits + 3 * 11 + 1 + 3] ^= 1;
  CHECK(parse_packet(bits).status == ParseStatus::ParityError);
  const auto r = parse_packet(bits, true);
  REQUIRE(r.ok());
  CHECK(r.repaired);
  CHECK(*r.packet == p);
}

TEST_CASE("ASK demodulator reports no levels on a flat envelope") {
  Trace t;
  t.sample_rate = kEnvelopeRate;
  t.samples.assign(5000, 1.0);
  CHECK_FALSE(ask_demodulate(t, kAskBitRate).ok());
  CHECK_THROWS(ask_modulate({1, 0}, kAskBitRate, 0.5, 10e3));
}

TEST_CASE("classify_fsk_bits") {
  CHECK(classify_fsk_bits(BitStream(8, 1)) == fsk_ack());
  CHECK(classify_fsk_bits(BitStream(8, 0)) == fsk_nak());
  CHECK_FALSE(classify_fsk_bits(BitStream{1, 0, 1, 0, 1, 0, 1, 0}));
  const auto id = make_id({0x12, 0x00, 0x4C, 0x51, 0x49, 0x54, 0x58});
  CHECK(fsk_data_packet(*classify_fsk_bits(frame_packet(id))) == id);
}

}  // TEST_SUITE
