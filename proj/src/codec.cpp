// SPDX-License-Identifier: Apache-2.0
#include "qisim/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "qisim/dsp.hpp"

namespace qisim {

// ---------------------------------------------------------------------------
// BMC

std::vector<Level> bmc_encode(const BitStream& bits, Level initial) {
  std::vector<Level> out;
  out.reserve(bits.size() * 2);
  auto flip = [](Level l) { return l == Level::Low ? Level::High : Level::Low; };
  Level l = initial;
  for (auto b : bits) {
    l = flip(l);
    out.push_back(l);
    if (b) l = flip(l);
    out.push_back(l);
  }
  return out;
}

BitStream bmc_decode(const std::vector<Level>& levels) {
  if (levels.size() % 2 != 0) throw BmcError(levels.size() / 2, "bmc_decode: odd number of half-bits");
  BitStream bits;
  bits.reserve(levels.size() / 2);
  for (std::size_t k = 0; k < levels.size(); k += 2) {
    if (k > 0 && levels[k - 1] == levels[k])
      throw BmcError(k / 2, "bmc_decode: missing boundary transition at bit " + std::to_string(k / 2));
    bits.push_back(levels[k] != levels[k + 1] ? 1 : 0);
  }
  return bits;
}

BitStream bmc_decode_prefix(const std::vector<Level>& levels) {
  BitStream bits;
  for (std::size_t k = 0; k + 1 < levels.size(); k += 2) {
    if (k > 0 && levels[k - 1] == levels[k]) break;
    bits.push_back(levels[k] != levels[k + 1] ? 1 : 0);
  }
  return bits;
}

// ---------------------------------------------------------------------------
// Packets

const char* kind_name(PacketKind k) {
  switch (k) {
    case PacketKind::SIG: return "SIG";
    case PacketKind::ID: return "ID";
    case PacketKind::CFG: return "CFG";
    case PacketKind::FOD: return "FOD";
    case PacketKind::GRQ: return "GRQ";
    case PacketKind::SRQ: return "SRQ";
    case PacketKind::RP: return "RP";
    case PacketKind::CE: return "CE";
    case PacketKind::EPT: return "EPT";
    case PacketKind::PROP: return "PROP";
  }
  return "PROP";
}

PacketKind kind_for_header(std::uint8_t h) {
  switch (h) {
    case header::SIG: return PacketKind::SIG;
    case header::EPT: return PacketKind::EPT;
    case header::CE: return PacketKind::CE;
    case header::RP: return PacketKind::RP;
    case header::GRQ: return PacketKind::GRQ;
    case header::SRQ: return PacketKind::SRQ;
    case header::FOD: return PacketKind::FOD;
    case header::CFG: return PacketKind::CFG;
    case header::ID: return PacketKind::ID;
    default: return PacketKind::PROP;
  }
}

std::size_t payload_length(std::uint8_t h) {
  if (h <= 0x1F) return 1;
  if (h <= 0x7F) return 2 + (h - 32u) / 16u;
  if (h <= 0xDF) return 8 + (h - 128u) / 8u;
  return 20 + (h - 224u) / 4u;
}

std::uint8_t checksum(std::uint8_t h, const std::vector<std::uint8_t>& payload) {
  std::uint8_t c = h;
  for (auto b : payload) c ^= b;
  return c;
}

QiPacket make_packet(std::uint8_t h, std::vector<std::uint8_t> payload) {
  if (payload.size() != payload_length(h))
    throw std::invalid_argument("payload length " + std::to_string(payload.size()) + " does not match header");
  return QiPacket{kind_for_header(h), h, std::move(payload)};
}

QiPacket make_sig(std::uint8_t strength) { return make_packet(header::SIG, {strength}); }

QiPacket make_ce(int control_error) {
  const int ce = std::clamp(control_error, -128, 127);
  return make_packet(header::CE, {static_cast<std::uint8_t>(static_cast<std::int8_t>(ce))});
}

QiPacket make_rp(double watts) {
  const long units = std::lround(std::clamp(watts, 0.0, 25.5) * 10.0);
  return make_packet(header::RP, {static_cast<std::uint8_t>(units)});
}

QiPacket make_ept(std::uint8_t reason) { return make_packet(header::EPT, {reason}); }

QiPacket make_id(const std::vector<std::uint8_t>& id_bytes) { return make_packet(header::ID, id_bytes); }

QiPacket make_cfg(bool neg, std::uint8_t max_power_halfwatts) {
  return make_packet(header::CFG, {max_power_halfwatts, 0x00, static_cast<std::uint8_t>(neg ? 0x80 : 0x00), 0x00, 0x00});
}

QiPacket make_fod(std::uint8_t ref_q, std::uint8_t mode) { return make_packet(header::FOD, {mode, ref_q}); }

QiPacket make_grq(std::uint8_t requested_header) { return make_packet(header::GRQ, {requested_header}); }

QiPacket make_srq(std::uint8_t request, std::uint8_t value) { return make_packet(header::SRQ, {request, value}); }

std::int8_t control_error(const QiPacket& p) {
  if (p.kind != PacketKind::CE || p.payload.size() != 1) throw std::invalid_argument("not a CE packet");
  return static_cast<std::int8_t>(p.payload[0]);
}

std::uint32_t received_power_mw(const QiPacket& p) {
  if (p.kind != PacketKind::RP || p.payload.size() != 1) throw std::invalid_argument("not an RP packet");
  return 100u * p.payload[0];
}

bool neg_bit(const QiPacket& p) {
  if (p.kind != PacketKind::CFG || p.payload.size() != 5) throw std::invalid_argument("not a CFG packet");
  return (p.payload[2] & 0x80) != 0;
}

std::uint8_t reference_q(const QiPacket& p) {
  if (p.kind != PacketKind::FOD || p.payload.size() != 2) throw std::invalid_argument("not a FOD packet");
  return p.payload[1];
}

std::string hex_bytes(const std::vector<std::uint8_t>& bytes) {
  std::string s;
  char buf[4];
  for (auto b : bytes) {
    std::snprintf(buf, sizeof buf, "%02X", b);
    s += buf;
  }
  return s;
}

std::string describe(const QiPacket& p) {
  char buf[64];
  switch (p.kind) {
    case PacketKind::CE:
      std::snprintf(buf, sizeof buf, "CE(%+d)", control_error(p));
      return buf;
    case PacketKind::RP:
      std::snprintf(buf, sizeof buf, "RP(%.1fW)", received_power_mw(p) / 1000.0);
      return buf;
    case PacketKind::CFG: return std::string("CFG(neg=") + (neg_bit(p) ? "1" : "0") + ")";
    case PacketKind::FOD:
      std::snprintf(buf, sizeof buf, "FOD(ref=%u)", reference_q(p));
      return buf;
    case PacketKind::SRQ:
      std::snprintf(buf, sizeof buf, "SRQ(%02X,%u)", p.payload[0], p.payload[1]);
      return buf;
    case PacketKind::GRQ:
      std::snprintf(buf, sizeof buf, "GRQ(%02X)", p.payload[0]);
      return buf;
    default: return std::string(kind_name(p.kind)) + "(" + hex_bytes(p.payload) + ")";
  }
}

std::vector<std::uint8_t> packet_bytes(const QiPacket& p) {
  std::vector<std::uint8_t> b;
  b.push_back(p.header);
  b.insert(b.end(), p.payload.begin(), p.payload.end());
  b.push_back(checksum(p.header, p.payload));
  return b;
}

BitStream frame_bytes(const std::vector<std::uint8_t>& bytes, std::size_t preamble) {
  BitStream bits(preamble, 1);
  for (auto byte : bytes) {
    bits.push_back(0);
    int ones = 0;
    for (int i = 0; i < 8; ++i) {
      const std::uint8_t b = (byte >> i) & 1u;
      ones += b;
      bits.push_back(b);
    }
    bits.push_back(ones % 2 == 0 ? 1 : 0);
    bits.push_back(1);
  }
  return bits;
}

BitStream frame_packet(const QiPacket& p, std::size_t preamble) { return frame_bytes(packet_bytes(p), preamble); }

const char* status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::NoPreamble: return "no-preamble";
    case ParseStatus::Truncated: return "truncated";
    case ParseStatus::FramingError: return "framing-error";
    case ParseStatus::ParityError: return "parity-error";
    case ParseStatus::ChecksumError: return "checksum-error";
  }
  return "?";
}

namespace {

struct RawByte {
  std::uint8_t value = 0;
  bool framing_ok = true;
  bool parity_ok = true;
};

RawByte read_byte(const BitStream& bits, std::size_t at) {
  RawByte r;
  r.framing_ok = bits[at] == 0 && bits[at + 10] == 1;
  int ones = 0;
  for (int i = 0; i < 8; ++i) {
    if (bits[at + 1 + i]) {
      r.value |= static_cast<std::uint8_t>(1u << i);
      ++ones;
    }
  }
  r.parity_ok = (ones + bits[at + 9]) % 2 == 1;
  return r;
}

}  // namespace

ParseResult parse_packet(const BitStream& bits, bool allow_repair) {
  ParseResult res;
  std::size_t run = 0;
  std::size_t start = bits.size();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) {
      ++run;
    } else {
      if (run >= 4) {
        start = i;
        break;
      }
      run = 0;
    }
  }
  if (start == bits.size()) {
    res.status = ParseStatus::NoPreamble;
    return res;
  }
  if (start + 11 > bits.size()) {
    res.status = ParseStatus::Truncated;
    return res;
  }
  const RawByte hdr = read_byte(bits, start);
  if (!hdr.framing_ok) {
    res.status = ParseStatus::FramingError;
    return res;
  }
  if (!hdr.parity_ok) {
    res.status = ParseStatus::ParityError;
    return res;
  }
  const std::size_t total = payload_length(hdr.value) + 2;
  if (start + total * 11 > bits.size()) {
    res.status = ParseStatus::Truncated;
    return res;
  }
  std::vector<RawByte> raw;
  for (std::size_t b = 0; b < total; ++b) {
    raw.push_back(read_byte(bits, start + b * 11));
    if (!raw.back().framing_ok) {
      res.status = ParseStatus::FramingError;
      res.byte_index = b;
      return res;
    }
  }
  std::vector<std::size_t> bad;
  for (std::size_t b = 0; b < total; ++b)
    if (!raw[b].parity_ok) bad.push_back(b);
  std::uint8_t syndrome = 0;
  for (const auto& r : raw) syndrome ^= r.value;
  if (!bad.empty()) {
    res.byte_index = bad.front();
    if (!allow_repair || bad.size() != 1 || std::popcount(syndrome) != 1) {
      res.status = ParseStatus::ParityError;
      return res;
    }
    raw[bad.front()].value ^= syndrome;
    syndrome = 0;
    res.repaired = true;
  }
  if (syndrome != 0) {
    res.status = ParseStatus::ChecksumError;
    res.byte_index = total - 1;
    return res;
  }
  std::vector<std::uint8_t> payload;
  for (std::size_t b = 1; b + 1 < total; ++b) payload.push_back(raw[b].value);
  res.packet = QiPacket{kind_for_header(hdr.value), hdr.value, std::move(payload)};
  res.status = ParseStatus::Ok;
  res.end_bit = start + total * 11;
  return res;
}

// ---------------------------------------------------------------------------
// ASK

Trace ask_modulate(const BitStream& bits, double f_ask, double depth, double rate) {
  if (!(f_ask > 0)) throw std::invalid_argument("ask_modulate: f_ask must be positive");
  if (rate < 20.0 * f_ask) throw std::invalid_argument("ask_modulate: rate must be at least 20*f_ask");
  const auto levels = bmc_encode(bits, Level::Low);
  Trace t;
  t.sample_rate = rate;
  t.unit = Unit::Dimensionless;
  const double per_half = rate / (2.0 * f_ask);
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(levels.size()) * per_half));
  t.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto idx = static_cast<std::size_t>(std::floor((static_cast<double>(k) + 0.5) / per_half));
    idx = std::min(idx, levels.size() - 1);
    t.samples[k] = levels[idx] == Level::High ? depth : 0.0;
  }
  return t;
}

AskDemodResult ask_demodulate(const Trace& env, double f_ask) {
  AskDemodResult res;
  const double h = env.sample_rate / (2.0 * f_ask);
  if (h < 4.0) throw std::invalid_argument("ask_demodulate: fewer than 4 samples per half-bit");
  const auto& x = env.samples;
  if (x.size() < static_cast<std::size_t>(4 * h)) return res;

  // Noise floor from first differences, robust to the level steps.
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  const double md = median(d);
  for (auto& v : d) v = std::fabs(v - md);
  const double sigma = median(d) / 0.6745 / std::sqrt(2.0);

  // Half-bit means over the central half of each slot.
  const auto lo = static_cast<std::size_t>(std::llround(h / 4.0));
  const auto hi = std::max(lo + 1, static_cast<std::size_t>(std::llround(3.0 * h / 4.0)));
  auto slot_means = [&](std::size_t phase) {
    std::vector<double> m;
    for (std::size_t k = 0;; ++k) {
      const auto s0 = phase + static_cast<std::size_t>(std::llround(static_cast<double>(k) * h));
      if (s0 + hi > x.size()) break;
      double acc = 0.0;
      for (std::size_t i = s0 + lo; i < s0 + hi; ++i) acc += x[i];
      m.push_back(acc / static_cast<double>(hi - lo));
    }
    return m;
  };
  const auto phases = static_cast<std::size_t>(std::ceil(h));
  std::size_t best_phase = 0;
  double best_score = -1.0;
  for (std::size_t p = 0; p < phases; ++p) {
    const auto m = slot_means(p);
    double score = 0.0;
    for (std::size_t k = 0; k + 1 < m.size(); ++k) score += std::fabs(m[k + 1] - m[k]);
    if (score > best_score) {
      best_score = score;
      best_phase = p;
    }
  }
  const auto m = slot_means(best_phase);
  if (m.size() < 3) return res;
  std::vector<double> D(m.size() - 1);
  for (std::size_t k = 0; k + 1 < m.size(); ++k) D[k] = m[k + 1] - m[k];

  BitStream best_bits;
  double best_ref = 0.0;
  for (std::size_t par = 0; par < 2; ++par) {
    std::vector<double> bnd;
    for (std::size_t k = par; k < D.size(); k += 2) bnd.push_back(std::fabs(D[k]));
    if (bnd.empty()) continue;
    std::sort(bnd.begin(), bnd.end());
    const double ref = median(std::vector<double>(bnd.begin() + static_cast<std::ptrdiff_t>(bnd.size() / 2), bnd.end()));
    const double thr = 0.5 * ref;
    BitStream bits;
    for (std::size_t k = par; k + 1 < D.size(); k += 2) {
      if (std::fabs(D[k]) < thr) {
        if (!bits.empty()) break;
        continue;
      }
      bits.push_back(std::fabs(D[k + 1]) > thr ? 1 : 0);
    }
    if (bits.size() > best_bits.size()) {
      best_bits = std::move(bits);
      best_ref = ref;
    }
  }
  const double scale = std::max(1.0, std::fabs(mean(x)));
  if (best_bits.empty() || best_ref <= 3.0 * sigma || best_ref <= 1e-9 * scale) return res;
  res.status = DemodStatus::Ok;
  res.bits = std::move(best_bits);
  res.separation_snr = sigma > 0 ? best_ref / sigma : INFINITY;
  return res;
}

double ask_packet_duration(const QiPacket& p, double f_ask) {
  return static_cast<double>(frame_packet(p).size()) / f_ask;
}

// ---------------------------------------------------------------------------
// FSK

const char* fsk_kind_name(FskKind k) {
  switch (k) {
    case FskKind::ACK: return "ACK";
    case FskKind::NAK: return "NAK";
    case FskKind::ND: return "ND";
    case FskKind::DATA: return "DATA";
  }
  return "?";
}

FskResponse fsk_ack() { return {FskKind::ACK, {}}; }
FskResponse fsk_nak() { return {FskKind::NAK, {}}; }

FskResponse fsk_data(const QiPacket& p) {
  std::vector<std::uint8_t> bytes(p.payload.size() + 1);
  bytes[0] = p.header;
  std::copy(p.payload.begin(), p.payload.end(), bytes.begin() + 1);
  return {FskKind::DATA, std::move(bytes)};
}

std::optional<QiPacket> fsk_data_packet(const FskResponse& r) {
  if (r.kind != FskKind::DATA || r.payload.empty()) return std::nullopt;
  const std::uint8_t h = r.payload[0];
  std::vector<std::uint8_t> body(r.payload.begin() + 1, r.payload.end());
  if (body.size() != payload_length(h)) return std::nullopt;
  return QiPacket{kind_for_header(h), h, std::move(body)};
}

BitStream fsk_bits(const FskResponse& r) {
  switch (r.kind) {
    case FskKind::ACK: return BitStream(8, 1);
    case FskKind::NAK: return BitStream(8, 0);
    case FskKind::ND: return {};
    case FskKind::DATA: {
      auto p = fsk_data_packet(r);
      if (!p) throw std::invalid_argument("fsk_bits: DATA payload is not a valid packet");
      return frame_packet(*p);
    }
  }
  return {};
}

std::optional<FskResponse> classify_fsk_bits(const BitStream& bits) {
  if (bits.size() >= 7 && bits.size() <= 9) {
    const auto n = std::min<std::size_t>(bits.size(), 8);
    const bool all_one = std::all_of(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(n), [](auto b) { return b == 1; });
    const bool all_zero = std::all_of(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(n), [](auto b) { return b == 0; });
    if (all_one) return fsk_ack();
    if (all_zero) return fsk_nak();
  }
  const auto pr = parse_packet(bits);
  if (pr.ok()) return fsk_data(*pr.packet);
  return std::nullopt;
}

std::vector<FskSegment> fsk_modulate(const FskResponse& r, double f_p, double delta_f, int cycles_per_bit) {
  if (!(delta_f > 0)) throw std::invalid_argument("fsk_modulate: delta_f must be positive");
  if (cycles_per_bit < 2) throw std::invalid_argument("fsk_modulate: cycles_per_bit too small");
  const auto levels = bmc_encode(fsk_bits(r), Level::Low);
  const double half = (cycles_per_bit / 2.0) / f_p;
  std::vector<FskSegment> s;
  s.reserve(levels.size());
  for (auto l : levels) s.push_back({l == Level::High ? f_p + delta_f : f_p, half});
  return s;
}

double schedule_duration(const std::vector<FskSegment>& s) {
  double d = 0.0;
  for (const auto& seg : s) d += seg.duration;
  return d;
}

}  // namespace qisim
