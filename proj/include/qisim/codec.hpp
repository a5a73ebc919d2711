// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qisim/signal.hpp"

namespace qisim {

inline constexpr double kAskBitRate = 2000.0;
inline constexpr double kFskDeltaF = 1000.0;
inline constexpr int kFskCyclesPerBit = 512;
inline constexpr std::size_t kPreambleBits = 11;

using BitStream = std::vector<std::uint8_t>;

enum class Level : std::uint8_t { Low = 0, High = 1 };

// ---------------------------------------------------------------------------
// Biphase mark coding

// initial is the line level before the first bit.
std::vector<Level> bmc_encode(const BitStream& bits, Level initial);

class BmcError : public std::runtime_error {
 public:
  BmcError(std::size_t bit_index, const std::string& what)
      : std::runtime_error(what), bit_index_(bit_index) {}
  std::size_t bit_index() const { return bit_index_; }

 private:
  std::size_t bit_index_;
};

// Strict inverse of bmc_encode. Throws BmcError at the first bit whose
// leading boundary has no transition, or on an odd number of half-bits.
BitStream bmc_decode(const std::vector<Level>& levels);

// Decodes until the first boundary violation and returns the bits so far.
BitStream bmc_decode_prefix(const std::vector<Level>& levels);

// ---------------------------------------------------------------------------
// Packets

enum class PacketKind { SIG, ID, CFG, FOD, GRQ, SRQ, RP, CE, EPT, PROP };

namespace header {
inline constexpr std::uint8_t SIG = 0x01;
inline constexpr std::uint8_t EPT = 0x02;
inline constexpr std::uint8_t CE = 0x03;
inline constexpr std::uint8_t RP = 0x04;
inline constexpr std::uint8_t GRQ = 0x07;
inline constexpr std::uint8_t SRQ = 0x20;
inline constexpr std::uint8_t FOD = 0x22;
inline constexpr std::uint8_t CFG = 0x51;
inline constexpr std::uint8_t ID = 0x71;
}  // namespace header

// SRQ request codes.
inline constexpr std::uint8_t kSrqEndNegotiation = 0x00;
inline constexpr std::uint8_t kSrqGuaranteedPower = 0x01;

// EPT reason codes.
inline constexpr std::uint8_t kEptUnknown = 0x00;
inline constexpr std::uint8_t kEptChargeComplete = 0x01;
inline constexpr std::uint8_t kEptOverTemperature = 0x03;

struct QiPacket {
  PacketKind kind = PacketKind::PROP;
  std::uint8_t header = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const QiPacket&) const = default;
};

const char* kind_name(PacketKind k);
PacketKind kind_for_header(std::uint8_t header);
std::size_t payload_length(std::uint8_t header);
std::uint8_t checksum(std::uint8_t header, const std::vector<std::uint8_t>& payload);

// Throws std::invalid_argument when the payload length does not match the header.
QiPacket make_packet(std::uint8_t header, std::vector<std::uint8_t> payload);
QiPacket make_sig(std::uint8_t strength);
QiPacket make_ce(int control_error);
// Received power is carried in units of 100 mW, saturating at 25.5 W.
QiPacket make_rp(double watts);
QiPacket make_ept(std::uint8_t reason);
QiPacket make_id(const std::vector<std::uint8_t>& id_bytes);
QiPacket make_cfg(bool neg_bit, std::uint8_t max_power_halfwatts = 30);
// reference_q is in tenths of Q.
QiPacket make_fod(std::uint8_t reference_q, std::uint8_t mode = 0);
QiPacket make_grq(std::uint8_t requested_header);
QiPacket make_srq(std::uint8_t request, std::uint8_t value);

std::int8_t control_error(const QiPacket& p);
std::uint32_t received_power_mw(const QiPacket& p);
bool neg_bit(const QiPacket& p);
std::uint8_t reference_q(const QiPacket& p);

// Short human-readable form, e.g. "CE(+112)".
std::string describe(const QiPacket& p);
std::string hex_bytes(const std::vector<std::uint8_t>& bytes);

// Bytes as transmitted: header, payload, checksum.
std::vector<std::uint8_t> packet_bytes(const QiPacket& p);

BitStream frame_bytes(const std::vector<std::uint8_t>& bytes, std::size_t preamble = kPreambleBits);
BitStream frame_packet(const QiPacket& p, std::size_t preamble = kPreambleBits);

enum class ParseStatus { Ok, NoPreamble, Truncated, FramingError, ParityError, ChecksumError };
const char* status_name(ParseStatus s);

struct ParseResult {
  ParseStatus status = ParseStatus::NoPreamble;
  std::optional<QiPacket> packet;
  // Byte index of the first error, when applicable.
  std::size_t byte_index = 0;
  // True when a single parity error was corrected using the checksum syndrome.
  bool repaired = false;
  // Bit index just past the checksum byte on success.
  std::size_t end_bit = 0;

  bool ok() const { return status == ParseStatus::Ok; }
};

// Needs at least 4 preamble ONEs before the first start bit. With
// allow_repair, a packet with exactly one parity-failing byte whose checksum
// syndrome has a single bit set is repaired.
ParseResult parse_packet(const BitStream& bits, bool allow_repair = false);

// ---------------------------------------------------------------------------
// ASK (receiver to transmitter)

// Half-bit levels mapped to {0, depth}; idle line is LOW so the first half-bit is HIGH.
Trace ask_modulate(const BitStream& bits, double f_ask, double depth, double rate);

enum class DemodStatus { Ok, NoLevels };

struct AskDemodResult {
  DemodStatus status = DemodStatus::NoLevels;
  BitStream bits;
  // Level separation relative to the estimated noise floor.
  double separation_snr = 0.0;
  bool ok() const { return status == DemodStatus::Ok; }
};

AskDemodResult ask_demodulate(const Trace& envelope, double f_ask);

// Duration of a framed packet at the ASK bit rate.
double ask_packet_duration(const QiPacket& p, double f_ask = kAskBitRate);

// ---------------------------------------------------------------------------
// FSK (transmitter to receiver)

enum class FskKind { ACK, NAK, ND, DATA };

struct FskResponse {
  FskKind kind = FskKind::ND;
  // For DATA: header, payload bytes of the carried packet (no checksum).
  std::vector<std::uint8_t> payload;

  bool operator==(const FskResponse&) const = default;
};

const char* fsk_kind_name(FskKind k);
FskResponse fsk_ack();
FskResponse fsk_nak();
FskResponse fsk_data(const QiPacket& p);
std::optional<QiPacket> fsk_data_packet(const FskResponse& r);

BitStream fsk_bits(const FskResponse& r);
// Maps decoded FSK bits back to a response; nullopt when unrecognizable.
std::optional<FskResponse> classify_fsk_bits(const BitStream& bits);

struct FskSegment {
  double freq = 0.0;
  double duration = 0.0;
};

// One segment per half-bit. ND yields an empty schedule.
std::vector<FskSegment> fsk_modulate(const FskResponse& r, double f_p, double delta_f = kFskDeltaF,
                                     int cycles_per_bit = kFskCyclesPerBit);
double schedule_duration(const std::vector<FskSegment>& s);

}  // namespace qisim
