// SPDX-License-Identifier: Apache-2.0
#include "qisim/attacker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "qisim/dsp.hpp"
#include "qisim/fft.hpp"

namespace qisim {

Trace inject_noise(const Trace& base, const InterferenceSpec& spec) {
  const Trace w = interference_waveform(spec, base.duration(), base.sample_rate);
  Trace out = base;
  for (std::size_t k = 0; k < out.size() && k < w.size(); ++k) out.samples[k] = base.samples[k] * (1.0 + w.samples[k]);
  return out;
}

Trace forge_ask_packet(const QiPacket& p, double depth, double f_ask, double rate) {
  if (depth < 0 || depth >= 1) throw std::invalid_argument("forge_ask_packet: depth must lie in [0, 1)");
  return ask_modulate(frame_packet(p), f_ask, depth, rate);
}

Trace inject_voice(const Trace& audio, double depth) {
  if (depth < 0 || depth >= 1) throw std::invalid_argument("inject_voice: depth must lie in [0, 1)");
  Trace out = audio;
  out.unit = Unit::Dimensionless;
  if (audio.samples.empty()) return out;
  if (audio.sample_rate > 20e3) {
    const auto X = rfft(audio.samples);
    const double df = audio.sample_rate / static_cast<double>(audio.size());
    double total = 0.0;
    double above = 0.0;
    for (std::size_t k = 1; k < X.size(); ++k) {
      const double e = std::norm(X[k]);
      total += e;
      if (df * static_cast<double>(k) > 10e3) above += e;
    }
    if (total > 0 && above > 0.01 * total) throw std::invalid_argument("inject_voice: audio is not band-limited to 10 kHz");
  }
  double peak = 0.0;
  for (double v : audio.samples) peak = std::max(peak, std::fabs(v));
  for (auto& v : out.samples) v = peak > 0 ? depth * v / peak : 0.0;
  return out;
}

Trace jam_ask(double duration, double depth, std::uint64_t seed, double f_ask, double rate) {
  if (depth < 0 || depth >= 1) throw std::invalid_argument("jam_ask: depth must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Trace t;
  t.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  t.samples.resize(n);
  const double half = rate / (2.0 * f_ask);
  std::size_t k = 0;
  while (k < n) {
    // Each burst: 2..6 half-bits of a square wave with a fresh random phase.
    const auto len = static_cast<std::size_t>(std::llround((2.0 + static_cast<double>(rng() % 5)) * half));
    const double phase = unit() * 2.0 * half;
    const bool invert = (rng() & 1u) != 0;
    for (std::size_t i = 0; i < len && k < n; ++i, ++k) {
      const auto slot = static_cast<long>(std::floor((static_cast<double>(i) + phase) / half));
      const bool high = ((slot & 1L) == 0) != invert;
      t.samples[k] = high ? depth : 0.0;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::VoiceInjection: return "voice_injection";
    case AttackKind::QiInjection: return "qi_injection";
    case AttackKind::Jam: return "jam";
    case AttackKind::FodHandshake: return "fod_handshake";
    case AttackKind::Toast: return "toast";
  }
  return "none";
}

AttackKind parse_attack_kind(const std::string& s) {
  for (auto k : {AttackKind::None, AttackKind::VoiceInjection, AttackKind::QiInjection, AttackKind::Jam,
                 AttackKind::FodHandshake, AttackKind::Toast})
    if (s == attack_kind_name(k)) return k;
  throw std::invalid_argument("unknown attack kind '" + s + "'");
}

const char* action_type_name(ActionType t) {
  switch (t) {
    case ActionType::Voice: return "voice";
    case ActionType::ForgePacket: return "forge";
    case ActionType::CeStream: return "ce_stream";
    case ActionType::Jam: return "jam";
    case ActionType::FodHandshake: return "fod_handshake";
    case ActionType::Toast: return "toast";
    case ActionType::Stop: return "stop";
  }
  return "stop";
}

ActionType parse_action_type(const std::string& s) {
  for (auto t : {ActionType::Voice, ActionType::ForgePacket, ActionType::CeStream, ActionType::Jam,
                 ActionType::FodHandshake, ActionType::Toast, ActionType::Stop})
    if (s == action_type_name(t)) return t;
  throw std::invalid_argument("unknown attack action '" + s + "'");
}

void AttackPlan::validate() const {
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& a : schedule) {
    if (a.at < last) throw std::invalid_argument("attack schedule is not time-ordered");
    last = a.at;
    for (double d : {a.depth, a.m_i, a.jam_depth})
      if (d < 0 || d >= 1) throw std::invalid_argument("attack depth must lie in [0, 1)");
    if ((a.type == ActionType::CeStream || a.type == ActionType::Toast) && !(a.period > 0))
      throw std::invalid_argument("attack period must be positive");
  }
}

const char* handshake_status_name(HandshakeStatus s) {
  switch (s) {
    case HandshakeStatus::Idle: return "idle";
    case HandshakeStatus::WaitingForPing: return "waiting";
    case HandshakeStatus::Running: return "running";
    case HandshakeStatus::Succeeded: return "succeeded";
    case HandshakeStatus::Aborted: return "aborted";
  }
  return "?";
}

namespace {

constexpr double kGap = 0.005;
constexpr double kPingThreshold = 0.5;
constexpr double kResponseTimeout = 0.8;
constexpr double kToastSlotOffset = 0.058;

}  // namespace

AttackerAgent::AttackerAgent(AttackPlan plan, std::uint64_t seed) : plan_(std::move(plan)), seed_(seed) {
  plan_.validate();
}

bool AttackerAgent::wants_fsk() const { return hs_status_ == HandshakeStatus::Running; }

void AttackerAgent::log(double t, const std::string& line) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t=%.3f ", t);
  transcript_.push_back(buf + line);
}

void AttackerAgent::forge(const QiPacket& p, double depth, double start, std::vector<AttackerEmission>& out) {
  AttackerEmission e;
  e.interference = forge_ask_packet(p, depth);
  e.start = start;
  e.interference.t0 = start;
  e.tag = "forge";
  e.packet = p;
  busy_until_ = std::max(busy_until_, start + e.interference.duration() + kGap);
  ++forged_;
  log(start, "forge " + describe(p));
  out.push_back(std::move(e));
}

void AttackerAgent::start_action(const AttackAction& a, double now) {
  switch (a.type) {
    case ActionType::CeStream:
      ce_stream_ = CeStream{a.ce_value, a.period, a.depth, a.until, now};
      log(now, "start ce_stream " + describe(make_ce(a.ce_value)));
      break;
    case ActionType::FodHandshake:
      hs_ = a;
      hs_status_ = HandshakeStatus::WaitingForPing;
      hs_queue_.clear();
      hs_index_ = 0;
      hs_waiting_ = false;
      log(now, "await ping");
      break;
    case ActionType::Toast: {
      ToastSettings t;
      t.period = a.period;
      t.forge_depth = a.depth;
      t.jam = a.jam;
      t.jam_depth = a.jam_depth;
      t.jam_length = a.duration;
      t.until = a.until;
      toast_ = t;
      toast_anchor_ = -1.0;
      toast_started_ = now;
      toast_slot_ = 0;
      log(now, std::string("start toast jam=") + (a.jam ? "1" : "0"));
      break;
    }
    case ActionType::Stop:
      ce_stream_.reset();
      toast_.reset();
      if (hs_status_ == HandshakeStatus::Running || hs_status_ == HandshakeStatus::WaitingForPing)
        hs_status_ = HandshakeStatus::Aborted;
      log(now, "stop");
      break;
    default: break;
  }
}

std::vector<AttackerEmission> AttackerAgent::step(const AttackerObservation& obs) {
  std::vector<AttackerEmission> out;
  const double now = obs.now;
  while (next_action_ < plan_.schedule.size() && plan_.schedule[next_action_].at <= now) {
    const AttackAction& a = plan_.schedule[next_action_++];
    if (a.type == ActionType::ForgePacket) {
      forge(a.packet, a.depth, std::max(now, busy_until_), out);
    } else if (a.type == ActionType::Jam) {
      AttackerEmission e;
      e.interference = jam_ask(a.duration, a.jam_depth, seed_ ^ (0x9E3779B97F4A7C15ull * ++jam_counter_));
      e.start = now;
      e.interference.t0 = now;
      e.tag = "jam";
      ++jams_;
      log(now, "jam");
      out.push_back(std::move(e));
    } else {
      start_action(a, now);
    }
  }

  if (ce_stream_ && now >= ce_stream_->next) {
    if (now > ce_stream_->until) {
      ce_stream_.reset();
    } else if (now >= busy_until_) {
      forge(make_ce(ce_stream_->value), ce_stream_->depth, now, out);
      ce_stream_->next += ce_stream_->period;
    }
  }
  handshake_step(obs, out);
  toast_step(obs, out);
  last_power_ = obs.adapter_power;
  return out;
}

void AttackerAgent::handshake_step(const AttackerObservation& obs, std::vector<AttackerEmission>& out) {
  const double now = obs.now;
  if (hs_status_ == HandshakeStatus::WaitingForPing) {
    if (obs.adapter_power > kPingThreshold && last_power_ <= kPingThreshold) {
      hs_queue_ = {make_sig(0x84), make_id({0x12, 0x00, 0x5A, 0x00, 0x00, 0x31, 0x07}), make_cfg(hs_.neg_bit)};
      if (hs_.neg_bit) {
        const auto halfwatts = static_cast<std::uint8_t>(std::clamp(std::lround(hs_.guaranteed_power * 2.0), 0L, 255L));
        hs_queue_.push_back(make_fod(hs_.reference_q));
        hs_queue_.push_back(make_grq(header::ID));
        hs_queue_.push_back(make_srq(kSrqGuaranteedPower, halfwatts));
        hs_queue_.push_back(make_srq(kSrqEndNegotiation, 0));
      }
      hs_index_ = 0;
      hs_waiting_ = false;
      hs_status_ = HandshakeStatus::Running;
      log(now, "ping detected");
    }
    return;
  }
  if (hs_status_ != HandshakeStatus::Running) return;

  if (obs.adapter_power <= kPingThreshold && last_power_ <= kPingThreshold) {
    hs_status_ = HandshakeStatus::Aborted;
    log(now, "abort: charger dropped power");
    return;
  }
  auto finish = [&] {
    hs_status_ = HandshakeStatus::Succeeded;
    log(now, "handshake complete");
    if (hs_.then_toast) {
      ToastSettings t;
      t.period = hs_.period;
      t.forge_depth = hs_.depth;
      t.jam = false;
      toast_ = t;
      toast_anchor_ = now;
      toast_started_ = now;
      toast_slot_ = 0;
      log(now, "start toast jam=0");
    }
  };

  if (hs_waiting_) {
    if (!obs.fsk.empty()) {
      const auto& m = obs.fsk.front();
      const auto& r = std::get<FskResponse>(m.message);
      log(now, std::string("recv ") + format_message(m).substr(format_message(m).find("kind=")));
      const QiPacket& sent = hs_queue_[hs_index_ - 1];
      hs_waiting_ = false;
      const bool ok = sent.kind == PacketKind::GRQ ? r.kind == FskKind::DATA || r.kind == FskKind::NAK
                                                   : r.kind == FskKind::ACK;
      if (!ok) {
        hs_status_ = HandshakeStatus::Aborted;
        log(now, std::string("abort: ") + fsk_kind_name(r.kind) + " to " + describe(sent));
        return;
      }
      if (hs_index_ == hs_queue_.size()) {
        finish();
        return;
      }
    } else if (now - hs_wait_since_ > kResponseTimeout) {
      hs_status_ = HandshakeStatus::Aborted;
      log(now, "abort: no response to " + describe(hs_queue_[hs_index_ - 1]));
      return;
    } else {
      return;
    }
  }
  if (now < busy_until_) return;
  if (hs_index_ == hs_queue_.size()) {
    // Baseline handshake: nothing to await after CFG.
    finish();
    return;
  }
  const QiPacket p = hs_queue_[hs_index_++];
  forge(p, hs_.depth, now, out);
  const bool awaits = p.kind == PacketKind::FOD || p.kind == PacketKind::GRQ || p.kind == PacketKind::SRQ;
  if (awaits) {
    hs_waiting_ = true;
    hs_wait_since_ = busy_until_;
  }
}

void AttackerAgent::toast_step(const AttackerObservation& obs, std::vector<AttackerEmission>& out) {
  if (!toast_) return;
  const double now = obs.now;
  if (now > toast_->until) {
    toast_.reset();
    log(now, "toast ends");
    return;
  }
  for (double t : obs.rx_activity) {
    if (toast_->jam) {
      AttackerEmission e;
      e.interference = jam_ask(toast_->jam_length, toast_->jam_depth, seed_ ^ (0x9E3779B97F4A7C15ull * ++jam_counter_));
      e.start = now;
      e.interference.t0 = now;
      e.tag = "jam";
      ++jams_;
      char buf[48];
      std::snprintf(buf, sizeof buf, "jam rx activity at %.4f", t);
      log(now, buf);
      out.push_back(std::move(e));
    }
    if (toast_anchor_ < 0) toast_anchor_ = t + kToastSlotOffset;
  }
  if (toast_anchor_ < 0 && now - toast_started_ >= 0.3) toast_anchor_ = now;
  if (toast_anchor_ < 0 || now < toast_anchor_ + static_cast<double>(toast_slot_) * toast_->period) return;
  if (now < busy_until_) return;
  const auto rp_every = std::max<long>(1, std::lround(toast_->rp_period / toast_->period));
  // RP goes first in its slot so it is judged against the pre-CE power estimate.
  if (toast_slot_ % rp_every == 0) forge(make_rp(obs.adapter_power), toast_->forge_depth, now, out);
  forge(make_ce(127), toast_->forge_depth, std::max(now, busy_until_), out);
  ++toast_slot_;
  while (toast_anchor_ + static_cast<double>(toast_slot_) * toast_->period <= now) ++toast_slot_;
}

std::optional<double> AttackerAgent::detect_activity(const Trace& seg) const {
  if (seg.samples.empty()) return std::nullopt;
  Trace x = seg;
  const double med = median(seg.samples);
  for (auto& v : x.samples) v -= med;
  const Trace w = filter_h2(filter_h1(x, 2.0 * kAskBitRate), 2.0 * kAskBitRate);
  // The first 1.5 ms of the segment precede the transmission and set the noise floor.
  const auto quiet = std::min(w.size(), static_cast<std::size_t>(std::llround(1.5e-3 * w.sample_rate)));
  double floor = 0.0;
  double peak = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double a = std::fabs(w.samples[k]);
    if (k < quiet) floor = std::max(floor, a);
    peak = std::max(peak, a);
  }
  if (peak <= 0.0) return std::nullopt;
  const double thr = std::max(4.0 * floor, 1e-6 * peak);
  for (std::size_t k = quiet; k < w.size(); ++k)
    if (std::fabs(w.samples[k]) > thr) return w.time_at(k);
  return std::nullopt;
}

}  // namespace qisim
