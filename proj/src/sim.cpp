// SPDX-License-Identifier: Apache-2.0
#include "qisim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qisim/waveforms.hpp"

namespace qisim {

void SimConfig::validate() const {
  system.validate();
  charger.validate();
  if (receiver) receiver->validate();
  if (object) object->validate();
  attack.validate();
  if (!(duration > 0)) throw std::invalid_argument("duration must be positive");
  if (!(dt > 0) || dt > 0.01) throw std::invalid_argument("dt must lie in (0, 10 ms]");
  if (sensing_noise < 0) throw std::invalid_argument("sensing_noise must be non-negative");
}

Trace render_fsk_ripple(const std::vector<FskSegment>& schedule, double f_p, double amplitude, double pad,
                        double noise_sigma, std::uint64_t seed, double rate) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Trace t;
  t.sample_rate = rate;
  t.unit = Unit::Volts;
  double phase = 0.0;
  auto add = [&](double f, double d) {
    const auto n = static_cast<std::size_t>(std::llround(d * rate));
    for (std::size_t k = 0; k < n; ++k) {
      phase = std::fmod(phase + 2.0 * std::numbers::pi * 2.0 * f / rate, 2.0 * std::numbers::pi);
      t.samples.push_back(amplitude * std::sin(phase) + (noise_sigma > 0 ? noise_sigma * nd(rng) : 0.0));
    }
  };
  add(f_p, pad);
  for (const auto& s : schedule) add(s.freq, s.duration);
  add(f_p, pad);
  return t;
}

namespace {

constexpr double kGuard = 0.002;
constexpr double kFskPad = 0.01;
constexpr double kEavesdropMargin = 0.005;

struct OperatingPoint {
  double p_tx = 0.0;
  double p_in = 0.0;
  double i_tx = 0.0;
  double i_dc = 0.0;
  double ripple = 0.0;
};

OperatingPoint operating_point(const SystemParams& sys, bool on, double duty) {
  OperatingPoint op;
  if (!on) return op;
  SystemParams q = sys;
  q.D = std::clamp(duty, 1e-9, 1.0);
  op.p_tx = transmitted_power(sys, duty);
  op.i_tx = tx_current_amplitude(q);
  op.i_dc = bus_current(q, op.i_tx).dc;
  op.p_in = sys.V_ad * op.i_dc;
  op.ripple = adapter_ripple_amplitude(q, op.i_dc, phase_total(q));
  return op;
}

// A sampled contribution on the envelope-domain timeline.
struct Part {
  double t0 = 0.0;
  std::vector<double> x;
  bool rx = false;

  double end() const { return t0 + static_cast<double>(x.size()) / kEnvelopeRate; }
  double at(double t) const {
    const auto i = static_cast<long long>(std::floor((t - t0) * kEnvelopeRate));
    return i >= 0 && i < static_cast<long long>(x.size()) ? x[static_cast<std::size_t>(i)] : 0.0;
  }
};

struct Burst {
  double start = 0.0;
  double end = 0.0;
  std::vector<Part> parts;  // coil-envelope relative
  std::vector<QiPacket> rx;
  std::vector<QiPacket> forged;
  double i_dc = 0.0;
};

struct VoiceLoop {
  double start = 0.0;
  double until = 0.0;
  std::vector<double> adapter;
  std::vector<double> coil;

  double sample(const std::vector<double>& v, double t) const {
    if (t < start || t >= until || v.empty()) return 0.0;
    const auto i = static_cast<std::size_t>(std::floor((t - start) * kEnvelopeRate)) % v.size();
    return v[i];
  }
};

struct Flight {
  double start = 0.0;
  double end = 0.0;
  FskResponse response;
  std::vector<FskSegment> schedule;
  double ripple = 0.0;
  double f_p = 0.0;
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg)
      : cfg_(cfg),
        ccfg_{cfg.charger, cfg.system},
        cs_(initial_charger_state(ccfg_)),
        sense_rng_(cfg.seed),
        adapter_rng_(cfg.seed ^ 0xA5A5A5A5DEADBEEFull) {
    if (cfg.receiver) rs_ = initial_receiver_state(*cfg.receiver);
    obj_ = cfg.object;
    if (!cfg.attack.schedule.empty()) agent_.emplace(cfg.attack, cfg.seed);
    const auto n = static_cast<std::size_t>(std::floor(cfg.duration / cfg.dt + 1e-9));
    for (Trace* t : {&res_.adapter_voltage, &res_.tx_envelope, &res_.power, &res_.temperature}) {
      t->sample_rate = 1.0 / cfg.dt;
      t->samples.reserve(n);
    }
    res_.adapter_voltage.unit = Unit::Volts;
    res_.tx_envelope.unit = Unit::Amperes;
    res_.power.unit = Unit::Watts;
    res_.temperature.unit = Unit::Dimensionless;
  }

  SimResult run() {
    const auto n = static_cast<std::size_t>(std::floor(cfg_.duration / cfg_.dt + 1e-9));
    for (std::size_t k = 1; k <= n; ++k) tick(static_cast<double>(k) * cfg_.dt);
    res_.charger = cs_;
    res_.receiver = rs_;
    res_.object = obj_;
    if (agent_) {
      res_.attacker_transcript = agent_->transcript();
      res_.handshake = agent_->handshake_status();
      res_.forged = agent_->forged_count();
      res_.jams = agent_->jam_count();
    }
    std::stable_sort(res_.recovered.begin(), res_.recovered.end(),
                     [](const RecoveredMessage& a, const RecoveredMessage& b) { return a.t_start < b.t_start; });
    return std::move(res_);
  }

 private:
  void tick(double t) {
    render_due_bursts(t);
    std::optional<FskResponse> rx_response;
    std::vector<RecoveredMessage> attacker_fsk;
    deliver_fsk(t, rx_response, attacker_fsk);

    // Charger
    DemodEvent ev = DemodEvent::silence();
    if (!events_.empty()) {
      ev = events_.front();
      events_.pop_front();
    }
    cs_.measured_q = obj_ ? obj_->q_factor : cfg_.charger.empty_q;
    const Phase before = cs_.phase;
    auto step = charger_tick(ccfg_, cs_, cfg_.dt, ev);
    cs_ = step.state;
    if (cs_.phase == Phase::Terminated && before != Phase::Terminated) ++res_.terminations;
    if (cs_.phase == Phase::PowerTransfer && cs_.protocol == Protocol::Extended) res_.reached_extended = true;
    res_.transitions.push_back(format_transition(cs_, event_tag(ev)));
    if (ev.kind == DemodEvent::Kind::Packet) res_.accepted.push_back({t, ev.packet});

    const OperatingPoint op = operating_point(cfg_.system, step.actions.power_applied, step.actions.duty);
    op_ = op;
    if (step.actions.response) start_flight(t, *step.actions.response, op);
    res_.max_power = std::max(res_.max_power, op.p_tx);

    // Receiver
    std::vector<double> detections;
    if (rs_) {
      auto rx = rx_step(*cfg_.receiver, *rs_, cfg_.receiver->efficiency * op.p_tx, cfg_.dt, rx_response);
      rs_ = rx.state;
      for (const auto& p : rx.packets) emit_rx(t, p, op, detections);
      const auto& pr = rs_->protections;
      if (pr.p1 && res_.p1_time < 0) res_.p1_time = t;
      if (pr.p2 && res_.p2_time < 0) res_.p2_time = t;
      if (pr.p3 && res_.p3_time < 0) res_.p3_time = t;
      res_.max_temp = std::max(res_.max_temp, rs_->thermal.temp);
    }
    if (obj_) {
      obj_ = foreign_object_step(*obj_, op.p_tx, cfg_.dt);
      if (obj_->damaged && res_.damage_time < 0) res_.damage_time = t;
      if (!rs_) res_.max_temp = std::max(res_.max_temp, obj_->thermal.temp);
    }

    // Attacker
    update_voice(t);
    if (agent_) {
      pending_detections_.insert(pending_detections_.end(), detections.begin(), detections.end());
      AttackerObservation obs;
      obs.now = t;
      obs.adapter_power = op.p_in;
      obs.fsk = std::move(attacker_fsk);
      for (auto it = pending_detections_.begin(); it != pending_detections_.end();) {
        if (*it <= t) {
          obs.rx_activity.push_back(*it);
          it = pending_detections_.erase(it);
        } else {
          ++it;
        }
      }
      for (auto& e : agent_->step(obs)) add_emission(e);
    }

    record(t, op);
  }

  // ---- transmissions --------------------------------------------------------

  void add_part(Part part, const std::optional<QiPacket>& rx_packet, const std::optional<QiPacket>& forged) {
    Burst nb;
    nb.start = part.t0;
    nb.end = part.end();
    nb.i_dc = op_.i_dc;
    nb.parts.push_back(std::move(part));
    if (rx_packet) nb.rx.push_back(*rx_packet);
    if (forged) nb.forged.push_back(*forged);
    for (std::size_t i = 0; i < bursts_.size();) {
      Burst& b = bursts_[i];
      if (nb.start < b.end + kGuard && b.start < nb.end + kGuard) {
        nb.start = std::min(nb.start, b.start);
        nb.end = std::max(nb.end, b.end);
        nb.i_dc = std::max(nb.i_dc, b.i_dc);
        for (auto& p : b.parts) nb.parts.push_back(std::move(p));
        nb.rx.insert(nb.rx.end(), b.rx.begin(), b.rx.end());
        nb.forged.insert(nb.forged.end(), b.forged.begin(), b.forged.end());
        bursts_.erase(bursts_.begin() + static_cast<long>(i));
        i = 0;
      } else {
        ++i;
      }
    }
    bursts_.push_back(std::move(nb));
  }

  void emit_rx(double t, const QiPacket& p, const OperatingPoint& op, std::vector<double>& detections) {
    ++res_.rx_packets;
    Part part;
    part.t0 = t;
    part.x = ask_modulate(frame_packet(p), kAskBitRate, cfg_.receiver->ask_depth, kEnvelopeRate).samples;
    part.rx = true;
    envelope_parts_.push_back(part);
    if (agent_) {
      // The attacker's tap sees the load-change pulses of this transmission.
      const Trace seg = adapter_load_change(part, op.i_dc, t - kGuard, t + 0.008);
      if (auto d = agent_->detect_activity(seg)) detections.push_back(std::max(*d, t));
    }
    add_part(std::move(part), p, std::nullopt);
  }

  void add_emission(const AttackerEmission& e) {
    Part adapter;
    adapter.t0 = e.start;
    adapter.x = e.interference.samples;
    adapter_parts_.push_back(adapter);
    // Propagate to the coil with zero padding so the FFT does not wrap.
    const std::size_t pad = static_cast<std::size_t>(kEnvelopeRate * 0.005);
    Trace rel;
    rel.sample_rate = kEnvelopeRate;
    rel.samples.assign(pad, 0.0);
    rel.samples.insert(rel.samples.end(), e.interference.samples.begin(), e.interference.samples.end());
    rel.samples.resize(rel.samples.size() + pad, 0.0);
    const Trace coil = propagate_interference(cfg_.system, rel);
    // Keep only a short tail of the padding so adjacent packets stay separate bursts.
    const std::size_t keep = static_cast<std::size_t>(kEnvelopeRate * 0.0005);
    Part part;
    part.t0 = e.start - static_cast<double>(keep) / kEnvelopeRate;
    part.x.assign(coil.samples.begin() + static_cast<long>(pad - keep), coil.samples.end() - static_cast<long>(pad - keep));
    envelope_parts_.push_back(part);
    add_part(std::move(part), std::nullopt, e.packet);
  }

  Trace adapter_load_change(const Part& rx, double i_dc, double from, double to) {
    Trace i;
    i.sample_rate = kEnvelopeRate;
    i.t0 = from;
    i.unit = Unit::Amperes;
    const auto n = static_cast<std::size_t>(std::llround((to - from) * kEnvelopeRate));
    i.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) i.samples[k] = i_dc * (1.0 + rx.at(i.time_at(k)));
    Trace dv = load_change_trace(cfg_.system, i);
    dv.t0 = from;
    const double sigma = 0.1 * cfg_.system.Z_ad * i_dc * (cfg_.receiver ? cfg_.receiver->ask_depth : 0.5);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto& v : dv.samples) v += sigma * nd(adapter_rng_);
    return dv;
  }

  void render_due_bursts(double t) {
    std::sort(bursts_.begin(), bursts_.end(), [](const Burst& a, const Burst& b) { return a.start < b.start; });
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t i = 0; i < bursts_.size();) {
      const Burst& b = bursts_[i];
      if (t < b.end + kGuard) {
        ++i;
        continue;
      }
      Trace env;
      env.sample_rate = kEnvelopeRate;
      env.t0 = b.start - kGuard;
      const auto n = static_cast<std::size_t>(std::llround((b.end - b.start + 2.0 * kGuard) * kEnvelopeRate));
      env.samples.assign(n, 1.0);
      for (const auto& p : b.parts) {
        const auto off = std::llround((p.t0 - env.t0) * kEnvelopeRate);
        for (std::size_t k = 0; k < p.x.size(); ++k) {
          const long long j = off + static_cast<long long>(k);
          if (j >= 0 && j < static_cast<long long>(n)) env.samples[static_cast<std::size_t>(j)] += p.x[k];
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (voice_) env.samples[k] += voice_->sample(voice_->coil, env.time_at(k));
        env.samples[k] += cfg_.sensing_noise * nd(sense_rng_);
      }
      const auto demod = ask_demodulate(env, kAskBitRate);
      std::optional<QiPacket> decoded;
      if (demod.ok()) {
        const auto pr = parse_packet(demod.bits);
        if (pr.ok()) decoded = *pr.packet;
      }
      events_.push_back(decoded ? DemodEvent::of(*decoded) : DemodEvent::parse_error());
      for (const auto& p : b.rx)
        if (!decoded || !(*decoded == p)) ++res_.rx_lost;
      if (decoded && !b.rx.empty() && std::find(b.rx.begin(), b.rx.end(), *decoded) == b.rx.end() &&
          std::find(b.forged.begin(), b.forged.end(), *decoded) == b.forged.end())
        ++res_.collisions;
      if (cfg_.eavesdrop && !b.rx.empty()) eavesdrop_ask(b);
      bursts_.erase(bursts_.begin() + static_cast<long>(i));
    }
    prune(t);
  }

  void eavesdrop_ask(const Burst& b) {
    const double from = b.start - kEavesdropMargin;
    const double to = b.end + kEavesdropMargin;
    Part sum;
    sum.t0 = from;
    sum.x.assign(static_cast<std::size_t>(std::llround((to - from) * kEnvelopeRate)), 0.0);
    for (const auto& p : b.parts) {
      if (!p.rx) continue;
      for (std::size_t k = 0; k < sum.x.size(); ++k) sum.x[k] += p.at(from + static_cast<double>(k) / kEnvelopeRate);
    }
    const Trace dv = adapter_load_change(sum, b.i_dc, from, to);
    for (auto& m : recover_ask(dv, kAskBitRate)) res_.recovered.push_back(std::move(m));
  }

  void start_flight(double t, const FskResponse& r, const OperatingPoint& op) {
    // The charger sends one FSK response at a time.
    Flight f;
    f.start = t;
    for (const auto& g : flights_) f.start = std::max(f.start, g.end);
    f.response = r;
    f.f_p = cs_.f_p;
    f.schedule = fsk_modulate(r, f.f_p);
    f.end = t + schedule_duration(f.schedule);
    f.ripple = op.ripple;
    flights_.push_back(std::move(f));
  }

  void deliver_fsk(double t, std::optional<FskResponse>& rx_response, std::vector<RecoveredMessage>& attacker_fsk) {
    for (std::size_t i = 0; i < flights_.size();) {
      const Flight& f = flights_[i];
      if (t < f.end) {
        ++i;
        continue;
      }
      rx_response = f.response;
      const bool attacker_listens = agent_ && agent_->wants_fsk();
      if ((attacker_listens || cfg_.eavesdrop) && f.ripple > 0 && !f.schedule.empty()) {
        Trace tr = render_fsk_ripple(f.schedule, f.f_p, f.ripple, kFskPad, f.ripple / 10.0, adapter_rng_());
        tr.t0 = f.start - kFskPad;
        auto msgs = recover_fsk(tr, f.f_p);
        if (cfg_.eavesdrop) res_.recovered.insert(res_.recovered.end(), msgs.begin(), msgs.end());
        if (attacker_listens) attacker_fsk.insert(attacker_fsk.end(), msgs.begin(), msgs.end());
      }
      flights_.erase(flights_.begin() + static_cast<long>(i));
    }
  }

  // ---- continuous interference ---------------------------------------------

  void update_voice(double t) {
    const auto& sched = cfg_.attack.schedule;
    while (voice_index_ < sched.size() && sched[voice_index_].at <= t) {
      const AttackAction& a = sched[voice_index_++];
      if (a.type == ActionType::Voice) {
        VoiceLoop v;
        v.start = t;
        v.until = a.until;
        Trace raw = named_waveform(a.waveform, a.f_i, 2.0, kEnvelopeRate);
        if (a.waveform == "sine") {
          for (auto& x : raw.samples) x *= a.m_i;
        } else {
          raw = inject_voice(raw, a.m_i);
        }
        v.adapter = raw.samples;
        v.coil = propagate_interference(cfg_.system, raw).samples;
        voice_ = std::move(v);
      } else if (a.type == ActionType::Stop) {
        voice_.reset();
      }
    }
  }

  void prune(double t) {
    auto old = [&](const Part& p) { return p.end() < t - 0.05; };
    std::erase_if(envelope_parts_, old);
    std::erase_if(adapter_parts_, old);
  }

  void record(double t, const OperatingPoint& op) {
    double adapter_rel = voice_ ? voice_->sample(voice_->adapter, t) : 0.0;
    for (const auto& p : adapter_parts_) adapter_rel += p.at(t);
    double coil_rel = voice_ ? voice_->sample(voice_->coil, t) : 0.0;
    for (const auto& p : envelope_parts_) coil_rel += p.at(t);
    res_.adapter_voltage.samples.push_back(cfg_.system.V_ad * (1.0 + adapter_rel) - cfg_.system.Z_ad * op.i_dc);
    res_.tx_envelope.samples.push_back(op.i_tx * (1.0 + coil_rel));
    res_.power.samples.push_back(op.p_tx);
    double temp = cfg_.receiver ? cfg_.receiver->thermal.ambient : 0.0;
    if (rs_) temp = rs_->thermal.temp;
    else if (obj_) temp = obj_->thermal.temp;
    res_.temperature.samples.push_back(temp);
    if (res_.temperature.samples.size() == 1) {
      for (Trace* tr : {&res_.adapter_voltage, &res_.tx_envelope, &res_.power, &res_.temperature}) tr->t0 = t;
    }
  }

  const SimConfig& cfg_;
  ChargerConfig ccfg_;
  ChargerState cs_;
  std::optional<ReceiverState> rs_;
  std::optional<ForeignObject> obj_;
  std::optional<AttackerAgent> agent_;
  std::mt19937_64 sense_rng_;
  std::mt19937_64 adapter_rng_;
  OperatingPoint op_;

  std::vector<Burst> bursts_;
  std::deque<DemodEvent> events_;
  std::vector<Flight> flights_;
  std::vector<Part> envelope_parts_;
  std::vector<Part> adapter_parts_;
  std::vector<double> pending_detections_;
  std::optional<VoiceLoop> voice_;
  std::size_t voice_index_ = 0;

  SimResult res_;
};

}  // namespace

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  Engine e(cfg);
  return e.run();
}

}  // namespace qisim
