// SPDX-License-Identifier: Apache-2.0
#include "qisim/eavesdropper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qisim/dsp.hpp"

namespace qisim {

const char* direction_name(Direction d) { return d == Direction::RxToTx ? "rx_to_tx" : "tx_to_rx"; }

std::string format_message(const RecoveredMessage& m) {
  std::string kind;
  std::string payload;
  if (const auto* p = std::get_if<QiPacket>(&m.message)) {
    kind = kind_name(p->kind);
    payload = hex_bytes(p->payload);
  } else {
    const auto& r = std::get<FskResponse>(m.message);
    kind = fsk_kind_name(r.kind);
    if (auto pk = fsk_data_packet(r)) kind += std::string("/") + kind_name(pk->kind);
    payload = hex_bytes(r.payload);
  }
  if (payload.empty()) payload = "-";
  char buf[256];
  std::snprintf(buf, sizeof buf, "t=%.6f dir=%s kind=%s payload=%s conf=%.2f", m.t_start, direction_name(m.direction),
                kind.c_str(), payload.c_str(), m.confidence);
  return buf;
}

Trace filter_h1(const Trace& t, double f) {
  if (!(f > 0)) throw std::invalid_argument("filter_h1: frequency must be positive");
  const auto H = static_cast<std::ptrdiff_t>(std::llround(t.sample_rate / f));
  std::vector<double> k(static_cast<std::size_t>(2 * H + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -H; i <= H; ++i) {
    const double v = std::max(0.0, 1.0 - f * std::fabs(static_cast<double>(i) / t.sample_rate));
    k[static_cast<std::size_t>(i + H)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  Trace out = t;
  const auto n = static_cast<std::ptrdiff_t>(t.size());
  if (n == 0) return out;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -H; j <= H; ++j) {
      const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(i - j, 0, n - 1);
      acc += k[static_cast<std::size_t>(j + H)] * t.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

namespace {

double sample_at(const std::vector<double>& x, double pos) {
  const double last = static_cast<double>(x.size() - 1);
  pos = std::clamp(pos, 0.0, last);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0 || i + 1 >= x.size()) return x[i];
  return x[i] * (1.0 - frac) + x[i + 1] * frac;
}

}  // namespace

Trace filter_h2(const Trace& t, double f) {
  if (!(f > 0)) throw std::invalid_argument("filter_h2: frequency must be positive");
  Trace out = t;
  if (t.samples.empty()) return out;
  const double s = t.sample_rate / (2.0 * f);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double c = static_cast<double>(i);
    out.samples[i] = sample_at(t.samples, c - s) - sample_at(t.samples, c + s);
  }
  return out;
}

namespace {

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Window> activity_windows(const std::vector<double>& w, std::size_t half_bit) {
  std::vector<Window> out;
  if (w.empty()) return out;
  // Moving average of |w| over one bit.
  const std::size_t span = 2 * half_bit;
  std::vector<double> sm(w.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += std::fabs(w[i]);
    if (i >= span) acc -= std::fabs(w[i - span]);
    sm[i] = acc / static_cast<double>(std::min(i + 1, span));
  }
  const double peak = *std::max_element(sm.begin(), sm.end());
  if (!(peak > 0)) return out;
  const double thr = std::min(4.0 * median(sm), 0.5 * peak);
  const std::size_t merge_gap = 8 * half_bit;
  const std::size_t pad = 4 * half_bit;
  std::size_t i = 0;
  while (i < sm.size()) {
    if (sm[i] <= thr) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t last_active = i;
    while (j < sm.size() && j <= last_active + merge_gap) {
      if (sm[j] > thr) last_active = j;
      ++j;
    }
    Window win;
    win.begin = i > pad ? i - pad : 0;
    win.end = std::min(sm.size(), last_active + pad);
    if (win.end - win.begin >= 40 * half_bit) out.push_back(win);
    i = last_active + 1;
  }
  return out;
}

}  // namespace

std::vector<RecoveredMessage> recover_ask(const Trace& adapter_trace, double f_ask) {
  std::vector<RecoveredMessage> out;
  if (adapter_trace.size() < 16) return out;
  const double rate = adapter_trace.sample_rate;
  const auto h = static_cast<std::size_t>(std::llround(rate / (2.0 * f_ask)));
  if (h < 4) throw std::invalid_argument("recover_ask: fewer than 4 samples per half-bit");

  Trace x = adapter_trace;
  const double med = median(x.samples);
  for (auto& v : x.samples) v -= med;
  // Both filters run at the half-bit rate, where the load-change pulse pairs
  // of adjacent half-bits line up.
  const Trace w = filter_h2(filter_h1(x, 2.0 * f_ask), 2.0 * f_ask);

  for (const auto& win : activity_windows(w.samples, h)) {
    std::size_t best_phase = 0;
    double best = -1.0;
    for (std::size_t p = 0; p < h; ++p) {
      double acc = 0.0;
      for (std::size_t i = win.begin + p; i < win.end; i += h) acc += std::fabs(w.samples[i]);
      if (acc > best) {
        best = acc;
        best_phase = p;
      }
    }
    std::vector<double> samp;
    std::vector<std::size_t> where;
    for (std::size_t i = win.begin + best_phase; i < win.end; i += h) {
      samp.push_back(w.samples[i]);
      where.push_back(i);
    }
    if (samp.size() < 8) continue;
    std::vector<double> mag(samp.size());
    std::transform(samp.begin(), samp.end(), mag.begin(), [](double v) { return std::fabs(v); });
    const double thr = 0.5 * percentile(mag, 95.0);
    if (!(thr > 0)) continue;
    std::size_t act0 = 0;
    while (act0 < mag.size() && mag[act0] <= thr) ++act0;
    if (act0 == mag.size()) continue;
    const std::size_t first = act0 > 0 ? act0 - 1 : 0;
    for (std::size_t st = first; st <= act0 + 2 && st < samp.size(); ++st) {
      std::vector<Level> levels;
      for (std::size_t k = st; k < samp.size(); ++k) levels.push_back(samp[k] > 0 ? Level::High : Level::Low);
      const auto pr = parse_packet(bmc_decode_prefix(levels), true);
      if (!pr.ok()) continue;
      RecoveredMessage m;
      m.direction = Direction::RxToTx;
      m.message = *pr.packet;
      m.confidence = pr.repaired ? 0.5 : 1.0;
      m.t_start = adapter_trace.time_at(where[st]);
      out.push_back(std::move(m));
      break;
    }
  }
  return out;
}

std::vector<double> track_ripple_frequency(const Spectrogram& s, double f_p_nominal, double delta_f) {
  const double centre = 2.0 * f_p_nominal + delta_f;
  const double half_span = std::max(5.0 * delta_f, 4.0 * s.bin_width());
  const auto k_lo = static_cast<std::size_t>(std::max(1.0, std::floor((centre - half_span) / s.bin_width())));
  const auto k_hi = std::min(s.bins() - 2, static_cast<std::size_t>(std::ceil((centre + half_span) / s.bin_width())));
  std::vector<double> f(s.frames(), std::numeric_limits<double>::quiet_NaN());
  if (k_lo >= k_hi) return f;
  for (std::size_t m = 0; m < s.frames(); ++m) {
    const auto& mag = s.magnitudes[m];
    std::size_t kp = k_lo;
    for (std::size_t k = k_lo; k <= k_hi; ++k)
      if (mag[k] > mag[kp]) kp = k;
    std::vector<double> band(mag.begin() + static_cast<std::ptrdiff_t>(k_lo), mag.begin() + static_cast<std::ptrdiff_t>(k_hi) + 1);
    const double floor_level = median(band);
    if (!(mag[kp] > 10.0 * floor_level) || !(mag[kp] > 0)) continue;
    // Parabolic interpolation on log magnitude.
    const double a = std::log(std::max(mag[kp - 1], 1e-300));
    const double b = std::log(mag[kp]);
    const double c = std::log(std::max(mag[kp + 1], 1e-300));
    const double den = a - 2.0 * b + c;
    const double delta = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    f[m] = (static_cast<double>(kp) + std::clamp(delta, -0.5, 0.5)) * s.bin_width();
  }
  return f;
}

std::vector<RecoveredMessage> recover_fsk(const Trace& adapter_trace, double f_p_nominal,
                                          const FskRecoveryOptions& opts, std::string* diagnostic) {
  std::vector<RecoveredMessage> out;
  auto diag = [&](const std::string& msg) {
    if (diagnostic) *diagnostic = msg;
  };
  const double bin = adapter_trace.sample_rate / static_cast<double>(opts.window);
  if (2.0 * opts.delta_f < bin) {
    diag("ripple deviation 2*delta_f below the spectrogram bin width");
    return out;
  }
  if (4.0 * f_p_nominal + 2.0 * opts.delta_f >= adapter_trace.sample_rate) {
    diag("sample rate too low for the 2*f_p ripple");
    return out;
  }
  if (adapter_trace.size() < opts.window) {
    diag("trace shorter than one spectrogram window");
    return out;
  }
  const Spectrogram s = stft(adapter_trace, opts.window, opts.hop);
  const auto f = track_ripple_frequency(s, f_p_nominal, opts.delta_f);
  const double thr = 2.0 * f_p_nominal + opts.delta_f;
  const double frame_dt = static_cast<double>(opts.hop) / adapter_trace.sample_rate;
  const double half = (opts.cycles_per_bit / 2.0) / f_p_nominal;

  // Level crossings with linear interpolation between frame centres.
  struct Crossing {
    double t;
    bool rising;
  };
  std::vector<Crossing> xs;
  for (std::size_t m = 0; m + 1 < f.size(); ++m) {
    const double a = std::isnan(f[m]) ? thr - opts.delta_f : f[m];
    const double b = std::isnan(f[m + 1]) ? thr - opts.delta_f : f[m + 1];
    if ((a > thr) == (b > thr)) continue;
    const double frac = (thr - a) / (b - a);
    xs.push_back({s.frame_time(m) + frac * frame_dt, b > thr});
  }
  if (xs.empty()) {
    diag("no frequency switching near 2*f_p");
    return out;
  }
  const double trace_end = adapter_trace.t0 + adapter_trace.duration();
  std::size_t i = 0;
  while (i < xs.size()) {
    if (!xs[i].rising) {
      ++i;
      continue;
    }
    // One response: runs separated by crossings until LOW lasts longer than
    // a BMC signal permits.
    std::vector<Level> levels;
    const double t_start = xs[i].t;
    std::size_t j = i;
    for (; j < xs.size(); ++j) {
      const double next_t = j + 1 < xs.size() ? xs[j + 1].t : trace_end;
      const double run = next_t - xs[j].t;
      const Level l = xs[j].rising ? Level::High : Level::Low;
      auto n = static_cast<long>(std::lround(run / half));
      if (l == Level::Low && (run > 2.5 * half || j + 1 >= xs.size())) {
        if (levels.size() % 2 == 1) levels.push_back(Level::Low);
        ++j;
        break;
      }
      n = std::clamp<long>(n, 1, 2);
      for (long k = 0; k < n; ++k) levels.push_back(l);
    }
    i = j;
    if (auto r = classify_fsk_bits(bmc_decode_prefix(levels))) {
      RecoveredMessage msg;
      msg.direction = Direction::TxToRx;
      msg.message = *r;
      msg.confidence = 1.0;
      msg.t_start = t_start;
      out.push_back(std::move(msg));
    }
  }
  if (out.empty()) diag("switching found but no response decoded");
  return out;
}

}  // namespace qisim
