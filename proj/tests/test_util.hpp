#pragma once

#include <cmath>
#include <cstdint>

#include "cbdbp/signal.hpp"

namespace testutil {

using cbdbp::Complex;
using cbdbp::CVec;
using cbdbp::DualPolWaveform;

inline CVec random_vector(std::size_t n, std::uint64_t seed, double variance = 1.0) {
  cbdbp::Rng rng(seed, 77);
  CVec v(n);
  for (auto& c : v) c = rng.complex_normal(variance);
  return v;
}

inline DualPolWaveform random_waveform(std::size_t n, double rate, std::uint64_t seed, double power = 1.0) {
  return DualPolWaveform(random_vector(n, seed, power / 2.0), random_vector(n, seed + 1000, power / 2.0), rate);
}

/// QAM waveform at `sps` samples per symbol with RRC shaping (periodic).
inline DualPolWaveform qam_waveform(std::size_t num_symbols, cbdbp::Rational sps, double symbol_rate, double power_w,
                                    std::uint64_t seed, cbdbp::SymbolFrame* symbols = nullptr) {
  cbdbp::Rng rng(seed, 5);
  auto frame = cbdbp::random_symbol_frame(num_symbols, 16, symbol_rate, rng);
  auto w = cbdbp::rrc_shape(frame, sps, 0.05, 64);
  const double s = std::sqrt(power_w / w.mean_power());
  for (auto& v : w.x) v *= s;
  for (auto& v : w.y) v *= s;
  if (symbols) *symbols = frame;
  return w;
}

inline double norm2(const CVec& a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s;
}

inline double rel_diff(const CVec& a, const CVec& b) {
  double num = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) num += std::norm(a[k] - b[k]);
  return std::sqrt(num / norm2(b));
}

inline double rel_diff(const DualPolWaveform& a, const DualPolWaveform& b) {
  double num = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) num += std::norm(a.x[k] - b.x[k]) + std::norm(a.y[k] - b.y[k]);
  return std::sqrt(num / (norm2(b.x) + norm2(b.y)));
}

inline double max_abs_diff(const CVec& a, const CVec& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace testutil
