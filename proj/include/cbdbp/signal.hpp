#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cbdbp/fft.hpp"

namespace cbdbp {

/// Exact ratio p/q, kept in lowest terms with q > 0.
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Two aligned polarization tributaries sampled at sample_rate (Hz).
/// |x|^2 + |y|^2 is the instantaneous power in W.
struct DualPolWaveform {
  CVec x;
  CVec y;
  double sample_rate = 1.0;

  DualPolWaveform() = default;
  DualPolWaveform(CVec x_, CVec y_, double rate);
  DualPolWaveform(std::size_t n, double rate);

  std::size_t size() const { return x.size(); }
  /// Sum of |x|^2 + |y|^2 over all samples.
  double sample_energy() const;
  double mean_power() const;
  void validate() const;
};

struct SymbolFrame {
  CVec x;
  CVec y;
  double symbol_rate = 1.0;

  std::size_t size() const { return x.size(); }
};

/// Overlap-save geometry: block length N, overlap N_ov (split N_ov/2 per
/// side), and samples per symbol n.
struct BlockingConfig {
  std::size_t block_length = 16384;
  std::size_t overlap = 0;
  Rational samples_per_symbol{9, 8};

  std::size_t stride() const { return block_length - overlap; }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate(double rolloff = 0.0) const;
};

/// Seeded 64-bit generator. Independent streams are derived from
/// (seed, stream id) so channels and noise sources never share state.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }
  double normal() { return normal_(engine_); }
  /// Circular complex Gaussian with E|z|^2 = variance.
  Complex complex_normal(double variance);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::vector<std::uint8_t> random_bits(std::size_t count, Rng& rng);

/// Gray-mapped square QAM with unit average energy. Bits are consumed
/// log2(order) at a time, MSB first; the first half of each label selects
/// the in-phase level, the second half the quadrature level.
CVec qam_map(std::span<const std::uint8_t> bits, int order);

/// Uniform random QAM symbols on both polarizations.
SymbolFrame random_symbol_frame(std::size_t num_symbols, int order, double symbol_rate, Rng& rng);

/// Root-raised-cosine pulse of unit energy, time in symbol periods.
double rrc_pulse(double t, double rolloff);

/// Taps h(k / sps) for k = -span*sps/2 .. span*sps/2. span*sps must be an integer.
RVec rrc_taps(Rational sps, double rolloff, int span_symbols);

/// Pulse-shapes the frame on a periodic record of num_symbols*sps samples.
/// Symbol k peaks at sample k*sps.
DualPolWaveform rrc_shape(const SymbolFrame& symbols, Rational sps, double rolloff, int span_symbols);

/// Matched filter with the rrc_shape pulse followed by sampling at symbol
/// instants. The waveform is treated as periodic.
SymbolFrame matched_filter_and_sample(const DualPolWaveform& w, double symbol_rate, double rolloff,
                                      int span_symbols);

std::vector<DualPolWaveform> overlap_save_split(const DualPolWaveform& w, const BlockingConfig& cfg);
DualPolWaveform overlap_save_join(std::span<const DualPolWaveform> blocks, const BlockingConfig& cfg);

using BlockProcessor = std::function<DualPolWaveform(const DualPolWaveform&)>;

/// Processes a periodic record block by block and returns a record of the
/// same length. Blocks are taken circularly so no edge samples are lost.
DualPolWaveform overlap_save_apply(const DualPolWaveform& w, const BlockingConfig& cfg, const BlockProcessor& fn);

/// Rational rate change by p/q via zero-padding or truncating the spectrum
/// of the whole record. Throws if the new rate is below min_rate_hz.
DualPolWaveform resample(const DualPolWaveform& w, std::int64_t p, std::int64_t q, double min_rate_hz = 0.0);

}  // namespace cbdbp
