#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cbdbp/channel.hpp"
#include "cbdbp/coefficients.hpp"
#include "cbdbp/signal.hpp"

namespace cbdbp {

/// Receiver-side knobs of the (coupled-band) ESSFM cascade.
struct DbpConfig {
  int num_steps = 1;
  int num_subbands = 1;
  /// Nonlinear step placement: first linear step (1 - rho) L, last rho L.
  double splitting_ratio = 0.5;
  BlockingConfig blocking;
  NlprCoefficients coefficients;
  /// Forward-link dispersion; the cascade applies it with the opposite sign.
  double beta2_ps2_per_km = -21.682619391414892;
  double total_length_km = 1200.0;

  double step_length_km() const { return total_length_km / num_steps; }
  /// Checks every invariant. When record_length exceeds the block length
  /// the overlap must also cover the link's dispersion memory.
  void validate(double sample_rate = 0.0, std::size_t record_length = 0) const;
};

/// Overlap that covers the full-link dispersion memory across the whole
/// processed band, rounded up to a multiple of 2 * num_subbands.
std::size_t default_overlap(double beta2_total_ps2, double sample_rate, int num_subbands);

/// Time-domain subbands of one block. Band b holds the contiguous DFT bins
/// centred on center_offsets[b] (rad/s); bands are ordered from the most
/// negative to the most positive frequency. Samples are amplitude-preserving:
/// the parent equals sum_b u_b(t) exp(j Omega_b t).
struct SubbandSet {
  std::vector<CVec> x;
  std::vector<CVec> y;
  RVec center_offsets;
  double subband_sample_rate = 1.0;

  int size() const { return static_cast<int>(x.size()); }
  /// Energy sum |u|^2 / rate, comparable with the parent block's
  /// sample_energy() / sample_rate.
  double energy() const;
};

DualPolWaveform edc(const DualPolWaveform& w, double beta2_total_ps2, const BlockingConfig& blocking);

SubbandSet subband_demux(std::span<const Complex> spectrum_x, std::span<const Complex> spectrum_y, int num_subbands,
                         double sample_rate);
std::pair<CVec, CVec> subband_mux(const SubbandSet& bands);

/// exp(sign j (beta2/2) (w + center_offset)^2 length) on the band's own grid.
CVec subband_response(std::size_t band_length, double band_rate, double center_offset, double beta2_ps2_per_km,
                      double length_km, int sign);
CVec subband_linear_step(std::span<const Complex> band, double band_rate, double center_offset,
                         double beta2_ps2_per_km, double length_km, int sign);

/// Phase rotations theta_i for every band (circular convolution on the block).
std::vector<RVec> nlpr_phases(const SubbandSet& bands, const NlprCoefficients& c);
SubbandSet nlpr_step(const SubbandSet& bands, const NlprCoefficients& c);

/// Intermediate fields of one pass, used for linearization. Indexed
/// [step][band]; fields are those entering the nonlinear step.
struct CascadeTrace {
  std::vector<std::vector<CVec>> x;
  std::vector<std::vector<CVec>> y;
  std::vector<std::vector<RVec>> power;
  std::vector<std::vector<CVec>> rotation;
};

/// CB-ESSFM on single circular blocks of a fixed length. Precomputes the
/// per-band responses and MIMO filter spectra for one configuration.
class CbEssfmEngine {
 public:
  CbEssfmEngine(const DbpConfig& cfg, std::size_t block_length, double sample_rate);

  DualPolWaveform process_block(const DualPolWaveform& block, CascadeTrace* trace = nullptr) const;

  /// Derivative of process_block's output with respect to one free
  /// coefficient, evaluated at the pass recorded in trace.
  DualPolWaveform tangent(const CascadeTrace& trace, const NlprCoefficients::Parameter& direction) const;

  std::size_t block_length() const { return n_; }

 private:
  void to_time(CVec& band) const;
  void to_freq(CVec& band) const;
  std::vector<RVec> filter_intensities(const std::vector<RVec>& power) const;
  DualPolWaveform mux(std::vector<CVec>& bx, std::vector<CVec>& by) const;

  DbpConfig cfg_;
  std::size_t n_;
  std::size_t m_;
  double sample_rate_;
  std::vector<CVec> first_;
  std::vector<CVec> middle_;
  std::vector<CVec> last_;
  // rfft of each filter placed circularly on the band grid, [i][j].
  std::vector<std::vector<CVec>> filter_spectra_;
};

/// Coupled-band ESSFM with overlap-save blocking.
DualPolWaveform cb_essfm(const DualPolWaveform& w, const DbpConfig& cfg);

/// Single-band ESSFM in the symmetric configuration (half linear steps at
/// both ends), computed on the full band without subband processing.
/// Requires cfg.num_subbands == 1; cfg.splitting_ratio is ignored.
DualPolWaveform essfm(const DualPolWaveform& w, const DbpConfig& cfg);

/// Conventional symmetric SSFM backpropagation through the link: amplifier
/// gain undone, loss replaced by gain, dispersion and nonlinearity with
/// reversed signs. steps_total must be a multiple of the span count.
DualPolWaveform ssfm_dbp(const DualPolWaveform& w, const LinkConfig& link, int steps_total,
                         const BlockingConfig& blocking);

/// Splits each block into subbands and backpropagates each one with
/// ssfm_dbp's step structure, ignoring inter-band nonlinearity.
DualPolWaveform subband_ssfm_dbp(const DualPolWaveform& w, const LinkConfig& link, int steps_total,
                                 int num_subbands, const BlockingConfig& blocking);

}  // namespace cbdbp
