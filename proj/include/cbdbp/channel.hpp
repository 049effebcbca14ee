#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cbdbp/signal.hpp"

namespace cbdbp {

namespace constants {
inline constexpr double speed_of_light = 299792458.0;  // m/s
inline constexpr double planck = 6.62607015e-34;       // J s
inline constexpr double ps2_to_s2 = 1e-24;
}  // namespace constants

struct FiberParams {
  double alpha_db_per_km = 0.2;
  double dispersion_ps_per_nm_km = 17.0;
  double gamma_per_w_km = 1.27;
  double span_length_km = 80.0;
  double reference_wavelength_nm = 1550.0;

  void validate() const;
  /// Field-power attenuation in nepers/km: alpha_dB * ln(10) / 10.
  double alpha_np_per_km() const;
  double beta2_ps2_per_km() const;
  double carrier_frequency_hz() const;
};

struct LinkConfig {
  FiberParams fiber;
  int num_spans = 15;
  double noise_figure_db = 4.5;
  int steps_per_span = 160;
  /// When false, amplifiers apply gain only.
  bool ase_noise = true;

  void validate() const;
  double total_length_km() const { return fiber.span_length_km * num_spans; }
  double span_gain_db() const { return fiber.alpha_db_per_km * fiber.span_length_km; }
  /// Accumulated beta2 * length over the link, ps^2.
  double total_beta2_ps2() const { return fiber.beta2_ps2_per_km() * total_length_km(); }
};

struct WdmConfig {
  int num_channels = 5;
  double channel_spacing_hz = 100e9;
  double symbol_rate_hz = 93e9;
  double rolloff = 0.05;
  int qam_order = 64;
  double launch_power_dbm_per_channel = 0.0;

  void validate() const;
  /// Smallest power-of-two samples/symbol whose rate covers
  /// num_channels * spacing + 2 * symbol_rate.
  int simulation_samples_per_symbol() const;
  double launch_power_w() const;
};

/// beta2 = -D lambda^2 / (2 pi c), returned in ps^2/km.
double beta2_from_D(double dispersion_ps_per_nm_km, double wavelength_nm);

/// Angular frequency (rad/s) of every DFT bin, in storage order. The
/// Nyquist bin of an even length is assigned to -fs/2.
RVec angular_frequency_grid(std::size_t n, double sample_rate);

/// H(w) = exp(sign * j * (beta2 / 2) * w^2 * length).
CVec gvd_response(std::span<const double> omega, double beta2_ps2_per_km, double length_km, int sign);

/// Applies the GVD operator to the whole (periodic) record.
DualPolWaveform apply_gvd(const DualPolWaveform& w, double beta2_ps2_per_km, double length_km, int sign);

/// Effective nonlinear length of a step of dz km: (1 - exp(-alpha dz)) / alpha.
double effective_length_km(double alpha_np_per_km, double dz_km);

/// Symmetric split-step propagation through one span of the Manakov model.
DualPolWaveform forward_span(const DualPolWaveform& w, const FiberParams& fiber, int steps);

/// Per-polarization, per-sample ASE variance (W) for an amplifier of the
/// given gain and noise figure at the given sample rate.
double ase_noise_variance(double gain_db, double noise_figure_db, double center_frequency_hz, double sample_rate);

DualPolWaveform edfa(const DualPolWaveform& w, double gain_db, double noise_figure_db, double center_frequency_hz,
                     Rng& rng, bool add_noise = true);

/// Shifts channel k to (k - (K-1)/2) * spacing and sums.
DualPolWaveform wdm_mux(std::span<const DualPolWaveform> channels, double spacing_hz);

/// Keeps the centre channel with an ideal low-pass of total width spacing_hz.
DualPolWaveform wdm_demux_center(const DualPolWaveform& w, double spacing_hz);

/// num_spans repetitions of forward_span followed by an amplifier whose gain
/// equals the span loss.
DualPolWaveform run_link(const DualPolWaveform& tx, const LinkConfig& link, Rng& rng);

/// Dispersion memory |beta2 L| * 2 pi * B * fs in samples, rounded up to a
/// multiple of `multiple`.
std::size_t dispersion_memory_samples(double beta2_total_ps2, double bandwidth_hz, double sample_rate,
                                      std::size_t multiple = 2);

}  // namespace cbdbp
