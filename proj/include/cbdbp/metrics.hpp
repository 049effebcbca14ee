#pragma once

#include <cstddef>

#include "cbdbp/signal.hpp"

namespace cbdbp {

struct PhaseRemoval {
  SymbolFrame frame;
  double phase_x = 0.0;
  double phase_y = 0.0;
  /// Cross-correlation was zero; the input is returned unchanged.
  bool degenerate = false;
};

/// Rotates rx by the negative phase of sum(rx conj(tx)) taken jointly over
/// both polarizations (or per polarization when requested).
PhaseRemoval mean_phase_removal(const SymbolFrame& rx, const SymbolFrame& tx, bool per_polarization = false);

struct SnrOptions {
  /// Least-squares complex gain of rx onto tx removed before the error is formed.
  bool fit_gain = true;
  bool per_polarization = false;
};

struct SnrReport {
  double snr_db = 0.0;
  double snr_x_db = 0.0;
  double snr_y_db = 0.0;
  /// Phase of the fitted gain (rad); zero without gain fitting.
  double residual_phase = 0.0;
  std::size_t symbol_count = 0;
  /// Error vector was exactly zero; snr fields hold +infinity.
  bool infinite = false;
};

/// Data-aided SNR sum|tx|^2 / sum|rx - tx|^2 over both polarizations after
/// dropping edge_trim symbols at each end.
SnrReport snr_estimate(const SymbolFrame& rx, const SymbolFrame& tx, std::size_t edge_trim, const SnrOptions& opt = {});

/// SNR gain in dB of a DBP receiver over EDC.
double gain_vs_edc(double snr_dbp_db, double snr_edc_db);

double to_db(double ratio);

}  // namespace cbdbp
