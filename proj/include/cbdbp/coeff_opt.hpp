#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cbdbp/dbp.hpp"
#include "cbdbp/metrics.hpp"
#include "cbdbp/signal.hpp"

namespace cbdbp {

/// A received record at the DBP sample rate together with the symbols that
/// were transmitted on it. The record is periodic and symbol k sits at
/// sample k * rx.sample_rate / tx.symbol_rate.
struct TrainingSet {
  DualPolWaveform rx;
  SymbolFrame tx;
  double rolloff = 0.05;
  int rrc_span_symbols = 64;
  /// Symbols dropped at each end when an SNR is reported.
  std::size_t edge_trim_symbols = 0;

  void validate() const;
};

struct OptimizerSettings {
  int max_iterations = 20;
  double relative_tolerance = 1e-4;
  /// First step length tried by the backtracking line search.
  double initial_step = 1.0;
  std::uint64_t rng_seed = 1;
  double holdout_fraction = 0.2;
  std::size_t holdout_block_symbols = 256;
  /// Ridge weight relative to the mean diagonal of the normal equations.
  double ridge = 1e-6;

  void validate() const;
};

struct OptimizationReport {
  /// Training objective before the first and after every accepted iteration.
  std::vector<double> objective_trace;
  double holdout_objective = 0.0;
  double holdout_objective_initial = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct OptimizationResult {
  NlprCoefficients coefficients;
  OptimizationReport report;
};

/// Objective used by the optimizer: mean |g y_k - x_k|^2 over the selected
/// symbols of both polarizations, with the complex gain g fitted by least
/// squares. `selected` lists symbol indices; empty means all.
double training_objective(const SymbolFrame& y, const SymbolFrame& x, std::span<const std::size_t> selected = {});

/// Fits the NLPR coefficients of cfg (shape taken from cfg.coefficients,
/// values ignored) by Gauss-Newton on the training part of `train`,
/// starting from all-zero taps. The whole record is processed as one
/// circular block.
OptimizationResult optimize_coefficients(const TrainingSet& train, const DbpConfig& cfg, const OptimizerSettings& settings);

/// SNR after cb_essfm with cfg, matched filtering and sampling.
SnrReport evaluate_snr(const TrainingSet& eval, const DbpConfig& cfg);

/// One training record and one independent evaluation record.
struct Realization {
  TrainingSet train;
  TrainingSet eval;
};

struct RhoPoint {
  double rho = 0.0;
  /// Mean over realizations.
  double snr_db = 0.0;
  std::vector<double> snr_db_per_realization;
};

struct RhoSweepResult {
  std::vector<RhoPoint> points;  // sorted by rho
  double best_rho = 0.0;
  double best_snr_db = 0.0;
};

/// For every rho re-optimizes the coefficients on each realization's
/// training record and averages the evaluation SNR. When refine_step > 0
/// the points best_rho +- k*refine_step (k = 1..refine_points) are added.
RhoSweepResult sweep_splitting_ratio(std::span<const double> grid, const DbpConfig& base, std::span<const Realization> data,
                                     const OptimizerSettings& settings, double refine_step = 0.01, int refine_points = 4);

struct PowerSweepResult {
  std::vector<double> power_dbm;
  std::vector<double> snr_db;
  double best_power_dbm = 0.0;
  double best_snr_db = 0.0;
  /// Grid argmax sits on the first or last point.
  bool at_edge = false;
};

/// Evaluates snr_at(power) on a sorted grid of at least three points and
/// refines the argmax with a parabola through it and its neighbours.
PowerSweepResult sweep_launch_power(std::span<const double> power_grid_dbm, const std::function<double(double)>& snr_at,
                                    bool parabolic_refinement = true);

}  // namespace cbdbp
