#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbdbp/channel.hpp"
#include "cbdbp/coeff_opt.hpp"
#include "cbdbp/dbp.hpp"

namespace cbdbp {

/// Raised for configuration problems; the message names the offending
/// field (JSON pointer) or the line of a syntax error.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DbpGrid {
  std::vector<int> num_steps{1};
  std::vector<int> num_subbands{1};
  std::vector<double> splitting_ratio{0.5};
  std::size_t block_length = 16384;
  /// Unset: default_overlap() for the link and the largest N_sb in the grid.
  std::optional<std::size_t> overlap;
  Rational samples_per_symbol{9, 8};
  int intra_half_width = 16;
  int inter_half_width = 16;
  /// Any of edc, essfm, cb-essfm, ssfm-dbp, subband-ssfm-dbp.
  std::vector<std::string> receivers{"edc", "cb-essfm"};
  /// "optimize" (per configuration), "zero", or a coefficient file path.
  std::string coefficients = "optimize";
  int ideal_steps_per_span = 30;
  int ideal_subbands = 2;
};

struct RhoSweepSettings {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.05;
  double refine_step = 0.01;
  int refine_points = 4;
  double launch_power_dbm = 0.0;

  std::vector<double> grid() const;
};

struct ExperimentConfig {
  WdmConfig wdm;
  int rrc_span_symbols = 64;
  LinkConfig link;
  DbpGrid dbp;
  OptimizerSettings optimizer;
  RhoSweepSettings sweep;
  std::vector<double> power_grid_dbm{-2.0, 0.0, 2.0};
  std::size_t num_symbols = 65536;
  std::size_t train_symbols = 16384;
  std::uint64_t rng_seed = 1;
  int realizations = 1;
  std::string output_path;
  /// Wall time makes output non-reproducible, so it is opt-in.
  bool record_wall_time = false;

  void validate() const;
  double dbp_sample_rate() const { return wdm.symbol_rate_hz * dbp.samples_per_symbol.value(); }
  std::size_t overlap() const;
  /// Symbols dropped at each end for SNR: 2 x (RRC span + link memory).
  std::size_t edge_trim_symbols() const;
};

/// Built-in presets: "desk" and "paper-full".
ExperimentConfig preset(std::string_view name);

/// Applies a JSON-with-comments document on top of `base`. Unknown keys are
/// rejected. Throws ConfigError.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base);
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base);
std::string to_json(const ExperimentConfig& cfg);

/// Deterministic 64-bit seed derived from a base seed and a tag list.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Transmits num_symbols per channel at power_dbm through the configured
/// link and returns the centre channel at the DBP rate with its symbols.
TrainingSet simulate_record(const ExperimentConfig& cfg, double power_dbm, std::size_t num_symbols, std::uint64_t seed);

/// DbpConfig for one knob combination of the grid (coefficients zeroed).
DbpConfig make_dbp_config(const ExperimentConfig& cfg, int num_steps, int num_subbands, double rho);

/// RMs/2D for a receiver row; EDC is the N_st = 0 cascade and SSFM rows
/// are counted as single-band cascades with num_steps = total steps.
double receiver_rms_per_2d(const ExperimentConfig& cfg, const std::string& kind, int num_steps, int num_subbands);

struct ResultRow {
  std::string receiver_kind;
  int num_steps = 0;
  int num_subbands = 1;
  double rho = 0.5;
  double power_dbm = 0.0;
  double snr_db = 0.0;
  double rms_per_2d = 0.0;
  std::uint64_t seed = 0;
  double wall_time_s = -1.0;  // negative: not recorded
  std::string note;
};

/// With cfg, a comment line records n, N and N_ov shared by all rows.
void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, const ExperimentConfig* cfg = nullptr);

/// One realization pair per requested index: independent training and
/// evaluation records at the given power.
std::vector<Realization> make_realizations(const ExperimentConfig& cfg, double power_dbm, std::size_t power_index);

/// Runs every receiver of the grid at every power. Rows are averaged over
/// cfg.realizations.
std::vector<ResultRow> run_simulate(const ExperimentConfig& cfg);

struct RhoSweepRow {
  int num_steps = 0;
  int num_subbands = 1;
  double power_dbm = 0.0;
  RhoSweepResult result;
};
std::vector<RhoSweepRow> run_sweep_rho(const ExperimentConfig& cfg);
void write_rho_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<RhoSweepRow>& rows);

/// For every receiver and N_st: SNR at the optimal launch power (rho
/// optimized for CB-ESSFM), one row per configuration.
std::vector<ResultRow> run_snr_vs_complexity(const ExperimentConfig& cfg);

/// Optimizes one coefficient set on a training record at the sweep power.
OptimizationResult run_optimize_coeffs(const ExperimentConfig& cfg, int num_steps, int num_subbands, double rho);

}  // namespace cbdbp
