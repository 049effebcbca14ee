#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cbdbp/complexity.hpp"
#include "cbdbp/errors.hpp"
#include "cbdbp/harness.hpp"

namespace {

using namespace cbdbp;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string preset_name = "desk";
  std::optional<int> realizations;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config applied on top of the preset")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Base RNG seed");
  cmd->add_option("--preset", c.preset_name, "Starting preset")->check(CLI::IsMember({"desk", "paper-full"}));
  cmd->add_option("--realizations", c.realizations, "Noise realizations averaged per row")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output file (default: config output_path, else stdout)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = preset(c.preset_name);
  if (!c.config_path.empty()) cfg = load_config(c.config_path, cfg);
  if (c.seed) cfg.rng_seed = *c.seed;
  if (c.realizations) cfg.realizations = *c.realizations;
  if (!c.out.empty()) cfg.output_path = c.out;
  cfg.validate();
  return cfg;
}

// Writes through `body` to the configured path or stdout. Buffering the
// whole document keeps a failed run from leaving a truncated file.
template <typename F>
void emit(const std::string& path, F&& body) {
  std::ostringstream buf;
  body(buf);
  if (path.empty()) {
    std::cout << buf.str();
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << buf.str();
}

bool any_failed(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows)
    if (!std::isfinite(r.snr_db)) return true;
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled-band ESSFM digital backpropagation experiments"};
  app.require_subcommand(1);

  Common common;
  auto* simulate = app.add_subcommand("simulate", "SNR of every receiver in the grid at every launch power");
  add_common(simulate, common);
  auto* sweep = app.add_subcommand("sweep-rho", "SNR versus splitting ratio for each (N_st, N_sb)");
  add_common(sweep, common);
  auto* svc = app.add_subcommand("snr-vs-complexity", "SNR at optimal power and rho versus RMs/2D");
  add_common(svc, common);

  auto* opt = app.add_subcommand("optimize-coeffs", "Train one NLPR coefficient set and write it to a file");
  add_common(opt, common);
  int opt_steps = 1, opt_bands = 1;
  double opt_rho = 0.5;
  opt->add_option("--num-steps", opt_steps, "N_st")->check(CLI::PositiveNumber);
  opt->add_option("--num-subbands", opt_bands, "N_sb")->check(CLI::PositiveNumber);
  opt->add_option("--rho", opt_rho, "Splitting ratio")->check(CLI::Range(0.0, 1.0));

  auto* cx = app.add_subcommand("complexity", "Real multiplications per 2D symbol");
  std::string cx_n = "9/8";
  std::vector<std::size_t> cx_block{16384};
  std::vector<std::size_t> cx_overlap{1792};
  std::vector<int> cx_steps{1, 3, 5, 15};
  std::vector<int> cx_bands{2};
  std::string cx_out;
  cx->add_option("--n", cx_n, "Oversampling factor as p/q");
  cx->add_option("--N", cx_block, "Block lengths")->delimiter(',');
  cx->add_option("--N-ov", cx_overlap, "Overlaps")->delimiter(',');
  cx->add_option("--N-st", cx_steps, "Step counts (0 = EDC)")->delimiter(',');
  cx->add_option("--N-sb", cx_bands, "Subband counts")->delimiter(',');
  cx->add_option("--out", cx_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (cx->parsed()) {
      const auto slash = cx_n.find('/');
      Rational n;
      try {
        n = slash == std::string::npos ? Rational(std::stoll(cx_n)) : Rational(std::stoll(cx_n.substr(0, slash)), std::stoll(cx_n.substr(slash + 1)));
      } catch (const std::logic_error&) {
        throw ConfigError("--n: malformed ratio " + cx_n);
      }
      emit(cx_out, [&](std::ostream& os) {
        std::ostringstream all;
        bool first = true;
        for (auto big_n : cx_block)
          for (auto ov : cx_overlap) {
            std::ostringstream part;
            try {
              write_complexity_csv(part, n, big_n, ov, cx_steps, cx_bands);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(e.what());
            }
            // Keep one schema line and header for the concatenated grid.
            std::string text = part.str();
            if (!first) text = text.substr(text.find('\n', text.find('\n') + 1) + 1);
            all << text;
            first = false;
          }
        os << all.str();
      });
      return exit_ok;
    }

    const ExperimentConfig cfg = resolve(common);
    if (simulate->parsed()) {
      const auto rows = run_simulate(cfg);
      emit(cfg.output_path, [&](std::ostream& os) { write_results_csv(os, rows, &cfg); });
      return any_failed(rows) ? exit_numerical : exit_ok;
    }
    if (sweep->parsed()) {
      const auto rows = run_sweep_rho(cfg);
      emit(cfg.output_path, [&](std::ostream& os) { write_rho_csv(os, cfg, rows); });
      return exit_ok;
    }
    if (svc->parsed()) {
      const auto rows = run_snr_vs_complexity(cfg);
      emit(cfg.output_path, [&](std::ostream& os) { write_results_csv(os, rows, &cfg); });
      return any_failed(rows) ? exit_numerical : exit_ok;
    }
    if (opt->parsed()) {
      const auto result = run_optimize_coeffs(cfg, opt_steps, opt_bands, opt_rho);
      const auto d = make_dbp_config(cfg, opt_steps, opt_bands, opt_rho);
      CoefficientMetadata meta;
      meta.splitting_ratio = opt_rho;
      meta.num_steps = opt_steps;
      meta.step_length_km = d.step_length_km();
      emit(cfg.output_path, [&](std::ostream& os) { write_coefficients(os, result.coefficients, meta); });
      for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
      std::cerr << "iterations " << result.report.iterations << ", holdout objective " << result.report.holdout_objective_initial
                << " -> " << result.report.holdout_objective << '\n';
      return exit_ok;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_ok;
}
