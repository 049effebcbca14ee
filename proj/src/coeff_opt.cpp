#include "cbdbp/coeff_opt.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cbdbp/errors.hpp"

namespace cbdbp {

void TrainingSet::validate() const {
  rx.validate();
  if (tx.x.size() != tx.y.size()) throw std::invalid_argument("training set: symbol polarizations differ in length");
  if (tx.size() == 0) throw std::invalid_argument("training set: no symbols");
  const double n_sym = static_cast<double>(rx.size()) * tx.symbol_rate / rx.sample_rate;
  if (std::abs(n_sym - static_cast<double>(tx.size())) > 1e-6)
    throw std::invalid_argument("training set: record length does not match the symbol count");
  if (2 * edge_trim_symbols >= tx.size()) throw std::invalid_argument("training set: edge trim removes every symbol");
}

void OptimizerSettings::validate() const {
  if (max_iterations < 0) throw std::invalid_argument("optimizer: max_iterations must be >= 0");
  if (!(relative_tolerance > 0.0)) throw std::invalid_argument("optimizer: relative_tolerance must be > 0");
  if (!(initial_step > 0.0)) throw std::invalid_argument("optimizer: initial_step must be > 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw std::invalid_argument("optimizer: holdout_fraction must lie in [0, 1)");
  if (holdout_block_symbols < 1) throw std::invalid_argument("optimizer: holdout_block_symbols must be >= 1");
  if (!(ridge >= 0.0)) throw std::invalid_argument("optimizer: ridge must be >= 0");
}

namespace {

Complex fitted_gain(const SymbolFrame& y, const SymbolFrame& x, std::span<const std::size_t> sel) {
  Complex num{};
  double den = 0.0;
  auto add = [&](std::size_t k) {
    num += std::conj(y.x[k]) * x.x[k] + std::conj(y.y[k]) * x.y[k];
    den += std::norm(y.x[k]) + std::norm(y.y[k]);
  };
  if (sel.empty())
    for (std::size_t k = 0; k < y.size(); ++k) add(k);
  else
    for (auto k : sel) add(k);
  return den > 0.0 ? num / den : Complex{};
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

Split split_symbols(std::size_t nsym, const OptimizerSettings& s) {
  const std::size_t b = s.holdout_block_symbols;
  const std::size_t nblocks = (nsym + b - 1) / b;
  std::vector<std::size_t> order(nblocks);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(s.rng_seed);
  std::shuffle(order.begin(), order.end(), gen);
  const auto n_hold = static_cast<std::size_t>(std::llround(s.holdout_fraction * static_cast<double>(nblocks)));
  std::vector<char> is_hold(nblocks, 0);
  for (std::size_t i = 0; i < n_hold && i + 1 < nblocks; ++i) is_hold[order[i]] = 1;
  Split out;
  for (std::size_t k = 0; k < nsym; ++k) (is_hold[k / b] ? out.holdout : out.train).push_back(k);
  return out;
}

class Problem {
 public:
  Problem(const TrainingSet& data, const DbpConfig& cfg)
      : data_(data), cfg_(cfg), engine_(cfg, data.rx.size(), data.rx.sample_rate) {}

  SymbolFrame sample(const DualPolWaveform& w) const {
    return matched_filter_and_sample(w, data_.tx.symbol_rate, data_.rolloff, data_.rrc_span_symbols);
  }

  void set(const RVec& params) {
    cfg_.coefficients.set_parameters(params);
    engine_ = CbEssfmEngine(cfg_, data_.rx.size(), data_.rx.sample_rate);
  }

  SymbolFrame output(CascadeTrace* trace = nullptr) const { return sample(engine_.process_block(data_.rx, trace)); }

  SymbolFrame tangent(const CascadeTrace& trace, std::size_t p) const {
    return sample(engine_.tangent(trace, cfg_.coefficients.parameter(p)));
  }

  const NlprCoefficients& coefficients() const { return cfg_.coefficients; }

 private:
  const TrainingSet& data_;
  DbpConfig cfg_;
  CbEssfmEngine engine_;
};

void check_finite(double j, const char* what) {
  if (!std::isfinite(j)) throw NumericalError(std::string("optimizer: non-finite objective ") + what);
}

}  // namespace

double training_objective(const SymbolFrame& y, const SymbolFrame& x, std::span<const std::size_t> selected) {
  if (y.size() != x.size()) throw std::invalid_argument("objective: frame lengths differ");
  const Complex g = fitted_gain(y, x, selected);
  double acc = 0.0;
  auto add = [&](std::size_t k) { acc += std::norm(g * y.x[k] - x.x[k]) + std::norm(g * y.y[k] - x.y[k]); };
  std::size_t count = 0;
  if (selected.empty()) {
    for (std::size_t k = 0; k < y.size(); ++k) add(k);
    count = y.size();
  } else {
    for (auto k : selected) add(k);
    count = selected.size();
  }
  if (count == 0) throw std::invalid_argument("objective: no symbols selected");
  return acc / static_cast<double>(2 * count);
}

OptimizationResult optimize_coefficients(const TrainingSet& train, const DbpConfig& cfg, const OptimizerSettings& settings) {
  train.validate();
  settings.validate();
  const auto& shape = cfg.coefficients;
  DbpConfig work = cfg;
  work.coefficients = NlprCoefficients(shape.num_subbands(), shape.intra_half_width(), shape.inter_half_width());
  if (work.coefficients.num_subbands() != cfg.num_subbands) throw std::invalid_argument("optimizer: coefficient band count mismatch");

  const Split split = split_symbols(train.tx.size(), settings);
  const auto& sel = split.train;
  const std::size_t n_params = work.coefficients.parameter_count();
  Problem problem(train, work);
  RVec params(n_params, 0.0);

  OptimizationResult result;
  auto& rep = result.report;
  CascadeTrace trace;
  SymbolFrame y = problem.output(&trace);
  double j_cur = training_objective(y, train.tx, sel);
  check_finite(j_cur, "at the initial point");
  rep.objective_trace.push_back(j_cur);
  if (!split.holdout.empty()) rep.holdout_objective_initial = training_objective(y, train.tx, split.holdout);

  const std::size_t rows = 2 * sel.size();
  for (int it = 0; it < settings.max_iterations; ++it) {
    const Complex g = fitted_gain(y, train.tx, sel);
    // Residual and Jacobian over the training symbols; the last two columns
    // perturb the real and imaginary parts of the gain.
    Eigen::VectorXcd r(rows);
    Eigen::MatrixXcd jac(rows, n_params + 2);
    for (std::size_t i = 0; i < sel.size(); ++i) {
      const auto k = sel[i];
      r(2 * i) = g * y.x[k] - train.tx.x[k];
      r(2 * i + 1) = g * y.y[k] - train.tx.y[k];
      jac(2 * i, n_params) = y.x[k];
      jac(2 * i + 1, n_params) = y.y[k];
      jac(2 * i, n_params + 1) = Complex(0.0, 1.0) * y.x[k];
      jac(2 * i + 1, n_params + 1) = Complex(0.0, 1.0) * y.y[k];
    }
    for (std::size_t p = 0; p < n_params; ++p) {
      const SymbolFrame t = problem.tangent(trace, p);
      for (std::size_t i = 0; i < sel.size(); ++i) {
        jac(2 * i, static_cast<Eigen::Index>(p)) = g * t.x[sel[i]];
        jac(2 * i + 1, static_cast<Eigen::Index>(p)) = g * t.y[sel[i]];
      }
    }
    Eigen::MatrixXd normal = (jac.adjoint() * jac).real();
    const Eigen::VectorXd rhs = -(jac.adjoint() * r).real();
    const double mean_diag = normal.diagonal().mean();
    if (!(mean_diag > 0.0) || !std::isfinite(mean_diag)) throw NumericalError("optimizer: degenerate normal equations");
    double ridge = settings.ridge * mean_diag;
    Eigen::VectorXd delta;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd a = normal;
      a.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        delta = ldlt.solve(rhs);
        if (delta.allFinite()) break;
      }
      if (attempt >= 8) throw NumericalError("optimizer: normal equations stay singular after increasing the ridge");
      ridge = ridge > 0.0 ? ridge * 10.0 : 1e-12 * mean_diag;
      rep.warnings.push_back("rank-deficient normal equations; ridge increased to " + std::to_string(ridge / mean_diag) +
                             " x mean diagonal");
    }

    // Backtracking on the true objective (gain refitted at every trial).
    double step = settings.initial_step;
    bool accepted = false;
    RVec trial(n_params);
    double j_new = j_cur;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      for (std::size_t p = 0; p < n_params; ++p) trial[p] = params[p] + step * delta(static_cast<Eigen::Index>(p));
      problem.set(trial);
      const SymbolFrame y_trial = problem.output();
      j_new = training_objective(y_trial, train.tx, sel);
      if (std::isfinite(j_new) && j_new < j_cur) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      problem.set(params);
      rep.converged = true;
      break;
    }
    params = trial;
    y = problem.output(&trace);
    const double improvement = (j_cur - j_new) / j_cur;
    j_cur = j_new;
    rep.objective_trace.push_back(j_cur);
    rep.iterations = it + 1;
    if (improvement < settings.relative_tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (!split.holdout.empty()) {
    rep.holdout_objective = training_objective(y, train.tx, split.holdout);
    check_finite(rep.holdout_objective, "on the holdout symbols");
  } else {
    rep.holdout_objective = rep.holdout_objective_initial = std::numeric_limits<double>::quiet_NaN();
  }
  result.coefficients = problem.coefficients();
  return result;
}

SnrReport evaluate_snr(const TrainingSet& eval, const DbpConfig& cfg) {
  eval.validate();
  DualPolWaveform out;
  if (eval.rx.size() > cfg.blocking.block_length) {
    out = cb_essfm(eval.rx, cfg);
  } else {
    const CbEssfmEngine engine(cfg, eval.rx.size(), eval.rx.sample_rate);
    out = engine.process_block(eval.rx);
  }
  const SymbolFrame y = matched_filter_and_sample(out, eval.tx.symbol_rate, eval.rolloff, eval.rrc_span_symbols);
  const SnrReport r = snr_estimate(y, eval.tx, eval.edge_trim_symbols);
  if (!std::isfinite(r.snr_db) && !r.infinite) throw NumericalError("evaluate_snr: non-finite SNR");
  return r;
}

RhoSweepResult sweep_splitting_ratio(std::span<const double> grid, const DbpConfig& base, std::span<const Realization> data,
                                     const OptimizerSettings& settings, double refine_step, int refine_points) {
  if (grid.empty()) throw std::invalid_argument("sweep_splitting_ratio: empty grid");
  if (data.empty()) throw std::invalid_argument("sweep_splitting_ratio: no realizations");
  for (double rho : grid)
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("sweep_splitting_ratio: rho outside [0, 1]");

  RhoSweepResult result;
  auto evaluate = [&](double rho) {
    RhoPoint pt;
    pt.rho = rho;
    DbpConfig cfg = base;
    cfg.splitting_ratio = rho;
    double acc = 0.0;
    for (const auto& d : data) {
      cfg.coefficients = optimize_coefficients(d.train, cfg, settings).coefficients;
      const double snr = evaluate_snr(d.eval, cfg).snr_db;
      pt.snr_db_per_realization.push_back(snr);
      acc += snr;
    }
    pt.snr_db = acc / static_cast<double>(data.size());
    result.points.push_back(pt);
  };
  auto has = [&](double rho) {
    return std::any_of(result.points.begin(), result.points.end(), [&](const RhoPoint& p) { return std::abs(p.rho - rho) < 1e-9; });
  };
  auto best = [&] {
    return *std::max_element(result.points.begin(), result.points.end(),
                             [](const RhoPoint& a, const RhoPoint& b) { return a.snr_db < b.snr_db; });
  };

  for (double rho : grid)
    if (!has(rho)) evaluate(rho);
  if (refine_step > 0.0) {
    const double centre = best().rho;
    for (int k = 1; k <= refine_points; ++k) {
      for (double rho : {centre - k * refine_step, centre + k * refine_step}) {
        rho = std::round(rho * 1e9) / 1e9;
        if (rho >= 0.0 && rho <= 1.0 && !has(rho)) evaluate(rho);
      }
    }
  }
  std::sort(result.points.begin(), result.points.end(), [](const RhoPoint& a, const RhoPoint& b) { return a.rho < b.rho; });
  const RhoPoint b = best();
  result.best_rho = b.rho;
  result.best_snr_db = b.snr_db;
  return result;
}

PowerSweepResult sweep_launch_power(std::span<const double> power_grid_dbm, const std::function<double(double)>& snr_at,
                                    bool parabolic_refinement) {
  if (power_grid_dbm.size() < 3) throw std::invalid_argument("sweep_launch_power: need at least three powers");
  if (!std::is_sorted(power_grid_dbm.begin(), power_grid_dbm.end()) ||
      std::adjacent_find(power_grid_dbm.begin(), power_grid_dbm.end()) != power_grid_dbm.end())
    throw std::invalid_argument("sweep_launch_power: power grid must be strictly increasing");
  PowerSweepResult r;
  r.power_dbm.assign(power_grid_dbm.begin(), power_grid_dbm.end());
  for (double p : r.power_dbm) {
    const double s = snr_at(p);
    if (!std::isfinite(s)) throw NumericalError("sweep_launch_power: non-finite SNR");
    r.snr_db.push_back(s);
  }
  const auto i = static_cast<std::size_t>(std::max_element(r.snr_db.begin(), r.snr_db.end()) - r.snr_db.begin());
  r.best_power_dbm = r.power_dbm[i];
  r.best_snr_db = r.snr_db[i];
  r.at_edge = i == 0 || i + 1 == r.snr_db.size();
  if (parabolic_refinement && !r.at_edge) {
    const double x0 = r.power_dbm[i - 1], x1 = r.power_dbm[i], x2 = r.power_dbm[i + 1];
    const double y0 = r.snr_db[i - 1], y1 = r.snr_db[i], y2 = r.snr_db[i + 1];
    // Newton form of the interpolating parabola.
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    if (a < 0.0) {
      const double b = d01 - a * (x0 + x1);
      const double xv = -b / (2.0 * a);
      r.best_power_dbm = xv;
      r.best_snr_db = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
    }
  }
  return r;
}

}  // namespace cbdbp
