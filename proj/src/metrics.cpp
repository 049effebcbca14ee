#include "cbdbp/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbdbp {
namespace {

void check_frames(const SymbolFrame& rx, const SymbolFrame& tx) {
  if (rx.x.size() != rx.y.size() || tx.x.size() != tx.y.size()) throw std::invalid_argument("metrics: polarization lengths differ");
  if (rx.size() != tx.size()) throw std::invalid_argument("metrics: rx and tx lengths differ");
}

Complex correlation(const CVec& rx, const CVec& tx, std::size_t begin, std::size_t end) {
  Complex acc{};
  for (std::size_t k = begin; k < end; ++k) acc += rx[k] * std::conj(tx[k]);
  return acc;
}

double energy(const CVec& v, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t k = begin; k < end; ++k) acc += std::norm(v[k]);
  return acc;
}

}  // namespace

double to_db(double ratio) { return 10.0 * std::log10(ratio); }

PhaseRemoval mean_phase_removal(const SymbolFrame& rx, const SymbolFrame& tx, bool per_polarization) {
  check_frames(rx, tx);
  PhaseRemoval out;
  out.frame = rx;
  const std::size_t n = rx.size();
  const Complex cx = correlation(rx.x, tx.x, 0, n);
  const Complex cy = correlation(rx.y, tx.y, 0, n);
  Complex gx = cx + cy, gy = cx + cy;
  if (per_polarization) {
    gx = cx;
    gy = cy;
  }
  if (gx == Complex{} || gy == Complex{}) {
    out.degenerate = true;
    return out;
  }
  out.phase_x = std::arg(gx);
  out.phase_y = std::arg(gy);
  const Complex rx_rot = std::polar(1.0, -out.phase_x);
  const Complex ry_rot = std::polar(1.0, -out.phase_y);
  for (auto& v : out.frame.x) v *= rx_rot;
  for (auto& v : out.frame.y) v *= ry_rot;
  return out;
}

SnrReport snr_estimate(const SymbolFrame& rx, const SymbolFrame& tx, std::size_t edge_trim, const SnrOptions& opt) {
  check_frames(rx, tx);
  if (2 * edge_trim >= rx.size()) throw std::invalid_argument("snr_estimate: no symbols left after edge trimming");
  const std::size_t b = edge_trim, e = rx.size() - edge_trim;

  const Complex cx = correlation(rx.x, tx.x, b, e), cy = correlation(rx.y, tx.y, b, e);
  const double tx_x = energy(tx.x, b, e), tx_y = energy(tx.y, b, e);
  if (tx_x + tx_y == 0.0) throw std::invalid_argument("snr_estimate: reference symbols carry no energy");
  Complex gx{1.0, 0.0}, gy{1.0, 0.0};
  if (opt.fit_gain) {
    if (opt.per_polarization) {
      if (tx_x == 0.0 || tx_y == 0.0) throw std::invalid_argument("snr_estimate: polarization without reference energy");
      gx = cx / tx_x;
      gy = cy / tx_y;
    } else {
      gx = gy = (cx + cy) / (tx_x + tx_y);
    }
    if (gx == Complex{} || gy == Complex{}) throw std::domain_error("snr_estimate: received symbols are uncorrelated with the reference");
  }

  // Error of rx/g against tx.
  double err_x = 0.0, err_y = 0.0;
  for (std::size_t k = b; k < e; ++k) {
    err_x += std::norm(rx.x[k] / gx - tx.x[k]);
    err_y += std::norm(rx.y[k] / gy - tx.y[k]);
  }
  SnrReport r;
  r.symbol_count = e - b;
  r.residual_phase = opt.fit_gain ? std::arg(gx) : 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  r.snr_x_db = err_x == 0.0 ? inf : to_db(tx_x / err_x);
  r.snr_y_db = err_y == 0.0 ? inf : to_db(tx_y / err_y);
  if (err_x + err_y == 0.0) {
    r.snr_db = inf;
    r.infinite = true;
  } else {
    r.snr_db = to_db((tx_x + tx_y) / (err_x + err_y));
  }
  return r;
}

double gain_vs_edc(double snr_dbp_db, double snr_edc_db) {
  if (!std::isfinite(snr_dbp_db) || !std::isfinite(snr_edc_db)) throw std::invalid_argument("gain_vs_edc: SNR values must be finite");
  return snr_dbp_db - snr_edc_db;
}

}  // namespace cbdbp
