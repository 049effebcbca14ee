#include "cbdbp/dbp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cbdbp {
namespace {

constexpr Complex kJ{0.0, 1.0};

// Contiguous partition of an n-bin spectrum into nsb bands of m bins.
struct BandLayout {
  std::size_t n;
  std::size_t m;
  int nsb;
  std::vector<std::vector<std::size_t>> global;  // [band][local storage index]

  BandLayout(std::size_t n_, int nsb_) : n(n_), m(0), nsb(nsb_) {
    if (nsb < 1 || n % static_cast<std::size_t>(nsb) != 0)
      throw std::invalid_argument("subbands: block length " + std::to_string(n) + " is not divisible by " + std::to_string(nsb));
    m = n / static_cast<std::size_t>(nsb);
    global.assign(static_cast<std::size_t>(nsb), std::vector<std::size_t>(m));
    for (int b = 0; b < nsb; ++b) {
      const long c = center(b);
      for (std::size_t t = 0; t < m; ++t) global[static_cast<std::size_t>(b)][t] = storage_bin(c + centered_bin(t, m), n);
    }
  }

  long center(int b) const {
    return -static_cast<long>(n / 2) + static_cast<long>(static_cast<std::size_t>(b) * m + m / 2);
  }

  double offset(int b, double sample_rate) const {
    return 2.0 * std::numbers::pi * sample_rate / static_cast<double>(n) * static_cast<double>(center(b));
  }

  CVec extract(std::span<const Complex> spec, int b) const {
    CVec out(m);
    const auto& idx = global[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < m; ++t) out[t] = spec[idx[t]];
    return out;
  }

  void place(std::span<Complex> spec, std::span<const Complex> chunk, int b) const {
    const auto& idx = global[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < m; ++t) spec[idx[t]] = chunk[t];
  }
};

void multiply(CVec& v, const CVec& h) {
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= h[k];
}

void scale(CVec& v, double s) {
  if (s == 1.0) return;
  for (auto& c : v) c *= s;
}

// rfft of the filter placed circularly on an m-point grid.
CVec filter_spectrum(std::span<const double> taps, std::size_t m) {
  const auto k = static_cast<long>(taps.size() / 2);
  if (taps.size() > m) throw std::invalid_argument("nlpr: filter longer than the subband block");
  RVec g(m, 0.0);
  for (long t = -k; t <= k; ++t) g[storage_bin(t, m)] += taps[static_cast<std::size_t>(t + k)];
  return rfft(g);
}

std::vector<RVec> filtered(const std::vector<RVec>& power, const std::vector<std::vector<CVec>>& spectra, std::size_t m) {
  const std::size_t nsb = power.size();
  std::vector<CVec> p_hat(nsb);
  for (std::size_t j = 0; j < nsb; ++j) p_hat[j] = rfft(power[j]);
  std::vector<RVec> theta(nsb);
  CVec acc(m / 2 + 1);
  for (std::size_t i = 0; i < nsb; ++i) {
    std::fill(acc.begin(), acc.end(), Complex{});
    for (std::size_t j = 0; j < nsb; ++j)
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += spectra[i][j][k] * p_hat[j][k];
    theta[i] = irfft(acc, m);
  }
  return theta;
}

std::vector<std::vector<CVec>> all_filter_spectra(const NlprCoefficients& c, std::size_t m) {
  const auto nsb = static_cast<std::size_t>(c.num_subbands());
  std::vector<std::vector<CVec>> out(nsb, std::vector<CVec>(nsb));
  for (std::size_t i = 0; i < nsb; ++i)
    for (std::size_t j = 0; j < nsb; ++j) out[i][j] = filter_spectrum(c.filter(static_cast<int>(i), static_cast<int>(j)), m);
  return out;
}

void rotate(CVec& v, const CVec& rot) {
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= rot[k];
}

}  // namespace

void DbpConfig::validate(double sample_rate, std::size_t record_length) const {
  if (num_steps < 1) throw std::invalid_argument("dbp: num_steps must be >= 1");
  if (num_subbands < 1) throw std::invalid_argument("dbp: num_subbands must be >= 1");
  if (!(splitting_ratio >= 0.0 && splitting_ratio <= 1.0)) throw std::invalid_argument("dbp: splitting ratio must lie in [0, 1]");
  if (!(total_length_km >= 0.0)) throw std::invalid_argument("dbp: total length must be >= 0");
  blocking.validate();
  if (blocking.block_length % static_cast<std::size_t>(num_subbands) != 0)
    throw std::invalid_argument("dbp: block length not divisible by the number of subbands");
  if (coefficients.num_subbands() != num_subbands) throw std::invalid_argument("dbp: coefficient band count does not match num_subbands");
  coefficients.validate();
  const std::size_t m = blocking.block_length / static_cast<std::size_t>(num_subbands);
  const auto widest = static_cast<std::size_t>(2 * std::max(coefficients.intra_half_width(), coefficients.inter_half_width()) + 1);
  if (widest > m) throw std::invalid_argument("dbp: NLPR filters longer than a subband block");
  if (sample_rate > 0.0 && record_length > blocking.block_length) {
    const std::size_t memory = dispersion_memory_samples(beta2_ps2_per_km * total_length_km, sample_rate, sample_rate, 2);
    if (blocking.overlap < memory)
      throw std::invalid_argument("dbp: overlap " + std::to_string(blocking.overlap) + " is below the dispersion memory of " +
                                  std::to_string(memory) + " samples");
  }
}

std::size_t default_overlap(double beta2_total_ps2, double sample_rate, int num_subbands) {
  return dispersion_memory_samples(beta2_total_ps2, sample_rate, sample_rate, static_cast<std::size_t>(2 * num_subbands));
}

double SubbandSet::energy() const {
  double e = 0.0;
  for (std::size_t b = 0; b < x.size(); ++b) {
    for (const auto& v : x[b]) e += std::norm(v);
    for (const auto& v : y[b]) e += std::norm(v);
  }
  return e / subband_sample_rate;
}

DualPolWaveform edc(const DualPolWaveform& w, double beta2_total_ps2, const BlockingConfig& blocking) {
  if (w.size() > blocking.block_length) {
    const std::size_t memory = dispersion_memory_samples(beta2_total_ps2, w.sample_rate, w.sample_rate, 2);
    if (blocking.overlap < memory)
      throw std::invalid_argument("edc: overlap " + std::to_string(blocking.overlap) + " is below the dispersion memory of " +
                                  std::to_string(memory) + " samples");
  }
  const CVec h = gvd_response(angular_frequency_grid(blocking.block_length, w.sample_rate), beta2_total_ps2, 1.0, -1);
  return overlap_save_apply(w, blocking, [&](const DualPolWaveform& blk) {
    DualPolWaveform out = blk;
    for (CVec* v : {&out.x, &out.y}) {
      fft_inplace(*v);
      multiply(*v, h);
      ifft_inplace(*v);
    }
    return out;
  });
}

SubbandSet subband_demux(std::span<const Complex> spectrum_x, std::span<const Complex> spectrum_y, int num_subbands,
                         double sample_rate) {
  if (spectrum_x.size() != spectrum_y.size()) throw std::invalid_argument("subband_demux: polarization lengths differ");
  const BandLayout layout(spectrum_x.size(), num_subbands);
  SubbandSet out;
  out.subband_sample_rate = sample_rate / num_subbands;
  const double s = 1.0 / num_subbands;
  for (int b = 0; b < num_subbands; ++b) {
    CVec bx = layout.extract(spectrum_x, b);
    CVec by = layout.extract(spectrum_y, b);
    ifft_inplace(bx);
    ifft_inplace(by);
    scale(bx, s);
    scale(by, s);
    out.x.push_back(std::move(bx));
    out.y.push_back(std::move(by));
    out.center_offsets.push_back(layout.offset(b, sample_rate));
  }
  return out;
}

std::pair<CVec, CVec> subband_mux(const SubbandSet& bands) {
  if (bands.x.empty()) throw std::invalid_argument("subband_mux: no bands");
  const int nsb = bands.size();
  const std::size_t m = bands.x.front().size();
  const BandLayout layout(m * static_cast<std::size_t>(nsb), nsb);
  CVec sx(layout.n), sy(layout.n);
  for (int b = 0; b < nsb; ++b) {
    CVec bx = bands.x[static_cast<std::size_t>(b)];
    CVec by = bands.y[static_cast<std::size_t>(b)];
    if (bx.size() != m || by.size() != m) throw std::invalid_argument("subband_mux: band lengths differ");
    fft_inplace(bx);
    fft_inplace(by);
    scale(bx, nsb);
    scale(by, nsb);
    layout.place(sx, bx, b);
    layout.place(sy, by, b);
  }
  return {std::move(sx), std::move(sy)};
}

CVec subband_response(std::size_t band_length, double band_rate, double center_offset, double beta2_ps2_per_km,
                      double length_km, int sign) {
  const RVec omega = angular_frequency_grid(band_length, band_rate);
  const double coeff = static_cast<double>(sign) * 0.5 * beta2_ps2_per_km * constants::ps2_to_s2 * length_km;
  CVec h(band_length);
  for (std::size_t k = 0; k < band_length; ++k) {
    const double w = omega[k] + center_offset;
    h[k] = std::polar(1.0, coeff * w * w);
  }
  return h;
}

CVec subband_linear_step(std::span<const Complex> band, double band_rate, double center_offset,
                         double beta2_ps2_per_km, double length_km, int sign) {
  CVec out(band.begin(), band.end());
  if (length_km == 0.0) return out;
  fft_inplace(out);
  multiply(out, subband_response(out.size(), band_rate, center_offset, beta2_ps2_per_km, length_km, sign));
  ifft_inplace(out);
  return out;
}

std::vector<RVec> nlpr_phases(const SubbandSet& bands, const NlprCoefficients& c) {
  if (c.num_subbands() != bands.size()) throw std::invalid_argument("nlpr: coefficient band count does not match the subband set");
  c.validate();
  const std::size_t m = bands.x.front().size();
  std::vector<RVec> power(bands.x.size(), RVec(m));
  for (std::size_t j = 0; j < bands.x.size(); ++j)
    for (std::size_t k = 0; k < m; ++k) power[j][k] = std::norm(bands.x[j][k]) + std::norm(bands.y[j][k]);
  return filtered(power, all_filter_spectra(c, m), m);
}

SubbandSet nlpr_step(const SubbandSet& bands, const NlprCoefficients& c) {
  const auto theta = nlpr_phases(bands, c);
  SubbandSet out = bands;
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    for (std::size_t k = 0; k < theta[i].size(); ++k) {
      const Complex rot = std::polar(1.0, theta[i][k]);
      out.x[i][k] *= rot;
      out.y[i][k] *= rot;
    }
  }
  return out;
}

CbEssfmEngine::CbEssfmEngine(const DbpConfig& cfg, std::size_t block_length, double sample_rate)
    : cfg_(cfg), n_(block_length), m_(0), sample_rate_(sample_rate) {
  if (cfg.num_steps < 1) throw std::invalid_argument("cb_essfm: num_steps must be >= 1");
  if (!(cfg.splitting_ratio >= 0.0 && cfg.splitting_ratio <= 1.0)) throw std::invalid_argument("cb_essfm: splitting ratio must lie in [0, 1]");
  if (cfg.coefficients.num_subbands() != cfg.num_subbands) throw std::invalid_argument("cb_essfm: coefficient band count mismatch");
  cfg.coefficients.validate();
  const BandLayout layout(n_, cfg.num_subbands);
  m_ = layout.m;
  const double band_rate = sample_rate / cfg.num_subbands;
  const double step = cfg.step_length_km();
  const double rho = cfg.splitting_ratio;
  for (int b = 0; b < cfg.num_subbands; ++b) {
    const double omega_b = layout.offset(b, sample_rate);
    first_.push_back(subband_response(m_, band_rate, omega_b, cfg.beta2_ps2_per_km, (1.0 - rho) * step, -1));
    middle_.push_back(subband_response(m_, band_rate, omega_b, cfg.beta2_ps2_per_km, step, -1));
    last_.push_back(subband_response(m_, band_rate, omega_b, cfg.beta2_ps2_per_km, rho * step, -1));
  }
  filter_spectra_ = all_filter_spectra(cfg.coefficients, m_);
}

void CbEssfmEngine::to_time(CVec& band) const {
  ifft_inplace(band);
  scale(band, 1.0 / cfg_.num_subbands);
}

void CbEssfmEngine::to_freq(CVec& band) const {
  fft_inplace(band);
  scale(band, static_cast<double>(cfg_.num_subbands));
}

std::vector<RVec> CbEssfmEngine::filter_intensities(const std::vector<RVec>& power) const {
  return filtered(power, filter_spectra_, m_);
}

DualPolWaveform CbEssfmEngine::mux(std::vector<CVec>& bx, std::vector<CVec>& by) const {
  const BandLayout layout(n_, cfg_.num_subbands);
  DualPolWaveform out(n_, sample_rate_);
  for (int b = 0; b < cfg_.num_subbands; ++b) {
    layout.place(out.x, bx[static_cast<std::size_t>(b)], b);
    layout.place(out.y, by[static_cast<std::size_t>(b)], b);
  }
  ifft_inplace(out.x);
  ifft_inplace(out.y);
  return out;
}

DualPolWaveform CbEssfmEngine::process_block(const DualPolWaveform& block, CascadeTrace* trace) const {
  if (block.size() != n_) throw std::invalid_argument("cb_essfm: block length mismatch");
  const auto nsb = static_cast<std::size_t>(cfg_.num_subbands);
  const BandLayout layout(n_, cfg_.num_subbands);
  CVec sx = block.x, sy = block.y;
  fft_inplace(sx);
  fft_inplace(sy);
  std::vector<CVec> bx(nsb), by(nsb);
  for (std::size_t b = 0; b < nsb; ++b) {
    bx[b] = layout.extract(sx, static_cast<int>(b));
    by[b] = layout.extract(sy, static_cast<int>(b));
    multiply(bx[b], first_[b]);
    multiply(by[b], first_[b]);
  }
  if (trace) *trace = CascadeTrace{};

  std::vector<RVec> power(nsb, RVec(m_));
  for (int s = 0; s < cfg_.num_steps; ++s) {
    for (std::size_t b = 0; b < nsb; ++b) {
      to_time(bx[b]);
      to_time(by[b]);
      for (std::size_t k = 0; k < m_; ++k) power[b][k] = std::norm(bx[b][k]) + std::norm(by[b][k]);
    }
    const auto theta = filter_intensities(power);
    std::vector<CVec> rot(nsb, CVec(m_));
    for (std::size_t b = 0; b < nsb; ++b)
      for (std::size_t k = 0; k < m_; ++k) rot[b][k] = std::polar(1.0, theta[b][k]);
    if (trace) {
      trace->x.push_back(bx);
      trace->y.push_back(by);
      trace->power.push_back(power);
      trace->rotation.push_back(rot);
    }
    const auto& h = (s + 1 == cfg_.num_steps) ? last_ : middle_;
    for (std::size_t b = 0; b < nsb; ++b) {
      rotate(bx[b], rot[b]);
      rotate(by[b], rot[b]);
      to_freq(bx[b]);
      to_freq(by[b]);
      multiply(bx[b], h[b]);
      multiply(by[b], h[b]);
    }
  }
  return mux(bx, by);
}

DualPolWaveform CbEssfmEngine::tangent(const CascadeTrace& trace, const NlprCoefficients::Parameter& dir) const {
  const auto nsb = static_cast<std::size_t>(cfg_.num_subbands);
  if (trace.x.size() != static_cast<std::size_t>(cfg_.num_steps)) throw std::invalid_argument("cb_essfm: trace does not match the configuration");
  const auto target = static_cast<std::size_t>(dir.target);
  const auto source = static_cast<std::size_t>(dir.source);
  const auto mlen = static_cast<long>(m_);

  std::vector<CVec> dx(nsb, CVec(m_)), dy(nsb, CVec(m_));
  std::vector<RVec> dpower(nsb, RVec(m_));
  bool started = false;
  for (int s = 0; s < cfg_.num_steps; ++s) {
    const auto& bx = trace.x[static_cast<std::size_t>(s)];
    const auto& by = trace.y[static_cast<std::size_t>(s)];
    const auto& rot = trace.rotation[static_cast<std::size_t>(s)];
    const auto& p = trace.power[static_cast<std::size_t>(s)][source];

    std::vector<RVec> dtheta;
    if (started) {
      for (std::size_t b = 0; b < nsb; ++b)
        for (std::size_t k = 0; k < m_; ++k)
          dpower[b][k] = 2.0 * (std::real(std::conj(bx[b][k]) * dx[b][k]) + std::real(std::conj(by[b][k]) * dy[b][k]));
      dtheta = filter_intensities(dpower);
    } else {
      dtheta.assign(nsb, RVec(m_, 0.0));
    }
    // Direct term: theta_target[k] gains P_source[k - m] (and P_source[k + m]).
    for (long k = 0; k < mlen; ++k) {
      double v = p[static_cast<std::size_t>(((k - dir.offset) % mlen + mlen) % mlen)];
      if (dir.mirrored) v += p[static_cast<std::size_t>(((k + dir.offset) % mlen + mlen) % mlen)];
      dtheta[target][static_cast<std::size_t>(k)] += v;
    }
    const auto& h = (s + 1 == cfg_.num_steps) ? last_ : middle_;
    for (std::size_t b = 0; b < nsb; ++b) {
      if (!started && b != target) continue;
      for (std::size_t k = 0; k < m_; ++k) {
        const Complex jt = kJ * dtheta[b][k];
        dx[b][k] = (dx[b][k] + jt * bx[b][k]) * rot[b][k];
        dy[b][k] = (dy[b][k] + jt * by[b][k]) * rot[b][k];
      }
      to_freq(dx[b]);
      to_freq(dy[b]);
      multiply(dx[b], h[b]);
      multiply(dy[b], h[b]);
      if (s + 1 < cfg_.num_steps) {
        to_time(dx[b]);
        to_time(dy[b]);
      }
    }
    started = true;
  }
  return mux(dx, dy);
}

DualPolWaveform cb_essfm(const DualPolWaveform& w, const DbpConfig& cfg) {
  cfg.validate(w.sample_rate, w.size());
  const CbEssfmEngine engine(cfg, cfg.blocking.block_length, w.sample_rate);
  return overlap_save_apply(w, cfg.blocking, [&](const DualPolWaveform& blk) { return engine.process_block(blk); });
}

DualPolWaveform essfm(const DualPolWaveform& w, const DbpConfig& cfg) {
  if (cfg.num_subbands != 1) throw std::invalid_argument("essfm: requires a single band");
  DbpConfig sym = cfg;
  sym.splitting_ratio = 0.5;
  sym.validate(w.sample_rate, w.size());
  const std::size_t n = cfg.blocking.block_length;
  const RVec omega = angular_frequency_grid(n, w.sample_rate);
  const double step = cfg.step_length_km();
  const CVec half = gvd_response(omega, cfg.beta2_ps2_per_km, step / 2.0, -1);
  const CVec full = gvd_response(omega, cfg.beta2_ps2_per_km, step, -1);
  const auto taps = cfg.coefficients.filter(0, 0);
  const auto k_half = static_cast<long>(taps.size() / 2);
  const auto len = static_cast<long>(n);

  return overlap_save_apply(w, cfg.blocking, [&](const DualPolWaveform& blk) {
    DualPolWaveform u = blk;
    fft_inplace(u.x);
    fft_inplace(u.y);
    multiply(u.x, half);
    multiply(u.y, half);
    RVec power(n);
    for (int s = 0; s < cfg.num_steps; ++s) {
      ifft_inplace(u.x);
      ifft_inplace(u.y);
      for (std::size_t k = 0; k < n; ++k) power[k] = std::norm(u.x[k]) + std::norm(u.y[k]);
      for (long k = 0; k < len; ++k) {
        double theta = 0.0;
        for (long m = -k_half; m <= k_half; ++m)
          theta += taps[static_cast<std::size_t>(m + k_half)] * power[static_cast<std::size_t>(((k - m) % len + len) % len)];
        const Complex rot = std::polar(1.0, theta);
        u.x[static_cast<std::size_t>(k)] *= rot;
        u.y[static_cast<std::size_t>(k)] *= rot;
      }
      fft_inplace(u.x);
      fft_inplace(u.y);
      const CVec& h = (s + 1 == cfg.num_steps) ? half : full;
      multiply(u.x, h);
      multiply(u.y, h);
    }
    ifft_inplace(u.x);
    ifft_inplace(u.y);
    return u;
  });
}

namespace {

void check_dbp_steps(const LinkConfig& link, int steps_total) {
  link.validate();
  if (steps_total < 1 || link.num_spans < 1 || steps_total % link.num_spans != 0)
    throw std::invalid_argument("ssfm_dbp: steps_total must be a positive multiple of the span count");
}

// Backward SSFM of one band over every span. `half`/`full` already include
// the field gain that replaces the span loss.
void backpropagate_band(CVec& sx, CVec& sy, const LinkConfig& link, int steps_per_span, const CVec& half,
                        const CVec& full, double nl_coeff, double amp_undo, double to_time_scale) {
  const bool nonlinear = nl_coeff != 0.0;
  const std::size_t m = sx.size();
  for (int span = 0; span < link.num_spans; ++span) {
    scale(sx, amp_undo);
    scale(sy, amp_undo);
    multiply(sx, half);
    multiply(sy, half);
    for (int s = 0; s < steps_per_span; ++s) {
      if (nonlinear) {
        ifft_inplace(sx);
        ifft_inplace(sy);
        scale(sx, to_time_scale);
        scale(sy, to_time_scale);
        for (std::size_t k = 0; k < m; ++k) {
          const Complex rot = std::polar(1.0, nl_coeff * (std::norm(sx[k]) + std::norm(sy[k])));
          sx[k] *= rot;
          sy[k] *= rot;
        }
        fft_inplace(sx);
        fft_inplace(sy);
        scale(sx, 1.0 / to_time_scale);
        scale(sy, 1.0 / to_time_scale);
      }
      const CVec& h = (s + 1 == steps_per_span) ? half : full;
      multiply(sx, h);
      multiply(sy, h);
    }
  }
}

}  // namespace

DualPolWaveform ssfm_dbp(const DualPolWaveform& w, const LinkConfig& link, int steps_total, const BlockingConfig& blocking) {
  return subband_ssfm_dbp(w, link, steps_total, 1, blocking);
}

DualPolWaveform subband_ssfm_dbp(const DualPolWaveform& w, const LinkConfig& link, int steps_total, int num_subbands,
                                 const BlockingConfig& blocking) {
  check_dbp_steps(link, steps_total);
  if (w.size() > blocking.block_length) {
    const std::size_t memory = dispersion_memory_samples(link.total_beta2_ps2(), w.sample_rate, w.sample_rate, 2);
    if (blocking.overlap < memory) throw std::invalid_argument("ssfm_dbp: overlap is below the dispersion memory");
  }
  const int steps_per_span = steps_total / link.num_spans;
  const double dz = link.fiber.span_length_km / steps_per_span;
  const double alpha = link.fiber.alpha_np_per_km();
  const double beta2 = link.fiber.beta2_ps2_per_km();
  const double nl_coeff =
      -(8.0 / 9.0) * link.fiber.gamma_per_w_km * std::exp(alpha * dz / 2.0) * effective_length_km(alpha, dz);
  const double amp_undo = std::pow(10.0, -link.span_gain_db() / 20.0);

  const BandLayout layout(blocking.block_length, num_subbands);
  const double band_rate = w.sample_rate / num_subbands;
  std::vector<CVec> half, full;
  for (int b = 0; b < num_subbands; ++b) {
    const double omega_b = layout.offset(b, w.sample_rate);
    half.push_back(subband_response(layout.m, band_rate, omega_b, beta2, dz / 2.0, -1));
    scale(half.back(), std::exp(alpha * dz / 4.0));
    full.push_back(subband_response(layout.m, band_rate, omega_b, beta2, dz, -1));
    scale(full.back(), std::exp(alpha * dz / 2.0));
  }

  return overlap_save_apply(w, blocking, [&](const DualPolWaveform& blk) {
    CVec sx = blk.x, sy = blk.y;
    fft_inplace(sx);
    fft_inplace(sy);
    DualPolWaveform out(blk.size(), blk.sample_rate);
    for (int b = 0; b < num_subbands; ++b) {
      CVec bx = layout.extract(sx, b);
      CVec by = layout.extract(sy, b);
      backpropagate_band(bx, by, link, steps_per_span, half[static_cast<std::size_t>(b)], full[static_cast<std::size_t>(b)],
                         nl_coeff, amp_undo, 1.0 / num_subbands);
      layout.place(out.x, bx, b);
      layout.place(out.y, by, b);
    }
    ifft_inplace(out.x);
    ifft_inplace(out.y);
    return out;
  });
}

}  // namespace cbdbp
