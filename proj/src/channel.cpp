#include "cbdbp/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cbdbp {

void FiberParams::validate() const {
  if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("fiber: alpha_db_per_km must be >= 0");
  if (!(span_length_km > 0.0)) throw std::invalid_argument("fiber: span_length_km must be > 0");
  if (!(gamma_per_w_km >= 0.0)) throw std::invalid_argument("fiber: gamma_per_w_km must be >= 0");
  if (!(reference_wavelength_nm > 0.0)) throw std::invalid_argument("fiber: reference_wavelength_nm must be > 0");
}

double FiberParams::alpha_np_per_km() const { return alpha_db_per_km * std::numbers::ln10 / 10.0; }

double FiberParams::beta2_ps2_per_km() const { return beta2_from_D(dispersion_ps_per_nm_km, reference_wavelength_nm); }

double FiberParams::carrier_frequency_hz() const {
  return constants::speed_of_light / (reference_wavelength_nm * 1e-9);
}

void LinkConfig::validate() const {
  fiber.validate();
  if (num_spans < 0) throw std::invalid_argument("link: num_spans must be >= 0");
  if (steps_per_span < 1) throw std::invalid_argument("link: steps_per_span must be >= 1");
}

void WdmConfig::validate() const {
  if (num_channels < 1) throw std::invalid_argument("wdm: num_channels must be >= 1");
  if (!(symbol_rate_hz > 0.0)) throw std::invalid_argument("wdm: symbol_rate_hz must be > 0");
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("wdm: rolloff must lie in (0, 1]");
  if (channel_spacing_hz < (1.0 + rolloff) * symbol_rate_hz)
    throw std::invalid_argument("wdm: channel spacing smaller than the shaped channel bandwidth");
}

int WdmConfig::simulation_samples_per_symbol() const {
  const double needed = num_channels * channel_spacing_hz + 2.0 * symbol_rate_hz;
  int sps = 1;
  while (sps * symbol_rate_hz < needed) sps *= 2;
  return sps;
}

double WdmConfig::launch_power_w() const { return 1e-3 * std::pow(10.0, launch_power_dbm_per_channel / 10.0); }

double beta2_from_D(double dispersion_ps_per_nm_km, double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw std::invalid_argument("beta2_from_D: wavelength must be positive");
  const double lambda = wavelength_nm * 1e-9;
  const double d_si = dispersion_ps_per_nm_km * 1e-6;  // s/m^2
  const double beta2_si = -d_si * lambda * lambda / (2.0 * std::numbers::pi * constants::speed_of_light);  // s^2/m
  return beta2_si * 1e27;  // ps^2/km
}

RVec angular_frequency_grid(std::size_t n, double sample_rate) {
  RVec omega(n);
  const double df = 2.0 * std::numbers::pi * sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) omega[k] = df * static_cast<double>(centered_bin(k, n));
  return omega;
}

CVec gvd_response(std::span<const double> omega, double beta2_ps2_per_km, double length_km, int sign) {
  const double coeff = static_cast<double>(sign) * 0.5 * beta2_ps2_per_km * constants::ps2_to_s2 * length_km;
  CVec h(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) h[k] = std::polar(1.0, coeff * omega[k] * omega[k]);
  return h;
}

namespace {

void multiply_spectrum(CVec& v, const CVec& h) {
  fft_inplace(v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= h[k];
  ifft_inplace(v);
}

void scaled_response(CVec& h, double factor) {
  for (auto& v : h) v *= factor;
}

void manakov_rotation(DualPolWaveform& w, double coeff) {
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double p = std::norm(w.x[k]) + std::norm(w.y[k]);
    const Complex rot = std::polar(1.0, coeff * p);
    w.x[k] *= rot;
    w.y[k] *= rot;
  }
}

}  // namespace

DualPolWaveform apply_gvd(const DualPolWaveform& w, double beta2_ps2_per_km, double length_km, int sign) {
  DualPolWaveform out = w;
  if (length_km == 0.0 || beta2_ps2_per_km == 0.0) return out;
  const CVec h = gvd_response(angular_frequency_grid(w.size(), w.sample_rate), beta2_ps2_per_km, length_km, sign);
  multiply_spectrum(out.x, h);
  multiply_spectrum(out.y, h);
  return out;
}

double effective_length_km(double alpha_np_per_km, double dz_km) {
  if (alpha_np_per_km == 0.0) return dz_km;
  return -std::expm1(-alpha_np_per_km * dz_km) / alpha_np_per_km;
}

DualPolWaveform forward_span(const DualPolWaveform& w, const FiberParams& fiber, int steps) {
  if (steps < 1) throw std::invalid_argument("forward_span: steps must be >= 1");
  fiber.validate();
  const double dz = fiber.span_length_km / steps;
  const double alpha = fiber.alpha_np_per_km();
  const double beta2 = fiber.beta2_ps2_per_km();
  // Nonlinear phase uses the power at the step midpoint, rescaled so the
  // rotation integrates the decaying power over the whole step.
  const double nl_coeff = (8.0 / 9.0) * fiber.gamma_per_w_km * std::exp(alpha * dz / 2.0) * effective_length_km(alpha, dz);

  const RVec omega = angular_frequency_grid(w.size(), w.sample_rate);
  CVec half = gvd_response(omega, beta2, dz / 2.0, +1);
  scaled_response(half, std::exp(-alpha * dz / 4.0));
  CVec full = gvd_response(omega, beta2, dz, +1);
  scaled_response(full, std::exp(-alpha * dz / 2.0));

  DualPolWaveform u = w;
  const bool nonlinear = fiber.gamma_per_w_km != 0.0;
  multiply_spectrum(u.x, half);
  multiply_spectrum(u.y, half);
  for (int s = 0; s < steps; ++s) {
    if (nonlinear) manakov_rotation(u, nl_coeff);
    const CVec& h = (s + 1 == steps) ? half : full;
    multiply_spectrum(u.x, h);
    multiply_spectrum(u.y, h);
  }
  return u;
}

double ase_noise_variance(double gain_db, double noise_figure_db, double center_frequency_hz, double sample_rate) {
  const double gain = std::pow(10.0, gain_db / 10.0);
  const double n_sp = std::pow(10.0, noise_figure_db / 10.0) / 2.0;
  const double psd = (gain - 1.0) * constants::planck * center_frequency_hz * n_sp;  // W/Hz per polarization
  return psd * sample_rate;
}

DualPolWaveform edfa(const DualPolWaveform& w, double gain_db, double noise_figure_db, double center_frequency_hz,
                     Rng& rng, bool add_noise) {
  if (gain_db < 0.0) throw std::invalid_argument("edfa: gain must be >= 0 dB");
  const double amp = std::pow(10.0, gain_db / 20.0);
  DualPolWaveform out = w;
  for (auto& v : out.x) v *= amp;
  for (auto& v : out.y) v *= amp;
  if (!add_noise || gain_db == 0.0) return out;
  const double var = ase_noise_variance(gain_db, noise_figure_db, center_frequency_hz, w.sample_rate);
  for (auto& v : out.x) v += rng.complex_normal(var);
  for (auto& v : out.y) v += rng.complex_normal(var);
  return out;
}

DualPolWaveform wdm_mux(std::span<const DualPolWaveform> channels, double spacing_hz) {
  if (channels.empty()) throw std::invalid_argument("wdm_mux: no channels");
  const std::size_t n = channels.front().size();
  const double fs = channels.front().sample_rate;
  const double k_mid = (static_cast<double>(channels.size()) - 1.0) / 2.0;
  const double edge = (k_mid + 0.5) * spacing_hz;
  if (channels.size() > 1 && edge > fs / 2.0) throw std::invalid_argument("wdm_mux: WDM band exceeds the sample rate");

  DualPolWaveform out(n, fs);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    if (ch.size() != n || ch.sample_rate != fs) throw std::invalid_argument("wdm_mux: channels must share length and rate");
    const double offset = (static_cast<double>(c) - k_mid) * spacing_hz;
    // Offsets must sit on the DFT grid so the record stays periodic.
    const double bins = offset * static_cast<double>(n) / fs;
    if (std::abs(bins - std::round(bins)) > 1e-6) throw std::invalid_argument("wdm_mux: channel offset is not on the record's frequency grid");
    const auto ibins = static_cast<long long>(std::llround(bins));
    for (std::size_t k = 0; k < n; ++k) {
      const auto phase_index = static_cast<long long>((ibins * static_cast<long long>(k)) % static_cast<long long>(n));
      const Complex rot = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(phase_index) / static_cast<double>(n));
      out.x[k] += ch.x[k] * rot;
      out.y[k] += ch.y[k] * rot;
    }
  }
  return out;
}

DualPolWaveform wdm_demux_center(const DualPolWaveform& w, double spacing_hz) {
  DualPolWaveform out = w;
  const std::size_t n = w.size();
  const double df = w.sample_rate / static_cast<double>(n);
  const double limit = spacing_hz / 2.0;
  auto filter = [&](CVec& v) {
    fft_inplace(v);
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(static_cast<double>(centered_bin(k, n)) * df) >= limit) v[k] = 0.0;
    ifft_inplace(v);
  };
  filter(out.x);
  filter(out.y);
  return out;
}

DualPolWaveform run_link(const DualPolWaveform& tx, const LinkConfig& link, Rng& rng) {
  link.validate();
  DualPolWaveform u = tx;
  const double nu = link.fiber.carrier_frequency_hz();
  for (int s = 0; s < link.num_spans; ++s) {
    u = forward_span(u, link.fiber, link.steps_per_span);
    u = edfa(u, link.span_gain_db(), link.noise_figure_db, nu, rng, link.ase_noise);
  }
  return u;
}

std::size_t dispersion_memory_samples(double beta2_total_ps2, double bandwidth_hz, double sample_rate,
                                      std::size_t multiple) {
  const double samples =
      std::abs(beta2_total_ps2) * constants::ps2_to_s2 * 2.0 * std::numbers::pi * bandwidth_hz * sample_rate;
  auto n = static_cast<std::size_t>(std::ceil(samples - 1e-9));
  if (multiple > 1) n = (n + multiple - 1) / multiple * multiple;
  return n;
}

}  // namespace cbdbp
