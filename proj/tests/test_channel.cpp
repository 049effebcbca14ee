#include <cmath>
#include <numbers>

#include "cbdbp/channel.hpp"
#include "cbdbp/fft.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cbdbp;
using testutil::rel_diff;
using namespace cbdbp::constants;

namespace {

FiberParams linear_fiber() {
  FiberParams f;
  f.gamma_per_w_km = 0.0;
  return f;
}

// Random waveform whose spectrum is confined to |f| < half_width_hz.
DualPolWaveform band_limited(std::size_t n, double rate, double half_width_hz, std::uint64_t seed) {
  auto w = testutil::random_waveform(n, rate, seed);
  const double df = rate / static_cast<double>(n);
  for (CVec* v : {&w.x, &w.y}) {
    fft_inplace(*v);
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(static_cast<double>(centered_bin(k, n)) * df) >= half_width_hz) (*v)[k] = 0.0;
    ifft_inplace(*v);
  }
  return w;
}

DualPolWaveform shift(const DualPolWaveform& w, double offset_hz) {
  DualPolWaveform out = w;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const Complex r = std::polar(1.0, 2.0 * std::numbers::pi * offset_hz * static_cast<double>(k) / w.sample_rate);
    out.x[k] *= r;
    out.y[k] *= r;
  }
  return out;
}

}  // namespace

TEST_CASE("beta2 from dispersion") {
  CHECK(beta2_from_D(0.0, 1550.0) == 0.0);
  // -D lambda^2 / (2 pi c) evaluated by hand in ps^2/km.
  const double expected = -17.0 * 1550.0 * 1550.0 / (2.0 * std::numbers::pi * 299792458.0) * 1e3;
  CHECK(beta2_from_D(17.0, 1550.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(beta2_from_D(17.0, 1550.0) == doctest::Approx(-21.682619391414892).epsilon(1e-14));
  CHECK(beta2_from_D(17.0, 1310.0) / beta2_from_D(17.0, 1550.0) ==
        doctest::Approx((1310.0 / 1550.0) * (1310.0 / 1550.0)).epsilon(1e-14));
  CHECK_THROWS_AS(beta2_from_D(17.0, 0.0), std::invalid_argument);
}

TEST_CASE("gvd response: unit modulus, zero length, inversion") {
  const auto omega = angular_frequency_grid(1024, 64e9);
  for (const auto& h : gvd_response(omega, -21.7, 0.0, +1)) CHECK(h == Complex(1.0, 0.0));
  for (const auto& h : gvd_response(omega, -21.7, 800.0, +1)) CHECK(std::abs(std::abs(h) - 1.0) < 1e-15);

  const auto w = testutil::random_waveform(1024, 64e9, 3);
  const auto back = apply_gvd(apply_gvd(w, -21.7, 800.0, +1), -21.7, 800.0, -1);
  CHECK(rel_diff(back, w) < 1e-12);
  const auto d = apply_gvd(w, -21.7, 800.0, +1);
  CHECK(std::abs(d.sample_energy() - w.sample_energy()) / w.sample_energy() < 1e-12);
}

TEST_CASE("gvd on a Gaussian pulse matches the closed form") {
  // u(t) = T0 / sqrt(a) exp(-t^2 / (2a)), a = T0^2 - j beta2 L.
  const std::size_t n = 4096;
  const double fs = 100e9;
  const double t0 = 20e-12;
  const double beta2 = -21.682619391414892;
  const double length = 100.0;
  CVec x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) - n / 2.0) / fs;
    x[k] = std::exp(-t * t / (2.0 * t0 * t0));
  }
  const DualPolWaveform w(x, CVec(n), fs);
  const auto out = apply_gvd(w, beta2, length, +1);
  const Complex a(t0 * t0, -beta2 * length * 1e-24);
  double err = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) - n / 2.0) / fs;
    const Complex ref = t0 / std::sqrt(a) * std::exp(-t * t / (2.0 * a));
    err = std::max(err, std::abs(out.x[k] - ref));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("forward span linear limit is GVD times loss") {
  const auto fiber = linear_fiber();
  const auto w = testutil::random_waveform(2048, 128e9, 5);
  const auto out = forward_span(w, fiber, 1);
  auto ref = apply_gvd(w, fiber.beta2_ps2_per_km(), fiber.span_length_km, +1);
  const double loss = std::exp(-fiber.alpha_np_per_km() * fiber.span_length_km / 2.0);
  for (auto& v : ref.x) v *= loss;
  for (auto& v : ref.y) v *= loss;
  CHECK(rel_diff(out, ref) < 1e-12);
}

TEST_CASE("forward span without loss and dispersion is a pure phase rotation") {
  FiberParams f;
  f.alpha_db_per_km = 0.0;
  f.dispersion_ps_per_nm_km = 0.0;
  const auto w = testutil::random_waveform(4096, 64e9, 6, 0.1);
  const auto out = forward_span(w, f, 10);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double p_in = std::norm(w.x[k]) + std::norm(w.y[k]);
    const double p_out = std::norm(out.x[k]) + std::norm(out.y[k]);
    CHECK(std::abs(p_out - p_in) <= 1e-13 * p_in);
  }
  // The accumulated phase is (8/9) gamma P L on both polarizations.
  const double phase = std::arg(out.x[7] / w.x[7]);
  const double p7 = std::norm(w.x[7]) + std::norm(w.y[7]);
  const double expected = 8.0 / 9.0 * f.gamma_per_w_km * p7 * f.span_length_km;
  CHECK(std::abs(std::remainder(phase - expected, 2.0 * std::numbers::pi)) < 1e-9);
  CHECK(std::abs(std::arg(out.y[7] / w.y[7]) - phase) < 1e-9);
}

TEST_CASE("forward SSFM self-converges at second order") {
  FiberParams f;
  const auto w = testutil::qam_waveform(2048, Rational(4), 32e9, 10e-3, 8);
  const auto ref = forward_span(w, f, 1600);
  const auto e100 = rel_diff(forward_span(w, f, 100), ref);
  const auto e200 = rel_diff(forward_span(w, f, 200), ref);
  const auto e400 = rel_diff(forward_span(w, f, 400), ref);
  CHECK(rel_diff(forward_span(w, f, 200), forward_span(w, f, 400)) < 1e-4);
  CHECK(std::log2(e100 / e200) >= 1.8);
  CHECK(std::log2(e200 / e400) >= 1.8);
}

TEST_CASE("edfa noise statistics") {
  const double nu = speed_of_light / 1550e-9;
  const double fs = 64e9;
  const DualPolWaveform zero(std::size_t{1000000}, fs);
  Rng rng(42);
  const auto out = edfa(zero, 16.0, 4.5, nu, rng);
  const double gain = std::pow(10.0, 1.6);
  const double n_sp = std::pow(10.0, 0.45) / 2.0;
  const double expected = (gain - 1.0) * planck * nu * n_sp * fs;
  CHECK(ase_noise_variance(16.0, 4.5, nu, fs) == doctest::Approx(expected).epsilon(1e-14));
  double vx = 0.0, vy = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    vx += std::norm(out.x[k]);
    vy += std::norm(out.y[k]);
  }
  vx /= static_cast<double>(out.size());
  vy /= static_cast<double>(out.size());
  CHECK(std::abs(vx / expected - 1.0) < 0.02);
  CHECK(std::abs(vy / expected - 1.0) < 0.02);
}

TEST_CASE("edfa gain only cases") {
  const double nu = speed_of_light / 1550e-9;
  const auto w = testutil::random_waveform(256, 64e9, 9);
  Rng rng(1);
  const auto g0 = edfa(w, 0.0, 4.5, nu, rng);
  CHECK(rel_diff(g0, w) == 0.0);
  const auto quiet = edfa(w, 16.0, 4.5, nu, rng, false);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::abs(quiet.x[k] - w.x[k] * std::pow(10.0, 0.8)) < 1e-15);
  CHECK_THROWS_AS(edfa(w, -1.0, 4.5, nu, rng), std::invalid_argument);
}

TEST_CASE("wdm mux places channels on the expected bins") {
  const std::size_t n = 1024;
  const double fs = 512e9;
  const double spacing = 50e9;
  std::vector<DualPolWaveform> channels;
  for (int c = 0; c < 5; ++c) channels.emplace_back(CVec(n, Complex(1.0 + c, 0.0)), CVec(n), fs);
  const auto muxed = wdm_mux(channels, spacing);
  auto spec = muxed.x;
  fft_inplace(spec);
  const double df = fs / n;
  for (int c = 0; c < 5; ++c) {
    const auto bin = static_cast<long>(std::lround((c - 2) * spacing / df));
    CHECK(std::abs(spec[storage_bin(bin, n)]) == doctest::Approx(n * (1.0 + c)).epsilon(1e-12));
  }
  double rest = 0.0;
  for (std::size_t k = 0; k < n; ++k) rest += std::norm(spec[k]);
  double lines = 0.0;
  for (int c = 0; c < 5; ++c) lines += std::pow(n * (1.0 + c), 2);
  CHECK(std::abs(rest - lines) / lines < 1e-12);

  // One channel: identity.
  const std::vector<DualPolWaveform> single{channels[1]};
  CHECK(rel_diff(wdm_mux(single, spacing), channels[1]) == 0.0);
  CHECK_THROWS_AS(wdm_mux(channels, 120e9), std::invalid_argument);
}

TEST_CASE("wdm mux then demux recovers the centre channel") {
  const std::size_t n = 8192;
  const double fs = 256e9;
  std::vector<DualPolWaveform> channels;
  for (int c = 0; c < 3; ++c) channels.push_back(band_limited(n, fs, 17e9, 100 + c));
  const auto rx = wdm_demux_center(wdm_mux(channels, 50e9), 50e9);
  CHECK(rel_diff(rx, channels[1]) < 1e-9);
  // The centre channel alone is not altered by a neighbour on the grid.
  CHECK(rel_diff(wdm_demux_center(shift(channels[0], 50e9), 50e9), DualPolWaveform(CVec(n), CVec(n), fs)) != 0.0);
}

TEST_CASE("run_link: identity, linear composition and noise") {
  LinkConfig link;
  link.num_spans = 0;
  const auto w = testutil::qam_waveform(1024, Rational(4), 32e9, 1e-3, 2);
  Rng rng(1);
  CHECK(rel_diff(run_link(w, link, rng), w) == 0.0);

  link.num_spans = 3;
  link.fiber.gamma_per_w_km = 0.0;
  link.ase_noise = false;
  link.steps_per_span = 4;
  const auto out = run_link(w, link, rng);
  const auto ref = apply_gvd(w, link.fiber.beta2_ps2_per_km(), link.total_length_km(), +1);
  CHECK(rel_diff(out, ref) < 1e-10);
  // Undoing the total dispersion restores the input.
  CHECK(rel_diff(apply_gvd(out, link.fiber.beta2_ps2_per_km(), link.total_length_km(), -1), w) < 1e-10);

  link.ase_noise = true;
  Rng a(7), b(7);
  CHECK(rel_diff(run_link(w, link, a), run_link(w, link, b)) == 0.0);
  CHECK(rel_diff(run_link(w, link, a), out) > 0.0);
}

TEST_CASE("simulation oversampling covers the WDM band") {
  WdmConfig paper;
  CHECK(paper.simulation_samples_per_symbol() == 8);
  WdmConfig desk;
  desk.num_channels = 3;
  desk.channel_spacing_hz = 50e9;
  desk.symbol_rate_hz = 32e9;
  CHECK(desk.simulation_samples_per_symbol() == 8);
  CHECK_NOTHROW(paper.validate());
  paper.channel_spacing_hz = 90e9;
  CHECK_THROWS_AS(paper.validate(), std::invalid_argument);
}

TEST_CASE("dispersion memory") {
  // |beta2 L| 2 pi B fs for the paper link at 9/8 samples per symbol.
  const double b = -21.682619391414892 * 1200.0;
  const double fs = 93e9 * 9.0 / 8.0;
  const double raw = std::abs(b) * 1e-24 * 2.0 * std::numbers::pi * fs * fs;
  const auto m = dispersion_memory_samples(b, fs, fs, 2);
  CHECK(m >= raw);
  CHECK(m < raw + 2.0);
  CHECK(m % 2 == 0);
}
