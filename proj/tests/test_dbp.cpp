#include <cmath>
#include <numbers>

#include "cbdbp/channel.hpp"
#include "cbdbp/dbp.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cbdbp;
using testutil::rel_diff;

namespace {

constexpr double kRate = 36e9;
constexpr double kBeta2 = -21.682619391414892;

// Direct circular convolution, written independently of the rfft path.
std::vector<RVec> direct_phases(const SubbandSet& bands, const NlprCoefficients& c) {
  const std::size_t m = bands.x.front().size();
  const auto nsb = static_cast<std::size_t>(bands.size());
  std::vector<RVec> theta(nsb, RVec(m, 0.0));
  for (std::size_t i = 0; i < nsb; ++i)
    for (std::size_t j = 0; j < nsb; ++j) {
      const int k = c.half_width(static_cast<int>(i), static_cast<int>(j));
      for (std::size_t n = 0; n < m; ++n)
        for (int t = -k; t <= k; ++t) {
          const std::size_t idx = t >= 0 ? (n + m - static_cast<std::size_t>(t)) % m : (n + static_cast<std::size_t>(-t)) % m;
          theta[i][n] += c.at(static_cast<int>(i), static_cast<int>(j), t) *
                         (std::norm(bands.x[j][idx]) + std::norm(bands.y[j][idx]));
        }
    }
  return theta;
}

NlprCoefficients random_coefficients(int nsb, int k_intra, int k_inter, double scale, std::uint64_t seed) {
  NlprCoefficients c(nsb, k_intra, k_inter);
  Rng rng(seed, 3);
  RVec p(c.parameter_count());
  for (auto& v : p) v = scale * rng.normal();
  c.set_parameters(p);
  return c;
}

DbpConfig make_config(int nst, int nsb, double rho, std::size_t block, std::size_t overlap, double length_km) {
  DbpConfig cfg;
  cfg.num_steps = nst;
  cfg.num_subbands = nsb;
  cfg.splitting_ratio = rho;
  cfg.blocking.block_length = block;
  cfg.blocking.overlap = overlap;
  cfg.blocking.samples_per_symbol = Rational(9, 8);
  cfg.total_length_km = length_km;
  cfg.beta2_ps2_per_km = kBeta2;
  cfg.coefficients = NlprCoefficients(nsb, 4, 4);
  return cfg;
}

}  // namespace

TEST_CASE("subband demux/mux round trip and energy split") {
  for (int nsb : {1, 2, 3, 4, 8}) {
    const std::size_t n = nsb == 3 ? 3 * 2048 : 8192;
    const CVec sx = testutil::random_vector(n, 11), sy = testutil::random_vector(n, 12);
    const SubbandSet bands = subband_demux(sx, sy, nsb, kRate);
    REQUIRE(bands.size() == nsb);
    CHECK(bands.subband_sample_rate == doctest::Approx(kRate / nsb));
    const auto [mx, my] = subband_mux(bands);
    CHECK(rel_diff(mx, sx) < 1e-12);
    CHECK(rel_diff(my, sy) < 1e-12);

    // Parent time-domain energy via Parseval.
    const double parent = (testutil::norm2(sx) + testutil::norm2(sy)) / static_cast<double>(n) / kRate;
    CHECK(std::abs(bands.energy() - parent) / parent < 1e-12);
    for (int b = 1; b < nsb; ++b) CHECK(bands.center_offsets[b] > bands.center_offsets[b - 1]);
    if (nsb % 2 == 1) CHECK(bands.center_offsets[nsb / 2] == 0.0);
  }
  CHECK_THROWS_AS(subband_demux(CVec(10), CVec(10), 4, kRate), std::invalid_argument);
}

TEST_CASE("tone at a band centre lands in that band only") {
  const std::size_t n = 4096;
  const int nsb = 4;
  const std::size_t m = n / nsb;
  for (int b = 0; b < nsb; ++b) {
    const long centre = -static_cast<long>(n / 2) + b * static_cast<long>(m) + static_cast<long>(m / 2);
    CVec tone(n);
    for (std::size_t t = 0; t < n; ++t)
      tone[t] = 0.7 * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(centre) * static_cast<double>(t) / n);
    CVec sx = tone;
    fft_inplace(sx);
    const SubbandSet bands = subband_demux(sx, CVec(n), nsb, kRate);
    CHECK(bands.center_offsets[b] == doctest::Approx(2.0 * std::numbers::pi * kRate * centre / n));
    for (int i = 0; i < nsb; ++i)
      for (const auto& v : bands.x[i]) {
        if (i == b)
          CHECK(std::abs(v - Complex(0.7, 0.0)) < 1e-12);
        else
          CHECK(std::abs(v) < 1e-12);
      }
  }
}

TEST_CASE("per-band linear steps reproduce the full-band GVD operator") {
  const std::size_t n = 16384;
  const CVec vx = testutil::random_vector(n, 21), vy = testutil::random_vector(n, 22);
  for (double length : {0.0, 80.0, 1200.0}) {
    const CVec h = gvd_response(angular_frequency_grid(n, kRate), kBeta2, length, -1);
    CVec ref = vx;
    fft_inplace(ref);
    for (std::size_t k = 0; k < n; ++k) ref[k] *= h[k];
    for (int nsb : {1, 2, 4, 8}) {
      CVec sx = vx, sy = vy;
      fft_inplace(sx);
      fft_inplace(sy);
      SubbandSet bands = subband_demux(sx, sy, nsb, kRate);
      for (int b = 0; b < nsb; ++b) {
        bands.x[b] = subband_linear_step(bands.x[b], bands.subband_sample_rate, bands.center_offsets[b], kBeta2, length, -1);
        bands.y[b] = subband_linear_step(bands.y[b], bands.subband_sample_rate, bands.center_offsets[b], kBeta2, length, -1);
      }
      const auto [mx, my] = subband_mux(bands);
      CHECK(rel_diff(mx, ref) < 1e-12);
    }
  }
}

TEST_CASE("walk-off term delays each band envelope by beta2 * Omega * L") {
  const std::size_t n = 4096;
  const double fs = 64e9, length = 1000.0;
  const int nsb = 2;
  CVec sx(n);
  // Narrow Gaussian envelope at the centre of each band, placed at n/2.
  for (int b = 0; b < nsb; ++b) {
    const double f_b = (-static_cast<double>(n) / 2 + b * n / 2.0 + n / 4.0) * fs / n;
    for (std::size_t t = 0; t < n; ++t) {
      const double tt = (static_cast<double>(t) - n / 2.0) / fs;
      sx[t] += std::exp(-tt * tt / (2.0 * 100e-12 * 100e-12)) * std::polar(1.0, 2.0 * std::numbers::pi * f_b * tt);
    }
  }
  fft_inplace(sx);
  SubbandSet bands = subband_demux(sx, CVec(n), nsb, fs);
  for (int b = 0; b < nsb; ++b) {
    const CVec out = subband_linear_step(bands.x[b], bands.subband_sample_rate, bands.center_offsets[b], kBeta2, length, +1);
    auto centroid = [&](const CVec& v) {
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < v.size(); ++t) {
        num += static_cast<double>(t) * std::norm(v[t]);
        den += std::norm(v[t]);
      }
      return num / den / bands.subband_sample_rate;
    };
    const double expected = -kBeta2 * 1e-24 * bands.center_offsets[b] * length;
    CHECK(centroid(out) - centroid(bands.x[b]) == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("nlpr frequency-domain path matches direct circular convolution") {
  const std::size_t n = 2048;
  for (int nsb : {1, 2, 3}) {
    const std::size_t len = nsb == 3 ? 3 * 512 : n;
    CVec sx = testutil::random_vector(len, 31), sy = testutil::random_vector(len, 32);
    const SubbandSet bands = subband_demux(sx, sy, nsb, kRate);
    const auto c = random_coefficients(nsb, 5, 7, 0.1, 9);
    const auto theta = nlpr_phases(bands, c);
    const auto ref = direct_phases(bands, c);
    for (int i = 0; i < nsb; ++i)
      for (std::size_t k = 0; k < theta[i].size(); ++k) CHECK(std::abs(theta[i][k] - ref[i][k]) < 1e-10);
  }
}

TEST_CASE("nlpr preserves per-sample joint power") {
  const std::size_t n = 4096;
  CVec sx = testutil::random_vector(n, 41), sy = testutil::random_vector(n, 42);
  const SubbandSet bands = subband_demux(sx, sy, 2, kRate);
  SUBCASE("zero taps are the identity") {
    const SubbandSet out = nlpr_step(bands, NlprCoefficients(2, 3, 3));
    for (int b = 0; b < 2; ++b) CHECK(out.x[b] == bands.x[b]);
  }
  SUBCASE("single centre tap is the classic rotation") {
    const SubbandSet one = subband_demux(sx, sy, 1, kRate);
    NlprCoefficients c(1, 0, 0);
    c.set(0, 0, 0, -0.3);
    const SubbandSet out = nlpr_step(one, c);
    for (std::size_t k = 0; k < one.x[0].size(); ++k) {
      const double p = std::norm(one.x[0][k]) + std::norm(one.y[0][k]);
      CHECK(std::abs(out.x[0][k] - one.x[0][k] * std::polar(1.0, -0.3 * p)) < 1e-13);
    }
  }
  SUBCASE("random MIMO taps") {
    const SubbandSet out = nlpr_step(bands, random_coefficients(2, 4, 4, 0.2, 5));
    for (int b = 0; b < 2; ++b)
      for (std::size_t k = 0; k < out.x[b].size(); ++k) {
        const double before = std::norm(bands.x[b][k]) + std::norm(bands.y[b][k]);
        const double after = std::norm(out.x[b][k]) + std::norm(out.y[b][k]);
        CHECK(std::abs(after - before) <= 4.0 * std::numeric_limits<double>::epsilon() * before);
      }
  }
  CHECK_THROWS_AS(nlpr_step(bands, NlprCoefficients(3, 1, 1)), std::invalid_argument);
}

TEST_CASE("cb_essfm degenerate cases") {
  const DualPolWaveform w = testutil::qam_waveform(8192, Rational(9, 8), 32e9, 2e-3, 7);
  const double rate = w.sample_rate;
  const double length = 800.0;
  const std::size_t overlap = default_overlap(kBeta2 * length, rate, 8);

  SUBCASE("zero taps equal EDC") {
    BlockingConfig blk;
    blk.block_length = 4096;
    blk.overlap = overlap;
    const DualPolWaveform ref = edc(w, kBeta2 * length, blk);
    for (int nst : {1, 3, 10})
      for (int nsb : {1, 2, 4})
        for (double rho : {0.0, 0.3, 1.0}) {
          auto cfg = make_config(nst, nsb, rho, 4096, overlap, length);
          CHECK(rel_diff(cb_essfm(w, cfg), ref) < 1e-10);
        }
  }
  SUBCASE("one band at rho = 0.5 equals ESSFM") {
    for (int nst : {1, 4}) {
      auto cfg = make_config(nst, 1, 0.5, 4096, overlap, length);
      cfg.coefficients = random_coefficients(1, 6, 0, -20.0, 3);
      CHECK(rel_diff(cb_essfm(w, cfg), essfm(w, cfg)) < 1e-12);
    }
  }
  SUBCASE("rho = 0 and rho = 1 conserve energy but differ") {
    auto cfg = make_config(1, 2, 0.0, 8192, 0, length);
    cfg.coefficients = random_coefficients(2, 4, 4, -30.0, 4);
    const CbEssfmEngine e0(cfg, w.size(), rate);
    cfg.splitting_ratio = 1.0;
    const CbEssfmEngine e1(cfg, w.size(), rate);
    const auto a = e0.process_block(w), b = e1.process_block(w);
    const double energy = w.sample_energy();
    CHECK(std::abs(a.sample_energy() - energy) / energy < 1e-10);
    CHECK(std::abs(b.sample_energy() - energy) / energy < 1e-10);
    CHECK(rel_diff(a, b) > 1e-3);
  }
}

TEST_CASE("ssfm_dbp without nonlinearity equals EDC") {
  const DualPolWaveform w = testutil::qam_waveform(4096, Rational(9, 8), 32e9, 1e-3, 8);
  LinkConfig link;
  link.num_spans = 4;
  link.fiber.gamma_per_w_km = 0.0;
  BlockingConfig blk;
  blk.block_length = 2048;
  blk.overlap = default_overlap(link.total_beta2_ps2(), w.sample_rate, 2);
  // Undoing each amplifier and restoring the span loss cancel exactly.
  CHECK(rel_diff(ssfm_dbp(w, link, 8, blk), edc(w, link.total_beta2_ps2(), blk)) < 1e-10);
  CHECK_THROWS_AS(ssfm_dbp(w, link, 6, blk), std::invalid_argument);
}

TEST_CASE("interior samples do not depend on the block length") {
  const DualPolWaveform w = testutil::qam_waveform(16384, Rational(9, 8), 32e9, 2e-3, 9);
  const double length = 800.0;

  SUBCASE("finite memory: single-band NLPR cascade without dispersion") {
    auto cfg = make_config(5, 1, 0.3, 4096, 64, length);
    cfg.beta2_ps2_per_km = 0.0;
    cfg.coefficients = random_coefficients(1, 4, 0, -10.0, 6);
    const auto a = cb_essfm(w, cfg);
    cfg.blocking.block_length = 16384;
    CHECK(rel_diff(a, cb_essfm(w, cfg)) < 1e-12);
  }
  SUBCASE("subband split has sinc tails, so two bands leak even without dispersion") {
    auto cfg = make_config(5, 2, 0.3, 4096, 64, length);
    cfg.beta2_ps2_per_km = 0.0;
    cfg.coefficients = random_coefficients(2, 4, 4, -10.0, 6);
    const auto a = cb_essfm(w, cfg);
    cfg.blocking.block_length = 16384;
    const double d = rel_diff(a, cb_essfm(w, cfg));
    CHECK(d > 1e-9);
    CHECK(d < 5e-2);
  }
  SUBCASE("dispersive link: residual from the all-pass tails shrinks with overlap") {
    // The block-grid GVD response is all-pass, so block-edge truncation
    // leaks through tails that decay roughly as 1/overlap.
    auto cfg = make_config(5, 1, 0.3, 4096, default_overlap(kBeta2 * length, w.sample_rate, 2), length);
    cfg.coefficients = random_coefficients(1, 4, 0, -10.0, 6);
    double previous = 1.0;
    for (std::size_t extra : {0, 256, 1024}) {
      cfg.blocking.overlap = default_overlap(kBeta2 * length, w.sample_rate, 2) + extra;
      cfg.blocking.block_length = 4096;
      const auto a = cb_essfm(w, cfg);
      cfg.blocking.block_length = 16384;
      const double d = rel_diff(a, cb_essfm(w, cfg));
      CHECK(d < 2e-2);
      CHECK(d < previous);
      previous = d;
    }
  }
}

TEST_CASE("tangent model matches finite differences") {
  const DualPolWaveform w = testutil::qam_waveform(2048, Rational(9, 8), 32e9, 2e-3, 10);
  auto cfg = make_config(3, 2, 0.3, 2304, 0, 800.0);
  cfg.coefficients = random_coefficients(2, 2, 3, -10.0, 7);
  const CbEssfmEngine engine(cfg, w.size(), w.sample_rate);
  CascadeTrace trace;
  const auto base = engine.process_block(w, &trace);
  const RVec p0 = cfg.coefficients.to_parameters();
  for (std::size_t p = 0; p < p0.size(); p += 3) {
    const double h = 1e-3;
    RVec pp = p0, pm = p0;
    pp[p] += h;
    pm[p] -= h;
    DbpConfig cp = cfg, cm = cfg;
    cp.coefficients.set_parameters(pp);
    cm.coefficients.set_parameters(pm);
    const auto yp = CbEssfmEngine(cp, w.size(), w.sample_rate).process_block(w);
    const auto ym = CbEssfmEngine(cm, w.size(), w.sample_rate).process_block(w);
    DualPolWaveform fd(w.size(), w.sample_rate);
    for (std::size_t k = 0; k < w.size(); ++k) {
      fd.x[k] = (yp.x[k] - ym.x[k]) / (2.0 * h);
      fd.y[k] = (yp.y[k] - ym.y[k]) / (2.0 * h);
    }
    const auto t = engine.tangent(trace, cfg.coefficients.parameter(p));
    CHECK(rel_diff(t, fd) < 1e-5);
  }
}

TEST_CASE("dbp configuration validation") {
  auto cfg = make_config(1, 2, 0.5, 4096, 0, 800.0);
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(cfg.validate(36e9, 100000), std::invalid_argument);  // overlap below the memory
  cfg.splitting_ratio = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = make_config(1, 3, 0.5, 4096, 0, 800.0);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = make_config(0, 1, 0.5, 4096, 0, 800.0);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(default_overlap(kBeta2 * 1200.0, 93e9 * 9.0 / 8.0, 2) == 1792);
}
