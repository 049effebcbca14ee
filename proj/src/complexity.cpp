#include "cbdbp/complexity.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace cbdbp {
namespace {

void check_arguments(Rational n, std::size_t block_length, std::size_t overlap, int num_steps, int num_subbands) {
  if (!is_power_of_two(block_length)) throw std::invalid_argument("complexity: block length must be a power of two");
  if (overlap >= block_length) throw std::invalid_argument("complexity: overlap must be smaller than the block length");
  if (num_steps < 0) throw std::invalid_argument("complexity: num_steps must be >= 0");
  if (num_subbands < 1 || block_length % static_cast<std::size_t>(num_subbands) != 0)
    throw std::invalid_argument("complexity: block length not divisible by num_subbands");
  if (n.num <= 0) throw std::invalid_argument("complexity: samples per symbol must be positive");
}

}  // namespace

double rms_per_2d(Rational n, std::size_t block_length, std::size_t overlap, int num_steps, int num_subbands) {
  check_arguments(n, block_length, overlap, num_steps, num_subbands);
  const double big_n = static_cast<double>(block_length);
  const double nst = num_steps;
  const double nsb = num_subbands;
  const double bracket = (5.0 * nst + 4.0) * std::log2(big_n / nsb) + nst * (3.0 * nsb + 1.0) / 2.0 + 4.0 * std::log2(nsb) -
                         6.0 + (20.0 * nsb * nst + 16.0) / big_n;
  return n.value() / 2.0 * big_n / (big_n - static_cast<double>(overlap)) * bracket;
}

double cfft_rms(std::size_t k) {
  const double kk = static_cast<double>(k);
  return kk * std::log2(kk) - 3.0 * kk + 4.0;
}

ComplexityBreakdown breakdown(Rational n, std::size_t block_length, std::size_t overlap, int num_steps, int num_subbands) {
  check_arguments(n, block_length, overlap, num_steps, num_subbands);
  const std::size_t m = block_length / static_cast<std::size_t>(num_subbands);
  const double big_n = static_cast<double>(block_length);
  const double half_m = static_cast<double>(m) / 2.0;

  ComplexityBreakdown b;
  b.cfft_full_count = 4;
  b.cfft_sub_count = 4 * num_subbands * num_steps;
  b.rfft_count = 2 * num_subbands * num_steps;
  b.gvd_step_count = num_steps + 1;
  b.nlpr_count = num_steps;

  b.cfft_full_rms = b.cfft_full_count * cfft_rms(block_length);
  b.cfft_sub_rms = b.cfft_sub_count * cfft_rms(m);
  b.rfft_rms = b.rfft_count * cfft_rms(m) / 2.0;
  // 3 RMs per complex product, per polarization.
  b.gvd_rms = b.gvd_step_count * 6.0 * big_n;
  // Real (symmetric) intra-band responses cost 2 RMs per bin, complex
  // inter-band responses 3; the filtered intensities need M/2 bins.
  b.mimo_rms = num_steps * (num_subbands * half_m * 2.0 + num_subbands * (num_subbands - 1) * half_m * 3.0);
  b.intensity_rms = num_steps * 4.0 * big_n;
  b.rotation_rms = num_steps * 6.0 * big_n;

  b.symbols_2d_per_block = 2.0 * static_cast<double>(block_length - overlap) / n.value();
  b.rms_per_2d = b.total_rms_per_block() / b.symbols_2d_per_block;
  return b;
}

ComplexityBreakdown breakdown(const DbpConfig& cfg) {
  return breakdown(cfg.blocking.samples_per_symbol, cfg.blocking.block_length, cfg.blocking.overlap, cfg.num_steps,
                   cfg.num_subbands);
}

void write_complexity_csv(std::ostream& os, Rational n, std::size_t block_length, std::size_t overlap,
                          std::span<const int> num_steps, std::span<const int> num_subbands) {
  os << "# schema=1\n";
  os << "n,N,N_ov,N_st,N_sb,rms_per_2d\n";
  os << std::setprecision(10);
  for (int nsb : num_subbands)
    for (int nst : num_steps)
      os << n.num << '/' << n.den << ',' << block_length << ',' << overlap << ',' << nst << ',' << nsb << ','
         << rms_per_2d(n, block_length, overlap, nst, nsb) << '\n';
}

}  // namespace cbdbp
