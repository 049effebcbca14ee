#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>

#include "cbdbp/dbp.hpp"
#include "cbdbp/signal.hpp"

namespace cbdbp {

/// Real multiplications per 2D symbol of CB-ESSFM with overlap-save:
/// (n/2) N/(N-N_ov) [(5N_st+4) log2(N/N_sb) + N_st(3N_sb+1)/2 + 4 log2 N_sb - 6 + (20 N_sb N_st + 16)/N]
double rms_per_2d(Rational n, std::size_t block_length, std::size_t overlap, int num_steps, int num_subbands);

/// Per-block operation counts (both polarizations) behind rms_per_2d.
/// A size-K complex FFT costs K log2 K - 3K + 4 real multiplications
/// (split radix, 3 RMs per complex product); a real FFT costs half of that.
struct ComplexityBreakdown {
  int cfft_full_count = 0;
  int cfft_sub_count = 0;
  int rfft_count = 0;
  int gvd_step_count = 0;
  int nlpr_count = 0;

  double cfft_full_rms = 0.0;
  double cfft_sub_rms = 0.0;
  double rfft_rms = 0.0;
  double gvd_rms = 0.0;
  double mimo_rms = 0.0;
  double intensity_rms = 0.0;
  double rotation_rms = 0.0;

  double symbols_2d_per_block = 0.0;
  double rms_per_2d = 0.0;

  double total_rms_per_block() const {
    return cfft_full_rms + cfft_sub_rms + rfft_rms + gvd_rms + mimo_rms + intensity_rms + rotation_rms;
  }
};

/// Split-radix cost of one size-K complex FFT.
double cfft_rms(std::size_t k);

ComplexityBreakdown breakdown(Rational n, std::size_t block_length, std::size_t overlap, int num_steps, int num_subbands);
/// Uses cfg.blocking for n, N and N_ov. num_steps == 0 describes EDC.
ComplexityBreakdown breakdown(const DbpConfig& cfg);

/// CSV (schema 1) with columns n,N,N_ov,N_st,N_sb,rms_per_2d for every
/// (N_st, N_sb) pair, N_st varying fastest.
void write_complexity_csv(std::ostream& os, Rational n, std::size_t block_length, std::size_t overlap,
                          std::span<const int> num_steps, std::span<const int> num_subbands);

}  // namespace cbdbp
