#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "cbdbp/fft.hpp"

namespace cbdbp {

/// Real MIMO filter mapping subband intensities to phase rotations:
/// theta_i[k] = sum_j sum_m taps(i, j, m) * P_j[k - m].
///
/// Intra-band filters (i == j) span m in [-intra_half_width, intra_half_width]
/// and are symmetric in m. Inter-band filters span
/// [-inter_half_width, inter_half_width] with no symmetry constraint.
class NlprCoefficients {
 public:
  NlprCoefficients() = default;
  NlprCoefficients(int num_subbands, int intra_half_width, int inter_half_width);

  int num_subbands() const { return num_subbands_; }
  int intra_half_width() const { return intra_half_width_; }
  int inter_half_width() const { return inter_half_width_; }
  int half_width(int i, int j) const { return i == j ? intra_half_width_ : inter_half_width_; }

  double at(int i, int j, int m) const;
  /// Sets a tap; for intra-band filters the mirrored tap is set as well.
  void set(int i, int j, int m, double value);

  /// Filter (i, j) as a dense vector indexed by m + half_width(i, j).
  std::span<const double> filter(int i, int j) const;

  bool all_zero() const;
  void validate() const;

  /// Free parameters: for each intra filter taps m = 0..K, for each inter
  /// filter taps m = -K..K, in row-major (i, j) order.
  std::size_t parameter_count() const;
  RVec to_parameters() const;
  void set_parameters(std::span<const double> params);

  /// Location of a free parameter.
  struct Parameter {
    int target;
    int source;
    int offset;      // m >= 0 for intra filters
    bool mirrored;   // also acts at -m
  };
  Parameter parameter(std::size_t index) const;

  friend bool operator==(const NlprCoefficients&, const NlprCoefficients&) = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * num_subbands_ + j); }

  int num_subbands_ = 1;
  int intra_half_width_ = 0;
  int inter_half_width_ = 0;
  std::vector<RVec> taps_{RVec(1, 0.0)};
};

/// Context stored alongside a coefficient set in its file.
struct CoefficientMetadata {
  double splitting_ratio = 0.5;
  int num_steps = 1;
  double step_length_km = 0.0;
};

/// Text format:
///   # cbdbp NLPR coefficients
///   format 1
///   num_subbands <int>
///   intra_half_width <int>
///   inter_half_width <int>
///   splitting_ratio <real>
///   num_steps <int>
///   step_length_km <real>
///   filter <i> <j>
///   <2K+1 taps, m = -K..K, 17 significant digits>
///   ...one filter block per (i, j) in row-major order
void write_coefficients(std::ostream& os, const NlprCoefficients& c, const CoefficientMetadata& meta);
NlprCoefficients read_coefficients(std::istream& is, CoefficientMetadata* meta = nullptr);

}  // namespace cbdbp
