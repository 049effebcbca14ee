#include "cbdbp/coefficients.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cbdbp {

NlprCoefficients::NlprCoefficients(int num_subbands, int intra_half_width, int inter_half_width)
    : num_subbands_(num_subbands), intra_half_width_(intra_half_width), inter_half_width_(inter_half_width) {
  if (num_subbands < 1) throw std::invalid_argument("coefficients: num_subbands must be >= 1");
  if (intra_half_width < 0 || inter_half_width < 0) throw std::invalid_argument("coefficients: negative half width");
  taps_.assign(static_cast<std::size_t>(num_subbands * num_subbands), RVec{});
  for (int i = 0; i < num_subbands; ++i)
    for (int j = 0; j < num_subbands; ++j) taps_[index(i, j)].assign(static_cast<std::size_t>(2 * half_width(i, j) + 1), 0.0);
}

double NlprCoefficients::at(int i, int j, int m) const {
  const int k = half_width(i, j);
  if (m < -k || m > k) return 0.0;
  return taps_[index(i, j)][static_cast<std::size_t>(m + k)];
}

void NlprCoefficients::set(int i, int j, int m, double value) {
  if (i < 0 || j < 0 || i >= num_subbands_ || j >= num_subbands_) throw std::out_of_range("coefficients: band index");
  const int k = half_width(i, j);
  if (m < -k || m > k) throw std::out_of_range("coefficients: tap offset outside filter support");
  auto& f = taps_[index(i, j)];
  f[static_cast<std::size_t>(m + k)] = value;
  if (i == j) f[static_cast<std::size_t>(-m + k)] = value;
}

std::span<const double> NlprCoefficients::filter(int i, int j) const { return taps_[index(i, j)]; }

bool NlprCoefficients::all_zero() const {
  for (const auto& f : taps_)
    for (double v : f)
      if (v != 0.0) return false;
  return true;
}

void NlprCoefficients::validate() const {
  if (taps_.size() != static_cast<std::size_t>(num_subbands_ * num_subbands_))
    throw std::invalid_argument("coefficients: filter count does not match num_subbands");
  for (int i = 0; i < num_subbands_; ++i) {
    for (int j = 0; j < num_subbands_; ++j) {
      const auto& f = taps_[index(i, j)];
      const int k = half_width(i, j);
      if (f.size() != static_cast<std::size_t>(2 * k + 1)) throw std::invalid_argument("coefficients: filter length mismatch");
      for (double v : f)
        if (!std::isfinite(v)) throw std::invalid_argument("coefficients: non-finite tap");
      if (i == j)
        for (int m = 1; m <= k; ++m)
          if (f[static_cast<std::size_t>(k + m)] != f[static_cast<std::size_t>(k - m)])
            throw std::invalid_argument("coefficients: intra-band filter is not symmetric");
    }
  }
}

std::size_t NlprCoefficients::parameter_count() const {
  const auto n = static_cast<std::size_t>(num_subbands_);
  return n * static_cast<std::size_t>(intra_half_width_ + 1) + n * (n - 1) * static_cast<std::size_t>(2 * inter_half_width_ + 1);
}

NlprCoefficients::Parameter NlprCoefficients::parameter(std::size_t index) const {
  std::size_t p = index;
  for (int i = 0; i < num_subbands_; ++i) {
    for (int j = 0; j < num_subbands_; ++j) {
      if (i == j) {
        const auto count = static_cast<std::size_t>(intra_half_width_ + 1);
        if (p < count) return {i, j, static_cast<int>(p), p != 0};
        p -= count;
      } else {
        const auto count = static_cast<std::size_t>(2 * inter_half_width_ + 1);
        if (p < count) return {i, j, static_cast<int>(p) - inter_half_width_, false};
        p -= count;
      }
    }
  }
  throw std::out_of_range("coefficients: parameter index");
}

RVec NlprCoefficients::to_parameters() const {
  RVec out(parameter_count());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const auto q = parameter(p);
    out[p] = at(q.target, q.source, q.offset);
  }
  return out;
}

void NlprCoefficients::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw std::invalid_argument("coefficients: parameter vector size mismatch");
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto q = parameter(p);
    set(q.target, q.source, q.offset, params[p]);
  }
}

void write_coefficients(std::ostream& os, const NlprCoefficients& c, const CoefficientMetadata& meta) {
  c.validate();
  os << "# cbdbp NLPR coefficients\n";
  os << "format 1\n";
  os << "num_subbands " << c.num_subbands() << '\n';
  os << "intra_half_width " << c.intra_half_width() << '\n';
  os << "inter_half_width " << c.inter_half_width() << '\n';
  os << std::setprecision(17);
  os << "splitting_ratio " << meta.splitting_ratio << '\n';
  os << "num_steps " << meta.num_steps << '\n';
  os << "step_length_km " << meta.step_length_km << '\n';
  for (int i = 0; i < c.num_subbands(); ++i) {
    for (int j = 0; j < c.num_subbands(); ++j) {
      os << "filter " << i << ' ' << j << '\n';
      const auto f = c.filter(i, j);
      for (std::size_t k = 0; k < f.size(); ++k) os << (k ? " " : "") << f[k];
      os << '\n';
    }
  }
}

namespace {

std::string next_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return line;
  }
  throw std::runtime_error("coefficient file: unexpected end of input");
}

template <typename T>
T keyed_value(std::istream& is, const std::string& key) {
  std::istringstream ls(next_line(is));
  std::string k;
  T v{};
  if (!(ls >> k >> v) || k != key) throw std::runtime_error("coefficient file: expected '" + key + "'");
  return v;
}

}  // namespace

NlprCoefficients read_coefficients(std::istream& is, CoefficientMetadata* meta) {
  if (keyed_value<int>(is, "format") != 1) throw std::runtime_error("coefficient file: unsupported format version");
  const int nsb = keyed_value<int>(is, "num_subbands");
  const int k_intra = keyed_value<int>(is, "intra_half_width");
  const int k_inter = keyed_value<int>(is, "inter_half_width");
  CoefficientMetadata m;
  m.splitting_ratio = keyed_value<double>(is, "splitting_ratio");
  m.num_steps = keyed_value<int>(is, "num_steps");
  m.step_length_km = keyed_value<double>(is, "step_length_km");

  NlprCoefficients c(nsb, k_intra, k_inter);
  for (int i = 0; i < nsb; ++i) {
    for (int j = 0; j < nsb; ++j) {
      std::istringstream hs(next_line(is));
      std::string word;
      int fi = -1, fj = -1;
      if (!(hs >> word >> fi >> fj) || word != "filter" || fi != i || fj != j)
        throw std::runtime_error("coefficient file: expected 'filter " + std::to_string(i) + " " + std::to_string(j) + "'");
      std::istringstream ts(next_line(is));
      const int k = c.half_width(i, j);
      RVec row(static_cast<std::size_t>(2 * k + 1));
      for (auto& v : row)
        if (!(ts >> v)) throw std::runtime_error("coefficient file: short filter row");
      for (int t = -k; t <= k; ++t) {
        const double v = row[static_cast<std::size_t>(t + k)];
        if (i == j && v != row[static_cast<std::size_t>(k - t)])
          throw std::runtime_error("coefficient file: intra-band filter is not symmetric");
        c.set(i, j, t, v);
      }
    }
  }
  c.validate();
  if (meta) *meta = m;
  return c;
}

}  // namespace cbdbp
