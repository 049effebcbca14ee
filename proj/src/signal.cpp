#include "cbdbp/signal.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cbdbp {

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw std::invalid_argument("Rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const auto g = std::gcd(n, d);
  num = g ? n / g : n;
  den = g ? d / g : d;
}

DualPolWaveform::DualPolWaveform(CVec x_, CVec y_, double rate) : x(std::move(x_)), y(std::move(y_)), sample_rate(rate) {
  validate();
}

DualPolWaveform::DualPolWaveform(std::size_t n, double rate) : x(n), y(n), sample_rate(rate) { validate(); }

double DualPolWaveform::sample_energy() const {
  double e = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) e += std::norm(x[k]) + std::norm(y[k]);
  return e;
}

double DualPolWaveform::mean_power() const { return x.empty() ? 0.0 : sample_energy() / static_cast<double>(x.size()); }

void DualPolWaveform::validate() const {
  if (x.size() != y.size()) throw std::invalid_argument("DualPolWaveform: polarization lengths differ");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("DualPolWaveform: sample_rate must be positive");
}

void BlockingConfig::validate(double rolloff) const {
  if (!is_power_of_two(block_length)) throw std::invalid_argument("blocking: block length must be a power of two");
  if (overlap >= block_length) throw std::invalid_argument("blocking: overlap must be smaller than the block length");
  if (overlap % 2 != 0) throw std::invalid_argument("blocking: overlap must be even");
  if (samples_per_symbol.value() < 1.0 + rolloff)
    throw std::invalid_argument("blocking: samples per symbol below 1 + rolloff");
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

Complex Rng::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

std::vector<std::uint8_t> random_bits(std::size_t count, Rng& rng) {
  std::vector<std::uint8_t> bits(count);
  std::uint64_t word = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (k % 64 == 0) word = rng.next();
    bits[k] = static_cast<std::uint8_t>((word >> (k % 64)) & 1u);
  }
  return bits;
}

namespace {

int bits_per_symbol(int order) {
  switch (order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 6;
    case 256: return 8;
    default: throw std::invalid_argument("qam_map: unsupported order " + std::to_string(order));
  }
}

// Gray label -> PAM level index.
unsigned gray_to_binary(unsigned g) {
  for (unsigned shift = 1; shift < 16; shift <<= 1) g ^= g >> shift;
  return g;
}

}  // namespace

CVec qam_map(std::span<const std::uint8_t> bits, int order) {
  const int m = bits_per_symbol(order);
  if (bits.size() % static_cast<std::size_t>(m) != 0) throw std::invalid_argument("qam_map: bit count is not a multiple of log2(order)");
  const int half = m / 2;
  const int levels = 1 << half;
  // Mean energy of the unnormalized grid {+-1, +-3, ...}^2 is 2(M-1)/3.
  const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);

  CVec out(bits.size() / static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < out.size(); ++s) {
    unsigned gi = 0;
    unsigned gq = 0;
    for (int b = 0; b < half; ++b) gi = (gi << 1) | (bits[s * m + b] & 1u);
    for (int b = 0; b < half; ++b) gq = (gq << 1) | (bits[s * m + half + b] & 1u);
    const double re = 2.0 * gray_to_binary(gi) - (levels - 1);
    const double im = 2.0 * gray_to_binary(gq) - (levels - 1);
    out[s] = Complex(re, im) * scale;
  }
  return out;
}

SymbolFrame random_symbol_frame(std::size_t num_symbols, int order, double symbol_rate, Rng& rng) {
  const auto m = static_cast<std::size_t>(bits_per_symbol(order));
  SymbolFrame f;
  f.symbol_rate = symbol_rate;
  f.x = qam_map(random_bits(num_symbols * m, rng), order);
  f.y = qam_map(random_bits(num_symbols * m, rng), order);
  return f;
}

double rrc_pulse(double t, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("rrc: rolloff must lie in (0, 1]");
  constexpr double pi = std::numbers::pi;
  if (std::abs(t) < 1e-12) return 1.0 - r + 4.0 * r / pi;
  const double x = 4.0 * r * t;
  if (std::abs(std::abs(x) - 1.0) < 1e-10) {
    return r / std::sqrt(2.0) *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * r)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * r)));
  }
  return (std::sin(pi * t * (1.0 - r)) + x * std::cos(pi * t * (1.0 + r))) / (pi * t * (1.0 - x * x));
}

namespace {

// Pulse samples h(d / a) for d in [-half*a, half*a] where sps = a / b, so
// every (sample, symbol) time offset n*b/a - k is an exact table entry.
struct PulseTable {
  std::int64_t a;
  std::int64_t b;
  std::int64_t reach;  // max |d|
  RVec h;

  PulseTable(Rational sps, double rolloff, int span) : a(sps.num), b(sps.den), reach(span / 2 * sps.num) {
    if (span < 2 || span % 2 != 0) throw std::invalid_argument("rrc: filter span must be an even number of symbols");
    h.resize(static_cast<std::size_t>(2 * reach + 1));
    for (std::int64_t d = -reach; d <= reach; ++d)
      h[static_cast<std::size_t>(d + reach)] = rrc_pulse(static_cast<double>(d) / static_cast<double>(a), rolloff);
  }

  double at(std::int64_t d) const { return h[static_cast<std::size_t>(d + reach)]; }
};

std::int64_t floor_div(std::int64_t n, std::int64_t d) {
  std::int64_t q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t n, std::int64_t d) { return -floor_div(-n, d); }

std::size_t wrap(std::int64_t i, std::size_t n) {
  const auto len = static_cast<std::int64_t>(n);
  i %= len;
  return static_cast<std::size_t>(i < 0 ? i + len : i);
}

std::size_t record_length(std::size_t num_symbols, Rational sps) {
  const auto total = static_cast<std::int64_t>(num_symbols) * sps.num;
  if (total % sps.den != 0)
    throw std::invalid_argument("rrc: num_symbols * samples_per_symbol must be an integer");
  return static_cast<std::size_t>(total / sps.den);
}

}  // namespace

RVec rrc_taps(Rational sps, double rolloff, int span_symbols) {
  const auto total = static_cast<std::int64_t>(span_symbols) * sps.num;
  if (total % sps.den != 0 || total % 2 != 0) throw std::invalid_argument("rrc_taps: span * sps must be an even integer");
  const auto half = total / 2;
  RVec taps(static_cast<std::size_t>(2 * half + 1));
  for (std::int64_t k = -half; k <= half; ++k)
    taps[static_cast<std::size_t>(k + half)] = rrc_pulse(static_cast<double>(k) / sps.value(), rolloff);
  return taps;
}

DualPolWaveform rrc_shape(const SymbolFrame& symbols, Rational sps, double rolloff, int span_symbols) {
  if (sps.value() < 1.0 + rolloff) throw std::invalid_argument("rrc_shape: samples per symbol below 1 + rolloff");
  if (symbols.x.size() != symbols.y.size()) throw std::invalid_argument("rrc_shape: polarization lengths differ");
  const PulseTable table(sps, rolloff, span_symbols);
  const std::size_t nsym = symbols.size();
  const std::size_t len = record_length(nsym, sps);
  DualPolWaveform w(len, symbols.symbol_rate * sps.value());
  if (nsym == 0) return w;

  // Sample n sits at n*b/a symbols; symbol k contributes h(n*b/a - k).
  for (std::size_t n = 0; n < len; ++n) {
    const auto nb = static_cast<std::int64_t>(n) * table.b;
    const auto k_lo = ceil_div(nb - table.reach, table.a);
    const auto k_hi = floor_div(nb + table.reach, table.a);
    Complex ax{}, ay{};
    for (auto k = k_lo; k <= k_hi; ++k) {
      const double h = table.at(nb - k * table.a);
      const auto kk = wrap(k, nsym);
      ax += h * symbols.x[kk];
      ay += h * symbols.y[kk];
    }
    w.x[n] = ax;
    w.y[n] = ay;
  }
  return w;
}

SymbolFrame matched_filter_and_sample(const DualPolWaveform& w, double symbol_rate, double rolloff, int span_symbols) {
  w.validate();
  const double ratio = w.sample_rate / symbol_rate;
  if (ratio < 1.0 + rolloff - 1e-12) throw std::invalid_argument("matched filter: sample rate below the shaped signal bandwidth");
  // Recover the exact rational samples-per-symbol from the rates.
  const auto den = static_cast<std::int64_t>(1) << 20;
  const Rational sps(std::llround(ratio * static_cast<double>(den)), den);
  const PulseTable table(sps, rolloff, span_symbols);

  SymbolFrame out;
  out.symbol_rate = symbol_rate;
  const auto len = static_cast<std::int64_t>(w.size());
  if ((len * sps.den) % sps.num != 0) throw std::invalid_argument("matched filter: record is not a whole number of symbols");
  const auto nsym = static_cast<std::size_t>(len * sps.den / sps.num);
  out.x.resize(nsym);
  out.y.resize(nsym);
  const double norm = 1.0 / sps.value();

  // Symbol k collects samples n with |n*b - k*a| <= reach.
  for (std::size_t k = 0; k < nsym; ++k) {
    const auto ka = static_cast<std::int64_t>(k) * table.a;
    const auto n_lo = ceil_div(ka - table.reach, table.b);
    const auto n_hi = floor_div(ka + table.reach, table.b);
    Complex ax{}, ay{};
    for (auto n = n_lo; n <= n_hi; ++n) {
      const double h = table.at(n * table.b - ka);
      const auto nn = wrap(n, w.size());
      ax += h * w.x[nn];
      ay += h * w.y[nn];
    }
    out.x[k] = ax * norm;
    out.y[k] = ay * norm;
  }
  return out;
}

std::vector<DualPolWaveform> overlap_save_split(const DualPolWaveform& w, const BlockingConfig& cfg) {
  if (cfg.overlap >= cfg.block_length) throw std::invalid_argument("overlap_save: overlap must be smaller than the block length");
  if (cfg.overlap % 2 != 0) throw std::invalid_argument("overlap_save: overlap must be even");
  if (w.size() < cfg.block_length) throw std::invalid_argument("overlap_save: signal shorter than one block");
  const std::size_t stride = cfg.stride();
  const std::size_t nblocks = (w.size() - cfg.overlap + stride - 1) / stride;
  std::vector<DualPolWaveform> blocks;
  blocks.reserve(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) {
    DualPolWaveform blk(cfg.block_length, w.sample_rate);
    for (std::size_t t = 0; t < cfg.block_length; ++t) {
      const std::size_t i = (b * stride + t) % w.size();
      blk.x[t] = w.x[i];
      blk.y[t] = w.y[i];
    }
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

DualPolWaveform overlap_save_join(std::span<const DualPolWaveform> blocks, const BlockingConfig& cfg) {
  const std::size_t half = cfg.overlap / 2;
  const std::size_t stride = cfg.stride();
  DualPolWaveform out(blocks.size() * stride, blocks.empty() ? 1.0 : blocks.front().sample_rate);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].size() != cfg.block_length) throw std::invalid_argument("overlap_save_join: block length mismatch");
    for (std::size_t t = 0; t < stride; ++t) {
      out.x[b * stride + t] = blocks[b].x[half + t];
      out.y[b * stride + t] = blocks[b].y[half + t];
    }
  }
  return out;
}

DualPolWaveform overlap_save_apply(const DualPolWaveform& w, const BlockingConfig& cfg, const BlockProcessor& fn) {
  if (cfg.overlap >= cfg.block_length || cfg.overlap % 2 != 0)
    throw std::invalid_argument("overlap_save: overlap must be even and smaller than the block length");
  if (w.size() < cfg.block_length) throw std::invalid_argument("overlap_save: signal shorter than one block");
  const std::size_t len = w.size();
  const std::size_t half = cfg.overlap / 2;
  const std::size_t stride = cfg.stride();
  const std::size_t nblocks = (len + stride - 1) / stride;

  DualPolWaveform out(len, w.sample_rate);
  DualPolWaveform blk(cfg.block_length, w.sample_rate);
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t start = (b * stride + len - half) % len;
    for (std::size_t t = 0; t < cfg.block_length; ++t) {
      const std::size_t i = (start + t) % len;
      blk.x[t] = w.x[i];
      blk.y[t] = w.y[i];
    }
    const DualPolWaveform res = fn(blk);
    if (res.size() != cfg.block_length) throw std::logic_error("overlap_save: processor changed the block length");
    for (std::size_t t = 0; t < stride && b * stride + t < len; ++t) {
      out.x[b * stride + t] = res.x[half + t];
      out.y[b * stride + t] = res.y[half + t];
    }
  }
  return out;
}

namespace {

CVec resample_one(const CVec& in, std::size_t out_len) {
  const std::size_t n = in.size();
  CVec spec(in);
  fft_inplace(spec);
  CVec out(out_len, Complex{});
  const std::size_t common = std::min(n, out_len);
  // Bins strictly inside both Nyquist limits copy over unchanged.
  const long lo = -static_cast<long>(common / 2) + (common % 2 == 0 ? 1 : 0);
  const long hi = static_cast<long>((common - 1) / 2);
  for (long bin = lo; bin <= hi; ++bin) out[storage_bin(bin, out_len)] = spec[storage_bin(bin, n)];
  if (common % 2 == 0 && common > 0) {
    const long nyq = static_cast<long>(common / 2);
    if (out_len < n) {
      // The two input bins at +-nyq alias onto the single output Nyquist bin.
      out[storage_bin(-nyq, out_len)] = spec[storage_bin(-nyq, n)] + spec[storage_bin(nyq, n)];
    } else if (out_len > n) {
      const Complex v = spec[storage_bin(-nyq, n)];
      out[storage_bin(-nyq, out_len)] = 0.5 * v;
      out[storage_bin(nyq, out_len)] = 0.5 * v;
    } else {
      out[storage_bin(-nyq, out_len)] = spec[storage_bin(-nyq, n)];
    }
  }
  ifft_inplace(out);
  const double scale = static_cast<double>(out_len) / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace

DualPolWaveform resample(const DualPolWaveform& w, std::int64_t p, std::int64_t q, double min_rate_hz) {
  if (p <= 0 || q <= 0) throw std::invalid_argument("resample: p and q must be positive");
  if (std::gcd(p, q) != 1) throw std::invalid_argument("resample: p and q must be coprime");
  const double new_rate = w.sample_rate * static_cast<double>(p) / static_cast<double>(q);
  if (new_rate < min_rate_hz) throw std::invalid_argument("resample: target rate below the signal bandwidth");
  const auto len = static_cast<std::int64_t>(w.size());
  if ((len * p) % q != 0) throw std::invalid_argument("resample: output length is not an integer");
  if (p == 1 && q == 1) return w;
  const auto out_len = static_cast<std::size_t>(len * p / q);
  return DualPolWaveform(resample_one(w.x, out_len), resample_one(w.y, out_len), new_rate);
}

}  // namespace cbdbp
