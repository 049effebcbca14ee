#include "cbdbp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>

namespace cbdbp {
namespace {

enum class PlanKind { Forward, Backward, RealForward, RealBackward };

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are created once per (kind, size) and never freed.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(PlanKind kind, std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    fftw_plan plan = make(kind, n);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  static fftw_plan make(PlanKind kind, std::size_t n) {
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::Forward:
      case PlanKind::Backward: {
        auto* buf = fftw_alloc_complex(n);
        plan = fftw_plan_dft_1d(len, buf, buf, kind == PlanKind::Forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
        fftw_free(buf);
        break;
      }
      case PlanKind::RealForward: {
        auto* in = fftw_alloc_real(n);
        auto* out = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(len, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::RealBackward: {
        auto* in = fftw_alloc_complex(n / 2 + 1);
        auto* out = fftw_alloc_real(n);
        plan = fftw_plan_dft_c2r_1d(len, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    if (plan == nullptr) throw std::runtime_error("fftw: failed to create plan of size " + std::to_string(n));
    return plan;
  }

  std::mutex mutex_;
  std::map<std::tuple<PlanKind, std::size_t>, fftw_plan> plans_;
};

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

void require_power_of_two(std::size_t n) {
  if (!is_power_of_two(n)) throw std::invalid_argument("dft: length " + std::to_string(n) + " is not a power of two");
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::span<Complex> data) {
  if (data.empty()) return;
  fftw_execute_dft(PlanCache::instance().get(PlanKind::Forward, data.size()), as_fftw(data.data()),
                   as_fftw(data.data()));
}

void ifft_inplace(std::span<Complex> data) {
  if (data.empty()) return;
  fftw_execute_dft(PlanCache::instance().get(PlanKind::Backward, data.size()), as_fftw(data.data()),
                   as_fftw(data.data()));
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

CVec dft(std::span<const Complex> block) {
  require_power_of_two(block.size());
  CVec out(block.begin(), block.end());
  fft_inplace(out);
  return out;
}

CVec idft(std::span<const Complex> spectrum) {
  require_power_of_two(spectrum.size());
  CVec out(spectrum.begin(), spectrum.end());
  ifft_inplace(out);
  return out;
}

CVec rfft(std::span<const double> data) {
  const std::size_t n = data.size();
  CVec out(n / 2 + 1);
  if (n == 0) return out;
  RVec in(data.begin(), data.end());
  fftw_execute_dft_r2c(PlanCache::instance().get(PlanKind::RealForward, n), in.data(), as_fftw(out.data()));
  return out;
}

RVec irfft(std::span<const Complex> half_spectrum, std::size_t n) {
  if (half_spectrum.size() != n / 2 + 1) throw std::invalid_argument("irfft: spectrum size does not match length");
  RVec out(n);
  if (n == 0) return out;
  CVec in(half_spectrum.begin(), half_spectrum.end());  // c2r overwrites its input
  fftw_execute_dft_c2r(PlanCache::instance().get(PlanKind::RealBackward, n), as_fftw(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace cbdbp
