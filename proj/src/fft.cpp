#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace spoofkit::detail {
namespace {

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T, FftwDeleter>;

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  FftwBuffer<double> real(fftw_alloc_real(n));
  FftwBuffer<fftw_complex> spec(fftw_alloc_complex(n / 2 + 1));
  const int len = static_cast<int>(n);
  PlanPair pair;
  pair.forward = fftw_plan_dft_r2c_1d(len, real.get(), spec.get(), FFTW_ESTIMATE);
  pair.inverse = fftw_plan_dft_c2r_1d(len, spec.get(), real.get(), FFTW_ESTIMATE);
  cache.emplace(n, pair);
  return pair;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  const auto pair = plans_for(n);
  forward_plan_ = pair.forward;
  inverse_plan_ = pair.inverse;
}

void RealFft::forward(std::span<const double> in, std::vector<std::complex<double>>& out) const {
  FftwBuffer<double> real(fftw_alloc_real(n_));
  FftwBuffer<fftw_complex> spec(fftw_alloc_complex(bins()));
  const auto count = std::min(in.size(), n_);
  std::copy_n(in.begin(), count, real.get());
  std::fill(real.get() + count, real.get() + n_, 0.0);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), real.get(), spec.get());
  out.resize(bins());
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {spec.get()[k][0], spec.get()[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::vector<double>& out) const {
  FftwBuffer<double> real(fftw_alloc_real(n_));
  FftwBuffer<fftw_complex> spec(fftw_alloc_complex(bins()));
  for (std::size_t k = 0; k < bins(); ++k) {
    spec.get()[k][0] = in[k].real();
    spec.get()[k][1] = in[k].imag();
  }
  // c2r destroys its input; the scratch copy above absorbs that.
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), spec.get(), real.get());
  out.assign(real.get(), real.get() + n_);
}

std::vector<double> convolve_full(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t out_len = x.size() + h.size() - 1;
  const RealFft fft(next_pow2(out_len));
  std::vector<std::complex<double>> fx, fh;
  fft.forward(x, fx);
  fft.forward(h, fh);
  for (std::size_t k = 0; k < fx.size(); ++k) fx[k] *= fh[k];
  std::vector<double> y;
  fft.inverse(fx, y);
  y.resize(out_len);
  const double scale = 1.0 / static_cast<double>(fft.size());
  for (auto& v : y) v *= scale;
  return y;
}

}  // namespace spoofkit::detail
