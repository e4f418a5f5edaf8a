#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace spoofkit::detail {

std::size_t next_pow2(std::size_t n);

// Real-to-complex transform of length n (n/2 + 1 bins) backed by FFTW.
// Plans are created once per size and shared; execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // `in` may be shorter than n; it is zero-padded.
  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) const;
  // Unnormalized inverse (FFTW convention): the result is scaled by n.
  void inverse(std::span<const std::complex<double>> in, std::vector<double>& out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Full linear convolution, length x.size() + h.size() - 1.
std::vector<double> convolve_full(std::span<const double> x, std::span<const double> h);

}  // namespace spoofkit::detail
