#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace nachain {

using cplx = std::complex<double>;

namespace detail {
// The FFTW planner is not reentrant; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// Unnormalized real transforms of length n.  forward(): X_m = sum_x x_x e^{-2 pi i m x/n},
// m = 0..n/2.  inverse() is the adjoint, so inverse(forward(x)) = n x.
class RealFFT {
 public:
  explicit RealFFT(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("RealFFT: zero length");
    r_ = fftw_alloc_real(n);
    c_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    // FFTW_ESTIMATE keeps the algorithm choice, and so the rounding, identical across runs.
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), r_, c_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), c_, r_, FFTW_ESTIMATE);
  }
  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;
  ~RealFFT() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(r_);
    fftw_free(c_);
  }

  std::size_t size() const { return n_; }
  std::size_t modes() const { return n_ / 2 + 1; }

  void forward(const double* in, cplx* out) {
    std::memcpy(r_, in, n_ * sizeof(double));
    fftw_execute(fwd_);
    std::memcpy(static_cast<void*>(out), c_, modes() * sizeof(fftw_complex));
  }
  void inverse(const cplx* in, double* out) {
    std::memcpy(c_, static_cast<const void*>(in), modes() * sizeof(fftw_complex));
    fftw_execute(inv_);
    std::memcpy(out, r_, n_ * sizeof(double));
  }

 private:
  std::size_t n_;
  double* r_ = nullptr;
  fftw_complex* c_ = nullptr;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
};

// Unnormalized complex transforms; sign -1 forward, +1 backward.
class ComplexFFT {
 public:
  explicit ComplexFFT(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("ComplexFFT: zero length");
    a_ = fftw_alloc_complex(n);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), a_, a_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(static_cast<int>(n), a_, a_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ComplexFFT(const ComplexFFT&) = delete;
  ComplexFFT& operator=(const ComplexFFT&) = delete;
  ~ComplexFFT() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(a_);
  }

  std::size_t size() const { return n_; }

  void forward(const cplx* in, cplx* out) { run(fwd_, in, out); }
  void backward(const cplx* in, cplx* out) { run(bwd_, in, out); }

 private:
  void run(fftw_plan p, const cplx* in, cplx* out) {
    std::memcpy(a_, static_cast<const void*>(in), n_ * sizeof(fftw_complex));
    fftw_execute(p);
    std::memcpy(static_cast<void*>(out), a_, n_ * sizeof(fftw_complex));
  }

  std::size_t n_;
  fftw_complex* a_ = nullptr;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

}  // namespace nachain
