#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "nsreg/grid.hpp"

namespace nsreg {

using cplx = std::complex<double>;

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::size_t rs = std::size_t(n) * n * n;
    std::size_t cs = std::size_t(n) * n * (n / 2 + 1);
    std::vector<double> r(rs);
    std::vector<cplx> c(cs);
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_3d(n, n, n, r.data(), cp, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inverse = fftw_plan_dft_c2r_3d(n, n, n, cp, r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_[n] = p;
    return p;
  }

  void set_threads(int threads) {
    std::lock_guard<std::mutex> lock(mu_);
    if (threads == threads_) return;
    clear_locked();
    if (!threads_ready_) {
      fftw_init_threads();
      threads_ready_ = true;
    }
    fftw_plan_with_nthreads(threads);
    threads_ = threads;
  }

  ~PlanCache() { clear_locked(); }

 private:
  void clear_locked() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
    plans_.clear();
  }

  std::mutex mu_;
  std::map<int, PlanPair> plans_;
  int threads_ = 1;
  bool threads_ready_ = false;
};

}  // namespace detail

/// Plans are rebuilt when the count changes; results are reproducible for a fixed count.
inline void set_fft_threads(int threads) { detail::PlanCache::instance().set_threads(threads < 1 ? 1 : threads); }

/// Real samples -> Fourier coefficients normalized by n^3. Nyquist slots are zeroed
/// unless `keep_nyquist` is set (needed for exact circular convolutions).
inline void forward_fft(int n, const double* in, cplx* out, bool keep_nyquist = false) {
  auto p = detail::PlanCache::instance().get(n);
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  const int nz = n / 2 + 1;
  const double scale = 1.0 / (double(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < nz; ++k) {
        cplx& c = out[(std::size_t(i) * n + j) * nz + k];
        if (!keep_nyquist && (i == n / 2 || j == n / 2 || k == n / 2)) c = 0.0;
        else c *= scale;
      }
}

/// Fourier coefficients -> real samples; the input is left untouched.
inline void inverse_fft(int n, const cplx* in, double* out) {
  auto p = detail::PlanCache::instance().get(n);
  std::vector<cplx> scratch(in, in + std::size_t(n) * n * (n / 2 + 1));
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

}  // namespace nsreg
