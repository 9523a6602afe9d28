#pragma once

// Thin RAII layer over FFTW's real-to-complex transforms. Planning is not
// thread-safe in FFTW, so plan creation and destruction share one mutex;
// execution on distinct buffers may run concurrently.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "lmf/error.hpp"

namespace lmf::fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <typename T>
FftwBuffer<T> allocate(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw Error("fftw_malloc failed");
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {}
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
  Plan& operator=(Plan&& o) noexcept {
    std::swap(plan_, o.plan_);
    return *this;
  }
  ~Plan() {
    if (plan_) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::size_t good_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

/// |X_k|^2 for k = 0..n/2 of the length-n DFT of `x`.
inline std::vector<double> power_spectrum(std::span<const double> x) {
  const auto n = x.size();
  auto in = allocate<double>(n);
  auto out = allocate<fftw_complex>(n / 2 + 1);
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = Plan(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::copy(x.begin(), x.end(), in.get());
  plan.execute();
  std::vector<double> power(n / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k)
    power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  return power;
}

/// Raw lag sums r(tau) = sum_t x(t) x(t+tau) for tau = 0..max_lag, by
/// zero-padded circular convolution.
inline std::vector<double> lag_sums(std::span<const double> x, std::size_t max_lag) {
  const auto n = x.size();
  const auto size = good_size(n + max_lag + 1);
  auto buf = allocate<double>(size);
  auto spec = allocate<fftw_complex>(size / 2 + 1);
  Plan forward, backward;
  {
    std::lock_guard lock(planner_mutex());
    forward = Plan(fftw_plan_dft_r2c_1d(static_cast<int>(size), buf.get(), spec.get(), FFTW_ESTIMATE));
    backward = Plan(fftw_plan_dft_c2r_1d(static_cast<int>(size), spec.get(), buf.get(), FFTW_ESTIMATE));
  }
  std::copy(x.begin(), x.end(), buf.get());
  std::fill(buf.get() + n, buf.get() + size, 0.0);
  forward.execute();
  for (std::size_t k = 0; k < size / 2 + 1; ++k) {
    spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    spec[k][1] = 0.0;
  }
  backward.execute();
  std::vector<double> sums(max_lag + 1);
  const double scale = 1.0 / static_cast<double>(size);
  for (std::size_t tau = 0; tau <= max_lag && tau < size; ++tau) sums[tau] = buf[tau] * scale;
  return sums;
}

}  // namespace lmf::fft
