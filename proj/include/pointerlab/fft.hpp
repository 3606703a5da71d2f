#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

namespace pointerlab::fft {

enum class Direction { Forward, Backward };

namespace detail {

// Plans are created once per (length, batch, direction) and reused through
// fftw's new-array execute interface, which is safe to call concurrently.
class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int howmany, Direction dir) {
    const auto key = std::make_tuple(n, howmany, dir == Direction::Forward);
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::vector<std::complex<double>> in(static_cast<std::size_t>(n) * howmany);
    std::vector<std::complex<double>> out(in.size());
    const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_many_dft(1, &n, howmany,
                                        reinterpret_cast<fftw_complex*>(in.data()), nullptr, 1, n,
                                        reinterpret_cast<fftw_complex*>(out.data()), nullptr, 1, n,
                                        sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

private:
  PlanCache() = default;

  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized batched DFT of `howmany` contiguous length-n signals, out of place.
/// Backward transforms are not divided by n.
inline void transform(const std::complex<double>* in, std::complex<double>* out, int n, int howmany,
                      Direction dir) {
  fftw_plan plan = detail::PlanCache::instance().get(n, howmany, dir);
  // fftw's execute signature is not const-correct; the input is not modified out of place.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace pointerlab::fft
