#pragma once

// Batched horizontal DFTs on top of FFTW. Plans are created once per shape and
// executed through the new-array interface, which FFTW documents as thread safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace prandtl::fft {

enum class Direction { Forward, Backward };

namespace detail {

struct PlanKey {
  int rank;
  int n;
  int howmany;
  Direction dir;
  auto operator<=>(const PlanKey&) const = default;
};

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const PlanKey& key) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    int dims[2] = {key.n, key.n};
    const int dist = key.rank == 1 ? key.n : key.n * key.n;
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(dist) * key.howmany);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int sign = key.dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_many_dft(key.rank, dims, key.howmany, buf, nullptr, 1, dist, buf,
                                        nullptr, 1, dist, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fft: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

}  // namespace detail

/// In-place unnormalized DFT of `howmany` contiguous blocks, each an n (rank 1)
/// or n x n (rank 2) array. Forward uses e^{-i...}.
inline void transform(std::span<std::complex<double>> data, int rank, int n, Direction dir) {
  const std::size_t block = rank == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
  if (rank < 1 || rank > 2 || data.size() % block != 0) {
    throw std::invalid_argument("fft: data size is not a multiple of the transform block");
  }
  const int howmany = static_cast<int>(data.size() / block);
  if (howmany == 0) return;
  fftw_plan plan = detail::PlanCache::instance().get({rank, n, howmany, dir});
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace prandtl::fft
