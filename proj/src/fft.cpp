#include "somb/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace somb {
namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int, int, int>, fftw_plan> plans;
  FftPlanner planner = FftPlanner::Measure;
  int threads = 1;
  bool threads_initialized = false;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void* fftw_aligned_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fftw_aligned_free(void* p) noexcept { fftw_free(p); }

void set_fft_planner(FftPlanner planner) {
  std::lock_guard lock(cache().mutex);
  cache().planner = planner;
}

FftPlanner fft_planner() {
  std::lock_guard lock(cache().mutex);
  return cache().planner;
}

void set_fft_threads(int threads) {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  threads = std::max(1, threads);
  if (threads > 1 && !c.threads_initialized) {
    fftw_init_threads();
    c.threads_initialized = true;
  }
  c.threads = threads;
}

FftPlan::FftPlan(int nx, int ny, int howmany, int sign) {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  const int flags = c.planner == FftPlanner::Measure ? FFTW_MEASURE : FFTW_ESTIMATE;
  const auto key = std::make_tuple(nx, ny, howmany, sign, flags * 1000 + c.threads);
  if (auto it = c.plans.find(key); it != c.plans.end()) {
    plan_ = it->second;
    return;
  }
  if (c.threads_initialized) fftw_plan_with_nthreads(c.threads);
  const int n = nx * ny;
  // MEASURE overwrites its arrays, so plan on scratch storage.
  auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(n) * howmany);
  int dims[2] = {nx, ny};
  fftw_plan p = fftw_plan_many_dft(2, dims, howmany, scratch, nullptr, 1, n, scratch,
                                   nullptr, 1, n, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                   static_cast<unsigned>(flags));
  fftw_free(scratch);
  c.plans.emplace(key, p);
  plan_ = p;
}

void FftPlan::execute(std::complex<double>* data) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_), d, d);
}

}  // namespace somb
