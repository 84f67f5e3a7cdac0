#pragma once

#include <complex>
#include <cstddef>
#include <new>

namespace somb {

/// Allocator handing out fftw_malloc'd storage so that cached plans (created
/// for SIMD-aligned arrays) may be executed on any field buffer.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t) noexcept;
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p) noexcept;

template <class T>
T* FftwAllocator<T>::allocate(std::size_t n) {
  void* p = fftw_aligned_alloc(n * sizeof(T));
  if (p == nullptr && n != 0) throw std::bad_alloc();
  return static_cast<T*>(p);
}

template <class T>
void FftwAllocator<T>::deallocate(T* p, std::size_t) noexcept {
  fftw_aligned_free(p);
}

enum class FftPlanner { Estimate, Measure };

/// Process-wide planner rigour for plans created after the call. Plans are
/// cached per (shape, batch, direction), so a given process always reuses the
/// same algorithm for the same shape.
void set_fft_planner(FftPlanner planner);
FftPlanner fft_planner();

/// Number of FFTW threads used for plans created after the call.
void set_fft_threads(int threads);

/// Unnormalized in-place batched 2D DFT over `howmany` contiguous nx*ny
/// blocks. sign = -1 is the forward (e^{-i k.x}) kernel.
class FftPlan {
 public:
  FftPlan(int nx, int ny, int howmany, int sign);
  void execute(std::complex<double>* data) const;

 private:
  void* plan_;
};

}  // namespace somb
