#pragma once

// Dense inner-loop kernels behind the tensor ops.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled in its own translation unit. The active table is
// chosen once per process from CPU features (override with RESAE_SIMD=scalar
// or RESAE_SIMD=avx2). All matrices are row-major and contiguous; the gemm
// kernels accumulate into C.

#include <cstddef>
#include <string_view>

namespace resae::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m,n] += A[m,k] * B[k,n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m,n] += A[m,k] * B[n,k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m,n] += A[k,m]^T * B[k,n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
};

const KernelTable& scalar_kernels();
#if defined(RESAE_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool cpu_supports_avx2();

// Kernel table used by the tensor ops.
const KernelTable& active();
Backend active_backend();
// Switches the process-wide table. Throws std::runtime_error when the
// requested backend is not available on this CPU or build.
void select(Backend backend);

std::string_view backend_name(Backend backend);

}  // namespace resae::simd
