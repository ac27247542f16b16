#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "resae/simd/kernels.hpp"

namespace resae::simd {
namespace {

const KernelTable* initial_table() {
  const char* env = std::getenv("RESAE_SIMD");
  const std::string request = env ? env : "";
  if (request == "scalar") return &scalar_kernels();
#if defined(RESAE_HAVE_AVX2)
  if (cpu_supports_avx2()) return &avx2_kernels();
#endif
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& table_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

bool cpu_supports_avx2() {
#if defined(RESAE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *table_slot().load(std::memory_order_acquire); }

Backend active_backend() { return active().backend; }

void select(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      table_slot().store(&scalar_kernels(), std::memory_order_release);
      return;
    case Backend::kAvx2:
#if defined(RESAE_HAVE_AVX2)
      if (cpu_supports_avx2()) {
        table_slot().store(&avx2_kernels(), std::memory_order_release);
        return;
      }
#endif
      throw std::runtime_error("AVX2 kernels are not available on this CPU/build");
  }
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

}  // namespace resae::simd
