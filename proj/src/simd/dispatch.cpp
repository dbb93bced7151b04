#include <atomic>
#include <cstdlib>
#include <string>

#include "parafac/error.hpp"
#include "parafac/simd/kernels.hpp"

namespace parafac::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported;
#else
  return false;
#endif
}

const KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return &scalar_kernels();
    case Backend::kAvx2: return cpu_has_avx2_fma() ? avx2_kernels() : nullptr;
    case Backend::kNeon: return neon_kernels();
  }
  return nullptr;
}

Backend initial_backend() {
  if (const char* env = std::getenv("PARAFAC_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Backend::kScalar;
    if (v == "avx2" && backend_available(Backend::kAvx2)) return Backend::kAvx2;
    if (v == "neon" && backend_available(Backend::kNeon)) return Backend::kNeon;
  }
  return detect_backend();
}

struct State {
  std::atomic<Backend> backend{initial_backend()};
  std::atomic<const KernelTable*> table{table_for(backend.load())};
};

State& state() {
  static State s;
  return s;
}

}  // namespace

bool backend_available(Backend backend) { return table_for(backend) != nullptr; }

Backend detect_backend() {
  if (backend_available(Backend::kAvx2)) return Backend::kAvx2;
  if (backend_available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

const KernelTable& kernels() { return *state().table.load(std::memory_order_acquire); }

Backend active_backend() { return state().backend.load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw InvalidInput("SIMD backend '" + std::string(backend_name(backend)) +
                       "' is not available on this machine");
  }
  state().table.store(table_for(backend), std::memory_order_release);
  state().backend.store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

}  // namespace parafac::simd
