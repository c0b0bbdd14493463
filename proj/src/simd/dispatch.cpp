#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "llcopt/simd/kernels.hpp"

namespace llcopt::simd {

#if !defined(LLCOPT_HAVE_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool cpu_has_avx2_fma() {
#if defined(LLCOPT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar_kernels();
    case Isa::Avx2:
      return cpu_has_avx2_fma() ? avx2_kernels() : nullptr;
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("LLCOPT_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && table_for(Isa::Avx2) != nullptr) return table_for(Isa::Avx2);
  }
  if (const KernelTable* t = table_for(Isa::Avx2)) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) throw std::runtime_error("ISA not supported on this CPU/build: " + std::string(isa_name(isa)));
  active_slot().store(t, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace llcopt::simd
