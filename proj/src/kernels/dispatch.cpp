#include <atomic>
#include <cstdlib>
#include <string>

#include "blockflow/wind_kernels.hpp"

namespace blockflow::kernels {

namespace {

// -1: no override, otherwise an Isa value.
std::atomic<int> g_override{-1};

Isa env_or_best() {
  if (const char* env = std::getenv("BLOCKFLOW_KERNEL")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  const int o = g_override.load();
  if (o >= 0) return static_cast<Isa>(o);
  static const Isa best = env_or_best();
  return best;
}

void set_isa_override(std::optional<Isa> isa) {
  if (isa && !isa_supported(*isa)) isa = Isa::Scalar;
  g_override.store(isa ? static_cast<int>(*isa) : -1);
}

CollideFn collide_kernel(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      if (isa_supported(Isa::Avx2)) return &collide_avx2;
      return &collide_scalar;
    case Isa::Scalar: return &collide_scalar;
  }
  return &collide_scalar;
}

}  // namespace blockflow::kernels
