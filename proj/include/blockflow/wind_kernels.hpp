#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

// D2Q9 collision kernels. The scalar kernel is the reference; SIMD variants
// must produce bit-identical output (same operation order, no FMA
// contraction), which the equivalence tests check.
//
// Velocity ordering: 0 rest, 1 (+1,0), 2 (0,+1), 3 (-1,0), 4 (0,-1),
// 5 (+1,+1), 6 (-1,+1), 7 (-1,-1), 8 (+1,-1).

namespace blockflow::kernels {

inline constexpr int kQ = 9;
inline constexpr std::array<int, kQ> kCx{0, 1, 0, -1, 0, 1, -1, -1, 1};
inline constexpr std::array<int, kQ> kCy{0, 0, 1, 0, -1, 1, 1, -1, -1};
inline constexpr std::array<int, kQ> kOpposite{0, 3, 4, 1, 2, 7, 8, 5, 6};
inline constexpr std::array<double, kQ> kWeight{4.0 / 9,  1.0 / 9,  1.0 / 9,  1.0 / 9, 1.0 / 9,
                                                1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};

struct CollideParams {
  double omega = 1.0;  // 1 / tau
  double gx = 0.0;     // body-force acceleration, lattice units
  double gy = 0.0;
};

/// Reduction over fluid cells of one collision sweep.
struct CollideStats {
  double max_u2 = 0.0;
  double min_rho = 0.0;
  bool finite = true;
};

/// Views of the nine distribution planes plus per-cell outputs.
struct CollideSpan {
  std::array<double*, kQ> f{};
  const std::uint8_t* solid = nullptr;  // 1 = solid, left untouched
  double* rho = nullptr;
  double* ux = nullptr;
  double* uy = nullptr;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// BGK collision with Guo forcing over cells [begin, end). Writes the
/// pre-collision macroscopic fields; solid cells get rho = 1, u = 0.
using CollideFn = CollideStats (*)(const CollideSpan&, const CollideParams&);

CollideStats collide_scalar(const CollideSpan& span, const CollideParams& params);
/// Only callable when the CPU supports AVX2; see isa_supported().
CollideStats collide_avx2(const CollideSpan& span, const CollideParams& params);

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);
bool isa_supported(Isa isa);
/// Best supported ISA, unless BLOCKFLOW_KERNEL=scalar|avx2 or
/// set_isa_override() says otherwise.
Isa active_isa();
void set_isa_override(std::optional<Isa> isa);
CollideFn collide_kernel(Isa isa);

}  // namespace blockflow::kernels
