#include <algorithm>
#include <cmath>
#include <limits>

#include "blockflow/wind_kernels.hpp"

namespace blockflow::kernels {

// Expression order here is the contract the SIMD kernels mirror; do not
// reassociate.
CollideStats collide_scalar(const CollideSpan& s, const CollideParams& p) {
  CollideStats stats;
  stats.min_rho = std::numeric_limits<double>::infinity();
  const double omega = p.omega;
  const double keep = 1.0 - omega;
  const double src_scale = 1.0 - 0.5 * omega;

  for (std::size_t c = s.begin; c < s.end; ++c) {
    if (s.solid[c]) {
      s.rho[c] = 1.0;
      s.ux[c] = 0.0;
      s.uy[c] = 0.0;
      continue;
    }
    double f[kQ];
    for (int q = 0; q < kQ; ++q) f[q] = s.f[static_cast<std::size_t>(q)][c];

    const double rho = ((((((((f[0] + f[1]) + f[2]) + f[3]) + f[4]) + f[5]) + f[6]) + f[7]) + f[8]);
    const double mx = (((((f[1] - f[3]) + f[5]) - f[6]) - f[7]) + f[8]);
    const double my = (((((f[2] - f[4]) + f[5]) + f[6]) - f[7]) - f[8]);
    const double inv = 1.0 / rho;
    const double ux = (mx * inv) + (0.5 * p.gx);
    const double uy = (my * inv) + (0.5 * p.gy);
    const double fx = rho * p.gx;
    const double fy = rho * p.gy;
    const double u2 = (ux * ux) + (uy * uy);
    const double usq = 1.5 * u2;
    const double uf = (ux * fx) + (uy * fy);

    s.rho[c] = rho;
    s.ux[c] = ux;
    s.uy[c] = uy;
    stats.max_u2 = std::max(stats.max_u2, u2);
    stats.min_rho = std::min(stats.min_rho, rho);
    if (!std::isfinite(rho) || !std::isfinite(u2)) stats.finite = false;

    for (int q = 0; q < kQ; ++q) {
      const double cx = kCx[static_cast<std::size_t>(q)];
      const double cy = kCy[static_cast<std::size_t>(q)];
      const double w = kWeight[static_cast<std::size_t>(q)];
      const double cu = (cx * ux) + (cy * uy);
      const double cf = (cx * fx) + (cy * fy);
      const double feq = (w * rho) * ((((1.0 + (3.0 * cu)) + ((4.5 * cu) * cu)) - usq));
      // Guo source: w·[3(c-u)·F + 9(c·u)(c·F)]
      const double src = (src_scale * w) * ((3.0 * (cf - uf)) + ((9.0 * cu) * cf));
      s.f[static_cast<std::size_t>(q)][c] = ((keep * f[q]) + (omega * feq)) + src;
    }
  }
  if (s.begin == s.end) stats.min_rho = 1.0;
  return stats;
}

}  // namespace blockflow::kernels
