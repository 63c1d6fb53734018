#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "blockflow/wind_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace blockflow::kernels {

// Four cells per iteration; mirrors collide_scalar operation for operation.
// Built with -mavx2 but without -mfma so nothing gets fused.
CollideStats collide_avx2(const CollideSpan& s, const CollideParams& p) {
  CollideStats stats;
  stats.min_rho = std::numeric_limits<double>::infinity();

  const double keep_s = 1.0 - p.omega;
  const double src_scale_s = 1.0 - 0.5 * p.omega;
  const __m256d omega = _mm256_set1_pd(p.omega);
  const __m256d keep = _mm256_set1_pd(keep_s);
  const __m256d gx = _mm256_set1_pd(p.gx);
  const __m256d gy = _mm256_set1_pd(p.gy);
  const __m256d half_gx = _mm256_mul_pd(_mm256_set1_pd(0.5), gx);
  const __m256d half_gy = _mm256_mul_pd(_mm256_set1_pd(0.5), gy);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d c1_5 = _mm256_set1_pd(1.5);
  const __m256d c3 = _mm256_set1_pd(3.0);
  const __m256d c4_5 = _mm256_set1_pd(4.5);
  const __m256d c9 = _mm256_set1_pd(9.0);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());

  __m256d vmax_u2 = zero;
  __m256d vmin_rho = inf;
  __m256d nonfinite = zero;

  std::size_t c = s.begin;
  for (; c + 4 <= s.end; c += 4) {
    int solid_word;
    std::memcpy(&solid_word, s.solid + c, sizeof solid_word);
    const __m256i solid_i = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(solid_word));
    const __m256d solid = _mm256_castsi256_pd(_mm256_cmpgt_epi64(solid_i, _mm256_setzero_si256()));
    const int solid_bits = _mm256_movemask_pd(solid);
    if (solid_bits == 0xF) {
      _mm256_storeu_pd(s.rho + c, one);
      _mm256_storeu_pd(s.ux + c, zero);
      _mm256_storeu_pd(s.uy + c, zero);
      continue;
    }

    __m256d f[kQ];
    for (int q = 0; q < kQ; ++q) f[q] = _mm256_loadu_pd(s.f[static_cast<std::size_t>(q)] + c);

    __m256d rho = _mm256_add_pd(f[0], f[1]);
    rho = _mm256_add_pd(rho, f[2]);
    rho = _mm256_add_pd(rho, f[3]);
    rho = _mm256_add_pd(rho, f[4]);
    rho = _mm256_add_pd(rho, f[5]);
    rho = _mm256_add_pd(rho, f[6]);
    rho = _mm256_add_pd(rho, f[7]);
    rho = _mm256_add_pd(rho, f[8]);

    __m256d mx = _mm256_sub_pd(f[1], f[3]);
    mx = _mm256_add_pd(mx, f[5]);
    mx = _mm256_sub_pd(mx, f[6]);
    mx = _mm256_sub_pd(mx, f[7]);
    mx = _mm256_add_pd(mx, f[8]);

    __m256d my = _mm256_sub_pd(f[2], f[4]);
    my = _mm256_add_pd(my, f[5]);
    my = _mm256_add_pd(my, f[6]);
    my = _mm256_sub_pd(my, f[7]);
    my = _mm256_sub_pd(my, f[8]);

    const __m256d inv = _mm256_div_pd(one, rho);
    const __m256d ux = _mm256_add_pd(_mm256_mul_pd(mx, inv), half_gx);
    const __m256d uy = _mm256_add_pd(_mm256_mul_pd(my, inv), half_gy);
    const __m256d fx = _mm256_mul_pd(rho, gx);
    const __m256d fy = _mm256_mul_pd(rho, gy);
    const __m256d u2 = _mm256_add_pd(_mm256_mul_pd(ux, ux), _mm256_mul_pd(uy, uy));
    const __m256d usq = _mm256_mul_pd(c1_5, u2);
    const __m256d uf = _mm256_add_pd(_mm256_mul_pd(ux, fx), _mm256_mul_pd(uy, fy));

    _mm256_storeu_pd(s.rho + c, _mm256_blendv_pd(rho, one, solid));
    _mm256_storeu_pd(s.ux + c, _mm256_blendv_pd(ux, zero, solid));
    _mm256_storeu_pd(s.uy + c, _mm256_blendv_pd(uy, zero, solid));

    vmax_u2 = _mm256_max_pd(vmax_u2, _mm256_blendv_pd(u2, zero, solid));
    vmin_rho = _mm256_min_pd(vmin_rho, _mm256_blendv_pd(rho, inf, solid));
    // Non-finite check: |x| < inf is false for inf and NaN.
    const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(_mm256_and_pd(rho, abs_mask), inf, _CMP_LT_OQ),
                                     _mm256_cmp_pd(_mm256_and_pd(u2, abs_mask), inf, _CMP_LT_OQ));
    nonfinite = _mm256_or_pd(nonfinite, _mm256_andnot_pd(solid, _mm256_andnot_pd(ok, _mm256_castsi256_pd(_mm256_set1_epi64x(-1)))));

    for (int q = 0; q < kQ; ++q) {
      const std::size_t qi = static_cast<std::size_t>(q);
      const __m256d cx = _mm256_set1_pd(static_cast<double>(kCx[qi]));
      const __m256d cy = _mm256_set1_pd(static_cast<double>(kCy[qi]));
      const __m256d w = _mm256_set1_pd(kWeight[qi]);
      const __m256d src_w = _mm256_set1_pd(src_scale_s * kWeight[qi]);
      const __m256d cu = _mm256_add_pd(_mm256_mul_pd(cx, ux), _mm256_mul_pd(cy, uy));
      const __m256d cf = _mm256_add_pd(_mm256_mul_pd(cx, fx), _mm256_mul_pd(cy, fy));
      __m256d poly = _mm256_add_pd(one, _mm256_mul_pd(c3, cu));
      poly = _mm256_add_pd(poly, _mm256_mul_pd(_mm256_mul_pd(c4_5, cu), cu));
      poly = _mm256_sub_pd(poly, usq);
      const __m256d feq = _mm256_mul_pd(_mm256_mul_pd(w, rho), poly);
      const __m256d src = _mm256_mul_pd(
          src_w, _mm256_add_pd(_mm256_mul_pd(c3, _mm256_sub_pd(cf, uf)), _mm256_mul_pd(_mm256_mul_pd(c9, cu), cf)));
      const __m256d post =
          _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(keep, f[q]), _mm256_mul_pd(omega, feq)), src);
      _mm256_storeu_pd(s.f[qi] + c, _mm256_blendv_pd(post, f[q], solid));
    }
  }

  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmax_u2);
  for (double v : lanes) stats.max_u2 = std::max(stats.max_u2, v);
  _mm256_store_pd(lanes, vmin_rho);
  for (double v : lanes) stats.min_rho = std::min(stats.min_rho, v);
  if (_mm256_movemask_pd(nonfinite) != 0) stats.finite = false;

  if (c < s.end) {
    CollideSpan tail = s;
    tail.begin = c;
    const CollideStats t = collide_scalar(tail, p);
    stats.max_u2 = std::max(stats.max_u2, t.max_u2);
    if (t.min_rho < stats.min_rho) stats.min_rho = t.min_rho;
    stats.finite = stats.finite && t.finite;
  }
  if (s.begin == s.end) stats.min_rho = 1.0;
  return stats;
}

}  // namespace blockflow::kernels

#else

namespace blockflow::kernels {

CollideStats collide_avx2(const CollideSpan& s, const CollideParams& p) { return collide_scalar(s, p); }

}  // namespace blockflow::kernels

#endif
