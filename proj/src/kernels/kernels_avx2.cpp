#include <immintrin.h>

#include <cmath>
#include <limits>

#include "brwmf/kernels.hpp"

namespace brwmf::kernels::avx2 {

namespace {

// exp(x) for x <= 0 (values are max-shifted before exponentiation; larger x
// is clamped at 709). Cody-Waite reduction x = k ln2 + r, |r| <= ln2/2, and a
// degree-13 Taylor polynomial; relative error stays within a few ulps.
// Inputs below -708 flush to zero.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.90821492927058770002e-10), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^k through the exponent field; k lies in [-1022, 1023] after clamping.
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i bits = _mm256_cvtepi32_epi64(k32);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

void affine(std::span<const double> columns, std::span<const double> coeffs, double offset, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t d = coeffs.size();
  const __m256d voff = _mm256_set1_pd(offset);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc;
    if (d == 0) {
      acc = voff;
    } else {
      acc = _mm256_mul_pd(_mm256_set1_pd(coeffs[0]), _mm256_loadu_pd(columns.data() + i));
      for (std::size_t j = 1; j < d; ++j) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(coeffs[j]), _mm256_loadu_pd(columns.data() + j * n + i)));
      }
      acc = _mm256_add_pd(acc, voff);
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < n; ++i) {
    double acc = offset;
    if (d > 0) {
      acc = coeffs[0] * columns[i];
      for (std::size_t j = 1; j < d; ++j) acc = acc + coeffs[j] * columns[j * n + i];
      acc = acc + offset;
    }
    out[i] = acc;
  }
}

void add_inplace(std::span<double> out, std::span<const double> addend) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(_mm256_loadu_pd(out.data() + i), _mm256_loadu_pd(addend.data() + i)));
  }
  for (; i < n; ++i) out[i] += addend[i];
}

double max(std::span<const double> values) {
  const std::size_t n = values.size();
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_set1_pd(m);
    for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(values.data() + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    for (double v : lanes) m = v > m ? v : m;
  }
  for (; i < n; ++i) m = values[i] > m ? values[i] : m;
  return m;
}

double sum_exp(std::span<const double> values, double shift) {
  const std::size_t n = values.size();
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(values.data() + i), vs)));
    acc1 = _mm256_add_pd(acc1, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(values.data() + i + 4), vs)));
  }
  if (i + 4 <= n) {
    acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(values.data() + i), vs)));
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += std::exp(values[i] - shift);
  return s;
}

}  // namespace brwmf::kernels::avx2
