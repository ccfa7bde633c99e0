#include <cmath>
#include <limits>

#include "brwmf/kernels.hpp"

namespace brwmf::kernels::scalar {

void affine(std::span<const double> columns, std::span<const double> coeffs, double offset, std::span<double> out) {
  const std::size_t n = out.size();
  if (coeffs.empty()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = offset;
    return;
  }
  const double* c0 = columns.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = coeffs[0] * c0[i];
  for (std::size_t j = 1; j < coeffs.size(); ++j) {
    const double* cj = columns.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) out[i] = out[i] + coeffs[j] * cj[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = out[i] + offset;
}

void add_inplace(std::span<double> out, std::span<const double> addend) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += addend[i];
}

double max(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = v > m ? v : m;
  return m;
}

// Neumaier-compensated: the reference should not drift on level-sized sums.
double sum_exp(std::span<const double> values, double shift) {
  double s = 0.0, c = 0.0;
  for (double v : values) {
    const double x = std::exp(v - shift);
    const double t = s + x;
    c += std::fabs(s) >= x ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace brwmf::kernels::scalar
