#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace brwmf::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Level-wide arithmetic used by the pressure, cascade and spectrum modules.
///
/// `columns` holds `coeffs.size()` coordinate columns of `out.size()` values
/// each, back to back (coordinate-major storage of a level's vectors).
///
/// affine and add_inplace give bit-identical results on every variant.
/// sum_exp may differ from the scalar reference by a few ulps times the
/// accumulation length (different summation order and exp polynomial).
struct KernelSet {
  Isa isa;
  /// out[i] = sum_j coeffs[j] * columns[j][i] + offset, accumulated in j order.
  void (*affine)(std::span<const double> columns, std::span<const double> coeffs, double offset,
                 std::span<double> out);
  /// out[i] += addend[i]
  void (*add_inplace)(std::span<double> out, std::span<const double> addend);
  /// max_i values[i]; -inf for an empty span.
  double (*max)(std::span<const double> values);
  /// sum_i exp(values[i] - shift)
  double (*sum_exp)(std::span<const double> values, double shift);
};

const KernelSet& scalar_kernels();

/// Whether the running CPU can execute the variant.
bool supported(Isa isa);

/// Kernel set for `isa`; throws std::runtime_error when unsupported.
const KernelSet& kernels_for(Isa isa);

/// Variant selected for this process: BRWMF_KERNEL=scalar|avx2 when set,
/// otherwise the widest supported one. Resolved once.
const KernelSet& active();

/// log sum_i exp(values[i]) with a max shift; -inf for an empty span.
double log_sum_exp(std::span<const double> values, const KernelSet& k = active());

namespace scalar {
void affine(std::span<const double> columns, std::span<const double> coeffs, double offset, std::span<double> out);
void add_inplace(std::span<double> out, std::span<const double> addend);
double max(std::span<const double> values);
double sum_exp(std::span<const double> values, double shift);
}  // namespace scalar

#if defined(BRWMF_HAVE_AVX2)
namespace avx2 {
void affine(std::span<const double> columns, std::span<const double> coeffs, double offset, std::span<double> out);
void add_inplace(std::span<double> out, std::span<const double> addend);
double max(std::span<const double> values);
double sum_exp(std::span<const double> values, double shift);
}  // namespace avx2
#endif

}  // namespace brwmf::kernels
