#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "brwmf/kernels.hpp"

namespace brwmf::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelSet& scalar_kernels() {
  static const KernelSet k{Isa::Scalar, &scalar::affine, &scalar::add_inplace, &scalar::max, &scalar::sum_exp};
  return k;
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(BRWMF_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelSet& kernels_for(Isa isa) {
  if (!supported(isa)) {
    throw std::runtime_error("kernel variant '" + std::string(isa_name(isa)) + "' is not supported on this CPU");
  }
#if defined(BRWMF_HAVE_AVX2)
  if (isa == Isa::Avx2) {
    static const KernelSet k{Isa::Avx2, &avx2::affine, &avx2::add_inplace, &avx2::max, &avx2::sum_exp};
    return k;
  }
#endif
  return scalar_kernels();
}

namespace {

const KernelSet& select() {
  if (const char* env = std::getenv("BRWMF_KERNEL")) {
    const std::string want(env);
    if (want == "scalar") return scalar_kernels();
    if (want == "avx2") return kernels_for(Isa::Avx2);
    if (want != "auto") throw std::runtime_error("BRWMF_KERNEL must be scalar, avx2 or auto");
  }
  if (supported(Isa::Avx2)) return kernels_for(Isa::Avx2);
  return scalar_kernels();
}

}  // namespace

const KernelSet& active() {
  static const KernelSet& k = select();
  return k;
}

double log_sum_exp(std::span<const double> values, const KernelSet& k) {
  if (values.empty()) return -INFINITY;
  const double m = k.max(values);
  if (!std::isfinite(m)) return m;
  return m + std::log(k.sum_exp(values, m));
}

}  // namespace brwmf::kernels
