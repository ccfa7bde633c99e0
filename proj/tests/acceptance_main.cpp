// End-to-end acceptance run: one line per criterion, non-zero exit on any failure.
// Usage: brwmf_acceptance [criterion ids...]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "brwmf/acceptance.hpp"

int main(int argc, char** argv) {
  brwmf::AcceptanceOptions opts;
  for (int i = 1; i < argc; ++i) opts.only.push_back(std::atoi(argv[i]));
  opts.scratch_dir /= std::to_string(opts.master_seed);

  int failed = 0;
  for (const auto& r : brwmf::run_acceptance(opts)) {
    char limit[32] = "none";
    if (r.runtime_limit_seconds > 0) std::snprintf(limit, sizeof limit, "%.0fs", r.runtime_limit_seconds);
    std::printf("[%s] criterion %2d %-22s %7.2fs (limit %s)  %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.runtime_seconds, limit, r.detail.c_str());
    std::fflush(stdout);
    failed += !r.passed;
  }
  std::printf("%s\n", failed ? "acceptance: FAILED" : "acceptance: all criteria passed");
  return failed ? 1 : 0;
}
