// brwmf: command-line front end for the experiment runner.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "brwmf/config.hpp"
#include "brwmf/errors.hpp"
#include "brwmf/experiment.hpp"
#include "brwmf/legendre.hpp"
#include "brwmf/model.hpp"

namespace {

using namespace brwmf;

void print_table(const char* title, const ModelSpec& spec, const Vec& dir) {
  std::printf("# %s (d=%zu, E N = %.6g)\n", title, spec.dim, spec.mean_offspring());
  std::printf("%8s %14s %14s %14s %14s\n", "t", "P~(q)", "|grad P~(q)|", "entropy", "P~*(grad)");
  for (int i = -8; i <= 8; ++i) {
    const double t = 0.25 * i;
    const Vec q = scaled(dir, t);
    const Vec a = grad_log_mgf(spec, q);
    const double p = log_mgf(spec, q);
    const ConjugatePoint cp = conjugate(spec, a);
    std::printf("%8.3f %14.8f %14.8f %14.8f %14.8f%s\n", t, p, norm(a), p - dot(q, a), cp.value,
                cp.converged ? "" : "  (not converged)");
  }
  std::printf("\n");
}

int oracles() {
  print_table("binary_rademacher, q = t", ModelSpec::binary_rademacher(1), {1.0});
  print_table("binary_rademacher, q = t (1, 1)", ModelSpec::binary_rademacher(2), {1.0, 1.0});
  print_table("fixed_fan_discrete m=3, X in {-1, 0, 2}, q = t",
              ModelSpec::fixed_fan_discrete(3, {{-1.0}, {0.0}, {2.0}}, {0.5, 0.3, 0.2}), {1.0});
  print_table("shifted_poisson_gaussian lambda=1 m=0 sigma=1, q = t (1, 0)",
              ModelSpec::shifted_poisson_gaussian(1.0, {0.0, 0.0}, 1.0), {1.0, 0.0});
  return 0;
}

int run(const std::string& path, const CLI::Option* seed_opt, std::uint64_t seed, const CLI::Option* depth_opt,
        std::size_t depth, const CLI::Option* out_opt, const std::string& out, const CLI::Option* threads_opt,
        std::size_t threads) {
  ExperimentConfig c = parse_config(path);
  if (*seed_opt) c.master_seed = seed;
  if (*depth_opt) {
    c.depth = depth;
    c.n_hi = std::min(c.n_hi, depth);
    c.n_lo = std::min(c.n_lo, c.n_hi);
  }
  if (*out_opt) c.output_dir = out;
  if (*threads_opt) c.threads = threads;
  const RunManifest m = run_experiment(c);
  for (const auto& chk : m.checks) {
    std::printf("%-4s %-40s value=%-12.6g threshold=%-12.6g %s\n", chk.passed ? "PASS" : "FAIL", chk.name.c_str(),
                chk.value, chk.threshold, chk.detail.c_str());
  }
  for (const auto& f : m.flagged) std::printf("flag %s\n", f.c_str());
  std::printf("%s: %zu checks, %s%s -> %s\n", m.kind.c_str(), m.checks.size(), m.passed() ? "all passed" : "failures",
              m.complete ? "" : " (incomplete)", (c.output_dir / "manifest.json").string().c_str());
  return m.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk multifractal toolkit"};
  app.set_version_flag("--version", brwmf::toolkit_version());
  app.require_subcommand(1);

  std::string path, out;
  std::uint64_t seed = 0;
  std::size_t depth = 0, threads = 1;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
  run_cmd->add_option("config", path, "YAML config")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override master_seed");
  auto* depth_opt = run_cmd->add_option("--depth", depth, "Override depth")->check(CLI::PositiveNumber);
  auto* out_opt = run_cmd->add_option("--out", out, "Override output directory");
  auto* threads_opt = run_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string check_path;
  auto* check_cmd = app.add_subcommand("check", "Validate a config file without running it");
  check_cmd->add_option("config", check_path, "YAML config")->required()->check(CLI::ExistingFile);

  auto* oracle_cmd = app.add_subcommand("oracles", "Print closed-form tables for the built-in models");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(path, seed_opt, seed, depth_opt, depth, out_opt, out, threads_opt, threads);
    if (*check_cmd) {
      const brwmf::ExperimentConfig c = brwmf::parse_config(check_path);
      std::printf("ok %s kind=%s hash=%s\n", check_path.c_str(), std::string(brwmf::kind_name(c.kind)).c_str(),
                  brwmf::config_hash(c).c_str());
      return 0;
    }
    if (*oracle_cmd) return oracles();
  } catch (const brwmf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
