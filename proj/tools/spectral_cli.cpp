// Command-line front end: runs one analysis pipeline per subcommand and
// writes its CSV/JSON artifacts to the chosen output directory.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 numerical invariant
// failure.

#include "CLI11.hpp"

#include "criteria.hpp"
#include "pipelines.hpp"

#include <cstdio>
#include <string>

namespace {

int exit_code_for(spectral::ErrorKind kind) {
  switch (kind) {
    case spectral::ErrorKind::invalid_argument:
    case spectral::ErrorKind::unsupported_model:
    case spectral::ErrorKind::truncation:
    case spectral::ErrorKind::non_cyclic:
    case spectral::ErrorKind::norm_bound:
    case spectral::ErrorKind::kernel_vector:
      return 1;
    case spectral::ErrorKind::not_normal:
    case spectral::ErrorKind::insufficient_n:
    case spectral::ErrorKind::grid_construction:
      return 2;
  }
  return 1;
}

int run_suite(const std::string& out_dir, std::uint64_t seed, bool quick) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  suite::SuiteRun run = suite::emit_suite_tree(dir, seed, quick);
  run.results.push_back(suite::crit12_determinism(dir, run, seed, quick));

  {
    // Re-append row 12 so acceptance.csv carries all twelve verdicts.
    std::ofstream csv(dir / "acceptance.csv", std::ios::binary | std::ios::app);
    const auto& c = run.results.back();
    std::string detail = c.detail;
    for (auto& ch : detail)
      if (ch == ',') ch = ';';
    csv << c.id << ',' << c.name << ',' << (c.pass ? "true" : "false") << ',' << detail << '\n';
  }

  bool all_pass = true;
  for (const auto& c : run.results) {
    all_pass = all_pass && c.pass;
    std::printf("criterion %02d [%s] %s (%.2f s) -- %s\n", c.id, c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.seconds, c.detail.c_str());
  }
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-stage spectral analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  std::uint64_t seed_override = 0;
  bool quick = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config_path, "TOML run configuration");
    if (config_required) c->required();
    sub->add_option("--out", out_override, "output directory (overrides config)");
    sub->add_option("--seed", seed_override, "RNG seed (overrides config)");
    sub->add_flag("--quick", quick, "cap every stage dimension parameter at 100");
  };

  auto* c_measure = app.add_subcommand("measure", "box masses, discrepancy, spectrum estimate");
  auto* c_isometry = app.add_subcommand("isometry", "polynomial embedding norms vs. reference");
  auto* c_selfadj = app.add_subcommand("selfadjoint", "logarithmic spectrum and generator checks");
  auto* c_kernel = app.add_subcommand("kernel", "kernel operator propagators and bounds");
  auto* c_dirac = app.add_subcommand("dirac", "distribution coefficient vectors and pairings");
  auto* c_suite = app.add_subcommand("suite", "run the full acceptance battery");
  for (auto* sub : {c_measure, c_isometry, c_selfadj, c_kernel, c_dirac}) add_common(sub, true);
  add_common(c_suite, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c_suite->parsed()) {
      std::uint64_t seed = seed_override ? seed_override : 1;
      std::string out = out_override.empty() ? std::string("suite_out") : out_override;
      if (!config_path.empty()) {
        cli::RunConfig cfg = cli::load_config(config_path);
        if (!seed_override) seed = cfg.seed;
        if (out_override.empty()) out = cfg.out;
        quick = quick || cfg.quick;
      }
      return run_suite(out, seed, quick);
    }

    cli::RunConfig cfg = cli::load_config(config_path);
    if (!out_override.empty()) cfg.out = out_override;
    if (seed_override) cfg.seed = seed_override;
    cfg.quick = cfg.quick || quick;

    if (c_measure->parsed()) return cli::cmd_measure(cfg);
    if (c_isometry->parsed()) return cli::cmd_isometry(cfg);
    if (c_selfadj->parsed()) return cli::cmd_selfadjoint(cfg);
    if (c_kernel->parsed()) return cli::cmd_kernel(cfg);
    if (c_dirac->parsed()) return cli::cmd_dirac(cfg);
  } catch (const spectral::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
