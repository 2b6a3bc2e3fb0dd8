#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>

#include "gcflow/bench.hpp"

namespace {

using gcflow::bench::RunConfig;
using gcflow::bench::Scenario;

struct CommonFlags {
  std::string config, scheme, bc, out;
  int levels = 0;
  bool deterministic = false;
  CLI::App* cmd = nullptr;
};

void attach(CLI::App* cmd, CommonFlags& flags) {
  flags.cmd = cmd;
  cmd->add_option("--config", flags.config, "configuration file with key = value lines");
  cmd->add_option("--scheme", flags.scheme, "time discretization")
      ->check(CLI::IsMember({"gcc13", "cgp1"}));
  cmd->add_option("--bc", flags.bc, "boundary treatment")
      ->check(CLI::IsMember({"strong", "nitsche"}));
  cmd->add_option("--levels", flags.levels,
                  "refinement levels (study) or channel mesh level (other runs)");
  cmd->add_option("--out", flags.out, "output directory for the CSV files");
  cmd->add_flag("--deterministic", flags.deterministic,
                "force single-threaded assembly");
}

/// Precedence: scenario defaults, then the config file, then explicit flags.
RunConfig build_config(Scenario scenario, const CommonFlags& flags) {
  RunConfig cfg = gcflow::bench::scenario_defaults(scenario);
  if (flags.cmd->count("--config")) gcflow::bench::apply_config_file(cfg, flags.config);
  cfg.scenario = scenario;  // the subcommand always decides the scenario
  if (flags.cmd->count("--scheme"))
    cfg.scheme = gcflow::forms::scheme_from_name(flags.scheme);
  if (flags.cmd->count("--bc")) cfg.bcMode = gcflow::forms::bc_from_name(flags.bc);
  if (flags.cmd->count("--levels")) {
    if (scenario == Scenario::Converge)
      cfg.levels = flags.levels;
    else
      cfg.level = flags.levels;
  }
  if (flags.cmd->count("--out")) cfg.outDir = flags.out;
  if (flags.deterministic) cfg.deterministic = true;
  return cfg;
}

int run_converge(const CommonFlags& flags) {
  const auto cfg = build_config(Scenario::Converge, flags);
  std::printf("refinement study: scheme=%s bc=%s levels=%d degree=%d nu=%g\n",
              gcflow::forms::scheme_name(cfg.scheme), gcflow::forms::bc_name(cfg.bcMode),
              cfg.levels, cfg.degree, cfg.nu);
  const auto study = gcflow::bench::run_convergence_study(cfg);
  const auto table = study.report.table();
  std::printf("%5s %10s %12s %6s %12s %12s %12s %8s %8s\n", "level", "tau", "h", "dofs",
              "kappa2", "|e_v|L2L2", "|e_p|L2L2", "eoc_v", "eoc_p");
  for (const auto& row : table.rows)
    std::printf("%5g %10.4g %12.6g %6g %12.5g %12.5g %12.5g %8.3g %8.3g\n", row[0],
                row[1], row[2], row[3], row[4], row[5], row[6], row[9], row[10]);
  std::printf("wrote %s/errors.csv and %s/diagnostics.csv\n", cfg.outDir.c_str(),
              cfg.outDir.c_str());
  if (!study.allConverged) {
    std::fprintf(stderr, "warning: at least one level did not converge\n");
    return 1;
  }
  return 0;
}

int run_channel(const CommonFlags& flags) {
  const auto cfg = build_config(Scenario::ChannelCompare, flags);
  std::printf("channel comparison: scheme=%s level=%d tau=%g T=%g nu=%g\n",
              gcflow::forms::scheme_name(cfg.scheme), cfg.level, cfg.tau, cfg.finalTime,
              cfg.nu);
  const auto result = gcflow::bench::run_channel_compare(cfg);
  std::printf("Reynolds number: %.6g\n", result.reynolds);
  std::printf("relative cross-section difference: velocity magnitude %.3e, pressure %.3e\n",
              result.relVelocityDiff, result.relPressureDiff);
  std::printf("kinetic energy at T: strong %.6e, nitsche %.6e\n",
              result.kineticEnergyStrong, result.kineticEnergyNitsche);
  std::printf("max newton iterations per step: %d\n", result.maxNewtonIterations);
  std::printf("wrote %s/crosssection.csv and %s/diagnostics.csv\n", cfg.outDir.c_str(),
              cfg.outDir.c_str());
  return result.completed ? 0 : 1;
}

int run_dfg_cmd(const CommonFlags& flags) {
  const auto cfg = build_config(Scenario::Dfg, flags);
  std::printf(
      "ramped cylinder run (coarse, qualitative): scheme=%s bc=%s level=%d tau=%g "
      "T=%g nu=%g\n",
      gcflow::forms::scheme_name(cfg.scheme), gcflow::forms::bc_name(cfg.bcMode),
      cfg.level, cfg.tau, cfg.finalTime, cfg.nu);
  const auto result = gcflow::bench::run_dfg(cfg);
  std::printf("completed %d steps%s\n", result.steps,
              result.completed ? "" : " (aborted early)");
  if (!result.dragLiftSeries.rows.empty()) {
    const auto& last = result.dragLiftSeries.rows.back();
    const auto& t = result.dragLiftSeries;
    std::printf("final forces: cD=%.6g cL=%.6g at t=%.6g\n", last[t.column("cD")],
                last[t.column("cL")], last[t.column("time")]);
  }
  std::printf("wrote %s/draglift.csv and %s/diagnostics.csv\n", cfg.outDir.c_str(),
              cfg.outDir.c_str());
  return result.completed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incompressible-flow benchmarks for Hermite-in-time Galerkin schemes"};
  app.require_subcommand(1);
  auto* converge =
      app.add_subcommand("converge", "manufactured-solution refinement study");
  auto* channel = app.add_subcommand(
      "channel-compare", "laminar channel flow solved with strong and weak boundaries");
  auto* dfg =
      app.add_subcommand("dfg", "ramped inflow around the cylinder with a force series");
  CommonFlags convergeFlags, channelFlags, dfgFlags;
  attach(converge, convergeFlags);
  attach(channel, channelFlags);
  attach(dfg, dfgFlags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (converge->parsed()) return run_converge(convergeFlags);
    if (channel->parsed()) return run_channel(channelFlags);
    if (dfg->parsed()) return run_dfg_cmd(dfgFlags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
