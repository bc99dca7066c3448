#include <iostream>

#include "CLI11.hpp"
#include "driftguard/experiment.hpp"

int main(int argc, char** argv) {
  using namespace driftguard;
  CLI::App app{"driftguard: checkpointed multi-agent sensitivity analysis sessions"};
  app.require_subcommand(1);

  CommandOptions opt;
  std::string out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment JSON")->required();
    sub->add_option("--out", out, "output directory (DRIFTGUARD_OUT overrides)");
    sub->add_option("--seed-override", seed, "replace the configured seed list with one seed");
    sub->add_flag("--quiet", opt.quiet, "suppress console tables");
  };
  auto* run = app.add_subcommand("run", "run one session per seed and write traces");
  auto* ablate = app.add_subcommand("ablate", "run ablation conditions and write the comparison CSV");
  auto* sessions = app.add_subcommand("sessions", "run sequential sessions sharing archive and policy");
  for (auto* s : {run, ablate, sessions}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), kExitBadConfig);
  }
  if (!out.empty()) opt.out_dir = out;
  for (auto* s : {run, ablate, sessions})
    if (s->count("--seed-override")) opt.seed_override = seed;

  try {
    if (*run) return cmd_run(opt);
    if (*ablate) return cmd_ablate(opt);
    return cmd_sessions(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
}
