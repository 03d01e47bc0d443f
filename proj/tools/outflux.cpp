// outflux extend|solve|verify|bogovskii|ladder|run --config <path> [--seed <u64>] [--out <dir>]
#include "outflux/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace outflux;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int k = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
  cmd->add_option("--seed", o.seed, "root seed, overrides the config");
  cmd->add_option("--out", o.out, "output directory");
}

// Runs stages up to and including `last`; returns the exit code.
int run_until(Run& run, const std::vector<std::string>& stages) {
  for (const auto& s : stages) {
    if (!run.run_stage(s)) {
      const auto& rec = run.manifest().stages.back();
      std::cerr << "outflux: stage " << rec.name << " failed: " << rec.error << "\n";
      run.write_manifest();
      return rec.exit_code;
    }
  }
  return 0;
}

int dispatch(const std::string& command, const Options& o) {
  if (command == "run") {
    const RunManifest m = run_pipeline(o.config, o.out, o.seed);
    for (const auto& s : m.stages)
      std::cout << s.name << ": " << s.status << (s.error.empty() ? "" : " (" + s.error + ")") << "\n";
    std::cout << "manifest: " << o.out << "/manifest.json\n";
    return m.exit_code();
  }
  RunConfig cfg = load_config(o.config);
  if (o.seed) override_seed(cfg, *o.seed);
  Run run(std::move(cfg), o.out, o.config);
  int code = 0;
  if (command == "extend") {
    if ((code = run_until(run, {"extend"}))) return code;
    std::cout << emit_plot_data(run, "ratios") << "\n";
    std::cout << "epsilon " << run.extend_result()->epsilon << "\n";
  } else if (command == "solve") {
    if ((code = run_until(run, {"extend", "solve"}))) return code;
    std::cout << emit_plot_data(run, "field") << "\n";
  } else if (command == "verify") {
    if ((code = run_until(run, {"extend", "solve", "verify"}))) return code;
    std::cout << run.verify_result()->report.dump(2) << "\n";
  } else if (command == "ladder") {
    if ((code = run_until(run, {"extend", "solve", "verify"}))) return code;
    std::cout << emit_plot_data(run, "ladder") << "\n";
  } else if (command == "bogovskii") {
    const auto report = bogovskii_report(run, o.k);
    run.write_json("bogovskii_k" + std::to_string(o.k) + ".json", report);
    std::cout << report.dump(2) << "\n";
  }
  run.write_manifest();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady flow in symmetric domains with one outlet"};
  app.require_subcommand(1);
  Options o;
  for (const char* name : {"extend", "solve", "verify", "ladder", "run"}) {
    add_common(app.add_subcommand(name, std::string(name) + " stage"), o);
  }
  auto* bog = app.add_subcommand("bogovskii", "divergence solve on ladder cell k");
  add_common(bog, o);
  bog->add_option("--k", o.k, "ladder cell index")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, o);
  } catch (const ConfigError& e) {
    std::cerr << "outflux: config error at " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "outflux: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const HypothesisError& e) {
    std::cerr << "outflux: hypothesis failed: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "outflux: numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const NotFoundError& e) {
    std::cerr << "outflux: " << e.what() << "\n";
    return 3;
  }
}
