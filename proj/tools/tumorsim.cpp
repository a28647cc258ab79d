#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tumor/errors.hpp"
#include "tumor/experiment.hpp"

namespace ex = tumor::experiment;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Options {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("-c,--config", o.config, "YAML config file or a manifest.yaml to replay");
  sub->add_option("-p,--preset", o.preset, "start from a named scenario instead of the defaults");
  sub->add_option("-s,--set", o.overrides, "override a config key, e.g. pde.sigma=5e-4")
      ->allow_extra_args(false);
  sub->add_option("-o,--output", o.output, "output directory");
  sub->add_option("--seed", o.seed, "base seed; replicate r uses seed + r");
  sub->add_option("-r,--replicates", o.replicates, "number of replicates");
}

ex::Config resolve(const Options& o) {
  std::vector<std::string> ov = o.overrides;
  if (o.output) ov.push_back("output=" + *o.output);
  if (o.seed) ov.push_back("seed=" + std::to_string(*o.seed));
  if (o.replicates) ov.push_back("replicates=" + std::to_string(*o.replicates));
  if (!o.config.empty() && !o.preset.empty())
    throw tumor::ConfigError("--config and --preset are mutually exclusive");
  if (!o.config.empty()) return ex::load_config(o.config, ov);
  const ex::Config base = o.preset.empty() ? ex::defaults() : ex::preset(o.preset);
  return ex::parse_config(ex::dump_config(base), ov);
}

void report(const ex::Summary& s, const ex::Config& c) {
  std::cout << "status: " << s.status << "\n";
  if (!s.message.empty()) std::cout << "message: " << s.message << "\n";
  for (const auto& [k, v] : s.values) std::cout << k << ": " << v << "\n";
  std::cout << "artifacts: " << c.output.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Avascular tumor growth: stochastic lattice model, mean-field PDE, radial model "
               "and dispersion relation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ex::code_version());

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"radial", "integrate the radial model and report its stationary state"},
      {"spectrum", "growth rates Lambda(k) of boundary modes"},
      {"dlcm", "stochastic lattice simulation"},
      {"pde", "mean-field PDE simulation"},
      {"modes", "perturb, simulate, fit and compare mode growth rates"},
      {"fit-effective", "calibrate effective PDE rates from lattice runs"},
      {"sweep", "cartesian parameter sweep over the configured model"},
  };
  Options opt;
  std::string chosen;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, opt);
    sub->callback([&chosen, n = std::string(name)] { chosen = n; });
  }

  std::string preset_name;
  bool list = false;
  CLI::App* pre = app.add_subcommand("preset", "print a named scenario as YAML");
  pre->add_option("name", preset_name, "scenario name");
  pre->add_flag("-l,--list", list, "list scenario names");
  pre->callback([&] { chosen = "preset"; });

  std::string manifest;
  std::optional<std::string> replay_out;
  CLI::App* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest, "manifest.yaml")->required();
  replay->add_option("-o,--output", replay_out, "output directory");
  replay->callback([&] { chosen = "replay"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (chosen == "preset") {
      if (list || preset_name.empty()) {
        for (const auto& n : ex::preset_names()) std::cout << n << "\n";
        return 0;
      }
      std::cout << ex::dump_config(ex::preset(preset_name));
      return 0;
    }
    ex::Command cmd;
    ex::Config cfg;
    if (chosen == "replay") {
      cmd = ex::manifest_command(manifest);
      std::vector<std::string> ov;
      if (replay_out) ov.push_back("output=" + *replay_out);
      cfg = ex::load_config(manifest, ov);
    } else {
      cmd = ex::parse_command(chosen);
      cfg = resolve(opt);
    }
    const ex::Summary s = ex::run(cmd, cfg);
    report(s, cfg);
    return 0;
  } catch (const tumor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const tumor::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const tumor::Error& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
