#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tumor/dlcm.hpp"
#include "tumor/pde.hpp"
#include "tumor/radial.hpp"
#include "tumor/stability.hpp"

namespace tumor::experiment {

enum class Command { radial, spectrum, dlcm, pde, modes, fit_effective, sweep };

/// "radial", "spectrum", "dlcm", "pde", "modes", "fit-effective", "sweep".
Command parse_command(const std::string& name);
std::string command_name(Command c);

struct RadialSetup {
  radial::Params params;
  double init_radius = 0.1;
  double t_end = 30.0;
  double dt = 1e-3;
  int record_every = 100;
};

/// Without explicit radii the state is the stationary state of the radial
/// block's oxygen parameters with this block's mu_death.
struct SpectrumSetup {
  bool stationary = true;
  radial::State state;
  double mu_death = 1.35;
  double D_ext = stability::infinite_D;
  double sigma = 0.0;
  double p_ext = 0.0;
  int k_max = 16;
};

/// perturb_eps is relative to init_radius: r = r0 (1 + eps cos(k theta)).
struct DlcmSetup {
  dlcm::Params params;
  double dx = 0.02;
  double t_end = 60.0;
  double sample_dt = 0.25;
  double snapshot_dt = 0.0;  // 0: no snapshots
  int field_update_stride = 1;
  double init_radius = 0.05;
  double necrotic_radius = 0.0;
  int perturb_mode_k = 0;
  double perturb_eps = 0.0;
  long max_events = 0;
};

struct PdeSetup {
  pde::Params params;
  double dx = 0.02;
  double t_end = 30.0;
  double sample_dt = 0.25;
  double snapshot_dt = 0.0;
  double init_radius = 0.1;
  int perturb_mode_k = 0;
  double perturb_eps = 0.0;
};

/// Mode-growth experiment on the DLCM: start at the stationary radii of the
/// radial block (necrotic core included), perturb mode k by eps r_p, fit the
/// growth of a_k about the origin and compare with Lambda(k) at the measured
/// radii, divided by time_scale to convert into DLCM time.
struct ModesSetup {
  int k_min = 1;
  int k_max = 8;
  double eps = 0.05;
  double t_span = 5.0;
  double sample_dt = 0.1;
  double mu_death_eff = 1.35;
  double time_scale = 2.7;
};

struct FitSetup {
  double time_scale = 2.7;  // expected mu_prol / mu_prol_eff, for the report only
};

/// Cartesian product of "section.key" value lists.
struct SweepSetup {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

struct Config {
  std::string model = "pde";  // radial | stability | dlcm | pde
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  int replicates = 1;
  RadialSetup radial;
  SpectrumSetup stability;
  DlcmSetup dlcm;
  PdeSetup pde;
  ModesSetup modes;
  FitSetup fit;
  SweepSetup sweep;
};

/// Parses YAML text. Unknown keys, wrong types and invalid parameters raise
/// ConfigError with the line of the offending node. Overrides "section.key=
/// value" (or "key=value" at top level) are applied before parsing. A
/// manifest written by run() is accepted too (its config block is used).
Config parse_config(const std::string& yaml, const std::vector<std::string>& overrides = {});
Config load_config(const std::filesystem::path& file,
                   const std::vector<std::string>& overrides = {});

/// The command recorded in a manifest.
Command manifest_command(const std::filesystem::path& manifest);

/// Every key with its value, in a form parse_config reads back unchanged.
std::string dump_config(const Config& c);

/// Table 2 defaults.
Config defaults();

/// Named scenarios for the figures: fig4a, fig4b, fig5, fig6, fig7, fig8,
/// fig9-dlcm, fig9-pde, calibration.
std::vector<std::string> preset_names();
Config preset(const std::string& name);

/// TUMOR_WORKERS, else the hardware concurrency (at least 1).
int worker_count();

/// Runs job(0) .. job(n-1) on up to `workers` threads. The first exception
/// (lowest index) is rethrown after all jobs finished.
void parallel_for(int n, int workers, const std::function<void(int)>& job);

struct Summary {
  std::string status = "ok";
  std::string message;
  std::map<std::string, double> values;
};

/// Runs a subcommand and writes its artifacts under c.output: manifest.yaml
/// (command, code_version, seed, config, results), timeseries.csv,
/// snapshots/, spectrum.csv, modes.csv, effective.csv or sweep.csv.
/// Replicate r uses seed + r and writes into rep-<r>/ when replicates > 1.
/// Errors propagate after the manifest records them.
Summary run(Command command, const Config& c);

std::string code_version();

}  // namespace tumor::experiment
