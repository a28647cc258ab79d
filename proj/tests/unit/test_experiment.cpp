#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tumor/errors.hpp"
#include "tumor/experiment.hpp"

using namespace tumor;
using namespace tumor::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tumorsim-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string message_of(const std::string& yaml, const std::vector<std::string>& ov = {}) {
  try {
    parse_config(yaml, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults encode the standard parameter table") {
  const Config c = defaults();
  const auto& d = c.dlcm.params;
  CHECK(d.mu_death == 0.5);
  CHECK(d.mu_deg == 0.05);
  CHECK(d.kappa_prol == 0.94);
  CHECK(d.kappa_death == 0.93);
  CHECK(d.lambda == 1.0);
  CHECK(d.p_ext == 0.0);
  CHECK(d.D2 == 25.0);
  CHECK(d.D1 == 25.0);
  const auto& p = c.pde.params;
  CHECK(p.mu_prol == 1.0);
  CHECK(p.mu_death == 1.35);
  CHECK(p.kappa_prol == 0.94);
  CHECK(p.kappa_death == 0.93);
  CHECK(p.lambda == 1.15);
  CHECK(p.p_ext == 0.0);
  CHECK(p.rho_thresh == 0.9);
  CHECK(p.omega == 0.025);
  CHECK(c.pde.dx == 0.02);
  CHECK(c.dlcm.dx == 0.02);
  CHECK(std::isinf(c.stability.D_ext));
  CHECK(c.radial.params.lambda == 1.15);
  CHECK(c.radial.params.mu_death == 1.35);
  CHECK(c.pde.init_radius == 0.1);
  CHECK(c.radial.init_radius == 0.1);
  CHECK(c.dlcm.init_radius == 0.05);
}

TEST_CASE("figure presets") {
  CHECK(preset("fig6").pde.params.sigma == 3.2e-3);
  CHECK(preset("fig7").pde.params.sigma == 2e-3);
  CHECK(preset("fig8").pde.params.sigma == 5e-4);
  const Config f5 = preset("fig5");
  CHECK(f5.dlcm.params.sigma == 1e-4);
  CHECK(f5.modes.eps == 0.05);
  CHECK(f5.modes.k_min == 1);
  CHECK(f5.modes.k_max == 8);
  CHECK(f5.replicates == 20);
  const Config f9 = preset("fig9-pde");
  CHECK(f9.pde.params.kappa_death == 0.92);
  CHECK(f9.pde.params.mu_death == 1.0);
  CHECK(f9.pde.params.lambda == 1.1);
  CHECK(f9.sweep.axes.size() == 1);
  CHECK(preset("fig9-dlcm").dlcm.params.kappa_death == 0.92);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const Config c = preset(name);
    CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));
  }
  CHECK_THROWS_AS(preset("fig10"), ConfigError);
}

TEST_CASE("dump and parse round trip every value exactly") {
  Config c = defaults();
  c.pde.params.sigma = 0.1 + 0.2;  // not representable in short decimal
  c.dlcm.params.D1 = 1.0 / 3.0;
  c.stability.stationary = false;
  c.stability.state = {0.1, 0.2, 0.3};
  c.stability.D_ext = 1e6;
  c.pde.params.cutoff = pde::Cutoff::kappa_prol;
  c.pde.params.oxygen_method = pde::OxygenMethod::pseudo_time;
  c.seed = 123456789012345ULL;
  c.sweep.axes = {{"pde.sigma", {"0", "1e-3"}}, {"pde.omega", {"0.01"}}};
  const Config r = parse_config(dump_config(c));
  CHECK(r.pde.params.sigma == c.pde.params.sigma);
  CHECK(r.dlcm.params.D1 == c.dlcm.params.D1);
  CHECK(r.stability.state.r_q == 0.2);
  CHECK_FALSE(r.stability.stationary);
  CHECK(r.stability.D_ext == 1e6);
  CHECK(r.pde.params.cutoff == pde::Cutoff::kappa_prol);
  CHECK(r.pde.params.oxygen_method == pde::OxygenMethod::pseudo_time);
  CHECK(r.seed == c.seed);
  REQUIRE(r.sweep.axes.size() == 2);
  CHECK(r.sweep.axes[0].second[1] == "1e-3");
  CHECK(dump_config(r) == dump_config(c));
}

TEST_CASE("config errors name the line") {
  CHECK(message_of("model: pde\npde:\n  sigma: 1e-3\n  sigmaa: 2\n").find("line 4") == 0);
  CHECK(message_of("model: pde\npde:\n  sigma: 1e-3\n  sigmaa: 2\n").find("pde.sigmaa") !=
        std::string::npos);
  CHECK(message_of("pde:\n  t_end: soon\n").find("line 2") == 0);
  CHECK(message_of("model: lattice\n").find("line 1") == 0);
  CHECK(message_of("seed: 1\nfoo: 2\n").find("line 2") == 0);
  CHECK(message_of("pde:\n  sigma: [1\n").find("line") == 0);
  CHECK(message_of("dlcm: 5\n").find("line 1") == 0);
  CHECK(message_of("modes:\n  k_min: 5\n  k_max: 3\n") != "");
  // rates must be nonnegative
  CHECK(message_of("dlcm:\n  mu_death: -0.5\n") != "");
  CHECK(message_of("pde:\n  lambda_eff: -1\n") != "");
  CHECK(message_of("radial:\n  mu_death: -1\n") != "");
  CHECK(message_of("", {"pde.omega=-1"}).find("--set pde.omega") == 0);
  CHECK(message_of("", {"pde.sigma"}) != "");
  CHECK(message_of("", {"pde.nope=1"}).find("--set pde.nope") == 0);
  CHECK(message_of("pde:\n  consumption_cutoff: kappa_zero\n").find("line 2") == 0);
}

TEST_CASE("overrides win over the file") {
  const Config c = parse_config("seed: 4\npde:\n  sigma: 1e-3\n",
                                {"pde.sigma=5e-4", "seed=9", "dlcm.D1=10"});
  CHECK(c.pde.params.sigma == 5e-4);
  CHECK(c.seed == 9);
  CHECK(c.dlcm.params.D1 == 10.0);
  CHECK(c.dlcm.params.D2 == 25.0);
}

TEST_CASE("commands") {
  for (const char* n : {"radial", "spectrum", "dlcm", "pde", "modes", "fit-effective", "sweep"})
    CHECK(command_name(parse_command(n)) == n);
  CHECK_THROWS_AS(parse_command("plot"), ConfigError);
}

TEST_CASE("worker pool runs every job and rethrows the first failure") {
  std::atomic<int> sum{0};
  parallel_for(100, 4, [&](int i) { sum += i; });
  CHECK(sum == 4950);
  std::atomic<int> ran{0};
  CHECK_THROWS_WITH(parallel_for(10, 3,
                                 [&](int i) {
                                   ++ran;
                                   if (i == 7 || i == 3) throw ConfigError("job " + std::to_string(i));
                                 }),
                    "job 3");
  CHECK(ran == 10);
  ::setenv("TUMOR_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  ::setenv("TUMOR_WORKERS", "zero", 1);
  CHECK_THROWS_AS(worker_count(), ConfigError);
  ::unsetenv("TUMOR_WORKERS");
  CHECK(worker_count() >= 1);
}

TEST_CASE("spectrum run writes the table and a manifest") {
  Config c = defaults();
  c.output = scratch("spectrum");
  c.stability.stationary = false;
  c.stability.state = {0.1, 0.2, 0.3};
  c.stability.mu_death = 5.0;
  c.stability.k_max = 4;
  const Summary s = run(Command::spectrum, c);
  CHECK(s.status == "ok");
  const std::string csv = slurp(c.output / "spectrum.csv");
  CHECK(csv.rfind("k,Lambda,saffman_taylor_term,inner_term,surface_term\n", 0) == 0);
  CHECK(csv.find("\n2,0.816296") != std::string::npos);
  CHECK(manifest_command(c.output / "manifest.yaml") == Command::spectrum);
  const std::string m = slurp(c.output / "manifest.yaml");
  CHECK(m.find("code_version: " + code_version()) != std::string::npos);
  CHECK(m.find("seed: 1") != std::string::npos);
}

TEST_CASE("re-running a manifest reproduces the artifacts byte for byte") {
  Config c = defaults();
  c.output = scratch("replay-a");
  c.seed = 17;
  c.dlcm.t_end = 2.0;
  c.dlcm.snapshot_dt = 1.0;
  c.dlcm.params.sigma = 1e-3;
  c.replicates = 2;
  run(Command::dlcm, c);
  Config again = load_config(c.output / "manifest.yaml", {"output=" + scratch("replay-b").string()});
  CHECK(again.seed == 17);
  CHECK(again.replicates == 2);
  run(manifest_command(c.output / "manifest.yaml"), again);
  for (const char* f : {"rep-0/timeseries.csv", "rep-1/timeseries.csv",
                        "rep-1/snapshots/t0001.0000.csv"}) {
    CAPTURE(f);
    CHECK(slurp(c.output / f) == slurp(again.output / f));
  }
  CHECK(slurp(c.output / "rep-0/timeseries.csv") != slurp(c.output / "rep-1/timeseries.csv"));

  Config pde = defaults();
  pde.output = scratch("replay-pde-a");
  pde.pde.t_end = 0.5;
  run(Command::pde, pde);
  Config pde2 = load_config(pde.output / "manifest.yaml",
                            {"output=" + scratch("replay-pde-b").string()});
  run(Command::pde, pde2);
  CHECK(slurp(pde.output / "timeseries.csv") == slurp(pde2.output / "timeseries.csv"));
}

TEST_CASE("radial run reaches the stationary state") {
  Config c = defaults();
  c.output = scratch("radial");
  c.radial.t_end = 40.0;
  const Summary s = run(Command::radial, c);
  CHECK(s.values.at("final.r_p") == doctest::Approx(s.values.at("stationary.r_p")).epsilon(1e-6));
  CHECK(s.values.at("stationary.eigenvalue") < 0.0);
  CHECK(slurp(c.output / "timeseries.csv").rfind("t,r_n,r_q,r_p,V_n,V_q,V_p\n", 0) == 0);
}

TEST_CASE("sweep runs the cartesian product") {
  Config c = preset("fig4b");
  c.output = scratch("sweep");
  c.sweep.axes.push_back({"stability.D_ext", {"1e6", ".inf"}});
  const Summary s = run(Command::sweep, c);
  CHECK(s.values.at("runs") == 8.0);
  const std::string index = slurp(c.output / "sweep.csv");
  CHECK(index.rfind("run,stability.sigma,stability.D_ext,status\n", 0) == 0);
  CHECK(index.find("run-7,3.2e-3,.inf,ok") != std::string::npos);
  const Config member = load_config(c.output / "run-4" / "manifest.yaml");
  CHECK(member.stability.sigma == 2e-3);
  CHECK(member.stability.D_ext == 1e6);
  CHECK(fs::exists(c.output / "run-4" / "spectrum.csv"));

  Config broken = preset("fig4b");
  broken.output = scratch("sweep-bad");
  broken.sweep.axes = {{"stability.nope", {"1"}}};
  CHECK_THROWS_AS(run(Command::sweep, broken), ConfigError);
  CHECK(slurp(broken.output / "manifest.yaml").find("status: error") != std::string::npos);
}

TEST_CASE("modes run writes the comparison table") {
  Config c = defaults();
  c.output = scratch("modes");
  c.dlcm.params.sigma = 1e-4;
  c.modes.k_min = 2;
  c.modes.k_max = 3;
  c.modes.t_span = 0.6;
  c.replicates = 2;
  const Summary s = run(Command::modes, c);
  const std::string csv = slurp(c.output / "modes.csv");
  CHECK(csv.rfind("k,Lambda_est,stderr,Lambda_analytic\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(fs::exists(c.output / "mode_series" / "k3-rep1.csv"));
  CHECK(slurp(c.output / "mode_series" / "k2-rep0.csv").rfind("t,k,a_k\n", 0) == 0);
  CHECK(std::isfinite(s.values.at("Lambda_analytic.2")));
}
