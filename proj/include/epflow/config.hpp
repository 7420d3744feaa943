#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "epflow/domainmap.hpp"
#include "epflow/driver.hpp"
#include "epflow/ode1d.hpp"

namespace epflow {

/// Everything a CLI run needs. Sections of the INI file map onto the nested
/// structs one to one; see `serialize_config` for keys and defaults.
struct RunConfig {
  struct Gas {
    double gamma = 2.0;
    double k0 = 1.0;
    double rho_floor = 1e-8;
  } gas;

  struct NozzleSection {
    std::string resolution = "33x65";
    double cross_lo = 0.0;
    double cross_hi = 1.0;
    double L = 1.0;
  } nozzle;

  struct Background {
    std::string mode = "ivp";  // ivp: (J0, rho0, E0); bvp: (J0, rho_en, rho_ex)
    double J0 = 0.5;
    double rho0 = 1.5;
    double E0 = 0.5;
    double rho_en = 1.5;
    double rho_ex = 2.0;
    double b0 = 1.0;
    double b_amp = 0.0;  // b(x) = b0 + b_amp sin(pi x / L)
    int n_steps = 1024;
  } background;

  struct Perturbation {
    double sigma = 1e-3;
    PerturbationShapes shapes;
  } perturbation;

  struct Iteration {
    double M = 8.0;
    int max_iter = 50;
    double tol = 0.0;
    double delta1 = 0.0;  // 0: from the background
    double delta2 = 0.0;
    double delta3 = 0.0;
    double alpha = 0.5;
    int norm_samples = 2000;
  } iteration;

  struct Map {
    std::string kind = "identity";
    double eps = 0.0;
  } domain_map;

  struct Sweep {
    std::vector<double> sigmas{1e-4, 2e-4, 4e-4, 8e-4};
    int jobs = 1;
  } sweep;

  struct Output {
    std::string dir = "out";
    std::string format = "csv";
    bool snapshots = false;
  } output;

  struct Run {
    unsigned seed = 42;
  } run;

  /// Throws ConfigError naming the first out-of-range entry.
  void validate() const;

  GasLaw law() const;
  NozzleSpec nozzle_spec() const;
  Profile b_profile() const;
  /// Integrates (ivp) or shoots (bvp) the background.
  BackgroundSolution build_background() const;
  /// The ivp parameters; for bvp mode rho0 and E0 are those of the shot.
  OneDParams ode_params() const;
  IterationConfig iteration_config() const;
  DomainMap domain(const Nozzle& grid) const;
};

/// Reads INI text. Unknown sections or keys, malformed numbers and
/// out-of-range values throw ConfigError.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// INI text with every key, each preceded by a comment giving its meaning.
/// Numbers use the shortest round-trip form, so parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& c);

/// FNV-1a 64 of the serialized config without the [output] section, as 16
/// hex digits. Names the output files of a run.
std::string config_hash(const RunConfig& c);

struct ConfigItem {
  std::string section, key, value;
};
/// Every key with its serialized value, in file order.
std::vector<ConfigItem> config_items(const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace epflow
