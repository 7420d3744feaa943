#include "epflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "epflow/error.hpp"

namespace epflow {

namespace {

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": '" + s + "' is not a finite number");
  }
  return v;
}

long to_long(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw ConfigError(key + ": '" + s + "' is not an integer");
  return v;
}

struct Entry {
  std::string section;
  std::string key;
  std::string doc;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

Entry real(const std::string& sec, const std::string& key, const std::string& doc, double& v) {
  const std::string name = sec + "." + key;
  return {sec, key, doc, [&v] { return fmt(v); }, [&v, name](const std::string& s) { v = to_double(name, s); }};
}

Entry integer(const std::string& sec, const std::string& key, const std::string& doc, int& v) {
  const std::string name = sec + "." + key;
  return {sec, key, doc, [&v] { return std::to_string(v); },
          [&v, name](const std::string& s) { v = static_cast<int>(to_long(name, s)); }};
}

Entry text(const std::string& sec, const std::string& key, const std::string& doc,
           std::string& v) {
  return {sec, key, doc, [&v] { return v; }, [&v](const std::string& s) { v = s; }};
}

Entry flag(const std::string& sec, const std::string& key, const std::string& doc, bool& v) {
  const std::string name = sec + "." + key;
  return {sec, key, doc, [&v] { return std::string(v ? "true" : "false"); },
          [&v, name](const std::string& s) {
            if (s == "true") v = true;
            else if (s == "false") v = false;
            else throw ConfigError(name + ": expected true or false, got '" + s + "'");
          }};
}

void shape_entries(std::vector<Entry>& out, const std::string& prefix, Shape& sh) {
  const std::string sec = "perturbation";
  out.push_back({sec, prefix + "_shape", "profile: constant, cosine or sine",
                 [&sh] { return std::string(shape_name(sh.kind)); },
                 [&sh](const std::string& s) { sh.kind = parse_shape(s); }});
  out.push_back(real(sec, prefix + "_amplitude", "amplitude relative to sigma, in [-1, 1]",
                     sh.amplitude));
  out.push_back(integer(sec, prefix + "_mode", "cross-section mode number k >= 0", sh.mode));
}

std::vector<Entry> entries(RunConfig& c) {
  std::vector<Entry> e;
  e.push_back(real("gas", "gamma", "adiabatic exponent, >= 1 (1 is isothermal)", c.gas.gamma));
  e.push_back(real("gas", "k0", "enthalpy reference density, > 0", c.gas.k0));
  e.push_back(real("gas", "rho_floor", "vacuum floor for the density, > 0", c.gas.rho_floor));

  e.push_back(text("nozzle", "resolution", "node counts, cross then axial: NxM or NxMxK",
                   c.nozzle.resolution));
  e.push_back(real("nozzle", "cross_lo", "lower cross-section bound, every cross axis",
                   c.nozzle.cross_lo));
  e.push_back(real("nozzle", "cross_hi", "upper cross-section bound, > cross_lo", c.nozzle.cross_hi));
  e.push_back(real("nozzle", "L", "nozzle length, > 0", c.nozzle.L));

  auto& b = c.background;
  e.push_back(text("background", "mode", "ivp: integrate from (rho0, E0); bvp: shoot for (rho_en, rho_ex)",
                   b.mode));
  e.push_back(real("background", "J0", "mass flux, > 0", b.J0));
  e.push_back(real("background", "rho0", "entrance density (ivp), > 0", b.rho0));
  e.push_back(real("background", "E0", "entrance field (ivp)", b.E0));
  e.push_back(real("background", "rho_en", "entrance density (bvp), > 0", b.rho_en));
  e.push_back(real("background", "rho_ex", "exit density (bvp), > 0", b.rho_ex));
  e.push_back(real("background", "b0", "background charge level, > 0", b.b0));
  e.push_back(real("background", "b_amp", "b(x) = b0 + b_amp sin(pi x / L), |b_amp| < b0", b.b_amp));
  e.push_back(integer("background", "n_steps", "RK4 steps on [0, L], >= 16", b.n_steps));

  auto& p = c.perturbation;
  e.push_back(real("perturbation", "sigma", "data perturbation size, >= 0", p.sigma));
  shape_entries(e, "Phi_en", p.shapes.Phi_en);
  shape_entries(e, "Phi_ex", p.shapes.Phi_ex);
  shape_entries(e, "pex", p.shapes.pex);
  e.push_back(real("perturbation", "B0", "Bernoulli shift relative to sigma, in [-1, 1]", p.shapes.B0));
  shape_entries(e, "b", p.shapes.b);

  auto& it = c.iteration;
  e.push_back(real("iteration", "M", "admissibility ball factor, > 0", it.M));
  e.push_back(integer("iteration", "max_iter", "Picard step limit, >= 1", it.max_iter));
  e.push_back(real("iteration", "tol", "stopping tolerance; 0 selects max(1e-10, 1e-3 sigma h^2)", it.tol));
  e.push_back(real("iteration", "delta1", "admissibility radius; 0 for all three derives them from the background", it.delta1));
  e.push_back(real("iteration", "delta2", "admissibility radius", it.delta2));
  e.push_back(real("iteration", "delta3", "admissibility radius bounding M sigma", it.delta3));
  e.push_back(real("iteration", "alpha", "Hoelder exponent of the reported norms, in (0, 1)", it.alpha));
  e.push_back(integer("iteration", "norm_samples", "node pairs sampled for Hoelder quotients, >= 1",
                      it.norm_samples));

  e.push_back(text("domain_map", "kind", "identity, shear or bulge", c.domain_map.kind));
  e.push_back(real("domain_map", "eps", "deformation amplitude", c.domain_map.eps));

  e.push_back({"sweep", "sigmas", "comma-separated sigma values, each > 0",
               [&c] {
                 std::string s;
                 for (std::size_t k = 0; k < c.sweep.sigmas.size(); ++k) {
                   s += (k ? "," : "") + fmt(c.sweep.sigmas[k]);
                 }
                 return s;
               },
               [&c](const std::string& s) {
                 c.sweep.sigmas.clear();
                 std::stringstream ss(s);
                 std::string item;
                 while (std::getline(ss, item, ',')) {
                   const auto a = item.find_first_not_of(' '), z = item.find_last_not_of(' ');
                   if (a == std::string::npos) throw ConfigError("sweep.sigmas: empty entry");
                   c.sweep.sigmas.push_back(to_double("sweep.sigmas", item.substr(a, z - a + 1)));
                 }
               }});
  e.push_back(integer("sweep", "jobs", "concurrent fixed-point runs, >= 1", c.sweep.jobs));

  e.push_back(text("output", "dir", "output directory", c.output.dir));
  e.push_back(text("output", "format", "field files: csv or vtk", c.output.format));
  e.push_back(flag("output", "snapshots", "write the fields of every Picard iterate", c.output.snapshots));

  e.push_back({"run", "seed", "seed for sampled norms and random test pairs",
               [&c] { return std::to_string(c.run.seed); },
               [&c](const std::string& s) {
                 const long v = to_long("run.seed", s);
                 if (v < 0 || v > 4294967295L) throw ConfigError("run.seed: out of range");
                 c.run.seed = static_cast<unsigned>(v);
               }});
  return e;
}

std::string serialize(const RunConfig& in, bool with_output) {
  RunConfig c = in;
  std::ostringstream os;
  std::string section;
  for (const Entry& e : entries(c)) {
    if (!with_output && e.section == "output") continue;
    if (section != e.section) {
      if (!section.empty()) os << '\n';
      section = e.section;
      os << '[' << section << "]\n";
    }
    os << "; " << e.doc << '\n' << e.key << " = " << e.get() << '\n';
  }
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void RunConfig::validate() const {
  require(gas.gamma >= 1.0, "gas.gamma must be >= 1");
  require(gas.k0 > 0.0, "gas.k0 must be > 0");
  require(gas.rho_floor > 0.0, "gas.rho_floor must be > 0");
  const NozzleSpec spec = nozzle_spec();
  for (int n : spec.nodes) require(n >= 3, "nozzle.resolution needs at least 3 nodes per axis");
  require(nozzle.cross_hi > nozzle.cross_lo, "nozzle.cross_hi must exceed cross_lo");
  require(nozzle.L > 0.0, "nozzle.L must be > 0");
  require(background.mode == "ivp" || background.mode == "bvp", "background.mode must be ivp or bvp");
  require(background.J0 > 0.0, "background.J0 must be > 0");
  require(background.rho0 > 0.0, "background.rho0 must be > 0");
  require(background.rho_en > 0.0 && background.rho_ex > 0.0, "background densities must be > 0");
  require(background.b0 > 0.0, "background.b0 must be > 0");
  require(std::abs(background.b_amp) < background.b0, "background.b_amp must satisfy |b_amp| < b0");
  require(background.n_steps >= 16, "background.n_steps must be >= 16");
  require(perturbation.sigma >= 0.0, "perturbation.sigma must be >= 0");
  const auto& sh = perturbation.shapes;
  for (const Shape* s : {&sh.Phi_en, &sh.Phi_ex, &sh.pex, &sh.b}) {
    require(std::abs(s->amplitude) <= 1.0, "perturbation amplitudes must lie in [-1, 1]");
    require(s->mode >= 0, "perturbation modes must be >= 0");
  }
  require(std::abs(sh.B0) <= 1.0, "perturbation.B0 must lie in [-1, 1]");
  require(iteration.M > 0.0, "iteration.M must be > 0");
  require(iteration.max_iter >= 1, "iteration.max_iter must be >= 1");
  require(iteration.tol >= 0.0, "iteration.tol must be >= 0");
  const bool derived = iteration.delta1 == 0.0 && iteration.delta2 == 0.0 && iteration.delta3 == 0.0;
  const bool given = iteration.delta1 > 0.0 && iteration.delta2 > 0.0 && iteration.delta3 > 0.0;
  require(derived || given, "iteration.delta1..3 must be all 0 or all > 0");
  require(iteration.alpha > 0.0 && iteration.alpha < 1.0, "iteration.alpha must lie in (0, 1)");
  require(iteration.norm_samples >= 1, "iteration.norm_samples must be >= 1");
  parse_map(domain_map.kind);
  require(sweep.sigmas.size() >= 2, "sweep.sigmas needs at least two values");
  for (double s : sweep.sigmas) require(s > 0.0, "sweep.sigmas entries must be > 0");
  require(sweep.jobs >= 1, "sweep.jobs must be >= 1");
  require(!output.dir.empty(), "output.dir must not be empty");
  require(output.format == "csv" || output.format == "vtk", "output.format must be csv or vtk");
}

GasLaw RunConfig::law() const { return GasLaw(gas.gamma, gas.k0, gas.rho_floor); }

NozzleSpec RunConfig::nozzle_spec() const {
  NozzleSpec s;
  try {
    s = NozzleSpec::parse_resolution(nozzle.resolution);
  } catch (const Error& e) {
    throw ConfigError(std::string("nozzle.resolution: ") + e.what());
  }
  s.cross_lo.assign(s.dim - 1, nozzle.cross_lo);
  s.cross_hi.assign(s.dim - 1, nozzle.cross_hi);
  s.L = nozzle.L;
  return s;
}

Profile RunConfig::b_profile() const {
  const double b0 = background.b0, amp = background.b_amp, L = nozzle.L;
  if (amp == 0.0) return [b0](double) { return b0; };
  return [b0, amp, L](double x) { return b0 + amp * std::sin(M_PI * x / L); };
}

OneDParams RunConfig::ode_params() const {
  OneDParams p;
  p.law = law();
  p.J0 = background.J0;
  p.rho0 = background.rho0;
  p.E0 = background.E0;
  p.L = nozzle.L;
  p.b = b_profile();
  if (background.mode == "bvp") {
    ShootOptions o;
    o.n_steps = background.n_steps;
    const ShootResult r =
        shoot_bvp(p.law, p.b, p.L, background.rho_en, background.rho_ex, p.J0, o);
    p.rho0 = background.rho_en;
    p.E0 = r.E0;
  }
  return p;
}

BackgroundSolution RunConfig::build_background() const {
  return integrate_ivp(ode_params(), background.n_steps);
}

IterationConfig RunConfig::iteration_config() const {
  IterationConfig c;
  c.sigma = perturbation.sigma;
  c.M = iteration.M;
  c.max_iter = iteration.max_iter;
  c.tol = iteration.tol;
  if (iteration.delta1 > 0.0) {
    c.deltas = AdmissibilityRadii{iteration.delta1, iteration.delta2, iteration.delta3};
  }
  c.alpha = iteration.alpha;
  c.norm_samples = iteration.norm_samples;
  c.seed = run.seed;
  return c;
}

DomainMap RunConfig::domain(const Nozzle& grid) const {
  return DomainMap(parse_map(domain_map.kind), domain_map.eps, grid);
}

RunConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  std::vector<Entry> table = entries(c);
  for (const auto& [sec, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + sec + "' outside a section");
    for (const auto& [key, value] : body) {
      auto it = std::find_if(table.begin(), table.end(),
                             [&](const Entry& e) { return sec == e.section && key == e.key; });
      if (it == table.end()) throw ConfigError("config: unknown key [" + sec + "] " + key);
      try {
        it->set(value.data());
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("[" + sec + "] " + key + ": " + e.what());
      }
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string serialize_config(const RunConfig& c) { return serialize(c, true); }

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ConfigItem> config_items(const RunConfig& in) {
  RunConfig c = in;
  std::vector<ConfigItem> out;
  for (const Entry& e : entries(c)) out.push_back({e.section, e.key, e.get()});
  return out;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace epflow
