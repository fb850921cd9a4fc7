#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "mra/cli.hpp"

namespace mra::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"domain", {"dim", "xmin", "xmax", "ymin", "ymax"}},
      {"covariance", {"family", "sigma2", "kappa", "nu", "tau2"}},
      {"mra", {"modulator", "r0", "J", "M", "d0", "layout", "inverse"}},
      {"data", {"source", "path", "grid", "n", "seed"}},
      {"split", {"areal_rows", "areal_cols", "areal_remove", "random_fraction"}},
      {"fit",
       {"init_sigma2", "init_kappa", "init_tau2", "init_nu", "fit_nu", "max_evaluations",
        "max_iterations", "tolerance", "initial_step"}},
      {"predict", {"theta", "training"}},
      {"benchmark", {"methods", "M", "r0", "J", "exact_limit"}},
      {"output", {"dir"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string str(const std::string& section, const std::string& key, const std::string& def) const {
    return raw(section, key).value_or(def);
  }

  double real(const std::string& section, const std::string& key, double def) const {
    const auto v = raw(section, key);
    return v ? to_real(*v, section + "." + key) : def;
  }

  std::optional<double> real_opt(const std::string& section, const std::string& key) const {
    const auto v = raw(section, key);
    if (!v) return std::nullopt;
    return to_real(*v, section + "." + key);
  }

  long long integer(const std::string& section, const std::string& key, long long def) const {
    const auto v = raw(section, key);
    return v ? to_integer(*v, section + "." + key) : def;
  }

  bool flag(const std::string& section, const std::string& key, bool def) const {
    const auto v = raw(section, key);
    if (!v) return def;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(section + "." + key + ": expected true or false, got '" + *v + "'");
  }

  std::vector<std::string> list(const std::string& section, const std::string& key,
                                const std::vector<std::string>& def) const {
    const auto v = raw(section, key);
    if (!v) return def;
    std::vector<std::string> out;
    std::stringstream ss(*v);
    for (std::string item; std::getline(ss, item, ',');) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<int> int_list(const std::string& section, const std::string& key,
                            const std::vector<int>& def) const {
    const auto v = raw(section, key);
    if (!v) return def;
    std::vector<int> out;
    for (const auto& item : list(section, key, {})) {
      out.push_back(static_cast<int>(to_integer(item, section + "." + key)));
    }
    return out;
  }

  static double to_real(const std::string& s, const std::string& what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
      throw ConfigError(what + ": expected a number, got '" + s + "'");
    }
    return value;
  }

  static long long to_integer(const std::string& s, const std::string& what) {
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError(what + ": expected an integer, got '" + s + "'");
    }
    return value;
  }

 private:
  const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
  for (const auto& [section, child] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (child.empty()) throw ConfigError("key '" + section + "' must be inside a section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : child) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string canonical(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[domain]\ndim = " << c.domain.dim << "\nxmin = " << fmt(c.domain.lower[0])
     << "\nxmax = " << fmt(c.domain.upper[0]) << "\nymin = " << fmt(c.domain.lower[1])
     << "\nymax = " << fmt(c.domain.upper[1]) << "\n\n";
  os << "[covariance]\nfamily = " << to_string(c.theta.family) << "\nsigma2 = " << fmt(c.theta.sigma2)
     << "\nkappa = " << fmt(c.theta.kappa) << "\nnu = " << fmt(c.theta.nu)
     << "\ntau2 = " << fmt(c.theta.tau2) << "\n\n";
  os << "[mra]\nmodulator = " << (c.modulator == Modulator::Kind::block ? "block" : "taper")
     << "\nr0 = " << c.r0 << "\nJ = " << c.J << "\nM = " << c.M << "\nd0 = " << fmt(c.taper_d0())
     << "\nlayout = " << to_string(c.layout)
     << "\ninverse = " << (c.inverse ? to_string(*c.inverse) : std::string("auto")) << "\n\n";
  os << "[data]\nsource = " << (c.simulate ? "simulate" : "csv") << "\npath = " << c.csv_path
     << "\ngrid = " << (c.regular_grid ? "regular" : "random") << "\nn = " << c.n
     << "\nseed = " << c.seed << "\n\n";
  os << "[split]\nareal_rows = " << c.areal_rows << "\nareal_cols = " << c.areal_cols
     << "\nareal_remove = " << c.areal_remove << "\nrandom_fraction = " << fmt(c.random_fraction)
     << "\n\n";
  os << "[fit]\ninit_sigma2 = " << fmt(c.init.sigma2) << "\ninit_kappa = " << fmt(c.init.kappa)
     << "\ninit_tau2 = " << fmt(c.init.tau2) << "\ninit_nu = " << fmt(c.init.nu)
     << "\nfit_nu = " << (c.init.fit_nu ? "true" : "false")
     << "\nmax_evaluations = " << c.fit.max_evaluations
     << "\nmax_iterations = " << c.fit.max_iterations << "\ntolerance = " << fmt(c.fit.tolerance)
     << "\ninitial_step = " << fmt(c.fit.initial_step) << "\n\n";
  os << "[predict]\ntheta = " << (c.predict_from_fit ? "fit" : "config")
     << "\ntraining = " << (c.predict_training ? "true" : "false") << "\n\n";
  os << "[benchmark]\nmethods = " << join(c.benchmark.methods) << "\nM = " << join(c.benchmark.M)
     << "\nr0 = " << join(c.benchmark.r0) << "\nJ = " << join(c.benchmark.J)
     << "\nexact_limit = " << c.benchmark.exact_limit << "\n";
  return os.str();
}

template <class F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

double ExperimentConfig::taper_d0() const {
  return d0 ? *d0 : 2.0 * theta.model().effective_range();
}

KnotHierarchy ExperimentConfig::knots() const {
  return build_regular_knots(domain, r0, J, M, layout);
}

Modulator ExperimentConfig::modulator_for(int M_override, int J_override) const {
  const int m = M_override >= 0 ? M_override : M;
  const int j = J_override > 0 ? J_override : J;
  if (modulator == Modulator::Kind::block) return Modulator::block(build_partition_tree(domain, j, m));
  return Modulator::taper({taper_d0(), j, domain.dim});
}

ExperimentConfig parse_config(std::istream& in, const Overrides& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_keys(tree);
  const Reader r(tree);
  ExperimentConfig c;

  c.domain.dim = static_cast<int>(r.integer("domain", "dim", 1));
  c.domain.lower = {r.real("domain", "xmin", 0.0), r.real("domain", "ymin", 0.0)};
  c.domain.upper = {r.real("domain", "xmax", 1.0), r.real("domain", "ymax", 1.0)};
  if (c.domain.dim == 1) c.domain.lower[1] = c.domain.upper[1] = 0.0;
  guarded("domain", [&] {
    if (c.domain.dim == 1) {
      Domain::interval(c.domain.lower[0], c.domain.upper[0]).validate();
    } else {
      c.domain.validate();
    }
    return 0;
  });
  if (c.domain.dim == 1) c.domain = Domain::interval(c.domain.lower[0], c.domain.upper[0]);

  c.theta.family = guarded("covariance.family", [&] {
    return parse_covariance_family(r.str("covariance", "family", "exponential"));
  });
  c.theta.sigma2 = r.real("covariance", "sigma2", 0.95);
  c.theta.kappa = r.real("covariance", "kappa", 0.05);
  c.theta.nu = r.real("covariance", "nu", 0.5);
  c.theta.tau2 = r.real("covariance", "tau2", 0.05);
  guarded("covariance", [&] {
    c.theta.validate();
    c.theta.model().validate();
    return 0;
  });

  const auto mod = r.str("mra", "modulator", "block");
  if (mod == "block") {
    c.modulator = Modulator::Kind::block;
  } else if (mod == "taper") {
    c.modulator = Modulator::Kind::taper;
  } else {
    throw ConfigError("mra.modulator: expected block or taper, got '" + mod + "'");
  }
  c.layout = guarded("mra.layout", [&] { return parse_knot_layout(r.str("mra", "layout", "lattice")); });
  c.J = static_cast<int>(r.integer("mra", "J", 2));
  c.M = static_cast<int>(r.integer("mra", "M", 3));
  c.r0 = static_cast<int>(r.integer("mra", "r0", c.layout == KnotLayout::boundary ? c.J - 1 : 2));
  c.d0 = r.real_opt("mra", "d0");
  if (c.d0 && !(*c.d0 > 0.0)) throw ConfigError("mra.d0 must be > 0");
  if (c.M < 0 || c.r0 < 1) throw ConfigError("mra: need M >= 0 and r0 >= 1");
  const auto inv = r.str("mra", "inverse", "auto");
  if (inv != "auto") c.inverse = guarded("mra.inverse", [&] { return parse_inverse_mode(inv); });
  if (c.inverse == InverseMode::selected && c.modulator == Modulator::Kind::block) {
    throw ConfigError("mra.inverse = selected requires the taper modulator");
  }
  guarded("mra", [&] {
    c.knots();
    c.modulator_for();
    return 0;
  });

  const auto source = r.str("data", "source", "simulate");
  if (source != "simulate" && source != "csv") {
    throw ConfigError("data.source: expected simulate or csv, got '" + source + "'");
  }
  c.simulate = source == "simulate";
  c.csv_path = r.str("data", "path", "");
  if (!c.simulate && c.csv_path.empty()) throw ConfigError("data.path is required for source = csv");
  const auto grid = r.str("data", "grid", "regular");
  if (grid != "regular" && grid != "random") {
    throw ConfigError("data.grid: expected regular or random, got '" + grid + "'");
  }
  c.regular_grid = grid == "regular";
  const auto n = r.integer("data", "n", 1024);
  if (c.simulate && n < 1) throw ConfigError("data.n must be >= 1");
  c.n = static_cast<int>(n);
  const auto seed = r.integer("data", "seed", 1);
  if (seed < 0) throw ConfigError("data.seed must be >= 0");
  c.seed = overrides.seed ? *overrides.seed : static_cast<std::uint64_t>(seed);

  c.areal_rows = static_cast<int>(r.integer("split", "areal_rows", 5));
  c.areal_cols = static_cast<int>(r.integer("split", "areal_cols", 5));
  c.areal_remove = static_cast<int>(r.integer("split", "areal_remove", 3));
  c.random_fraction = r.real("split", "random_fraction", 0.10);
  if (c.areal_rows < 1 || c.areal_cols < 1 || c.areal_remove < 0 ||
      c.areal_remove > c.areal_rows * c.areal_cols) {
    throw ConfigError("split: invalid areal rectangle settings");
  }
  if (!(c.random_fraction >= 0.0 && c.random_fraction < 1.0)) {
    throw ConfigError("split.random_fraction must be in [0, 1)");
  }

  c.init = c.theta;
  c.init.sigma2 = r.real("fit", "init_sigma2", c.theta.sigma2);
  c.init.kappa = r.real("fit", "init_kappa", c.theta.kappa);
  c.init.tau2 = r.real("fit", "init_tau2", c.theta.tau2);
  c.init.nu = r.real("fit", "init_nu", c.theta.nu);
  c.init.fit_nu = r.flag("fit", "fit_nu", false);
  guarded("fit", [&] {
    c.init.validate();
    return 0;
  });
  c.fit.max_evaluations = static_cast<int>(r.integer("fit", "max_evaluations", 500));
  c.fit.max_iterations = static_cast<int>(r.integer("fit", "max_iterations", 10000));
  c.fit.tolerance = r.real("fit", "tolerance", 1e-6);
  c.fit.initial_step = r.real("fit", "initial_step", 0.5);
  c.fit.inverse_mode = c.inverse;
  if (c.fit.max_evaluations < 1 || c.fit.max_iterations < 0 || !(c.fit.tolerance > 0.0) ||
      !(c.fit.initial_step > 0.0)) {
    throw ConfigError("fit: invalid optimizer settings");
  }

  const auto theta = r.str("predict", "theta", "config");
  if (theta != "config" && theta != "fit") {
    throw ConfigError("predict.theta: expected config or fit, got '" + theta + "'");
  }
  c.predict_from_fit = theta == "fit";
  c.predict_training = r.flag("predict", "training", false);

  c.benchmark.methods = r.list("benchmark", "methods", c.benchmark.methods);
  for (const auto& m : c.benchmark.methods) {
    if (m != "block" && m != "taper") throw ConfigError("benchmark.methods: unknown method '" + m + "'");
  }
  c.benchmark.M = r.int_list("benchmark", "M", c.benchmark.M);
  c.benchmark.r0 = r.int_list("benchmark", "r0", c.benchmark.r0);
  c.benchmark.J = r.int_list("benchmark", "J", c.benchmark.J);
  c.benchmark.exact_limit = static_cast<int>(r.integer("benchmark", "exact_limit", 4096));
  for (int m : c.benchmark.M) {
    if (m < 0) throw ConfigError("benchmark.M entries must be >= 0");
  }
  for (int v : c.benchmark.r0) {
    if (v < 1) throw ConfigError("benchmark.r0 entries must be >= 1");
  }
  for (int v : c.benchmark.J) {
    if (v != 2 && v != 4) throw ConfigError("benchmark.J entries must be 2 or 4");
  }

  c.out_dir = overrides.out_dir ? *overrides.out_dir : std::filesystem::path(r.str("output", "dir", "out"));

  c.resolved = canonical(c);
  c.hash = fnv1a_hex(c.resolved);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, overrides);
}

}  // namespace mra::cli
