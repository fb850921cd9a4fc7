#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "mra/cli.hpp"
#include "mra/oracle.hpp"

namespace mra::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool missing(const std::string& f) {
  return f.empty() || f == "NA" || f == "NaN" || f == "nan" || f == "na";
}

// Portable draws from mt19937_64 (distribution objects are implementation-defined).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t below(std::mt19937_64& rng, std::size_t k) { return static_cast<std::size_t>(rng() % k); }

}  // namespace

Dataset read_csv(std::istream& in, int dim) {
  Dataset d;
  d.dim = dim;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split_fields(t);
    break;
  }
  if (header.empty()) throw ConfigError("csv: missing header row");
  std::vector<std::string> wanted = dim == 1 ? std::vector<std::string>{"x", "z"}
                                             : std::vector<std::string>{"x", "y", "z"};
  std::vector<std::size_t> col;
  for (const auto& w : wanted) {
    const auto it = std::find(header.begin(), header.end(), w);
    if (it == header.end()) throw ConfigError("csv: header has no column '" + w + "'");
    col.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split_fields(t);
    if (f.size() != header.size()) {
      throw ConfigError("csv line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    bool drop = false;
    double v[3] = {0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < col.size(); ++k) {
      const auto& s = f[col[k]];
      if (missing(s)) {
        drop = true;
        break;
      }
      std::size_t used = 0;
      try {
        v[k] = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || !std::isfinite(v[k])) {
        throw ConfigError("csv line " + std::to_string(lineno) + ", column '" + wanted[k] +
                          "': cannot parse '" + s + "'");
      }
    }
    if (drop) {
      ++d.dropped;
      continue;
    }
    d.locations.push_back(dim == 1 ? Point{v[0], 0.0} : Point{v[0], v[1]});
    values.push_back(v[dim]);
  }
  d.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (d.dropped > 0) {
    std::cerr << "warning: dropped " << d.dropped << " csv rows with missing values\n";
  }
  return d;
}

Dataset read_csv(const std::filesystem::path& path, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file " + path.string());
  return read_csv(in, dim);
}

void write_csv(std::ostream& out, const Dataset& data, const std::string& banner) {
  if (!banner.empty()) out << "# " << banner << '\n';
  out << (data.dim == 1 ? "x,z\n" : "x,y,z\n") << std::setprecision(17);
  for (std::size_t i = 0; i < data.locations.size(); ++i) {
    out << data.locations[i].x << ',';
    if (data.dim == 2) out << data.locations[i].y << ',';
    out << data.values[static_cast<Eigen::Index>(i)] << '\n';
  }
}

Dataset simulate_data(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("data.n must be >= 1");
  Dataset d;
  d.dim = cfg.domain.dim;
  const auto& D = cfg.domain;
  if (cfg.regular_grid) {
    if (d.dim == 1) {
      for (int i = 0; i < cfg.n; ++i) {
        d.locations.push_back({D.lower[0] + (i + 0.5) / cfg.n * D.extent(0), 0.0});
      }
    } else {
      const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.n))));
      if (k * k != cfg.n) throw ConfigError("data.n must be a perfect square for a regular 2-D grid");
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
          d.locations.push_back({D.lower[0] + (i + 0.5) / k * D.extent(0),
                                 D.lower[1] + (j + 0.5) / k * D.extent(1)});
        }
      }
    }
  } else {
    std::seed_seq seq{cfg.seed, std::uint64_t{2}};
    std::mt19937_64 rng(seq);
    for (int i = 0; i < cfg.n; ++i) {
      const double x = D.lower[0] + uniform01(rng) * D.extent(0);
      const double y = d.dim == 2 ? D.lower[1] + uniform01(rng) * D.extent(1) : 0.0;
      d.locations.push_back({x, y});
    }
  }
  const Eigen::VectorXd noise = Eigen::VectorXd::Constant(cfg.n, cfg.theta.tau2);
  d.values = oracle::sample_gp(cfg.theta.model(), d.locations, noise, cfg.seed);
  return d;
}

Dataset load_data(const ExperimentConfig& cfg) {
  if (cfg.simulate) return simulate_data(cfg);
  auto d = read_csv(cfg.csv_path, cfg.domain.dim);
  if (d.locations.empty()) throw ConfigError("csv: no usable rows in " + cfg.csv_path);
  for (const auto& p : d.locations) {
    if (!cfg.domain.contains(p)) throw ConfigError("csv: location outside the configured domain");
  }
  return d;
}

std::string to_string(SplitRole role) {
  switch (role) {
    case SplitRole::train:
      return "train";
    case SplitRole::areal:
      return "areal";
    case SplitRole::random:
      return "random";
  }
  return "train";
}

std::vector<std::size_t> Split::indices(SplitRole r) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < role.size(); ++i) {
    if (role[i] == r) out.push_back(i);
  }
  return out;
}

Split make_split(const ExperimentConfig& cfg, const Dataset& data) {
  const std::size_t n = data.locations.size();
  std::seed_seq seq{cfg.seed, std::uint64_t{1}};
  std::mt19937_64 rng(seq);
  Split s;
  s.role.assign(n, SplitRole::train);

  const int cells = cfg.areal_rows * cfg.areal_cols;
  std::vector<int> order(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) order[i] = i;
  for (int i = 0; i < cfg.areal_remove; ++i) {
    const auto j = static_cast<std::size_t>(i) + below(rng, static_cast<std::size_t>(cells - i));
    std::swap(order[i], order[j]);
  }
  s.removed_cells.assign(order.begin(), order.begin() + cfg.areal_remove);
  std::sort(s.removed_cells.begin(), s.removed_cells.end());

  const auto& D = cfg.domain;
  auto cell_of = [&](const Point& p) {
    auto bin = [](double v, double lo, double ext, int k) {
      return std::clamp(static_cast<int>(std::floor((v - lo) / ext * k)), 0, k - 1);
    };
    if (D.dim == 1) return bin(p.x, D.lower[0], D.extent(0), cells);
    return bin(p.y, D.lower[1], D.extent(1), cfg.areal_rows) * cfg.areal_cols +
           bin(p.x, D.lower[0], D.extent(0), cfg.areal_cols);
  };
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::binary_search(s.removed_cells.begin(), s.removed_cells.end(), cell_of(data.locations[i]))) {
      s.role[i] = SplitRole::areal;
    } else {
      rest.push_back(i);
    }
  }
  const auto want = std::min(rest.size(), static_cast<std::size_t>(
                                              std::llround(cfg.random_fraction * static_cast<double>(n))));
  for (std::size_t i = 0; i < want; ++i) {
    const auto j = i + below(rng, rest.size() - i);
    std::swap(rest[i], rest[j]);
    s.role[rest[i]] = SplitRole::random;
  }
  if (rest.size() == want) throw ConfigError("split leaves no training data");
  return s;
}

}  // namespace mra::cli
