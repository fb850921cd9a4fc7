#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mra/covariance.hpp"
#include "mra/geometry.hpp"
#include "mra/inference.hpp"
#include "mra/mra.hpp"

namespace mra::cli {

/// Bad configuration or unreadable input; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchmarkGrid {
  std::vector<std::string> methods{"block", "taper"};
  std::vector<int> M{1, 2, 3, 4};
  std::vector<int> r0{2};
  std::vector<int> J{2};
  /// Exact dense likelihood is the gap reference up to this n.
  int exact_limit = 4096;
};

struct ExperimentConfig {
  Domain domain = Domain::unit(1);
  ParameterVector theta{0.95, 0.05, 0.05};

  Modulator::Kind modulator = Modulator::Kind::block;
  int r0 = 2;
  int J = 2;
  int M = 3;
  /// Taper range at level 0; unset means twice the effective range.
  std::optional<double> d0;
  KnotLayout layout = KnotLayout::lattice;
  std::optional<InverseMode> inverse;

  bool simulate = true;
  std::string csv_path;
  bool regular_grid = true;
  int n = 1024;
  std::uint64_t seed = 1;

  int areal_rows = 5;
  int areal_cols = 5;
  int areal_remove = 3;
  double random_fraction = 0.10;

  ParameterVector init{0.95, 0.05, 0.05};
  FitOptions fit;

  bool predict_from_fit = false;
  bool predict_training = false;

  BenchmarkGrid benchmark;

  std::filesystem::path out_dir = "out";
  /// Canonical key = value listing of every resolved setting.
  std::string resolved;
  /// FNV-1a of `resolved`, 16 hex digits.
  std::string hash;

  double taper_d0() const;
  KnotHierarchy knots() const;
  Modulator modulator_for(int M_override = -1, int J_override = -1) const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

/// Parses INI text. Unknown sections or keys, malformed values and
/// inconsistent settings throw ConfigError.
ExperimentConfig parse_config(std::istream& in, const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

std::string fnv1a_hex(const std::string& text);

struct Dataset {
  int dim = 1;
  std::vector<Point> locations;
  Eigen::VectorXd values;
  std::size_t dropped = 0;
};

/// Header row names the columns: x, z (d = 1) or x, y, z (d = 2); other
/// columns are ignored. Lines starting with '#' are skipped. Rows with an
/// empty or NA field in a used column are dropped and counted.
Dataset read_csv(std::istream& in, int dim);
Dataset read_csv(const std::filesystem::path& path, int dim);

/// 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data, const std::string& banner);

Dataset simulate_data(const ExperimentConfig& cfg);
Dataset load_data(const ExperimentConfig& cfg);

enum class SplitRole { train, areal, random };
std::string to_string(SplitRole role);

struct Split {
  std::vector<SplitRole> role;
  /// Rectangles removed for the areal test set (flat row-major indices).
  std::vector<int> removed_cells;

  std::vector<std::size_t> indices(SplitRole r) const;
};

/// Areal test set: every location inside `areal_remove` of the
/// areal_rows x areal_cols equal rectangles (intervals for d = 1). Random
/// test set: `random_fraction * n` of the remaining locations. Both draws
/// are seeded by cfg.seed.
Split make_split(const ExperimentConfig& cfg, const Dataset& data);

struct BenchmarkRow {
  std::string label;
  std::string modulator;
  int r0 = 0;
  int J = 0;
  int M = 0;
  int n = 0;
  int r = 0;
  double seconds = 0.0;
  double log_score = 0.0;
  double gap = 0.0;
  double gap_per_n = 0.0;
  std::string reference;
  std::string status = "ok";
};

/// Exit status for an error escaping a subcommand: 2 for configuration and
/// input errors, 3 for numerical failures. Prints the message to stderr.
int exit_code(std::exception_ptr error);

/// Full command line: subcommand plus --config, --seed, --out, --threads.
int run(int argc, char** argv);

int cmd_simulate(const ExperimentConfig& cfg);
int cmd_fit(const ExperimentConfig& cfg);
int cmd_predict(const ExperimentConfig& cfg);
int cmd_score(const ExperimentConfig& cfg);
int cmd_benchmark(const ExperimentConfig& cfg, int threads);

std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig& cfg, const Dataset& data, int threads);
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows,
                         const std::string& banner);

}  // namespace mra::cli
