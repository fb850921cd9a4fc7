#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "json.hpp"
#include "mra/cli.hpp"
#include "mra/oracle.hpp"

using namespace mra;
using namespace mra::cli;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, const Overrides& ov = {}) {
  std::istringstream in(text);
  return parse_config(in, ov);
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mra_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mra");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto c = parse("");
    CHECK(c.theta.sigma2 == 0.95);
    CHECK(c.theta.kappa == 0.05);
    CHECK(c.theta.tau2 == 0.05);
    CHECK(c.areal_rows * c.areal_cols == 25);
    CHECK(c.areal_remove == 3);
    CHECK(c.random_fraction == 0.10);
    CHECK(c.fit.max_evaluations == 500);
    CHECK(c.fit.tolerance == 1e-6);
    CHECK(c.hash.size() == 16);
    CHECK(c.hash == parse("").hash);
    CHECK(c.hash == parse("[data]\nseed = 1\n").hash);
    CHECK(c.hash != parse("[data]\nseed = 2\n").hash);
    CHECK(c.hash != parse("", Overrides{2, std::nullopt}).hash);
    CHECK(c.hash == parse("", Overrides{std::nullopt, fs::path("elsewhere")}).hash);
    CHECK(c.taper_d0() == doctest::Approx(2.0 * 0.05 * std::log(20.0)));
  }
  SUBCASE("resolved text parses back to the same hash") {
    const auto c = parse("[mra]\nmodulator = taper\nd0 = 0.3\nM = 4\n[domain]\ndim = 2\n");
    CHECK(parse(c.resolved).hash == c.hash);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse("[mra]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[nowhere]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("n = 5\n"), ConfigError);
    CHECK_THROWS_AS(parse("[covariance]\nsigma2 = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse("[covariance]\nsigma2 = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[data]\nn = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[data]\nsource = csv\n"), ConfigError);
    CHECK_THROWS_AS(parse("[mra]\ninverse = selected\n"), ConfigError);
    CHECK_THROWS_AS(parse("[mra]\nJ = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("[split]\nareal_remove = 26\n"), ConfigError);
    CHECK_THROWS_AS(parse("[benchmark]\nmethods = block, fsa\n"), ConfigError);
  }
}

TEST_CASE("csv") {
  SUBCASE("round trip is lossless") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    Dataset d;
    d.dim = 2;
    d.values.resize(200);
    for (int i = 0; i < 200; ++i) {
      d.locations.push_back({u(rng), u(rng)});
      d.values[i] = z(rng) * std::pow(10.0, (i % 9) - 4);
    }
    std::stringstream ss;
    write_csv(ss, d, "config_hash=0 seed=0");
    const auto back = read_csv(ss, 2);
    CHECK(back.locations == d.locations);
    CHECK((back.values - d.values).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("missing values are dropped and counted") {
    std::istringstream in("x,z,extra\n0.1,1.5,a\n0.2,NA,b\n0.3,,c\n0.4,2.5,d\n");
    const auto d = read_csv(in, 1);
    CHECK(d.locations.size() == 2);
    CHECK(d.dropped == 2);
    CHECK(d.values[1] == 2.5);
  }
  SUBCASE("diagnostics") {
    std::istringstream bad("x,z\n0.1,1.0\n0.2,oops\n");
    try {
      read_csv(bad, 1);
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("'z'") != std::string::npos);
    }
    std::istringstream nocol("x,value\n0.1,1.0\n");
    CHECK_THROWS_AS(read_csv(nocol, 1), ConfigError);
    std::istringstream ragged("x,z\n0.1\n");
    CHECK_THROWS_AS(read_csv(ragged, 1), ConfigError);
  }
}

TEST_CASE("simulation") {
  const auto c = parse("[data]\nn = 1024\nseed = 1\n");
  const auto d = simulate_data(c);
  CHECK(d.locations.size() == 1024);
  CHECK(d.locations.front().x == 0.5 / 1024);
  const auto again = simulate_data(c);
  CHECK((d.values - again.values).cwiseAbs().maxCoeff() == 0.0);

  const auto dir = scratch("simulate");
  CHECK(run_cli({"simulate", "--config", "/dev/null", "--out", (dir / "a").string()}) == 0);
  CHECK(run_cli({"simulate", "--config", "/dev/null", "--out", (dir / "b").string()}) == 0);
  const auto text = slurp(dir / "a" / "data.csv");
  CHECK(text == slurp(dir / "b" / "data.csv"));
  std::istringstream lines(text);
  std::string banner, header;
  std::getline(lines, banner);
  std::getline(lines, header);
  CHECK(banner == "# config_hash=" + parse("").hash + " seed=1");
  CHECK(header == "x,z");
  CHECK(read_csv(dir / "a" / "data.csv", 1).locations.size() == 1024);
}

TEST_CASE("areal and random split") {
  const auto c = parse("[domain]\ndim = 2\n[data]\nn = 900\nseed = 5\n");
  const auto d = simulate_data(c);
  const auto s = make_split(c, d);
  REQUIRE(s.removed_cells.size() == 3);
  for (std::size_t i = 0; i < d.locations.size(); ++i) {
    const int cell = static_cast<int>(std::floor(d.locations[i].y * 5)) * 5 +
                     static_cast<int>(std::floor(d.locations[i].x * 5));
    const bool removed =
        std::find(s.removed_cells.begin(), s.removed_cells.end(), cell) != s.removed_cells.end();
    CHECK(removed == (s.role[i] == SplitRole::areal));
  }
  // 30 x 30 grid: 36 points per rectangle.
  CHECK(s.indices(SplitRole::areal).size() == 108);
  CHECK(s.indices(SplitRole::random).size() == 90);
  CHECK(s.indices(SplitRole::train).size() == 702);

  const auto all = parse("[split]\nareal_rows = 1\nareal_cols = 1\nareal_remove = 1\n[data]\nn = 10\n");
  CHECK_THROWS_AS(make_split(all, simulate_data(all)), ConfigError);
}

TEST_CASE("score matches in-process inference") {
  const std::string text =
      "[domain]\ndim = 2\n[covariance]\nkappa = 0.1\n[mra]\nr0 = 4\nJ = 4\nM = 2\n[data]\nn = 400\nseed = 2\n";
  const auto dir = scratch("score");
  {
    std::ofstream(dir / "cfg.ini") << text;
  }
  REQUIRE(run_cli({"score", "--config", (dir / "cfg.ini").string(), "--out", (dir / "out").string()}) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "score.json"));

  const auto c = parse(text);
  const auto d = simulate_data(c);
  const auto s = make_split(c, d);
  const auto train = s.indices(SplitRole::train);
  Observations obs;
  for (auto i : train) obs.locations.push_back(d.locations[i]);
  obs.values.resize(static_cast<Eigen::Index>(train.size()));
  for (std::size_t k = 0; k < train.size(); ++k) obs.values[k] = d.values[train[k]];
  obs.noise = Eigen::VectorXd::Constant(obs.values.size(), 0.05);
  const auto prior = build_prior(c.theta.model(), c.knots(), c.modulator_for(), obs.locations);
  const auto post = assemble_posterior(prior, obs);
  CHECK(j["log_score"]["total"].get<double>() == loglikelihood(prior, post, obs));

  const auto areal = s.indices(SplitRole::areal);
  std::vector<Point> SP;
  Eigen::VectorXd y(static_cast<Eigen::Index>(areal.size()));
  for (std::size_t k = 0; k < areal.size(); ++k) {
    SP.push_back(d.locations[areal[k]]);
    y[k] = d.values[areal[k]];
  }
  const auto pred = predict(prior, post, SP);
  const Eigen::VectorXd sd = (pred.sd.array().square() + 0.05).sqrt();
  const auto r = score_predictions(pred.mean, sd, y);
  CHECK(j["areal"]["rmspe"].get<double>() == doctest::Approx(r.rmspe).epsilon(1e-12));
  CHECK(j["areal"]["crps_mean"].get<double>() == doctest::Approx(r.crps_mean).epsilon(1e-12));
  CHECK(j["config_hash"].get<std::string>() == c.hash);
}

TEST_CASE("predict echoes data at training locations when the nugget is small") {
  const std::string text =
      "[covariance]\ntau2 = 1e-6\n[mra]\nlayout = boundary\nJ = 2\nM = 6\n[data]\nn = 64\n"
      "[predict]\ntraining = true\n";
  const auto dir = scratch("predict");
  {
    std::ofstream(dir / "cfg.ini") << text;
  }
  REQUIRE(run_cli({"predict", "--config", (dir / "cfg.ini").string(), "--out", dir.string()}) == 0);
  std::ifstream in(dir / "predictions.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "x,z,mean,sd,set");
  int train = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f[5];
    for (auto& x : f) std::getline(ss, x, ',');
    if (f[4] != "train") continue;
    ++train;
    CHECK(std::abs(std::stod(f[2]) - std::stod(f[1])) <= 1e-3);
  }
  CHECK(train > 0);
}

TEST_CASE("benchmark") {
  SUBCASE("empty grid writes the header only") {
    const auto c = parse("[benchmark]\nmethods =\n[data]\nn = 16\n");
    const auto rows = run_benchmark(c, simulate_data(c), 1);
    CHECK(rows.empty());
    std::ostringstream os;
    write_benchmark_csv(os, rows, "");
    CHECK(os.str() == "label,modulator,r0,J,M,n,r,time_s,log_score,gap,gap_per_n,reference,status\n");
  }
  SUBCASE("M = 1 rows are the FSA baselines") {
    const auto c = parse("[data]\nn = 128\n[benchmark]\nM = 1, 2\n");
    const auto rows = run_benchmark(c, simulate_data(c), 2);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
      CHECK(r.status == "ok");
      CHECK(std::isfinite(r.gap));
      CHECK(r.seconds > 0.0);
      CHECK(r.reference == "exact");
      CHECK(r.label == (r.M == 1 ? "FSA-" : "M-RA-") + r.modulator);
    }
  }
  SUBCASE("exponential with boundary knots is exact end to end") {
    const auto c = parse(
        "[mra]\nlayout = boundary\n[data]\nn = 256\n[benchmark]\nmethods = block\nM = 8\nJ = 2\n");
    const auto rows = run_benchmark(c, simulate_data(c), 1);
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(rows[0].gap) <= 1e-8 * 256);
  }
  SUBCASE("failures are recorded per row") {
    const auto c = parse("[covariance]\ntau2 = 0\n[data]\nn = 32\n[benchmark]\nM = 1\n");
    const auto rows = run_benchmark(c, simulate_data(c), 1);
    for (const auto& r : rows) CHECK(r.status.rfind("error:", 0) == 0);
  }
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  {
    std::ofstream(dir / "bad.ini") << "[mra]\nnonsense = 1\n";
  }
  CHECK(run_cli({"fit", "--config", (dir / "bad.ini").string()}) == 2);
  CHECK(run_cli({"fit"}) == 2);
  CHECK(run_cli({"unknown"}) == 2);
  CHECK(exit_code(std::make_exception_ptr(NotPositiveDefinite("x"))) == 3);
  CHECK(exit_code(std::make_exception_ptr(ConfigError("x"))) == 2);
  CHECK(exit_code(std::make_exception_ptr(std::invalid_argument("x"))) == 2);
  CHECK(exit_code(std::make_exception_ptr(std::runtime_error("x"))) == 3);
}
