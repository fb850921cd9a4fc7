#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "mra/cli.hpp"
#include "mra/oracle.hpp"

namespace mra::cli {

namespace {

using json = nlohmann::ordered_json;

std::string banner(const ExperimentConfig& cfg) {
  return "config_hash=" + cfg.hash + " seed=" + std::to_string(cfg.seed);
}

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream resolved(cfg.out_dir / "resolved_config.ini");
    resolved << "# " << banner(cfg) << "\n" << cfg.resolved;
  }
  std::ofstream out(cfg.out_dir / name);
  if (!out) throw ConfigError("cannot write " + (cfg.out_dir / name).string());
  return out;
}

void write_json(const ExperimentConfig& cfg, const std::string& name, const json& j) {
  auto out = open_output(cfg, name);
  out << j.dump(2) << '\n';
}

Observations subset(const Dataset& data, const std::vector<std::size_t>& idx, double tau2) {
  Observations o;
  o.values.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    o.locations.push_back(data.locations[idx[k]]);
    o.values[static_cast<Eigen::Index>(k)] = data.values[static_cast<Eigen::Index>(idx[k])];
  }
  o.noise = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(idx.size()), tau2);
  return o;
}

json theta_json(const ParameterVector& t) {
  return {{"sigma2", t.sigma2}, {"kappa", t.kappa}, {"tau2", t.tau2}, {"nu", t.nu}};
}

ParameterVector resolve_theta(const ExperimentConfig& cfg) {
  if (!cfg.predict_from_fit) return cfg.theta;
  const auto path = cfg.out_dir / "fit.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("predict.theta = fit but " + path.string() + " does not exist");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  ParameterVector t = cfg.theta;
  t.sigma2 = j.at("theta").at("sigma2").get<double>();
  t.kappa = j.at("theta").at("kappa").get<double>();
  t.tau2 = j.at("theta").at("tau2").get<double>();
  t.nu = j.at("theta").at("nu").get<double>();
  return t;
}

PriorFactors make_prior(const ExperimentConfig& cfg, const ParameterVector& theta,
                        const std::vector<Point>& S) {
  const auto knots = cfg.knots();
  const auto mod = cfg.modulator_for();
  return cfg.inverse ? build_prior(theta.model(), knots, mod, S, *cfg.inverse)
                     : build_prior(theta.model(), knots, mod, S);
}

struct Prediction {
  std::vector<std::size_t> index;
  std::vector<SplitRole> role;
  PredictionResult result;
  double train_loglik = 0.0;
  std::size_t n_train = 0;
};

Prediction predict_split(const ExperimentConfig& cfg, const ParameterVector& theta, const Dataset& data,
                         const Split& split, bool include_training) {
  const auto train = split.indices(SplitRole::train);
  const auto obs = subset(data, train, theta.tau2);
  const auto prior = make_prior(cfg, theta, obs.locations);
  const auto post = theta.tau2 == 0.0 ? assemble_noiseless(prior, obs.values) : assemble_posterior(prior, obs);
  Prediction p;
  p.n_train = train.size();
  p.train_loglik = loglikelihood(prior, post, obs);
  std::vector<Point> SP;
  for (std::size_t i = 0; i < data.locations.size(); ++i) {
    if (split.role[i] == SplitRole::train && !include_training) continue;
    p.index.push_back(i);
    p.role.push_back(split.role[i]);
    SP.push_back(data.locations[i]);
  }
  p.result = predict(prior, post, SP);
  return p;
}

json score_block(const Prediction& p, const Dataset& data, double tau2, std::optional<SplitRole> which) {
  std::vector<std::size_t> k;
  for (std::size_t t = 0; t < p.index.size(); ++t) {
    if (p.role[t] == SplitRole::train) continue;
    if (!which || p.role[t] == *which) k.push_back(t);
  }
  json j;
  j["n"] = k.size();
  if (k.empty()) {
    j["rmspe"] = nullptr;
    j["crps_mean"] = nullptr;
    return j;
  }
  Eigen::VectorXd mean(static_cast<Eigen::Index>(k.size())), sd(mean.size()), y(mean.size());
  for (std::size_t t = 0; t < k.size(); ++t) {
    const auto e = static_cast<Eigen::Index>(t);
    const auto s = static_cast<Eigen::Index>(k[t]);
    mean[e] = p.result.mean[s];
    sd[e] = std::sqrt(p.result.sd[s] * p.result.sd[s] + tau2);
    y[e] = data.values[static_cast<Eigen::Index>(p.index[k[t]])];
  }
  const auto r = score_predictions(mean, sd, y);
  j["rmspe"] = r.rmspe;
  j["crps_mean"] = r.crps_mean;
  return j;
}

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg) {
  if (!cfg.simulate) throw ConfigError("simulate needs data.source = simulate");
  const auto data = simulate_data(cfg);
  auto out = open_output(cfg, "data.csv");
  write_csv(out, data, banner(cfg));
  std::cout << "wrote " << data.locations.size() << " rows to " << (cfg.out_dir / "data.csv").string()
            << '\n';
  return 0;
}

int cmd_fit(const ExperimentConfig& cfg) {
  const auto data = load_data(cfg);
  const auto split = make_split(cfg, data);
  const auto obs = subset(data, split.indices(SplitRole::train), cfg.init.tau2);
  const auto fit = fit_ml(obs, cfg.knots(), cfg.modulator_for(), cfg.init, cfg.fit);

  json j;
  j["config_hash"] = cfg.hash;
  j["seed"] = cfg.seed;
  j["n_train"] = obs.size();
  j["theta"] = theta_json(fit.theta);
  j["loglik"] = fit.loglik;
  j["init"] = theta_json(cfg.init);
  j["init_loglik"] = fit.trace.front().loglik;
  j["evaluations"] = fit.evaluations;
  j["converged"] = fit.converged;
  j["budget_exhausted"] = fit.budget_exhausted;
  write_json(cfg, "fit.json", j);
  auto trace = open_output(cfg, "trace.csv");
  trace << "# " << banner(cfg) << '\n';
  write_trace_csv(trace, fit.trace);
  std::cout << std::setprecision(6) << "sigma2=" << fit.theta.sigma2 << " kappa=" << fit.theta.kappa
            << " tau2=" << fit.theta.tau2 << " logL=" << fit.loglik << (fit.converged ? "" : " (budget)")
            << '\n';
  return 0;
}

int cmd_predict(const ExperimentConfig& cfg) {
  const auto theta = resolve_theta(cfg);
  const auto data = load_data(cfg);
  const auto split = make_split(cfg, data);
  const auto p = predict_split(cfg, theta, data, split, cfg.predict_training);
  auto out = open_output(cfg, "predictions.csv");
  out << "# " << banner(cfg) << '\n'
      << (data.dim == 1 ? "x,z,mean,sd,set\n" : "x,y,z,mean,sd,set\n") << std::setprecision(17);
  for (std::size_t t = 0; t < p.index.size(); ++t) {
    const auto i = p.index[t];
    const auto e = static_cast<Eigen::Index>(t);
    out << data.locations[i].x << ',';
    if (data.dim == 2) out << data.locations[i].y << ',';
    out << data.values[static_cast<Eigen::Index>(i)] << ',' << p.result.mean[e] << ',' << p.result.sd[e]
        << ',' << to_string(p.role[t]) << '\n';
  }
  std::cout << "wrote " << p.index.size() << " predictions to "
            << (cfg.out_dir / "predictions.csv").string() << '\n';
  return 0;
}

int cmd_score(const ExperimentConfig& cfg) {
  const auto theta = resolve_theta(cfg);
  const auto data = load_data(cfg);
  const auto split = make_split(cfg, data);
  const auto p = predict_split(cfg, theta, data, split, false);
  const auto ls = log_score(p.train_loglik, p.n_train);

  json j;
  j["config_hash"] = cfg.hash;
  j["seed"] = cfg.seed;
  j["theta"] = theta_json(theta);
  j["log_score"] = {{"n", p.n_train}, {"total", ls.total}, {"per_observation", ls.per_observation}};
  j["areal"] = score_block(p, data, theta.tau2, SplitRole::areal);
  j["random"] = score_block(p, data, theta.tau2, SplitRole::random);
  j["test"] = score_block(p, data, theta.tau2, std::nullopt);
  j["areal_cells"] = split.removed_cells;
  write_json(cfg, "score.json", j);
  std::cout << j["areal"].dump() << '\n' << j["random"].dump() << '\n';
  return 0;
}

std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig& cfg, const Dataset& data, int threads) {
  const int n = static_cast<int>(data.locations.size());
  if (n > 65536) throw ConfigError("benchmark is limited to n <= 65536");
  const Observations obs{data.locations, data.values,
                         Eigen::VectorXd::Constant(n, cfg.theta.tau2)};
  const auto model = cfg.theta.model();

  std::vector<BenchmarkRow> rows;
  std::set<std::tuple<std::string, int, int, int>> seen;
  for (const auto& method : cfg.benchmark.methods) {
    for (int J : cfg.benchmark.J) {
      for (int r0 : cfg.benchmark.r0) {
        for (int M : cfg.benchmark.M) {
          const int r = cfg.layout == KnotLayout::boundary ? J - 1 : r0;
          if (!seen.insert({method, J, r, M}).second) continue;
          BenchmarkRow row;
          row.modulator = method;
          row.label = (M == 1 ? "FSA-" : "M-RA-") + method;
          row.r0 = r;
          row.J = J;
          row.M = M;
          row.n = n;
          rows.push_back(row);
        }
      }
    }
  }

  if (rows.empty()) return rows;

  std::vector<double> ll(rows.size(), std::numeric_limits<double>::quiet_NaN());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      try {
        const auto knots = build_regular_knots(cfg.domain, row.r0, row.J, row.M, cfg.layout);
        const auto mod = row.modulator == "block"
                             ? Modulator::block(build_partition_tree(cfg.domain, row.J, row.M))
                             : Modulator::taper({cfg.taper_d0(), row.J, cfg.domain.dim});
        const auto t0 = std::chrono::steady_clock::now();
        const auto prior = cfg.inverse && row.modulator == "taper"
                               ? build_prior(model, knots, mod, obs.locations, *cfg.inverse)
                               : build_prior(model, knots, mod, obs.locations);
        const auto post = assemble_posterior(prior, obs);
        ll[i] = loglikelihood(prior, post, obs);
        const auto t1 = std::chrono::steady_clock::now();
        row.seconds = std::chrono::duration<double>(t1 - t0).count();
        row.r = prior.r();
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, threads); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  double reference = -std::numeric_limits<double>::infinity();
  std::string ref_name = "best";
  if (n <= cfg.benchmark.exact_limit) {
    reference = oracle::dense_gp_loglik(model, obs);
    ref_name = "exact";
  } else {
    for (const double v : ll) {
      if (std::isfinite(v)) reference = std::max(reference, v);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& row = rows[i];
    row.reference = ref_name;
    row.log_score = ll[i];
    const auto g = log_score_gap(ll[i], reference, static_cast<std::size_t>(n));
    row.gap = g.gap();
    row.gap_per_n = g.gap_per_n();
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows,
                         const std::string& banner) {
  if (!banner.empty()) out << "# " << banner << '\n';
  out << "label,modulator,r0,J,M,n,r,time_s,log_score,gap,gap_per_n,reference,status\n"
      << std::setprecision(17);
  for (const auto& r : rows) {
    std::string status = r.status;
    for (auto& ch : status) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << r.label << ',' << r.modulator << ',' << r.r0 << ',' << r.J << ',' << r.M << ',' << r.n << ','
        << r.r << ',' << r.seconds << ',' << r.log_score << ',' << r.gap << ',' << r.gap_per_n << ','
        << r.reference << ',' << status << '\n';
  }
}

int cmd_benchmark(const ExperimentConfig& cfg, int threads) {
  const auto data = load_data(cfg);
  const auto rows = run_benchmark(cfg, data, threads);
  auto out = open_output(cfg, "benchmark.csv");
  write_benchmark_csv(out, rows, banner(cfg));
  std::cout << "wrote " << rows.size() << " benchmark rows to "
            << (cfg.out_dir / "benchmark.csv").string() << '\n';
  return 0;
}

}  // namespace mra::cli
