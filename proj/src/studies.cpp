#include "ammi/studies.hpp"

#include <algorithm>
#include <cmath>

#include "ammi/analysis.hpp"
#include "ammi/error.hpp"
#include "ammi/freq.hpp"

namespace ammi {

InitMode parse_init_mode(const std::string& s) {
  if (s == "freq") return InitMode::freq;
  if (s == "random") return InitMode::random;
  if (s == "mcmc-short") return InitMode::mcmc_short;
  if (s == "file") return InitMode::file;
  throw ValidationError("unknown init mode '" + s + "' (expected freq, random, mcmc-short or file)");
}

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::freq: return "freq";
    case InitMode::random: return "random";
    case InitMode::mcmc_short: return "mcmc-short";
    case InitMode::file: return "file";
  }
  return "?";
}

ThetaPoint short_run_estimate(const Dataset& data, const ModelConfig& config, std::uint64_t seed,
                              const ShortRunSettings& settings) {
  Rng rng(seed);
  const Dataset sub = subsample_cells(data, settings.keep_fraction, rng);
  ModelConfig c = config;
  c.seed = seed;
  GibbsOptions opt;
  opt.n_chains = 1;
  opt.n_iter = settings.n_iter;
  opt.n_burn = settings.n_burn;
  opt.parallel_chains = false;
  return gibbs_fit(sub, c, opt).posterior_mean();
}

ThetaPoint initial_point(InitMode mode, const Dataset& data, const ModelConfig& config,
                         std::uint64_t seed) {
  switch (mode) {
    case InitMode::freq: return frequentist_fit(data, config.n_components);
    case InitMode::random: {
      Rng rng(seed);
      return random_theta(data.n_genotypes(), data.n_environments(), config.n_components, rng);
    }
    case InitMode::mcmc_short: return short_run_estimate(data, config, seed);
    case InitMode::file: break;
  }
  throw ValidationError("init mode 'file' needs an initial-values file");
}

std::vector<InitTrace> init_study(const SimScenario& scenario, const std::vector<InitMode>& modes,
                                  const ModelConfig& config) {
  const Simulation sim = simulate(scenario);
  const Dataset& data = sim.data;
  const Eigen::MatrixXd truth = model_mean_matrix(sim.truth);
  ModelConfig c = config;
  c.n_components = scenario.n_components();
  c.hyper = default_hyperparams(data);

  auto rmse_pair = [&](auto&& fitted) {
    double so = 0.0;
    for (const auto& o : data.observations()) {
      const double d = fitted(o.genotype, o.environment) - o.response;
      so += d * d;
    }
    double st = 0.0;
    for (int i = 0; i < data.n_genotypes(); ++i)
      for (int j = 0; j < data.n_environments(); ++j) {
        const double d = fitted(i, j) - truth(i, j);
        st += d * d;
      }
    return std::pair{std::sqrt(so / static_cast<double>(data.size())),
                     std::sqrt(st / static_cast<double>(truth.size()))};
  };

  std::vector<InitTrace> out;
  for (InitMode mode : modes) {
    if (mode == InitMode::file) throw ValidationError("init study does not take file starts");
    InitTrace tr;
    tr.mode = mode;
    tr.seed = scenario.seed;
    const ThetaPoint start = initial_point(mode, data, c, scenario.seed + 7919);
    {
      const ExpectationCache c0 = ExpectationCache::from_state(init_state(start, data, c));
      auto [ro, rt] = rmse_pair([&](int i, int j) { return c0.fitted(i, j); });
      tr.points.push_back({0, ro, rt, 0.0});
    }
    FitOptions opt;
    opt.on_sweep = [&](int it, const VariationalState&, const ExpectationCache& cache) {
      auto [ro, rt] = rmse_pair([&](int i, int j) { return cache.fitted(i, j); });
      tr.points.push_back({it, ro, rt, 0.0});
    };
    const FitResult res = fit(data, c, start, opt);
    for (std::size_t k = 0; k < tr.points.size() && k < res.elbo_trace.size(); ++k)
      tr.points[k].elbo = res.elbo_trace[k];
    tr.converged = res.converged;
    for (std::size_t k = 4; k < tr.points.size(); ++k)
      if (tr.points[k].rmse_observed > tr.points[k - 1].rmse_observed + 1e-12)
        tr.non_monotone_after_3 = true;
    out.push_back(std::move(tr));
  }
  return out;
}

BenchmarkSettings smoke_benchmark() { return {4, 100, 50}; }

BenchmarkRow benchmark_scenario(const SimScenario& scenario, const ModelConfig& config,
                                const BenchmarkSettings& settings) {
  const Simulation sim = simulate(scenario);
  ModelConfig c = config;
  c.n_components = scenario.n_components();
  c.hyper = default_hyperparams(sim.data);
  const ThetaPoint start = frequentist_fit(sim.data, c.n_components);

  FitOptions vopt;
  vopt.compute_elbo = false;  // stopping rule uses parameter changes only
  const FitResult vi = fit(sim.data, c, start, vopt);

  GibbsOptions gopt;
  gopt.n_chains = settings.mcmc_chains;
  gopt.n_iter = settings.mcmc_iter;
  gopt.n_burn = settings.mcmc_burn;
  gopt.init = start;
  const PosteriorDraws mc = gibbs_fit(sim.data, c, gopt);

  BenchmarkRow row;
  row.scenario = scenario.name;
  row.n_genotypes = sim.data.n_genotypes();
  row.n_environments = sim.data.n_environments();
  row.n_components = c.n_components;
  row.n = sim.data.size();
  row.vi_seconds = vi.wall_time;
  row.mcmc_seconds = mc.wall_time;
  row.ratio = vi.wall_time > 0.0 ? mc.wall_time / vi.wall_time
                                 : std::numeric_limits<double>::infinity();
  row.vi_iters = vi.n_iter;
  row.vi_converged = vi.converged;
  return row;
}

}  // namespace ammi
