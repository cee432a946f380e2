#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ammi/gibbs.hpp"
#include "ammi/model.hpp"
#include "ammi/simulate.hpp"
#include "ammi/vi.hpp"

namespace ammi {

enum class InitMode { freq, random, mcmc_short, file };

InitMode parse_init_mode(const std::string& s);
std::string to_string(InitMode m);

/// Settings of the short Gibbs run behind the "mcmc-short" start.
struct ShortRunSettings {
  double keep_fraction = 0.25;
  int n_iter = 500;
  int n_burn = 250;
};

/// Posterior mean of a single Gibbs chain fitted to a random cell
/// subsample that still touches every genotype and environment.
ThetaPoint short_run_estimate(const Dataset& data, const ModelConfig& config, std::uint64_t seed,
                              const ShortRunSettings& settings = {});

/// Starting point for CAVI. `file` is handled by the caller.
ThetaPoint initial_point(InitMode mode, const Dataset& data, const ModelConfig& config,
                         std::uint64_t seed);

struct TracePoint {
  int iteration = 0;  // 0 is the starting state
  double rmse_observed = 0.0;
  double rmse_truth = 0.0;
  double elbo = 0.0;
};

struct InitTrace {
  InitMode mode = InitMode::freq;
  std::uint64_t seed = 0;
  std::vector<TracePoint> points;
  bool converged = false;
  /// True when rmse_observed rose somewhere after iteration 3.
  bool non_monotone_after_3 = false;
};

/// Fits the scenario once per init mode and records per-sweep in-sample
/// RMSE (against y) and RMSE against the true cell means.
std::vector<InitTrace> init_study(const SimScenario& scenario, const std::vector<InitMode>& modes,
                                  const ModelConfig& config);

struct BenchmarkSettings {
  int mcmc_chains = 4;
  int mcmc_iter = 6000;
  int mcmc_burn = 1000;
};

/// Reduced-iteration settings for quick runs.
BenchmarkSettings smoke_benchmark();

struct BenchmarkRow {
  std::string scenario;
  int n_genotypes = 0;
  int n_environments = 0;
  int n_components = 0;
  std::size_t n = 0;
  double vi_seconds = 0.0;
  double mcmc_seconds = 0.0;
  double ratio = 0.0;
  int vi_iters = 0;
  bool vi_converged = false;
};

/// Times CAVI and the Gibbs sampler from the same frequentist start.
BenchmarkRow benchmark_scenario(const SimScenario& scenario, const ModelConfig& config,
                                const BenchmarkSettings& settings);

}  // namespace ammi
