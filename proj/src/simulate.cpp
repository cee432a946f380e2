#include "ammi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ammi/error.hpp"

namespace ammi {

void SimScenario::validate() const {
  if (n_genotypes < 2 || n_environments < 2)
    throw ValidationError("scenario " + name + ": need I >= 2 and J >= 2");
  const int q = n_components();
  if (q > 0 && (n_genotypes <= q || n_environments <= q))
    throw ValidationError("scenario " + name + ": need I > Q and J > Q");
  for (std::size_t k = 0; k < lambda_true.size(); ++k) {
    if (!(lambda_true[k] >= 0.0))
      throw ValidationError("scenario " + name + ": lambda must be non-negative");
    if (k > 0 && lambda_true[k] > lambda_true[k - 1])
      throw ValidationError("scenario " + name + ": lambda must be non-increasing");
  }
  if (!(sigma2_g >= 0.0) || !(sigma2_e >= 0.0) || !(sigma2_y > 0.0) || !(mu_sd >= 0.0))
    throw ValidationError("scenario " + name + ": variances must be non-negative (sigma2_y > 0)");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
    throw ValidationError("scenario " + name + ": missing_fraction must lie in [0, 1)");
}

SimScenario protocol_scenario(int n_genotypes, int n_environments, std::vector<double> lambda,
                              std::uint64_t seed, ScaleReading reading) {
  SimScenario s;
  s.n_genotypes = n_genotypes;
  s.n_environments = n_environments;
  s.lambda_true = std::move(lambda);
  s.seed = seed;
  const double stated = 10.0;
  s.sigma2_g = reading == ScaleReading::variance ? stated : stated * stated;
  s.sigma2_e = s.sigma2_g;
  s.mu_sd = reading == ScaleReading::variance ? std::sqrt(stated) : stated;
  s.sigma2_y = 1.0;
  s.mu_mean = 90.0;
  std::ostringstream os;
  os << "I" << n_genotypes << "_J" << n_environments << "_Q" << s.lambda_true.size();
  for (double l : s.lambda_true) os << "_L" << l;
  s.name = os.str();
  return s;
}

Simulation simulate(const SimScenario& s) {
  s.validate();
  Rng rng(s.seed);
  const int I = s.n_genotypes;
  const int J = s.n_environments;
  const int Q = s.n_components();

  ThetaPoint truth = ThetaPoint::zeros(I, J, Q);
  truth.mu = sample_normal(rng, s.mu_mean, s.mu_sd * s.mu_sd);
  for (int i = 0; i < I; ++i) truth.g[i] = sample_normal(rng, 0.0, s.sigma2_g);
  for (int j = 0; j < J; ++j) truth.e[j] = sample_normal(rng, 0.0, s.sigma2_e);
  truth.g.array() -= truth.g.mean();
  truth.e.array() -= truth.e.mean();
  if (Q > 0) {
    Eigen::MatrixXd raw_gamma(I, Q);
    Eigen::MatrixXd raw_delta(J, Q);
    for (int q = 0; q < Q; ++q)
      for (int i = 0; i < I; ++i) raw_gamma(i, q) = sample_normal(rng, 0.0, 1.0);
    for (int q = 0; q < Q; ++q)
      for (int j = 0; j < J; ++j) raw_delta(j, q) = sample_normal(rng, 0.0, 1.0);
    std::tie(truth.gamma, truth.delta) = orthonormalize_interaction(raw_gamma, raw_delta);
    for (int q = 0; q < Q; ++q) truth.lambda[q] = s.lambda_true[q];
  }
  truth.sigma2 = s.sigma2_y;

  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(I) * J);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      obs.push_back({i, j, sample_normal(rng, model_mean(truth, i, j), s.sigma2_y)});
  Dataset data(I, J, std::move(obs));

  const auto n_drop = static_cast<std::size_t>(
      std::llround(s.missing_fraction * static_cast<double>(data.size())));
  if (n_drop > 0) data = drop_cells(data, n_drop, rng);
  return {std::move(data), std::move(truth)};
}

Dataset drop_cells(const Dataset& data, std::size_t n_drop, Rng& rng) {
  const auto& obs = data.observations();
  const std::size_t floor_cells =
      static_cast<std::size_t>(std::max(data.n_genotypes(), data.n_environments()));
  if (n_drop + floor_cells > obs.size())
    throw ValidationError("cannot drop " + std::to_string(n_drop) + " of " +
                          std::to_string(obs.size()) + " cells and keep every row and column");
  CellCounts counts = cell_counts(data);
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> keep(obs.size(), 1);
  std::size_t dropped = 0;
  for (std::size_t k : order) {
    if (dropped == n_drop) break;
    const auto& o = obs[k];
    if (counts.per_genotype[o.genotype] > 1 && counts.per_environment[o.environment] > 1) {
      keep[k] = 0;
      --counts.per_genotype[o.genotype];
      --counts.per_environment[o.environment];
      ++dropped;
    }
  }
  if (dropped < n_drop)
    throw ValidationError("missingness pattern cannot keep every row and column non-empty");

  std::vector<Observation> kept;
  kept.reserve(obs.size() - n_drop);
  for (std::size_t k = 0; k < obs.size(); ++k)
    if (keep[k]) kept.push_back(obs[k]);
  return Dataset(data.n_genotypes(), data.n_environments(), std::move(kept),
                 data.genotype_labels(), data.environment_labels());
}

Dataset subsample_cells(const Dataset& data, double keep_fraction, Rng& rng) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw ValidationError("keep_fraction must lie in (0, 1]");
  const auto n = data.size();
  auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n)));
  keep = std::max(keep, static_cast<std::size_t>(std::max(data.n_genotypes(), data.n_environments())));
  keep = std::min(keep, n);
  return drop_cells(data, n - keep, rng);
}

std::vector<SimScenario> scenario_grid() {
  std::vector<SimScenario> grid;
  std::uint64_t seed = 1;
  const int genotypes[] = {6, 10, 12, 25, 50, 100, 200};
  const int environments[] = {10, 12, 20, 30, 50, 100};
  const std::vector<std::vector<double>> lambdas = {
      {12.0}, {20.0}, {25.0}, {20.0, 12.0}, {25.0, 12.0}, {25.0, 20.0}};
  for (int I : genotypes)
    for (int J : environments)
      for (const auto& l : lambdas) {
        auto s = protocol_scenario(I, J, l, seed++);
        s.name = "grid_" + s.name;
        grid.push_back(std::move(s));
      }

  auto named = [&](std::string name, int I, int J, std::vector<double> l) {
    auto s = protocol_scenario(I, J, std::move(l), seed++);
    s.name = std::move(name);
    grid.push_back(std::move(s));
  };
  named("init_study", 25, 12, {12.0});
  named("recovery_lambda0", 25, 12, {0.0});
  named("recovery_lambda20", 25, 12, {20.0});
  named("recovery_lambda40", 25, 12, {40.0});
  named("mcmc_agreement", 6, 10, {20.0});

  for (int q = 1; q <= 2; ++q)
    for (const char* group : {"small", "large"})
      for (auto& s : size_group(group, q)) grid.push_back(std::move(s));
  return grid;
}

SimScenario named_scenario(const std::string& name) {
  for (auto& s : scenario_grid())
    if (s.name == name) return s;
  throw ValidationError("unknown scenario '" + name + "'");
}

std::vector<SimScenario> size_group(const std::string& group, int n_components) {
  if (n_components < 1 || n_components > 2) throw ValidationError("size group: Q must be 1 or 2");
  std::vector<std::pair<int, int>> shapes;
  if (group == "small")
    shapes = {{10, 10}, {25, 10}, {50, 10}, {100, 10}};
  else if (group == "large")
    shapes = {{100, 50}, {100, 100}, {150, 100}, {200, 100}};
  else
    throw ValidationError("size group must be 'small' or 'large', got '" + group + "'");
  const std::vector<double> lambda =
      n_components == 1 ? std::vector<double>{20.0} : std::vector<double>{25.0, 12.0};
  std::vector<SimScenario> out;
  std::uint64_t seed = 1000;
  for (auto [I, J] : shapes) {
    auto s = protocol_scenario(I, J, lambda, seed++);
    s.name = group + "_n" + std::to_string(I * J) + "_" + s.name;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ammi
