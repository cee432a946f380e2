#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ammi/model.hpp"
#include "ammi/stats.hpp"
#include "ammi/vi.hpp"

namespace ammi {

enum class BlockKind { mu, g, e, lambda, gamma, delta, tau };

/// A single scalar block of the Gibbs scan. `index` is the genotype or
/// environment (zero-based), `component` the interaction term.
struct Block {
  BlockKind kind = BlockKind::mu;
  int index = 0;
  int component = 0;
};

/// Parses "mu", "tau", "g_<i>", "e_<j>", "lambda_<q>", "gamma_<i>_<q>",
/// "delta_<j>_<q>" with one-based indices. Throws ValidationError otherwise.
Block parse_block(const std::string& name);

using Conditional = std::variant<NormalFactor, TruncNormalParams, GammaFactor>;

/// Exact full conditional of one block given every other parameter.
Conditional full_conditional(const Block& block, const ThetaPoint& theta, const Dataset& data,
                             const Hyperparams& h);

struct GibbsOptions {
  int n_chains = 4;
  int n_iter = 6000;  // per chain, including burn-in
  int n_burn = 1000;
  double jitter_sd = 0.1;
  bool parallel_chains = true;
  /// Starting point before jitter; the frequentist fit when empty.
  std::optional<ThetaPoint> init;
};

/// Post-burn-in draws, already post-processed draw-wise. Each chain is an
/// (n_kept x n_params) matrix in pack_theta order.
struct PosteriorDraws {
  int n_genotypes = 0;
  int n_environments = 0;
  int n_components = 0;
  int n_burn = 0;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> chains;
  double wall_time = 0.0;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int n_kept() const { return chains.empty() ? 0 : static_cast<int>(chains.front().rows()); }
  ThetaPoint draw(int chain, int iter) const;
  /// Mean of every packed coordinate over all chains and iterations.
  ThetaPoint posterior_mean() const;
};

/// Systematic-scan Gibbs sampler in the same block order as the CAVI sweep.
PosteriorDraws gibbs_fit(const Dataset& data, const ModelConfig& config,
                         const GibbsOptions& options = {});

/// Layout: mu, g, e, lambda, gamma (column-major), delta (column-major), sigma2.
Eigen::VectorXd pack_theta(const ThetaPoint& theta);
ThetaPoint unpack_theta(const Eigen::Ref<const Eigen::VectorXd>& v, int n_genotypes,
                        int n_environments, int n_components);
std::vector<std::string> parameter_names(const std::vector<std::string>& genotype_labels,
                                         const std::vector<std::string>& environment_labels,
                                         int n_components);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double rhat = 0.0;  // NaN when fewer than 2 chains or zero variance
};

/// Means, standard deviations and 5/50/95% quantiles (linear interpolation)
/// of every coordinate, with split R-hat across chains.
std::vector<ParamSummary> summarize(const PosteriorDraws& draws);
std::vector<ParamSummary> summarize_chains(const std::vector<std::string>& names,
                                           const std::vector<Eigen::MatrixXd>& chains);

}  // namespace ammi
