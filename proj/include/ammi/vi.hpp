#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ammi/model.hpp"
#include "ammi/stats.hpp"

namespace ammi {

/// Mean-field variational parameters. Every Normal factor is stored as
/// (location, variance). For q(lambda_q) and q(gamma_1q) the pair is the
/// parent law of a normal truncated to (0, inf); their moments come from
/// trunc_normal_moments. q(tau) is Gamma(shape, rate) on the precision.
struct VariationalState {
  double mu_loc = 0.0;
  double mu_var = 1.0;
  Eigen::VectorXd g_loc, g_var;
  Eigen::VectorXd e_loc, e_var;
  Eigen::VectorXd lambda_loc, lambda_var;
  Eigen::MatrixXd gamma_loc, gamma_var;  // row 0 truncated
  Eigen::MatrixXd delta_loc, delta_var;
  double tau_shape = 1.0;
  double tau_rate = 1.0;

  int n_genotypes() const { return static_cast<int>(g_loc.size()); }
  int n_environments() const { return static_cast<int>(e_loc.size()); }
  int n_components() const { return static_cast<int>(lambda_loc.size()); }

  /// Throws on non-positive variances, non-finite entries or inconsistent
  /// dimensions.
  void validate() const;
};

/// First moments and variances of every factor, plus E[tau] and E[log tau].
struct ExpectationCache {
  double mu = 0.0, mu_var = 0.0;
  Eigen::VectorXd g, g_var;
  Eigen::VectorXd e, e_var;
  Eigen::VectorXd lambda, lambda_var;
  Eigen::MatrixXd gamma, gamma_var;
  Eigen::MatrixXd delta, delta_var;
  double tau = 1.0;
  double log_tau = 0.0;

  static ExpectationCache from_state(const VariationalState& s);
  /// Degenerate factors at `theta`: zero variances, tau = 1/sigma2.
  static ExpectationCache point_mass(const ThetaPoint& theta);

  void refresh_mu(const VariationalState& s);
  void refresh_g(const VariationalState& s);
  void refresh_e(const VariationalState& s);
  void refresh_lambda(const VariationalState& s, int q);
  void refresh_gamma(const VariationalState& s, int q);
  void refresh_delta(const VariationalState& s, int q);
  void refresh_tau(const VariationalState& s);

  /// E[mu + g_i + e_j + sum_q lambda_q gamma_iq delta_jq].
  double fitted(int i, int j) const;
};

struct NormalFactor {
  double location = 0.0;
  double variance = 1.0;
};

struct GammaFactor {
  double shape = 1.0;
  double rate = 1.0;
};

/// Variational means at theta, variances config.init_variance (1 by
/// default), E[tau] = 1/theta.sigma2.
/// lambda is clipped to >= 1e-6 and each (gamma_q, delta_q) pair is flipped
/// so gamma_1q > 0.
VariationalState init_state(const ThetaPoint& theta, const Dataset& data,
                            const ModelConfig& config);

// Closed-form coordinate updates. Each returns the optimal factor given
// the other factors summarised in `cache`; none of them mutate state.
NormalFactor update_mu(const Dataset& data, const ExpectationCache& cache, const Hyperparams& h);
std::vector<NormalFactor> update_g(const Dataset& data, const ExpectationCache& cache,
                                   const Hyperparams& h);
std::vector<NormalFactor> update_e(const Dataset& data, const ExpectationCache& cache,
                                   const Hyperparams& h);
/// Parent-law parameters of the truncated factor q(lambda_q).
NormalFactor update_lambda(const Dataset& data, const ExpectationCache& cache,
                           const Hyperparams& h, int q);
/// Column q of q(gamma); entry 0 is the parent law of a truncated factor.
std::vector<NormalFactor> update_gamma_column(const Dataset& data, const ExpectationCache& cache,
                                              int q);
std::vector<NormalFactor> update_delta_column(const Dataset& data, const ExpectationCache& cache,
                                              int q);
NormalFactor update_gamma(const Dataset& data, const ExpectationCache& cache, int i, int q);
NormalFactor update_delta(const Dataset& data, const ExpectationCache& cache, int j, int q);
GammaFactor update_tau(const Dataset& data, const ExpectationCache& cache, const Hyperparams& h);

/// Sum over observed cells of E[(y - mu - g - e - sum lambda gamma delta)^2]
/// under the factorised q.
double expected_sse(const Dataset& data, const ExpectationCache& cache);

double elbo(const VariationalState& state, const Dataset& data, const Hyperparams& h);

struct FitResult {
  VariationalState state;
  /// Post-processed point estimate built from the variational means.
  ThetaPoint identified;
  std::vector<double> elbo_trace;    // entry 0 is the initial state
  std::vector<double> change_trace;  // max |change of means| per sweep
  int n_iter = 0;
  bool converged = false;
  double wall_time = 0.0;
};

struct FitOptions {
  bool compute_elbo = true;
  /// Called after every sweep with the sweep number (1-based).
  std::function<void(int, const VariationalState&, const ExpectationCache&)> on_sweep;
};

/// CAVI: mu -> g -> e -> (lambda_q, gamma_.q, delta_.q for each q) -> tau,
/// until the largest change in any variational mean drops below
/// config.tol or config.max_iter sweeps have run.
FitResult fit(const Dataset& data, const ModelConfig& config, const ThetaPoint& init,
              const FitOptions& options = {});
/// Same loop started from an explicit variational state.
FitResult fit(const Dataset& data, const ModelConfig& config, const VariationalState& init,
              const FitOptions& options = {});

/// Identifiable form of a parameter point: main effects centred, the
/// interaction double-centred and re-factorised by SVD with ordered
/// singular values and positive leading gamma entries. Cell means are
/// unchanged.
ThetaPoint post_process(const ThetaPoint& theta);

/// Point of variational expectations (sigma2 = 1/E[tau]) before
/// post-processing.
ThetaPoint expected_point(const VariationalState& state);

/// One joint draw from the factorised q.
ThetaPoint sample_from_state(const VariationalState& state, Rng& rng);

/// Standard-normal start used by the initialisation study.
ThetaPoint random_theta(int n_genotypes, int n_environments, int n_components, Rng& rng);

}  // namespace ammi
