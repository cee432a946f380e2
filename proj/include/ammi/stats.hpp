#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ammi {

using Rng = std::mt19937_64;

/// Parent-law parameters of a normal truncated to (lower_bound, inf).
/// `location` and `scale_sq` describe the untruncated normal; the moments
/// of the truncated law are exposed through trunc_normal_moments.
struct TruncNormalParams {
  double location = 0.0;
  double scale_sq = 1.0;
  double lower_bound = 0.0;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the truncated normal. Uses a continued fraction for
/// the Mills ratio when the truncation point lies more than 8 standard
/// deviations above the location, so far-negative locations stay finite.
Moments trunc_normal_moments(const TruncNormalParams& p);

/// log P(X > lower_bound) under the parent normal.
double trunc_normal_log_mass(const TruncNormalParams& p);

/// Differential entropy of the truncated law.
double trunc_normal_entropy(const TruncNormalParams& p);

/// Exact draw from the truncated law. Exponential-proposal rejection
/// (Robert 1995) in the tail, plain normal rejection near the mode.
double sample_trunc_normal(Rng& rng, const TruncNormalParams& p);

double sample_normal(Rng& rng, double mean, double variance);

/// Gamma with shape/rate parameterisation.
double sample_gamma(Rng& rng, double shape, double rate);

/// Entropy of Normal(., variance).
double normal_entropy(double variance);

/// Entropy of Gamma(shape, rate).
double gamma_entropy(double shape, double rate);

/// Centres every column, orthonormalises with modified Gram-Schmidt and
/// flips signs so the first entry of each gamma column is positive. The
/// paired delta column is flipped with it.
/// Throws DegenerateInputError when a column vanishes after centring or
/// projection.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> orthonormalize_interaction(
    const Eigen::MatrixXd& raw_gamma, const Eigen::MatrixXd& raw_delta);

/// Flips (gamma_q, delta_q) jointly so the first non-negligible entry of
/// every gamma column is positive. Leaves gamma * delta' unchanged.
void fix_component_signs(Eigen::MatrixXd& gamma, Eigen::MatrixXd& delta);

struct ChainSet {
  std::vector<std::vector<double>> draws;

  std::size_t n_chains() const { return draws.size(); }
  std::size_t n_iter() const { return draws.empty() ? 0 : draws.front().size(); }
};

/// Split-chain potential scale reduction factor. Every chain is halved, so
/// at least 4 iterations per chain are needed.
double gelman_rubin(const ChainSet& chains);

/// Empirical quantile with linear interpolation between order statistics
/// (R type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double prob);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace ammi
