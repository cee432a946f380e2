#include "ammi/vi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "ammi/error.hpp"

namespace ammi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Moments truncated(double loc, double var) { return trunc_normal_moments({loc, var, 0.0}); }

bool all_positive_finite(const Eigen::MatrixXd& m) {
  return (m.array() > 0.0).all() && m.allFinite();
}

}  // namespace

void VariationalState::validate() const {
  const auto I = g_loc.size();
  const auto J = e_loc.size();
  const auto Q = lambda_loc.size();
  if (g_var.size() != I || e_var.size() != J || lambda_var.size() != Q ||
      gamma_loc.rows() != I || gamma_loc.cols() != Q || gamma_var.rows() != I ||
      gamma_var.cols() != Q || delta_loc.rows() != J || delta_loc.cols() != Q ||
      delta_var.rows() != J || delta_var.cols() != Q)
    throw DimensionMismatchError("variational state: inconsistent dimensions");
  if (!(mu_var > 0.0) || !std::isfinite(mu_var) || !all_positive_finite(g_var) ||
      !all_positive_finite(e_var) || !all_positive_finite(lambda_var) ||
      !all_positive_finite(gamma_var) || !all_positive_finite(delta_var))
    throw DivergenceError("variational state: variances must be positive and finite");
  if (!(tau_shape > 0.0) || !(tau_rate > 0.0) || !std::isfinite(tau_shape) ||
      !std::isfinite(tau_rate))
    throw DivergenceError("variational state: gamma parameters must be positive and finite");
  if (!std::isfinite(mu_loc) || !g_loc.allFinite() || !e_loc.allFinite() ||
      !lambda_loc.allFinite() || !gamma_loc.allFinite() || !delta_loc.allFinite())
    throw DivergenceError("variational state: non-finite location");
}

// ---------------------------------------------------------------------------
// Expectation cache

ExpectationCache ExpectationCache::from_state(const VariationalState& s) {
  ExpectationCache c;
  const int Q = s.n_components();
  c.lambda.resize(Q);
  c.lambda_var.resize(Q);
  c.gamma.resize(s.n_genotypes(), Q);
  c.gamma_var.resize(s.n_genotypes(), Q);
  c.delta.resize(s.n_environments(), Q);
  c.delta_var.resize(s.n_environments(), Q);
  c.refresh_mu(s);
  c.refresh_g(s);
  c.refresh_e(s);
  for (int q = 0; q < Q; ++q) {
    c.refresh_lambda(s, q);
    c.refresh_gamma(s, q);
    c.refresh_delta(s, q);
  }
  c.refresh_tau(s);
  return c;
}

ExpectationCache ExpectationCache::point_mass(const ThetaPoint& theta) {
  ExpectationCache c;
  c.mu = theta.mu;
  c.g = theta.g;
  c.g_var = Eigen::VectorXd::Zero(theta.g.size());
  c.e = theta.e;
  c.e_var = Eigen::VectorXd::Zero(theta.e.size());
  c.lambda = theta.lambda;
  c.lambda_var = Eigen::VectorXd::Zero(theta.lambda.size());
  c.gamma = theta.gamma;
  c.gamma_var = Eigen::MatrixXd::Zero(theta.gamma.rows(), theta.gamma.cols());
  c.delta = theta.delta;
  c.delta_var = Eigen::MatrixXd::Zero(theta.delta.rows(), theta.delta.cols());
  c.tau = 1.0 / theta.sigma2;
  c.log_tau = std::log(c.tau);
  return c;
}

void ExpectationCache::refresh_mu(const VariationalState& s) {
  mu = s.mu_loc;
  mu_var = s.mu_var;
}

void ExpectationCache::refresh_g(const VariationalState& s) {
  g = s.g_loc;
  g_var = s.g_var;
}

void ExpectationCache::refresh_e(const VariationalState& s) {
  e = s.e_loc;
  e_var = s.e_var;
}

void ExpectationCache::refresh_lambda(const VariationalState& s, int q) {
  const Moments m = truncated(s.lambda_loc[q], s.lambda_var[q]);
  lambda[q] = m.mean;
  lambda_var[q] = m.variance;
}

void ExpectationCache::refresh_gamma(const VariationalState& s, int q) {
  gamma.col(q) = s.gamma_loc.col(q);
  gamma_var.col(q) = s.gamma_var.col(q);
  const Moments m = truncated(s.gamma_loc(0, q), s.gamma_var(0, q));
  gamma(0, q) = m.mean;
  gamma_var(0, q) = m.variance;
}

void ExpectationCache::refresh_delta(const VariationalState& s, int q) {
  delta.col(q) = s.delta_loc.col(q);
  delta_var.col(q) = s.delta_var.col(q);
}

void ExpectationCache::refresh_tau(const VariationalState& s) {
  tau = s.tau_shape / s.tau_rate;
  log_tau = boost::math::digamma(s.tau_shape) - std::log(s.tau_rate);
}

double ExpectationCache::fitted(int i, int j) const {
  double v = mu + g[i] + e[j];
  for (Eigen::Index q = 0; q < lambda.size(); ++q) v += lambda[q] * gamma(i, q) * delta(j, q);
  return v;
}

// ---------------------------------------------------------------------------
// Initialisation

VariationalState init_state(const ThetaPoint& theta, const Dataset& data,
                            const ModelConfig& config) {
  theta.check_dims(data.n_genotypes(), data.n_environments(), config.n_components);
  if (!(theta.sigma2 > 0.0)) throw ValidationError("init: sigma2 must be positive");
  const int I = data.n_genotypes();
  const int J = data.n_environments();
  const int Q = config.n_components;

  VariationalState s;
  s.mu_loc = theta.mu;
  const double v0 = config.init_variance;
  s.mu_var = v0;
  s.g_loc = theta.g;
  s.g_var = Eigen::VectorXd::Constant(I, v0);
  s.e_loc = theta.e;
  s.e_var = Eigen::VectorXd::Constant(J, v0);
  s.lambda_loc = theta.lambda.cwiseMax(1e-6);
  s.lambda_var = Eigen::VectorXd::Constant(Q, v0);
  s.gamma_loc = theta.gamma;
  s.gamma_var = Eigen::MatrixXd::Constant(I, Q, v0);
  s.delta_loc = theta.delta;
  s.delta_var = Eigen::MatrixXd::Constant(J, Q, v0);
  for (int q = 0; q < Q; ++q) {
    if (s.gamma_loc(0, q) < 0.0) {
      s.gamma_loc.col(q) *= -1.0;
      s.delta_loc.col(q) *= -1.0;
    }
  }
  s.tau_shape = config.hyper.a + 0.5 * static_cast<double>(data.size());
  s.tau_rate = s.tau_shape * theta.sigma2;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Coordinate updates

NormalFactor update_mu(const Dataset& data, const ExpectationCache& c, const Hyperparams& h) {
  double resid = 0.0;
  for (const auto& o : data.observations())
    resid += o.response - (c.fitted(o.genotype, o.environment) - c.mu);
  const double precision = static_cast<double>(data.size()) * c.tau + 1.0 / h.sigma2_mu;
  return {(c.tau * resid + h.mu_mu / h.sigma2_mu) / precision, 1.0 / precision};
}

std::vector<NormalFactor> update_g(const Dataset& data, const ExpectationCache& c,
                                   const Hyperparams& h) {
  const int I = data.n_genotypes();
  std::vector<double> resid(I, 0.0);
  std::vector<int> count(I, 0);
  for (const auto& o : data.observations()) {
    resid[o.genotype] += o.response - (c.fitted(o.genotype, o.environment) - c.g[o.genotype]);
    ++count[o.genotype];
  }
  std::vector<NormalFactor> out(I);
  for (int i = 0; i < I; ++i) {
    const double precision = count[i] * c.tau + 1.0 / h.sigma2_g;
    out[i] = {c.tau * resid[i] / precision, 1.0 / precision};
  }
  return out;
}

std::vector<NormalFactor> update_e(const Dataset& data, const ExpectationCache& c,
                                   const Hyperparams& h) {
  const int J = data.n_environments();
  std::vector<double> resid(J, 0.0);
  std::vector<int> count(J, 0);
  for (const auto& o : data.observations()) {
    resid[o.environment] +=
        o.response - (c.fitted(o.genotype, o.environment) - c.e[o.environment]);
    ++count[o.environment];
  }
  std::vector<NormalFactor> out(J);
  for (int j = 0; j < J; ++j) {
    const double precision = count[j] * c.tau + 1.0 / h.sigma2_e;
    out[j] = {c.tau * resid[j] / precision, 1.0 / precision};
  }
  return out;
}

NormalFactor update_lambda(const Dataset& data, const ExpectationCache& c, const Hyperparams& h,
                           int q) {
  double quad = 0.0;
  double lin = 0.0;
  for (const auto& o : data.observations()) {
    const int i = o.genotype;
    const int j = o.environment;
    const double gd = c.gamma(i, q) * c.delta(j, q);
    const double gamma_sq = c.gamma(i, q) * c.gamma(i, q) + c.gamma_var(i, q);
    const double delta_sq = c.delta(j, q) * c.delta(j, q) + c.delta_var(j, q);
    quad += gamma_sq * delta_sq;
    const double partial = o.response - c.fitted(i, j) + c.lambda[q] * gd;
    lin += gd * partial;
  }
  const double precision = c.tau * quad + 1.0 / h.sigma2_lambda;
  return {c.tau * lin / precision, 1.0 / precision};
}

std::vector<NormalFactor> update_gamma_column(const Dataset& data, const ExpectationCache& c,
                                              int q) {
  const int I = data.n_genotypes();
  std::vector<double> quad(I, 0.0);
  std::vector<double> lin(I, 0.0);
  for (const auto& o : data.observations()) {
    const int i = o.genotype;
    const int j = o.environment;
    const double d = c.delta(j, q);
    quad[i] += d * d + c.delta_var(j, q);
    const double partial = o.response - c.fitted(i, j) + c.lambda[q] * c.gamma(i, q) * d;
    lin[i] += d * partial;
  }
  const double lambda_sq = c.lambda[q] * c.lambda[q] + c.lambda_var[q];
  std::vector<NormalFactor> out(I);
  for (int i = 0; i < I; ++i) {
    const double precision = c.tau * lambda_sq * quad[i] + 1.0;
    out[i] = {c.tau * c.lambda[q] * lin[i] / precision, 1.0 / precision};
  }
  return out;
}

std::vector<NormalFactor> update_delta_column(const Dataset& data, const ExpectationCache& c,
                                              int q) {
  const int J = data.n_environments();
  std::vector<double> quad(J, 0.0);
  std::vector<double> lin(J, 0.0);
  for (const auto& o : data.observations()) {
    const int i = o.genotype;
    const int j = o.environment;
    const double g = c.gamma(i, q);
    quad[j] += g * g + c.gamma_var(i, q);
    const double partial = o.response - c.fitted(i, j) + c.lambda[q] * g * c.delta(j, q);
    lin[j] += g * partial;
  }
  const double lambda_sq = c.lambda[q] * c.lambda[q] + c.lambda_var[q];
  std::vector<NormalFactor> out(J);
  for (int j = 0; j < J; ++j) {
    const double precision = c.tau * lambda_sq * quad[j] + 1.0;
    out[j] = {c.tau * c.lambda[q] * lin[j] / precision, 1.0 / precision};
  }
  return out;
}

NormalFactor update_gamma(const Dataset& data, const ExpectationCache& c, int i, int q) {
  return update_gamma_column(data, c, q).at(static_cast<std::size_t>(i));
}

NormalFactor update_delta(const Dataset& data, const ExpectationCache& c, int j, int q) {
  return update_delta_column(data, c, q).at(static_cast<std::size_t>(j));
}

double expected_sse(const Dataset& data, const ExpectationCache& c) {
  const auto Q = c.lambda.size();
  double total = 0.0;
  for (const auto& o : data.observations()) {
    const int i = o.genotype;
    const int j = o.environment;
    const double r = o.response - c.fitted(i, j);
    double var = c.mu_var + c.g_var[i] + c.e_var[j];
    for (Eigen::Index q = 0; q < Q; ++q) {
      const double l = c.lambda[q], g = c.gamma(i, q), d = c.delta(j, q);
      const double l2 = l * l + c.lambda_var[q];
      const double g2 = g * g + c.gamma_var(i, q);
      const double d2 = d * d + c.delta_var(j, q);
      const double m = l * g * d;
      var += l2 * g2 * d2 - m * m;
    }
    total += r * r + var;
  }
  return total;
}

GammaFactor update_tau(const Dataset& data, const ExpectationCache& c, const Hyperparams& h) {
  return {h.a + 0.5 * static_cast<double>(data.size()), h.b + 0.5 * expected_sse(data, c)};
}

// ---------------------------------------------------------------------------
// ELBO

double elbo(const VariationalState& s, const Dataset& data, const Hyperparams& h) {
  const ExpectationCache c = ExpectationCache::from_state(s);
  const double n = static_cast<double>(data.size());
  double value = 0.5 * n * (c.log_tau - kLog2Pi) - 0.5 * c.tau * expected_sse(data, c);

  auto normal_prior = [](double mean, double var, double prior_mean, double prior_var) {
    const double d = mean - prior_mean;
    return -0.5 * (kLog2Pi + std::log(prior_var)) - (d * d + var) / (2.0 * prior_var);
  };

  value += normal_prior(c.mu, c.mu_var, h.mu_mu, h.sigma2_mu) + normal_entropy(s.mu_var);
  for (Eigen::Index i = 0; i < c.g.size(); ++i)
    value += normal_prior(c.g[i], c.g_var[i], 0.0, h.sigma2_g) + normal_entropy(s.g_var[i]);
  for (Eigen::Index j = 0; j < c.e.size(); ++j)
    value += normal_prior(c.e[j], c.e_var[j], 0.0, h.sigma2_e) + normal_entropy(s.e_var[j]);
  for (Eigen::Index q = 0; q < c.lambda.size(); ++q) {
    value += std::numbers::ln2 + normal_prior(c.lambda[q], c.lambda_var[q], 0.0, h.sigma2_lambda);
    value += trunc_normal_entropy({s.lambda_loc[q], s.lambda_var[q], 0.0});
    for (Eigen::Index i = 0; i < c.gamma.rows(); ++i) {
      value += normal_prior(c.gamma(i, q), c.gamma_var(i, q), 0.0, 1.0);
      if (i == 0)
        value += std::numbers::ln2 + trunc_normal_entropy({s.gamma_loc(0, q), s.gamma_var(0, q), 0.0});
      else
        value += normal_entropy(s.gamma_var(i, q));
    }
    for (Eigen::Index j = 0; j < c.delta.rows(); ++j)
      value += normal_prior(c.delta(j, q), c.delta_var(j, q), 0.0, 1.0) +
               normal_entropy(s.delta_var(j, q));
  }
  value += h.a * std::log(h.b) - std::lgamma(h.a) + (h.a - 1.0) * c.log_tau - h.b * c.tau;
  value += gamma_entropy(s.tau_shape, s.tau_rate);
  return value;
}

// ---------------------------------------------------------------------------
// Fitting loop

FitResult fit(const Dataset& data, const ModelConfig& config, const ThetaPoint& init,
              const FitOptions& options) {
  return fit(data, config, init_state(init, data, config), options);
}

FitResult fit(const Dataset& data, const ModelConfig& config, const VariationalState& init,
              const FitOptions& options) {
  config.validate();
  init.validate();
  if (init.n_genotypes() != data.n_genotypes() || init.n_environments() != data.n_environments() ||
      init.n_components() != config.n_components)
    throw DimensionMismatchError("fit: initial state does not match dataset and Q");
  const auto start = std::chrono::steady_clock::now();
  const Hyperparams& h = config.hyper;
  const int Q = config.n_components;

  FitResult result;
  VariationalState s = init;
  ExpectationCache c = ExpectationCache::from_state(s);
  if (options.compute_elbo) result.elbo_trace.push_back(elbo(s, data, h));

  auto max_change = [](const ExpectationCache& a, const ExpectationCache& b) {
    double d = std::max(std::abs(a.mu - b.mu), std::abs(a.tau - b.tau));
    d = std::max(d, (a.g - b.g).cwiseAbs().maxCoeff());
    d = std::max(d, (a.e - b.e).cwiseAbs().maxCoeff());
    if (a.lambda.size() > 0) {
      d = std::max(d, (a.lambda - b.lambda).cwiseAbs().maxCoeff());
      d = std::max(d, (a.gamma - b.gamma).cwiseAbs().maxCoeff());
      d = std::max(d, (a.delta - b.delta).cwiseAbs().maxCoeff());
    }
    return d;
  };

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const ExpectationCache before = c;

    const NormalFactor fmu = update_mu(data, c, h);
    s.mu_loc = fmu.location;
    s.mu_var = fmu.variance;
    c.refresh_mu(s);

    const auto fg = update_g(data, c, h);
    for (std::size_t i = 0; i < fg.size(); ++i) {
      s.g_loc[i] = fg[i].location;
      s.g_var[i] = fg[i].variance;
    }
    c.refresh_g(s);

    const auto fe = update_e(data, c, h);
    for (std::size_t j = 0; j < fe.size(); ++j) {
      s.e_loc[j] = fe[j].location;
      s.e_var[j] = fe[j].variance;
    }
    c.refresh_e(s);

    for (int q = 0; q < Q; ++q) {
      const NormalFactor fl = update_lambda(data, c, h, q);
      s.lambda_loc[q] = fl.location;
      s.lambda_var[q] = fl.variance;
      c.refresh_lambda(s, q);

      const auto fgam = update_gamma_column(data, c, q);
      for (std::size_t i = 0; i < fgam.size(); ++i) {
        s.gamma_loc(i, q) = fgam[i].location;
        s.gamma_var(i, q) = fgam[i].variance;
      }
      c.refresh_gamma(s, q);

      const auto fdel = update_delta_column(data, c, q);
      for (std::size_t j = 0; j < fdel.size(); ++j) {
        s.delta_loc(j, q) = fdel[j].location;
        s.delta_var(j, q) = fdel[j].variance;
      }
      c.refresh_delta(s, q);
    }

    const GammaFactor ft = update_tau(data, c, h);
    s.tau_shape = ft.shape;
    s.tau_rate = ft.rate;
    c.refresh_tau(s);

    const double change = max_change(before, c);
    if (!std::isfinite(change))
      throw DivergenceError("CAVI diverged at sweep " + std::to_string(iter));
    result.change_trace.push_back(change);
    if (options.compute_elbo) {
      const double value = elbo(s, data, h);
      if (!std::isfinite(value))
        throw DivergenceError("non-finite ELBO at sweep " + std::to_string(iter));
      result.elbo_trace.push_back(value);
    }
    result.n_iter = iter;
    if (options.on_sweep) options.on_sweep(iter, s, c);
    if (change < config.tol) {
      result.converged = true;
      break;
    }
  }

  s.validate();
  result.identified = post_process(expected_point(s));
  result.state = std::move(s);
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Post-processing and sampling

ThetaPoint post_process(const ThetaPoint& theta) {
  const auto I = theta.g.size();
  const auto J = theta.e.size();
  const auto Q = theta.lambda.size();
  theta.check_dims(static_cast<int>(I), static_cast<int>(J), static_cast<int>(Q));

  ThetaPoint out;
  out.sigma2 = theta.sigma2;
  const double g_bar = theta.g.mean();
  const double e_bar = theta.e.mean();
  out.mu = theta.mu + g_bar + e_bar;
  out.g = theta.g.array() - g_bar;
  out.e = theta.e.array() - e_bar;
  out.lambda = Eigen::VectorXd::Zero(Q);
  out.gamma = Eigen::MatrixXd::Zero(I, Q);
  out.delta = Eigen::MatrixXd::Zero(J, Q);
  if (Q == 0) return out;

  // Row/column means of M = Gamma diag(lambda) Delta' move into the main
  // effects; the double-centred remainder is rank <= Q.
  const Eigen::RowVectorXd gamma_bar = theta.gamma.colwise().mean();
  const Eigen::RowVectorXd delta_bar = theta.delta.colwise().mean();
  const Eigen::VectorXd row_means = theta.gamma * theta.lambda.asDiagonal() * delta_bar.transpose();
  const Eigen::VectorXd col_means = theta.delta * theta.lambda.asDiagonal() * gamma_bar.transpose();
  const double m_bar = (gamma_bar.array() * theta.lambda.transpose().array() * delta_bar.array()).sum();
  out.mu += m_bar;
  out.g += row_means.array().matrix() - Eigen::VectorXd::Constant(I, m_bar);
  out.e += col_means - Eigen::VectorXd::Constant(J, m_bar);

  const Eigen::MatrixXd gc = theta.gamma.rowwise() - gamma_bar;
  const Eigen::MatrixXd dc = theta.delta.rowwise() - delta_bar;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_g(gc);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_d(dc);
  const Eigen::MatrixXd basis_g = qr_g.householderQ() * Eigen::MatrixXd::Identity(I, Q);
  const Eigen::MatrixXd basis_d = qr_d.householderQ() * Eigen::MatrixXd::Identity(J, Q);
  const Eigen::MatrixXd r_g = qr_g.matrixQR().topRows(Q).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_d = qr_d.matrixQR().topRows(Q).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd core = r_g * theta.lambda.asDiagonal() * r_d.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);

  out.lambda = svd.singularValues();
  out.gamma = basis_g * svd.matrixU();
  out.delta = basis_d * svd.matrixV();
  fix_component_signs(out.gamma, out.delta);

  // Tied singular values leave the rotation inside the tie arbitrary; order
  // such pairs by their first differing gamma entry.
  for (Eigen::Index q = 0; q + 1 < Q; ++q) {
    const double scale = std::max(out.lambda[q], 1.0);
    if (std::abs(out.lambda[q] - out.lambda[q + 1]) > 1e-12 * scale) continue;
    for (Eigen::Index i = 0; i < I; ++i) {
      const double a = out.gamma(i, q), b = out.gamma(i, q + 1);
      if (std::abs(a - b) <= 1e-12) continue;
      if (b > a) {
        out.gamma.col(q).swap(out.gamma.col(q + 1));
        out.delta.col(q).swap(out.delta.col(q + 1));
        std::swap(out.lambda[q], out.lambda[q + 1]);
      }
      break;
    }
  }
  return out;
}

ThetaPoint expected_point(const VariationalState& s) {
  const ExpectationCache c = ExpectationCache::from_state(s);
  ThetaPoint t;
  t.mu = c.mu;
  t.g = c.g;
  t.e = c.e;
  t.lambda = c.lambda;
  t.gamma = c.gamma;
  t.delta = c.delta;
  t.sigma2 = 1.0 / c.tau;
  return t;
}

ThetaPoint sample_from_state(const VariationalState& s, Rng& rng) {
  const int I = s.n_genotypes();
  const int J = s.n_environments();
  const int Q = s.n_components();
  ThetaPoint t = ThetaPoint::zeros(I, J, Q);
  t.mu = sample_normal(rng, s.mu_loc, s.mu_var);
  for (int i = 0; i < I; ++i) t.g[i] = sample_normal(rng, s.g_loc[i], s.g_var[i]);
  for (int j = 0; j < J; ++j) t.e[j] = sample_normal(rng, s.e_loc[j], s.e_var[j]);
  for (int q = 0; q < Q; ++q) {
    t.lambda[q] = sample_trunc_normal(rng, {s.lambda_loc[q], s.lambda_var[q], 0.0});
    t.gamma(0, q) = sample_trunc_normal(rng, {s.gamma_loc(0, q), s.gamma_var(0, q), 0.0});
    for (int i = 1; i < I; ++i) t.gamma(i, q) = sample_normal(rng, s.gamma_loc(i, q), s.gamma_var(i, q));
    for (int j = 0; j < J; ++j) t.delta(j, q) = sample_normal(rng, s.delta_loc(j, q), s.delta_var(j, q));
  }
  t.sigma2 = 1.0 / sample_gamma(rng, s.tau_shape, s.tau_rate);
  return t;
}

ThetaPoint random_theta(int n_genotypes, int n_environments, int n_components, Rng& rng) {
  ThetaPoint t = ThetaPoint::zeros(n_genotypes, n_environments, n_components);
  t.mu = sample_normal(rng, 0.0, 1.0);
  for (int i = 0; i < n_genotypes; ++i) t.g[i] = sample_normal(rng, 0.0, 1.0);
  for (int j = 0; j < n_environments; ++j) t.e[j] = sample_normal(rng, 0.0, 1.0);
  for (int q = 0; q < n_components; ++q) {
    t.lambda[q] = std::abs(sample_normal(rng, 0.0, 1.0));
    for (int i = 0; i < n_genotypes; ++i) t.gamma(i, q) = sample_normal(rng, 0.0, 1.0);
    for (int j = 0; j < n_environments; ++j) t.delta(j, q) = sample_normal(rng, 0.0, 1.0);
  }
  t.sigma2 = 1.0;
  return t;
}

}  // namespace ammi
