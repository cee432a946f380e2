#include "ammi/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "ammi/error.hpp"
#include "ammi/freq.hpp"

namespace ammi {

namespace {

// Residual of one cell with component `skip` (or none when skip < 0) left out.
double partial_residual(const ThetaPoint& t, const Observation& o, int skip) {
  double fitted = t.mu + t.g[o.genotype] + t.e[o.environment];
  for (Eigen::Index q = 0; q < t.lambda.size(); ++q)
    if (q != skip) fitted += t.lambda[q] * t.gamma(o.genotype, q) * t.delta(o.environment, q);
  return o.response - fitted;
}

NormalFactor mu_conditional(const ThetaPoint& t, const Dataset& data, const Hyperparams& h) {
  const double tau = 1.0 / t.sigma2;
  double sum = 0.0;
  for (const auto& o : data.observations()) sum += partial_residual(t, o, -1) + t.mu;
  const double precision = static_cast<double>(data.size()) * tau + 1.0 / h.sigma2_mu;
  return {(tau * sum + h.mu_mu / h.sigma2_mu) / precision, 1.0 / precision};
}

std::vector<NormalFactor> g_conditionals(const ThetaPoint& t, const Dataset& data,
                                         const Hyperparams& h) {
  const double tau = 1.0 / t.sigma2;
  std::vector<double> sum(data.n_genotypes(), 0.0);
  std::vector<double> count(data.n_genotypes(), 0.0);
  for (const auto& o : data.observations()) {
    sum[o.genotype] += partial_residual(t, o, -1) + t.g[o.genotype];
    count[o.genotype] += 1.0;
  }
  std::vector<NormalFactor> out;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double precision = count[i] * tau + 1.0 / h.sigma2_g;
    out.push_back({tau * sum[i] / precision, 1.0 / precision});
  }
  return out;
}

std::vector<NormalFactor> e_conditionals(const ThetaPoint& t, const Dataset& data,
                                         const Hyperparams& h) {
  const double tau = 1.0 / t.sigma2;
  std::vector<double> sum(data.n_environments(), 0.0);
  std::vector<double> count(data.n_environments(), 0.0);
  for (const auto& o : data.observations()) {
    sum[o.environment] += partial_residual(t, o, -1) + t.e[o.environment];
    count[o.environment] += 1.0;
  }
  std::vector<NormalFactor> out;
  for (std::size_t j = 0; j < sum.size(); ++j) {
    const double precision = count[j] * tau + 1.0 / h.sigma2_e;
    out.push_back({tau * sum[j] / precision, 1.0 / precision});
  }
  return out;
}

TruncNormalParams lambda_conditional(const ThetaPoint& t, const Dataset& data,
                                     const Hyperparams& h, int q) {
  const double tau = 1.0 / t.sigma2;
  double quad = 0.0;
  double lin = 0.0;
  for (const auto& o : data.observations()) {
    const double w = t.gamma(o.genotype, q) * t.delta(o.environment, q);
    quad += w * w;
    lin += w * partial_residual(t, o, q);
  }
  const double precision = tau * quad + 1.0 / h.sigma2_lambda;
  return {tau * lin / precision, 1.0 / precision, 0.0};
}

std::vector<NormalFactor> gamma_conditionals(const ThetaPoint& t, const Dataset& data, int q) {
  const double tau = 1.0 / t.sigma2;
  const double l = t.lambda[q];
  std::vector<double> quad(data.n_genotypes(), 0.0);
  std::vector<double> lin(data.n_genotypes(), 0.0);
  for (const auto& o : data.observations()) {
    const double w = l * t.delta(o.environment, q);
    quad[o.genotype] += w * w;
    lin[o.genotype] += w * partial_residual(t, o, q);
  }
  std::vector<NormalFactor> out;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const double precision = tau * quad[i] + 1.0;
    out.push_back({tau * lin[i] / precision, 1.0 / precision});
  }
  return out;
}

std::vector<NormalFactor> delta_conditionals(const ThetaPoint& t, const Dataset& data, int q) {
  const double tau = 1.0 / t.sigma2;
  const double l = t.lambda[q];
  std::vector<double> quad(data.n_environments(), 0.0);
  std::vector<double> lin(data.n_environments(), 0.0);
  for (const auto& o : data.observations()) {
    const double w = l * t.gamma(o.genotype, q);
    quad[o.environment] += w * w;
    lin[o.environment] += w * partial_residual(t, o, q);
  }
  std::vector<NormalFactor> out;
  for (std::size_t j = 0; j < quad.size(); ++j) {
    const double precision = tau * quad[j] + 1.0;
    out.push_back({tau * lin[j] / precision, 1.0 / precision});
  }
  return out;
}

GammaFactor tau_conditional(const ThetaPoint& t, const Dataset& data, const Hyperparams& h) {
  double sse = 0.0;
  for (const auto& o : data.observations()) {
    const double r = partial_residual(t, o, -1);
    sse += r * r;
  }
  return {h.a + 0.5 * static_cast<double>(data.size()), h.b + 0.5 * sse};
}

void check_block(const Block& b, const ThetaPoint& t) {
  const auto in = [](int v, Eigen::Index n) { return v >= 0 && v < n; };
  bool ok = true;
  switch (b.kind) {
    case BlockKind::g: ok = in(b.index, t.g.size()); break;
    case BlockKind::e: ok = in(b.index, t.e.size()); break;
    case BlockKind::lambda: ok = in(b.component, t.lambda.size()); break;
    case BlockKind::gamma: ok = in(b.index, t.gamma.rows()) && in(b.component, t.lambda.size()); break;
    case BlockKind::delta: ok = in(b.index, t.delta.rows()) && in(b.component, t.lambda.size()); break;
    default: break;
  }
  if (!ok) throw ValidationError("full conditional: block index out of range");
}

void sweep(ThetaPoint& t, const Dataset& data, const Hyperparams& h, Rng& rng) {
  const NormalFactor m = mu_conditional(t, data, h);
  t.mu = sample_normal(rng, m.location, m.variance);
  const auto gs = g_conditionals(t, data, h);
  for (std::size_t i = 0; i < gs.size(); ++i) t.g[i] = sample_normal(rng, gs[i].location, gs[i].variance);
  const auto es = e_conditionals(t, data, h);
  for (std::size_t j = 0; j < es.size(); ++j) t.e[j] = sample_normal(rng, es[j].location, es[j].variance);
  for (int q = 0; q < t.n_components(); ++q) {
    t.lambda[q] = sample_trunc_normal(rng, lambda_conditional(t, data, h, q));
    const auto gam = gamma_conditionals(t, data, q);
    t.gamma(0, q) = sample_trunc_normal(rng, {gam[0].location, gam[0].variance, 0.0});
    for (std::size_t i = 1; i < gam.size(); ++i)
      t.gamma(i, q) = sample_normal(rng, gam[i].location, gam[i].variance);
    const auto del = delta_conditionals(t, data, q);
    for (std::size_t j = 0; j < del.size(); ++j)
      t.delta(j, q) = sample_normal(rng, del[j].location, del[j].variance);
  }
  const GammaFactor tc = tau_conditional(t, data, h);
  t.sigma2 = 1.0 / sample_gamma(rng, tc.shape, tc.rate);
}

ThetaPoint jittered(const ThetaPoint& base, double sd, Rng& rng) {
  ThetaPoint t = base;
  const double var = sd * sd;
  auto jit = [&](double v) { return sample_normal(rng, v, var); };
  t.mu = jit(t.mu);
  for (Eigen::Index i = 0; i < t.g.size(); ++i) t.g[i] = jit(t.g[i]);
  for (Eigen::Index j = 0; j < t.e.size(); ++j) t.e[j] = jit(t.e[j]);
  for (Eigen::Index q = 0; q < t.lambda.size(); ++q) {
    t.lambda[q] = std::max(std::abs(jit(t.lambda[q])), 1e-6);
    for (Eigen::Index i = 0; i < t.gamma.rows(); ++i) t.gamma(i, q) = jit(t.gamma(i, q));
    for (Eigen::Index j = 0; j < t.delta.rows(); ++j) t.delta(j, q) = jit(t.delta(j, q));
    if (t.gamma(0, q) <= 0.0) t.gamma(0, q) = std::max(std::abs(t.gamma(0, q)), 1e-6);
  }
  t.sigma2 *= std::exp(jit(0.0));
  return t;
}

}  // namespace

Block parse_block(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string p; std::getline(ss, p, '_');) parts.push_back(p);
  auto number = [&](const std::string& s) {
    int v = 0;
    std::size_t used = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 1) throw ValidationError("unknown block '" + name + "'");
    return v - 1;
  };
  if (parts.empty()) throw ValidationError("unknown block ''");
  const std::string& head = parts[0];
  if (head == "mu" && parts.size() == 1) return {BlockKind::mu, 0, 0};
  if (head == "tau" && parts.size() == 1) return {BlockKind::tau, 0, 0};
  if (head == "g" && parts.size() == 2) return {BlockKind::g, number(parts[1]), 0};
  if (head == "e" && parts.size() == 2) return {BlockKind::e, number(parts[1]), 0};
  if (head == "lambda" && parts.size() == 2) return {BlockKind::lambda, 0, number(parts[1])};
  if (head == "gamma" && parts.size() == 3)
    return {BlockKind::gamma, number(parts[1]), number(parts[2])};
  if (head == "delta" && parts.size() == 3)
    return {BlockKind::delta, number(parts[1]), number(parts[2])};
  throw ValidationError("unknown block '" + name + "'");
}

Conditional full_conditional(const Block& block, const ThetaPoint& theta, const Dataset& data,
                             const Hyperparams& h) {
  theta.check_dims(data);
  check_block(block, theta);
  switch (block.kind) {
    case BlockKind::mu: return mu_conditional(theta, data, h);
    case BlockKind::g: return g_conditionals(theta, data, h)[block.index];
    case BlockKind::e: return e_conditionals(theta, data, h)[block.index];
    case BlockKind::lambda: return lambda_conditional(theta, data, h, block.component);
    case BlockKind::gamma: {
      const NormalFactor f = gamma_conditionals(theta, data, block.component)[block.index];
      if (block.index == 0) return TruncNormalParams{f.location, f.variance, 0.0};
      return f;
    }
    case BlockKind::delta: return delta_conditionals(theta, data, block.component)[block.index];
    case BlockKind::tau: return tau_conditional(theta, data, h);
  }
  throw ValidationError("unknown block kind");
}

Eigen::VectorXd pack_theta(const ThetaPoint& t) {
  const auto I = t.g.size(), J = t.e.size(), Q = t.lambda.size();
  Eigen::VectorXd v(2 + I + J + Q * (1 + I + J));
  Eigen::Index k = 0;
  v[k++] = t.mu;
  v.segment(k, I) = t.g;
  k += I;
  v.segment(k, J) = t.e;
  k += J;
  v.segment(k, Q) = t.lambda;
  k += Q;
  v.segment(k, I * Q) = Eigen::Map<const Eigen::VectorXd>(t.gamma.data(), I * Q);
  k += I * Q;
  v.segment(k, J * Q) = Eigen::Map<const Eigen::VectorXd>(t.delta.data(), J * Q);
  k += J * Q;
  v[k] = t.sigma2;
  return v;
}

ThetaPoint unpack_theta(const Eigen::Ref<const Eigen::VectorXd>& v, int I, int J, int Q) {
  const Eigen::Index expected = 2 + I + J + static_cast<Eigen::Index>(Q) * (1 + I + J);
  if (v.size() != expected) throw DimensionMismatchError("unpack: wrong vector length");
  ThetaPoint t;
  Eigen::Index k = 0;
  t.mu = v[k++];
  t.g = v.segment(k, I);
  k += I;
  t.e = v.segment(k, J);
  k += J;
  t.lambda = v.segment(k, Q);
  k += Q;
  t.gamma = Eigen::Map<const Eigen::MatrixXd>(v.data() + k, I, Q);
  k += static_cast<Eigen::Index>(I) * Q;
  t.delta = Eigen::Map<const Eigen::MatrixXd>(v.data() + k, J, Q);
  k += static_cast<Eigen::Index>(J) * Q;
  t.sigma2 = v[k];
  return t;
}

std::vector<std::string> parameter_names(const std::vector<std::string>& glabels,
                                         const std::vector<std::string>& elabels,
                                         int n_components) {
  std::vector<std::string> names{"mu"};
  for (const auto& l : glabels) names.push_back("g[" + l + "]");
  for (const auto& l : elabels) names.push_back("e[" + l + "]");
  for (int q = 1; q <= n_components; ++q) names.push_back("lambda[" + std::to_string(q) + "]");
  for (int q = 1; q <= n_components; ++q)
    for (const auto& l : glabels) names.push_back("gamma[" + l + "," + std::to_string(q) + "]");
  for (int q = 1; q <= n_components; ++q)
    for (const auto& l : elabels) names.push_back("delta[" + l + "," + std::to_string(q) + "]");
  names.push_back("sigma2");
  return names;
}

ThetaPoint PosteriorDraws::draw(int chain, int iter) const {
  return unpack_theta(chains.at(chain).row(iter).transpose(), n_genotypes, n_environments,
                      n_components);
}

ThetaPoint PosteriorDraws::posterior_mean() const {
  if (chains.empty() || n_kept() == 0) throw ValidationError("posterior mean: no draws");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(chains.front().cols());
  double count = 0.0;
  for (const auto& c : chains) {
    acc += c.colwise().sum().transpose();
    count += static_cast<double>(c.rows());
  }
  return unpack_theta(acc / count, n_genotypes, n_environments, n_components);
}

PosteriorDraws gibbs_fit(const Dataset& data, const ModelConfig& config,
                         const GibbsOptions& options) {
  config.validate();
  if (options.n_chains < 1) throw ValidationError("gibbs: need at least one chain");
  if (options.n_iter < 1 || options.n_burn < 0 || options.n_burn >= options.n_iter)
    throw ValidationError("gibbs: need 0 <= burn-in < iterations");
  const auto start = std::chrono::steady_clock::now();
  const int I = data.n_genotypes();
  const int J = data.n_environments();
  const int Q = config.n_components;

  const ThetaPoint base = options.init ? *options.init : frequentist_fit(data, Q);
  base.check_dims(I, J, Q);

  PosteriorDraws out;
  out.n_genotypes = I;
  out.n_environments = J;
  out.n_components = Q;
  out.n_burn = options.n_burn;
  out.names = parameter_names(data.genotype_labels(), data.environment_labels(), Q);
  const int kept = options.n_iter - options.n_burn;
  out.chains.assign(options.n_chains, Eigen::MatrixXd(kept, static_cast<Eigen::Index>(out.names.size())));
  std::vector<std::string> failures(options.n_chains);

  auto run_chain = [&](int chain) {
    try {
      std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                        static_cast<std::uint32_t>(config.seed >> 32),
                        static_cast<std::uint32_t>(chain)};
      Rng rng(seq);
      ThetaPoint t = jittered(base, options.jitter_sd, rng);
      for (int it = 0; it < options.n_iter; ++it) {
        sweep(t, data, config.hyper, rng);
        if (!std::isfinite(t.mu) || !std::isfinite(t.sigma2) || !t.g.allFinite() ||
            !t.e.allFinite() || !t.lambda.allFinite() || !t.gamma.allFinite() ||
            !t.delta.allFinite())
          throw DivergenceError("gibbs: non-finite state in chain " + std::to_string(chain + 1) +
                                " at iteration " + std::to_string(it + 1));
        if (it >= options.n_burn)
          out.chains[chain].row(it - options.n_burn) = pack_theta(post_process(t)).transpose();
      }
    } catch (const std::exception& ex) {
      failures[chain] = ex.what();
    }
  };

  if (options.parallel_chains && options.n_chains > 1) {
    std::vector<std::jthread> workers;
    for (int c = 0; c < options.n_chains; ++c) workers.emplace_back(run_chain, c);
  } else {
    for (int c = 0; c < options.n_chains; ++c) run_chain(c);
  }
  for (const auto& f : failures)
    if (!f.empty()) throw DivergenceError(f);

  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<ParamSummary> summarize_chains(const std::vector<std::string>& names,
                                           const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.empty() || chains.front().rows() == 0)
    throw ValidationError("summarize: no draws");
  const auto p = static_cast<Eigen::Index>(names.size());
  for (const auto& c : chains)
    if (c.cols() != p || c.rows() != chains.front().rows())
      throw DimensionMismatchError("summarize: chains have inconsistent shapes");

  std::vector<ParamSummary> out;
  out.reserve(names.size());
  std::vector<double> pooled;
  for (Eigen::Index k = 0; k < p; ++k) {
    pooled.clear();
    ChainSet set;
    for (const auto& c : chains) {
      std::vector<double> col(c.col(k).data(), c.col(k).data() + c.rows());
      pooled.insert(pooled.end(), col.begin(), col.end());
      set.draws.push_back(std::move(col));
    }
    ParamSummary s;
    s.name = names[k];
    const double n = static_cast<double>(pooled.size());
    for (double v : pooled) s.mean += v;
    s.mean /= n;
    double ss = 0.0;
    for (double v : pooled) ss += (v - s.mean) * (v - s.mean);
    s.sd = pooled.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(pooled.begin(), pooled.end());
    s.q05 = quantile_sorted(pooled, 0.05);
    s.q50 = quantile_sorted(pooled, 0.50);
    s.q95 = quantile_sorted(pooled, 0.95);
    s.rhat = std::numeric_limits<double>::quiet_NaN();
    if (set.n_chains() >= 2 && set.n_iter() >= 4) {
      try {
        s.rhat = gelman_rubin(set);
      } catch (const DegenerateInputError&) {
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ParamSummary> summarize(const PosteriorDraws& draws) {
  return summarize_chains(draws.names, draws.chains);
}

}  // namespace ammi
