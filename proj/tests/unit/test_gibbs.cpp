#include <doctest.h>

#include <cmath>
#include <variant>

#include "ammi/error.hpp"
#include "ammi/freq.hpp"
#include "ammi/gibbs.hpp"
#include "ammi/simulate.hpp"

using namespace ammi;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double log_normal(double x, double m, double v) {
  return -0.5 * (kLog2Pi + std::log(v)) - (x - m) * (x - m) / (2.0 * v);
}

// Unnormalised log posterior written out term by term.
double log_joint(const ThetaPoint& t, const Dataset& d, const Hyperparams& h) {
  double lp = 0;
  for (const auto& o : d.observations()) {
    double m = t.mu + t.g[o.genotype] + t.e[o.environment];
    for (int q = 0; q < t.n_components(); ++q)
      m += t.lambda[q] * t.gamma(o.genotype, q) * t.delta(o.environment, q);
    lp += log_normal(o.response, m, t.sigma2);
  }
  lp += log_normal(t.mu, h.mu_mu, h.sigma2_mu);
  for (double v : t.g) lp += log_normal(v, 0, h.sigma2_g);
  for (double v : t.e) lp += log_normal(v, 0, h.sigma2_e);
  for (double v : t.lambda) lp += log_normal(v, 0, h.sigma2_lambda);
  for (double v : t.gamma.reshaped()) lp += log_normal(v, 0, 1);
  for (double v : t.delta.reshaped()) lp += log_normal(v, 0, 1);
  const double tau = 1.0 / t.sigma2;
  lp += (h.a - 1.0) * std::log(tau) - h.b * tau;
  return lp;
}

double& slot(ThetaPoint& t, const Block& b) {
  switch (b.kind) {
    case BlockKind::mu: return t.mu;
    case BlockKind::g: return t.g[b.index];
    case BlockKind::e: return t.e[b.index];
    case BlockKind::lambda: return t.lambda[b.component];
    case BlockKind::gamma: return t.gamma(b.index, b.component);
    case BlockKind::delta: return t.delta(b.index, b.component);
    case BlockKind::tau: break;
  }
  return t.sigma2;
}

double log_conditional(const Conditional& c, double x) {
  if (const auto* n = std::get_if<NormalFactor>(&c)) return log_normal(x, n->location, n->variance);
  if (const auto* tn = std::get_if<TruncNormalParams>(&c)) return log_normal(x, tn->location, tn->scale_sq);
  const auto& g = std::get<GammaFactor>(c);
  return (g.shape - 1.0) * std::log(x) - g.rate * x;
}

}  // namespace

TEST_CASE("parse_block") {
  CHECK(parse_block("mu").kind == BlockKind::mu);
  CHECK(parse_block("tau").kind == BlockKind::tau);
  const Block g = parse_block("g_3");
  CHECK(g.kind == BlockKind::g);
  CHECK(g.index == 2);
  const Block l = parse_block("lambda_2");
  CHECK(l.component == 1);
  const Block gm = parse_block("gamma_4_2");
  CHECK(gm.kind == BlockKind::gamma);
  CHECK(gm.index == 3);
  CHECK(gm.component == 1);
  CHECK(parse_block("delta_1_1").kind == BlockKind::delta);
  for (const char* bad : {"", "sigma", "g", "g_0", "g_x", "gamma_1", "mu_1", "delta_1_1_1", "e_-1"})
    CHECK_THROWS_AS(parse_block(bad), ValidationError);
}

TEST_CASE("full conditionals agree with log-joint differences") {
  SimScenario s = protocol_scenario(5, 4, {20.0, 8.0}, 6);
  s.missing_fraction = 0.25;
  const Simulation sim = simulate(s);
  const Dataset& d = sim.data;
  Hyperparams h = default_hyperparams(d);
  h.sigma2_mu = 50.0;
  h.a = 1.5;
  h.b = 0.7;
  ThetaPoint t = sim.truth;
  t.sigma2 = 1.7;
  std::vector<std::string> names{"mu", "tau", "g_1", "g_5", "e_2", "lambda_1", "lambda_2",
                                 "gamma_1_1", "gamma_3_2", "delta_4_1", "delta_2_2"};
  for (const auto& name : names) {
    CAPTURE(name);
    const Block b = parse_block(name);
    const Conditional c = full_conditional(b, t, d, h);
    if (b.kind == BlockKind::lambda || (b.kind == BlockKind::gamma && b.index == 0))
      CHECK(std::holds_alternative<TruncNormalParams>(c));
    ThetaPoint a = t, z = t;
    double xa, xz;
    if (b.kind == BlockKind::tau) {
      xa = 0.4;
      xz = 2.3;
      a.sigma2 = 1.0 / xa;
      z.sigma2 = 1.0 / xz;
    } else {
      xa = slot(t, b) + 0.3;
      xz = slot(t, b) + 0.9;
      slot(a, b) = xa;
      slot(z, b) = xz;
    }
    const double lhs = log_joint(a, d, h) - log_joint(z, d, h);
    const double rhs = log_conditional(c, xa) - log_conditional(c, xz);
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("full_conditional rejects bad blocks") {
  const Simulation sim = simulate(protocol_scenario(4, 3, {20.0}, 1));
  const Hyperparams h = default_hyperparams(sim.data);
  CHECK_THROWS_AS(full_conditional(parse_block("g_5"), sim.truth, sim.data, h), ValidationError);
  CHECK_THROWS_AS(full_conditional(parse_block("lambda_2"), sim.truth, sim.data, h), ValidationError);
  ThetaPoint wrong = ThetaPoint::zeros(3, 3, 1);
  CHECK_THROWS_AS(full_conditional(parse_block("mu"), wrong, sim.data, h), DimensionMismatchError);
}

TEST_CASE("pack and unpack") {
  const ThetaPoint t = simulate(protocol_scenario(4, 3, {20.0, 5.0}, 2)).truth;
  const Eigen::VectorXd v = pack_theta(t);
  CHECK(v.size() == 2 + 4 + 3 + 2 * 8);
  CHECK(v[0] == t.mu);
  CHECK(v[v.size() - 1] == t.sigma2);
  const ThetaPoint u = unpack_theta(v, 4, 3, 2);
  CHECK(pack_theta(u) == v);
  CHECK(u.gamma == t.gamma);
  CHECK_THROWS_AS(unpack_theta(v, 4, 3, 1), DimensionMismatchError);
  const auto names = parameter_names({"A", "B", "C", "D"}, {"x", "y", "z"}, 2);
  CHECK(names.size() == static_cast<std::size_t>(v.size()));
  CHECK(names[1] == "g[A]");
  CHECK(names[5] == "e[x]");
  CHECK(names[8] == "lambda[1]");
  CHECK(names[10] == "gamma[A,1]");
  CHECK(names[14] == "gamma[A,2]");
  CHECK(names[18] == "delta[x,1]");
  CHECK(names.back() == "sigma2");
}

TEST_CASE("gibbs_fit") {
  const Simulation sim = simulate(protocol_scenario(6, 5, {20.0}, 3));
  ModelConfig c;
  c.n_components = 1;
  c.hyper = default_hyperparams(sim.data);
  c.seed = 42;
  GibbsOptions o;
  o.n_chains = 3;
  o.n_iter = 600;
  o.n_burn = 200;

  const PosteriorDraws a = gibbs_fit(sim.data, c, o);
  CHECK(a.n_chains() == 3);
  CHECK(a.n_kept() == 400);
  CHECK(a.n_burn == 200);
  CHECK(a.names.size() == static_cast<std::size_t>(a.chains[0].cols()));
  for (int ch = 0; ch < 3; ++ch)
    for (int k = 0; k < a.n_kept(); k += 37) {
      const ThetaPoint t = a.draw(ch, k);
      CHECK(t.gamma(0, 0) > 0.0);
      CHECK(t.lambda[0] > 0.0);
      CHECK(t.sigma2 > 0.0);
      CHECK(std::abs(t.g.sum()) < 1e-9);
      CHECK(std::abs(t.gamma.norm() - 1.0) < 1e-9);
    }

  SUBCASE("deterministic regardless of threading") {
    GibbsOptions serial = o;
    serial.parallel_chains = false;
    const PosteriorDraws b = gibbs_fit(sim.data, c, serial);
    for (int ch = 0; ch < 3; ++ch) CHECK(a.chains[ch] == b.chains[ch]);
  }
  SUBCASE("posterior mean near the truth") {
    const ThetaPoint m = post_process(a.posterior_mean());
    const ThetaPoint tr = post_process(sim.truth);
    CHECK(std::abs(m.lambda[0] - tr.lambda[0]) < 3.0);
    CHECK((m.g - tr.g).cwiseAbs().maxCoeff() < 1.5);
    CHECK(m.sigma2 < 3.0);
  }
  SUBCASE("summaries") {
    const auto rows = summarize(a);
    CHECK(rows.size() == a.names.size());
    for (const auto& r : rows) {
      CHECK(r.q05 <= r.q50);
      CHECK(r.q50 <= r.q95);
      CHECK(r.sd >= 0.0);
      CHECK(std::isfinite(r.rhat));
      CHECK(r.rhat < 1.2);
    }
  }
  SUBCASE("explicit start") {
    GibbsOptions e = o;
    e.n_chains = 1;
    e.init = frequentist_fit(sim.data, 1);
    CHECK(gibbs_fit(sim.data, c, e).n_chains() == 1);
    e.init = ThetaPoint::zeros(2, 2, 1);
    CHECK_THROWS_AS(gibbs_fit(sim.data, c, e), DimensionMismatchError);
  }
  SUBCASE("bad options") {
    GibbsOptions e = o;
    e.n_chains = 0;
    CHECK_THROWS_AS(gibbs_fit(sim.data, c, e), ValidationError);
    e = o;
    e.n_burn = e.n_iter;
    CHECK_THROWS_AS(gibbs_fit(sim.data, c, e), ValidationError);
  }
}

TEST_CASE("summarize_chains fixture") {
  Eigen::MatrixXd c1(4, 1), c2(4, 1);
  c1 << 1, 2, 3, 4;
  c2 << 2, 3, 4, 5;
  const auto rows = summarize_chains({"x"}, {c1, c2});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean == doctest::Approx(3.0));
  CHECK(rows[0].q50 == doctest::Approx(3.0));
  CHECK(rows[0].rhat == doctest::Approx(std::sqrt(23.0 / 6.0)));
  const auto single = summarize_chains({"x"}, {c1});
  CHECK(std::isnan(single[0].rhat));
  Eigen::MatrixXd c3(3, 1);
  c3 << 1, 2, 3;
  CHECK_THROWS_AS(summarize_chains({"x"}, {c1, c3}), DimensionMismatchError);
}
