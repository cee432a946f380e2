#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ammi/error.hpp"
#include "ammi/stats.hpp"

using namespace ammi;

namespace {

// Moments of N(m, s2) restricted to (0, inf) by adaptive quadrature.
Moments quadrature_moments(double m, double s2) {
  using boost::math::quadrature::gauss_kronrod;
  auto w = [&](double x) {
    return m < 0 ? std::exp(-(x * x - 2.0 * x * m) / (2.0 * s2))
                 : std::exp(-(x - m) * (x - m) / (2.0 * s2));
  };
  const double inf = std::numeric_limits<double>::infinity();
  const double z0 = gauss_kronrod<double, 61>::integrate(w, 0.0, inf, 15, 1e-15);
  const double z1 = gauss_kronrod<double, 61>::integrate([&](double x) { return x * w(x); }, 0.0, inf, 15, 1e-15);
  const double z2 = gauss_kronrod<double, 61>::integrate([&](double x) { return x * x * w(x); }, 0.0, inf, 15, 1e-15);
  return {z1 / z0, z2 / z0 - (z1 / z0) * (z1 / z0)};
}

// Textbook split R-hat written out directly.
double split_rhat_oracle(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> segs;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    segs.emplace_back(c.begin(), c.begin() + h);
    segs.emplace_back(c.end() - h, c.end());
  }
  const double n = segs[0].size(), m = segs.size();
  std::vector<double> means;
  double W = 0;
  for (const auto& s : segs) {
    double mu = 0;
    for (double v : s) mu += v;
    mu /= n;
    means.push_back(mu);
    double ss = 0;
    for (double v : s) ss += (v - mu) * (v - mu);
    W += ss / (n - 1);
  }
  W /= m;
  double gm = 0;
  for (double v : means) gm += v;
  gm /= m;
  double B = 0;
  for (double v : means) B += (v - gm) * (v - gm);
  B *= n / (m - 1);
  return std::sqrt(((n - 1) / n * W + B / n) / W);
}

}  // namespace

TEST_CASE("half-normal moments") {
  const Moments m = trunc_normal_moments({0.0, 1.0, 0.0});
  CHECK(m.mean == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(1.0 - 2.0 / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("truncation far below the location is negligible") {
  const Moments m = trunc_normal_moments({10.0, 1.0, 0.0});
  CHECK(std::abs(m.mean - 10.0) < 1e-9);
  CHECK(std::abs(m.variance - 1.0) < 1e-9);
}

TEST_CASE("truncated-normal moments agree with quadrature") {
  for (double s2 : {0.01, 0.5, 1.0, 9.0})
    for (double m = -8.0; m <= 8.0; m += 0.5) {
      CAPTURE(m);
      CAPTURE(s2);
      const Moments got = trunc_normal_moments({m, s2, 0.0});
      const Moments ref = quadrature_moments(m, s2);
      CHECK(std::abs(got.mean - ref.mean) <= 1e-9 * std::max(1.0, ref.mean));
      CHECK(std::abs(got.variance - ref.variance) <= 1e-9 * std::max(1.0, ref.variance));
    }
  const Moments got = trunc_normal_moments({-5.0, 1.0, 0.0});
  const Moments ref = quadrature_moments(-5.0, 1.0);
  CHECK(got.mean == doctest::Approx(ref.mean).epsilon(1e-10));
  CHECK(got.variance == doctest::Approx(ref.variance).epsilon(1e-9));
}

TEST_CASE("deep tail stays finite and ordered") {
  for (double m : {-20.0, -100.0, -1e4, -1e8}) {
    const Moments mo = trunc_normal_moments({m, 1.0, 0.0});
    CAPTURE(m);
    CHECK(std::isfinite(mo.mean));
    CHECK(mo.mean > 0.0);
    CHECK(mo.variance > 0.0);
    CHECK(mo.variance < 1.0);
    // Exponential limit: mean ~ 1/|m|, variance ~ 1/m^2.
    CHECK(mo.mean * std::abs(m) == doctest::Approx(1.0).epsilon(3.0 / (m * m)));
  }
}

TEST_CASE("truncation pushes the mean up and shrinks the variance") {
  for (double m = -30.0; m <= 30.0; m += 1.7) {
    const Moments mo = trunc_normal_moments({m, 2.0, 0.0});
    // Far above zero the truncation is invisible in double precision.
    CHECK(mo.mean >= m);
    CHECK(mo.variance <= 2.0);
    if (m < 8.0) {
      CHECK(mo.mean > m);
      CHECK(mo.variance < 2.0);
    }
  }
}

TEST_CASE("truncated-normal inputs are validated") {
  CHECK_THROWS_AS(trunc_normal_moments({0.0, 0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(trunc_normal_moments({std::nan(""), 1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(trunc_normal_moments({0.0, std::numeric_limits<double>::infinity(), 0.0}),
                  ValidationError);
}

TEST_CASE("truncated-normal entropy matches quadrature") {
  using boost::math::quadrature::gauss_kronrod;
  for (double m : {-3.0, 0.0, 1.5}) {
    const double s2 = 0.7;
    const double logz = trunc_normal_log_mass({m, s2, 0.0});
    auto logpdf = [&](double x) {
      return -0.5 * std::log(2 * std::numbers::pi * s2) - (x - m) * (x - m) / (2 * s2) - logz;
    };
    const double h = gauss_kronrod<double, 61>::integrate(
        [&](double x) { return -std::exp(logpdf(x)) * logpdf(x); }, 0.0,
        std::numeric_limits<double>::infinity(), 15, 1e-14);
    CHECK(trunc_normal_entropy({m, s2, 0.0}) == doctest::Approx(h).epsilon(1e-9));
  }
}

TEST_CASE("truncated-normal sampler") {
  Rng rng(3);
  SUBCASE("support") {
    for (int k = 0; k < 1000; ++k) CHECK(sample_trunc_normal(rng, {0.0, 1.0, 0.0}) > 0.0);
  }
  SUBCASE("half-normal mean from 1e6 draws") {
    double s = 0.0;
    const int n = 1000000;
    for (int k = 0; k < n; ++k) s += sample_trunc_normal(rng, {0.0, 1.0, 0.0});
    CHECK(std::abs(s / n - 0.7979) < 0.003);
  }
  SUBCASE("deep tail mean within 3 standard errors of quadrature") {
    const int n = 100000;
    double s = 0.0, ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = sample_trunc_normal(rng, {-8.0, 1.0, 0.0});
      CHECK(x > 0.0);
      s += x;
      ss += x * x;
    }
    const Moments ref = quadrature_moments(-8.0, 1.0);
    const double se = std::sqrt(ref.variance / n);
    CHECK(std::abs(s / n - ref.mean) < 3 * se);
  }
  SUBCASE("moderate location mean and variance") {
    const int n = 200000;
    double s = 0.0, ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = sample_trunc_normal(rng, {1.0, 4.0, 0.0});
      s += x;
      ss += x * x;
    }
    const Moments ref = trunc_normal_moments({1.0, 4.0, 0.0});
    CHECK(std::abs(s / n - ref.mean) < 3 * std::sqrt(ref.variance / n));
    CHECK(ss / n - (s / n) * (s / n) == doctest::Approx(ref.variance).epsilon(0.02));
  }
}

TEST_CASE("gamma and normal entropies") {
  CHECK(normal_entropy(1.0) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e)));
  // Exponential(rate 2): entropy 1 - log 2.
  CHECK(gamma_entropy(1.0, 2.0) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("gamma sampler mean") {
  Rng rng(9);
  double s = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) s += sample_gamma(rng, 3.0, 2.0);
  CHECK(std::abs(s / n - 1.5) < 3 * std::sqrt(3.0 / 4.0 / n));
}

TEST_CASE("orthonormalize: hand example") {
  Eigen::MatrixXd g(3, 1), d(3, 1);
  g << 1, 2, 3;
  d << 3, 1, 2;
  const auto [G, D] = orthonormalize_interaction(g, d);
  // Centred (-1,0,1)/sqrt2 has a negative first entry and is flipped.
  CHECK(G(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(G(1, 0) == doctest::Approx(0.0));
  CHECK(G(2, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  // Delta is centred to (1,-1,0)/sqrt2 and flipped with gamma.
  CHECK(D(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(D(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("orthonormalize: invariants, column space and idempotence") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  for (int Q = 1; Q <= 2; ++Q) {
    Eigen::MatrixXd A(25, Q), B(12, Q);
    for (int r = 0; r < 25; ++r)
      for (int c = 0; c < Q; ++c) A(r, c) = n01(rng);
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < Q; ++c) B(r, c) = n01(rng);
    const auto [G, D] = orthonormalize_interaction(A, B);
    CHECK((G.transpose() * G - Eigen::MatrixXd::Identity(Q, Q)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((D.transpose() * D - Eigen::MatrixXd::Identity(Q, Q)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(G.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    CHECK(D.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    for (int q = 0; q < Q; ++q) CHECK(G(0, q) > 0.0);

    // Classical Gram-Schmidt oracle on the centred input; principal angles
    // through the singular values of the cross product.
    Eigen::MatrixXd Ac = A.rowwise() - A.colwise().mean();
    Eigen::MatrixXd O = Ac;
    for (int q = 0; q < Q; ++q) {
      for (int p = 0; p < q; ++p) O.col(q) -= O.col(p).dot(Ac.col(q)) * O.col(p);
      O.col(q).normalize();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(O.transpose() * G);
    for (int q = 0; q < Q; ++q) CHECK(std::acos(std::min(1.0, svd.singularValues()[q])) < 1e-7);

    const auto [G2, D2] = orthonormalize_interaction(G, D);
    CHECK((G2 - G).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((D2 - D).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("orthonormalize: rank deficiency is reported") {
  Eigen::MatrixXd g(3, 1), d(3, 1);
  g << 2, 2, 2;
  d << 1, 2, 3;
  CHECK_THROWS_AS(orthonormalize_interaction(g, d), DegenerateInputError);
  Eigen::MatrixXd g2(4, 2), d2(4, 2);
  g2 << 1, 2, 2, 4, 3, 6, 4, 8;
  d2 << 1, 0, 0, 1, 1, 1, 2, 0;
  CHECK_THROWS_AS(orthonormalize_interaction(g2, d2), DegenerateInputError);
}

TEST_CASE("split R-hat") {
  SUBCASE("textbook fixture") {
    ChainSet cs;
    cs.draws = {{1, 2, 3, 4}, {2, 3, 4, 5}};
    CHECK(gelman_rubin(cs) == doctest::Approx(std::sqrt(23.0 / 6.0)).epsilon(1e-14));
  }
  SUBCASE("odd length drops the middle draw") {
    ChainSet cs;
    cs.draws = {{0.3, 1.1, 9.0, -0.4, 2.2}, {1.0, 0.1, -5.0, 0.7, 0.2}, {0.5, 0.4, 0.0, 1.9, -1.0}};
    CHECK(gelman_rubin(cs) == doctest::Approx(split_rhat_oracle({{0.3, 1.1, -0.4, 2.2},
                                                                 {1.0, 0.1, 0.7, 0.2},
                                                                 {0.5, 0.4, 1.9, -1.0}}))
                                  .epsilon(1e-14));
  }
  SUBCASE("one white-noise stream split in four") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    ChainSet cs;
    cs.draws.assign(4, {});
    for (int c = 0; c < 4; ++c)
      for (int t = 0; t < 5000; ++t) cs.draws[c].push_back(n01(rng));
    CHECK(gelman_rubin(cs) < 1.01);
    CHECK(gelman_rubin(cs) == doctest::Approx(split_rhat_oracle(cs.draws)).epsilon(1e-12));

    ChainSet t = cs;
    for (auto& c : t.draws)
      for (double& v : c) v = 3.0 * v - 7.0;
    CHECK(gelman_rubin(t) == doctest::Approx(gelman_rubin(cs)).epsilon(1e-12));
  }
  SUBCASE("separated chains") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    ChainSet cs;
    cs.draws.assign(2, {});
    for (int t = 0; t < 500; ++t) {
      cs.draws[0].push_back(n01(rng));
      cs.draws[1].push_back(100.0 + n01(rng));
    }
    CHECK(gelman_rubin(cs) > 1.1);
  }
  SUBCASE("errors") {
    ChainSet one;
    one.draws = {{1, 2, 3, 4}};
    CHECK_THROWS_AS(gelman_rubin(one), ValidationError);
    ChainSet shortc;
    shortc.draws = {{1, 2, 3}, {1, 2, 3}};
    CHECK_THROWS_AS(gelman_rubin(shortc), ValidationError);
    ChainSet flat;
    flat.draws = {{1, 1, 1, 1}, {1, 1, 1, 1}};
    CHECK_THROWS_AS(gelman_rubin(flat), DegenerateInputError);
  }
}

TEST_CASE("quantiles use linear interpolation") {
  std::vector<double> v(100);
  for (int k = 0; k < 100; ++k) v[k] = k + 1;
  CHECK(quantile_sorted(v, 0.5) == 50.5);
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 100.0);
  CHECK(quantile_sorted(v, 0.05) == doctest::Approx(5.95));
  const std::vector<double> c(7, 4.25);
  for (double p : {0.05, 0.5, 0.95}) CHECK(quantile_sorted(c, p) == 4.25);
  CHECK_THROWS_AS(quantile_sorted(std::vector<double>{}, 0.5), ValidationError);
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
}
