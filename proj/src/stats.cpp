#include "ammi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "ammi/error.hpp"

namespace ammi {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void check(const TruncNormalParams& p) {
  if (!std::isfinite(p.location) || !std::isfinite(p.scale_sq) || !std::isfinite(p.lower_bound))
    throw ValidationError("truncated normal: non-finite parameter");
  if (p.scale_sq <= 0.0)
    throw ValidationError("truncated normal: scale_sq must be positive");
}

double std_normal_log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// Upper-tail quantities at standardized truncation point a.
struct Tail {
  double hazard;    // phi(a) / Q(a)
  double excess;    // hazard - a, kept separately to avoid cancellation
  double var_frac;  // 1 + a*hazard - hazard^2
  double log_mass;  // log Q(a)
};

// Mills ratio R(a) = Q(a)/phi(a) = 1/(a + 1/(a + 2/(a + 3/(a + ...)))).
// Returns t = 1/(a + 2/(a + ...)) so that hazard = a + t exactly.
long double mills_tail_term(long double a) {
  constexpr int kTerms = 200;
  long double acc = a;
  for (int k = kTerms; k >= 2; --k) acc = a + static_cast<long double>(k) / acc;
  return 1.0L / acc;
}

Tail upper_tail(double a) {
  Tail t{};
  if (a <= 8.0) {
    const double mass = 0.5 * std::erfc(a / std::numbers::sqrt2);
    t.log_mass = std::log(mass);
    t.hazard = std::exp(std_normal_log_pdf(a) - t.log_mass);
    t.excess = t.hazard - a;
    t.var_frac = 1.0 - t.hazard * t.excess;
    return t;
  }
  if (a <= 1e3) {
    const long double la = a;
    const long double term = mills_tail_term(la);
    t.excess = static_cast<double>(term);
    t.hazard = static_cast<double>(la + term);
    t.var_frac = static_cast<double>(1.0L - (la + term) * term);
    t.log_mass = std_normal_log_pdf(a) - std::log(static_cast<double>(la + term));
    return t;
  }
  // Asymptotic series; truncation error below 1e-15 relative for a > 1e3.
  const double inv2 = 1.0 / (a * a);
  t.excess = (1.0 / a) * (1.0 - 2.0 * inv2 + 10.0 * inv2 * inv2);
  t.hazard = a + t.excess;
  t.var_frac = inv2 * (1.0 - 6.0 * inv2 + 50.0 * inv2 * inv2);
  t.log_mass = std_normal_log_pdf(a) - std::log(t.hazard);
  return t;
}

}  // namespace

Moments trunc_normal_moments(const TruncNormalParams& p) {
  check(p);
  const double s = std::sqrt(p.scale_sq);
  const double a = (p.lower_bound - p.location) / s;
  const Tail t = upper_tail(a);
  Moments m;
  m.mean = a <= 8.0 ? p.location + s * t.hazard : p.lower_bound + s * t.excess;
  m.variance = p.scale_sq * t.var_frac;
  return m;
}

double trunc_normal_log_mass(const TruncNormalParams& p) {
  check(p);
  return upper_tail((p.lower_bound - p.location) / std::sqrt(p.scale_sq)).log_mass;
}

double trunc_normal_entropy(const TruncNormalParams& p) {
  check(p);
  const double a = (p.lower_bound - p.location) / std::sqrt(p.scale_sq);
  const Tail t = upper_tail(a);
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * p.scale_sq) + t.log_mass +
         0.5 * a * t.hazard;
}

double sample_trunc_normal(Rng& rng, const TruncNormalParams& p) {
  check(p);
  const double s = std::sqrt(p.scale_sq);
  const double a = (p.lower_bound - p.location) / s;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (a < 0.5) {
    std::normal_distribution<double> z;
    for (;;) {
      const double x = z(rng);
      if (x > a) return p.location + s * x;
    }
  }
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    // 1 - U keeps the argument of log in (0, 1].
    const double over = -std::log(1.0 - unif(rng)) / rate;
    const double z = a + over;
    const double accept = std::exp(-0.5 * (z - rate) * (z - rate));
    if (unif(rng) <= accept) {
      const double x = p.lower_bound + s * over;
      // Guards the measure-zero case over == 0.
      return x > p.lower_bound ? x : std::nextafter(p.lower_bound, INFINITY);
    }
  }
}

double sample_normal(Rng& rng, double mean, double variance) {
  std::normal_distribution<double> z;
  return mean + std::sqrt(variance) * z(rng);
}

double sample_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

double normal_entropy(double variance) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

double gamma_entropy(double shape, double rate) {
  return shape - std::log(rate) + std::lgamma(shape) +
         (1.0 - shape) * boost::math::digamma(shape);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> orthonormalize_interaction(
    const Eigen::MatrixXd& raw_gamma, const Eigen::MatrixXd& raw_delta) {
  const auto q = raw_gamma.cols();
  if (raw_delta.cols() != q)
    throw DimensionMismatchError("orthonormalize: gamma and delta have different column counts");
  if (raw_gamma.rows() <= q || raw_delta.rows() <= q)
    throw ValidationError("orthonormalize: need more rows than components");

  auto gram_schmidt = [](Eigen::MatrixXd m, const char* which) {
    m.rowwise() -= m.colwise().mean();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double before = m.col(c).norm();
      for (Eigen::Index k = 0; k < c; ++k) m.col(c) -= m.col(k).dot(m.col(c)) * m.col(k);
      const double after = m.col(c).norm();
      if (!(after > 1e-12 * std::max(before, 1.0)))
        throw DegenerateInputError(std::string("orthonormalize: ") + which + " column " +
                                   std::to_string(c + 1) + " is rank deficient after centring");
      m.col(c) /= after;
    }
    return m;
  };

  Eigen::MatrixXd gamma = gram_schmidt(raw_gamma, "gamma");
  Eigen::MatrixXd delta = gram_schmidt(raw_delta, "delta");
  fix_component_signs(gamma, delta);
  return {std::move(gamma), std::move(delta)};
}

void fix_component_signs(Eigen::MatrixXd& gamma, Eigen::MatrixXd& delta) {
  for (Eigen::Index c = 0; c < gamma.cols(); ++c) {
    const double scale = gamma.col(c).cwiseAbs().maxCoeff();
    Eigen::Index lead = 0;
    while (lead + 1 < gamma.rows() && std::abs(gamma(lead, c)) <= 1e-12 * scale) ++lead;
    if (gamma(lead, c) < 0.0) {
      gamma.col(c) *= -1.0;
      delta.col(c) *= -1.0;
    }
  }
}

double gelman_rubin(const ChainSet& chains) {
  const std::size_t m = chains.n_chains();
  if (m < 2) throw ValidationError("gelman_rubin: need at least 2 chains");
  const std::size_t n_iter = chains.n_iter();
  for (const auto& c : chains.draws)
    if (c.size() != n_iter) throw ValidationError("gelman_rubin: chains differ in length");
  if (n_iter < 4) throw ValidationError("gelman_rubin: need at least 4 iterations per chain");

  const std::size_t half = n_iter / 2;
  std::vector<double> means;
  std::vector<double> vars;
  auto add_segment = [&](const std::vector<double>& c, std::size_t start) {
    double mean = 0.0;
    for (std::size_t t = 0; t < half; ++t) mean += c[start + t];
    mean /= static_cast<double>(half);
    double ss = 0.0;
    for (std::size_t t = 0; t < half; ++t) ss += (c[start + t] - mean) * (c[start + t] - mean);
    means.push_back(mean);
    vars.push_back(ss / static_cast<double>(half - 1));
  };
  // The middle draw of an odd-length chain is dropped.
  for (const auto& c : chains.draws) {
    add_segment(c, 0);
    add_segment(c, n_iter - half);
  }

  const double segs = static_cast<double>(means.size());
  const double n = static_cast<double>(half);
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= segs;
  double between = 0.0;
  for (double v : means) between += (v - grand) * (v - grand);
  between *= n / (segs - 1.0);
  double within = 0.0;
  for (double v : vars) within += v;
  within /= segs;
  if (!(within > 0.0)) throw DegenerateInputError("gelman_rubin: zero within-chain variance");
  const double pooled = (n - 1.0) / n * within + between / n;
  return std::sqrt(pooled / within);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw ValidationError("quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile: probability outside [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("pearson: need two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ammi
