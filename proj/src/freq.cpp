#include "ammi/freq.hpp"

#include <algorithm>
#include <cmath>

#include "ammi/error.hpp"
#include "ammi/stats.hpp"

namespace ammi {

AdditiveFit fit_additive(const Dataset& data) {
  const int I = data.n_genotypes();
  const int J = data.n_environments();
  const CellCounts counts = cell_counts(data);
  for (int i = 0; i < I; ++i)
    if (counts.per_genotype[i] == 0)
      throw DegenerateInputError("additive fit: genotype " + data.genotype_labels()[i] +
                                 " has no observations");
  for (int j = 0; j < J; ++j)
    if (counts.per_environment[j] == 0)
      throw DegenerateInputError("additive fit: environment " + data.environment_labels()[j] +
                                 " has no observations");

  AdditiveFit fit;
  fit.g = Eigen::VectorXd::Zero(I);
  fit.e = Eigen::VectorXd::Zero(J);
  if (data.is_complete()) {
    for (const auto& o : data.observations()) {
      fit.g[o.genotype] += o.response;
      fit.e[o.environment] += o.response;
    }
    fit.mu = data.grand_mean();
    fit.g = fit.g / J - Eigen::VectorXd::Constant(I, fit.mu);
    fit.e = fit.e / I - Eigen::VectorXd::Constant(J, fit.mu);
    return fit;
  }

  // KKT system for min ||y - mu - g_i - e_j||^2 s.t. 1'g = 0, 1'e = 0 over
  // unknowns (mu, g, e, two multipliers).
  const int p = 1 + I + J;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(p + 2, p + 2);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 2);
  for (const auto& o : data.observations()) {
    const int idx[3] = {0, 1 + o.genotype, 1 + I + o.environment};
    for (int a : idx) {
      rhs[a] += o.response;
      for (int b : idx) kkt(a, b) += 1.0;
    }
  }
  for (int i = 0; i < I; ++i) kkt(p, 1 + i) = kkt(1 + i, p) = 1.0;
  for (int j = 0; j < J; ++j) kkt(p + 1, 1 + I + j) = kkt(1 + I + j, p + 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible())
    throw DegenerateInputError(
        "additive fit: observed cells do not connect all genotypes and environments");
  const Eigen::VectorXd sol = lu.solve(rhs);
  fit.mu = sol[0];
  fit.g = sol.segment(1, I);
  fit.e = sol.segment(1 + I, J);
  return fit;
}

Eigen::MatrixXd additive_residuals(const Dataset& data, const AdditiveFit& additive) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(data.n_genotypes(), data.n_environments());
  for (const auto& o : data.observations())
    r(o.genotype, o.environment) =
        o.response - additive.mu - additive.g[o.genotype] - additive.e[o.environment];
  return r;
}

InteractionFit fit_interaction(const Dataset& data, const AdditiveFit& additive,
                               int n_components) {
  const int I = data.n_genotypes();
  const int J = data.n_environments();
  if (n_components < 0) throw ValidationError("interaction fit: Q must be non-negative");
  if (n_components >= std::min(I, J))
    throw DegenerateInputError("interaction fit: Q must be smaller than min(I, J)");
  InteractionFit fit;
  fit.lambda = Eigen::VectorXd::Zero(n_components);
  fit.gamma = Eigen::MatrixXd::Zero(I, n_components);
  fit.delta = Eigen::MatrixXd::Zero(J, n_components);
  if (n_components == 0) return fit;

  Eigen::MatrixXd r = additive_residuals(data, additive);
  r.rowwise() -= r.colwise().mean();
  r.colwise() -= r.rowwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double top = sv[0];
  if (!(sv[n_components - 1] > 1e-12 * std::max(top, 1.0)))
    throw DegenerateInputError("interaction fit: Q exceeds the rank of the residual matrix");
  fit.lambda = sv.head(n_components);
  fit.gamma = svd.matrixU().leftCols(n_components);
  fit.delta = svd.matrixV().leftCols(n_components);
  fix_component_signs(fit.gamma, fit.delta);
  return fit;
}

ThetaPoint frequentist_fit(const Dataset& data, int n_components) {
  const AdditiveFit add = fit_additive(data);
  const InteractionFit inter = fit_interaction(data, add, n_components);
  ThetaPoint t;
  t.mu = add.mu;
  t.g = add.g;
  t.e = add.e;
  t.lambda = inter.lambda;
  t.gamma = inter.gamma;
  t.delta = inter.delta;
  double sse = 0.0;
  for (const auto& o : data.observations()) {
    const double d = o.response - model_mean(t, o.genotype, o.environment);
    sse += d * d;
  }
  t.sigma2 = std::max(sse / static_cast<double>(data.size()), 1e-12);
  return t;
}

}  // namespace ammi
