#pragma once

#include <Eigen/Dense>

#include "ammi/model.hpp"

namespace ammi {

struct AdditiveFit {
  double mu = 0.0;
  Eigen::VectorXd g;
  Eigen::VectorXd e;
};

struct InteractionFit {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd delta;
};

/// Least-squares additive fit under sum(g) = sum(e) = 0. Complete tables
/// reduce to grand/row/column means; incomplete tables solve the
/// constrained normal equations. Throws DegenerateInputError when the
/// observed cells do not connect all rows and columns.
AdditiveFit fit_additive(const Dataset& data);

/// Rank-Q SVD of the additive residuals. Unobserved cells are filled with
/// a zero residual and the matrix is double-centred before decomposing.
InteractionFit fit_interaction(const Dataset& data, const AdditiveFit& additive,
                               int n_components);

/// Two-stage fit; sigma2 is the mean squared residual over observed cells
/// after removing Q components.
ThetaPoint frequentist_fit(const Dataset& data, int n_components);

/// Residual matrix y - (mu + g_i + e_j), zero where unobserved.
Eigen::MatrixXd additive_residuals(const Dataset& data, const AdditiveFit& additive);

}  // namespace ammi
