#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ammi {

/// One observed cell of the genotype x environment table. Indices are
/// zero-based internally; labels carry the external names.
struct Observation {
  int genotype = 0;
  int environment = 0;
  double response = 0.0;
};

enum class Coverage { required, optional };

/// Long-format trial data over a possibly incomplete I x J grid.
class Dataset {
 public:
  Dataset() = default;

  /// Validates index ranges, finiteness and cell uniqueness. With
  /// Coverage::required every row and column must hold at least one cell.
  Dataset(int n_genotypes, int n_environments, std::vector<Observation> obs,
          std::vector<std::string> genotype_labels = {},
          std::vector<std::string> environment_labels = {},
          Coverage coverage = Coverage::required);

  int n_genotypes() const { return n_genotypes_; }
  int n_environments() const { return n_environments_; }
  std::size_t size() const { return obs_.size(); }
  const std::vector<Observation>& observations() const { return obs_; }
  const std::vector<std::string>& genotype_labels() const { return genotype_labels_; }
  const std::vector<std::string>& environment_labels() const { return environment_labels_; }

  double grand_mean() const;
  bool is_complete() const {
    return obs_.size() == static_cast<std::size_t>(n_genotypes_) * n_environments_;
  }
  /// I x J matrix of booleans-as-doubles (1 observed, 0 missing).
  Eigen::MatrixXd observed_mask() const;

 private:
  int n_genotypes_ = 0;
  int n_environments_ = 0;
  std::vector<Observation> obs_;
  std::vector<std::string> genotype_labels_;
  std::vector<std::string> environment_labels_;
};

struct Hyperparams {
  double mu_mu = 0.0;
  double sigma2_mu = 1e6;
  double sigma2_g = 100.0;
  double sigma2_e = 100.0;
  double sigma2_lambda = 100.0;
  double a = 0.1;
  double b = 0.1;

  void validate() const;
};

/// Weakly informative defaults; mu_mu is the sample grand mean.
Hyperparams default_hyperparams(const Dataset& data);

/// One concrete parameter assignment: truth, initial value or a Gibbs state.
struct ThetaPoint {
  double mu = 0.0;
  Eigen::VectorXd g;
  Eigen::VectorXd e;
  Eigen::VectorXd lambda;
  Eigen::MatrixXd gamma;  // I x Q
  Eigen::MatrixXd delta;  // J x Q
  double sigma2 = 1.0;

  int n_components() const { return static_cast<int>(lambda.size()); }
  static ThetaPoint zeros(int n_genotypes, int n_environments, int n_components);
  /// Throws DimensionMismatchError when any block disagrees with (I, J, Q).
  void check_dims(int n_genotypes, int n_environments, int n_components) const;
  void check_dims(const Dataset& data) const;
};

struct ModelConfig {
  int n_components = 1;
  Hyperparams hyper;
  int max_iter = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  /// Variance given to every Normal factor by init_state.
  double init_variance = 1.0;

  void validate() const;
};

/// mu + g_i + e_j + sum_q lambda_q gamma_iq delta_jq.
double model_mean(const ThetaPoint& theta, int i, int j);

/// The full I x J matrix of cell means.
Eigen::MatrixXd model_mean_matrix(const ThetaPoint& theta);

/// Reads `genotype,environment,yield`. Indices follow first appearance of
/// each label.
Dataset load_csv(const std::filesystem::path& path);
void write_csv(const Dataset& data, const std::filesystem::path& path);

struct CellCounts {
  std::size_t n = 0;
  std::vector<int> per_genotype;
  std::vector<int> per_environment;
};

CellCounts cell_counts(const Dataset& data);

/// Shortest-exact by default (17 significant digits); report tables pass 12.
std::string format_number(double v, int significant_digits = 17);

}  // namespace ammi

namespace ammi {

/// Named-parameter CSV: `parameter,level,component,value`, one row per
/// scalar (mu, g, e, lambda, gamma, delta, sigma2). Levels are labels.
void write_theta_csv(const ThetaPoint& theta, const std::vector<std::string>& genotype_labels,
                     const std::vector<std::string>& environment_labels,
                     const std::filesystem::path& path);

/// Reads a file written by write_theta_csv, mapping levels through the
/// labels of `data`. Q is inferred from the lambda rows.
ThetaPoint load_theta_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace ammi
