#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ammi/gibbs.hpp"
#include "ammi/model.hpp"
#include "ammi/vi.hpp"

namespace ammi {

struct CellPrediction {
  int genotype = 0;
  int environment = 0;
  double mean = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  bool observed = false;
};

struct PredictiveSummary {
  int n_genotypes = 0;
  int n_environments = 0;
  std::vector<std::string> genotype_labels;
  std::vector<std::string> environment_labels;
  std::vector<CellPrediction> cells;
};

struct PredictOptions {
  int n_draws = 4000;
  bool include_noise = false;
  std::uint64_t seed = 1;
};

using Cell = std::pair<int, int>;

/// Every (i, j) of the grid in row-major order.
std::vector<Cell> all_cells(int n_genotypes, int n_environments);

/// Posterior predictive of the cell mean (plus noise when requested) by
/// simulation from the independent variational factors.
PredictiveSummary predict(const FitResult& fit, const Dataset& data, const std::vector<Cell>& cells,
                          const PredictOptions& options = {});

/// Same summary from stored MCMC draws; every kept draw is used and
/// `n_draws` is ignored.
PredictiveSummary predict(const PosteriorDraws& draws, const Dataset& data,
                          const std::vector<Cell>& cells, const PredictOptions& options = {});

double rmse(std::span<const double> predicted, std::span<const double> reference);

/// In-sample RMSE of the plug-in VI cell means against observed responses.
double in_sample_rmse(const FitResult& fit, const Dataset& data);
/// In-sample RMSE of the posterior-mean cell means against observed responses.
double in_sample_rmse(const PosteriorDraws& draws, const Dataset& data);
/// RMSE of a parameter point's cell means against observed responses.
double in_sample_rmse(const ThetaPoint& theta, const Dataset& data);

/// Writes <prefix>_q05.csv, <prefix>_q50.csv, <prefix>_q95.csv and
/// <prefix>_observed.csv as labelled I x J matrices. The summary must
/// cover every cell.
void export_heatmap(const PredictiveSummary& summary, const std::string& prefix);

struct LabelledMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;
};

LabelledMatrix load_matrix_csv(const std::filesystem::path& path);

/// VI posterior summary per parameter: the mean column is the
/// post-processed variational mean; sd and quantiles come from
/// post-processed draws of the factorised q.
std::vector<ParamSummary> vi_summary(const FitResult& fit, const Dataset& data, int n_draws,
                                     std::uint64_t seed);

/// Factor table: one row per variational factor with columns
/// parameter,level,component,family,param1,param2,mean,sd. For normal and
/// truncated-normal factors param1/param2 are the parent location and
/// variance; for the gamma factor on the precision they are shape and rate.
void write_factors_csv(const VariationalState& state,
                       const std::vector<std::string>& genotype_labels,
                       const std::vector<std::string>& environment_labels,
                       const std::filesystem::path& path);
VariationalState load_factors_csv(const std::filesystem::path& path, const Dataset& data);

/// Full draws, one row per kept iteration: chain,iteration,<parameters>.
void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path);
PosteriorDraws load_draws_csv(const std::filesystem::path& path, const Dataset& data);

void write_summary_csv(const std::vector<ParamSummary>& rows, const std::filesystem::path& path);
std::vector<ParamSummary> load_summary_csv(const std::filesystem::path& path);

struct ComparisonRow {
  std::string name;
  double vi_mean = 0.0;
  double mcmc_mean = 0.0;
  double vi_sd = 0.0;
  double mcmc_sd = 0.0;
  double abs_gap = 0.0;
};

struct RunInfo {
  int n_genotypes = 0;
  int n_environments = 0;
  int n_components = 0;
  double wall_time = 0.0;
  double rmse = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  RunInfo vi;
  RunInfo mcmc;
  double time_ratio = 0.0;  // mcmc / vi

  double max_gap(const std::string& prefix = "") const;
};

ComparisonReport compare(const FitResult& vi, const PosteriorDraws& mcmc, const Dataset& data,
                         int n_vi_draws = 4000, std::uint64_t seed = 1);

/// Joins two parameter tables by name. Throws DimensionMismatchError when
/// the runs disagree on I, J or Q or the parameter sets differ.
ComparisonReport compare_summaries(const std::vector<ParamSummary>& vi, const RunInfo& vi_info,
                                   const std::vector<ParamSummary>& mcmc,
                                   const RunInfo& mcmc_info);

void write_comparison_csv(const ComparisonReport& report, const std::filesystem::path& path);
void write_comparison_text(const ComparisonReport& report, const std::filesystem::path& path);

}  // namespace ammi
