#include "ammi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "ammi/error.hpp"
#include "csv.hpp"

namespace ammi {

namespace {

void check_cells(const std::vector<Cell>& cells, int I, int J) {
  for (auto [i, j] : cells)
    if (i < 0 || i >= I || j < 0 || j >= J)
      throw ValidationError("predict: cell (" + std::to_string(i + 1) + ", " +
                            std::to_string(j + 1) + ") out of range");
}

PredictiveSummary summarise_cells(const Dataset& data, const std::vector<Cell>& cells,
                                  std::vector<std::vector<double>>& samples) {
  PredictiveSummary out;
  out.n_genotypes = data.n_genotypes();
  out.n_environments = data.n_environments();
  out.genotype_labels = data.genotype_labels();
  out.environment_labels = data.environment_labels();
  const Eigen::MatrixXd mask = data.observed_mask();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto& s = samples[k];
    CellPrediction c;
    c.genotype = cells[k].first;
    c.environment = cells[k].second;
    double sum = 0.0;
    for (double v : s) sum += v;
    c.mean = sum / static_cast<double>(s.size());
    std::sort(s.begin(), s.end());
    c.q05 = quantile_sorted(s, 0.05);
    c.q50 = quantile_sorted(s, 0.50);
    c.q95 = quantile_sorted(s, 0.95);
    c.observed = mask(c.genotype, c.environment) > 0.5;
    out.cells.push_back(c);
  }
  return out;
}

double rmse_against_data(const Dataset& data, const Eigen::MatrixXd& cell_means) {
  std::vector<double> pred;
  std::vector<double> obs;
  for (const auto& o : data.observations()) {
    pred.push_back(cell_means(o.genotype, o.environment));
    obs.push_back(o.response);
  }
  return rmse(pred, obs);
}

}  // namespace

std::vector<Cell> all_cells(int n_genotypes, int n_environments) {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n_genotypes) * n_environments);
  for (int i = 0; i < n_genotypes; ++i)
    for (int j = 0; j < n_environments; ++j) cells.emplace_back(i, j);
  return cells;
}

PredictiveSummary predict(const FitResult& fit, const Dataset& data, const std::vector<Cell>& cells,
                          const PredictOptions& options) {
  if (fit.state.n_genotypes() != data.n_genotypes() ||
      fit.state.n_environments() != data.n_environments())
    throw DimensionMismatchError("predict: fit and dataset dimensions differ");
  check_cells(cells, data.n_genotypes(), data.n_environments());
  if (options.n_draws < 1) throw ValidationError("predict: n_draws must be positive");
  Rng rng(options.seed);
  std::vector<std::vector<double>> samples(cells.size());
  for (auto& s : samples) s.reserve(options.n_draws);
  for (int d = 0; d < options.n_draws; ++d) {
    const ThetaPoint t = sample_from_state(fit.state, rng);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      double v = model_mean(t, cells[k].first, cells[k].second);
      if (options.include_noise) v += sample_normal(rng, 0.0, t.sigma2);
      samples[k].push_back(v);
    }
  }
  return summarise_cells(data, cells, samples);
}

PredictiveSummary predict(const PosteriorDraws& draws, const Dataset& data,
                          const std::vector<Cell>& cells, const PredictOptions& options) {
  if (draws.n_genotypes != data.n_genotypes() || draws.n_environments != data.n_environments())
    throw DimensionMismatchError("predict: draws and dataset dimensions differ");
  check_cells(cells, data.n_genotypes(), data.n_environments());
  if (draws.n_kept() == 0) throw ValidationError("predict: no draws");
  Rng rng(options.seed);
  std::vector<std::vector<double>> samples(cells.size());
  for (int c = 0; c < draws.n_chains(); ++c)
    for (int it = 0; it < draws.n_kept(); ++it) {
      const ThetaPoint t = draws.draw(c, it);
      for (std::size_t k = 0; k < cells.size(); ++k) {
        double v = model_mean(t, cells[k].first, cells[k].second);
        if (options.include_noise) v += sample_normal(rng, 0.0, t.sigma2);
        samples[k].push_back(v);
      }
    }
  return summarise_cells(data, cells, samples);
}

double rmse(std::span<const double> predicted, std::span<const double> reference) {
  if (predicted.empty() || predicted.size() != reference.size())
    throw ValidationError("rmse: need two non-empty vectors of equal length");
  double ss = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const double d = predicted[k] - reference[k];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(predicted.size()));
}

double in_sample_rmse(const FitResult& fit, const Dataset& data) {
  const ExpectationCache c = ExpectationCache::from_state(fit.state);
  Eigen::MatrixXd m(data.n_genotypes(), data.n_environments());
  for (int i = 0; i < data.n_genotypes(); ++i)
    for (int j = 0; j < data.n_environments(); ++j) m(i, j) = c.fitted(i, j);
  return rmse_against_data(data, m);
}

double in_sample_rmse(const PosteriorDraws& draws, const Dataset& data) {
  if (draws.n_kept() == 0) throw ValidationError("rmse: no draws");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(data.n_genotypes(), data.n_environments());
  double count = 0.0;
  for (int c = 0; c < draws.n_chains(); ++c)
    for (int it = 0; it < draws.n_kept(); ++it) {
      acc += model_mean_matrix(draws.draw(c, it));
      count += 1.0;
    }
  return rmse_against_data(data, acc / count);
}

double in_sample_rmse(const ThetaPoint& theta, const Dataset& data) {
  return rmse_against_data(data, model_mean_matrix(theta));
}

void export_heatmap(const PredictiveSummary& summary, const std::string& prefix) {
  const int I = summary.n_genotypes;
  const int J = summary.n_environments;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd q05 = Eigen::MatrixXd::Constant(I, J, nan);
  Eigen::MatrixXd q50 = q05, q95 = q05;
  Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(I, J);
  for (const auto& c : summary.cells) {
    q05(c.genotype, c.environment) = c.q05;
    q50(c.genotype, c.environment) = c.q50;
    q95(c.genotype, c.environment) = c.q95;
    observed(c.genotype, c.environment) = c.observed ? 1.0 : 0.0;
  }
  if (q50.hasNaN()) throw ValidationError("export_heatmap: summary does not cover every cell");

  auto write = [&](const Eigen::MatrixXd& m, const std::string& suffix, bool integer) {
    const std::string path = prefix + "_" + suffix + ".csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "genotype";
    for (const auto& l : summary.environment_labels) out << ',' << l;
    out << '\n';
    for (int i = 0; i < I; ++i) {
      out << summary.genotype_labels[i];
      for (int j = 0; j < J; ++j)
        out << ',' << (integer ? std::to_string(static_cast<int>(m(i, j))) : format_number(m(i, j), 12));
      out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
  };
  write(q05, "q05", false);
  write(q50, "q50", false);
  write(q95, "q95", false);
  write(observed, "observed", true);
}

LabelledMatrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  LabelledMatrix m;
  auto header = detail::split_csv(detail::trim_eol(line));
  m.col_labels.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != header.size()) throw ValidationError(path.string() + ": ragged row");
    m.row_labels.push_back(f[0]);
    std::vector<double> r;
    for (std::size_t k = 1; k < f.size(); ++k) {
      double v = 0.0;
      if (!detail::parse_double(f[k], v))
        throw ValidationError(path.string() + ": bad number '" + f[k] + "'");
      r.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.col_labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.values(i, j) = rows[i][j];
  return m;
}

std::vector<ParamSummary> vi_summary(const FitResult& fit, const Dataset& data, int n_draws,
                                     std::uint64_t seed) {
  if (n_draws < 2) throw ValidationError("vi_summary: need at least 2 draws");
  const int Q = fit.state.n_components();
  const auto names = parameter_names(data.genotype_labels(), data.environment_labels(), Q);
  Rng rng(seed);
  Eigen::MatrixXd chain(n_draws, static_cast<Eigen::Index>(names.size()));
  for (int d = 0; d < n_draws; ++d)
    chain.row(d) = pack_theta(post_process(sample_from_state(fit.state, rng))).transpose();
  auto rows = summarize_chains(names, {chain});
  const Eigen::VectorXd point = pack_theta(fit.identified);
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k].mean = point[static_cast<Eigen::Index>(k)];
  return rows;
}

void write_summary_csv(const std::vector<ParamSummary>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "parameter,mean,sd,q05,q50,q95,rhat\n";
  for (const auto& r : rows)
    out << '"' << r.name << "\"," << format_number(r.mean, 12) << ',' << format_number(r.sd, 12) << ','
        << format_number(r.q05, 12) << ',' << format_number(r.q50, 12) << ','
        << format_number(r.q95, 12) << ',' << (std::isnan(r.rhat) ? "NA" : format_number(r.rhat, 12))
        << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ParamSummary> load_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::trim_eol(line) != "parameter,mean,sd,q05,q50,q95,rhat")
    throw ValidationError(path.string() + ": not a parameter summary table");
  std::vector<ParamSummary> rows;
  while (std::getline(in, line)) {
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    // Parameter names contain commas inside brackets; split from the right.
    std::vector<std::string> f;
    std::string rest = line;
    for (int k = 0; k < 6; ++k) {
      const auto pos = rest.rfind(',');
      if (pos == std::string::npos) throw ValidationError(path.string() + ": short row");
      f.insert(f.begin(), rest.substr(pos + 1));
      rest.erase(pos);
    }
    ParamSummary r;
    r.name = (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"')
                 ? rest.substr(1, rest.size() - 2)
                 : rest;
    double* dst[] = {&r.mean, &r.sd, &r.q05, &r.q50, &r.q95};
    for (int k = 0; k < 5; ++k)
      if (!detail::parse_double(f[k], *dst[k]))
        throw ValidationError(path.string() + ": bad number '" + f[k] + "'");
    if (f[5] == "NA") r.rhat = std::numeric_limits<double>::quiet_NaN();
    else if (!detail::parse_double(f[5], r.rhat))
      throw ValidationError(path.string() + ": bad rhat '" + f[5] + "'");
    rows.push_back(std::move(r));
  }
  return rows;
}

double ComparisonReport::max_gap(const std::string& prefix) const {
  double m = 0.0;
  for (const auto& r : rows)
    if (r.name.compare(0, prefix.size(), prefix) == 0) m = std::max(m, r.abs_gap);
  return m;
}

ComparisonReport compare_summaries(const std::vector<ParamSummary>& vi, const RunInfo& vi_info,
                                   const std::vector<ParamSummary>& mcmc,
                                   const RunInfo& mcmc_info) {
  if (vi_info.n_genotypes != mcmc_info.n_genotypes ||
      vi_info.n_environments != mcmc_info.n_environments ||
      vi_info.n_components != mcmc_info.n_components)
    throw DimensionMismatchError(
        "compare: runs differ in dimensions (VI I=" + std::to_string(vi_info.n_genotypes) +
        " J=" + std::to_string(vi_info.n_environments) + " Q=" +
        std::to_string(vi_info.n_components) + ", MCMC I=" + std::to_string(mcmc_info.n_genotypes) +
        " J=" + std::to_string(mcmc_info.n_environments) + " Q=" +
        std::to_string(mcmc_info.n_components) + ")");
  std::map<std::string, const ParamSummary*> by_name;
  for (const auto& r : mcmc) by_name[r.name] = &r;
  if (by_name.size() != vi.size())
    throw DimensionMismatchError("compare: parameter sets differ");
  ComparisonReport rep;
  rep.vi = vi_info;
  rep.mcmc = mcmc_info;
  rep.time_ratio = vi_info.wall_time > 0.0 ? mcmc_info.wall_time / vi_info.wall_time
                                           : std::numeric_limits<double>::infinity();
  for (const auto& r : vi) {
    auto it = by_name.find(r.name);
    if (it == by_name.end())
      throw DimensionMismatchError("compare: parameter " + r.name + " missing from MCMC run");
    rep.rows.push_back({r.name, r.mean, it->second->mean, r.sd, it->second->sd,
                        std::abs(r.mean - it->second->mean)});
  }
  return rep;
}

ComparisonReport compare(const FitResult& vi, const PosteriorDraws& mcmc, const Dataset& data,
                         int n_vi_draws, std::uint64_t seed) {
  RunInfo vi_info{vi.state.n_genotypes(), vi.state.n_environments(), vi.state.n_components(),
                  vi.wall_time, 0.0};
  RunInfo mcmc_info{mcmc.n_genotypes, mcmc.n_environments, mcmc.n_components, mcmc.wall_time, 0.0};
  if (vi_info.n_genotypes != data.n_genotypes() || vi_info.n_environments != data.n_environments())
    throw DimensionMismatchError("compare: VI fit does not match the dataset");
  // Dimension check before any sampling work.
  compare_summaries({}, vi_info, {}, mcmc_info);
  vi_info.rmse = in_sample_rmse(vi, data);
  mcmc_info.rmse = in_sample_rmse(mcmc, data);
  return compare_summaries(vi_summary(vi, data, n_vi_draws, seed), vi_info, summarize(mcmc),
                           mcmc_info);
}

void write_comparison_csv(const ComparisonReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "parameter,vi_mean,mcmc_mean,vi_sd,mcmc_sd,abs_gap\n";
  for (const auto& r : report.rows)
    out << '"' << r.name << "\"," << format_number(r.vi_mean, 12) << ',' << format_number(r.mcmc_mean, 12)
        << ',' << format_number(r.vi_sd, 12) << ',' << format_number(r.mcmc_sd, 12) << ','
        << format_number(r.abs_gap, 12) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_comparison_text(const ComparisonReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "VI vs MCMC comparison (I=" << report.vi.n_genotypes << ", J=" << report.vi.n_environments
      << ", Q=" << report.vi.n_components << ")\n";
  out << "  wall time VI:   " << format_number(report.vi.wall_time, 6) << " s\n";
  out << "  wall time MCMC: " << format_number(report.mcmc.wall_time, 6) << " s\n";
  out << "  MCMC/VI ratio:  " << format_number(report.time_ratio, 6) << "\n";
  out << "  in-sample RMSE VI:   " << format_number(report.vi.rmse, 6) << "\n";
  out << "  in-sample RMSE MCMC: " << format_number(report.mcmc.rmse, 6) << "\n";
  out << "  max |mean gap| mu: " << format_number(report.max_gap("mu"), 6) << "\n";
  out << "  max |mean gap| g:  " << format_number(report.max_gap("g["), 6) << "\n";
  out << "  max |mean gap| e:  " << format_number(report.max_gap("e["), 6) << "\n";
  out << "  max |mean gap| all parameters: " << format_number(report.max_gap(), 6) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ammi

namespace ammi {

namespace {

std::string quoted(const std::string& s) { return '"' + s + '"'; }

}  // namespace

void write_factors_csv(const VariationalState& state, const std::vector<std::string>& glabels,
                       const std::vector<std::string>& elabels, const std::filesystem::path& path) {
  state.validate();
  if (static_cast<int>(glabels.size()) != state.n_genotypes() ||
      static_cast<int>(elabels.size()) != state.n_environments())
    throw DimensionMismatchError("write_factors_csv: label count does not match state");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "parameter,level,component,family,param1,param2,mean,sd\n";
  auto normal = [&](const char* name, const std::string& level, int q, double loc, double var) {
    out << name << ',' << level << ',' << (q > 0 ? std::to_string(q) : "") << ",normal,"
        << format_number(loc) << ',' << format_number(var) << ',' << format_number(loc) << ','
        << format_number(std::sqrt(var)) << '\n';
  };
  auto truncated = [&](const char* name, const std::string& level, int q, double loc, double var) {
    const Moments m = trunc_normal_moments({loc, var, 0.0});
    out << name << ',' << level << ',' << q << ",truncnormal," << format_number(loc) << ','
        << format_number(var) << ',' << format_number(m.mean) << ','
        << format_number(std::sqrt(m.variance)) << '\n';
  };
  normal("mu", "", 0, state.mu_loc, state.mu_var);
  for (int i = 0; i < state.n_genotypes(); ++i) normal("g", glabels[i], 0, state.g_loc[i], state.g_var[i]);
  for (int j = 0; j < state.n_environments(); ++j)
    normal("e", elabels[j], 0, state.e_loc[j], state.e_var[j]);
  for (int q = 0; q < state.n_components(); ++q) {
    truncated("lambda", "", q + 1, state.lambda_loc[q], state.lambda_var[q]);
    for (int i = 0; i < state.n_genotypes(); ++i) {
      if (i == 0) truncated("gamma", glabels[i], q + 1, state.gamma_loc(i, q), state.gamma_var(i, q));
      else normal("gamma", glabels[i], q + 1, state.gamma_loc(i, q), state.gamma_var(i, q));
    }
    for (int j = 0; j < state.n_environments(); ++j)
      normal("delta", elabels[j], q + 1, state.delta_loc(j, q), state.delta_var(j, q));
  }
  const double mean = state.tau_shape / state.tau_rate;
  out << "tau,,,gamma," << format_number(state.tau_shape) << ',' << format_number(state.tau_rate)
      << ',' << format_number(mean) << ',' << format_number(std::sqrt(state.tau_shape) / state.tau_rate)
      << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

VariationalState load_factors_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim_eol(line) != "parameter,level,component,family,param1,param2,mean,sd")
    throw ValidationError(path.string() + ": not a variational factor table");
  struct Row {
    std::string name, level;
    int component = 0;
    double p1 = 0.0, p2 = 0.0;
  };
  std::vector<Row> rows;
  int Q = 0;
  while (std::getline(in, line)) {
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 8) throw ValidationError(path.string() + ": expected 8 fields per row");
    Row r{f[0], f[1]};
    if (!f[2].empty()) {
      double c = 0.0;
      if (!detail::parse_double(f[2], c) || c < 1 || c != std::floor(c))
        throw ValidationError(path.string() + ": bad component '" + f[2] + "'");
      r.component = static_cast<int>(c);
    }
    if (!detail::parse_double(f[4], r.p1) || !detail::parse_double(f[5], r.p2))
      throw ValidationError(path.string() + ": bad factor parameters in row '" + line + "'");
    if (r.name == "lambda") Q = std::max(Q, r.component);
    rows.push_back(std::move(r));
  }
  const int I = data.n_genotypes();
  const int J = data.n_environments();
  VariationalState s;
  s.g_loc = s.g_var = Eigen::VectorXd::Zero(I);
  s.e_loc = s.e_var = Eigen::VectorXd::Zero(J);
  s.lambda_loc = s.lambda_var = Eigen::VectorXd::Zero(Q);
  s.gamma_loc = s.gamma_var = Eigen::MatrixXd::Zero(I, Q);
  s.delta_loc = s.delta_var = Eigen::MatrixXd::Zero(J, Q);
  auto index_of = [&](const std::vector<std::string>& labels, const std::string& l) {
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == l) return static_cast<Eigen::Index>(k);
    throw DimensionMismatchError(path.string() + ": unknown level '" + l + "'");
  };
  auto comp = [&](const Row& r) {
    if (r.component < 1 || r.component > Q)
      throw DimensionMismatchError(path.string() + ": component out of range");
    return static_cast<Eigen::Index>(r.component - 1);
  };
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.name == "mu") {
      s.mu_loc = r.p1;
      s.mu_var = r.p2;
    } else if (r.name == "tau") {
      s.tau_shape = r.p1;
      s.tau_rate = r.p2;
    } else if (r.name == "g") {
      const auto i = index_of(data.genotype_labels(), r.level);
      s.g_loc[i] = r.p1;
      s.g_var[i] = r.p2;
    } else if (r.name == "e") {
      const auto j = index_of(data.environment_labels(), r.level);
      s.e_loc[j] = r.p1;
      s.e_var[j] = r.p2;
    } else if (r.name == "lambda") {
      s.lambda_loc[comp(r)] = r.p1;
      s.lambda_var[comp(r)] = r.p2;
    } else if (r.name == "gamma") {
      const auto i = index_of(data.genotype_labels(), r.level);
      s.gamma_loc(i, comp(r)) = r.p1;
      s.gamma_var(i, comp(r)) = r.p2;
    } else if (r.name == "delta") {
      const auto j = index_of(data.environment_labels(), r.level);
      s.delta_loc(j, comp(r)) = r.p1;
      s.delta_var(j, comp(r)) = r.p2;
    } else {
      throw ValidationError(path.string() + ": unknown factor '" + r.name + "'");
    }
    ++count;
  }
  const std::size_t expected = 2 + I + J + static_cast<std::size_t>(Q) * (1 + I + J);
  if (count != expected)
    throw DimensionMismatchError(path.string() + ": expected " + std::to_string(expected) +
                                 " factor rows, found " + std::to_string(count));
  s.validate();
  return s;
}

void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "chain,iteration";
  for (const auto& n : draws.names) out << ',' << quoted(n);
  out << '\n';
  for (int c = 0; c < draws.n_chains(); ++c)
    for (int it = 0; it < draws.n_kept(); ++it) {
      out << c + 1 << ',' << draws.n_burn + it + 1;
      for (Eigen::Index k = 0; k < draws.chains[c].cols(); ++k)
        out << ',' << format_number(draws.chains[c](it, k));
      out << '\n';
    }
  if (!out) throw IoError("write failed for " + path.string());
}

PosteriorDraws load_draws_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  line = detail::trim_eol(line);
  if (line.rfind("chain,iteration,", 0) != 0)
    throw ValidationError(path.string() + ": not a draws table");
  const int I = data.n_genotypes();
  const int J = data.n_environments();
  // Column count fixes Q: 2 + I + J + Q (1 + I + J) parameters.
  std::vector<std::vector<double>> rows;
  std::vector<int> chain_of;
  std::size_t width = 0;
  int first_iter = -1;
  while (std::getline(in, line)) {
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (width == 0) width = f.size();
    if (f.size() != width || width < 3) throw ValidationError(path.string() + ": ragged row");
    double c = 0.0, it = 0.0;
    if (!detail::parse_double(f[0], c) || !detail::parse_double(f[1], it))
      throw ValidationError(path.string() + ": bad chain/iteration");
    if (first_iter < 0) first_iter = static_cast<int>(it);
    std::vector<double> r(width - 2);
    for (std::size_t k = 2; k < width; ++k)
      if (!detail::parse_double(f[k], r[k - 2]))
        throw ValidationError(path.string() + ": bad number '" + f[k] + "'");
    chain_of.push_back(static_cast<int>(c));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no draws");
  const long p = static_cast<long>(width) - 2;
  const long rest = p - 2 - I - J;
  if (rest < 0 || rest % (1 + I + J) != 0)
    throw DimensionMismatchError(path.string() + ": column count does not match the dataset");
  PosteriorDraws d;
  d.n_genotypes = I;
  d.n_environments = J;
  d.n_components = static_cast<int>(rest / (1 + I + J));
  d.n_burn = first_iter - 1;
  d.names = parameter_names(data.genotype_labels(), data.environment_labels(), d.n_components);
  const int n_chains = *std::max_element(chain_of.begin(), chain_of.end());
  std::vector<std::vector<std::size_t>> members(n_chains);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (chain_of[r] < 1) throw ValidationError(path.string() + ": bad chain index");
    members[chain_of[r] - 1].push_back(r);
  }
  for (const auto& m : members) {
    if (m.size() != members.front().size())
      throw ValidationError(path.string() + ": chains have different lengths");
    Eigen::MatrixXd ch(static_cast<Eigen::Index>(m.size()), p);
    for (std::size_t r = 0; r < m.size(); ++r)
      for (long k = 0; k < p; ++k) ch(static_cast<Eigen::Index>(r), k) = rows[m[r]][k];
    d.chains.push_back(std::move(ch));
  }
  return d;
}

}  // namespace ammi
