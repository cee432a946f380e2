#include "ammi/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ammi/error.hpp"
#include "csv.hpp"

namespace ammi {

Dataset::Dataset(int n_genotypes, int n_environments, std::vector<Observation> obs,
                 std::vector<std::string> genotype_labels,
                 std::vector<std::string> environment_labels, Coverage coverage)
    : n_genotypes_(n_genotypes),
      n_environments_(n_environments),
      obs_(std::move(obs)),
      genotype_labels_(std::move(genotype_labels)),
      environment_labels_(std::move(environment_labels)) {
  if (n_genotypes_ < 1 || n_environments_ < 1)
    throw ValidationError("dataset: need at least one genotype and one environment");
  if (genotype_labels_.empty())
    for (int i = 0; i < n_genotypes_; ++i) genotype_labels_.push_back("G" + std::to_string(i + 1));
  if (environment_labels_.empty())
    for (int j = 0; j < n_environments_; ++j)
      environment_labels_.push_back("E" + std::to_string(j + 1));
  if (static_cast<int>(genotype_labels_.size()) != n_genotypes_ ||
      static_cast<int>(environment_labels_.size()) != n_environments_)
    throw DimensionMismatchError("dataset: label count does not match dimensions");

  std::vector<char> seen(static_cast<std::size_t>(n_genotypes_) * n_environments_, 0);
  std::vector<int> rows(n_genotypes_, 0);
  std::vector<int> cols(n_environments_, 0);
  for (const auto& o : obs_) {
    if (o.genotype < 0 || o.genotype >= n_genotypes_ || o.environment < 0 ||
        o.environment >= n_environments_)
      throw ValidationError("dataset: cell index out of range");
    if (!std::isfinite(o.response)) throw ValidationError("dataset: non-finite response");
    auto& flag = seen[static_cast<std::size_t>(o.genotype) * n_environments_ + o.environment];
    if (flag)
      throw ValidationError("duplicate cell (" + genotype_labels_[o.genotype] + ", " +
                            environment_labels_[o.environment] + ")");
    flag = 1;
    ++rows[o.genotype];
    ++cols[o.environment];
  }
  if (coverage == Coverage::required) {
    for (int i = 0; i < n_genotypes_; ++i)
      if (rows[i] == 0)
        throw ValidationError("dataset: genotype " + genotype_labels_[i] + " has no observations");
    for (int j = 0; j < n_environments_; ++j)
      if (cols[j] == 0)
        throw ValidationError("dataset: environment " + environment_labels_[j] +
                              " has no observations");
  }
}

double Dataset::grand_mean() const {
  if (obs_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : obs_) s += o.response;
  return s / static_cast<double>(obs_.size());
}

Eigen::MatrixXd Dataset::observed_mask() const {
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n_genotypes_, n_environments_);
  for (const auto& o : obs_) mask(o.genotype, o.environment) = 1.0;
  return mask;
}

void Hyperparams::validate() const {
  if (!std::isfinite(mu_mu)) throw ValidationError("hyperparameter mu_mu must be finite");
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string("hyperparameter ") + name + " must be positive");
  };
  pos(sigma2_mu, "sigma2_mu");
  pos(sigma2_g, "sigma2_g");
  pos(sigma2_e, "sigma2_e");
  pos(sigma2_lambda, "sigma2_lambda");
  pos(a, "a");
  pos(b, "b");
}

Hyperparams default_hyperparams(const Dataset& data) {
  Hyperparams h;
  h.mu_mu = data.grand_mean();
  return h;
}

ThetaPoint ThetaPoint::zeros(int n_genotypes, int n_environments, int n_components) {
  ThetaPoint t;
  t.g = Eigen::VectorXd::Zero(n_genotypes);
  t.e = Eigen::VectorXd::Zero(n_environments);
  t.lambda = Eigen::VectorXd::Zero(n_components);
  t.gamma = Eigen::MatrixXd::Zero(n_genotypes, n_components);
  t.delta = Eigen::MatrixXd::Zero(n_environments, n_components);
  return t;
}

void ThetaPoint::check_dims(int n_genotypes, int n_environments, int n_components) const {
  if (g.size() != n_genotypes || e.size() != n_environments || lambda.size() != n_components ||
      gamma.rows() != n_genotypes || gamma.cols() != n_components ||
      delta.rows() != n_environments || delta.cols() != n_components) {
    std::ostringstream os;
    os << "parameter dimensions (I=" << g.size() << ", J=" << e.size() << ", Q=" << lambda.size()
       << ") do not match (I=" << n_genotypes << ", J=" << n_environments
       << ", Q=" << n_components << ")";
    throw DimensionMismatchError(os.str());
  }
}

void ThetaPoint::check_dims(const Dataset& data) const {
  check_dims(data.n_genotypes(), data.n_environments(), n_components());
}

void ModelConfig::validate() const {
  if (n_components < 0 || n_components > 2)
    throw ValidationError("Q must be 0, 1 or 2");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");
  if (!(init_variance > 0.0) || !std::isfinite(init_variance))
    throw ValidationError("init_variance must be positive and finite");
  hyper.validate();
}

double model_mean(const ThetaPoint& theta, int i, int j) {
  double v = theta.mu + theta.g[i] + theta.e[j];
  for (Eigen::Index q = 0; q < theta.lambda.size(); ++q)
    v += theta.lambda[q] * theta.gamma(i, q) * theta.delta(j, q);
  return v;
}

Eigen::MatrixXd model_mean_matrix(const ThetaPoint& theta) {
  const auto I = theta.g.size();
  const auto J = theta.e.size();
  Eigen::MatrixXd m(I, J);
  for (Eigen::Index i = 0; i < I; ++i)
    for (Eigen::Index j = 0; j < J; ++j) m(i, j) = model_mean(theta, static_cast<int>(i), static_cast<int>(j));
  return m;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  if (detail::trim_eol(line) != "genotype,environment,yield")
    throw ValidationError(path.string() + ": header must be genotype,environment,yield");

  std::unordered_map<std::string, int> gid;
  std::unordered_map<std::string, int> eid;
  std::vector<std::string> glabels;
  std::vector<std::string> elabels;
  std::vector<Observation> obs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 3)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    double y = 0.0;
    if (!detail::parse_double(fields[2], y))
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": non-numeric yield '" + fields[2] + "'");
    auto intern = [](auto& map, auto& labels, const std::string& key) {
      auto [it, inserted] = map.try_emplace(key, static_cast<int>(labels.size()));
      if (inserted) labels.push_back(key);
      return it->second;
    };
    obs.push_back({intern(gid, glabels, fields[0]), intern(eid, elabels, fields[1]), y});
  }
  if (obs.empty()) throw ValidationError(path.string() + ": no observations");
  const int I = static_cast<int>(glabels.size());
  const int J = static_cast<int>(elabels.size());
  return Dataset(I, J, std::move(obs), std::move(glabels), std::move(elabels));
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "genotype,environment,yield\n";
  for (const auto& o : data.observations())
    out << data.genotype_labels()[o.genotype] << ',' << data.environment_labels()[o.environment]
        << ',' << format_number(o.response) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

CellCounts cell_counts(const Dataset& data) {
  CellCounts c;
  c.n = data.size();
  c.per_genotype.assign(data.n_genotypes(), 0);
  c.per_environment.assign(data.n_environments(), 0);
  for (const auto& o : data.observations()) {
    ++c.per_genotype[o.genotype];
    ++c.per_environment[o.environment];
  }
  return c;
}

std::string format_number(double v, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant_digits, v);
  return buf;
}

}  // namespace ammi

namespace ammi {

void write_theta_csv(const ThetaPoint& theta, const std::vector<std::string>& genotype_labels,
                     const std::vector<std::string>& environment_labels,
                     const std::filesystem::path& path) {
  theta.check_dims(static_cast<int>(genotype_labels.size()),
                   static_cast<int>(environment_labels.size()), theta.n_components());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "parameter,level,component,value\n";
  out << "mu,,," << format_number(theta.mu) << '\n';
  for (Eigen::Index i = 0; i < theta.g.size(); ++i)
    out << "g," << genotype_labels[i] << ",," << format_number(theta.g[i]) << '\n';
  for (Eigen::Index j = 0; j < theta.e.size(); ++j)
    out << "e," << environment_labels[j] << ",," << format_number(theta.e[j]) << '\n';
  for (Eigen::Index q = 0; q < theta.lambda.size(); ++q)
    out << "lambda,," << q + 1 << ',' << format_number(theta.lambda[q]) << '\n';
  for (Eigen::Index q = 0; q < theta.lambda.size(); ++q)
    for (Eigen::Index i = 0; i < theta.gamma.rows(); ++i)
      out << "gamma," << genotype_labels[i] << ',' << q + 1 << ','
          << format_number(theta.gamma(i, q)) << '\n';
  for (Eigen::Index q = 0; q < theta.lambda.size(); ++q)
    for (Eigen::Index j = 0; j < theta.delta.rows(); ++j)
      out << "delta," << environment_labels[j] << ',' << q + 1 << ','
          << format_number(theta.delta(j, q)) << '\n';
  out << "sigma2,,," << format_number(theta.sigma2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ThetaPoint load_theta_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::trim_eol(line) != "parameter,level,component,value")
    throw ValidationError(path.string() + ": header must be parameter,level,component,value");

  struct Row {
    std::string name, level;
    int component;
    double value;
  };
  std::vector<Row> rows;
  int n_components = 0;
  while (std::getline(in, line)) {
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ValidationError(path.string() + ": expected 4 fields per row");
    Row r{f[0], f[1], 0, 0.0};
    if (!f[2].empty()) {
      double c = 0.0;
      if (!detail::parse_double(f[2], c) || c < 1 || c != std::floor(c))
        throw ValidationError(path.string() + ": bad component '" + f[2] + "'");
      r.component = static_cast<int>(c);
    }
    if (!detail::parse_double(f[3], r.value))
      throw ValidationError(path.string() + ": bad value '" + f[3] + "'");
    if (r.name == "lambda") n_components = std::max(n_components, r.component);
    rows.push_back(std::move(r));
  }

  auto index_of = [&](const std::vector<std::string>& labels, const std::string& l) {
    for (std::size_t k = 0; k < labels.size(); ++k)
      if (labels[k] == l) return static_cast<Eigen::Index>(k);
    throw DimensionMismatchError(path.string() + ": unknown level '" + l + "'");
  };
  ThetaPoint t = ThetaPoint::zeros(data.n_genotypes(), data.n_environments(), n_components);
  auto component = [&](const Row& r) {
    if (r.component < 1 || r.component > n_components)
      throw DimensionMismatchError(path.string() + ": component out of range");
    return static_cast<Eigen::Index>(r.component - 1);
  };
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.name == "mu") t.mu = r.value;
    else if (r.name == "sigma2") t.sigma2 = r.value;
    else if (r.name == "g") t.g[index_of(data.genotype_labels(), r.level)] = r.value;
    else if (r.name == "e") t.e[index_of(data.environment_labels(), r.level)] = r.value;
    else if (r.name == "lambda") t.lambda[component(r)] = r.value;
    else if (r.name == "gamma") t.gamma(index_of(data.genotype_labels(), r.level), component(r)) = r.value;
    else if (r.name == "delta") t.delta(index_of(data.environment_labels(), r.level), component(r)) = r.value;
    else throw ValidationError(path.string() + ": unknown parameter '" + r.name + "'");
    ++count;
  }
  const std::size_t expected = 2 + data.n_genotypes() + data.n_environments() +
                               static_cast<std::size_t>(n_components) *
                                   (1 + data.n_genotypes() + data.n_environments());
  if (count != expected)
    throw DimensionMismatchError(path.string() + ": expected " + std::to_string(expected) +
                                 " parameter rows, found " + std::to_string(count));
  if (!(t.sigma2 > 0.0)) throw ValidationError(path.string() + ": sigma2 must be positive");
  return t;
}

}  // namespace ammi
