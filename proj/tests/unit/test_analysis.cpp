#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "ammi/analysis.hpp"
#include "ammi/error.hpp"
#include "ammi/freq.hpp"
#include "ammi/simulate.hpp"
#include "ammi/studies.hpp"
#include "temp_dir.hpp"

using namespace ammi;

namespace {

struct Fixture {
  Simulation sim;
  ModelConfig config;
  FitResult vi;
  PosteriorDraws mcmc;

  Fixture() {
    SimScenario s = protocol_scenario(12, 8, {20.0}, 9);
    s.missing_fraction = 0.2;
    sim = simulate(s);
    config.n_components = 1;
    config.hyper = default_hyperparams(sim.data);
    vi = fit(sim.data, config, frequentist_fit(sim.data, 1));
    GibbsOptions o;
    o.n_chains = 2;
    o.n_iter = 400;
    o.n_burn = 100;
    mcmc = gibbs_fit(sim.data, config, o);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("rmse") {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 5};
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(4.0 / 3.0)));
  CHECK(rmse(a, a) == 0.0);
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), ValidationError);

  const auto& f = fixture();
  std::vector<double> y, m;
  for (const auto& o : f.sim.data.observations()) {
    y.push_back(o.response);
    m.push_back(model_mean(f.sim.truth, o.genotype, o.environment));
  }
  CHECK(in_sample_rmse(f.sim.truth, f.sim.data) == doctest::Approx(rmse(m, y)));
  CHECK(in_sample_rmse(f.vi, f.sim.data) < 2.0);
  CHECK(in_sample_rmse(f.mcmc, f.sim.data) < 2.0);
}

TEST_CASE("predict") {
  const auto& f = fixture();
  const auto cells = all_cells(12, 8);
  REQUIRE(cells.size() == 96);
  CHECK(cells[10] == Cell{1, 2});
  PredictOptions o;
  o.n_draws = 2000;
  const PredictiveSummary a = predict(f.vi, f.sim.data, cells, o);
  REQUIRE(a.cells.size() == 96);
  int observed = 0;
  for (const auto& c : a.cells) {
    CHECK(c.q05 <= c.q50);
    CHECK(c.q50 <= c.q95);
    observed += c.observed;
  }
  CHECK(observed == static_cast<int>(f.sim.data.size()));
  const PredictiveSummary again = predict(f.vi, f.sim.data, cells, o);
  CHECK(again.cells[3].q95 == a.cells[3].q95);

  o.include_noise = true;
  const PredictiveSummary noisy = predict(f.vi, f.sim.data, cells, o);
  CHECK(noisy.cells[3].q95 - noisy.cells[3].q05 > a.cells[3].q95 - a.cells[3].q05);

  const PredictiveSummary m = predict(f.mcmc, f.sim.data, cells);
  const Eigen::MatrixXd truth = model_mean_matrix(f.sim.truth);
  double worst = 0;
  for (const auto& c : m.cells) worst = std::max(worst, std::abs(c.mean - truth(c.genotype, c.environment)));
  CHECK(worst < 3.0);

  CHECK_THROWS_AS(predict(f.vi, f.sim.data, {{12, 0}}), ValidationError);
  CHECK_THROWS_AS(predict(f.vi, f.sim.data, {{0, -1}}), ValidationError);
  const Dataset other = simulate(protocol_scenario(4, 5, {20.0}, 1)).data;
  CHECK_THROWS_AS(predict(f.vi, other, all_cells(4, 5)), DimensionMismatchError);
}

TEST_CASE("heatmap export") {
  const auto& f = fixture();
  TempDir dir;
  PredictOptions o;
  o.n_draws = 500;
  const PredictiveSummary s = predict(f.vi, f.sim.data, all_cells(12, 8), o);
  export_heatmap(s, (dir / "hm").string());
  const LabelledMatrix q50 = load_matrix_csv(dir / "hm_q50.csv");
  CHECK(q50.values.rows() == 12);
  CHECK(q50.values.cols() == 8);
  CHECK(q50.row_labels == f.sim.data.genotype_labels());
  CHECK(q50.col_labels == f.sim.data.environment_labels());
  CHECK(q50.values(1, 2) == doctest::Approx(s.cells[10].q50).epsilon(1e-10));
  const LabelledMatrix obs = load_matrix_csv(dir / "hm_observed.csv");
  CHECK(obs.values.sum() == doctest::Approx(static_cast<double>(f.sim.data.size())));

  PredictiveSummary partial = s;
  partial.cells.pop_back();
  CHECK_THROWS(export_heatmap(partial, (dir / "bad").string()));
  CHECK_THROWS_AS(load_matrix_csv(dir / "missing.csv"), IoError);
}

TEST_CASE("factor, draws and summary tables round-trip") {
  const auto& f = fixture();
  TempDir dir;
  const auto& gl = f.sim.data.genotype_labels();
  const auto& el = f.sim.data.environment_labels();

  write_factors_csv(f.vi.state, gl, el, dir / "factors.csv");
  const VariationalState s = load_factors_csv(dir / "factors.csv", f.sim.data);
  CHECK(s.mu_loc == f.vi.state.mu_loc);
  CHECK(s.gamma_loc == f.vi.state.gamma_loc);
  CHECK(s.delta_var == f.vi.state.delta_var);
  CHECK(s.tau_shape == f.vi.state.tau_shape);
  CHECK(s.tau_rate == f.vi.state.tau_rate);
  const Dataset other = simulate(protocol_scenario(4, 5, {20.0}, 1)).data;
  CHECK_THROWS(load_factors_csv(dir / "factors.csv", other));

  write_draws_csv(f.mcmc, dir / "draws.csv");
  const PosteriorDraws d = load_draws_csv(dir / "draws.csv", f.sim.data);
  CHECK(d.n_chains() == 2);
  CHECK(d.n_components == 1);
  CHECK(d.names == f.mcmc.names);
  CHECK((d.chains[1] - f.mcmc.chains[1]).cwiseAbs().maxCoeff() == 0.0);

  auto rows = summarize(f.mcmc);
  rows[0].rhat = std::numeric_limits<double>::quiet_NaN();
  write_summary_csv(rows, dir / "summary.csv");
  const auto back = load_summary_csv(dir / "summary.csv");
  REQUIRE(back.size() == rows.size());
  CHECK(std::isnan(back[0].rhat));
  CHECK(back[5].name == rows[5].name);
  CHECK(back[5].q95 == doctest::Approx(rows[5].q95).epsilon(1e-10));
  CHECK(back[5].rhat == doctest::Approx(rows[5].rhat).epsilon(1e-10));
}

TEST_CASE("vi_summary") {
  const auto& f = fixture();
  const auto rows = vi_summary(f.vi, f.sim.data, 1000, 3);
  REQUIRE(rows.size() == f.mcmc.names.size());
  CHECK(rows[0].name == "mu");
  CHECK(rows[0].mean == doctest::Approx(f.vi.identified.mu));
  for (const auto& r : rows) {
    CHECK(std::isnan(r.rhat));
    CHECK(r.sd >= 0.0);
  }
}

TEST_CASE("comparison") {
  const auto& f = fixture();
  const ComparisonReport r = compare(f.vi, f.mcmc, f.sim.data, 1000, 2);
  CHECK(r.rows.size() == f.mcmc.names.size());
  CHECK(r.vi.n_genotypes == 12);
  CHECK(r.mcmc.n_components == 1);
  CHECK(r.max_gap("g[") <= r.max_gap());
  for (const auto& row : r.rows) CHECK(row.abs_gap == doctest::Approx(std::abs(row.vi_mean - row.mcmc_mean)));
  CHECK(r.max_gap("mu") < 1.0);

  TempDir dir;
  write_comparison_csv(r, dir / "c.csv");
  write_comparison_text(r, dir / "c.txt");
  std::ifstream in(dir / "c.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("abs_gap") != std::string::npos);

  RunInfo a{12, 8, 1, 1.0, 1.0}, b{12, 8, 2, 1.0, 1.0};
  const auto rows = summarize(f.mcmc);
  CHECK_THROWS_AS(compare_summaries(rows, a, rows, b), DimensionMismatchError);
  auto fewer = rows;
  fewer.pop_back();
  CHECK_THROWS_AS(compare_summaries(rows, a, fewer, a), DimensionMismatchError);
  CHECK(compare_summaries(rows, a, rows, a).max_gap() == 0.0);
}

TEST_CASE("init modes and studies") {
  CHECK(parse_init_mode("mcmc-short") == InitMode::mcmc_short);
  CHECK(to_string(InitMode::random) == "random");
  CHECK_THROWS_AS(parse_init_mode("bogus"), ValidationError);

  const auto& f = fixture();
  const ThetaPoint s = short_run_estimate(f.sim.data, f.config, 5, {0.5, 200, 100});
  CHECK_NOTHROW(s.check_dims(f.sim.data));
  const ThetaPoint r1 = initial_point(InitMode::random, f.sim.data, f.config, 3);
  const ThetaPoint r2 = initial_point(InitMode::random, f.sim.data, f.config, 3);
  CHECK(r1.g == r2.g);
  CHECK_THROWS(initial_point(InitMode::file, f.sim.data, f.config, 3));

  SimScenario sc = protocol_scenario(6, 5, {20.0}, 4);
  ModelConfig c;
  c.n_components = 1;
  c.max_iter = 50;
  const auto traces = init_study(sc, {InitMode::freq, InitMode::random}, c);
  REQUIRE(traces.size() == 2);
  for (const auto& t : traces) {
    REQUIRE_FALSE(t.points.empty());
    CHECK(t.points.front().iteration == 0);
    CHECK(t.points.back().iteration <= 50);
    for (const auto& p : t.points) {
      CHECK(p.rmse_observed >= 0.0);
      CHECK(p.rmse_truth >= 0.0);
    }
  }
}

TEST_CASE("benchmark row") {
  SimScenario sc = protocol_scenario(6, 5, {20.0}, 4);
  ModelConfig c;
  c.n_components = 1;
  const BenchmarkRow r = benchmark_scenario(sc, c, {1, 40, 20});
  CHECK(r.n == 30);
  CHECK(r.vi_seconds > 0.0);
  CHECK(r.mcmc_seconds > 0.0);
  CHECK(r.ratio == doctest::Approx(r.mcmc_seconds / r.vi_seconds));
  const BenchmarkSettings smoke = smoke_benchmark();
  CHECK(smoke.mcmc_iter < BenchmarkSettings{}.mcmc_iter);
}
