#include "ammi/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ammi/analysis.hpp"
#include "ammi/error.hpp"
#include "ammi/freq.hpp"
#include "ammi/gibbs.hpp"
#include "ammi/model.hpp"
#include "ammi/simulate.hpp"
#include "ammi/studies.hpp"
#include "ammi/vi.hpp"
#include "csv.hpp"

namespace fs = std::filesystem;

namespace ammi {

namespace {

struct RunConfig {
  std::string input;
  std::string output_dir;
  std::string config_file;
  int q = 1;
  double tol = 1e-6;
  int max_iter = 1000;
  double init_variance = 1.0;
  std::uint64_t seed = 1;
  int chains = 4;
  int iters = 6000;
  int burn = 1000;
  std::string init = "freq";
  std::string init_file;
  bool include_noise = false;
  std::vector<std::string> hyper;
  int draws = 4000;
  bool write_draws = false;

  // simulate / studies
  std::string scenario;
  int genotypes = 25;
  int environments = 12;
  std::vector<double> lambda{20.0};
  double missing_fraction = 0.0;
  std::string scale_reading = "variance";
  int n_seeds = 1;
  std::vector<std::string> modes{"random", "freq", "mcmc-short"};

  // predict / compare
  std::string fit_dir;
  std::string vi_dir;
  std::string mcmc_dir;

  // benchmark
  std::string group = "small";
  std::vector<int> components{1, 2};
  std::string bench_mode = "full";
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

Hyperparams resolve_hyper(const Dataset& data, const std::vector<std::string>& items) {
  Hyperparams h = default_hyperparams(data);
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("--hyper expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    double v = 0.0;
    if (!detail::parse_double(item.substr(eq + 1), v))
      throw ValidationError("--hyper " + key + ": not a finite number");
    if (key == "mu_mu") h.mu_mu = v;
    else if (key == "sigma2_mu") h.sigma2_mu = v;
    else if (key == "sigma2_g") h.sigma2_g = v;
    else if (key == "sigma2_e") h.sigma2_e = v;
    else if (key == "sigma2_lambda") h.sigma2_lambda = v;
    else if (key == "a") h.a = v;
    else if (key == "b") h.b = v;
    else
      throw ValidationError("unknown hyperparameter '" + key +
                            "' (mu_mu, sigma2_mu, sigma2_g, sigma2_e, sigma2_lambda, a, b)");
  }
  h.validate();
  return h;
}

ModelConfig model_config(const RunConfig& rc, const Dataset& data) {
  ModelConfig c;
  c.n_components = rc.q;
  c.tol = rc.tol;
  c.max_iter = rc.max_iter;
  c.init_variance = rc.init_variance;
  c.seed = rc.seed;
  c.hyper = resolve_hyper(data, rc.hyper);
  c.validate();
  return c;
}

void write_key_values(const fs::path& p, const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_out(p);
  out << "key,value\n";
  for (const auto& [k, v] : kv) out << k << ',' << v << '\n';
  if (!out) throw IoError("write failed for " + p.string());
}

std::map<std::string, std::string> read_key_values(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::string line;
  if (!std::getline(in, line) || detail::trim_eol(line) != "key,value")
    throw ValidationError(p.string() + ": header must be key,value");
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    line = detail::trim_eol(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError(p.string() + ": malformed row");
    kv[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return kv;
}

double kv_number(const std::map<std::string, std::string>& kv, const std::string& key,
                 const fs::path& p) {
  auto it = kv.find(key);
  double v = 0.0;
  if (it == kv.end() || !detail::parse_double(it->second, v))
    throw ValidationError(p.string() + ": missing or bad '" + key + "'");
  return v;
}

std::string fmt(double v) { return format_number(v, 12); }

// --- subcommands ---------------------------------------------------------

int run_simulate(const RunConfig& rc, std::ostream& out) {
  SimScenario s;
  if (!rc.scenario.empty()) {
    s = named_scenario(rc.scenario);
    s.seed = rc.seed;
  } else {
    ScaleReading reading;
    if (rc.scale_reading == "variance") reading = ScaleReading::variance;
    else if (rc.scale_reading == "sd") reading = ScaleReading::standard_deviation;
    else throw ValidationError("--scale-reading must be variance or sd");
    s = protocol_scenario(rc.genotypes, rc.environments, rc.lambda, rc.seed, reading);
  }
  if (rc.missing_fraction > 0.0) s.missing_fraction = rc.missing_fraction;
  const Simulation sim = simulate(s);
  ensure_dir(rc.output_dir);
  const fs::path dir(rc.output_dir);
  write_csv(sim.data, dir / "data.csv");
  write_theta_csv(sim.truth, sim.data.genotype_labels(), sim.data.environment_labels(),
                  dir / "truth.csv");
  out << "wrote " << sim.data.size() << " observations to " << (dir / "data.csv").string() << '\n';
  return exit_ok;
}

int run_fit_freq(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_csv(rc.input);
  const ThetaPoint t = frequentist_fit(data, rc.q);
  ensure_dir(rc.output_dir);
  const fs::path p = fs::path(rc.output_dir) / "theta.csv";
  write_theta_csv(t, data.genotype_labels(), data.environment_labels(), p);
  out << "wrote " << p.string() << '\n';
  return exit_ok;
}

int run_fit_vi(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_csv(rc.input);
  const ModelConfig config = model_config(rc, data);
  const InitMode mode = parse_init_mode(rc.init);
  ThetaPoint start;
  if (mode == InitMode::file) {
    if (rc.init_file.empty()) throw ValidationError("--init file requires --init-file");
    start = load_theta_csv(rc.init_file, data);
    start.check_dims(data.n_genotypes(), data.n_environments(), config.n_components);
  } else {
    start = initial_point(mode, data, config, rc.seed);
  }
  const FitResult res = fit(data, config, start);

  ensure_dir(rc.output_dir);
  const fs::path dir(rc.output_dir);
  const auto& gl = data.genotype_labels();
  const auto& el = data.environment_labels();
  write_factors_csv(res.state, gl, el, dir / "factors.csv");
  write_theta_csv(res.identified, gl, el, dir / "identified.csv");
  {
    auto f = open_out(dir / "elbo_trace.csv");
    f << "iteration,elbo,max_change\n";
    for (std::size_t k = 0; k < res.elbo_trace.size(); ++k)
      f << k << ',' << format_number(res.elbo_trace[k]) << ','
        << (k == 0 ? std::string("NA") : format_number(res.change_trace[k - 1])) << '\n';
  }
  write_summary_csv(vi_summary(res, data, rc.draws, rc.seed), dir / "posterior_summary.csv");
  write_key_values(dir / "fit_summary.csv",
                   {{"method", "vi"},
                    {"genotypes", std::to_string(data.n_genotypes())},
                    {"environments", std::to_string(data.n_environments())},
                    {"components", std::to_string(config.n_components)},
                    {"observations", std::to_string(data.size())},
                    {"init", to_string(mode)},
                    {"n_iter", std::to_string(res.n_iter)},
                    {"converged", res.converged ? "true" : "false"},
                    {"final_elbo", format_number(res.elbo_trace.back())},
                    {"rmse_in_sample", fmt(in_sample_rmse(res, data))}});
  write_key_values(dir / "timing.csv", {{"wall_time", format_number(res.wall_time, 6)}});
  out << "vi: " << res.n_iter << " sweeps, converged=" << (res.converged ? "true" : "false")
      << ", elbo=" << fmt(res.elbo_trace.back()) << '\n';
  return exit_ok;
}

int run_fit_mcmc(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_csv(rc.input);
  const ModelConfig config = model_config(rc, data);
  GibbsOptions opt;
  opt.n_chains = rc.chains;
  opt.n_iter = rc.iters;
  opt.n_burn = rc.burn;
  if (!rc.init_file.empty()) opt.init = load_theta_csv(rc.init_file, data);
  const PosteriorDraws draws = gibbs_fit(data, config, opt);

  ensure_dir(rc.output_dir);
  const fs::path dir(rc.output_dir);
  const auto summary = summarize(draws);
  write_summary_csv(summary, dir / "posterior_summary.csv");
  write_theta_csv(draws.posterior_mean(), data.genotype_labels(), data.environment_labels(),
                  dir / "identified.csv");
  if (rc.write_draws) write_draws_csv(draws, dir / "draws.csv");
  double max_rhat = 0.0;
  for (const auto& s : summary)
    if (std::isfinite(s.rhat)) max_rhat = std::max(max_rhat, s.rhat);
  write_key_values(dir / "fit_summary.csv",
                   {{"method", "mcmc"},
                    {"genotypes", std::to_string(data.n_genotypes())},
                    {"environments", std::to_string(data.n_environments())},
                    {"components", std::to_string(config.n_components)},
                    {"observations", std::to_string(data.size())},
                    {"chains", std::to_string(rc.chains)},
                    {"iterations", std::to_string(rc.iters)},
                    {"burn_in", std::to_string(rc.burn)},
                    {"max_rhat", draws.n_chains() > 1 ? fmt(max_rhat) : "NA"},
                    {"rmse_in_sample", fmt(in_sample_rmse(draws, data))}});
  write_key_values(dir / "timing.csv", {{"wall_time", format_number(draws.wall_time, 6)}});
  out << "mcmc: " << draws.n_chains() << " chains x " << draws.n_kept() << " kept draws\n";
  return exit_ok;
}

int run_predict(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_csv(rc.input);
  const fs::path fit_dir(rc.fit_dir);
  PredictOptions opt;
  opt.n_draws = rc.draws;
  opt.include_noise = rc.include_noise;
  opt.seed = rc.seed;
  const auto cells = all_cells(data.n_genotypes(), data.n_environments());
  PredictiveSummary summary;
  if (fs::exists(fit_dir / "factors.csv")) {
    FitResult res;
    res.state = load_factors_csv(fit_dir / "factors.csv", data);
    summary = predict(res, data, cells, opt);
  } else if (fs::exists(fit_dir / "draws.csv")) {
    summary = predict(load_draws_csv(fit_dir / "draws.csv", data), data, cells, opt);
  } else {
    throw IoError(fit_dir.string() + " holds neither factors.csv nor draws.csv");
  }
  ensure_dir(rc.output_dir);
  const fs::path dir(rc.output_dir);
  {
    auto f = open_out(dir / "predictions.csv");
    f << "genotype,environment,observed,mean,q05,q50,q95\n";
    for (const auto& c : summary.cells)
      f << summary.genotype_labels[c.genotype] << ',' << summary.environment_labels[c.environment]
        << ',' << (c.observed ? 1 : 0) << ',' << fmt(c.mean) << ',' << fmt(c.q05) << ','
        << fmt(c.q50) << ',' << fmt(c.q95) << '\n';
    if (!f) throw IoError("write failed for predictions.csv");
  }
  export_heatmap(summary, (dir / "heatmap").string());
  out << "predicted " << summary.cells.size() << " cells\n";
  return exit_ok;
}

RunInfo run_info(const fs::path& dir) {
  const auto kv = read_key_values(dir / "fit_summary.csv");
  RunInfo info;
  info.n_genotypes = static_cast<int>(kv_number(kv, "genotypes", dir / "fit_summary.csv"));
  info.n_environments = static_cast<int>(kv_number(kv, "environments", dir / "fit_summary.csv"));
  info.n_components = static_cast<int>(kv_number(kv, "components", dir / "fit_summary.csv"));
  info.rmse = kv_number(kv, "rmse_in_sample", dir / "fit_summary.csv");
  if (fs::exists(dir / "timing.csv"))
    info.wall_time = kv_number(read_key_values(dir / "timing.csv"), "wall_time", dir / "timing.csv");
  return info;
}

int run_compare(const RunConfig& rc, std::ostream& out) {
  const fs::path vd(rc.vi_dir), md(rc.mcmc_dir);
  const RunInfo vi = run_info(vd);
  const RunInfo mc = run_info(md);
  const ComparisonReport rep = compare_summaries(load_summary_csv(vd / "posterior_summary.csv"), vi,
                                                 load_summary_csv(md / "posterior_summary.csv"), mc);
  ensure_dir(rc.output_dir);
  const fs::path dir(rc.output_dir);
  write_comparison_csv(rep, dir / "comparison.csv");
  write_comparison_text(rep, dir / "comparison.txt");
  out << "max |mean gap| = " << fmt(rep.max_gap()) << ", MCMC/VI time ratio = " << fmt(rep.time_ratio)
      << '\n';
  return exit_ok;
}

int run_init_study(const RunConfig& rc, std::ostream& out) {
  std::vector<InitMode> modes;
  for (const auto& m : rc.modes) modes.push_back(parse_init_mode(m));
  if (rc.n_seeds < 1) throw ValidationError("--seeds must be at least 1");
  ensure_dir(rc.output_dir);
  const fs::path dir(rc.output_dir);
  auto traces = open_out(dir / "init_traces.csv");
  auto finals = open_out(dir / "init_final.csv");
  traces << "seed,init,iteration,rmse_observed,rmse_truth,elbo\n";
  finals << "seed,init,iterations,final_rmse_observed,final_rmse_truth,converged,"
            "non_monotone_after_3\n";
  ModelConfig config;
  config.tol = rc.tol;
  config.max_iter = rc.max_iter;
  config.init_variance = rc.init_variance;
  for (int k = 0; k < rc.n_seeds; ++k) {
    const std::uint64_t seed = rc.seed + static_cast<std::uint64_t>(k);
    const SimScenario s = protocol_scenario(rc.genotypes, rc.environments, rc.lambda, seed);
    config.seed = seed;
    for (const auto& tr : init_study(s, modes, config)) {
      for (const auto& p : tr.points)
        traces << seed << ',' << to_string(tr.mode) << ',' << p.iteration << ','
               << fmt(p.rmse_observed) << ',' << fmt(p.rmse_truth) << ',' << fmt(p.elbo) << '\n';
      const auto& last = tr.points.back();
      finals << seed << ',' << to_string(tr.mode) << ',' << last.iteration << ','
             << fmt(last.rmse_observed) << ',' << fmt(last.rmse_truth) << ','
             << (tr.converged ? "true" : "false") << ','
             << (tr.non_monotone_after_3 ? "true" : "false") << '\n';
    }
  }
  if (!traces || !finals) throw IoError("write failed in " + dir.string());
  out << "init study: " << rc.n_seeds << " seed(s), " << modes.size() << " init mode(s)\n";
  return exit_ok;
}

int run_benchmark(const RunConfig& rc, std::ostream& out) {
  BenchmarkSettings settings;
  if (rc.bench_mode == "smoke") settings = smoke_benchmark();
  else if (rc.bench_mode != "full") throw ValidationError("--mode must be full or smoke");
  ModelConfig config;
  config.tol = rc.tol;
  config.max_iter = rc.max_iter;
  config.init_variance = rc.init_variance;
  config.seed = rc.seed;
  ensure_dir(rc.output_dir);
  const fs::path p = fs::path(rc.output_dir) / "benchmark.csv";
  auto f = open_out(p);
  f << "scenario,genotypes,environments,components,n,vi_seconds,mcmc_seconds,ratio,vi_iters,"
       "vi_converged\n";
  for (int q : rc.components) {
    for (const auto& s : size_group(rc.group, q)) {
      const BenchmarkRow r = benchmark_scenario(s, config, settings);
      f << r.scenario << ',' << r.n_genotypes << ',' << r.n_environments << ',' << r.n_components
        << ',' << r.n << ',' << format_number(r.vi_seconds, 6) << ','
        << format_number(r.mcmc_seconds, 6) << ',' << format_number(r.ratio, 6) << ','
        << r.vi_iters << ',' << (r.vi_converged ? "true" : "false") << '\n';
      f.flush();
      out << r.scenario << ": ratio " << format_number(r.ratio, 4) << '\n';
    }
  }
  if (!f) throw IoError("write failed for " + p.string());
  return exit_ok;
}

// --- config file -----------------------------------------------------------

// Plain "key = value" lines become "--key value" arguments placed before
// the command-line flags, so explicit flags win.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::vector<std::string> args;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(detail::trim_eol(line));
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config") throw ValidationError(path + ": nested config files are not supported");
    if (key == "include-noise" || key == "write-draws") {
      if (value == "true" || value == "1") args.push_back("--" + key);
      continue;
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

const char* kind_of(const std::exception& e) {
  if (auto* a = dynamic_cast<const Error*>(&e)) return a->kind();
  return "internal";
}

int code_of(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  if (dynamic_cast<const DimensionMismatchError*>(&e)) return exit_dimension;
  if (dynamic_cast<const DivergenceError*>(&e)) return exit_divergence;
  if (dynamic_cast<const DegenerateInputError*>(&e)) return exit_degenerate;
  if (dynamic_cast<const ValidationError*>(&e)) return exit_validation;
  return exit_other;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  std::string q;
  for (char c : s) {
    if (c == '"' || c == '\\') q.push_back('\\');
    q.push_back(c);
  }
  return q;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Bayesian AMMI models fitted by variational inference and Gibbs sampling", "ammi"};
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", rc.config_file, "plain key = value file; flags override it");
  };
  auto add_io = [&](CLI::App* c, bool input) {
    if (input) c->add_option("--input", rc.input, "dataset CSV (genotype,environment,yield)")->required();
    c->add_option("--output-dir", rc.output_dir, "directory for output files")->required();
  };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--q", rc.q, "number of multiplicative terms")->check(CLI::Range(0, 2));
    c->add_option("--seed", rc.seed, "random seed");
    c->add_option("--hyper", rc.hyper, "hyperparameter override key=value")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->delimiter(',');
  };
  auto add_cavi = [&](CLI::App* c) {
    c->add_option("--tol", rc.tol, "stop when no variational mean moves more than this");
    c->add_option("--max-iter", rc.max_iter, "maximum CAVI sweeps");
    c->add_option("--init-variance", rc.init_variance, "starting variance of every Normal factor");
  };
  auto add_sim = [&](CLI::App* c) {
    c->add_option("--genotypes", rc.genotypes, "number of genotypes I");
    c->add_option("--environments", rc.environments, "number of environments J");
    c->add_option("--lambda", rc.lambda, "true singular values, one per term")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->delimiter(',');
  };

  auto* sim = app.add_subcommand("simulate", "simulate a trial dataset and its true parameters");
  add_config(sim);
  add_io(sim, false);
  add_sim(sim);
  sim->add_option("--seed", rc.seed, "random seed");
  sim->add_option("--scenario", rc.scenario, "named scenario from the simulation grid");
  sim->add_option("--missing-fraction", rc.missing_fraction, "fraction of cells removed");
  sim->add_option("--scale-reading", rc.scale_reading, "variance or sd reading of the scale settings");

  auto* ff = app.add_subcommand("fit-freq", "least-squares AMMI fit");
  add_config(ff);
  add_io(ff, true);
  ff->add_option("--q", rc.q, "number of multiplicative terms")->check(CLI::Range(0, 2));

  auto* fv = app.add_subcommand("fit-vi", "mean-field variational fit");
  add_config(fv);
  add_io(fv, true);
  add_model(fv);
  add_cavi(fv);
  fv->add_option("--init", rc.init, "freq, random, mcmc-short or file");
  fv->add_option("--init-file", rc.init_file, "parameter CSV used with --init file");
  fv->add_option("--draws", rc.draws, "draws from q used for posterior sd and quantiles");

  auto* fm = app.add_subcommand("fit-mcmc", "Gibbs sampler fit");
  add_config(fm);
  add_io(fm, true);
  add_model(fm);
  fm->add_option("--chains", rc.chains, "number of chains");
  fm->add_option("--iters", rc.iters, "iterations per chain including burn-in");
  fm->add_option("--burn", rc.burn, "burn-in iterations per chain");
  fm->add_option("--init-file", rc.init_file, "parameter CSV to start from instead of the least-squares fit");
  fm->add_flag("--write-draws", rc.write_draws, "also write every kept draw to draws.csv");

  auto* pr = app.add_subcommand("predict", "predictive quantiles for every cell");
  add_config(pr);
  add_io(pr, true);
  pr->add_option("--fit-dir", rc.fit_dir, "output directory of fit-vi or fit-mcmc --write-draws")
      ->required();
  pr->add_option("--draws", rc.draws, "draws from q (VI fits only)");
  pr->add_option("--seed", rc.seed, "random seed");
  pr->add_flag("--include-noise", rc.include_noise, "add observation noise to each draw");

  auto* cp = app.add_subcommand("compare", "compare a VI fit with an MCMC fit");
  add_config(cp);
  add_io(cp, false);
  cp->add_option("--vi-dir", rc.vi_dir, "fit-vi output directory")->required();
  cp->add_option("--mcmc-dir", rc.mcmc_dir, "fit-mcmc output directory")->required();

  auto* is = app.add_subcommand("init-study", "RMSE traces of CAVI from different starts");
  is->alias("compare-init");
  add_config(is);
  add_io(is, false);
  add_cavi(is);
  rc.lambda = {20.0};
  add_sim(is);
  is->add_option("--seed", rc.seed, "first seed");
  is->add_option("--seeds", rc.n_seeds, "number of consecutive seeds");
  is->add_option("--modes", rc.modes, "init modes")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(',');

  auto* bm = app.add_subcommand("benchmark", "wall-time comparison of VI and MCMC");
  add_config(bm);
  add_io(bm, false);
  add_cavi(bm);
  bm->add_option("--seed", rc.seed, "model seed");
  bm->add_option("--group", rc.group, "small or large")->check(CLI::IsMember({"small", "large"}));
  bm->add_option("--components", rc.components, "values of Q")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(',');
  bm->add_option("--mode", rc.bench_mode, "full (4 x 6000 Gibbs iterations) or smoke (4 x 100)");

  try {
    std::vector<std::string> args = raw_args;
    for (std::size_t k = 0; k + 1 < args.size(); ++k)
      if (args[k] == "--config") {
        auto extra = config_args(args[k + 1]);
        if (args.empty()) break;
        args.insert(args.begin() + 1, extra.begin(), extra.end());
        break;
      }
    // CLI11 wants reversed argv-style vectors.
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return exit_ok;
    } catch (const CLI::ParseError& e) {
      err << "error: kind=usage message=\"" << one_line(e.what()) << "\"\n";
      return exit_usage;
    }

    if (sim->parsed()) return run_simulate(rc, out);
    if (ff->parsed()) return run_fit_freq(rc, out);
    if (fv->parsed()) return run_fit_vi(rc, out);
    if (fm->parsed()) return run_fit_mcmc(rc, out);
    if (pr->parsed()) return run_predict(rc, out);
    if (cp->parsed()) return run_compare(rc, out);
    if (is->parsed()) return run_init_study(rc, out);
    if (bm->parsed()) return run_benchmark(rc, out);
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: kind=" << kind_of(e) << " message=\"" << one_line(e.what()) << "\"\n";
    return code_of(e);
  }
}

}  // namespace ammi
