#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ammi/analysis.hpp"
#include "ammi/error.hpp"
#include "ammi/freq.hpp"
#include "ammi/gibbs.hpp"
#include "ammi/simulate.hpp"
#include "ammi/studies.hpp"
#include "ammi/vi.hpp"

namespace py = pybind11;
using namespace ammi;

namespace {

Dataset make_dataset(std::vector<int> genotype, std::vector<int> environment,
                     std::vector<double> response, int n_genotypes, int n_environments,
                     std::vector<std::string> genotype_labels,
                     std::vector<std::string> environment_labels) {
  if (genotype.size() != environment.size() || genotype.size() != response.size())
    throw ValidationError("genotype, environment and response must have equal length");
  std::vector<Observation> obs(genotype.size());
  for (std::size_t k = 0; k < obs.size(); ++k) obs[k] = {genotype[k], environment[k], response[k]};
  return Dataset(n_genotypes, n_environments, std::move(obs), std::move(genotype_labels),
                 std::move(environment_labels));
}

py::dict observations_dict(const Dataset& d) {
  std::vector<int> g, e;
  std::vector<double> y;
  for (const auto& o : d.observations()) {
    g.push_back(o.genotype);
    e.push_back(o.environment);
    y.push_back(o.response);
  }
  py::dict out;
  out["genotype"] = g;
  out["environment"] = e;
  out["response"] = y;
  return out;
}

// Start for CAVI: a ThetaPoint, or one of "freq", "random", "mcmc-short".
FitResult fit_vi(const Dataset& data, const ModelConfig& config, const py::object& init,
                 std::uint64_t seed, bool compute_elbo) {
  FitOptions opt;
  opt.compute_elbo = compute_elbo;
  if (py::isinstance<ThetaPoint>(init)) return fit(data, config, init.cast<ThetaPoint>(), opt);
  if (py::isinstance<VariationalState>(init))
    return fit(data, config, init.cast<VariationalState>(), opt);
  const InitMode mode = parse_init_mode(init.cast<std::string>());
  return fit(data, config, initial_point(mode, data, config, seed), opt);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian AMMI models: coordinate-ascent variational inference and Gibbs sampling";

  auto base = py::register_exception<Error>(m, "AmmiError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DimensionMismatchError>(m, "DimensionMismatchError", base.ptr());
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("genotype"), py::arg("environment"),
           py::arg("response"), py::arg("n_genotypes"), py::arg("n_environments"),
           py::arg("genotype_labels") = std::vector<std::string>{},
           py::arg("environment_labels") = std::vector<std::string>{})
      .def_property_readonly("n_genotypes", &Dataset::n_genotypes)
      .def_property_readonly("n_environments", &Dataset::n_environments)
      .def_property_readonly("genotype_labels", &Dataset::genotype_labels)
      .def_property_readonly("environment_labels", &Dataset::environment_labels)
      .def_property_readonly("grand_mean", &Dataset::grand_mean)
      .def_property_readonly("is_complete", &Dataset::is_complete)
      .def("observed_mask", &Dataset::observed_mask)
      .def("observations", &observations_dict)
      .def("__len__", &Dataset::size);

  m.def("load_csv", &load_csv, py::arg("path"));
  m.def("write_csv", &write_csv, py::arg("data"), py::arg("path"));

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("mu_mu", &Hyperparams::mu_mu)
      .def_readwrite("sigma2_mu", &Hyperparams::sigma2_mu)
      .def_readwrite("sigma2_g", &Hyperparams::sigma2_g)
      .def_readwrite("sigma2_e", &Hyperparams::sigma2_e)
      .def_readwrite("sigma2_lambda", &Hyperparams::sigma2_lambda)
      .def_readwrite("a", &Hyperparams::a)
      .def_readwrite("b", &Hyperparams::b)
      .def("validate", &Hyperparams::validate);
  m.def("default_hyperparams", &default_hyperparams, py::arg("data"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init([](int q, std::optional<Hyperparams> h, int max_iter, double tol,
                       std::uint64_t seed, double init_variance) {
             ModelConfig c;
             c.n_components = q;
             if (h) c.hyper = *h;
             c.max_iter = max_iter;
             c.tol = tol;
             c.seed = seed;
             c.init_variance = init_variance;
             c.validate();
             return c;
           }),
           py::arg("n_components") = 1, py::arg("hyper") = py::none(), py::arg("max_iter") = 1000,
           py::arg("tol") = 1e-6, py::arg("seed") = 1, py::arg("init_variance") = 1.0)
      .def_readwrite("n_components", &ModelConfig::n_components)
      .def_readwrite("hyper", &ModelConfig::hyper)
      .def_readwrite("max_iter", &ModelConfig::max_iter)
      .def_readwrite("tol", &ModelConfig::tol)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_readwrite("init_variance", &ModelConfig::init_variance);

  py::class_<ThetaPoint>(m, "ThetaPoint")
      .def(py::init(&ThetaPoint::zeros), py::arg("n_genotypes"), py::arg("n_environments"),
           py::arg("n_components"))
      .def_readwrite("mu", &ThetaPoint::mu)
      .def_readwrite("g", &ThetaPoint::g)
      .def_readwrite("e", &ThetaPoint::e)
      .def_readwrite("lambda_", &ThetaPoint::lambda)
      .def_readwrite("gamma", &ThetaPoint::gamma)
      .def_readwrite("delta", &ThetaPoint::delta)
      .def_readwrite("sigma2", &ThetaPoint::sigma2)
      .def_property_readonly("n_components", &ThetaPoint::n_components)
      .def("cell_means", &model_mean_matrix);

  py::class_<VariationalState>(m, "VariationalState")
      .def_readwrite("mu_loc", &VariationalState::mu_loc)
      .def_readwrite("mu_var", &VariationalState::mu_var)
      .def_readwrite("g_loc", &VariationalState::g_loc)
      .def_readwrite("g_var", &VariationalState::g_var)
      .def_readwrite("e_loc", &VariationalState::e_loc)
      .def_readwrite("e_var", &VariationalState::e_var)
      .def_readwrite("lambda_loc", &VariationalState::lambda_loc)
      .def_readwrite("lambda_var", &VariationalState::lambda_var)
      .def_readwrite("gamma_loc", &VariationalState::gamma_loc)
      .def_readwrite("gamma_var", &VariationalState::gamma_var)
      .def_readwrite("delta_loc", &VariationalState::delta_loc)
      .def_readwrite("delta_var", &VariationalState::delta_var)
      .def_readwrite("tau_shape", &VariationalState::tau_shape)
      .def_readwrite("tau_rate", &VariationalState::tau_rate)
      .def("validate", &VariationalState::validate)
      .def("expected_point", &expected_point);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("state", &FitResult::state)
      .def_readonly("identified", &FitResult::identified)
      .def_readonly("elbo_trace", &FitResult::elbo_trace)
      .def_readonly("change_trace", &FitResult::change_trace)
      .def_readonly("n_iter", &FitResult::n_iter)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("wall_time", &FitResult::wall_time);

  py::class_<ParamSummary>(m, "ParamSummary")
      .def_readonly("name", &ParamSummary::name)
      .def_readonly("mean", &ParamSummary::mean)
      .def_readonly("sd", &ParamSummary::sd)
      .def_readonly("q05", &ParamSummary::q05)
      .def_readonly("q50", &ParamSummary::q50)
      .def_readonly("q95", &ParamSummary::q95)
      .def_readonly("rhat", &ParamSummary::rhat);

  py::class_<PosteriorDraws>(m, "PosteriorDraws")
      .def_readonly("names", &PosteriorDraws::names)
      .def_readonly("chains", &PosteriorDraws::chains)
      .def_readonly("wall_time", &PosteriorDraws::wall_time)
      .def_property_readonly("n_chains", &PosteriorDraws::n_chains)
      .def_property_readonly("n_kept", &PosteriorDraws::n_kept)
      .def("draw", &PosteriorDraws::draw, py::arg("chain"), py::arg("iteration"))
      .def("posterior_mean", &PosteriorDraws::posterior_mean)
      .def("summarize", [](const PosteriorDraws& d) { return summarize(d); });

  m.def(
      "simulate",
      [](int I, int J, std::vector<double> lambda, std::uint64_t seed, double missing_fraction,
         const std::string& reading) {
        if (reading != "variance" && reading != "sd")
          throw ValidationError("reading must be 'variance' or 'sd'");
        SimScenario s = protocol_scenario(
            I, J, std::move(lambda), seed,
            reading == "sd" ? ScaleReading::standard_deviation : ScaleReading::variance);
        s.missing_fraction = missing_fraction;
        Simulation sim = simulate(s);
        return py::make_tuple(sim.data, sim.truth);
      },
      py::arg("n_genotypes") = 25, py::arg("n_environments") = 12,
      py::arg("lambda_") = std::vector<double>{20.0}, py::arg("seed") = 1,
      py::arg("missing_fraction") = 0.0, py::arg("reading") = "variance",
      "Simulate a trial; returns (dataset, true parameters).");

  m.def("frequentist_fit", &frequentist_fit, py::arg("data"), py::arg("n_components"));
  m.def("post_process", &post_process, py::arg("theta"));
  m.def("init_state", &init_state, py::arg("theta"), py::arg("data"), py::arg("config"));
  m.def("elbo", &elbo, py::arg("state"), py::arg("data"), py::arg("hyper"));

  m.def("fit_vi", &fit_vi, py::arg("data"), py::arg("config"), py::arg("init") = "freq",
        py::arg("seed") = 1, py::arg("compute_elbo") = true,
        "CAVI fit started from a ThetaPoint, a VariationalState or an init mode name.");

  m.def(
      "fit_mcmc",
      [](const Dataset& data, const ModelConfig& config, int chains, int iters, int burn,
         std::optional<ThetaPoint> init, bool parallel) {
        GibbsOptions o;
        o.n_chains = chains;
        o.n_iter = iters;
        o.n_burn = burn;
        o.init = std::move(init);
        o.parallel_chains = parallel;
        py::gil_scoped_release release;
        return gibbs_fit(data, config, o);
      },
      py::arg("data"), py::arg("config"), py::arg("chains") = 4, py::arg("iters") = 6000,
      py::arg("burn") = 1000, py::arg("init") = py::none(), py::arg("parallel") = true);

  m.def("vi_summary", &vi_summary, py::arg("fit"), py::arg("data"), py::arg("n_draws") = 4000,
        py::arg("seed") = 1);

  m.def(
      "in_sample_rmse",
      [](const py::object& obj, const Dataset& data) {
        if (py::isinstance<FitResult>(obj)) return in_sample_rmse(obj.cast<const FitResult&>(), data);
        if (py::isinstance<PosteriorDraws>(obj))
          return in_sample_rmse(obj.cast<const PosteriorDraws&>(), data);
        return in_sample_rmse(obj.cast<const ThetaPoint&>(), data);
      },
      py::arg("fit"), py::arg("data"));

  m.def(
      "predict",
      [](const py::object& obj, const Dataset& data, int n_draws, bool include_noise,
         std::uint64_t seed) {
        const PredictOptions opt{n_draws, include_noise, seed};
        const auto cells = all_cells(data.n_genotypes(), data.n_environments());
        const PredictiveSummary s = py::isinstance<FitResult>(obj)
                                        ? predict(obj.cast<const FitResult&>(), data, cells, opt)
                                        : predict(obj.cast<const PosteriorDraws&>(), data, cells, opt);
        const Eigen::Index I = s.n_genotypes, J = s.n_environments;
        Eigen::MatrixXd mean(I, J), q05(I, J), q50(I, J), q95(I, J);
        for (const auto& c : s.cells) {
          mean(c.genotype, c.environment) = c.mean;
          q05(c.genotype, c.environment) = c.q05;
          q50(c.genotype, c.environment) = c.q50;
          q95(c.genotype, c.environment) = c.q95;
        }
        py::dict out;
        out["mean"] = mean;
        out["q05"] = q05;
        out["q50"] = q50;
        out["q95"] = q95;
        out["observed"] = data.observed_mask();
        return out;
      },
      py::arg("fit"), py::arg("data"), py::arg("n_draws") = 4000, py::arg("include_noise") = false,
      py::arg("seed") = 1, "Predictive mean and 5/50/95% quantiles of every cell as I x J arrays.");
}
