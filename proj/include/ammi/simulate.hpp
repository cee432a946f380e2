#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ammi/model.hpp"
#include "ammi/stats.hpp"

namespace ammi {

/// How the scale settings are read: as variances or as standard deviations.
enum class ScaleReading { variance, standard_deviation };

struct SimScenario {
  std::string name;
  int n_genotypes = 25;
  int n_environments = 12;
  std::vector<double> lambda_true{20.0};
  double sigma2_g = 10.0;
  double sigma2_e = 10.0;
  double sigma2_y = 1.0;
  double mu_mean = 90.0;
  double mu_sd = 3.1622776601683795;  // sqrt(10)
  std::uint64_t seed = 1;
  double missing_fraction = 0.0;

  int n_components() const { return static_cast<int>(lambda_true.size()); }
  /// Throws ValidationError on a malformed scenario.
  void validate() const;
};

/// Scenario with the protocol settings (mu ~ N(90, 10), main-effect
/// scale 10, sigma2_y = 1) interpreted under `reading`.
SimScenario protocol_scenario(int n_genotypes, int n_environments, std::vector<double> lambda,
                              std::uint64_t seed = 1,
                              ScaleReading reading = ScaleReading::variance);

struct Simulation {
  Dataset data;
  ThetaPoint truth;
};

Simulation simulate(const SimScenario& s);

/// Removes `n_drop` cells uniformly at random while keeping every row and
/// column non-empty. Throws ValidationError when that is impossible.
Dataset drop_cells(const Dataset& data, std::size_t n_drop, Rng& rng);

/// Keeps round(keep_fraction * n) cells (at least max(I, J)) subject to
/// the same coverage rule.
Dataset subsample_cells(const Dataset& data, double keep_fraction, Rng& rng);

/// Named simulation grid: the full I x J x lambda cross, the
/// initialisation and recovery scenarios and the timing size groups.
std::vector<SimScenario> scenario_grid();

/// Looks a scenario up by name in scenario_grid(). Throws ValidationError
/// for unknown names.
SimScenario named_scenario(const std::string& name);

/// Timing scenarios. `group` is "small" (n in {100,250,500,1000}) or
/// "large" (n in {5000,10000,15000,20000}).
std::vector<SimScenario> size_group(const std::string& group, int n_components);

}  // namespace ammi
