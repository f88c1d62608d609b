#pragma once

// Scenario files: a sectioned `key = value` text format.
//
//   # comment
//   [grid]               dim, cells (per axis), lengths (per axis)
//   [material]           elastic, dielectric, coupling, hardening
//   [potential.f]        family, acts_on, H | Ps, a; family = sum takes
//   [potential.f.term]   ... one section per summand
//   [potential.g]        family = power_law (c, p) | ball (kappa)
//   [time]               T, level, levels = m0..m1, regularization (auto = 1/m)
//   [loads]              shape = uniform | sine; repeated rows
//                        sample = t b_1 .. b_d q
//   [initial]            z0 = n values; repeated rows cell = k v_1 .. v_n
//   [output]             checkpoints = t_1 t_2 ...; seed
//   [tolerances]         step, energy, mvs, linear, fixed_point,
//                        max_iterations
//
// Values are whitespace-separated lists. See README.md for the full grammar
// and defaults.

#include "ferro/elliptic.hpp"
#include "ferro/rothe.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ferro {

struct PotentialConfig {
  std::string family;
  std::string acts_on;        // empty: the family's natural block
  std::vector<double> H;      // quadratic: one scale or a full n x n matrix
  double Ps = 1.0;
  std::vector<double> a;      // log_directional direction
  double c = 1.0;
  double p = 2.0;
  double kappa = 1.0;
  std::vector<PotentialConfig> terms;  // sum
};

struct LoadSample {
  double t = 0.0;
  std::vector<double> b;  // d values
  double q = 0.0;
};

struct CellOverride {
  int cell = 0;
  std::vector<double> z;
};

struct Tolerances {
  double step = 1e-6;
  double energy = 1e-8;
  double mvs = 1e-5;
  double linear = 1e-10;
  double fixed_point = 1e-11;
  int max_iterations = 100000;
};

struct Scenario {
  int dim = 1;
  std::vector<int> cells;
  std::vector<double> lengths;

  std::string elastic_kind = "isotropic";  // isotropic (lambda mu) | packed
  std::vector<double> elastic{1.0, 1.0};
  std::vector<double> dielectric;          // d (diagonal) or d*d values
  std::vector<double> coupling;            // empty or d*s values
  std::vector<double> hardening;           // empty, one scale, or n*n

  PotentialConfig f;
  PotentialConfig g;

  double T = 1.0;
  int level = 4;
  int level_min = 4;
  int level_max = 4;
  std::optional<double> regularization;  // empty: 1/m at level m

  std::string load_shape = "uniform";
  std::vector<LoadSample> loads;

  std::vector<double> z0;  // empty: zero
  std::vector<CellOverride> z0_cells;

  std::vector<double> checkpoints;  // empty: every level-m0 block boundary
  unsigned long long seed = 20240531;
  Tolerances tol;

  int internal_size() const { return dim * (dim + 1) / 2 + dim; }
};

/// Parses and validates. Throws ParseError on syntax, ValidationError with
/// every violated rule otherwise.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Canonical text form; parse(serialize(s)) reproduces s exactly.
std::string serialize_scenario(const Scenario& s);

/// Collects semantic violations of an already-populated scenario.
std::vector<std::string> validate_scenario(const Scenario& s);

MaterialTensors build_tensors(const Scenario& s);
PotentialSpec build_potential(const PotentialConfig& cfg, int dim);

/// The level-independent part of a scenario: grid, tensors, assembled
/// operator, potentials and the sampled load trace.
class Model {
 public:
  explicit Model(const Scenario& s);

  const Scenario& scenario() const { return scenario_; }
  const AssembledSystem& system() const { return *system_; }
  const PotentialSpec& f() const { return f_; }
  const PotentialSpec& g() const { return g_; }

  double regularization(int level) const;
  Mat initial_state() const;
  /// Nodal loads (b, q) at the load sample times.
  const std::vector<double>& sample_times() const { return times_; }
  const std::vector<Mat>& zhat_samples() const { return zhat_samples_; }
  /// Step averages of the nodal loads at the given level.
  std::vector<std::pair<Mat, Vec>> averaged_loads(const TimeGrid& tg) const;

  SteppedProblem problem(int level) const;

 private:
  Scenario scenario_;
  std::unique_ptr<AssembledSystem> system_;
  PotentialSpec f_;
  PotentialSpec g_;
  std::vector<double> times_;
  std::vector<Mat> b_samples_;
  std::vector<Vec> q_samples_;
  std::vector<Mat> zhat_samples_;
};

}  // namespace ferro
