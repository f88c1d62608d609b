#pragma once

// Empirical Young measures pooled from nested Rothe refinements, the field
// F = int grad f dtau, and the discrete residual of the measure-valued
// solution inequality.

#include "ferro/rothe.hpp"

#include <vector>

namespace ferro {

/// Per space-time cell of (spatial cells) x (dyadic time blocks at
/// `time_level`), a weighted point cloud in internal-variable space.
struct EmpiricalYoungMeasure {
  TimeGrid blocks;  // the coarse time partition
  int num_cells = 0;
  int rows = 0;
  std::vector<std::vector<Vec>> atoms;      // [block * num_cells + cell]
  std::vector<std::vector<double>> weights;

  int num_blocks() const { return blocks.steps(); }
  std::size_t index(int block, int cell) const {
    return static_cast<std::size_t>(block) * static_cast<std::size_t>(num_cells) +
           static_cast<std::size_t>(cell);
  }
  /// Block containing time t, clamped to [0, num_blocks()).
  int block_of(double t) const;
  Vec mean(int block, int cell) const;
  /// rows x num_cells first moment on one time block.
  Mat first_moment(int block) const;
  /// Largest |sum w - 1| over all cells.
  double normalization_error() const;
  /// Largest distance of an atom to its cell mean.
  double spread() const;
};

/// Pools the piecewise-constant interpolants of all trajectories. Each
/// sample z^n (level m, cell K) enters with weight h_m |K|; bitwise-equal
/// atoms are merged. Throws MismatchedScenario when horizons or shapes
/// differ or a trajectory is coarser than the partition.
EmpiricalYoungMeasure build_measure(const std::vector<const Trajectory*>& runs,
                                    int time_level);

/// F per block: sum_k w_k grad f(xi_k). Throws AtomOutsideDomain naming the
/// worst offending atom.
std::vector<Mat> eval_F(const EmpiricalYoungMeasure& measure,
                        const PotentialSpec& f, const InternalLayout& layout);

struct MVSCheckpoint {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
};

struct MVSResidualReport {
  std::vector<MVSCheckpoint> checkpoints;
  std::vector<Mat> F;
  Regime regime = Regime::Unsupported;
  bool hardening_positive = false;
  bool coercive_f = false;
  double tolerance = 0.0;  // tol_mvs scaled by |Omega_T|
  double min_slack = 0.0;
  bool holds = false;      // min_slack >= -tolerance
  /// Largest |F - grad f(first moment)|; zero for a Dirac measure.
  double F_mismatch = 0.0;
  /// Ball g only: largest excess of |(sigma, E) - L z - F| over kappa.
  double constraint_violation = 0.0;
};

/// Evaluates both sides of the inequality on (0, t) for each checkpoint t
/// using the finest trajectory; L includes the regularization rho.
MVSResidualReport mvs_residual(const SteppedProblem& finest,
                               const Trajectory& trajectory,
                               const EmpiricalYoungMeasure& measure,
                               const std::vector<double>& checkpoints,
                               double tol_mvs = 1e-5);

/// Space-time L2 norm of zbar_fine - zbar_coarse; fine.level > coarse.level.
double level_difference(const Trajectory& fine, const Trajectory& coarse,
                        const Vec& cell_measures);

struct LevelRun {
  const SteppedProblem* problem = nullptr;
  const RunResult* result = nullptr;
};

struct WindowStats {
  int level = 0;                  // window (level, level + 1)
  double level_difference = 0.0;  // |zbar_{m+1} - zbar_m|
  double spread = 0.0;            // measure of the window on level-m blocks
  double F_mismatch = 0.0;
};

struct ConvergenceReport {
  std::vector<int> levels;
  std::vector<EnergyReport> energy;
  std::vector<WindowStats> windows;
  std::vector<double> cauchy_ratios;  // difference_{m+1} / difference_m
  bool spread_monotone = false;       // strictly decreasing across windows
  EmpiricalYoungMeasure tail;         // measure of the last window
  MVSResidualReport mvs;              // finest run against `tail`
};

/// Runs must be ordered by consecutive level. The residual uses the measure
/// of the last window; empty `checkpoints` means every tail block boundary.
ConvergenceReport convergence_study(const std::vector<LevelRun>& runs,
                                    double tol_mvs = 1e-5,
                                    std::vector<double> checkpoints = {});

}  // namespace ferro
