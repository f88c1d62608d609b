#pragma once

// Rothe time discretization of the reduced evolution inclusion
//   z_t in dg*(...)  <=>  (z^n - z^{n-1})/h in dI_g(Sigma^n),
//   Sigma^n = zhat^n - M_m z^n - grad f(z^n),  M_m = M + L + rho I,
// with each step solved as a convex minimization by three-operator splitting.

#include "ferro/convex.hpp"
#include "ferro/elliptic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ferro {

/// Dyadic time grid, h = T / 2^level.
struct TimeGrid {
  double T = 1.0;
  int level = 0;

  int steps() const { return 1 << level; }
  double h() const { return T / static_cast<double>(steps()); }
  double time(int n) const { return T * n / static_cast<double>(steps()); }
};

TimeGrid make_time_grid(double T, int level);

/// Mean of a piecewise-linear sampled series over each step (exact).
/// `times` must be increasing; values outside the sample range are held
/// constant. Returns one entry per step (entry n-1 for step n).
std::vector<Mat> average_series(const std::vector<double>& times,
                                const std::vector<Mat>& samples,
                                const TimeGrid& grid);
/// Value of the piecewise-linear series at time t.
Mat sample_series(const std::vector<double>& times,
                  const std::vector<Mat>& samples, double t);

/// Step averages of the load trace zhat(t) given at sample times.
std::vector<Mat> average_loads(const std::vector<double>& times,
                               const std::vector<Mat>& zhat_samples,
                               const TimeGrid& grid);

struct StepOptions {
  double step_tol = 1e-6;          // bound on the integrated certificate
  double fixed_point_tol = 1e-11;  // on max|x_A - x_B| / gamma, relative
  int max_iterations = 100000;
  double ball_feasibility = 1e-8;  // slack on |Sigma| <= kappa
  unsigned long long seed = 20240531;  // power-iteration start vector
};

/// Which existence theorem's hypotheses the configuration meets.
enum class Regime {
  HardeningPositive,   // L > 0
  CoerciveRemanent,    // L = 0 (or singular), power-law g, coercive f
  Unsupported,
};
Regime classify_regime(const MaterialTensors& t, const PotentialSpec& f,
                       const PotentialSpec& g);
std::string regime_name(Regime r);

/// Exponent p used for the Hoelder pairing of rates and loads: the power-law
/// exponent, or 2 for the ball indicator.
double flow_exponent(const PotentialSpec& g);

class SteppedProblem {
 public:
  /// `zhat` holds one averaged load trace per step. `regularization` is the
  /// weight rho of the identity term in M_m.
  SteppedProblem(const AssembledSystem& system, PotentialSpec f,
                 PotentialSpec g, TimeGrid grid, double regularization,
                 std::vector<Mat> zhat, StepOptions options = {});

  const AssembledSystem& system() const { return *system_; }
  const PotentialSpec& f() const { return f_; }
  const PotentialSpec& g() const { return g_; }
  const TimeGrid& time_grid() const { return grid_; }
  double regularization() const { return rho_; }
  const std::vector<Mat>& zhat() const { return zhat_; }
  const StepOptions& options() const { return options_; }
  InternalLayout layout() const { return system_->layout(); }

  /// (M + L) v
  Mat apply_ML(const Mat& v) const;
  /// (M + L + rho) v
  Mat apply_Mm(const Mat& v) const;
  /// Power-iteration estimate of the largest eigenvalue of M_m.
  double lambda_max() const { return lambda_max_; }
  /// Splitting step size, 0.9 / lambda_max().
  double step_size() const { return 0.9 / lambda_max_; }

  Mat grad_f(const Mat& z) const;
  Mat prox_f(double lambda, const Mat& v) const;
  double integral_f(const Mat& z) const;

 private:
  const AssembledSystem* system_;
  PotentialSpec f_;
  PotentialSpec g_;
  TimeGrid grid_;
  double rho_;
  std::vector<Mat> zhat_;
  StepOptions options_;
  double lambda_max_ = 1.0;
};

struct StepResult {
  Mat z;
  Mat Sigma;
  double certificate = 0.0;
  double constraint_violation = 0.0;  // max(|Sigma| - kappa, 0), ball only
  double fixed_point_residual = 0.0;
  int iterations = 0;
};

/// One Rothe step from z_prev with averaged load zhat. `initial` optionally
/// seeds the splitting iterate. Throws StepSolveFailure, DomainEscape.
StepResult step(const SteppedProblem& problem, const Mat& z_prev,
                const Mat& zhat, const Mat* initial = nullptr);

/// Integrated Young-Fenchel certificate sum_K |K| |res_K| plus a bound on
/// the rounding error of evaluating it.
double step_certificate(const SteppedProblem& problem, const Mat& rate,
                        const Mat& Sigma);

struct Trajectory {
  TimeGrid grid;
  std::vector<Mat> z;       // z^0 .. z^N
  std::vector<Mat> Sigma;   // Sigma^1 .. Sigma^N at [1..N]; [0] at t = 0
  std::vector<Mat> fields;  // (sigma, E) = zhat^n - M z^n
  std::vector<Mat> zhat;    // averaged loads at [1..N]; [0] repeats [1]
  std::vector<double> certificate;
  std::vector<double> constraint_violation;
  std::vector<int> iterations;

  int steps() const { return grid.steps(); }
  Mat rate(int n) const { return (z[n] - z[n - 1]) / grid.h(); }
  /// Piecewise-affine interpolant.
  Mat affine(double t) const;
  /// Piecewise-constant interpolant: z^n on ((n-1)h, nh], z^0 at t <= 0.
  Mat constant(double t) const;
  /// Step index n with t in ((n-1)h, nh] (0 for t <= 0).
  int step_of(double t) const;
};

/// Per-step terms of the discrete energy inequality; entry 0 holds the
/// initial-state terms, rate terms are zero there.
struct EnergyLedger {
  std::vector<double> Ig_star;      // I_{g*}(rate)
  std::vector<double> Ig;           // I_g(Sigma)
  std::vector<double> quad;         // 1/2 <(M + L) z, z>
  std::vector<double> reg;          // rho/2 |z|^2
  std::vector<double> If;           // I_f(z)
  std::vector<double> work;         // |rate|_{p*} |zhat|_p
  std::vector<double> dissipation;  // <rate, Sigma>
  double p = 2.0;
};

struct RunResult {
  Trajectory trajectory;
  EnergyLedger ledger;
};

/// Runs all 2^level steps. z0 must lie in dom(I_f); StepSolveFailure
/// messages carry the failing step index.
RunResult run(const SteppedProblem& problem, const Mat& z0);

struct EnergyReport {
  std::vector<double> lhs, rhs, slack;  // per partial sum l = 0..N
  double min_slack = 0.0;
  double min_dissipation = 0.0;
  double max_constraint_violation = 0.0;
  // Quantities the a-priori estimates keep bounded across levels.
  double sup_If = 0.0;
  double sup_z_L2 = 0.0;
  double rate_norm = 0.0;        // |z_t|_{p*, Omega_T}
  double rate_energy = 0.0;      // |(M+L)^{1/2} z_t|^2_{2, Omega_T}
  double driving_norm = 0.0;     // |Sigma_bar|_{p, Omega_T}
};

EnergyReport energy_report(const SteppedProblem& problem,
                           const RunResult& result);

struct InterpolantCheck {
  double gap_quadrature = 0.0;  // |z_m - zbar_m|^{p*} by adaptive quadrature
  double gap_identity = 0.0;    // h^{p*}/(p*+1) |dz_m/dt|^{p*}
  double relative_error = 0.0;
  // |xi|_{L^2(0,T)} <= |xibar|_{L^2(-h,T)} <= (h|xi0|^2 + |xibar|^2)^{1/2}
  double affine_norm = 0.0;
  double extended_constant_norm = 0.0;
  double bound = 0.0;
  bool rothe_bound_holds = false;
};

InterpolantCheck interpolant_check(const Trajectory& trajectory,
                                   double cell_measure, double pstar);

}  // namespace ferro
