#pragma once

// Constitutive potentials f (remanent energy) and g (flow potential):
// evaluation, gradients, conjugates, proximal maps and Young-Fenchel
// residuals. All functions are pure; specs are immutable after construction.

#include "ferro/packing.hpp"

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ferro {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Which block of z = (r, P) a potential reads.
enum class ActsOn { Full, RemanentStrain, Polarization };

/// g(v) = c |v|^p, p >= 2.
struct PowerLaw {
  double c = 1.0;
  double p = 2.0;
  double conjugate_exponent() const { return p / (p - 1.0); }
  /// g*(w) = conjugate_coefficient() |w|^{p*}.
  double conjugate_coefficient() const;
};

/// Indicator of the closed ball {|v| <= kappa}.
struct BallIndicator {
  double kappa = 1.0;
};

/// f(P) = -Ps^2 (ln(1 - |P|/Ps) + |P|/Ps) on |P| < Ps.
struct LogSaturationRadial {
  double Ps = 1.0;
};

/// f(P) = Ps/2 ((1+t) ln(1+t) + (1-t) ln(1-t)), t = (P, a)/Ps, on |t| < 1.
struct LogSaturationDirectional {
  double Ps = 1.0;
  Vec a;
};

/// f(z) = 1/2 <H z, z>, H symmetric positive semi-definite.
struct Quadratic {
  Mat H;
};

struct PotentialSpec;

struct SumOf {
  std::vector<PotentialSpec> terms;
};

using PotentialFamily =
    std::variant<PowerLaw, BallIndicator, LogSaturationRadial,
                 LogSaturationDirectional, Quadratic, SumOf>;

/// Growth and coercivity constants. For g: c1|v|^p - c2 <= g <= c3|v|^p + c4
/// and g*(v) >= d1|v|^{p*} - d2. For f: a1|P|^2 - a2 <= f (P-only) or
/// b1|z|^2 - b2 <= f (full).
struct GrowthConstants {
  std::optional<double> c1, c2, c3, c4, d1, d2;
  std::optional<double> a1, a2, b1, b2;
  bool empirical = false;
};

struct PotentialSpec {
  PotentialFamily family;
  ActsOn acts_on = ActsOn::Full;
  GrowthConstants growth;

  std::string family_name() const;
  bool is_flow_potential() const {
    return std::holds_alternative<PowerLaw>(family) ||
           std::holds_alternative<BallIndicator>(family);
  }
  /// True if every term reads only the polarization block.
  bool polarization_only() const;
  /// Satisfies the coercivity condition that applies to its dependence
  /// (a1 > 0 for P-only potentials, b1 > 0 otherwise).
  bool coercive() const;
};

// Validating constructors; they fill the growth constants.
PotentialSpec make_power_law(double c, double p);
PotentialSpec make_ball_indicator(double kappa);
PotentialSpec make_log_radial(double Ps);
PotentialSpec make_log_directional(double Ps, const Vec& a);
PotentialSpec make_quadratic(const Mat& H, ActsOn acts_on = ActsOn::Full);
PotentialSpec make_sum(std::vector<PotentialSpec> terms);

/// (offset, length) of the block of z a potential reads.
std::pair<int, int> block_of(ActsOn acts_on, const InternalLayout& layout);

// --- evaluation on the family's own argument ------------------------------

/// Extended-real value; +inf outside the effective domain.
double eval(const PotentialSpec& spec, const Vec& v);
/// Gradient on the interior of the domain; throws OutsideDomain otherwise.
Vec grad(const PotentialSpec& spec, const Vec& v);
/// Minimizer of spec(x) + |x - v|^2 / (2 lambda).
Vec prox(const PotentialSpec& spec, double lambda, const Vec& v);

// --- evaluation on full internal-variable vectors -------------------------

double eval(const PotentialSpec& spec, const InternalLayout& layout,
            const Vec& z);
Vec grad(const PotentialSpec& spec, const InternalLayout& layout,
         const Vec& z);
Vec prox(const PotentialSpec& spec, const InternalLayout& layout,
         double lambda, const Vec& z);

// --- flow-potential duality ----------------------------------------------

/// Legendre-Fenchel conjugate g*(w). UnsupportedFamily for f-families.
double conjugate_eval(const PotentialSpec& g, const Vec& w);
/// Gradient of g* where it exists (PowerLaw everywhere, Ball off the origin).
Vec conjugate_grad(const PotentialSpec& g, const Vec& w);
/// Minimizer of g*(x) + |x - v|^2 / (2 lambda).
Vec conjugate_prox(const PotentialSpec& g, double lambda, const Vec& v);

/// g(w) + g*(v) - <v, w> >= 0, zero iff v in dg(w). `feasibility_tol` widens
/// the ball of a BallIndicator when evaluating g(w).
double fenchel_residual(const PotentialSpec& g, const Vec& v, const Vec& w,
                        double feasibility_tol = 0.0);

/// sum_k measure_k * spec(field.col(k)); +inf if any column is outside dom.
double integral_functional(const PotentialSpec& spec, const Mat& field,
                           const Vec& measures);
double integral_functional(const PotentialSpec& spec,
                           const InternalLayout& layout, const Mat& field,
                           const Vec& measures);
/// Same, for g*.
double integral_conjugate(const PotentialSpec& g, const Mat& field,
                          const Vec& measures);

/// For a non-coercive P-only spec, a polarization P with
/// spec(P) < a1 |P|^2 - a2. Empty when the spec is coercive.
std::optional<Vec> coercivity_witness(const PotentialSpec& spec, double a1,
                                      double a2);

/// Distance margin used to keep iterates strictly inside saturation domains.
inline constexpr double kSaturationMargin = 1e-9;

}  // namespace ferro
