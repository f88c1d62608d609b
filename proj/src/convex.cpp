#include "ferro/convex.hpp"

#include "ferro/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ferro {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Root of an increasing function on [lo, hi] with phi(lo) <= 0 <= phi(hi):
/// Newton steps, falling back to bisection when a step leaves the bracket.
template <class Phi, class DPhi>
double solve_increasing(Phi phi, DPhi dphi, double lo, double hi) {
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double val = phi(s);
    if (val == 0.0) return s;
    if (val > 0.0) {
      hi = s;
    } else {
      lo = s;
    }
    if (hi - lo <= 4e-16 * std::max(std::abs(s), 1e-300)) return s;
    const double d = dphi(s);
    double next = s - val / d;
    if (!(d > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 2e-16 * std::max(std::abs(s), 1e-300)) {
      return next;
    }
    s = next;
  }
  throw NoConvergence("1D proximal solve exceeded 200 iterations");
}

/// -(ln(1 - x) + x) for x in [0, 1), accurate near 0.
double neg_log1m_plus(double x) {
  if (x < 1e-3) {
    double term = x * x;
    double sum = 0.0;
    for (int k = 2; k <= 12; ++k) {
      sum += term / k;
      term *= x;
    }
    return sum;
  }
  return -(std::log1p(-x) + x);
}

double directional_energy(double Ps, double t) {
  const double at = std::abs(t);
  if (at >= 1.0) return kInf;
  if (at < 1e-4) {
    // (1+t)ln(1+t) + (1-t)ln(1-t) = t^2 + t^4/6 + t^6/15 + ...
    const double t2 = t * t;
    return 0.5 * Ps * (t2 + t2 * t2 / 6.0 + t2 * t2 * t2 / 15.0);
  }
  return 0.5 * Ps * ((1.0 + t) * std::log1p(t) + (1.0 - t) * std::log1p(-t));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

/// Radially symmetric prox: x = s v / |v| with s solving s + lambda*k(s) = |v|.
template <class K, class DK>
Vec radial_prox(const Vec& v, double lambda, double cap, K k, DK dk) {
  const double rho = v.norm();
  if (rho == 0.0) return Vec::Zero(v.size());
  const double hi = std::min(rho, cap);
  auto phi = [&](double s) { return s + lambda * k(s) - rho; };
  auto dphi = [&](double s) { return 1.0 + lambda * dk(s); };
  if (phi(hi) <= 0.0) return (hi / rho) * v;
  const double s = solve_increasing(phi, dphi, 0.0, hi);
  return (s / rho) * v;
}

double min_eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vec sum_prox(const std::vector<PotentialSpec>& terms, std::size_t first,
             const InternalLayout* layout, double lambda, const Vec& v);

Vec prox_dispatch(const PotentialSpec& spec, const InternalLayout* layout,
                  double lambda, const Vec& v) {
  if (const auto* sum = std::get_if<SumOf>(&spec.family)) {
    return sum_prox(sum->terms, 0, layout, lambda, v);
  }
  return layout ? prox(spec, *layout, lambda, v) : prox(spec, lambda, v);
}

/// prox of terms[first] + ... + terms[end] by Douglas-Rachford over the first
/// term (with the proximal quadratic folded in) and the remainder.
Vec sum_prox(const std::vector<PotentialSpec>& terms, std::size_t first,
             const InternalLayout* layout, double lambda, const Vec& v) {
  if (first + 1 == terms.size()) {
    return prox_dispatch(terms[first], layout, lambda, v);
  }
  const double gamma = lambda;
  const double mu = gamma * lambda / (gamma + lambda);
  auto prox_head = [&](const Vec& y) {
    return prox_dispatch(terms[first], layout, mu,
                         (lambda * y + gamma * v) / (lambda + gamma));
  };
  Vec y = v;
  const double scale = std::max(1.0, v.norm());
  for (int it = 0; it < 20000; ++it) {
    const Vec x = prox_head(y);
    const Vec w = sum_prox(terms, first + 1, layout, gamma, 2.0 * x - y);
    y += w - x;
    if ((w - x).norm() <= 1e-14 * scale) return prox_head(y);
  }
  throw NoConvergence("proximal map of a sum did not converge");
}

}  // namespace

double PowerLaw::conjugate_coefficient() const {
  const double q = conjugate_exponent();
  return std::pow(c * p, -1.0 / (p - 1.0)) / q;
}

std::string PotentialSpec::family_name() const {
  return std::visit(
      Overloaded{[](const PowerLaw&) { return std::string("power_law"); },
                 [](const BallIndicator&) { return std::string("ball"); },
                 [](const LogSaturationRadial&) {
                   return std::string("log_radial");
                 },
                 [](const LogSaturationDirectional&) {
                   return std::string("log_directional");
                 },
                 [](const Quadratic&) { return std::string("quadratic"); },
                 [](const SumOf&) { return std::string("sum"); }},
      family);
}

bool PotentialSpec::polarization_only() const {
  if (const auto* sum = std::get_if<SumOf>(&family)) {
    return std::all_of(sum->terms.begin(), sum->terms.end(),
                       [](const PotentialSpec& t) {
                         return t.polarization_only();
                       });
  }
  return acts_on == ActsOn::Polarization;
}

bool PotentialSpec::coercive() const {
  if (polarization_only()) return growth.a1 && *growth.a1 > 0.0;
  return growth.b1 && *growth.b1 > 0.0;
}

PotentialSpec make_power_law(double c, double p) {
  require(c > 0.0, "power_law requires c > 0");
  require(p >= 2.0 && std::isfinite(p), "power_law requires 2 <= p < inf");
  PotentialSpec s{PowerLaw{c, p}, ActsOn::Full, {}};
  const PowerLaw& pl = std::get<PowerLaw>(s.family);
  s.growth.c1 = c;
  s.growth.c3 = c;
  s.growth.c2 = 0.0;
  s.growth.c4 = 0.0;
  s.growth.d1 = pl.conjugate_coefficient();
  s.growth.d2 = 0.0;
  return s;
}

PotentialSpec make_ball_indicator(double kappa) {
  require(kappa > 0.0 && std::isfinite(kappa), "ball requires kappa > 0");
  return {BallIndicator{kappa}, ActsOn::Full, {}};
}

PotentialSpec make_log_radial(double Ps) {
  require(Ps > 0.0 && std::isfinite(Ps), "log_radial requires Ps > 0");
  PotentialSpec s{LogSaturationRadial{Ps}, ActsOn::Polarization, {}};
  // -ln(1 - x) - x >= x^2 / 2 on [0, 1), so f(P) >= |P|^2 / 2.
  s.growth.a1 = 0.5;
  s.growth.a2 = 0.0;
  return s;
}

PotentialSpec make_log_directional(double Ps, const Vec& a) {
  require(Ps > 0.0 && std::isfinite(Ps), "log_directional requires Ps > 0");
  require(a.size() >= 1, "log_directional requires a direction");
  require(std::abs(a.norm() - 1.0) <= 1e-12,
          "log_directional direction must have unit length");
  PotentialSpec s{LogSaturationDirectional{Ps, a}, ActsOn::Polarization, {}};
  if (a.size() == 1) {
    // One-dimensional polarization: the domain is bounded and
    // (1+t)ln(1+t) + (1-t)ln(1-t) >= t^2.
    s.growth.a1 = 0.5 / Ps;
    s.growth.a2 = 0.0;
  }
  return s;
}

PotentialSpec make_quadratic(const Mat& H, ActsOn acts_on) {
  require(H.rows() == H.cols() && H.rows() > 0, "quadratic H must be square");
  require((H - H.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()),
          "quadratic H must be symmetric");
  const double lmin = min_eig(H);
  require(lmin >= -1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()),
          "quadratic H must be positive semi-definite");
  PotentialSpec s{Quadratic{H}, acts_on, {}};
  if (lmin > 0.0) {
    if (acts_on == ActsOn::Polarization) {
      s.growth.a1 = 0.5 * lmin;
      s.growth.a2 = 0.0;
    } else if (acts_on == ActsOn::Full) {
      s.growth.b1 = 0.5 * lmin;
      s.growth.b2 = 0.0;
    }
  }
  return s;
}

PotentialSpec make_sum(std::vector<PotentialSpec> terms) {
  require(!terms.empty(), "sum requires at least one term");
  for (const auto& t : terms) {
    require(!t.is_flow_potential(),
            "sum composes remanent-energy families only");
  }
  PotentialSpec s{SumOf{std::move(terms)}, ActsOn::Full, {}};
  const auto& ts = std::get<SumOf>(s.family).terms;
  // Every family here is >= 0, so the sum dominates each term's bound.
  double best_a1 = 0.0, best_b1 = 0.0, strain_bound = 0.0;
  for (const auto& t : ts) {
    if (t.growth.a1 && *t.growth.a1 > best_a1) best_a1 = *t.growth.a1;
    if (t.growth.b1 && *t.growth.b1 > best_b1) best_b1 = *t.growth.b1;
    if (const auto* q = std::get_if<Quadratic>(&t.family);
        q && t.acts_on == ActsOn::RemanentStrain) {
      strain_bound = std::max(strain_bound, 0.5 * min_eig(q->H));
    }
  }
  if (best_a1 > 0.0) {
    s.growth.a1 = best_a1;
    s.growth.a2 = 0.0;
  }
  // f >= s1|r|^2 + a1|P|^2 >= min(s1, a1)|z|^2 when the blocks are split.
  const double split = std::min(strain_bound, best_a1);
  if (std::max(best_b1, split) > 0.0) {
    s.growth.b1 = std::max(best_b1, split);
    s.growth.b2 = 0.0;
  }
  return s;
}

std::pair<int, int> block_of(ActsOn acts_on, const InternalLayout& layout) {
  switch (acts_on) {
    case ActsOn::RemanentStrain:
      return {0, layout.strain_size()};
    case ActsOn::Polarization:
      return {layout.polarization_offset(), layout.vector_size()};
    case ActsOn::Full:
    default:
      return {0, layout.size()};
  }
}

double eval(const PotentialSpec& spec, const Vec& v) {
  return std::visit(
      Overloaded{
          [&](const PowerLaw& g) { return g.c * std::pow(v.norm(), g.p); },
          [&](const BallIndicator& g) {
            return v.norm() <= g.kappa ? 0.0 : kInf;
          },
          [&](const LogSaturationRadial& f) {
            const double rho = v.norm();
            if (rho >= f.Ps) return kInf;
            return f.Ps * f.Ps * neg_log1m_plus(rho / f.Ps);
          },
          [&](const LogSaturationDirectional& f) {
            return directional_energy(f.Ps, v.dot(f.a) / f.Ps);
          },
          [&](const Quadratic& f) { return 0.5 * v.dot(f.H * v); },
          [&](const SumOf& s) {
            double total = 0.0;
            for (const auto& t : s.terms) total += eval(t, v);
            return total;
          }},
      spec.family);
}

Vec grad(const PotentialSpec& spec, const Vec& v) {
  return std::visit(
      Overloaded{
          [&](const PowerLaw& g) -> Vec {
            const double n = v.norm();
            if (n == 0.0) return Vec::Zero(v.size());
            return (g.c * g.p * std::pow(n, g.p - 2.0)) * v;
          },
          [&](const BallIndicator& g) -> Vec {
            if (v.norm() < g.kappa) return Vec::Zero(v.size());
            throw OutsideDomain("ball indicator has no gradient at |v| >= kappa");
          },
          [&](const LogSaturationRadial& f) -> Vec {
            const double rho = v.norm();
            if (rho >= f.Ps) {
              throw OutsideDomain("|P| >= Ps for log_radial gradient");
            }
            return (f.Ps / (f.Ps - rho)) * v;
          },
          [&](const LogSaturationDirectional& f) -> Vec {
            const double t = v.dot(f.a) / f.Ps;
            if (std::abs(t) >= 1.0) {
              throw OutsideDomain("|(P,a)| >= Ps for log_directional gradient");
            }
            return std::atanh(t) * f.a;
          },
          [&](const Quadratic& f) -> Vec { return f.H * v; },
          [&](const SumOf& s) -> Vec {
            Vec total = Vec::Zero(v.size());
            for (const auto& t : s.terms) total += grad(t, v);
            return total;
          }},
      spec.family);
}

Vec prox(const PotentialSpec& spec, double lambda, const Vec& v) {
  require(lambda > 0.0, "prox requires lambda > 0");
  return std::visit(
      Overloaded{
          [&](const PowerLaw& g) -> Vec {
            if (g.p == 2.0) return v / (1.0 + 2.0 * lambda * g.c);
            return radial_prox(
                v, lambda, kInf,
                [&](double s) { return g.c * g.p * std::pow(s, g.p - 1.0); },
                [&](double s) {
                  return g.c * g.p * (g.p - 1.0) * std::pow(s, g.p - 2.0);
                });
          },
          [&](const BallIndicator& g) -> Vec {
            const double n = v.norm();
            return n <= g.kappa ? v : Vec((g.kappa / n) * v);
          },
          [&](const LogSaturationRadial& f) -> Vec {
            const double cap = f.Ps * (1.0 - kSaturationMargin);
            return radial_prox(
                v, lambda, cap,
                [&](double s) { return f.Ps * s / (f.Ps - s); },
                [&](double s) {
                  const double d = f.Ps - s;
                  return f.Ps * f.Ps / (d * d);
                });
          },
          [&](const LogSaturationDirectional& f) -> Vec {
            const double sa = v.dot(f.a);
            const double rho = std::abs(sa);
            if (rho == 0.0) return v;
            const double cap = f.Ps * (1.0 - kSaturationMargin);
            const double hi = std::min(rho, cap);
            auto phi = [&](double s) {
              return s + lambda * std::atanh(s / f.Ps) - rho;
            };
            auto dphi = [&](double s) {
              const double t = s / f.Ps;
              return 1.0 + lambda / (f.Ps * (1.0 - t * t));
            };
            const double s =
                phi(hi) <= 0.0 ? hi : solve_increasing(phi, dphi, 0.0, hi);
            return v + (std::copysign(s, sa) - sa) * f.a;
          },
          [&](const Quadratic& f) -> Vec {
            const Mat A =
                Mat::Identity(v.size(), v.size()) + lambda * f.H;
            return A.ldlt().solve(v);
          },
          [&](const SumOf& s) -> Vec {
            return sum_prox(s.terms, 0, nullptr, lambda, v);
          }},
      spec.family);
}

double eval(const PotentialSpec& spec, const InternalLayout& layout,
            const Vec& z) {
  if (const auto* sum = std::get_if<SumOf>(&spec.family)) {
    double total = 0.0;
    for (const auto& t : sum->terms) {
      total += eval(t, layout, z);
      if (total == kInf) return kInf;
    }
    return total;
  }
  const auto [off, len] = block_of(spec.acts_on, layout);
  return eval(spec, Vec(z.segment(off, len)));
}

Vec grad(const PotentialSpec& spec, const InternalLayout& layout,
         const Vec& z) {
  Vec out = Vec::Zero(z.size());
  if (const auto* sum = std::get_if<SumOf>(&spec.family)) {
    for (const auto& t : sum->terms) out += grad(t, layout, z);
    return out;
  }
  const auto [off, len] = block_of(spec.acts_on, layout);
  out.segment(off, len) = grad(spec, Vec(z.segment(off, len)));
  return out;
}

Vec prox(const PotentialSpec& spec, const InternalLayout& layout,
         double lambda, const Vec& z) {
  if (const auto* sum = std::get_if<SumOf>(&spec.family)) {
    // Terms on disjoint blocks separate: the prox is taken blockwise.
    bool separable = true;
    std::vector<ActsOn> seen;
    for (const auto& t : sum->terms) {
      if (std::holds_alternative<SumOf>(t.family) || t.acts_on == ActsOn::Full ||
          std::find(seen.begin(), seen.end(), t.acts_on) != seen.end()) {
        separable = false;
        break;
      }
      seen.push_back(t.acts_on);
    }
    if (!separable) return sum_prox(sum->terms, 0, &layout, lambda, z);
    Vec out = z;
    for (const auto& t : sum->terms) {
      const auto [off, len] = block_of(t.acts_on, layout);
      out.segment(off, len) = prox(t, lambda, Vec(z.segment(off, len)));
    }
    return out;
  }
  const auto [off, len] = block_of(spec.acts_on, layout);
  Vec out = z;
  out.segment(off, len) = prox(spec, lambda, Vec(z.segment(off, len)));
  return out;
}

double conjugate_eval(const PotentialSpec& g, const Vec& w) {
  if (const auto* pl = std::get_if<PowerLaw>(&g.family)) {
    return pl->conjugate_coefficient() *
           std::pow(w.norm(), pl->conjugate_exponent());
  }
  if (const auto* ball = std::get_if<BallIndicator>(&g.family)) {
    return ball->kappa * w.norm();
  }
  throw UnsupportedFamily("conjugate of " + g.family_name() +
                          " is not provided");
}

Vec conjugate_grad(const PotentialSpec& g, const Vec& w) {
  const double n = w.norm();
  if (n == 0.0) return Vec::Zero(w.size());
  if (const auto* pl = std::get_if<PowerLaw>(&g.family)) {
    const double q = pl->conjugate_exponent();
    return (pl->conjugate_coefficient() * q * std::pow(n, q - 2.0)) * w;
  }
  if (const auto* ball = std::get_if<BallIndicator>(&g.family)) {
    return (ball->kappa / n) * w;
  }
  throw UnsupportedFamily("conjugate of " + g.family_name() +
                          " is not provided");
}

Vec conjugate_prox(const PotentialSpec& g, double lambda, const Vec& v) {
  require(lambda > 0.0, "prox requires lambda > 0");
  if (const auto* pl = std::get_if<PowerLaw>(&g.family)) {
    const double q = pl->conjugate_exponent();
    const double k = pl->conjugate_coefficient();
    if (q == 2.0) return v / (1.0 + 2.0 * lambda * k);
    return radial_prox(
        v, lambda, kInf, [&](double s) { return k * q * std::pow(s, q - 1.0); },
        [&](double s) { return k * q * (q - 1.0) * std::pow(s, q - 2.0); });
  }
  if (const auto* ball = std::get_if<BallIndicator>(&g.family)) {
    const double n = v.norm();
    if (n <= lambda * ball->kappa) return Vec::Zero(v.size());
    return (1.0 - lambda * ball->kappa / n) * v;
  }
  throw UnsupportedFamily("conjugate of " + g.family_name() +
                          " is not provided");
}

double fenchel_residual(const PotentialSpec& g, const Vec& v, const Vec& w,
                        double feasibility_tol) {
  double gw;
  if (const auto* ball = std::get_if<BallIndicator>(&g.family)) {
    gw = w.norm() <= ball->kappa + feasibility_tol ? 0.0 : kInf;
  } else {
    gw = eval(g, w);
  }
  return gw + conjugate_eval(g, v) - v.dot(w);
}

double integral_functional(const PotentialSpec& spec, const Mat& field,
                           const Vec& measures) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < field.cols(); ++k) {
    const double val = eval(spec, Vec(field.col(k)));
    if (val == kInf) return kInf;
    total += measures(k) * val;
  }
  return total;
}

double integral_functional(const PotentialSpec& spec,
                           const InternalLayout& layout, const Mat& field,
                           const Vec& measures) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < field.cols(); ++k) {
    const double val = eval(spec, layout, Vec(field.col(k)));
    if (val == kInf) return kInf;
    total += measures(k) * val;
  }
  return total;
}

double integral_conjugate(const PotentialSpec& g, const Mat& field,
                          const Vec& measures) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < field.cols(); ++k) {
    total += measures(k) * conjugate_eval(g, Vec(field.col(k)));
  }
  return total;
}

std::optional<Vec> coercivity_witness(const PotentialSpec& spec, double a1,
                                      double a2) {
  if (spec.coercive() || !(a1 > 0.0)) return std::nullopt;
  const double radius = std::sqrt((std::max(a2, 0.0) + 1.0) / a1) + 1.0;
  if (const auto* f = std::get_if<LogSaturationDirectional>(&spec.family)) {
    const int d = static_cast<int>(f->a.size());
    if (d < 2) return std::nullopt;
    // Gram-Schmidt on the canonical basis vector least aligned with a.
    Eigen::Index k;
    f->a.cwiseAbs().minCoeff(&k);
    Vec u = Vec::Unit(d, k);
    u -= u.dot(f->a) * f->a;
    return Vec(radius * u.normalized());
  }
  if (const auto* q = std::get_if<Quadratic>(&spec.family)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(q->H);
    return Vec(radius * es.eigenvectors().col(0));
  }
  return std::nullopt;
}

}  // namespace ferro
