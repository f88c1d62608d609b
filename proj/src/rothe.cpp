#include "ferro/rothe.hpp"

#include "ferro/errors.hpp"
#include "ferro/parallel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace ferro {

namespace {

/// Exact integral over [a, b] of the piecewise-linear series.
Mat integrate_series(const std::vector<double>& times,
                     const std::vector<Mat>& samples, double a, double b) {
  Mat acc = Mat::Zero(samples.front().rows(), samples.front().cols());
  if (b <= a) return acc;
  // Constant extension before the first and after the last sample.
  if (a < times.front()) {
    acc += (std::min(b, times.front()) - a) * samples.front();
  }
  if (b > times.back()) {
    acc += (b - std::max(a, times.back())) * samples.back();
  }
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double lo = std::max(a, times[i]);
    const double hi = std::min(b, times[i + 1]);
    if (hi <= lo) continue;
    const double span = times[i + 1] - times[i];
    auto at = [&](double t) -> Mat {
      const double th = (t - times[i]) / span;
      return (1.0 - th) * samples[i] + th * samples[i + 1];
    };
    acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
  }
  return acc;
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TimeGrid make_time_grid(double T, int level) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be > 0");
  if (level < 0 || level > 24) throw InvalidArgument("level must be in [0, 24]");
  return {T, level};
}

Mat sample_series(const std::vector<double>& times,
                  const std::vector<Mat>& samples, double t) {
  if (times.empty() || times.size() != samples.size()) {
    throw InvalidArgument("series needs matching, non-empty times and samples");
  }
  if (t <= times.front()) return samples.front();
  if (t >= times.back()) return samples.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double th = (t - times[i]) / (times[i + 1] - times[i]);
  return (1.0 - th) * samples[i] + th * samples[i + 1];
}

std::vector<Mat> average_series(const std::vector<double>& times,
                                const std::vector<Mat>& samples,
                                const TimeGrid& grid) {
  if (times.empty() || times.size() != samples.size()) {
    throw InvalidArgument("series needs matching, non-empty times and samples");
  }
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i + 1] > times[i])) {
      throw InvalidArgument("sample times must be strictly increasing");
    }
  }
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(grid.steps()));
  const double h = grid.h();
  for (int n = 1; n <= grid.steps(); ++n) {
    out.push_back(integrate_series(times, samples, grid.time(n - 1),
                                   grid.time(n)) / h);
  }
  return out;
}

std::vector<Mat> average_loads(const std::vector<double>& times,
                               const std::vector<Mat>& zhat_samples,
                               const TimeGrid& grid) {
  return average_series(times, zhat_samples, grid);
}

Regime classify_regime(const MaterialTensors& t, const PotentialSpec& f,
                       const PotentialSpec& g) {
  if (t.hardening == HardeningRegime::PositiveDefinite) {
    return Regime::HardeningPositive;
  }
  if (std::holds_alternative<PowerLaw>(g.family) && f.coercive()) {
    return Regime::CoerciveRemanent;
  }
  return Regime::Unsupported;
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::HardeningPositive:
      return "hardening-positive";
    case Regime::CoerciveRemanent:
      return "coercive-remanent";
    case Regime::Unsupported:
    default:
      return "unsupported";
  }
}

double flow_exponent(const PotentialSpec& g) {
  if (const auto* pl = std::get_if<PowerLaw>(&g.family)) return pl->p;
  return 2.0;
}

SteppedProblem::SteppedProblem(const AssembledSystem& system, PotentialSpec f,
                               PotentialSpec g, TimeGrid grid,
                               double regularization, std::vector<Mat> zhat,
                               StepOptions options)
    : system_(&system),
      f_(std::move(f)),
      g_(std::move(g)),
      grid_(grid),
      rho_(regularization),
      zhat_(std::move(zhat)),
      options_(options) {
  if (!g_.is_flow_potential()) {
    throw UnsupportedFamily("g must be power_law or ball, got " +
                            g_.family_name());
  }
  if (f_.is_flow_potential()) {
    throw UnsupportedFamily("f cannot be " + f_.family_name());
  }
  if (!(rho_ >= 0.0) || !std::isfinite(rho_)) {
    throw InvalidArgument("regularization must be finite and >= 0");
  }
  if (static_cast<int>(zhat_.size()) != grid_.steps()) {
    throw InvalidArgument("one averaged load per step is required");
  }
  for (const auto& z : zhat_) {
    if (z.rows() != system.field_rows() || z.cols() != system.num_cells()) {
      throw InvalidArgument("averaged load has the wrong shape");
    }
  }

  std::mt19937_64 rng(options_.seed);
  std::normal_distribution<double> normal;
  Mat v = system.zero_field();
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    v /= std::sqrt(system.inner(v, v));
    const Mat w = apply_Mm(v);
    lambda = system.inner(w, v);
    v = w;
  }
  lambda_max_ = std::max(lambda, 1e-12);
}

Mat SteppedProblem::apply_ML(const Mat& v) const {
  return system_->apply_M(v) + system_->tensors().L * v;
}

Mat SteppedProblem::apply_Mm(const Mat& v) const {
  return apply_ML(v) + rho_ * v;
}

Mat SteppedProblem::grad_f(const Mat& z) const {
  Mat out(z.rows(), z.cols());
  const InternalLayout lay = layout();
  parallel_for(static_cast<int>(z.cols()), [&](int k) {
    out.col(k) = grad(f_, lay, z.col(k));
  });
  return out;
}

Mat SteppedProblem::prox_f(double lambda, const Mat& v) const {
  Mat out(v.rows(), v.cols());
  const InternalLayout lay = layout();
  parallel_for(static_cast<int>(v.cols()), [&](int k) {
    out.col(k) = prox(f_, lay, lambda, v.col(k));
  });
  return out;
}

double SteppedProblem::integral_f(const Mat& z) const {
  return integral_functional(f_, layout(), z, system_->grid().cell_measures());
}

double step_certificate(const SteppedProblem& problem, const Mat& rate,
                        const Mat& Sigma) {
  const PotentialSpec& g = problem.g();
  const auto* ball = std::get_if<BallIndicator>(&g.family);
  const double feas = problem.options().ball_feasibility;
  const double eps = std::numeric_limits<double>::epsilon();
  double total = 0.0;
  for (Eigen::Index k = 0; k < rate.cols(); ++k) {
    const Vec v = rate.col(k);
    const Vec w = Sigma.col(k);
    const double gw =
        ball ? (w.norm() <= ball->kappa + feas ? 0.0 : kInf) : eval(g, w);
    const double gs = conjugate_eval(g, v);
    const double vw = v.dot(w);
    const double res = gw + gs - vw;
    if (!std::isfinite(res)) return kInf;
    total += std::abs(res) + 64.0 * eps * (std::abs(gw) + gs + std::abs(vw));
  }
  return problem.system().grid().cell_measure() * total;
}

StepResult step(const SteppedProblem& problem, const Mat& z_prev,
                const Mat& zhat, const Mat* initial) {
  const double h = problem.time_grid().h();
  const double gamma = problem.step_size();
  const PotentialSpec& g = problem.g();
  const StepOptions& opt = problem.options();

  if (!std::isfinite(problem.integral_f(z_prev))) {
    throw DomainEscape("previous state lies outside dom(f)");
  }
  Mat u = initial ? *initial : Mat(z_prev + gamma * problem.grad_f(z_prev));
  const double scale = std::max(1.0, max_abs(zhat));
  const int cols = static_cast<int>(z_prev.cols());

  StepResult res;
  double cert = kInf;
  double fp = kInf;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Mat xB = problem.prox_f(gamma, u);
    const Mat MxB = problem.apply_Mm(xB);
    const Mat w = 2.0 * xB - u - gamma * (MxB - zhat);
    Mat xA(w.rows(), w.cols());
    parallel_for(cols, [&](int k) {
      xA.col(k) = z_prev.col(k) +
                  h * conjugate_prox(g, gamma / h,
                                     (w.col(k) - z_prev.col(k)) / h);
    });
    const Mat diff = xA - xB;
    u += diff;
    fp = max_abs(diff) / gamma / scale;
    if (!std::isfinite(fp)) {
      throw DomainEscape("splitting iterates became non-finite");
    }
    if (fp <= opt.fixed_point_tol) {
      Mat Sigma = zhat - MxB - problem.grad_f(xB);
      const Mat rate = (xB - z_prev) / h;
      cert = step_certificate(problem, rate, Sigma);
      if (cert <= opt.step_tol) {
        res.z = xB;
        res.certificate = cert;
        res.fixed_point_residual = fp;
        res.iterations = it;
        if (const auto* ball = std::get_if<BallIndicator>(&g.family)) {
          const double mx = Sigma.cols() ? Sigma.colwise().norm().maxCoeff() : 0.0;
          res.constraint_violation = std::max(mx - ball->kappa, 0.0);
        }
        res.Sigma = std::move(Sigma);
        return res;
      }
    }
  }
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "no certified step after " << opt.max_iterations
     << " iterations (certificate " << cert << ", step_tol " << opt.step_tol
     << ", fixed-point residual " << fp << ")";
  throw StepSolveFailure(os.str());
}

int Trajectory::step_of(double t) const {
  if (t <= 0.0) return 0;
  const int N = steps();
  int n = static_cast<int>(std::ceil(t / grid.h()));
  n = std::clamp(n, 1, N);
  while (n > 1 && grid.time(n - 1) >= t) --n;
  while (n < N && grid.time(n) < t) ++n;
  return n;
}

Mat Trajectory::affine(double t) const {
  const int n = step_of(t);
  if (n == 0) return z.front();
  const double th = std::clamp((t - grid.time(n - 1)) / grid.h(), 0.0, 1.0);
  return (1.0 - th) * z[n - 1] + th * z[n];
}

Mat Trajectory::constant(double t) const {
  return z[step_of(t)];
}

RunResult run(const SteppedProblem& problem, const Mat& z0) {
  const AssembledSystem& sys = problem.system();
  if (z0.rows() != sys.field_rows() || z0.cols() != sys.num_cells()) {
    throw InvalidArgument("initial state has the wrong shape");
  }
  if (!std::isfinite(problem.integral_f(z0))) {
    throw DomainEscape("initial state lies outside dom(f)");
  }
  const TimeGrid& tg = problem.time_grid();
  const int N = tg.steps();
  const PotentialSpec& g = problem.g();
  const Vec measures = sys.grid().cell_measures();

  RunResult out;
  Trajectory& tr = out.trajectory;
  tr.grid = tg;
  tr.z.reserve(static_cast<std::size_t>(N + 1));
  tr.z.push_back(z0);
  tr.zhat.push_back(problem.zhat().front());
  tr.fields.push_back(tr.zhat[0] - sys.apply_M(z0));
  tr.Sigma.push_back(tr.zhat[0] - problem.apply_Mm(z0) - problem.grad_f(z0));
  tr.certificate.push_back(0.0);
  tr.constraint_violation.push_back(0.0);
  tr.iterations.push_back(0);

  for (int n = 1; n <= N; ++n) {
    const Mat& zh = problem.zhat()[static_cast<std::size_t>(n - 1)];
    StepResult r;
    try {
      r = step(problem, tr.z.back(), zh);
    } catch (const StepSolveFailure& e) {
      throw StepSolveFailure("step " + std::to_string(n) + ": " + e.what());
    } catch (const DomainEscape& e) {
      throw DomainEscape("step " + std::to_string(n) + ": " + e.what());
    }
    tr.fields.push_back(zh - sys.apply_M(r.z));
    tr.z.push_back(std::move(r.z));
    tr.Sigma.push_back(std::move(r.Sigma));
    tr.zhat.push_back(zh);
    tr.certificate.push_back(r.certificate);
    tr.constraint_violation.push_back(r.constraint_violation);
    tr.iterations.push_back(r.iterations);
  }

  EnergyLedger& L = out.ledger;
  L.p = flow_exponent(g);
  const double pstar = L.p / (L.p - 1.0);
  const auto* ball = std::get_if<BallIndicator>(&g.family);
  const double rho = problem.regularization();
  for (int n = 0; n <= N; ++n) {
    const Mat& z = tr.z[static_cast<std::size_t>(n)];
    L.quad.push_back(0.5 * sys.inner(problem.apply_ML(z), z));
    L.reg.push_back(0.5 * rho * sys.inner(z, z));
    L.If.push_back(problem.integral_f(z));
    if (n == 0) {
      L.Ig_star.push_back(0.0);
      L.Ig.push_back(0.0);
      L.work.push_back(0.0);
      L.dissipation.push_back(0.0);
      continue;
    }
    const Mat rate = tr.rate(n);
    const Mat& S = tr.Sigma[static_cast<std::size_t>(n)];
    L.Ig_star.push_back(integral_conjugate(g, rate, measures));
    if (ball) {
      const double mx = S.colwise().norm().maxCoeff();
      L.Ig.push_back(mx <= ball->kappa + problem.options().ball_feasibility
                         ? 0.0
                         : kInf);
    } else {
      L.Ig.push_back(integral_functional(g, S, measures));
    }
    L.work.push_back(lp_norm(rate, measures, pstar) *
                     lp_norm(tr.zhat[static_cast<std::size_t>(n)], measures, L.p));
    L.dissipation.push_back(sys.inner(rate, S));
  }
  return out;
}

EnergyReport energy_report(const SteppedProblem& problem,
                           const RunResult& result) {
  const EnergyLedger& L = result.ledger;
  const Trajectory& tr = result.trajectory;
  const AssembledSystem& sys = problem.system();
  const Vec measures = sys.grid().cell_measures();
  const double h = tr.grid.h();
  const int N = tr.steps();
  const double p = L.p;
  const double pstar = p / (p - 1.0);

  EnergyReport rep;
  const double base = L.quad[0] + L.reg[0] + L.If[0];
  double diss = 0.0, work = 0.0;
  double rate_acc = 0.0, rate_energy = 0.0, drive_acc = 0.0;
  rep.min_slack = kInf;
  rep.min_dissipation = N ? kInf : 0.0;
  for (int l = 0; l <= N; ++l) {
    const auto i = static_cast<std::size_t>(l);
    if (l > 0) {
      diss += h * (L.Ig_star[i] + L.Ig[i]);
      work += h * L.work[i];
      rep.min_dissipation = std::min(rep.min_dissipation, L.dissipation[i]);
      rep.max_constraint_violation =
          std::max(rep.max_constraint_violation, tr.constraint_violation[i]);
      const Mat rate = tr.rate(l);
      rate_acc += h * std::pow(lp_norm(rate, measures, pstar), pstar);
      rate_energy += h * sys.inner(problem.apply_ML(rate), rate);
      drive_acc += h * std::pow(lp_norm(tr.Sigma[i], measures, p), p);
    }
    const double lhs = diss + L.quad[i] + L.reg[i] + L.If[i];
    const double rhs = base + work;
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.slack.push_back(rhs - lhs);
    rep.min_slack = std::min(rep.min_slack, rhs - lhs);
    rep.sup_If = std::max(rep.sup_If, L.If[i]);
    rep.sup_z_L2 = std::max(rep.sup_z_L2, lp_norm(tr.z[i], measures, 2.0));
  }
  rep.rate_norm = std::pow(rate_acc, 1.0 / pstar);
  rep.rate_energy = rate_energy;
  rep.driving_norm = std::pow(drive_acc, 1.0 / p);
  return rep;
}

InterpolantCheck interpolant_check(const Trajectory& tr, double cell_measure,
                                   double pstar) {
  InterpolantCheck out;
  const int N = tr.steps();
  const double h = tr.grid.h();
  boost::math::quadrature::tanh_sinh<double> integrator;

  auto gap_density = [&](double t) {
    const Mat d = tr.affine(t) - tr.constant(t);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      acc += std::pow(d.col(k).norm(), pstar);
    }
    return cell_measure * acc;
  };

  double rate_acc = 0.0;
  double affine_sq = 0.0, constant_sq = 0.0;
  auto sq = [&](const Mat& m) { return cell_measure * m.squaredNorm(); };
  for (int n = 1; n <= N; ++n) {
    const double a = tr.grid.time(n - 1);
    const double b = tr.grid.time(n);
    const Mat rate = tr.rate(n);
    double r = 0.0;
    for (Eigen::Index k = 0; k < rate.cols(); ++k) {
      r += std::pow(rate.col(k).norm(), pstar);
    }
    rate_acc += h * cell_measure * r;
    if (r > 0.0) out.gap_quadrature += integrator.integrate(gap_density, a, b, 1e-15);
    // |affine|^2 is quadratic on each step: Simpson is exact.
    const Mat& z0 = tr.z[static_cast<std::size_t>(n - 1)];
    const Mat& z1 = tr.z[static_cast<std::size_t>(n)];
    affine_sq += h / 6.0 * (sq(z0) + 4.0 * sq(0.5 * (z0 + z1)) + sq(z1));
    constant_sq += h * sq(z1);
  }
  // The extended constant interpolant, sampled through its accessor at the
  // midpoint of each interval of (-h, T).
  double extended_sq = 0.0;
  for (int n = 0; n <= N; ++n) {
    extended_sq += h * sq(tr.constant((n - 0.5) * h));
  }
  out.gap_identity = std::pow(h, pstar) / (pstar + 1.0) * rate_acc;
  const double denom = std::max(std::abs(out.gap_identity), 1e-300);
  out.relative_error = out.gap_identity == 0.0 && out.gap_quadrature == 0.0
                           ? 0.0
                           : std::abs(out.gap_quadrature - out.gap_identity) / denom;
  const double z0sq = sq(tr.z.front());
  out.affine_norm = std::sqrt(affine_sq);
  out.extended_constant_norm = std::sqrt(extended_sq);
  out.bound = std::sqrt(h * z0sq + constant_sq);
  const double slack = 1e-12 * std::max(out.bound, 1e-300);
  out.rothe_bound_holds = out.affine_norm <= out.extended_constant_norm + slack &&
                          out.extended_constant_norm <= out.bound + slack;
  return out;
}

}  // namespace ferro
