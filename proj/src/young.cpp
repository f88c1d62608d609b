#include "ferro/young.hpp"

#include "ferro/errors.hpp"
#include "ferro/parallel.hpp"

#include <cmath>
#include <sstream>

namespace ferro {

namespace {

bool bitwise_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

int EmpiricalYoungMeasure::block_of(double t) const {
  const int b = static_cast<int>(std::floor(t / blocks.h()));
  return std::clamp(b, 0, num_blocks() - 1);
}

Vec EmpiricalYoungMeasure::mean(int block, int cell) const {
  const auto i = index(block, cell);
  Vec m = Vec::Zero(rows);
  for (std::size_t k = 0; k < atoms[i].size(); ++k) m += weights[i][k] * atoms[i][k];
  return m;
}

Mat EmpiricalYoungMeasure::first_moment(int block) const {
  Mat out(rows, num_cells);
  for (int c = 0; c < num_cells; ++c) out.col(c) = mean(block, c);
  return out;
}

double EmpiricalYoungMeasure::normalization_error() const {
  double worst = 0.0;
  for (const auto& w : weights) {
    double s = 0.0;
    for (double x : w) s += x;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double EmpiricalYoungMeasure::spread() const {
  double worst = 0.0;
  for (int b = 0; b < num_blocks(); ++b) {
    for (int c = 0; c < num_cells; ++c) {
      const Vec m = mean(b, c);
      for (const Vec& a : atoms[index(b, c)]) worst = std::max(worst, (a - m).norm());
    }
  }
  return worst;
}

EmpiricalYoungMeasure build_measure(const std::vector<const Trajectory*>& runs,
                                    int time_level) {
  if (runs.empty()) throw InvalidArgument("at least one trajectory is required");
  const Trajectory& first = *runs.front();
  EmpiricalYoungMeasure mu;
  mu.blocks = make_time_grid(first.grid.T, time_level);
  mu.rows = static_cast<int>(first.z.front().rows());
  mu.num_cells = static_cast<int>(first.z.front().cols());
  for (const Trajectory* tr : runs) {
    if (tr->grid.T != first.grid.T) {
      throw MismatchedScenario("trajectories have different horizons");
    }
    if (tr->z.front().rows() != mu.rows || tr->z.front().cols() != mu.num_cells) {
      throw MismatchedScenario("trajectories have different spatial shapes");
    }
    if (tr->grid.level < time_level) {
      throw MismatchedScenario("trajectory at level " + std::to_string(tr->grid.level) +
                               " is coarser than the partition level " +
                               std::to_string(time_level));
    }
  }
  const std::size_t cells = static_cast<std::size_t>(mu.num_blocks() * mu.num_cells);
  mu.atoms.assign(cells, {});
  mu.weights.assign(cells, {});
  // Cell volumes enter every weight of a partition cell identically and
  // cancel in the normalization; only the time weight h_m remains.
  for (const Trajectory* tr : runs) {
    const int per_block = 1 << (tr->grid.level - time_level);
    const double h = tr->grid.h();
    for (int n = 1; n <= tr->steps(); ++n) {
      const int b = (n - 1) / per_block;
      const Mat& z = tr->z[static_cast<std::size_t>(n)];
      for (int c = 0; c < mu.num_cells; ++c) {
        const auto i = mu.index(b, c);
        auto& at = mu.atoms[i];
        auto& w = mu.weights[i];
        const Vec v = z.col(c);
        std::size_t k = 0;
        while (k < at.size() && !bitwise_equal(at[k], v)) ++k;
        if (k == at.size()) {
          if (!v.allFinite()) throw MismatchedScenario("non-finite trajectory value");
          at.push_back(v);
          w.push_back(0.0);
        }
        w[k] += h;
      }
    }
  }
  for (auto& w : mu.weights) {
    double s = 0.0;
    for (double x : w) s += x;
    for (double& x : w) x /= s;
  }
  return mu;
}

std::vector<Mat> eval_F(const EmpiricalYoungMeasure& measure,
                        const PotentialSpec& f, const InternalLayout& layout) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(measure.num_blocks()));
  for (int b = 0; b < measure.num_blocks(); ++b) {
    Mat F = Mat::Zero(measure.rows, measure.num_cells);
    int bad_cell = -1;
    Vec bad;
    for (int c = 0; c < measure.num_cells; ++c) {
      const auto i = measure.index(b, c);
      for (std::size_t k = 0; k < measure.atoms[i].size(); ++k) {
        const Vec& a = measure.atoms[i][k];
        if (!std::isfinite(eval(f, layout, a))) {
          if (bad_cell < 0 || a.norm() > bad.norm()) bad_cell = c, bad = a;
          continue;
        }
        F.col(c) += measure.weights[i][k] * grad(f, layout, a);
      }
    }
    if (bad_cell >= 0) {
      std::ostringstream os;
      os.precision(17);
      os << "atom (" << bad.transpose() << ") in block " << b << ", cell "
         << bad_cell << " lies outside dom(f)";
      throw AtomOutsideDomain(os.str());
    }
    out.push_back(std::move(F));
  }
  return out;
}

MVSResidualReport mvs_residual(const SteppedProblem& finest,
                               const Trajectory& tr,
                               const EmpiricalYoungMeasure& measure,
                               const std::vector<double>& checkpoints,
                               double tol_mvs) {
  const AssembledSystem& sys = finest.system();
  const PotentialSpec& f = finest.f();
  const PotentialSpec& g = finest.g();
  const InternalLayout lay = finest.layout();
  const Vec measures = sys.grid().cell_measures();
  const int N = tr.steps();
  const int cells = sys.num_cells();
  const double h = tr.grid.h();
  if (measure.num_cells != cells || measure.blocks.T != tr.grid.T) {
    throw MismatchedScenario("measure and trajectory do not share a scenario");
  }

  MVSResidualReport rep;
  rep.F = eval_F(measure, f, lay);
  rep.regime = classify_regime(sys.tensors(), f, g);
  rep.hardening_positive = sys.tensors().hardening == HardeningRegime::PositiveDefinite;
  rep.coercive_f = f.coercive();
  rep.tolerance = tol_mvs * tr.grid.T * sys.grid().volume();
  for (int b = 0; b < measure.num_blocks(); ++b) {
    const Mat gm = finest.grad_f(measure.first_moment(b));
    rep.F_mismatch = std::max(rep.F_mismatch, (rep.F[static_cast<std::size_t>(b)] - gm)
                                                  .colwise().norm().maxCoeff());
  }

  // Per step and cell: g*(rate) + g(Sigma_F) and <rate, fields - grad f - L z>.
  const auto* ball = std::get_if<BallIndicator>(&g.family);
  Mat left(cells, N), right(cells, N);
  for (int n = 1; n <= N; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const Mat rate = tr.rate(n);
    const Mat Lz = finest.apply_Mm(tr.z[i]) - sys.apply_M(tr.z[i]);
    const Mat shifted = tr.fields[i] - Lz;
    const Mat& F = rep.F[static_cast<std::size_t>(measure.block_of(tr.grid.time(n) - 0.5 * h))];
    const Mat gf = finest.grad_f(tr.z[i]);
    for (int c = 0; c < cells; ++c) {
      const Vec arg = shifted.col(c) - F.col(c);
      double gval;
      if (ball) {
        const double excess = arg.norm() - ball->kappa;
        rep.constraint_violation = std::max(rep.constraint_violation, std::max(excess, 0.0));
        gval = excess <= finest.options().ball_feasibility ? 0.0 : kInf;
      } else {
        gval = eval(g, arg);
      }
      left(c, n - 1) = conjugate_eval(g, rate.col(c)) + gval;
      right(c, n - 1) = rate.col(c).dot(shifted.col(c) - gf.col(c));
    }
  }

  rep.min_slack = kInf;
  for (double t : checkpoints) {
    MVSCheckpoint cp;
    cp.t = std::clamp(t, 0.0, tr.grid.T);
    // Time integral per cell first, then space.
    for (int c = 0; c < cells; ++c) {
      double l = 0.0, r = 0.0;
      for (int n = 1; n <= N; ++n) {
        const double w = std::clamp(cp.t - tr.grid.time(n - 1), 0.0, h);
        if (w == 0.0) break;
        l += w * left(c, n - 1);
        r += w * right(c, n - 1);
      }
      cp.lhs += measures(c) * l;
      cp.rhs += measures(c) * r;
    }
    cp.slack = cp.rhs - cp.lhs;
    if (std::isnan(cp.slack)) cp.slack = -kInf;
    rep.min_slack = std::min(rep.min_slack, cp.slack);
    rep.checkpoints.push_back(cp);
  }
  if (checkpoints.empty()) rep.min_slack = 0.0;
  rep.holds = rep.min_slack >= -rep.tolerance;
  return rep;
}

double level_difference(const Trajectory& fine, const Trajectory& coarse,
                        const Vec& cell_measures) {
  if (fine.grid.T != coarse.grid.T || fine.grid.level <= coarse.grid.level) {
    throw MismatchedScenario("level difference needs nested trajectories");
  }
  const int ratio = 1 << (fine.grid.level - coarse.grid.level);
  const double h = fine.grid.h();
  double acc = 0.0;
  for (int n = 1; n <= fine.steps(); ++n) {
    const int nc = (n - 1) / ratio + 1;
    const Mat d = fine.z[static_cast<std::size_t>(n)] - coarse.z[static_cast<std::size_t>(nc)];
    acc += h * (d.colwise().squaredNorm().transpose().array() * cell_measures.array()).sum();
  }
  return std::sqrt(acc);
}

ConvergenceReport convergence_study(const std::vector<LevelRun>& runs,
                                    double tol_mvs,
                                    std::vector<double> checkpoints) {
  if (runs.empty()) throw InvalidArgument("no runs");
  ConvergenceReport rep;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Trajectory& tr = runs[i].result->trajectory;
    rep.levels.push_back(tr.grid.level);
    if (i > 0 && tr.grid.level != rep.levels[i - 1] + 1) {
      throw MismatchedScenario("levels must be consecutive");
    }
    rep.energy.push_back(energy_report(*runs[i].problem, *runs[i].result));
  }
  const LevelRun& last = runs.back();
  const PotentialSpec& f = last.problem->f();
  const InternalLayout lay = last.problem->layout();
  const Vec measures = last.problem->system().grid().cell_measures();
  EmpiricalYoungMeasure& tail = rep.tail;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const Trajectory& a = runs[i].result->trajectory;
    const Trajectory& b = runs[i + 1].result->trajectory;
    WindowStats w;
    w.level = a.grid.level;
    w.level_difference = level_difference(b, a, measures);
    EmpiricalYoungMeasure mu = build_measure({&a, &b}, a.grid.level);
    w.spread = mu.spread();
    const auto F = eval_F(mu, f, lay);
    for (int k = 0; k < mu.num_blocks(); ++k) {
      const Mat gm = last.problem->grad_f(mu.first_moment(k));
      w.F_mismatch = std::max(
          w.F_mismatch, (F[static_cast<std::size_t>(k)] - gm).colwise().norm().maxCoeff());
    }
    rep.windows.push_back(w);
    if (i + 2 == runs.size()) tail = std::move(mu);
  }
  for (std::size_t i = 0; i + 1 < rep.windows.size(); ++i) {
    const double d0 = rep.windows[i].level_difference;
    rep.cauchy_ratios.push_back(d0 > 0.0 ? rep.windows[i + 1].level_difference / d0 : 0.0);
  }
  rep.spread_monotone = true;
  for (std::size_t i = 0; i + 1 < rep.windows.size(); ++i) {
    const double a = rep.windows[i].spread, b = rep.windows[i + 1].spread;
    if (!(b < a || (a == 0.0 && b == 0.0))) rep.spread_monotone = false;
  }
  const Trajectory& fine = last.result->trajectory;
  if (tail.atoms.empty()) tail = build_measure({&fine}, fine.grid.level);
  if (checkpoints.empty()) {
    for (int k = 1; k <= tail.num_blocks(); ++k) checkpoints.push_back(tail.blocks.time(k));
  }
  rep.mvs = mvs_residual(*last.problem, fine, tail, checkpoints, tol_mvs);
  return rep;
}

}  // namespace ferro
