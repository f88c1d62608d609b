#include "ferro/cli.hpp"

#include "ferro/errors.hpp"
#include "ferro/output.hpp"
#include "ferro/young.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>

namespace ferro {

namespace {

namespace fs = std::filesystem;

std::string path_in(const CliOptions& opt, const std::string& name) {
  return (fs::path(opt.out_dir) / name).string();
}

std::string growth_text(const GrowthConstants& g) {
  std::ostringstream os;
  auto put = [&](const char* name, const std::optional<double>& v) {
    if (v) os << ' ' << name << '=' << format_double(*v);
  };
  put("c1", g.c1);
  put("c2", g.c2);
  put("c3", g.c3);
  put("c4", g.c4);
  put("d1", g.d1);
  put("d2", g.d2);
  put("a1", g.a1);
  put("a2", g.a2);
  put("b1", g.b1);
  put("b2", g.b2);
  const std::string s = os.str();
  return s.empty() ? " (none)" : s;
}

/// Prints the warning; returns false when the run must stop.
bool gate(const Model& model, const CliOptions& opt, std::ostream& err) {
  const auto warning =
      applicability_warning(model.system().tensors(), model.f(), model.g());
  if (!warning) return true;
  err << "warning: " << *warning << '\n';
  if (opt.override_coercivity) {
    err << "warning: proceeding because --override-coercivity was given\n";
    return true;
  }
  err << "error: refusing to continue without --override-coercivity\n";
  return false;
}

std::vector<std::pair<std::string, std::string>> run_summary(
    const Model& model, const SteppedProblem& prob, const RunResult& res,
    const EnergyReport& rep, const InterpolantCheck& ic) {
  const Trajectory& tr = res.trajectory;
  double max_cert = 0.0;
  long long iters = 0;
  for (int n = 1; n <= tr.steps(); ++n) {
    max_cert = std::max(max_cert, tr.certificate[static_cast<std::size_t>(n)]);
    iters += tr.iterations[static_cast<std::size_t>(n)];
  }
  const Scenario& s = model.scenario();
  const bool cert_ok = max_cert <= s.tol.step;
  const bool energy_ok = rep.min_slack >= -s.tol.energy;
  return {
      {"level", std::to_string(tr.grid.level)},
      {"steps", std::to_string(tr.steps())},
      {"h", format_double(tr.grid.h())},
      {"regularization", format_double(prob.regularization())},
      {"regime", regime_name(classify_regime(model.system().tensors(), model.f(), model.g()))},
      {"max_certificate", format_double(max_cert)},
      {"step_tol", format_double(s.tol.step)},
      {"certificates_pass", cert_ok ? "true" : "false"},
      {"min_energy_slack", format_double(rep.min_slack)},
      {"tol_energy", format_double(s.tol.energy)},
      {"energy_pass", energy_ok ? "true" : "false"},
      {"min_dissipation", format_double(rep.min_dissipation)},
      {"max_constraint_violation", format_double(rep.max_constraint_violation)},
      {"interpolant_relative_error", format_double(ic.relative_error)},
      {"rothe_bound_holds", ic.rothe_bound_holds ? "true" : "false"},
      {"total_iterations", std::to_string(iters)},
  };
}

void print_rows(std::ostream& out,
                const std::vector<std::pair<std::string, std::string>>& rows) {
  for (const auto& [k, v] : rows) out << k << ": " << v << '\n';
}

/// Snapshot steps: 0, the final step, and the step holding each checkpoint.
std::vector<int> snapshot_steps(const Scenario& s, const Trajectory& tr) {
  std::vector<int> out{0, tr.steps()};
  for (double t : s.checkpoints) out.push_back(tr.step_of(t));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_snapshots(const Model& model, const Trajectory& tr,
                     const CliOptions& opt) {
  const auto loads = model.averaged_loads(tr.grid);
  for (int n : snapshot_steps(model.scenario(), tr)) {
    const auto& [b, q] = loads[static_cast<std::size_t>(std::max(n, 1) - 1)];
    const Mat& z = tr.z[static_cast<std::size_t>(n)];
    const FieldState fsol = model.system().solve(z, b, q);
    char name[64];
    std::snprintf(name, sizeof name, "fields_m%d_n%06d.vtk", tr.grid.level, n);
    write_vtk_snapshot(path_in(opt, name), model.system().grid(), fsol, z,
                       "ferrosolve level " + std::to_string(tr.grid.level) + " step " +
                           std::to_string(n) + " t " + format_double(tr.grid.time(n)));
  }
}

}  // namespace

std::pair<int, int> parse_level_range(const std::string& text) {
  auto to_level = [&](const std::string& s) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) {
      throw ValidationError({"--levels: expected 'm0..m1', got '" + text + "'"});
    }
    return v;
  };
  const auto dots = text.find("..");
  const int lo = to_level(dots == std::string::npos ? text : text.substr(0, dots));
  const int hi = dots == std::string::npos ? lo : to_level(text.substr(dots + 2));
  std::vector<std::string> v;
  if (lo < 0 || hi > 24) v.push_back("--levels must lie in 0..24");
  if (lo > hi) v.push_back("--levels must satisfy m0 <= m1 (non-nesting levels " + text + ")");
  if (!v.empty()) throw ValidationError(v);
  return {lo, hi};
}

std::optional<std::string> applicability_warning(const MaterialTensors& t,
                                                 const PotentialSpec& f,
                                                 const PotentialSpec& g) {
  const Regime r = classify_regime(t, f, g);
  if (r != Regime::Unsupported) return std::nullopt;
  if (!f.coercive()) {
    std::ostringstream os;
    os << "f (" << f.family_name() << ") violates the coercivity growth condition "
       << "and L is not positive definite; the existence theorem for L = 0 "
       << "can not be applied to this f";
    const double a1 = 0.5, a2 = 1.0;
    if (f.polarization_only()) {
      if (const auto w = coercivity_witness(f, a1, a2)) {
        os << " (witness P = [" << w->transpose() << "] gives f(P) = "
           << format_double(eval(f, *w)) << " < " << a1 << "|P|^2 - " << a2 << " = "
           << format_double(a1 * w->squaredNorm() - a2) << ")";
      }
    }
    return os.str();
  }
  return "g = " + g.family_name() +
         " with L not positive definite is outside both existence theorems "
         "(L = 0 requires a power-law g)";
}

int exit_code_for(const Error& e) {
  const std::string& k = e.kind();
  if (k == "StepSolveFailure" || k == "DomainEscape" || k == "NoConvergence" ||
      k == "LinearSolveFailure" || k == "SingularSystem" || k == "AtomOutsideDomain") {
    return kExitSolverFailure;
  }
  return kExitValidationFailure;
}

int cmd_check(const Scenario& s, const CliOptions& opt, std::ostream& out,
              std::ostream& err) {
  const Model model(s);
  const MaterialTensors& t = model.system().tensors();
  const auto A = assemble_block_A(t);
  const auto D = assemble_block_D(t);
  out << "dim: " << s.dim << '\n';
  out << "cells: " << model.system().num_cells() << '\n';
  out << "dofs: " << model.system().num_dofs() << '\n';
  out << "c0: " << format_double(A.c0) << '\n';
  out << "lambda_min_D: " << format_double(D.lambda_min) << '\n';
  out << "lambda_max_D: " << format_double(D.lambda_max) << '\n';
  const char* hard = t.hardening == HardeningRegime::Zero             ? "zero"
                     : t.hardening == HardeningRegime::SemiDefinite   ? "semi-definite"
                                                                      : "positive-definite";
  out << "hardening: " << hard << '\n';
  out << "f: " << model.f().family_name() << growth_text(model.f().growth) << '\n';
  out << "g: " << model.g().family_name() << growth_text(model.g().growth) << '\n';
  out << "f_coercive: " << (model.f().coercive() ? "true" : "false") << '\n';
  out << "regime: " << regime_name(classify_regime(t, model.f(), model.g())) << '\n';
  return gate(model, opt, err) ? kExitOk : kExitValidationFailure;
}

int cmd_run(const Scenario& s, const CliOptions& opt, std::ostream& out,
            std::ostream& err) {
  const Model model(s);
  if (!gate(model, opt, err)) return kExitValidationFailure;
  const int level = opt.level.value_or(s.level);
  if (level < 0 || level > 24) throw ValidationError({"--level must lie in 0..24"});
  fs::create_directories(opt.out_dir);
  const SteppedProblem prob = model.problem(level);
  const RunResult res = run(prob, model.initial_state());
  const EnergyReport rep = energy_report(prob, res);
  const double pstar = res.ledger.p / (res.ledger.p - 1.0);
  const InterpolantCheck ic =
      interpolant_check(res.trajectory, model.system().grid().cell_measure(), pstar);
  write_trajectory_csv(path_in(opt, "trajectory.csv"), res.trajectory);
  write_energy_csv(path_in(opt, "energy.csv"), res, rep);
  const auto rows = run_summary(model, prob, res, rep, ic);
  write_key_values(path_in(opt, "summary.csv"), "summary", rows);
  write_snapshots(model, res.trajectory, opt);
  print_rows(out, rows);
  return rows[7].second == "true" ? kExitOk : kExitSolverFailure;
}

int cmd_converge(const Scenario& s, const CliOptions& opt, std::ostream& out,
                 std::ostream& err) {
  const Model model(s);
  if (!gate(model, opt, err)) return kExitValidationFailure;
  const auto [m0, m1] = opt.levels.value_or(std::pair{s.level_min, s.level_max});
  if (m0 > m1 || m0 < 0 || m1 > 24) {
    throw ValidationError({"levels must satisfy 0 <= m0 <= m1 <= 24"});
  }
  fs::create_directories(opt.out_dir);
  std::vector<SteppedProblem> probs;
  std::vector<RunResult> results;
  probs.reserve(static_cast<std::size_t>(m1 - m0 + 1));
  results.reserve(static_cast<std::size_t>(m1 - m0 + 1));
  std::vector<LevelRun> runs;
  bool cert_ok = true;
  for (int m = m0; m <= m1; ++m) {
    probs.push_back(model.problem(m));
    results.push_back(run(probs.back(), model.initial_state()));
    runs.push_back({&probs.back(), &results.back()});
    const auto& tr = results.back().trajectory;
    for (int n = 1; n <= tr.steps(); ++n) {
      cert_ok = cert_ok && tr.certificate[static_cast<std::size_t>(n)] <= s.tol.step;
    }
    const std::string suffix = "_m" + std::to_string(m) + ".csv";
    write_trajectory_csv(path_in(opt, "trajectory" + suffix), tr);
    write_energy_csv(path_in(opt, "energy" + suffix), results.back(),
                     energy_report(probs.back(), results.back()));
  }
  const ConvergenceReport rep = convergence_study(runs, s.tol.mvs, s.checkpoints);
  write_convergence_csv(path_in(opt, "convergence.csv"), rep);
  write_mvs_csv(path_in(opt, "mvs.csv"), rep.mvs);
  write_atoms_csv(path_in(opt, "atoms.csv"), rep.tail);
  double min_energy = kInf;
  for (const auto& e : rep.energy) min_energy = std::min(min_energy, e.min_slack);
  const std::vector<std::pair<std::string, std::string>> rows{
      {"levels", std::to_string(m0) + ".." + std::to_string(m1)},
      {"certificates_pass", cert_ok ? "true" : "false"},
      {"min_energy_slack", format_double(min_energy)},
      {"spread_monotone", rep.spread_monotone ? "true" : "false"},
      {"final_spread", rep.windows.empty() ? "0" : format_double(rep.windows.back().spread)},
      {"final_level_difference",
       rep.windows.empty() ? "0" : format_double(rep.windows.back().level_difference)},
      {"F_mismatch", format_double(rep.mvs.F_mismatch)},
      {"mvs_min_slack", format_double(rep.mvs.min_slack)},
      {"mvs_tolerance", format_double(rep.mvs.tolerance)},
      {"mvs_holds", rep.mvs.holds ? "true" : "false"},
      {"mvs_constraint_violation", format_double(rep.mvs.constraint_violation)},
      {"regime", regime_name(rep.mvs.regime)},
  };
  write_key_values(path_in(opt, "summary.csv"), "summary", rows);
  print_rows(out, rows);
  return cert_ok ? kExitOk : kExitSolverFailure;
}

int run_cli(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Scenario s = load_scenario(opt.scenario_path);
    if (opt.command == "run") return cmd_run(s, opt, out, err);
    if (opt.command == "converge") return cmd_converge(s, opt, out, err);
    if (opt.command == "check") return cmd_check(s, opt, out, err);
    err << "unknown command '" << opt.command << "'\n";
    return kExitValidationFailure;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

}  // namespace ferro
