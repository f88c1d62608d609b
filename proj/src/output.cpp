#include "ferro/output.hpp"

#include "ferro/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ferro {

namespace {

std::ofstream open(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  return out;
}

std::string names(const std::string& prefix, int count) {
  std::string out;
  for (int i = 1; i <= count; ++i) out += "," + prefix + "_" + std::to_string(i);
  return out;
}

int dim_from_rows(int rows) {
  for (int d = 1; d <= 3; ++d) {
    if (sym_size(d) + d == rows) return d;
  }
  throw InvalidArgument("unexpected internal-variable size");
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  auto out = open(path);
  const int rows = static_cast<int>(tr.z.front().rows());
  const int d = dim_from_rows(rows);
  const int s = sym_size(d);
  out << "# ferrosolve trajectory v1\n";
  out << "level,step,time,cell" << names("r", s) << names("P", d) << names("sigma", s)
      << names("E", d) << ",certificate\n";
  for (int n = 0; n <= tr.steps(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const Mat& z = tr.z[i];
    const Mat& f = tr.fields[i];
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      out << tr.grid.level << ',' << n << ',' << format_double(tr.grid.time(n)) << ',' << c;
      for (int k = 0; k < rows; ++k) out << ',' << format_double(z(k, c));
      for (int k = 0; k < rows; ++k) out << ',' << format_double(f(k, c));
      out << ',' << format_double(tr.certificate[i]) << '\n';
    }
  }
}

void write_energy_csv(const std::string& path, const RunResult& run,
                      const EnergyReport& report) {
  auto out = open(path);
  const EnergyLedger& L = run.ledger;
  const Trajectory& tr = run.trajectory;
  out << "# ferrosolve energy v1\n";
  out << "level,step,time,Ig_star,Ig,quad,reg,If,work,dissipation,lhs,rhs,slack\n";
  for (int n = 0; n <= tr.steps(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    out << tr.grid.level << ',' << n << ',' << format_double(tr.grid.time(n));
    for (double v : {L.Ig_star[i], L.Ig[i], L.quad[i], L.reg[i], L.If[i], L.work[i],
                     L.dissipation[i], report.lhs[i], report.rhs[i], report.slack[i]}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

void write_key_values(const std::string& path, const std::string& kind,
                      const std::vector<std::pair<std::string, std::string>>& rows) {
  auto out = open(path);
  out << "# ferrosolve " << kind << " v1\nkey,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

void write_vtk_snapshot(const std::string& path, const Grid& grid,
                        const FieldState& fields, const Mat& z,
                        const std::string& title) {
  auto out = open(path);
  const int d = grid.dim();
  const int s = sym_size(d);
  int dims[3] = {1, 1, 1};
  for (int a = 0; a < d; ++a) dims[a] = grid.cells_along(a) + 1;
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << dims[0] << ' ' << dims[1] << ' ' << dims[2] << '\n';
  out << "POINTS " << grid.num_nodes() << " double\n";
  for (int k = 0; k < grid.num_nodes(); ++k) {
    const Vec x = grid.node_coords(k);
    for (int a = 0; a < 3; ++a) out << (a ? " " : "") << format_double(a < d ? x(a) : 0.0);
    out << '\n';
  }
  out << "POINT_DATA " << grid.num_nodes() << '\n';
  out << "VECTORS u double\n";
  for (int k = 0; k < grid.num_nodes(); ++k) {
    for (int a = 0; a < 3; ++a) {
      out << (a ? " " : "") << format_double(a < d ? fields.u(a, k) : 0.0);
    }
    out << '\n';
  }
  out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < grid.num_nodes(); ++k) out << format_double(fields.phi(k)) << '\n';

  const int per = grid.simplices_per_box();
  auto box_average = [&](const Mat& m, int row0, int rows) {
    Mat avg = Mat::Zero(rows, grid.num_boxes());
    for (int c = 0; c < grid.num_cells(); ++c) {
      avg.col(grid.box_of(c)) += m.block(row0, c, rows, 1) / per;
    }
    return avg;
  };
  const std::vector<std::pair<std::string, Mat>> blocks{
      {"r", box_average(z, 0, s)},
      {"P", box_average(z, s, d)},
      {"sigma", box_average(fields.sigma, 0, s)},
      {"E", box_average(fields.E, 0, d)},
  };
  out << "CELL_DATA " << grid.num_boxes() << '\n';
  out << "FIELD cell_fields " << blocks.size() << '\n';
  for (const auto& [name, m] : blocks) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << " double\n";
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out << (r ? " " : "") << format_double(m(r, b));
      }
      out << '\n';
    }
  }
}

void write_convergence_csv(const std::string& path,
                           const ConvergenceReport& report) {
  auto out = open(path);
  out << "# ferrosolve convergence v1\n";
  out << "level,level_difference,spread,F_mismatch,cauchy_ratio,min_energy_slack,"
         "min_dissipation,sup_If,sup_z_L2,rate_norm,rate_energy,driving_norm\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const EnergyReport& e = report.energy[i];
    out << report.levels[i];
    if (i < report.windows.size()) {
      const WindowStats& w = report.windows[i];
      out << ',' << format_double(w.level_difference) << ',' << format_double(w.spread)
          << ',' << format_double(w.F_mismatch);
    } else {
      out << ",,,";
    }
    out << ',';
    if (i > 0 && i <= report.cauchy_ratios.size()) out << format_double(report.cauchy_ratios[i - 1]);
    for (double v : {e.min_slack, e.min_dissipation, e.sup_If, e.sup_z_L2, e.rate_norm,
                     e.rate_energy, e.driving_norm}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

void write_mvs_csv(const std::string& path, const MVSResidualReport& report) {
  auto out = open(path);
  out << "# ferrosolve mvs v1\nt,lhs,rhs,slack\n";
  for (const auto& cp : report.checkpoints) {
    out << format_double(cp.t) << ',' << format_double(cp.lhs) << ','
        << format_double(cp.rhs) << ',' << format_double(cp.slack) << '\n';
  }
}

void write_atoms_csv(const std::string& path, const EmpiricalYoungMeasure& mu) {
  auto out = open(path);
  out << "# ferrosolve atoms v1\nblock,cell,atom,weight" << names("z", mu.rows) << '\n';
  for (int b = 0; b < mu.num_blocks(); ++b) {
    for (int c = 0; c < mu.num_cells; ++c) {
      const auto i = mu.index(b, c);
      for (std::size_t k = 0; k < mu.atoms[i].size(); ++k) {
        out << b << ',' << c << ',' << k << ',' << format_double(mu.weights[i][k]);
        for (int r = 0; r < mu.rows; ++r) out << ',' << format_double(mu.atoms[i][k](r));
        out << '\n';
      }
    }
  }
}

}  // namespace ferro
