#pragma once

// CSV and legacy-VTK writers. Every CSV starts with a `# ferrosolve <kind> v1`
// line; numbers are printed with %.17g so identical runs give identical bytes.

#include "ferro/rothe.hpp"
#include "ferro/young.hpp"

#include <string>

namespace ferro {

/// level,step,time,cell,r_*,P_*,sigma_*,E_*,certificate
void write_trajectory_csv(const std::string& path, const Trajectory& tr);

/// level,step,time,Ig_star,Ig,quad,reg,If,work,dissipation,lhs,rhs,slack
void write_energy_csv(const std::string& path, const RunResult& run,
                      const EnergyReport& report);

/// Two-column key,value table.
void write_key_values(const std::string& path, const std::string& kind,
                      const std::vector<std::pair<std::string, std::string>>& rows);

/// Structured-grid snapshot: nodal u and phi, box averages of r, P, sigma
/// and E (each box holds d! simplices of equal measure).
void write_vtk_snapshot(const std::string& path, const Grid& grid,
                        const FieldState& fields, const Mat& z,
                        const std::string& title);

/// level,level_difference,spread,F_mismatch,cauchy_ratio,min_energy_slack,...
void write_convergence_csv(const std::string& path,
                           const ConvergenceReport& report);

/// t,lhs,rhs,slack
void write_mvs_csv(const std::string& path, const MVSResidualReport& report);

/// block,cell,atom,weight,z_*
void write_atoms_csv(const std::string& path,
                     const EmpiricalYoungMeasure& measure);

std::string format_double(double x);

}  // namespace ferro
