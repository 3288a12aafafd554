#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "platelab/material/plate.hpp"
#include "platelab/plate_solver/couple.hpp"
#include "platelab/plate_solver/plate_grid.hpp"

namespace platelab::plate_solver {

using SparseMatrix = Eigen::SparseMatrix<double>;

// c0 + c1 x1 + c2 x2
struct Affine {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  double operator()(const Vec2& x) const { return c[0] + c[1] * x.x() + c[2] * x.y(); }
};

// Discrete bilinear form on the unknowns and the clamping constraints
// C w = 0: rows 2p and 2p+1 are w and h dw/dn at the p-th point of the
// boundary of D (bicubic interpolation).
struct PlateSystem {
  std::shared_ptr<const PlateGrid> grid;
  SparseMatrix K;
  SparseMatrix C;
  std::vector<Vec2> constraint_points;
};

PlateSystem assemble_system(std::shared_ptr<const PlateGrid> grid, const material::IsotropicPlate& plate);

// L(v) = int ((m_tau)_s v - m_n dv/dn) ds on the unknowns.
Eigen::VectorXd assemble_load(const PlateGrid& grid, const CoupleField& couple);

struct SolverOptions {
  double relative_tolerance = 1e-10;
  double constraint_tolerance = 1e-12;
  double constraint_penalty = 1e3;  // augmented Lagrangian weight relative to max diag K
  int max_constraint_iterations = 200;
  int max_iterations = 50000;
  bool direct = true;  // sparse Cholesky first, conjugate gradients as fallback
  double compatibility_tolerance = 1e-8;
};

struct SolveInfo {
  std::string method;
  int iterations = 0;
  double tolerance = 0.0;
  double relative_residual = 0.0;
  double backward_error = 0.0;  // |r| / (|A| |x| + |b|), infinity norms
  double compatibility = 0.0;  // max_k |L(a_k)| / (|f| |a_k|) over affine a_k; 0 with an inclusion
  bool gauge_fixed = false;
  int constraint_iterations = 0;  // augmented Lagrangian updates
  double constraint_violation = 0.0;  // max |C w| / max |w|
};

class DiscreteSolution {
 public:
  std::shared_ptr<const PlateGrid> grid;
  std::vector<double> w;  // per node; NaN at inactive nodes
  SolveInfo info;
  Affine gauge;                // affine part added to the Dirichlet-form field
  double stored_energy = 0.0;  // a(w, w) / 2
  double boundary_work = 0.0;  // L(w)
  Eigen::VectorXd multipliers;  // clamping reactions, one per row of C

  double node(int i, int j) const { return w[grid->spec.index(i, j)]; }
  // Bicubic interpolation.
  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  // Second differences at a node; NaN when a stencil node is inactive.
  material::Mat2 node_hessian(int i, int j) const;
  Vec2 node_gradient(int i, int j) const;
  // Bilinear interpolation of node_hessian.
  material::Mat2 hessian(const Vec2& x) const;
  // Derivative along the outward normal of Omega at boundary fraction f,
  // one-sided along the inward normal.
  double normal_derivative(double fraction) const;
  // Add an affine function at every non-inactive node.
  void add_affine(const Affine& a);
};

// Unique solution with w = dw/dn = 0 on the boundary of D. Without an
// inclusion the data must be compatible; the result is gauge-fixed to be
// L2-orthogonal to affine functions on Omega.
DiscreteSolution solve_dirichlet_form(std::shared_ptr<const PlateGrid> grid, const material::IsotropicPlate& plate,
                                      const CoupleField& couple, const SolverOptions& options = {});

struct RigidSolution {
  DiscreteSolution solution;      // w_rigid; equals the gauge on D
  DiscreteSolution dirichlet;     // w_dir
  Affine gauge;                   // g
  std::array<double, 3> equilibrium{0.0, 0.0, 0.0};  // clamping reaction tested against 1, x1, x2
  double energy_scale = 0.0;      // a(w, w)
  double consistency = 0.0;       // max |(w_rigid - g) - w_dir|
  bool equilibrium_ok(double tolerance = 1e-6) const;
};

// Rigid-inclusion form: w_dir plus the affine g that makes w L2-orthogonal
// to affine functions on Omega \ closure(D).
RigidSolution solve_rigid_form(std::shared_ptr<const PlateGrid> grid, const material::IsotropicPlate& plate,
                               const CoupleField& couple, const SolverOptions& options = {});

// Weighted L2 projection onto affine functions over a region.
Affine affine_projection(const DiscreteSolution& solution, const RegionMask& region);

// int_region P hess w : hess w and int_region |hess w|^2 (not square-rooted),
// quadrature at dual-cell centroids.
double energy(const DiscreteSolution& solution, const material::IsotropicPlate& plate, const RegionMask& region);
double hessian_l2(const DiscreteSolution& solution, const RegionMask& region);
// (int_region w^2 / r0^4 + |grad w|^2 / r0^2 + |hess w|^2)^(1/2)
double h2_norm(const DiscreteSolution& solution, const RegionMask& region);

struct EnergyEstimate {
  double resolution = 0.0;
  double h2_norm = 0.0;
  double surrogate = 0.0;
  double ratio = 0.0;
};

struct EnergyEstimateReport {
  std::vector<EnergyEstimate> levels;
  double bound = 1e4;
  bool bounded = false;  // all ratios <= bound
  bool stable = false;   // last two ratios within 10%
  bool passed() const { return bounded && stable; }
};

// ||w||_H2 / (r0^2 surrogate(couple)) for one solution.
EnergyEstimate verify_energy_estimate(const DiscreteSolution& solution, const CoupleField& couple);
EnergyEstimateReport verify_energy_estimate(const std::vector<EnergyEstimate>& levels, double bound = 1e4);

// CSV of node values with a JSON header line (starting with '#').
void write_solution(const DiscreteSolution& solution, const std::filesystem::path& path);

}  // namespace platelab::plate_solver
