#include "platelab/plate_solver/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <fstream>
#include <limits>
#include "json.hpp"

#ifdef PLATELAB_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include "platelab/core/errors.hpp"
#include "platelab/core/fourier.hpp"
#include "platelab/core/keyvalue.hpp"

namespace platelab::plate_solver {

using material::Mat2;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Cubic Lagrange weights on nodes -1, 0, 1, 2 and their derivatives.
void lagrange(double t, double L[4], double dL[4]) {
  L[0] = -t * (t - 1) * (t - 2) / 6;
  L[1] = (t + 1) * (t - 1) * (t - 2) / 2;
  L[2] = -(t + 1) * t * (t - 2) / 2;
  L[3] = (t + 1) * t * (t - 1) / 6;
  dL[0] = -(3 * t * t - 6 * t + 2) / 6;
  dL[1] = (3 * t * t - 4 * t - 1) / 2;
  dL[2] = -(3 * t * t - 2 * t - 2) / 2;
  dL[3] = (3 * t * t - 1) / 6;
}

struct Term {
  int i, j;
  double c;
};

// Linear functional of node values, at most a few dozen terms.
struct Stencil {
  std::array<Term, 40> t;
  int n = 0;
  void add(int i, int j, double c) {
    for (int k = 0; k < n; ++k) {
      if (t[k].i == i && t[k].j == j) {
        t[k].c += c;
        return;
      }
    }
    t[n++] = {i, j, c};
  }
  void add(const Stencil& s, double scale) {
    for (int k = 0; k < s.n; ++k) add(s.t[k].i, s.t[k].j, scale * s.t[k].c);
  }
};

Stencil d11(int i, int j, double h) {
  Stencil s;
  const double c = 1.0 / (h * h);
  s.add(i - 1, j, c);
  s.add(i, j, -2 * c);
  s.add(i + 1, j, c);
  return s;
}

Stencil d22(int i, int j, double h) {
  Stencil s;
  const double c = 1.0 / (h * h);
  s.add(i, j - 1, c);
  s.add(i, j, -2 * c);
  s.add(i, j + 1, c);
  return s;
}

// Mixed difference at the centre of the cell with lower corner (i, j).
Stencil d12(int i, int j, double h) {
  Stencil s;
  const double c = 1.0 / (h * h);
  s.add(i, j, c);
  s.add(i + 1, j + 1, c);
  s.add(i + 1, j, -c);
  s.add(i, j + 1, -c);
  return s;
}

// First-order Taylor shift of a difference operator to an offset point.
template <class F>
Stencil shifted(F op, int i, int j, double h, const Vec2& o) {
  Stencil s = op(i, j, h);
  if (o.x() != 0.0) {
    s.add(op(i + 1, j, h), o.x() / (2 * h));
    s.add(op(i - 1, j, h), -o.x() / (2 * h));
  }
  if (o.y() != 0.0) {
    s.add(op(i, j + 1, h), o.y() / (2 * h));
    s.add(op(i, j - 1, h), -o.y() / (2 * h));
  }
  return s;
}

class Assembler {
 public:
  explicit Assembler(const PlateGrid& g) : g_(g) {}

  void emit(const Stencil& s, double weight) {
    int dofs[40];
    for (int a = 0; a < s.n; ++a) dofs[a] = dof(s.t[a]);
    for (int a = 0; a < s.n; ++a) {
      for (int b = 0; b < s.n; ++b) triplets.emplace_back(dofs[a], dofs[b], weight * s.t[a].c * s.t[b].c);
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;

 private:
  int dof(const Term& t) const {
    if (!g_.spec.valid(t.i, t.j)) throw SolverError("stencil leaves the grid");
    const int d = g_.dof[g_.spec.index(t.i, t.j)];
    if (d < 0) throw SolverError("stencil reaches a node without unknown; widen the active band");
    return d;
  }
  const PlateGrid& g_;
};

bool is_unknown(NodeKind k) { return k == NodeKind::free || k == NodeKind::ghost; }

std::vector<double> to_nodes(const PlateGrid& g, const Eigen::VectorXd& x) {
  std::vector<double> w(g.spec.size(), kNaN);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (g.kind[k] == NodeKind::clamped) w[k] = 0.0;
    else if (g.dof[k] >= 0) w[k] = x[g.dof[k]];
  }
  return w;
}

Eigen::VectorXd to_unknowns(const PlateGrid& g, const std::vector<double>& w) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(g.unknowns));
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (g.dof[k] >= 0) x[g.dof[k]] = w[k];
  }
  return x;
}

// Affine functions 1, x1, x2 evaluated at the unknowns.
Eigen::MatrixXd affine_basis(const PlateGrid& g) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(g.unknowns), 3);
  for (std::size_t k = 0; k < g.kind.size(); ++k) {
    if (g.dof[k] < 0) continue;
    const Vec2 x = g.spec.node(static_cast<int>(k % g.spec.nx), static_cast<int>(k / g.spec.nx));
    Z.row(g.dof[k]) << 1.0, x.x(), x.y();
  }
  return Z;
}

// Three interior unknowns spanning a non-degenerate triangle.
std::array<int, 3> pin_nodes(const PlateGrid& g) {
  const Vec2 c = g.domain.boundary().center();
  const double r = 0.3 * g.domain.boundary().min_radius();
  const std::array<Vec2, 3> targets{c, c + Vec2(r, 0.0), c + Vec2(0.0, r)};
  std::array<int, 3> out{};
  for (int t = 0; t < 3; ++t) {
    const Vec2 q = (targets[t] - g.spec.origin) / g.h();
    const int i = static_cast<int>(std::lround(q.x())), j = static_cast<int>(std::lround(q.y()));
    if (g.at(i, j) != NodeKind::free) throw SolverError("cannot place gauge pins");
    out[t] = g.dof[g.spec.index(i, j)];
  }
  return out;
}

struct LinearSolve {
  Eigen::VectorXd x;
  std::string method;
  int iterations = 0;
  double residual = 0.0;
  double backward_error = 0.0;
};

// |r|_inf / (|A|_inf |x|_inf + |b|_inf)
double backward_error(const SparseMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) rows[it.row()] += std::abs(it.value());
  }
  const Eigen::VectorXd r = A * x - b;
  return r.lpNorm<Eigen::Infinity>() / (rows.maxCoeff() * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>());
}

// Sparse Cholesky with iterative refinement; conjugate gradients when the
// factorization fails or stalls above tolerance.
class SpdSolver {
 public:
  SpdSolver(const SparseMatrix& A, const SolverOptions& opt) : A_(A), opt_(opt) {
    if (opt.direct) {
      direct_ = std::make_unique<Direct>();
      direct_->compute(A);
      if (direct_->info() != Eigen::Success) direct_.reset();
    }
  }

  LinearSolve solve(const Eigen::VectorXd& b) {
    LinearSolve out;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
      out.x = Eigen::VectorXd::Zero(b.size());
      out.method = "trivial";
      return out;
    }
    if (direct_) {
      out.method = kDirectName;
      out.x = direct_->solve(b);
      out.residual = (A_ * out.x - b).norm() / bnorm;
      for (int it = 0; it < 3 && out.residual > opt_.relative_tolerance; ++it) {
        const Eigen::VectorXd x = out.x + direct_->solve(b - A_ * out.x);
        const double r = (A_ * x - b).norm() / bnorm;
        if (!(r < 0.5 * out.residual)) break;  // at the rounding floor
        out.x = x;
        out.residual = r;
      }
      out.backward_error = backward_error(A_, out.x, b);
      if (std::isfinite(out.residual) &&
          (out.residual <= opt_.relative_tolerance || out.backward_error <= opt_.relative_tolerance)) {
        return out;
      }
    }
    if (!cg_) {
      cg_ = std::make_unique<Iterative>();
      cg_->setTolerance(opt_.relative_tolerance);
      cg_->setMaxIterations(opt_.max_iterations);
      cg_->compute(A_);
      if (cg_->info() != Eigen::Success) throw SolverError("preconditioner setup failed");
    }
    out.x = cg_->solve(b);
    out.method = "cg";
    out.iterations = static_cast<int>(cg_->iterations());
    out.residual = (A_ * out.x - b).norm() / bnorm;
    out.backward_error = backward_error(A_, out.x, b);
    if (!(out.residual <= 10.0 * opt_.relative_tolerance) && !(out.backward_error <= opt_.relative_tolerance)) {
      throw SolverError("conjugate gradients stopped at relative residual " + std::to_string(out.residual) +
                        " after " + std::to_string(out.iterations) + " iterations");
    }
    return out;
  }

 private:
#ifdef PLATELAB_HAVE_CHOLMOD
  using Direct = Eigen::CholmodSupernodalLLT<SparseMatrix>;
  static constexpr const char* kDirectName = "cholmod";
#else
  using Direct = Eigen::SimplicialLDLT<SparseMatrix>;
  static constexpr const char* kDirectName = "ldlt";
#endif
  using Iterative = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>;
  const SparseMatrix& A_;
  SolverOptions opt_;
  std::unique_ptr<Direct> direct_;
  std::unique_ptr<Iterative> cg_;
};

Mat2 nan_matrix() { return Mat2::Constant(kNaN); }

}  // namespace

PlateSystem assemble_system(std::shared_ptr<const PlateGrid> grid, const material::IsotropicPlate& plate) {
  const PlateGrid& g = *grid;
  const auto& spec = g.spec;
  const double h = spec.h;
  Assembler as(g);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      if (g.nodes.weight[k] > 0.0) {
        const Vec2 o = g.nodes.offset[k];
        const auto s = plate.sample(spec.node(i, j) + o);
        const double W = g.nodes.weight[k] * h * h * s.B;
        const auto a11 = shifted(d11, i, j, h, o);
        const auto a22 = shifted(d22, i, j, h, o);
        Stencil trace = a11;
        trace.add(a22, 1.0);
        as.emit(a11, W * (1 - s.nu));
        as.emit(a22, W * (1 - s.nu));
        as.emit(trace, W * s.nu);
      }
      if (g.cells.weight[k] > 0.0) {
        const Vec2 o = g.cells.offset[k];
        const auto s = plate.sample(spec.node(i, j) + Vec2(0.5 * h, 0.5 * h) + o);
        as.emit(shifted(d12, i, j, h, o), g.cells.weight[k] * h * h * s.B * 2 * (1 - s.nu));
      }
    }
  }
  // Ghost penalty on third differences of axis chains touching the exterior.
  const double gamma = g.options.ghost_penalty;
  if (gamma > 0.0) {
    for (int j = 0; j < spec.ny; ++j) {
      for (int i = 0; i < spec.nx; ++i) {
        for (int dir = 0; dir < 2; ++dir) {
          const int di = dir == 0 ? 1 : 0, dj = 1 - di;
          bool ok = true, outside = false;
          for (int m = 0; m < 4 && ok; ++m) {
            const auto kind = g.at(i + m * di, j + m * dj);
            ok = is_unknown(kind);
            outside = outside || kind == NodeKind::ghost;
          }
          if (!ok || !outside) continue;
          Stencil s;
          const double c[4] = {-1.0, 3.0, -3.0, 1.0};
          for (int m = 0; m < 4; ++m) s.add(i + m * di, j + m * dj, c[m] / h);
          const Vec2 mid = spec.node(i, j) + 1.5 * h * Vec2(di, dj);
          as.emit(s, gamma * plate.sample(mid).B);
        }
      }
    }
  }
  PlateSystem sys;
  sys.grid = grid;
  const auto n = static_cast<Eigen::Index>(g.unknowns);
  sys.K.resize(n, n);
  sys.K.setFromTriplets(as.triplets.begin(), as.triplets.end());

  std::vector<Eigen::Triplet<double>> rows;
  if (g.inclusion) {
    const auto& curve = g.inclusion->curve();
    const auto m = static_cast<std::size_t>(std::ceil(curve.perimeter() / h));
    for (std::size_t p = 0; p < m; ++p) {
      const double theta = curve.theta_at_fraction(static_cast<double>(p) / static_cast<double>(m));
      const Vec2 x = curve.point(theta);
      const Vec2 nrm = curve.outward_normal(theta);
      sys.constraint_points.push_back(x);
      const Vec2 q = (x - spec.origin) / h;
      const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y()));
      double Lx[4], dLx[4], Ly[4], dLy[4];
      lagrange(q.x() - i0, Lx, dLx);
      lagrange(q.y() - j0, Ly, dLy);
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          const int i = i0 - 1 + a, j = j0 - 1 + b;
          const int d = g.spec.valid(i, j) ? g.dof[spec.index(i, j)] : -1;
          if (d < 0) throw SolverError("clamping stencil reaches a node without unknown");
          rows.emplace_back(2 * p, d, Lx[a] * Ly[b]);
          rows.emplace_back(2 * p + 1, d, dLx[a] * Ly[b] * nrm.x() + Lx[a] * dLy[b] * nrm.y());
        }
      }
    }
  }
  sys.C.resize(static_cast<Eigen::Index>(2 * sys.constraint_points.size()), n);
  sys.C.setFromTriplets(rows.begin(), rows.end());
  return sys;
}

Eigen::VectorXd assemble_load(const PlateGrid& g, const CoupleField& couple) {
  const auto& domain = g.domain;
  const double h = g.h();
  const double P = domain.perimeter();
  std::size_t n = static_cast<std::size_t>(std::ceil(4.0 * P / h));
  const CoupleField data = couple.size() >= n ? couple : couple.resampled(n);
  n = data.size();
  const auto dtau = data.m_tau_derivative(P);
  const double ds = P / static_cast<double>(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.unknowns));
  for (std::size_t s = 0; s < n; ++s) {
    const double mn = data.m_n()[s];
    if (mn == 0.0 && dtau[s] == 0.0) continue;
    const double frac = data.fraction(s);
    const Vec2 p = domain.point_at(frac);
    const Vec2 nrm = domain.normal_at(frac);
    const Vec2 q = (p - g.spec.origin) / h;
    const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y()));
    double Lx[4], dLx[4], Ly[4], dLy[4];
    lagrange(q.x() - i0, Lx, dLx);
    lagrange(q.y() - j0, Ly, dLy);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const int i = i0 - 1 + a, j = j0 - 1 + b;
        if (!is_unknown(g.at(i, j))) throw SolverError("load stencil reaches a node without unknown");
        const double val = Lx[a] * Ly[b];
        const double dn = (dLx[a] * Ly[b] * nrm.x() + Lx[a] * dLy[b] * nrm.y()) / h;
        f[g.dof[g.spec.index(i, j)]] += ds * (dtau[s] * val - mn * dn);
      }
    }
  }
  return f;
}

double DiscreteSolution::value(const Vec2& x) const {
  const auto& spec = grid->spec;
  const Vec2 q = (x - spec.origin) / spec.h;
  const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y()));
  double Lx[4], dLx[4], Ly[4], dLy[4];
  lagrange(q.x() - i0, Lx, dLx);
  lagrange(q.y() - j0, Ly, dLy);
  double v = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int i = i0 - 1 + a, j = j0 - 1 + b;
      if (!spec.valid(i, j)) return kNaN;
      v += Lx[a] * Ly[b] * w[spec.index(i, j)];
    }
  }
  return v;
}

Vec2 DiscreteSolution::gradient(const Vec2& x) const {
  const auto& spec = grid->spec;
  const Vec2 q = (x - spec.origin) / spec.h;
  const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y()));
  double Lx[4], dLx[4], Ly[4], dLy[4];
  lagrange(q.x() - i0, Lx, dLx);
  lagrange(q.y() - j0, Ly, dLy);
  Vec2 g = Vec2::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int i = i0 - 1 + a, j = j0 - 1 + b;
      if (!spec.valid(i, j)) return Vec2::Constant(kNaN);
      const double v = w[spec.index(i, j)];
      g += Vec2(dLx[a] * Ly[b], Lx[a] * dLy[b]) * v;
    }
  }
  return g / spec.h;
}

Mat2 DiscreteSolution::node_hessian(int i, int j) const {
  const auto& spec = grid->spec;
  if (!spec.valid(i - 1, j - 1) || !spec.valid(i + 1, j + 1)) return nan_matrix();
  auto at = [&](int a, int b) { return w[spec.index(a, b)]; };
  const double h2 = spec.h * spec.h;
  Mat2 H;
  H(0, 0) = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / h2;
  H(1, 1) = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / h2;
  H(0, 1) = H(1, 0) = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4 * h2);
  return H;
}

Vec2 DiscreteSolution::node_gradient(int i, int j) const {
  const auto& spec = grid->spec;
  if (!spec.valid(i - 1, j - 1) || !spec.valid(i + 1, j + 1)) return Vec2::Constant(kNaN);
  auto at = [&](int a, int b) { return w[spec.index(a, b)]; };
  return Vec2(at(i + 1, j) - at(i - 1, j), at(i, j + 1) - at(i, j - 1)) / (2 * spec.h);
}

Mat2 DiscreteSolution::hessian(const Vec2& x) const {
  const auto& spec = grid->spec;
  const Vec2 q = (x - spec.origin) / spec.h;
  const int i0 = static_cast<int>(std::floor(q.x())), j0 = static_cast<int>(std::floor(q.y()));
  const double tx = q.x() - i0, ty = q.y() - j0;
  return (1 - tx) * (1 - ty) * node_hessian(i0, j0) + tx * (1 - ty) * node_hessian(i0 + 1, j0) +
         (1 - tx) * ty * node_hessian(i0, j0 + 1) + tx * ty * node_hessian(i0 + 1, j0 + 1);
}

double DiscreteSolution::normal_derivative(double fraction) const {
  const Vec2 p = grid->domain.point_at(fraction);
  const Vec2 inward = -grid->domain.normal_at(fraction);
  const double h = grid->h();
  double f[5];
  for (int k = 0; k < 5; ++k) f[k] = value(p + k * h * inward);
  return (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h) * -1.0;
}

void DiscreteSolution::add_affine(const Affine& a) {
  const auto& spec = grid->spec;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      if (grid->kind[k] != NodeKind::inactive) w[k] += a(spec.node(i, j));
    }
  }
}

Affine affine_projection(const DiscreteSolution& solution, const RegionMask& region) {
  const auto& spec = region.grid;
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      const double wt = region.weight[k];
      if (wt <= 0.0 || !std::isfinite(solution.w[k])) continue;
      const Vec2 x = spec.node(i, j);
      const Eigen::Vector3d phi(1.0, x.x(), x.y());
      A += wt * phi * phi.transpose();
      b += wt * solution.w[k] * phi;
    }
  }
  if (A(0, 0) <= 0.0) throw InvalidInputError("affine projection: empty region");
  const Eigen::Vector3d c = A.ldlt().solve(b);
  return Affine{{c[0], c[1], c[2]}};
}

namespace {

// Node Hessian shifted to the node offset by first-order Taylor expansion.
Mat2 centroid_hessian(const DiscreteSolution& s, int i, int j, const Vec2& o) {
  Mat2 H = s.node_hessian(i, j);
  const double h = s.grid->h();
  if (o.x() != 0.0) {
    const Mat2 d = (s.node_hessian(i + 1, j) - s.node_hessian(i - 1, j)) * (o.x() / (2 * h));
    if (d.allFinite()) H += d;
  }
  if (o.y() != 0.0) {
    const Mat2 d = (s.node_hessian(i, j + 1) - s.node_hessian(i, j - 1)) * (o.y() / (2 * h));
    if (d.allFinite()) H += d;
  }
  return H;
}

template <class F>
double integrate(const RegionMask& region, F f) {
  const auto& spec = region.grid;
  const double cell = spec.h * spec.h;
  double acc = 0.0;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto k = spec.index(i, j);
      if (region.weight[k] > 0.0) acc += region.weight[k] * cell * f(i, j, region.offset[k]);
    }
  }
  return acc;
}

void check_region(const DiscreteSolution& s, const RegionMask& region) {
  const auto& a = s.grid->spec;
  const auto& b = region.grid;
  if (a.nx != b.nx || a.ny != b.ny || a.h != b.h || (a.origin - b.origin).norm() > 1e-12 * a.h) {
    throw InvalidInputError("region and solution live on different grids");
  }
}

}  // namespace

double energy(const DiscreteSolution& solution, const material::IsotropicPlate& plate, const RegionMask& region) {
  check_region(solution, region);
  const double e = integrate(region, [&](int i, int j, const Vec2& o) {
    const auto s = plate.sample(solution.grid->spec.node(i, j) + o);
    return material::tensor_quadratic_form(s.B, s.nu, centroid_hessian(solution, i, j, o));
  });
  if (!std::isfinite(e)) throw SolverError("energy: region reaches nodes without values");
  return e;
}

double hessian_l2(const DiscreteSolution& solution, const RegionMask& region) {
  check_region(solution, region);
  const double e = integrate(region, [&](int i, int j, const Vec2& o) {
    return centroid_hessian(solution, i, j, o).squaredNorm();
  });
  if (!std::isfinite(e)) throw SolverError("hessian_l2: region reaches nodes without values");
  return e;
}

double h2_norm(const DiscreteSolution& solution, const RegionMask& region) {
  check_region(solution, region);
  const double r0 = solution.grid->domain.constants().r0;
  const double e = integrate(region, [&](int i, int j, const Vec2& o) {
    const double w = solution.node(i, j);
    return w * w / (r0 * r0 * r0 * r0) + solution.node_gradient(i, j).squaredNorm() / (r0 * r0) +
           centroid_hessian(solution, i, j, o).squaredNorm();
  });
  if (!std::isfinite(e)) throw SolverError("h2_norm: region reaches nodes without values");
  return std::sqrt(e);
}

DiscreteSolution solve_dirichlet_form(std::shared_ptr<const PlateGrid> grid, const material::IsotropicPlate& plate,
                                      const CoupleField& couple, const SolverOptions& options) {
  const PlateGrid& g = *grid;
  const auto sys = assemble_system(grid, plate);
  Eigen::VectorXd f = assemble_load(g, couple);
  DiscreteSolution sol;
  sol.grid = grid;
  SparseMatrix A = sys.K;
  Eigen::VectorXd b = f;
  if (!g.inclusion) {
    // Affine kernel: check compatibility, project it out of the load, pin three nodes.
    const Eigen::MatrixXd Z = affine_basis(g);
    const double fn = f.norm();
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
      if (fn > 0.0) worst = std::max(worst, std::abs(Z.col(c).dot(f)) / (fn * Z.col(c).norm()));
    }
    sol.info.compatibility = worst;
    if (worst > options.compatibility_tolerance) {
      throw SolverError("singular system: no inclusion and incompatible data (relative affine load " +
                        std::to_string(worst) + ")");
    }
    b = f - Z * (Z.transpose() * Z).ldlt().solve(Z.transpose() * f);
    const auto pins = pin_nodes(g);
    const double diag = A.diagonal().maxCoeff();
    A.prune([&](Eigen::Index r, Eigen::Index c, double) {
      for (int p : pins) {
        if (r == p || c == p) return false;
      }
      return true;
    });
    for (int p : pins) {
      A.coeffRef(p, p) = diag;
      b[p] = 0.0;
    }
    sol.info.gauge_fixed = true;
  }
  Eigen::VectorXd x;
  LinearSolve ls;
  if (sys.C.rows() == 0) {
    SpdSolver solver(A, options);
    ls = solver.solve(b);
    x = ls.x;
  } else {
    // Augmented Lagrangian: (K + rho C'C) x = f - C' lambda, lambda += rho C x.
    const double rho = options.constraint_penalty * A.diagonal().maxCoeff();
    const SparseMatrix CtC = SparseMatrix(sys.C.transpose()) * sys.C;
    const SparseMatrix Arho = A + rho * CtC;
    SpdSolver solver(Arho, options);
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(sys.C.rows());
    for (int it = 1;; ++it) {
      ls = solver.solve(b - sys.C.transpose() * lambda);
      const Eigen::VectorXd c = sys.C * ls.x;
      lambda += rho * c;
      const double scale = ls.x.lpNorm<Eigen::Infinity>();
      sol.info.constraint_iterations = it;
      sol.info.constraint_violation = scale > 0.0 ? c.lpNorm<Eigen::Infinity>() / scale : 0.0;
      if (sol.info.constraint_violation <= options.constraint_tolerance) break;
      if (it >= options.max_constraint_iterations) {
        throw SolverError("clamping constraints not met after " + std::to_string(it) +
                          " augmented Lagrangian updates (violation " + std::to_string(sol.info.constraint_violation) +
                          ")");
      }
    }
    x = ls.x;
    sol.multipliers = lambda;
    const double fn = f.norm();
    const Eigen::VectorXd r = sys.K * x + sys.C.transpose() * lambda - f;
    ls.residual = fn > 0.0 ? r.norm() / fn : 0.0;
  }
  sol.info.method = ls.method;
  sol.info.iterations = ls.iterations;
  sol.info.tolerance = options.relative_tolerance;
  sol.info.relative_residual = ls.residual;
  sol.info.backward_error = ls.backward_error;
  sol.w = to_nodes(g, x);
  if (!g.inclusion) {
    Affine a = affine_projection(sol, g.nodes);
    for (auto& c : a.c) c = -c;
    sol.add_affine(a);
  }
  x = to_unknowns(g, sol.w);
  sol.stored_energy = 0.5 * x.dot(sys.K * x);
  sol.boundary_work = f.dot(x);
  return sol;
}

bool RigidSolution::equilibrium_ok(double tolerance) const {
  for (double r : equilibrium) {
    if (!(std::abs(r) <= tolerance * energy_scale)) return false;
  }
  return true;
}

RigidSolution solve_rigid_form(std::shared_ptr<const PlateGrid> grid, const material::IsotropicPlate& plate,
                               const CoupleField& couple, const SolverOptions& options) {
  if (!grid->inclusion) throw InvalidInputError("rigid form needs an inclusion");
  const PlateGrid& g = *grid;
  RigidSolution out;
  out.dirichlet = solve_dirichlet_form(grid, plate, couple, options);
  out.gauge = affine_projection(out.dirichlet, g.nodes);
  for (auto& c : out.gauge.c) c = -c;
  out.solution = out.dirichlet;
  out.solution.add_affine(out.gauge);
  out.solution.gauge = out.gauge;

  // Reaction of the clamp, f - K w, tested against affine functions.
  const auto sys = assemble_system(grid, plate);
  const Eigen::VectorXd reaction = assemble_load(g, couple) - sys.K * to_unknowns(g, out.dirichlet.w);
  const Eigen::MatrixXd Z = affine_basis(g);
  for (int c = 0; c < 3; ++c) out.equilibrium[c] = Z.col(c).dot(reaction);
  out.energy_scale = 2.0 * out.dirichlet.stored_energy;
  for (int j = 0; j < g.spec.ny; ++j) {
    for (int i = 0; i < g.spec.nx; ++i) {
      const auto k = g.spec.index(i, j);
      if (g.kind[k] == NodeKind::inactive) continue;
      const double d = out.solution.w[k] - out.gauge(g.spec.node(i, j)) - out.dirichlet.w[k];
      out.consistency = std::max(out.consistency, std::abs(d));
    }
  }
  return out;
}

EnergyEstimate verify_energy_estimate(const DiscreteSolution& solution, const CoupleField& couple) {
  EnergyEstimate e;
  e.resolution = solution.grid->spec.resolution();
  e.surrogate = h_minus_half_surrogate(couple, solution.grid->domain);
  if (!(e.surrogate > 0.0)) throw InvalidInputError("energy estimate: ratio undefined for zero data");
  const double r0 = solution.grid->domain.constants().r0;
  e.h2_norm = h2_norm(solution, solution.grid->nodes);
  e.ratio = e.h2_norm / (r0 * r0 * e.surrogate);
  return e;
}

EnergyEstimateReport verify_energy_estimate(const std::vector<EnergyEstimate>& levels, double bound) {
  EnergyEstimateReport r;
  r.levels = levels;
  r.bound = bound;
  r.bounded = !levels.empty();
  for (const auto& l : levels) {
    if (!(l.ratio <= bound)) r.bounded = false;
  }
  if (levels.size() >= 2) {
    const double a = levels[levels.size() - 2].ratio, b = levels.back().ratio;
    r.stable = std::abs(a - b) <= 0.1 * std::abs(b);
  }
  return r;
}

void write_solution(const DiscreteSolution& solution, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write solution file '" + path.string() + "'");
  const auto& g = *solution.grid;
  nlohmann::json header = {
      {"resolution", g.spec.resolution()},
      {"h", g.spec.h},
      {"origin", {g.spec.origin.x(), g.spec.origin.y()}},
      {"nx", g.spec.nx},
      {"ny", g.spec.ny},
      {"unknowns", g.unknowns},
      {"method", solution.info.method},
      {"relative_tolerance", solution.info.tolerance},
      {"gauge", {solution.gauge.c[0], solution.gauge.c[1], solution.gauge.c[2]}},
      {"relative_residual", solution.info.relative_residual},
      {"backward_error", solution.info.backward_error},
      {"stored_energy", solution.stored_energy},
      {"boundary_work", solution.boundary_work},
  };
  out << "# " << header.dump() << "\n";
  out << "x1,x2,kind,w\n";
  static const char* names[] = {"inactive", "free", "ghost", "clamped"};
  for (int j = 0; j < g.spec.ny; ++j) {
    for (int i = 0; i < g.spec.nx; ++i) {
      const auto k = g.spec.index(i, j);
      if (g.kind[k] == NodeKind::inactive) continue;
      const Vec2 x = g.spec.node(i, j);
      out << format_double(x.x()) << "," << format_double(x.y()) << "," << names[static_cast<int>(g.kind[k])] << ","
          << format_double(solution.w[k]) << "\n";
    }
  }
}

}  // namespace platelab::plate_solver
