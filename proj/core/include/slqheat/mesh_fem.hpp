#pragma once
// 1D P1/P0 finite elements on (0, L) with homogeneous Dirichlet boundary:
// mesh construction, mass/stiffness assembly, the discrete (weak) Laplacian,
// the implicit-Euler resolvent, L2-orthogonal projections, norms, and
// prolongation between nested meshes. Matrices are tridiagonal SPD and are
// factorized once; fields store interior nodal coefficients only (the zero
// boundary values are eliminated).

#include <slqheat/types.hpp>

#include <functional>
#include <vector>

namespace slqheat {

// Real-valued function of the space coordinate, used for projection inputs.
using SpaceFn = std::function<double(double)>;

struct Mesh1D {
  double length = 1.0;
  int n_cells = 0;
  std::vector<double> node_coords;  // n_cells + 1 entries, 0 .. length
  std::vector<double> cell_widths;  // n_cells entries

  int n_dof() const { return n_cells - 1; }
  double h() const;  // maximum cell width
};

// Uniform mesh with n_cells >= 2 elements on (0, length).
Mesh1D build_mesh(double length, int n_cells);

// Symmetric tridiagonal matrix; only the main and first off-diagonal stored.
struct TriDiagSym {
  Vec diag;  // n entries
  Vec off;   // n - 1 entries

  int size() const { return static_cast<int>(diag.size()); }
  Vec apply(const Vec& v) const;
  Mat dense() const;
};

TriDiagSym add(const TriDiagSym& a, const TriDiagSym& b, double scale_b);

// Banded (tridiagonal) Cholesky factorization in LDL^T form of an SPD matrix.
// Solves are O(n) and reentrant: no mutable scratch is shared between calls.
class TriDiagCholesky {
 public:
  TriDiagCholesky() = default;
  explicit TriDiagCholesky(const TriDiagSym& a);

  Vec solve(const Vec& rhs) const;
  int size() const { return static_cast<int>(d_.size()); }

 private:
  Vec d_;  // pivots
  Vec l_;  // unit-lower-bidiagonal multipliers
};

// Assembled P1 operators for one mesh and one time step. Immutable after
// assembly and safe to share read-only across threads.
struct FemOperators {
  Mesh1D mesh;
  int n_dof = 0;
  double tau = 0.0;           // time step baked into the shifted factor
  TriDiagSym mass;            // M: diag 2h/3, off h/6 on uniform meshes
  TriDiagSym stiffness;       // K: diag 2/h, off -1/h on uniform meshes
  TriDiagCholesky mass_chol;       // factor of M
  TriDiagCholesky shifted_chol;    // factor of M + tau K

  Vec solve_mass(const Vec& rhs) const { return mass_chol.solve(rhs); }
  Vec solve_shifted(const Vec& rhs) const { return shifted_chol.solve(rhs); }
};

FemOperators assemble(const Mesh1D& mesh, double tau);

// Weak Laplacian: returns w solving M w = -K v.
Vec apply_discrete_laplacian(const FemOperators& ops, const Vec& v);

// Implicit-Euler propagator (the resolvent of the weak Laplacian at the
// operator's tau): returns w solving (M + tau K) w = M v. Self-adjoint and
// contractive in the M-weighted inner product.
Vec apply_resolvent(const FemOperators& ops, const Vec& v);

// L2-orthogonal projection onto the P1 space: solves M u = b with
// b_j = integral of g against the j-th hat function (composite Gauss rule).
Vec project_p1(const FemOperators& ops, const SpaceFn& g);

// L2-orthogonal projection onto piecewise constants: element averages.
Vec project_p0(const Mesh1D& mesh, const Vec& v_p1);
Vec project_p0_fn(const Mesh1D& mesh, const SpaceFn& g);

// Load vector of a piecewise-constant density c: b_j = integral of c phi_j.
Vec p0_load(const Mesh1D& mesh, const Vec& c);

// P1 projection of a piecewise-constant field: solves M u = p0_load(c).
Vec lift_p0(const FemOperators& ops, const Vec& c);

// Composition lift_p0(project_p0(.)) as an explicit dense matrix; symmetric
// positive semidefinite in the M-weighted inner product.
Mat mixed_projection_dense(const FemOperators& ops);

// The resolvent as an explicit dense matrix (for the feedback recursion).
Mat resolvent_dense(const FemOperators& ops);

double norm_l2_p1(const FemOperators& ops, const Vec& v);    // sqrt(v'Mv)
double norm_h1_semi(const FemOperators& ops, const Vec& v);  // sqrt(v'Kv)
double norm_l2_p0(const Mesh1D& mesh, const Vec& c);
double inner_l2_p1(const FemOperators& ops, const Vec& u, const Vec& v);
double inner_l2_p0(const Mesh1D& mesh, const Vec& c, const Vec& d);

// Exact embedding of a P1 field on a nested (dyadically refined) fine mesh.
Vec prolongate(const FemOperators& coarse, const FemOperators& fine,
               const Vec& v);
// Same embedding for piecewise constants (value replication per fine cell).
Vec prolongate_p0(const Mesh1D& coarse, const Mesh1D& fine, const Vec& c);

namespace quadrature {
// Composite 3-point Gauss-Legendre rule on [a, b] split into `subcells`
// equal pieces; exact for cubics on each piece.
double integrate(double a, double b, const SpaceFn& f, int subcells);
// Subdivision used by the projection routines (keeps their quadrature error
// around 1e-15 for the smooth analytic profiles in the catalog).
inline constexpr int kProjectionSubcells = 16;
}  // namespace quadrature

}  // namespace slqheat
