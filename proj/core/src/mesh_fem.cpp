#include <slqheat/mesh_fem.hpp>

#include <slqheat/errors.hpp>

#include <cmath>
#include <string>

namespace slqheat {

double Mesh1D::h() const {
  double hmax = 0.0;
  for (double w : cell_widths) hmax = std::max(hmax, w);
  return hmax;
}

Mesh1D build_mesh(double length, int n_cells) {
  if (!(length > 0.0)) {
    throw InvalidArgument("build_mesh: length must be positive");
  }
  if (n_cells < 2) {
    throw InvalidArgument("build_mesh: need at least 2 cells");
  }
  Mesh1D mesh;
  mesh.length = length;
  mesh.n_cells = n_cells;
  mesh.node_coords.resize(n_cells + 1);
  mesh.cell_widths.resize(n_cells);
  for (int i = 0; i <= n_cells; ++i) {
    mesh.node_coords[i] = length * static_cast<double>(i) / n_cells;
  }
  mesh.node_coords.front() = 0.0;
  mesh.node_coords.back() = length;
  for (int k = 0; k < n_cells; ++k) {
    mesh.cell_widths[k] = mesh.node_coords[k + 1] - mesh.node_coords[k];
  }
  return mesh;
}

Vec TriDiagSym::apply(const Vec& v) const {
  const int n = size();
  if (v.size() != n) {
    throw InvalidArgument("TriDiagSym::apply: dimension mismatch");
  }
  Vec r(n);
  for (int i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += off[i - 1] * v[i - 1];
    if (i + 1 < n) s += off[i] * v[i + 1];
    r[i] = s;
  }
  return r;
}

Mat TriDiagSym::dense() const {
  const int n = size();
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = diag[i];
    if (i + 1 < n) {
      a(i, i + 1) = off[i];
      a(i + 1, i) = off[i];
    }
  }
  return a;
}

TriDiagSym add(const TriDiagSym& a, const TriDiagSym& b, double scale_b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("TriDiagSym add: dimension mismatch");
  }
  TriDiagSym r;
  r.diag = a.diag + scale_b * b.diag;
  r.off = a.off + scale_b * b.off;
  return r;
}

TriDiagCholesky::TriDiagCholesky(const TriDiagSym& a) {
  const int n = a.size();
  d_.resize(n);
  l_.resize(n > 0 ? n - 1 : 0);
  for (int i = 0; i < n; ++i) {
    double di = a.diag[i];
    if (i > 0) di -= l_[i - 1] * l_[i - 1] * d_[i - 1];
    if (!(di > 0.0)) {
      // SPD inputs cannot produce a non-positive pivot; this is a bug signal.
      throw InternalError("TriDiagCholesky: non-positive pivot at row " +
                          std::to_string(i));
    }
    d_[i] = di;
    if (i + 1 < n) l_[i] = a.off[i] / di;
  }
}

Vec TriDiagCholesky::solve(const Vec& rhs) const {
  const int n = size();
  if (rhs.size() != n) {
    throw InvalidArgument("TriDiagCholesky::solve: dimension mismatch");
  }
  Vec x(n);
  // Forward substitution with the unit lower bidiagonal factor.
  for (int i = 0; i < n; ++i) {
    double s = rhs[i];
    if (i > 0) s -= l_[i - 1] * x[i - 1];
    x[i] = s;
  }
  // Diagonal scaling, then transpose back-substitution.
  for (int i = 0; i < n; ++i) x[i] /= d_[i];
  for (int i = n - 2; i >= 0; --i) x[i] -= l_[i] * x[i + 1];
  return x;
}

FemOperators assemble(const Mesh1D& mesh, double tau) {
  if (mesh.n_cells < 2) {
    throw InvalidArgument("assemble: mesh must have at least 2 cells");
  }
  if (!(tau > 0.0)) {
    throw InvalidArgument("assemble: tau must be positive");
  }
  FemOperators ops;
  ops.mesh = mesh;
  ops.n_dof = mesh.n_dof();
  ops.tau = tau;

  const int n = ops.n_dof;
  TriDiagSym m;
  TriDiagSym k;
  m.diag = Vec::Zero(n);
  m.off = Vec::Zero(n - 1);
  k.diag = Vec::Zero(n);
  k.off = Vec::Zero(n - 1);

  // Element matrices on a cell of width w:
  //   mass (w/6) [[2, 1], [1, 2]],  stiffness (1/w) [[1, -1], [-1, 1]];
  // global node c and c+1 bound cell c; interior dof index = node index - 1.
  for (int c = 0; c < mesh.n_cells; ++c) {
    const double w = mesh.cell_widths[c];
    const int left = c - 1;   // dof index of the cell's left node
    const int right = c;      // dof index of the cell's right node
    if (left >= 0) {
      m.diag[left] += w / 3.0;
      k.diag[left] += 1.0 / w;
    }
    if (right < n) {
      m.diag[right] += w / 3.0;
      k.diag[right] += 1.0 / w;
    }
    if (left >= 0 && right < n) {
      m.off[left] += w / 6.0;
      k.off[left] += -1.0 / w;
    }
  }

  ops.mass = m;
  ops.stiffness = k;
  ops.mass_chol = TriDiagCholesky(m);
  ops.shifted_chol = TriDiagCholesky(add(m, k, tau));
  return ops;
}

Vec apply_discrete_laplacian(const FemOperators& ops, const Vec& v) {
  if (v.size() != ops.n_dof) {
    throw InvalidArgument("apply_discrete_laplacian: dimension mismatch");
  }
  return ops.solve_mass(-ops.stiffness.apply(v));
}

Vec apply_resolvent(const FemOperators& ops, const Vec& v) {
  if (v.size() != ops.n_dof) {
    throw InvalidArgument("apply_resolvent: dimension mismatch");
  }
  return ops.solve_shifted(ops.mass.apply(v));
}

namespace quadrature {

double integrate(double a, double b, const SpaceFn& f, int subcells) {
  // 3-point Gauss-Legendre nodes/weights on [-1, 1].
  static const double q = std::sqrt(0.6);
  static const double xs[3] = {-q, 0.0, q};
  static const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double w = (b - a) / subcells;
  double total = 0.0;
  for (int s = 0; s < subcells; ++s) {
    const double lo = a + s * w;
    const double mid = lo + 0.5 * w;
    double acc = 0.0;
    for (int g = 0; g < 3; ++g) acc += ws[g] * f(mid + 0.5 * w * xs[g]);
    total += acc * 0.5 * w;
  }
  return total;
}

}  // namespace quadrature

Vec project_p1(const FemOperators& ops, const SpaceFn& g) {
  const Mesh1D& mesh = ops.mesh;
  const int n = ops.n_dof;
  Vec b = Vec::Zero(n);
  for (int c = 0; c < mesh.n_cells; ++c) {
    const double x0 = mesh.node_coords[c];
    const double x1 = mesh.node_coords[c + 1];
    const double w = mesh.cell_widths[c];
    const int left = c - 1;
    const int right = c;
    if (left >= 0) {
      b[left] += quadrature::integrate(
          x0, x1, [&](double x) { return g(x) * (x1 - x) / w; },
          quadrature::kProjectionSubcells);
    }
    if (right < n) {
      b[right] += quadrature::integrate(
          x0, x1, [&](double x) { return g(x) * (x - x0) / w; },
          quadrature::kProjectionSubcells);
    }
  }
  return ops.solve_mass(b);
}

Vec project_p0(const Mesh1D& mesh, const Vec& v_p1) {
  if (v_p1.size() != mesh.n_dof()) {
    throw InvalidArgument("project_p0: dimension mismatch");
  }
  // The average of a linear function over a cell is the midpoint value.
  Vec c(mesh.n_cells);
  for (int k = 0; k < mesh.n_cells; ++k) {
    const double vl = (k == 0) ? 0.0 : v_p1[k - 1];
    const double vr = (k == mesh.n_cells - 1) ? 0.0 : v_p1[k];
    c[k] = 0.5 * (vl + vr);
  }
  return c;
}

Vec project_p0_fn(const Mesh1D& mesh, const SpaceFn& g) {
  Vec c(mesh.n_cells);
  for (int k = 0; k < mesh.n_cells; ++k) {
    const double x0 = mesh.node_coords[k];
    const double x1 = mesh.node_coords[k + 1];
    c[k] = quadrature::integrate(x0, x1, g,
                                 quadrature::kProjectionSubcells) /
           mesh.cell_widths[k];
  }
  return c;
}

Vec p0_load(const Mesh1D& mesh, const Vec& c) {
  if (c.size() != mesh.n_cells) {
    throw InvalidArgument("p0_load: dimension mismatch");
  }
  // Integral of a hat function over one adjacent cell is half the cell width.
  const int n = mesh.n_dof();
  Vec b(n);
  for (int j = 0; j < n; ++j) {
    b[j] = 0.5 * (c[j] * mesh.cell_widths[j] +
                  c[j + 1] * mesh.cell_widths[j + 1]);
  }
  return b;
}

Vec lift_p0(const FemOperators& ops, const Vec& c) {
  return ops.solve_mass(p0_load(ops.mesh, c));
}

Mat mixed_projection_dense(const FemOperators& ops) {
  const int n = ops.n_dof;
  Mat b(n, n);
  Vec e = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    b.col(j) = lift_p0(ops, project_p0(ops.mesh, e));
    e[j] = 0.0;
  }
  return b;
}

Mat resolvent_dense(const FemOperators& ops) {
  const int n = ops.n_dof;
  Mat a(n, n);
  Vec e = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.col(j) = apply_resolvent(ops, e);
    e[j] = 0.0;
  }
  return a;
}

double inner_l2_p1(const FemOperators& ops, const Vec& u, const Vec& v) {
  return u.dot(ops.mass.apply(v));
}

double norm_l2_p1(const FemOperators& ops, const Vec& v) {
  return std::sqrt(std::max(0.0, inner_l2_p1(ops, v, v)));
}

double norm_h1_semi(const FemOperators& ops, const Vec& v) {
  return std::sqrt(std::max(0.0, v.dot(ops.stiffness.apply(v))));
}

double inner_l2_p0(const Mesh1D& mesh, const Vec& c, const Vec& d) {
  if (c.size() != mesh.n_cells || d.size() != mesh.n_cells) {
    throw InvalidArgument("inner_l2_p0: dimension mismatch");
  }
  double s = 0.0;
  for (int k = 0; k < mesh.n_cells; ++k) s += mesh.cell_widths[k] * c[k] * d[k];
  return s;
}

double norm_l2_p0(const Mesh1D& mesh, const Vec& c) {
  return std::sqrt(std::max(0.0, inner_l2_p0(mesh, c, c)));
}

namespace {

// Fine-to-coarse refinement factor; throws unless the fine mesh is a dyadic
// refinement of the coarse mesh on the same interval.
int refinement_stride(const Mesh1D& coarse, const Mesh1D& fine) {
  if (coarse.length != fine.length) {
    throw InvalidArgument("prolongate: meshes cover different intervals");
  }
  if (fine.n_cells % coarse.n_cells != 0) {
    throw InvalidArgument("prolongate: meshes are not nested");
  }
  int stride = fine.n_cells / coarse.n_cells;
  int s = stride;
  while (s > 1) {
    if (s % 2 != 0) {
      throw InvalidArgument("prolongate: refinement is not dyadic");
    }
    s /= 2;
  }
  return stride;
}

}  // namespace

Vec prolongate(const FemOperators& coarse, const FemOperators& fine,
               const Vec& v) {
  if (v.size() != coarse.n_dof) {
    throw InvalidArgument("prolongate: dimension mismatch");
  }
  const int stride = refinement_stride(coarse.mesh, fine.mesh);
  const int nc = coarse.mesh.n_cells;
  Vec r(fine.n_dof);
  // Fine node j sits at coarse-cell index j/stride with exact rational offset
  // (j mod stride)/stride; interpolate the coarse P1 field there.
  for (int j = 1; j < fine.mesh.n_cells; ++j) {
    const int cell = j / stride;
    const int rem = j % stride;
    if (rem == 0) {
      r[j - 1] = v[cell - 1];  // coincides with a coarse interior node
      continue;
    }
    const double frac = static_cast<double>(rem) / stride;
    const double vl = (cell == 0) ? 0.0 : v[cell - 1];
    const double vr = (cell == nc - 1) ? 0.0 : v[cell];
    r[j - 1] = vl + frac * (vr - vl);
  }
  return r;
}

Vec prolongate_p0(const Mesh1D& coarse, const Mesh1D& fine, const Vec& c) {
  if (c.size() != coarse.n_cells) {
    throw InvalidArgument("prolongate_p0: dimension mismatch");
  }
  const int stride = refinement_stride(coarse, fine);
  Vec r(fine.n_cells);
  for (int k = 0; k < fine.n_cells; ++k) r[k] = c[k / stride];
  return r;
}

}  // namespace slqheat
