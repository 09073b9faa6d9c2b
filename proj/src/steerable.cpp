#include "eqrec/steerable.hpp"

#include <Eigen/Eigenvalues>

namespace eqrec {

namespace {

// Orthonormalize the columns of the subspace projector applied to canonical
// unit vectors; modified Gram-Schmidt with one re-orthogonalization pass.
// Gives a basis of im(P) that does not depend on eigensolver vagaries.
Matrix canonical_span_basis(const Matrix& projector, int rank) {
  const Index d = projector.rows();
  Matrix basis(d, rank);
  int have = 0;
  for (Index i = 0; i < d && have < rank; ++i) {
    Vector v = projector.col(i);  // P e_i
    for (int pass = 0; pass < 2; ++pass)
      for (int b = 0; b < have; ++b) v -= basis.col(b).dot(v) * basis.col(b);
    const double n = v.norm();
    if (n > 1e-8) basis.col(have++) = v / n;
  }
  if (have != rank)
    throw numerical_error("kernel basis: span enumeration lost rank");
  return basis;
}

}  // namespace

Matrix kernel_rotation_operator(const KernelSpec& spec, int k) {
  const int s = spec.size;
  const int ss = s * s;
  const int din = spec.dim_in(), dout = spec.dim_out();
  const Matrix py_inv = spec.rep_out.matrix(spec.group.inverse(k));
  const Matrix px = spec.rep_in.matrix(k);
  // sampling positions R_k x: plan for the isometry with rotation index -k
  const ResamplePlan plan =
      plan_resample(PlanarIsometry(Vector2::Zero(), spec.group.inverse(k), spec.group), s, s);
  Matrix gamma = Matrix::Zero(spec.space_dim(), spec.space_dim());
  auto idx = [&](int o, int i, int t) { return (o * din + i) * ss + t; };
  for (int t = 0; t < ss; ++t) {
    for (int slot = 0; slot < 4; ++slot) {
      const Index tp = plan.src[std::size_t(4 * t + slot)];
      if (tp < 0) break;
      const double wspat = plan.weight[std::size_t(4 * t + slot)];
      for (int o = 0; o < dout; ++o)
        for (int op = 0; op < dout; ++op) {
          if (py_inv(o, op) == 0.0) continue;
          for (int i = 0; i < din; ++i)
            for (int ip = 0; ip < din; ++ip) {
              const double v = py_inv(o, op) * wspat * px(ip, i);
              if (v != 0.0) gamma(idx(o, i, t), idx(op, ip, int(tp))) += v;
            }
        }
    }
  }
  return gamma;
}

Matrix equivariance_projector(const KernelSpec& spec) {
  const int d = spec.space_dim();
  Matrix p = Matrix::Zero(d, d);
  for (int k = 0; k < spec.group.m; ++k) p += kernel_rotation_operator(spec, k);
  p /= double(spec.group.m);
  return p;
}

KernelBasis kernel_basis_nullspace(const KernelSpec& spec) {
  const Matrix p = equivariance_projector(spec);
  const Matrix sym = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success)
    throw numerical_error("kernel_basis_nullspace: eigensolver failed");
  const Vector& vals = eig.eigenvalues();  // ascending
  const int d = spec.space_dim();
  int count = 0;
  for (int i = 0; i < d; ++i)
    if (vals[i] >= 0.5) ++count;
  KernelBasis basis{spec, Matrix(d, 0), spec.on_grid()};
  if (count == 0) return basis;

  Matrix sel(d, count);
  bool all_unit = true;
  for (int i = 0; i < count; ++i) {
    sel.col(i) = eig.eigenvectors().col(d - 1 - i);  // descending eigenvalue
    all_unit = all_unit && vals[d - 1 - i] >= 1.0 - 1e-9;
  }
  if (all_unit) {
    // degenerate eigenvalue-1 block: replace by the canonical enumeration
    basis.elements = canonical_span_basis(sel * sel.transpose(), count);
  } else {
    basis.elements = std::move(sel);
  }
  return basis;
}

KernelBasis kernel_basis_irrep(const KernelSpec& spec) {
  const auto dx = spec.rep_in.decompose();
  const auto dy = spec.rep_out.decompose();
  const int s = spec.size, ss = s * s;
  const int din = spec.dim_in(), dout = spec.dim_out();

  std::vector<Vector> columns;
  int row_off = 0;
  for (const auto& iry : dy.irreps) {
    int col_off = 0;
    for (const auto& irx : dx.irreps) {
      const KernelSpec pair_spec(irx, iry, s, spec.group);
      const KernelBasis pair_basis = kernel_basis_nullspace(pair_spec);
      const int di = irx.dim(), dj = iry.dim();
      for (int b = 0; b < pair_basis.count(); ++b) {
        // embed: k_full[o,i,t] = sum_{r,q} QY[o, row_off+r] elem[r,q,t] QX[i, col_off+q]
        Vector full = Vector::Zero(spec.space_dim());
        for (int r = 0; r < dj; ++r)
          for (int q = 0; q < di; ++q)
            for (int t = 0; t < ss; ++t) {
              const double e = pair_basis.elements((r * di + q) * ss + t, b);
              if (e == 0.0) continue;
              for (int o = 0; o < dout; ++o) {
                const double qy = dy.q(o, row_off + r);
                if (qy == 0.0) continue;
                for (int i = 0; i < din; ++i)
                  full[(o * din + i) * ss + t] += qy * e * dx.q(i, col_off + q);
              }
            }
        columns.push_back(std::move(full));
      }
      col_off += di;
    }
    row_off += iry.dim();
  }

  KernelBasis basis{spec, Matrix(spec.space_dim(), Index(columns.size())), spec.on_grid()};
  for (std::size_t i = 0; i < columns.size(); ++i)
    basis.elements.col(Index(i)) = columns[i];
  return basis;
}

Vector expand_kernel(const KernelBasis& basis, const Eigen::Ref<const Vector>& weights) {
  if (weights.size() != basis.count())
    throw std::invalid_argument("expand_kernel: weight count does not match basis");
  if (basis.count() == 0) return Vector::Zero(basis.spec.space_dim());
  return basis.elements * weights;
}

double constraint_residual(const KernelSpec& spec, const Eigen::Ref<const Vector>& kernel) {
  double worst = 0.0;
  for (int k = 0; k < spec.group.m; ++k) {
    const Matrix gamma = kernel_rotation_operator(spec, k);
    worst = std::max(worst, (gamma * kernel - kernel).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace eqrec
