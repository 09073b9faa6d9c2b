#include "eqrec/representation.hpp"

namespace eqrec {

Representation Representation::trivial(int m) {
  Representation r;
  r.kind_ = Kind::Trivial;
  r.m_ = m;
  r.dim_ = 1;
  return r;
}

Representation Representation::regular(int m) {
  Representation r;
  r.kind_ = Kind::Regular;
  r.m_ = m;
  r.dim_ = m;
  return r;
}

Representation Representation::irrep(int m, int freq) {
  if (freq < 0 || 2 * freq > m)
    throw std::invalid_argument("Representation::irrep: frequency out of range");
  Representation r;
  r.kind_ = Kind::Irrep;
  r.m_ = m;
  r.freq_ = freq;
  r.dim_ = (freq == 0 || 2 * freq == m) ? 1 : 2;
  return r;
}

Representation Representation::direct_sum(
    std::vector<std::pair<Representation, int>> parts, Matrix basis_change) {
  if (parts.empty()) throw std::invalid_argument("direct_sum: no parts");
  Representation r;
  r.kind_ = Kind::DirectSum;
  r.m_ = parts.front().first.order();
  int dim = 0;
  for (const auto& [p, mult] : parts) {
    if (p.order() != r.m_) throw std::invalid_argument("direct_sum: mixed group orders");
    if (mult < 1) throw std::invalid_argument("direct_sum: multiplicity must be >= 1");
    dim += p.dim() * mult;
  }
  r.dim_ = dim;
  if (basis_change.size() > 0) {
    if (basis_change.rows() != dim || basis_change.cols() != dim)
      throw std::invalid_argument("direct_sum: basis change has wrong shape");
    r.q_ = std::move(basis_change);
  }
  r.parts_ = std::move(parts);
  return r;
}

Matrix Representation::matrix(int k) const {
  k = ((k % m_) + m_) % m_;
  switch (kind_) {
    case Kind::Trivial:
      return Matrix::Identity(1, 1);
    case Kind::Regular: {
      // rho(g_k) e_j = e_{k+j mod m}
      Matrix p = Matrix::Zero(m_, m_);
      for (int j = 0; j < m_; ++j) p((k + j) % m_, j) = 1.0;
      return p;
    }
    case Kind::Irrep: {
      if (dim_ == 1) {
        Matrix s(1, 1);
        s(0, 0) = (freq_ == 0) ? 1.0 : (k % 2 == 0 ? 1.0 : -1.0);
        return s;
      }
      const double a = 2.0 * M_PI * double(freq_) * double(k) / double(m_);
      const double c = snap_unit(std::cos(a)), s = snap_unit(std::sin(a));
      Matrix r(2, 2);
      r << c, -s, s, c;
      return r;
    }
    case Kind::DirectSum: {
      Matrix b = Matrix::Zero(dim_, dim_);
      int off = 0;
      for (const auto& [p, mult] : parts_) {
        const Matrix pk = p.matrix(k);
        for (int c = 0; c < mult; ++c) {
          b.block(off, off, p.dim(), p.dim()) = pk;
          off += p.dim();
        }
      }
      if (q_.size() > 0) return q_ * b * q_.transpose();
      return b;
    }
  }
  throw std::logic_error("unreachable");
}

double Representation::character(int k) const {
  return matrix(k).trace();
}

bool Representation::is_permutation_like() const {
  switch (kind_) {
    case Kind::Trivial:
    case Kind::Regular:
      return true;
    case Kind::Irrep:
      return freq_ == 0;
    case Kind::DirectSum: {
      if (q_.size() > 0) return false;
      for (const auto& [p, mult] : parts_)
        if (!p.is_permutation_like()) return false;
      return true;
    }
  }
  return false;
}

Representation::Decomposition Representation::decompose() const {
  switch (kind_) {
    case Kind::Trivial:
      return {{trivial(m_)}, Matrix::Identity(1, 1)};
    case Kind::Irrep:
      return {{*this}, Matrix::Identity(dim_, dim_)};
    case Kind::Regular:
      return decompose_regular(m_);
    case Kind::DirectSum: {
      Decomposition out;
      out.q = Matrix::Zero(dim_, dim_);
      int off = 0;
      for (const auto& [p, mult] : parts_) {
        for (int c = 0; c < mult; ++c) {
          Decomposition sub = p.decompose();
          out.q.block(off, off, p.dim(), p.dim()) = sub.q;
          for (auto& ir : sub.irreps) out.irreps.push_back(ir);
          off += p.dim();
        }
      }
      if (q_.size() > 0) out.q = q_ * out.q;
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

Representation::Decomposition decompose_regular(int m) {
  std::vector<Representation> irreps;
  Matrix q = Matrix::Zero(m, m);
  int col = 0;
  irreps.push_back(Representation::trivial(m));
  for (int j = 0; j < m; ++j) q(j, col) = 1.0 / std::sqrt(double(m));
  ++col;
  for (int f = 1; 2 * f < m; ++f) {
    irreps.push_back(Representation::irrep(m, f));
    const double scale = std::sqrt(2.0 / double(m));
    for (int j = 0; j < m; ++j) {
      const double a = 2.0 * M_PI * double(f) * double(j) / double(m);
      q(j, col) = scale * std::cos(a);
      q(j, col + 1) = scale * std::sin(a);
    }
    col += 2;
  }
  if (m % 2 == 0) {
    irreps.push_back(Representation::irrep(m, m / 2));
    for (int j = 0; j < m; ++j)
      q(j, col) = (j % 2 == 0 ? 1.0 : -1.0) / std::sqrt(double(m));
    ++col;
  }
  return {std::move(irreps), std::move(q)};
}

}  // namespace eqrec
