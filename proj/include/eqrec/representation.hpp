#pragma once

#include "eqrec/group.hpp"
#include "eqrec/types.hpp"

#include <memory>
#include <vector>

namespace eqrec {

// Real representation of Z_m. The only irreducible real representations of
// Z_m are the trivial one (f = 0), the sign representation (f = m/2 for even
// m) and 2D rotation blocks with angular frequency 0 < f < m/2; conjugate
// complex pairs are realized as the rotation blocks.
class Representation {
 public:
  enum class Kind { Trivial, Regular, Irrep, DirectSum };

  static Representation trivial(int m);
  static Representation regular(int m);
  static Representation irrep(int m, int freq);
  // parts given as (representation, multiplicity); optional orthogonal
  // change of basis Q so that matrix(k) = Q * blockdiag(parts) * Q^T.
  static Representation direct_sum(std::vector<std::pair<Representation, int>> parts,
                                   Matrix basis_change = Matrix());

  Kind kind() const { return kind_; }
  int order() const { return m_; }
  int dim() const { return dim_; }
  int frequency() const { return freq_; }
  bool has_basis_change() const { return q_.size() > 0; }
  const Matrix& basis_change() const { return q_; }
  const std::vector<std::pair<Representation, int>>& parts() const { return parts_; }

  // The dim x dim orthogonal matrix of group element k.
  Matrix matrix(int k) const;

  // Trace of matrix(k); cheap, used by counting oracles.
  double character(int k) const;

  // Flattened list of irreducible constituents together with the orthogonal
  // matrix Q aligning this representation with their block-diagonal direct
  // sum: matrix(k) = Q * blockdiag(irreps) * Q^T.
  struct Decomposition {
    std::vector<Representation> irreps;
    Matrix q;
  };
  Decomposition decompose() const;

  bool is_permutation_like() const;  // trivial or regular (or sums thereof)

 private:
  Representation() = default;
  Kind kind_ = Kind::Trivial;
  int m_ = 1;
  int dim_ = 1;
  int freq_ = 0;
  Matrix q_;
  std::vector<std::pair<Representation, int>> parts_;
};

inline Matrix rep_matrix(const Representation& rho, int k) { return rho.matrix(k); }

// Irreducible pieces of the regular representation of Z_m in a fixed order
// (trivial, rotation blocks f = 1.., sign for even m) and the orthogonal
// real-Fourier matrix Q with Q * blockdiag(irreps(k)) * Q^T = regular(k).
Representation::Decomposition decompose_regular(int m);

}  // namespace eqrec
