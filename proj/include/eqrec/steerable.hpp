#pragma once

#include "eqrec/field.hpp"
#include "eqrec/representation.hpp"

namespace eqrec {

// Specification of a constrained convolution kernel space: filters of odd
// size s x s mapping rep_in-typed channels to rep_out-typed channels,
// subject to k(Rx) = pi_out(R) k(x) pi_in(R^-1) for all R in Z_m.
struct KernelSpec {
  Representation rep_in;
  Representation rep_out;
  int size = 3;
  CyclicGroup group{1};

  KernelSpec(Representation in, Representation out, int s, CyclicGroup g)
      : rep_in(std::move(in)), rep_out(std::move(out)), size(s), group(g) {
    if (s < 1 || s % 2 == 0) throw std::invalid_argument("KernelSpec: size must be odd");
    if (rep_in.order() != g.m || rep_out.order() != g.m)
      throw std::invalid_argument("KernelSpec: representations and group disagree on m");
  }

  int dim_in() const { return rep_in.dim(); }
  int dim_out() const { return rep_out.dim(); }
  // Kernel entries flattened as ((o * dim_in + i) * s + gy) * s + gx.
  int space_dim() const { return dim_out() * dim_in() * size * size; }
  bool on_grid() const {
    for (int k = 0; k < group.m; ++k)
      if (!group.on_grid(k)) return false;
    return true;
  }
};

// Orthonormal basis (Frobenius inner product) of the constraint-satisfying
// kernel subspace. Columns of `elements` are flattened kernels.
struct KernelBasis {
  KernelSpec spec;
  Matrix elements;  // space_dim x count
  bool exact = true;

  int count() const { return int(elements.cols()); }
};

// The element-k "twirl" gamma_k : k(x) -> pi_out(R_k)^-1 k(R_k x) pi_in(R_k)
// as a dense matrix on the flattened kernel space. Grid rotation of the
// filter stencil uses the same resampling as act_on_field.
Matrix kernel_rotation_operator(const KernelSpec& spec, int k);

// Group average of the twirls; for on-grid groups an exact symmetric
// idempotent whose image is the constraint-satisfying subspace.
Matrix equivariance_projector(const KernelSpec& spec);

// Basis of the projector's eigenvalue-one space (threshold 0.5 on the
// spectrum). Reference construction.
KernelBasis kernel_basis_nullspace(const KernelSpec& spec);

// Same subspace assembled via the irreducible decomposition: solve the
// constraint per irrep pair and conjugate by the change-of-basis matrices.
// Cross-check path for kernel_basis_nullspace.
KernelBasis kernel_basis_irrep(const KernelSpec& spec);

// Linear combination of basis elements, returned in flattened layout.
Vector expand_kernel(const KernelBasis& basis, const Eigen::Ref<const Vector>& weights);

// Largest constraint violation max_k |gamma_k kernel - kernel| (infinity
// norm over entries).
double constraint_residual(const KernelSpec& spec, const Eigen::Ref<const Vector>& kernel);

}  // namespace eqrec
