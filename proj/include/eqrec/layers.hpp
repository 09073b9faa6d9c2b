#pragma once

#include "eqrec/field.hpp"
#include "eqrec/rng.hpp"
#include "eqrec/steerable.hpp"

#include <vector>

namespace eqrec {

// 2D convolution layer, stride 1, zero "same" padding. The equivariant
// variant stores coefficients in the steerable basis of each
// (output block, input block) pair; the ordinary variant stores the kernel
// entries directly. Bias is one scalar per output field, broadcast across
// the dim of that field's representation (a per-channel bias would break
// permutation equivariance on regular fields).
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(FieldType in_type, FieldType out_type, int ksize, CyclicGroup group,
            bool equivariant);

  const FieldType& in_type() const { return in_type_; }
  const FieldType& out_type() const { return out_type_; }
  int ksize() const { return ksize_; }
  bool equivariant() const { return equivariant_; }
  const CyclicGroup& group() const { return group_; }
  int in_channels() const { return in_type_.channels(); }
  int out_channels() const { return out_type_.channels(); }

  int coeff_count() const { return int(coeffs.size()); }
  int bias_count() const { return int(bias.size()); }
  int param_count() const { return coeff_count() + bias_count(); }

  // Kernel in im2col layout: (Cin * s * s) x Cout, row i * s * s + t.
  Matrix kernel_matrix() const;

  // Chain rule through the basis expansion: routes a kernel-space gradient
  // (same layout as kernel_matrix) into grad_coeffs.
  void accumulate_kernel_grad(const Matrix& dkernel);

  // Construct an unconstrained layer realizing exactly the same map as an
  // equivariant one (the ordinary parameterization is a superset).
  ConvLayer to_ordinary() const;

  const std::vector<KernelBasis>& pair_bases() const { return pair_bases_; }

  Vector coeffs;
  Vector bias;
  Vector grad_coeffs;
  Vector grad_bias;

 private:
  FieldType in_type_, out_type_;
  int ksize_ = 3;
  CyclicGroup group_{1};
  bool equivariant_ = false;
  // out_block-major over in_blocks; empty when ordinary
  std::vector<KernelBasis> pair_bases_;
  // coefficient offset per (ob, ib) pair (then of-major, if-minor, basis index)
  std::vector<int> pair_offsets_;

  template <typename Fn>
  void for_each_pair(Fn&& fn) const;
};

// He initialization generalised to the coefficient basis: zero-mean normal
// coefficients scaled so realized kernel entries have variance 2 / fan_in
// in expectation (fan_in = input channels * s^2). Biases are zeroed.
void he_init(ConvLayer& layer, Rng& rng);

// Cross-correlation with zero padding; returns (H*W) x Cout.
Matrix conv2d_forward(const Eigen::Ref<const Matrix>& in, Index h, Index w,
                      const ConvLayer& layer);

// Reverse-mode step: accumulates kernel/bias gradients into the layer and
// returns the gradient with respect to the input.
Matrix conv2d_backward(const Eigen::Ref<const Matrix>& in, Index h, Index w,
                       ConvLayer& layer, const Eigen::Ref<const Matrix>& dout);

// Typed convenience wrapper used by tests.
FeatureField conv2d(const FeatureField& f, const ConvLayer& layer);

}  // namespace eqrec
