#pragma once

#include "eqrec/field.hpp"

namespace eqrec {

// Scalar functions usable inside the norm nonlinearity.
struct ScalarFn {
  enum class Kind { Identity, Tanh } kind = Kind::Identity;

  double value(double t) const {
    switch (kind) {
      case Kind::Identity: return t;
      case Kind::Tanh: return std::tanh(t);
    }
    return t;
  }
  double deriv(double t) const {
    switch (kind) {
      case Kind::Identity: return 1.0;
      case Kind::Tanh: {
        const double y = std::tanh(t);
        return 1.0 - y * y;
      }
    }
    return 1.0;
  }
};

// phi(x) = x for x > 0, 0.01 x otherwise; the derivative at exactly 0 is
// taken as 0.01.
inline double leaky_relu_scalar(double x) { return x > 0.0 ? x : 0.01 * x; }
inline double leaky_relu_deriv(double x) { return x > 0.0 ? 1.0 : 0.01; }

Matrix leaky_relu_forward(const Eigen::Ref<const Matrix>& x);
Matrix leaky_relu_backward(const Eigen::Ref<const Matrix>& x,
                           const Eigen::Ref<const Matrix>& dout);

// Typed wrapper: rejects field types whose representations do not act by
// permutations (pointwise maps would break equivariance there).
FeatureField leaky_relu(const FeatureField& f);

// v -> v * phi(|v|) per pixel and per field.
Matrix norm_nonlin_forward(const Eigen::Ref<const Matrix>& x, const FieldType& type,
                           ScalarFn fn);
Matrix norm_nonlin_backward(const Eigen::Ref<const Matrix>& x, const FieldType& type,
                            ScalarFn fn, const Eigen::Ref<const Matrix>& dout);

FeatureField norm_nonlinearity(const FeatureField& f, ScalarFn fn);

}  // namespace eqrec
