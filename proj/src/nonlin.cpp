#include "eqrec/nonlin.hpp"

namespace eqrec {

Matrix leaky_relu_forward(const Eigen::Ref<const Matrix>& x) {
  return x.array().max(0.0) + 0.01 * x.array().min(0.0);
}

Matrix leaky_relu_backward(const Eigen::Ref<const Matrix>& x,
                           const Eigen::Ref<const Matrix>& dout) {
  // slope 1 where x > 0, 0.01 elsewhere (including exactly 0)
  return dout.array() * (x.array() > 0.0).select(Matrix::Constant(x.rows(), x.cols(), 1.0),
                                                 Matrix::Constant(x.rows(), x.cols(), 0.01))
                            .array();
}

FeatureField leaky_relu(const FeatureField& f) {
  if (!f.type.permutation_like())
    throw std::invalid_argument(
        "leaky_relu: blocks must carry trivial or regular representations");
  FeatureField out = f;
  out.data = leaky_relu_forward(f.data);
  return out;
}

Matrix norm_nonlin_forward(const Eigen::Ref<const Matrix>& x, const FieldType& type,
                           ScalarFn fn) {
  Matrix out(x.rows(), x.cols());
  for (const auto& [off, rep] : type.field_layout()) {
    const int d = rep->dim();
    for (Index p = 0; p < x.rows(); ++p) {
      const Scalar n = x.row(p).segment(off, d).norm();
      out.row(p).segment(off, d) = x.row(p).segment(off, d) * fn.value(n);
    }
  }
  return out;
}

Matrix norm_nonlin_backward(const Eigen::Ref<const Matrix>& x, const FieldType& type,
                            ScalarFn fn, const Eigen::Ref<const Matrix>& dout) {
  Matrix din(x.rows(), x.cols());
  for (const auto& [off, rep] : type.field_layout()) {
    const int d = rep->dim();
    for (Index p = 0; p < x.rows(); ++p) {
      const auto v = x.row(p).segment(off, d);
      const auto g = dout.row(p).segment(off, d);
      const Scalar n = v.norm();
      if (n == 0.0) {
        din.row(p).segment(off, d) = g * fn.value(0.0);
      } else {
        const Scalar inner = v.dot(g);
        din.row(p).segment(off, d) = g * fn.value(n) + v * (fn.deriv(n) * inner / n);
      }
    }
  }
  return din;
}

FeatureField norm_nonlinearity(const FeatureField& f, ScalarFn fn) {
  FeatureField out = f;
  out.data = norm_nonlin_forward(f.data, f.type, fn);
  return out;
}

}  // namespace eqrec
