#pragma once

#include "eqrec/rng.hpp"
#include "eqrec/types.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace eqrec {

// Linear measurement operator with matched adjoint. Images and measurements
// travel as matrices whose layout the concrete operator defines; images are
// always (H*W) x channels rasters.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;

  virtual Matrix apply(const Matrix& u) const = 0;
  virtual Matrix adjoint(const Matrix& y) const = 0;

  virtual Index image_h() const = 0;
  virtual Index image_w() const = 0;
  virtual Index image_channels() const = 0;
  virtual Index meas_rows() const = 0;
  virtual Index meas_cols() const = 0;

  // Power-iteration estimate of the operator norm |A| (largest singular
  // value); deterministic for a given rng stream.
  double norm_estimate(Rng rng, int iters = 60) const;
};

class IdentityOp final : public ForwardOperator {
 public:
  IdentityOp(Index h, Index w, Index channels = 1) : h_(h), w_(w), c_(channels) {}
  Matrix apply(const Matrix& u) const override { return u; }
  Matrix adjoint(const Matrix& y) const override { return y; }
  Index image_h() const override { return h_; }
  Index image_w() const override { return w_; }
  Index image_channels() const override { return c_; }
  Index meas_rows() const override { return h_ * w_; }
  Index meas_cols() const override { return c_; }

 private:
  Index h_, w_, c_;
};

// Pixelwise masking; apply == adjoint == diag(mask).
class InpaintingOp final : public ForwardOperator {
 public:
  InpaintingOp(Index h, Index w, Vector mask);
  Matrix apply(const Matrix& u) const override;
  Matrix adjoint(const Matrix& y) const override { return apply(y); }
  Index image_h() const override { return h_; }
  Index image_w() const override { return w_; }
  Index image_channels() const override { return 1; }
  Index meas_rows() const override { return h_ * w_; }
  Index meas_cols() const override { return 1; }
  const Vector& mask() const { return mask_; }

 private:
  Index h_, w_;
  Vector mask_;
};

// Unitary 2D DFT followed by a Cartesian row mask. Complex data is carried
// as two real channels (real, imaginary); masked-out rows stay zero.
class MaskedFourierOp final : public ForwardOperator {
 public:
  MaskedFourierOp(Index h, Index w, std::vector<std::uint8_t> row_mask);
  Matrix apply(const Matrix& u) const override;
  Matrix adjoint(const Matrix& y) const override;
  Index image_h() const override { return h_; }
  Index image_w() const override { return w_; }
  Index image_channels() const override { return 2; }
  Index meas_rows() const override { return h_ * w_; }
  Index meas_cols() const override { return 2; }
  const std::vector<std::uint8_t>& row_mask() const { return mask_; }

  ComplexMatrix dft2(const ComplexMatrix& u) const;   // unitary
  ComplexMatrix idft2(const ComplexMatrix& k) const;  // unitary inverse

 private:
  Index h_, w_;
  std::vector<std::uint8_t> mask_;
  ComplexMatrix fh_, fw_;
};

struct RadonGeometry {
  Index n = 64;        // image is n x n, unit pixel spacing
  int n_views = 50;    // uniformly spaced angles in [0, pi)
  Index n_det = 0;     // 0: default ceil(n * sqrt(2)), unit spacing, centered

  Index detectors() const {
    return n_det > 0 ? n_det : Index(std::ceil(double(n) * std::sqrt(2.0)));
  }
  double angle(int view) const { return M_PI * double(view) / double(n_views); }
};

// Parallel-beam ray transform. Line integrals are ray-driven sums of
// bilinear samples with step 0.5 px and zero extension; the operator is
// materialized as a sparse matrix so the adjoint is the exact transpose.
class RadonOp final : public ForwardOperator {
 public:
  explicit RadonOp(RadonGeometry geometry);
  Matrix apply(const Matrix& u) const override;
  Matrix adjoint(const Matrix& y) const override;
  Index image_h() const override { return geom_.n; }
  Index image_w() const override { return geom_.n; }
  Index image_channels() const override { return 1; }
  Index meas_rows() const override { return Index(geom_.n_views) * geom_.detectors(); }
  Index meas_cols() const override { return 1; }
  const RadonGeometry& geometry() const { return geom_; }

  // Ramp-filtered backprojection scaled by pi / n_views.
  Matrix fbp(const Matrix& sinogram) const;

 private:
  RadonGeometry geom_;
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> system_;
};

inline Matrix radon_apply(const RadonOp& op, const Matrix& u) { return op.apply(u); }
inline Matrix radon_adjoint(const RadonOp& op, const Matrix& s) { return op.adjoint(s); }

// base scaled by a constant; used to hand the unrolled networks a spectrally
// normalized operator while the physical one keeps its calibrated units.
class ScaledOp final : public ForwardOperator {
 public:
  ScaledOp(const ForwardOperator& base, double scale) : base_(&base), scale_(scale) {}
  Matrix apply(const Matrix& u) const override { return scale_ * base_->apply(u); }
  Matrix adjoint(const Matrix& y) const override { return scale_ * base_->adjoint(y); }
  Index image_h() const override { return base_->image_h(); }
  Index image_w() const override { return base_->image_w(); }
  Index image_channels() const override { return base_->image_channels(); }
  Index meas_rows() const override { return base_->meas_rows(); }
  Index meas_cols() const override { return base_->meas_cols(); }
  double scale() const { return scale_; }

 private:
  const ForwardOperator* base_;
  double scale_;
};

// Gradient of E(u) = 1/2 |A u - y|^2, i.e. A^T (A u - y).
Matrix data_grad(const ForwardOperator& a, const Matrix& u, const Matrix& y);

// Variable-density Cartesian row mask: fully sampled central band plus
// Bernoulli rows with probability proportional to exp(-d^2 / (2 sigma^2)),
// scaled to the target sampling fraction.
std::vector<std::uint8_t> variable_density_rows(Index h, double target_fraction,
                                                double center_band_fraction,
                                                double sigma_rows, Rng& rng);

}  // namespace eqrec
