#include "eqrec/forward_op.hpp"

#include <complex>

namespace eqrec {

double ForwardOperator::norm_estimate(Rng rng, int iters) const {
  Matrix v(image_h() * image_w(), image_channels());
  for (Index j = 0; j < v.cols(); ++j)
    for (Index i = 0; i < v.rows(); ++i) v(i, j) = rng.normal();
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Matrix w = adjoint(apply(v));
    lambda = std::sqrt(w.squaredNorm() / std::max(v.squaredNorm(), 1e-300));
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
  }
  return std::sqrt(lambda);
}

InpaintingOp::InpaintingOp(Index h, Index w, Vector mask)
    : h_(h), w_(w), mask_(std::move(mask)) {
  if (mask_.size() != h_ * w_)
    throw std::invalid_argument("InpaintingOp: mask size mismatch");
}

Matrix InpaintingOp::apply(const Matrix& u) const {
  if (u.rows() != h_ * w_) throw std::invalid_argument("InpaintingOp: shape mismatch");
  return mask_.asDiagonal() * u;
}

namespace {

ComplexMatrix unitary_dft_matrix(Index n) {
  ComplexMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(double(n));
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) {
      const double ang = -2.0 * M_PI * double(a) * double(b) / double(n);
      f(a, b) = std::complex<double>(std::cos(ang) * scale, std::sin(ang) * scale);
    }
  return f;
}

}  // namespace

MaskedFourierOp::MaskedFourierOp(Index h, Index w, std::vector<std::uint8_t> row_mask)
    : h_(h), w_(w), mask_(std::move(row_mask)),
      fh_(unitary_dft_matrix(h)), fw_(unitary_dft_matrix(w)) {
  if (Index(mask_.size()) != h_)
    throw std::invalid_argument("MaskedFourierOp: mask must have one entry per k-space row");
}

ComplexMatrix MaskedFourierOp::dft2(const ComplexMatrix& u) const {
  return fh_ * u * fw_.transpose();
}

ComplexMatrix MaskedFourierOp::idft2(const ComplexMatrix& k) const {
  return fh_.adjoint() * k * fw_.conjugate();
}

Matrix MaskedFourierOp::apply(const Matrix& u) const {
  if (u.rows() != h_ * w_ || u.cols() != 2)
    throw std::invalid_argument("MaskedFourierOp: expected (H*W) x 2 input");
  ComplexMatrix img(h_, w_);
  for (Index r = 0; r < h_; ++r)
    for (Index c = 0; c < w_; ++c) {
      const Index p = raster_index(r, c, w_);
      img(r, c) = std::complex<double>(u(p, 0), u(p, 1));
    }
  ComplexMatrix k = dft2(img);
  Matrix out = Matrix::Zero(h_ * w_, 2);
  for (Index r = 0; r < h_; ++r) {
    if (!mask_[std::size_t(r)]) continue;
    for (Index c = 0; c < w_; ++c) {
      const Index p = raster_index(r, c, w_);
      out(p, 0) = k(r, c).real();
      out(p, 1) = k(r, c).imag();
    }
  }
  return out;
}

Matrix MaskedFourierOp::adjoint(const Matrix& y) const {
  if (y.rows() != h_ * w_ || y.cols() != 2)
    throw std::invalid_argument("MaskedFourierOp: expected (H*W) x 2 measurements");
  ComplexMatrix k = ComplexMatrix::Zero(h_, w_);
  for (Index r = 0; r < h_; ++r) {
    if (!mask_[std::size_t(r)]) continue;
    for (Index c = 0; c < w_; ++c) {
      const Index p = raster_index(r, c, w_);
      k(r, c) = std::complex<double>(y(p, 0), y(p, 1));
    }
  }
  ComplexMatrix img = idft2(k);
  Matrix out(h_ * w_, 2);
  for (Index r = 0; r < h_; ++r)
    for (Index c = 0; c < w_; ++c) {
      const Index p = raster_index(r, c, w_);
      out(p, 0) = img(r, c).real();
      out(p, 1) = img(r, c).imag();
    }
  return out;
}

RadonOp::RadonOp(RadonGeometry geometry) : geom_(geometry) {
  const Index n = geom_.n;
  const Index ndet = geom_.detectors();
  const double step = 0.5;
  const double half_diag = double(n) * std::sqrt(2.0) / 2.0 + 1.0;
  const int n_samples = int(std::floor(2.0 * half_diag / step)) + 1;
  const double cx = double(n - 1) / 2.0, cy = double(n - 1) / 2.0;

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(std::size_t(geom_.n_views) * std::size_t(ndet) * 48);
  for (int v = 0; v < geom_.n_views; ++v) {
    const double theta = geom_.angle(v);
    const double es_x = snap_unit(std::cos(theta)), es_y = snap_unit(std::sin(theta));
    const double er_x = -es_y, er_y = es_x;
    for (Index d = 0; d < ndet; ++d) {
      const double s = double(d) - double(ndet - 1) / 2.0;
      const Index row = Index(v) * ndet + d;
      for (int q = 0; q < n_samples; ++q) {
        const double tau = -half_diag + step * double(q);
        const double x = s * es_x + tau * er_x;
        const double y = s * es_y + tau * er_y;
        const double col_f = x + cx;
        const double row_f = cy - y;
        const double fr = std::floor(row_f), fc = std::floor(col_f);
        const double ar = row_f - fr, ac = col_f - fc;
        const double wts[4] = {(1 - ar) * (1 - ac), (1 - ar) * ac, ar * (1 - ac), ar * ac};
        const Index rows[4] = {Index(fr), Index(fr), Index(fr) + 1, Index(fr) + 1};
        const Index cols[4] = {Index(fc), Index(fc) + 1, Index(fc), Index(fc) + 1};
        for (int i = 0; i < 4; ++i) {
          if (wts[i] == 0.0) continue;
          if (rows[i] < 0 || rows[i] >= n || cols[i] < 0 || cols[i] >= n) continue;
          triplets.emplace_back(row, raster_index(rows[i], cols[i], n),
                                Scalar(wts[i] * step));
        }
      }
    }
  }
  system_.resize(Index(geom_.n_views) * ndet, n * n);
  system_.setFromTriplets(triplets.begin(), triplets.end());
  system_.makeCompressed();
}

Matrix RadonOp::apply(const Matrix& u) const {
  if (u.rows() != geom_.n * geom_.n || u.cols() != 1)
    throw std::invalid_argument("RadonOp: expected (n*n) x 1 image raster");
  return system_ * u;
}

Matrix RadonOp::adjoint(const Matrix& y) const {
  if (y.rows() != meas_rows() || y.cols() != 1)
    throw std::invalid_argument("RadonOp: sinogram shape mismatch");
  return system_.transpose() * y;
}

Matrix RadonOp::fbp(const Matrix& sinogram) const {
  const Index ndet = geom_.detectors();
  Index pad = 1;
  while (pad < 2 * ndet) pad *= 2;
  const ComplexMatrix f = unitary_dft_matrix(pad);
  // |frequency| in cycles per detector sample
  Vector ramp(pad);
  for (Index k = 0; k < pad; ++k) {
    const Index folded = std::min(k, pad - k);
    ramp[k] = double(folded) / double(pad);
  }
  Matrix filtered(meas_rows(), 1);
  Eigen::VectorXcd padded(pad);
  for (int v = 0; v < geom_.n_views; ++v) {
    padded.setZero();
    for (Index d = 0; d < ndet; ++d)
      padded[d] = sinogram(Index(v) * ndet + d, 0);
    Eigen::VectorXcd spec = f * padded;
    spec.array() *= ramp.array();
    Eigen::VectorXcd back = f.adjoint() * spec;
    for (Index d = 0; d < ndet; ++d)
      filtered(Index(v) * ndet + d, 0) = back[d].real();
  }
  return (M_PI / double(geom_.n_views)) * adjoint(filtered);
}

Matrix data_grad(const ForwardOperator& a, const Matrix& u, const Matrix& y) {
  return a.adjoint(a.apply(u) - y);
}

std::vector<std::uint8_t> variable_density_rows(Index h, double target_fraction,
                                                double center_band_fraction,
                                                double sigma_rows, Rng& rng) {
  std::vector<std::uint8_t> mask(std::size_t(h), 0);
  const double center = double(h - 1) / 2.0;
  const Index band = std::max<Index>(1, Index(std::round(center_band_fraction * double(h))));
  Index band_lo = Index(std::floor(center)) - band / 2;
  for (Index r = band_lo; r < band_lo + band; ++r)
    if (r >= 0 && r < h) mask[std::size_t(r)] = 1;
  // scale the density so the expected total matches the target fraction
  std::vector<double> density(std::size_t(h), 0.0);
  double sum_free = 0.0;
  for (Index r = 0; r < h; ++r) {
    const double d = double(r) - center;
    density[std::size_t(r)] = std::exp(-d * d / (2.0 * sigma_rows * sigma_rows));
    if (!mask[std::size_t(r)]) sum_free += density[std::size_t(r)];
  }
  const double want = target_fraction * double(h) - double(band);
  const double scale = want > 0 && sum_free > 0 ? want / sum_free : 0.0;
  for (Index r = 0; r < h; ++r) {
    if (mask[std::size_t(r)]) continue;
    const double p = std::min(1.0, scale * density[std::size_t(r)]);
    if (rng.uniform() < p) mask[std::size_t(r)] = 1;
  }
  return mask;
}

}  // namespace eqrec
