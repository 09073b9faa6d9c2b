#include "eqrec/metrics.hpp"

#include <limits>

namespace eqrec {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

Vector gaussian_window() {
  Vector g(kWindow);
  const double c = double(kWindow - 1) / 2.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = double(i) - c;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
  }
  return g / g.sum();
}

// Separable valid-mode Gaussian filtering.
Matrix filter_valid(const Matrix& u, const Vector& g) {
  const Index h = u.rows(), w = u.cols();
  const Index oh = h - kWindow + 1, ow = w - kWindow + 1;
  Matrix rows(h, ow);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += g[i] * u(r, c + i);
      rows(r, c) = acc;
    }
  Matrix out(oh, ow);
  for (Index r = 0; r < oh; ++r)
    for (Index c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += g[i] * rows(r + i, c);
      out(r, c) = acc;
    }
  return out;
}

}  // namespace

double ssim(const Matrix& u, const Matrix& v, double data_range) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument("ssim: shape mismatch");
  if (data_range <= 0.0) throw std::invalid_argument("ssim: data_range must be > 0");
  if (u.rows() < kWindow || u.cols() < kWindow)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const Vector g = gaussian_window();
  const Matrix mu1 = filter_valid(u, g);
  const Matrix mu2 = filter_valid(v, g);
  const Matrix u2 = filter_valid(u.cwiseProduct(u), g);
  const Matrix v2 = filter_valid(v.cwiseProduct(v), g);
  const Matrix uv = filter_valid(u.cwiseProduct(v), g);
  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);
  double acc = 0.0;
  for (Index r = 0; r < mu1.rows(); ++r)
    for (Index c = 0; c < mu1.cols(); ++c) {
      const double m1 = mu1(r, c), m2 = mu2(r, c);
      const double s1 = u2(r, c) - m1 * m1;
      const double s2 = v2(r, c) - m2 * m2;
      const double s12 = uv(r, c) - m1 * m2;
      acc += ((2 * m1 * m2 + c1) * (2 * s12 + c2)) /
             ((m1 * m1 + m2 * m2 + c1) * (s1 + s2 + c2));
    }
  return acc / double(mu1.size());
}

double psnr(const Matrix& u, const Matrix& v, double data_range) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument("psnr: shape mismatch");
  if (data_range <= 0.0) throw std::invalid_argument("psnr: data_range must be > 0");
  const double mse = (u - v).squaredNorm() / double(u.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

}  // namespace eqrec
