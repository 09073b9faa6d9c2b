#include "eqrec/phantom.hpp"

namespace eqrec {

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Soft-edged ellipse indicator accumulated into the image.
void add_ellipse(Matrix& img, double cx, double cy, double a, double b, double angle,
                 double intensity) {
  const Index h = img.rows(), w = img.cols();
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double edge = 1.5 / std::min(a, b);  // ~1.5 px transition band
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const double x = double(c) - cx, y = double(r) - cy;
      const double xr = (ca * x + sa * y) / a;
      const double yr = (-sa * x + ca * y) / b;
      const double rho = xr * xr + yr * yr;
      if (rho < 1.0 + 3.0 * edge)
        img(r, c) += intensity * smoothstep((1.0 - rho) / edge + 0.5);
    }
}

Matrix ellipse_phantom(const PhantomSpec& spec, Rng& rng) {
  const Index n = spec.n;
  Matrix img = Matrix::Zero(n, n);
  const double cx0 = double(n - 1) / 2.0 + rng.uniform(-2.0, 2.0);
  const double cy0 = double(n - 1) / 2.0 + rng.uniform(-2.0, 2.0);
  // horizontal body outline
  const double body_a = rng.uniform(0.30, 0.38) * double(n);
  const double body_b = rng.uniform(0.20, 0.27) * double(n);
  const double body_angle = rng.normal() * (5.0 * M_PI / 180.0);
  add_ellipse(img, cx0, cy0, body_a, body_b, body_angle, rng.uniform(0.15, 0.30));
  const int count = spec.min_count + int(rng.uniform_int(
                        std::uint64_t(spec.max_count - spec.min_count + 1)));
  for (int i = 0; i < count; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double rad = rng.uniform(0.0, 0.65);
    const double ex = cx0 + rad * body_a * std::cos(phi);
    const double ey = cy0 + rad * body_b * std::sin(phi);
    double ea = rng.uniform(0.04, 0.14) * double(n);
    double eb = ea / rng.uniform(1.4, 2.6);  // enforce anisotropy
    const double eangle = rng.normal() * (15.0 * M_PI / 180.0);
    double intensity = rng.uniform(spec.min_intensity, spec.max_intensity);
    if (rng.uniform() < 0.3) intensity = -intensity;
    add_ellipse(img, ex, ey, ea, eb, eangle, intensity);
  }
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

Matrix blob_phantom(const PhantomSpec& spec, Rng& rng) {
  const Index n = spec.n;
  Matrix img = Matrix::Zero(n, n);
  const int count = spec.min_count + int(rng.uniform_int(
                        std::uint64_t(spec.max_count - spec.min_count + 1)));
  const double bw = spec.blob_bandwidth * double(n);
  for (int i = 0; i < count; ++i) {
    const double cx = rng.uniform(0.2, 0.8) * double(n);
    const double cy = rng.uniform(0.2, 0.8) * double(n);
    const double s = bw * rng.uniform(0.6, 1.4);
    const double amp = rng.uniform(spec.min_intensity, spec.max_intensity);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) {
        const double dx = double(c) - cx, dy = double(r) - cy;
        img(r, c) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
      }
  }
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

Matrix generate_phantom(const PhantomSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case PhantomSpec::Kind::Ellipses: return ellipse_phantom(spec, rng);
    case PhantomSpec::Kind::SmoothBlobs: return blob_phantom(spec, rng);
  }
  throw std::logic_error("unreachable");
}

std::vector<Matrix> generate_phantoms(const PhantomSpec& spec, int n_images) {
  std::vector<Matrix> out;
  out.reserve(std::size_t(std::max(0, n_images)));
  for (int i = 0; i < n_images; ++i) {
    Rng rng = Rng(spec.seed).fork(0x9e11 + std::uint64_t(i));
    out.push_back(generate_phantom(spec, rng));
  }
  return out;
}

Matrix disk_phantom(Index n, double radius_fraction, double value) {
  Matrix img = Matrix::Zero(n, n);
  const double cx = double(n - 1) / 2.0, cy = double(n - 1) / 2.0;
  const double rad = radius_fraction * double(n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      const double d = std::hypot(double(c) - cx, double(r) - cy);
      img(r, c) = value * smoothstep(rad - d + 0.5);
    }
  return img;
}

}  // namespace eqrec
