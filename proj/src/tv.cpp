#include "eqrec/tv.hpp"

#include "eqrec/field.hpp"

namespace eqrec {

namespace {

// Central differences with replicate boundary, (u(r, c+1) - u(r, c-1)) / 2.
void grad_central(const Matrix& u, Matrix& gx, Matrix& gy) {
  const Index h = u.rows(), w = u.cols();
  gx.resize(h, w);
  gy.resize(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const Index cp = std::min(c + 1, w - 1), cm = std::max(c - 1, Index(0));
      const Index rp = std::min(r + 1, h - 1), rm = std::max(r - 1, Index(0));
      gx(r, c) = 0.5 * (u(r, cp) - u(r, cm));
      gy(r, c) = 0.5 * (u(rp, c) - u(rm, c));
    }
}

// Negative adjoint of grad_central: div = -grad^T, so <grad u, p> = <u, -div p>.
Matrix divergence(const Matrix& px, const Matrix& py) {
  const Index h = px.rows(), w = px.cols();
  Matrix d = Matrix::Zero(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const Index cp = std::min(c + 1, w - 1), cm = std::max(c - 1, Index(0));
      const Index rp = std::min(r + 1, h - 1), rm = std::max(r - 1, Index(0));
      // scatter of the x-difference: +1/2 at (r, cp), -1/2 at (r, cm)
      d(r, cp) -= 0.5 * px(r, c);
      d(r, cm) += 0.5 * px(r, c);
      d(rp, c) -= 0.5 * py(r, c);
      d(rm, c) += 0.5 * py(r, c);
    }
  return d;
}

}  // namespace

double tv_value(const Matrix& image) {
  Matrix gx, gy;
  grad_central(image, gx, gy);
  return (gx.array().square() + gy.array().square()).sqrt().sum();
}

ProxResult prox_tv(const Matrix& u, double tau, const ProxSolverConfig& cfg) {
  if (tau < 0.0) throw std::invalid_argument("prox_tv: tau must be >= 0");
  cfg.validate();
  if (tau == 0.0) return {u, 0, 0.0};
  const Index h = u.rows(), w = u.cols();
  Matrix px = Matrix::Zero(h, w), py = Matrix::Zero(h, w);
  Matrix gx, gy;
  const double eta = cfg.dual_step / tau;
  double change = 0.0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Matrix v = u + tau * divergence(px, py);
    grad_central(v, gx, gy);
    Matrix nx = px + eta * gx;
    Matrix ny = py + eta * gy;
    // project onto the pointwise unit ball
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) {
        const double n = std::sqrt(nx(r, c) * nx(r, c) + ny(r, c) * ny(r, c));
        if (n > 1.0) {
          nx(r, c) /= n;
          ny(r, c) /= n;
        }
      }
    const double num = std::sqrt((nx - px).squaredNorm() + (ny - py).squaredNorm());
    const double den = std::max(1.0, std::sqrt(px.squaredNorm() + py.squaredNorm()));
    change = num / den;
    px.swap(nx);
    py.swap(ny);
    if (change <= cfg.tolerance) {
      ++it;
      break;
    }
  }
  return {u + tau * divergence(px, py), it, change};
}

PgmResult proximal_gradient(const ForwardOperator& a, const Matrix& y, const Functional& j,
                            double tau, int iterations, const Matrix& u0,
                            const ProxSolverConfig& prox_cfg) {
  if (tau <= 0.0) {
    const double norm = a.norm_estimate(Rng(0x9a7));
    tau = 1.0 / std::max(norm * norm, 1e-12);
  }
  const Index h = a.image_h(), w = a.image_w();
  auto to_image = [&](const Matrix& raster) {
    Matrix img(h, w);
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) img(r, c) = raster(raster_index(r, c, w), 0);
    return img;
  };
  auto to_raster = [&](const Matrix& img) {
    Matrix raster(h * w, 1);
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) raster(raster_index(r, c, w), 0) = img(r, c);
    return raster;
  };
  PgmResult result;
  Matrix u = u0;
  auto objective = [&](const Matrix& raster) {
    return 0.5 * (a.apply(raster) - y).squaredNorm() + j.value(to_image(raster));
  };
  result.objective.push_back(objective(u));
  for (int i = 0; i < iterations; ++i) {
    const Matrix step = u - tau * data_grad(a, u, y);
    u = to_raster(prox(j, to_image(step), tau, prox_cfg));
    result.objective.push_back(objective(u));
  }
  result.image = u;
  return result;
}

InpaintingDemoReport tv_inpainting_demo(const Matrix& image, const Vector& mask,
                                        double angle_deg, double tv_weight,
                                        int outer_iterations,
                                        const ProxSolverConfig& prox_cfg) {
  const Index h = image.rows(), w = image.cols();
  InpaintingOp op(h, w, mask);
  const Functional j = Functional::tv(tv_weight);
  auto to_raster = [&](const Matrix& img) {
    Matrix raster(h * w, 1);
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) raster(raster_index(r, c, w), 0) = img(r, c);
    return raster;
  };
  auto to_image = [&](const Matrix& raster) {
    Matrix img(h, w);
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) img(r, c) = raster(raster_index(r, c, w), 0);
    return img;
  };
  auto reconstruct = [&](const Matrix& img) {
    const Matrix y = op.apply(to_raster(img));
    // inpainting is a projection, so |A| = 1 and tau = 1 is admissible
    return to_image(
        proximal_gradient(op, y, j, 1.0, outer_iterations, Matrix::Zero(h * w, 1), prox_cfg)
            .image);
  };
  InpaintingDemoReport report;
  report.recon_upright = reconstruct(image);
  report.recon_rotated = reconstruct(rotate_image(image, angle_deg));
  const Matrix reference = rotate_image(report.recon_upright, angle_deg);
  const double den = reference.norm();
  report.discrepancy = den > 0 ? (report.recon_rotated - reference).norm() / den : 0.0;
  return report;
}

}  // namespace eqrec
