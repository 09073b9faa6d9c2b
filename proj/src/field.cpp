#include "eqrec/field.hpp"

#include <cmath>

namespace eqrec {

namespace {

constexpr Scalar kGridTol = 1e-9;

// Shared core: target pixel positions are mapped through `map` (the inverse
// transform), then sampled bilinearly with zero extension. Integer hits are
// recorded as single unit-weight entries so exact cases stay permutations.
template <typename MapFn>
ResamplePlan plan_with_map(Index h, Index w, MapFn&& map) {
  ResamplePlan plan;
  plan.h = h;
  plan.w = w;
  plan.src.assign(std::size_t(4 * h * w), -1);
  plan.weight.assign(std::size_t(4 * h * w), 0.0);
  plan.exact = true;
  const Scalar cx = Scalar(w - 1) / 2.0;
  const Scalar cy = Scalar(h - 1) / 2.0;
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const Index p = raster_index(r, c, w);
      const Vector2 pos = map(pixel_position(r, c, h, w));
      // back to fractional (row, col)
      const Scalar sc = pos.x() + cx;
      const Scalar sr = cy - pos.y();
      const Scalar rr = std::round(sr), rc = std::round(sc);
      if (std::abs(sr - rr) < kGridTol && std::abs(sc - rc) < kGridTol) {
        if (rr >= 0 && rr < Scalar(h) && rc >= 0 && rc < Scalar(w)) {
          plan.src[4 * p] = raster_index(Index(rr), Index(rc), w);
          plan.weight[4 * p] = 1.0;
        }
        continue;  // off-grid integer point: zero fill, still exact
      }
      plan.exact = false;
      const Scalar fr = std::floor(sr), fc = std::floor(sc);
      const Scalar ar = sr - fr, ac = sc - fc;
      const Scalar wts[4] = {(1 - ar) * (1 - ac), (1 - ar) * ac, ar * (1 - ac), ar * ac};
      const Index rows[4] = {Index(fr), Index(fr), Index(fr) + 1, Index(fr) + 1};
      const Index cols[4] = {Index(fc), Index(fc) + 1, Index(fc), Index(fc) + 1};
      int slot = 0;
      for (int i = 0; i < 4; ++i) {
        if (wts[i] == 0.0) continue;
        if (rows[i] < 0 || rows[i] >= h || cols[i] < 0 || cols[i] >= w) continue;
        plan.src[std::size_t(4 * p + slot)] = raster_index(rows[i], cols[i], w);
        plan.weight[std::size_t(4 * p + slot)] = wts[i];
        ++slot;
      }
    }
  }
  return plan;
}

}  // namespace

ResamplePlan plan_resample(const PlanarIsometry& g, Index h, Index w) {
  const PlanarIsometry ginv = g.inverse();
  const Matrix2 rinv = ginv.rotation();
  const Vector2 tinv = ginv.t;
  return plan_with_map(h, w, [&](const Vector2& pos) -> Vector2 {
    return rinv * pos + tinv;
  });
}

ResamplePlan plan_rotation(double angle_deg, Index h, Index w) {
  const double a = -angle_deg * M_PI / 180.0;  // inverse rotation
  const Scalar c = snap_unit(std::cos(a)), s = snap_unit(std::sin(a));
  Matrix2 rinv;
  rinv << c, -s, s, c;
  return plan_with_map(h, w, [&](const Vector2& pos) -> Vector2 { return rinv * pos; });
}

Vector apply_resample(const ResamplePlan& plan, const Eigen::Ref<const Vector>& v) {
  Vector out = Vector::Zero(plan.pixels());
  for (Index p = 0; p < plan.pixels(); ++p) {
    Scalar acc = 0.0;
    for (int i = 0; i < 4; ++i) {
      const Index s = plan.src[std::size_t(4 * p + i)];
      if (s < 0) break;
      acc += plan.weight[std::size_t(4 * p + i)] * v[s];
    }
    out[p] = acc;
  }
  return out;
}

FeatureField act_on_field(const PlanarIsometry& g, const FeatureField& f) {
  const ResamplePlan plan = plan_resample(g, f.h, f.w);
  FeatureField out(f.h, f.w, f.type);
  out.approx_action = f.approx_action || !plan.exact;
  // (b) move the grid by g^{-1} sampling
  Matrix moved(f.data.rows(), f.data.cols());
  for (Index ch = 0; ch < f.data.cols(); ++ch)
    moved.col(ch) = apply_resample(plan, f.data.col(ch));
  // (a) mix channels within each field by rep(k)
  for (const auto& [off, rep] : f.type.field_layout()) {
    const int d = rep->dim();
    if (d == 1 && rep->kind() == Representation::Kind::Trivial) {
      out.data.col(off) = moved.col(off);
    } else {
      const Matrix rk = rep->matrix(g.k);
      out.data.middleCols(off, d) = moved.middleCols(off, d) * rk.transpose();
    }
  }
  return out;
}

Matrix rotate_image(const Matrix& image, double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0) a += 360.0;
  const Index h = image.rows(), w = image.cols();
  const ResamplePlan plan = plan_rotation(a, h, w);
  Vector raster(h * w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) raster[raster_index(r, c, w)] = image(r, c);
  const Vector out = apply_resample(plan, raster);
  Matrix result(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) result(r, c) = out[raster_index(r, c, w)];
  return result;
}

}  // namespace eqrec
