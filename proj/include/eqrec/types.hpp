#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace eqrec {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;
using ComplexMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

// Raster convention for multi-channel fields: data is (H*W) x C, one column
// per channel, pixel p = r*W + c.
inline Index raster_index(Index r, Index c, Index width) { return r * width + c; }

// Pixel (r, c) mapped to plane coordinates with x right, y up, origin at the
// grid center. Odd-sized grids put the center pixel at (0, 0).
inline Vector2 pixel_position(Index r, Index c, Index h, Index w) {
  const Scalar cx = Scalar(w - 1) / 2.0;
  const Scalar cy = Scalar(h - 1) / 2.0;
  return {Scalar(c) - cx, cy - Scalar(r)};
}

// Clean up trig values at multiples of pi/2: cos/sin evaluated near exact
// 0 or +-1 are snapped so that on-grid rotations stay exact permutations.
inline Scalar snap_unit(Scalar v) {
  if (std::abs(v) < 1e-15) return 0.0;
  if (std::abs(v - 1.0) < 1e-15) return 1.0;
  if (std::abs(v + 1.0) < 1e-15) return -1.0;
  return v;
}

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eqrec
