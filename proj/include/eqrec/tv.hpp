#pragma once

#include "eqrec/forward_op.hpp"

namespace eqrec {

// Isotropic discrete total variation, sum_p sqrt(gx^2 + gy^2), with
// half-sample central differences and replicate boundary. This
// discretization is exactly invariant under on-grid 90-degree rotations,
// which the prox equivariance checks rely on.
double tv_value(const Matrix& image);

// Regularisation functional J: either zero or weight * TV.
struct Functional {
  enum class Kind { Zero, Tv } kind = Kind::Zero;
  double weight = 0.0;

  static Functional zero() { return {}; }
  static Functional tv(double weight) { return {Kind::Tv, weight}; }
  double value(const Matrix& image) const {
    return kind == Kind::Tv ? weight * tv_value(image) : 0.0;
  }
};

struct ProxSolverConfig {
  int max_iters = 200;
  double dual_step = 0.24;   // stability requires <= 0.25
  double tolerance = 1e-7;   // on the relative dual change

  void validate() const {
    if (dual_step > 0.25 || dual_step <= 0.0)
      throw std::invalid_argument("ProxSolverConfig: dual step must lie in (0, 0.25]");
  }
};

struct ProxResult {
  Matrix image;
  int iterations = 0;
  double last_change = 0.0;  // relative dual change at exit
};

// prox_{tau TV}(u) by projected gradient on the dual ball.
ProxResult prox_tv(const Matrix& u, double tau, const ProxSolverConfig& cfg = {});

inline Matrix prox(const Functional& j, const Matrix& u, double step,
                   const ProxSolverConfig& cfg = {}) {
  if (j.kind == Functional::Kind::Zero || j.weight * step == 0.0) return u;
  return prox_tv(u, step * j.weight, cfg).image;
}

// Proximal gradient method on E(u) = 1/2 |A u - y|^2 + J(u); tau may be 0
// to request the safe default 1 / |A|^2.
struct PgmResult {
  Matrix image;               // (H*W) x 1 raster
  std::vector<double> objective;  // E + J per iteration (including start)
};
PgmResult proximal_gradient(const ForwardOperator& a, const Matrix& y, const Functional& j,
                            double tau, int iterations, const Matrix& u0,
                            const ProxSolverConfig& prox_cfg = {});

// Rotate-then-reconstruct vs reconstruct-then-rotate discrepancy for
// TV-regularised inpainting; large for a proper mask, tiny for A = id.
struct InpaintingDemoReport {
  Matrix recon_upright;       // Phi(A u)
  Matrix recon_rotated;       // Phi(A R u)
  double discrepancy = 0.0;   // |Phi(A R u) - R Phi(A u)| / |R Phi(A u)|
};
InpaintingDemoReport tv_inpainting_demo(const Matrix& image, const Vector& mask,
                                        double angle_deg, double tv_weight,
                                        int outer_iterations,
                                        const ProxSolverConfig& prox_cfg = {});

}  // namespace eqrec
