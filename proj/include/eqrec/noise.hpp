#pragma once

#include "eqrec/forward_op.hpp"
#include "eqrec/rng.hpp"

namespace eqrec {

// Measurement noise description. lowdose_poisson follows
//   y = -(1/mu) log(max(n / n_in, eta)),  n ~ Pois(n_in exp(-mu R u));
// gaussian adds independent N(0, sigma) per real component.
struct NoiseModel {
  enum class Kind { LowdosePoisson, Gaussian } kind = Kind::LowdosePoisson;
  double n_in = 1e4;     // photons per detector pixel
  double mu = 0.02;      // attenuation scale per pixel unit
  double eta = 1e-8;     // log floor
  double sigma = 0.0;    // gaussian std per component
  bool complex_noise = false;

  static NoiseModel lowdose(double n_in, double mu, double eta = 1e-8) {
    NoiseModel m;
    m.kind = Kind::LowdosePoisson;
    m.n_in = n_in;
    m.mu = mu;
    m.eta = eta;
    return m;
  }
  static NoiseModel gaussian(double sigma, bool complex_noise) {
    NoiseModel m;
    m.kind = Kind::Gaussian;
    m.sigma = sigma;
    m.complex_noise = complex_noise;
    return m;
  }
};

// Poisson draw: inversion below mean 30, rounded clamped Gaussian above
// (the approximation error is far below the noise scale at such means).
double poisson_sample(double mean, Rng& rng);

// Low-dose CT measurement of a sinogram R(u). noiseless replaces the count
// by its mean, in which case y equals the sinogram exactly.
Matrix simulate_lowdose_ct(const Matrix& sinogram, const NoiseModel& model, Rng& rng,
                           bool noiseless = false);

// y + eps on the sampled rows only (2-channel k-space layout).
Matrix add_complex_gaussian(const Matrix& y, const std::vector<std::uint8_t>& row_mask,
                            Index h, Index w, double sigma, Rng& rng);

Matrix add_gaussian(const Matrix& y, double sigma, Rng& rng);

}  // namespace eqrec
