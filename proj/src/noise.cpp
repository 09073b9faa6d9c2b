#include "eqrec/noise.hpp"

namespace eqrec {

double poisson_sample(double mean, Rng& rng) {
  if (mean <= 0.0) return 0.0;
  if (mean < 30.0) {
    // inversion by sequential search
    const double l = std::exp(-mean);
    double p = l, f = l;
    const double u = rng.uniform();
    double k = 0.0;
    while (f < u && k < 1e6) {
      k += 1.0;
      p *= mean / k;
      f += p;
    }
    return k;
  }
  const double g = std::round(mean + std::sqrt(mean) * rng.normal());
  return std::max(0.0, g);
}

Matrix simulate_lowdose_ct(const Matrix& sinogram, const NoiseModel& model, Rng& rng,
                           bool noiseless) {
  if (model.kind != NoiseModel::Kind::LowdosePoisson)
    throw std::invalid_argument("simulate_lowdose_ct: wrong noise model kind");
  Matrix y(sinogram.rows(), sinogram.cols());
  for (Index j = 0; j < sinogram.cols(); ++j)
    for (Index i = 0; i < sinogram.rows(); ++i) {
      const double mean = model.n_in * std::exp(-model.mu * sinogram(i, j));
      const double n = noiseless ? mean : poisson_sample(mean, rng);
      y(i, j) = -std::log(std::max(n / model.n_in, model.eta)) / model.mu;
    }
  return y;
}

Matrix add_complex_gaussian(const Matrix& y, const std::vector<std::uint8_t>& row_mask,
                            Index h, Index w, double sigma, Rng& rng) {
  Matrix out = y;
  for (Index r = 0; r < h; ++r) {
    if (!row_mask[std::size_t(r)]) continue;
    for (Index c = 0; c < w; ++c) {
      const Index p = raster_index(r, c, w);
      out(p, 0) += sigma * rng.normal();
      out(p, 1) += sigma * rng.normal();
    }
  }
  return out;
}

Matrix add_gaussian(const Matrix& y, double sigma, Rng& rng) {
  Matrix out = y;
  for (Index j = 0; j < out.cols(); ++j)
    for (Index i = 0; i < out.rows(); ++i) out(i, j) += sigma * rng.normal();
  return out;
}

}  // namespace eqrec
