#pragma once

#include "eqrec/types.hpp"

namespace eqrec {

// SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03;
// local statistics over fully-contained windows, mean over those positions.
double ssim(const Matrix& u, const Matrix& v, double data_range);

// 10 log10(range^2 / MSE); +infinity for identical images.
double psnr(const Matrix& u, const Matrix& v, double data_range);

}  // namespace eqrec
