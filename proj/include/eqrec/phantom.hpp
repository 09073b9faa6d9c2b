#pragma once

#include "eqrec/rng.hpp"
#include "eqrec/types.hpp"

#include <vector>

namespace eqrec {

// Synthetic image generator standing in for the oriented medical images the
// reconstruction experiments need. Ellipse phantoms deliberately carry a
// preferred orientation (a horizontal body outline plus mildly tilted
// internal structures) so that a rotated test set actually probes rotation
// robustness.
struct PhantomSpec {
  enum class Kind { Ellipses, SmoothBlobs } kind = Kind::Ellipses;
  Index n = 64;
  int min_count = 3, max_count = 7;      // internal structures per image
  double min_intensity = 0.1, max_intensity = 0.5;
  double blob_bandwidth = 0.12;          // relative to n (smooth_blobs)
  std::uint64_t seed = 0;
};

Matrix generate_phantom(const PhantomSpec& spec, Rng& rng);
std::vector<Matrix> generate_phantoms(const PhantomSpec& spec, int n_images);

// Centered disk indicator, soft edge; classic FBP sanity target.
Matrix disk_phantom(Index n, double radius_fraction = 0.35, double value = 1.0);

}  // namespace eqrec
