#pragma once

#include "eqrec/types.hpp"
#include "eqrec/unrolled.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace eqrec {

// Tensor container: magic "ETN1", u8 dtype code (0 = f64), u8 rank,
// rank x u64 little-endian dims, then the row-major payload.
struct EtnTensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

void save_tensor(const std::filesystem::path& path, const EtnTensor& tensor);
EtnTensor load_tensor(const std::filesystem::path& path);

// Matrices stored as rank-2 (rows, cols) tensors in row-major order.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

// Plain image as 8- or 16-bit binary PGM; values clamped to [0, 1].
void write_pgm(const std::filesystem::path& path, const Matrix& image, int bits = 16);
Matrix read_pgm(const std::filesystem::path& path);

// Checkpoint: a directory of named tensors plus a plain-text manifest with
// a versioned header and the network configuration.
void save_checkpoint(const std::filesystem::path& dir, const UnrolledNet& net);
UnrolledNet load_checkpoint(const std::filesystem::path& dir);

}  // namespace eqrec
