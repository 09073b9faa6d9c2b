#pragma once

#include "eqrec/group.hpp"
#include "eqrec/representation.hpp"
#include "eqrec/types.hpp"

#include <vector>

namespace eqrec {

struct FieldBlock {
  Representation rep;
  int multiplicity = 1;
};

// Ordered channel-block structure of a feature field. Channels are the
// blocks concatenated; within a block, `multiplicity` copies of the
// representation, each occupying rep.dim() consecutive channels.
class FieldType {
 public:
  FieldType() = default;
  FieldType(std::vector<FieldBlock> blocks) : blocks_(std::move(blocks)) {}

  static FieldType trivials(int m, int count) {
    return FieldType({{Representation::trivial(m), count}});
  }
  static FieldType regulars(int m, int count) {
    return FieldType({{Representation::regular(m), count}});
  }

  const std::vector<FieldBlock>& blocks() const { return blocks_; }

  int channels() const {
    int c = 0;
    for (const auto& b : blocks_) c += b.rep.dim() * b.multiplicity;
    return c;
  }

  // Number of individual fields (rep copies) across all blocks.
  int fields() const {
    int n = 0;
    for (const auto& b : blocks_) n += b.multiplicity;
    return n;
  }

  // (channel offset, representation) per field, in channel order.
  std::vector<std::pair<int, const Representation*>> field_layout() const {
    std::vector<std::pair<int, const Representation*>> out;
    int off = 0;
    for (const auto& b : blocks_) {
      for (int i = 0; i < b.multiplicity; ++i) {
        out.emplace_back(off, &b.rep);
        off += b.rep.dim();
      }
    }
    return out;
  }

  bool permutation_like() const {
    for (const auto& b : blocks_)
      if (!b.rep.is_permutation_like()) return false;
    return true;
  }

 private:
  std::vector<FieldBlock> blocks_;
};

// A 2D multi-channel tensor whose channel blocks carry representations.
// data is (H*W) x C with pixel p = r*W + c.
struct FeatureField {
  Index h = 0, w = 0;
  FieldType type;
  Matrix data;
  bool approx_action = false;  // set when an interpolated group action touched it

  FeatureField() = default;
  FeatureField(Index height, Index width, FieldType t)
      : h(height), w(width), type(std::move(t)),
        data(Matrix::Zero(height * width, type.channels())) {}
  FeatureField(Index height, Index width, FieldType t, Matrix values)
      : h(height), w(width), type(std::move(t)), data(std::move(values)) {
    if (data.rows() != h * w || data.cols() != type.channels())
      throw std::invalid_argument("FeatureField: data shape does not match type");
  }
};

// Sparse description of a spatial resampling: for each target pixel, up to
// four (source index, weight) pairs. exact == true means a pure permutation
// (every weight is 1 and sources are unique grid points or zero-fill).
struct ResamplePlan {
  Index h = 0, w = 0;
  // flattened: 4 entries per pixel; index -1 marks an unused slot.
  std::vector<Index> src;
  std::vector<Scalar> weight;
  bool exact = true;

  Index pixels() const { return h * w; }
};

// Plan sampling of source positions g^{-1} x for every target pixel x of an
// h x w grid; bilinear weights with zero extension, or an exact permutation
// when the isometry maps the grid onto itself.
ResamplePlan plan_resample(const PlanarIsometry& g, Index h, Index w);

// Same, for rotation by an arbitrary angle (degrees) about the grid center.
ResamplePlan plan_rotation(double angle_deg, Index h, Index w);

// Apply a plan to one raster column (length h*w).
Vector apply_resample(const ResamplePlan& plan, const Eigen::Ref<const Vector>& v);

// Induced action of g on a feature field: spatial move by g^{-1} sampling and
// per-field channel mixing by rep.matrix(g.k).
FeatureField act_on_field(const PlanarIsometry& g, const FeatureField& f);

// Rotate a plain image about its center; multiples of 90 degrees dispatch to
// the exact permutation path, anything else to bilinear with zero fill.
Matrix rotate_image(const Matrix& image, double angle_deg);

}  // namespace eqrec
