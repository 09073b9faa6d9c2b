#pragma once

#include "eqrec/adam.hpp"
#include "eqrec/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace eqrec {

// Architecture of the learned proximal gradient method: it prox blocks,
// each K_project o (id + phi o K_intermediate) o K_lift with phi = leaky
// ReLU, width intermediate channels and a 5-channel memory state.
struct NetConfig {
  int iterations = 8;          // prox blocks (unshared weights)
  int width = 96;              // |H| * n_channels of the intermediate fields
  int memory_channels = 5;
  int ksize = 3;
  int image_channels = 1;      // 1 for CT/denoising, 2 for MRI (real/imag)
  bool equivariant = true;
  int group_order = 4;         // m; ignored by the ordinary variant

  bool operator==(const NetConfig&) const = default;
};

struct ProxBlock {
  ConvLayer lift, intermediate, project;
};

class UnrolledNet {
 public:
  UnrolledNet() = default;
  explicit UnrolledNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  std::vector<ProxBlock>& blocks() { return blocks_; }
  const std::vector<ProxBlock>& blocks() const { return blocks_; }

  Index param_count() const;
  Vector params() const;
  void set_params(const Eigen::Ref<const Vector>& p);
  Vector grads() const;
  void zero_grads();

  // Kernel coefficient dimension only (no biases); used by the parameter
  // accounting checks.
  Index coeff_count() const;

 private:
  NetConfig cfg_;
  std::vector<ProxBlock> blocks_;
};

// He-initialized network: K_intermediate zero, K_lift / K_project random;
// deterministic for a fixed seed. Throws when width is not divisible by the
// group order in the equivariant variant.
UnrolledNet init_network(const NetConfig& cfg, Rng rng);

// One prox block on raw matrices: concat(u, s, g) -> lift ->
// (id + leaky o intermediate) -> project -> split (u', s').
std::pair<Matrix, Matrix> prox_block_apply(const ProxBlock& block, const Matrix& u,
                                           const Matrix& s, const Matrix& g, Index h,
                                           Index w);

// Full unrolled reconstruction u0 = 0, s = 0, it blocks with g = grad E.
Matrix unrolled_forward(const UnrolledNet& net, const ForwardOperator& a, const Matrix& y);

// Training-graph version; returns the node id of the final image.
int unrolled_forward_tape(Tape& tape, UnrolledNet& net, const ForwardOperator& a,
                          int y_node);

struct TrainingConfig {
  AdamConfig adam;
  long iterations = 20000;
  int log_every = 100;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Matrix> images;        // ground truth rasters (H*W) x C
  std::vector<Matrix> measurements;  // matching y
};

struct LossRecord {
  long iteration;
  double loss;
};

// Supervised ERM with minibatch size 1: sample a pair uniformly, squared
// error loss, Adam update. Aborts with a diagnostic on non-finite loss.
std::vector<LossRecord> train(UnrolledNet& net, const ForwardOperator& a,
                              const Dataset& data, const TrainingConfig& cfg,
                              const std::function<void(long)>& progress = {});

}  // namespace eqrec
