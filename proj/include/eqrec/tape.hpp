#pragma once

#include "eqrec/forward_op.hpp"
#include "eqrec/layers.hpp"
#include "eqrec/nonlin.hpp"

#include <vector>

namespace eqrec {

// Reverse-mode differentiation over the closed operator set used by the
// unrolled networks. Values are computed eagerly on recording; backward
// walks the record in reverse and accumulates parameter gradients into the
// layers' grad buffers.
class Tape {
 public:
  enum class Op {
    Input,
    Constant,
    Conv,
    LeakyRelu,
    NormNonlin,
    Add,
    Scale,
    Concat,
    SliceChannels,
    OpApply,
    OpAdjoint,
    SquaredNorm,
  };

  struct Node {
    Op op = Op::Input;
    std::vector<int> in;
    Matrix value;
    // payloads
    ConvLayer* layer = nullptr;
    const ForwardOperator* fop = nullptr;
    double alpha = 1.0;
    ScalarFn fn;
    FieldType ftype;
    Index h = 0, w = 0;
    int begin = 0, len = 0;
  };

  int input(Matrix value, FieldType type, Index h, Index w);
  int constant(Matrix value);
  int conv(int x, ConvLayer& layer);
  int leaky_relu(int x);
  int norm_nonlin(int x, ScalarFn fn);
  int add(int a, int b);
  int scale(int x, double alpha);
  int concat(const std::vector<int>& xs);  // channel-wise; types concatenated
  int slice_channels(int x, int begin, int len);
  int op_apply(int x, const ForwardOperator& a);
  int op_adjoint(int y, const ForwardOperator& a);
  int squared_norm(int x);  // 1x1 value |x|_F^2

  const Matrix& value(int id) const { return nodes_.at(std::size_t(id)).value; }
  const FieldType& type(int id) const { return nodes_.at(std::size_t(id)).ftype; }
  double scalar_value(int id) const { return value(id)(0, 0); }

  // Seeds d(loss)/d(node `seed`) = seed_grad and accumulates gradients.
  // Parameter gradients land in the layers; input-node gradients are kept
  // and can be read back with input_grad.
  void backward(int seed, double seed_grad = 1.0);
  const Matrix& input_grad(int id) const;

  std::vector<Node>& nodes() { return nodes_; }  // exposed for fault injection in tests

 private:
  int push(Node n);
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

}  // namespace eqrec
