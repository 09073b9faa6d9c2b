#include "eqrec/tape.hpp"

namespace eqrec {

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

int Tape::input(Matrix value, FieldType type, Index h, Index w) {
  Node n;
  n.op = Op::Input;
  n.value = std::move(value);
  n.ftype = std::move(type);
  n.h = h;
  n.w = w;
  return push(std::move(n));
}

int Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

int Tape::conv(int x, ConvLayer& layer) {
  const Node& xn = nodes_.at(std::size_t(x));
  Node n;
  n.op = Op::Conv;
  n.in = {x};
  n.layer = &layer;
  n.h = xn.h;
  n.w = xn.w;
  n.ftype = layer.out_type();
  n.value = conv2d_forward(xn.value, xn.h, xn.w, layer);
  return push(std::move(n));
}

int Tape::leaky_relu(int x) {
  const Node& xn = nodes_.at(std::size_t(x));
  if (!xn.ftype.permutation_like())
    throw std::invalid_argument(
        "leaky_relu: blocks must carry trivial or regular representations");
  Node n;
  n.op = Op::LeakyRelu;
  n.in = {x};
  n.h = xn.h;
  n.w = xn.w;
  n.ftype = xn.ftype;
  n.value = leaky_relu_forward(xn.value);
  return push(std::move(n));
}

int Tape::norm_nonlin(int x, ScalarFn fn) {
  const Node& xn = nodes_.at(std::size_t(x));
  Node n;
  n.op = Op::NormNonlin;
  n.in = {x};
  n.fn = fn;
  n.h = xn.h;
  n.w = xn.w;
  n.ftype = xn.ftype;
  n.value = norm_nonlin_forward(xn.value, xn.ftype, fn);
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  const Node& an = nodes_.at(std::size_t(a));
  const Node& bn = nodes_.at(std::size_t(b));
  if (an.value.rows() != bn.value.rows() || an.value.cols() != bn.value.cols())
    throw std::invalid_argument("tape add: shape mismatch");
  Node n;
  n.op = Op::Add;
  n.in = {a, b};
  n.h = an.h;
  n.w = an.w;
  n.ftype = an.ftype;
  n.value = an.value + bn.value;
  return push(std::move(n));
}

int Tape::scale(int x, double alpha) {
  const Node& xn = nodes_.at(std::size_t(x));
  Node n;
  n.op = Op::Scale;
  n.in = {x};
  n.alpha = alpha;
  n.h = xn.h;
  n.w = xn.w;
  n.ftype = xn.ftype;
  n.value = alpha * xn.value;
  return push(std::move(n));
}

int Tape::concat(const std::vector<int>& xs) {
  if (xs.empty()) throw std::invalid_argument("tape concat: no inputs");
  Index rows = nodes_.at(std::size_t(xs[0])).value.rows();
  Index cols = 0;
  std::vector<FieldBlock> blocks;
  for (int x : xs) {
    const Node& xn = nodes_.at(std::size_t(x));
    if (xn.value.rows() != rows) throw std::invalid_argument("tape concat: row mismatch");
    cols += xn.value.cols();
    for (const auto& b : xn.ftype.blocks()) blocks.push_back(b);
  }
  Node n;
  n.op = Op::Concat;
  n.in = xs;
  n.h = nodes_.at(std::size_t(xs[0])).h;
  n.w = nodes_.at(std::size_t(xs[0])).w;
  n.ftype = FieldType(std::move(blocks));
  n.value.resize(rows, cols);
  Index at = 0;
  for (int x : xs) {
    const Matrix& v = nodes_.at(std::size_t(x)).value;
    n.value.middleCols(at, v.cols()) = v;
    at += v.cols();
  }
  return push(std::move(n));
}

int Tape::slice_channels(int x, int begin, int len) {
  const Node& xn = nodes_.at(std::size_t(x));
  if (begin < 0 || len < 0 || begin + len > xn.value.cols())
    throw std::invalid_argument("tape slice: out of range");
  Node n;
  n.op = Op::SliceChannels;
  n.in = {x};
  n.begin = begin;
  n.len = len;
  n.h = xn.h;
  n.w = xn.w;
  n.ftype = FieldType::trivials(1, len);
  n.value = xn.value.middleCols(begin, len);
  return push(std::move(n));
}

int Tape::op_apply(int x, const ForwardOperator& a) {
  const Node& xn = nodes_.at(std::size_t(x));
  Node n;
  n.op = Op::OpApply;
  n.in = {x};
  n.fop = &a;
  n.value = a.apply(xn.value);
  return push(std::move(n));
}

int Tape::op_adjoint(int y, const ForwardOperator& a) {
  const Node& yn = nodes_.at(std::size_t(y));
  Node n;
  n.op = Op::OpAdjoint;
  n.in = {y};
  n.fop = &a;
  n.h = a.image_h();
  n.w = a.image_w();
  n.ftype = FieldType::trivials(1, int(a.image_channels()));
  n.value = a.adjoint(yn.value);
  return push(std::move(n));
}

int Tape::squared_norm(int x) {
  const Node& xn = nodes_.at(std::size_t(x));
  Node n;
  n.op = Op::SquaredNorm;
  n.in = {x};
  n.value = Matrix::Constant(1, 1, xn.value.squaredNorm());
  return push(std::move(n));
}

void Tape::backward(int seed, double seed_grad) {
  grads_.assign(nodes_.size(), Matrix());
  auto grad_of = [&](int id) -> Matrix& {
    Matrix& g = grads_[std::size_t(id)];
    if (g.size() == 0) {
      const Matrix& v = nodes_[std::size_t(id)].value;
      g = Matrix::Zero(v.rows(), v.cols());
    }
    return g;
  };
  grad_of(seed).setConstant(seed_grad);
  for (int i = seed; i >= 0; --i) {
    const Node& n = nodes_[std::size_t(i)];
    Matrix& g = grads_[std::size_t(i)];
    if (g.size() == 0) continue;  // node does not influence the seed
    switch (n.op) {
      case Op::Input:
      case Op::Constant:
        break;
      case Op::Conv: {
        const Node& xn = nodes_[std::size_t(n.in[0])];
        grad_of(n.in[0]) += conv2d_backward(xn.value, xn.h, xn.w, *n.layer, g);
        break;
      }
      case Op::LeakyRelu: {
        const Node& xn = nodes_[std::size_t(n.in[0])];
        grad_of(n.in[0]) += leaky_relu_backward(xn.value, g);
        break;
      }
      case Op::NormNonlin: {
        const Node& xn = nodes_[std::size_t(n.in[0])];
        grad_of(n.in[0]) += norm_nonlin_backward(xn.value, xn.ftype, n.fn, g);
        break;
      }
      case Op::Add:
        grad_of(n.in[0]) += g;
        grad_of(n.in[1]) += g;
        break;
      case Op::Scale:
        grad_of(n.in[0]) += n.alpha * g;
        break;
      case Op::Concat: {
        Index at = 0;
        for (int x : n.in) {
          const Index c = nodes_[std::size_t(x)].value.cols();
          grad_of(x) += g.middleCols(at, c);
          at += c;
        }
        break;
      }
      case Op::SliceChannels:
        grad_of(n.in[0]).middleCols(n.begin, n.len) += g;
        break;
      case Op::OpApply:
        grad_of(n.in[0]) += n.fop->adjoint(g);
        break;
      case Op::OpAdjoint:
        grad_of(n.in[0]) += n.fop->apply(g);
        break;
      case Op::SquaredNorm:
        grad_of(n.in[0]) += 2.0 * g(0, 0) * nodes_[std::size_t(n.in[0])].value;
        break;
      default:
        throw std::logic_error("tape backward: unrecorded operation in graph");
    }
  }
}

const Matrix& Tape::input_grad(int id) const {
  const Matrix& g = grads_.at(std::size_t(id));
  if (g.size() == 0) {
    static const Matrix empty;
    return empty;
  }
  return g;
}

}  // namespace eqrec
