#include "eqrec/unrolled.hpp"

#include <sstream>

namespace eqrec {

namespace {

// The io channels around a block: u (c), memory (5), grad E (c), all
// carrying the trivial representation.
FieldType block_io_type(const NetConfig& cfg, const CyclicGroup& g) {
  return FieldType::trivials(g.m, 2 * cfg.image_channels + cfg.memory_channels);
}

FieldType block_out_type(const NetConfig& cfg, const CyclicGroup& g) {
  return FieldType::trivials(g.m, cfg.image_channels + cfg.memory_channels);
}

FieldType intermediate_type(const NetConfig& cfg, const CyclicGroup& g) {
  if (!cfg.equivariant) return FieldType::trivials(1, cfg.width);
  return FieldType::regulars(g.m, cfg.width / g.m);
}

}  // namespace

UnrolledNet::UnrolledNet(NetConfig cfg) : cfg_(cfg) {
  if (cfg_.iterations < 0 || cfg_.width < 1 || cfg_.memory_channels < 0)
    throw std::invalid_argument("UnrolledNet: bad configuration");
  const CyclicGroup g(cfg_.equivariant ? cfg_.group_order : 1);
  if (cfg_.equivariant && cfg_.width % g.m != 0)
    throw std::invalid_argument("UnrolledNet: width must be divisible by the group order");
  const FieldType in = block_io_type(cfg_, g);
  const FieldType mid = intermediate_type(cfg_, g);
  const FieldType out = block_out_type(cfg_, g);
  blocks_.reserve(std::size_t(cfg_.iterations));
  for (int i = 0; i < cfg_.iterations; ++i) {
    ProxBlock b;
    b.lift = ConvLayer(in, mid, cfg_.ksize, g, cfg_.equivariant);
    b.intermediate = ConvLayer(mid, mid, cfg_.ksize, g, cfg_.equivariant);
    b.project = ConvLayer(mid, out, cfg_.ksize, g, cfg_.equivariant);
    blocks_.push_back(std::move(b));
  }
}

Index UnrolledNet::param_count() const {
  Index n = 0;
  for (const auto& b : blocks_)
    n += b.lift.param_count() + b.intermediate.param_count() + b.project.param_count();
  return n;
}

Index UnrolledNet::coeff_count() const {
  Index n = 0;
  for (const auto& b : blocks_)
    n += b.lift.coeff_count() + b.intermediate.coeff_count() + b.project.coeff_count();
  return n;
}

Vector UnrolledNet::params() const {
  Vector p(param_count());
  Index at = 0;
  for (const auto& b : blocks_)
    for (const ConvLayer* l : {&b.lift, &b.intermediate, &b.project}) {
      p.segment(at, l->coeff_count()) = l->coeffs;
      at += l->coeff_count();
      p.segment(at, l->bias_count()) = l->bias;
      at += l->bias_count();
    }
  return p;
}

void UnrolledNet::set_params(const Eigen::Ref<const Vector>& p) {
  if (p.size() != param_count())
    throw std::invalid_argument("UnrolledNet::set_params: size mismatch");
  Index at = 0;
  for (auto& b : blocks_)
    for (ConvLayer* l : {&b.lift, &b.intermediate, &b.project}) {
      l->coeffs = p.segment(at, l->coeff_count());
      at += l->coeff_count();
      l->bias = p.segment(at, l->bias_count());
      at += l->bias_count();
    }
}

Vector UnrolledNet::grads() const {
  Vector p(param_count());
  Index at = 0;
  for (const auto& b : blocks_)
    for (const ConvLayer* l : {&b.lift, &b.intermediate, &b.project}) {
      p.segment(at, l->coeff_count()) = l->grad_coeffs;
      at += l->coeff_count();
      p.segment(at, l->bias_count()) = l->grad_bias;
      at += l->bias_count();
    }
  return p;
}

void UnrolledNet::zero_grads() {
  for (auto& b : blocks_)
    for (ConvLayer* l : {&b.lift, &b.intermediate, &b.project}) {
      l->grad_coeffs.setZero();
      l->grad_bias.setZero();
    }
}

UnrolledNet init_network(const NetConfig& cfg, Rng rng) {
  UnrolledNet net(cfg);
  for (auto& b : net.blocks()) {
    he_init(b.lift, rng);
    b.intermediate.coeffs.setZero();  // zero-initialized residual branch
    b.intermediate.bias.setZero();
    he_init(b.project, rng);
  }
  return net;
}

std::pair<Matrix, Matrix> prox_block_apply(const ProxBlock& block, const Matrix& u,
                                           const Matrix& s, const Matrix& g, Index h,
                                           Index w) {
  if (u.rows() != h * w || s.rows() != h * w || g.rows() != h * w || u.cols() != g.cols())
    throw std::invalid_argument("prox_block_apply: channel/shape mismatch");
  Matrix x(h * w, u.cols() + s.cols() + g.cols());
  x << u, s, g;
  const Matrix z = conv2d_forward(x, h, w, block.lift);
  const Matrix r = z + leaky_relu_forward(conv2d_forward(z, h, w, block.intermediate));
  const Matrix out = conv2d_forward(r, h, w, block.project);
  return {out.leftCols(u.cols()), out.rightCols(s.cols())};
}

Matrix unrolled_forward(const UnrolledNet& net, const ForwardOperator& a, const Matrix& y) {
  const Index h = a.image_h(), w = a.image_w();
  const int c = net.config().image_channels;
  Matrix u = Matrix::Zero(h * w, c);
  Matrix s = Matrix::Zero(h * w, net.config().memory_channels);
  for (const auto& block : net.blocks()) {
    const Matrix g = data_grad(a, u, y);
    std::tie(u, s) = prox_block_apply(block, u, s, g, h, w);
  }
  return u;
}

int unrolled_forward_tape(Tape& tape, UnrolledNet& net, const ForwardOperator& a,
                          int y_node) {
  const Index h = a.image_h(), w = a.image_w();
  const int c = net.config().image_channels;
  const int mem = net.config().memory_channels;
  const FieldType io = FieldType::trivials(1, c);
  int u = tape.input(Matrix::Zero(h * w, c), io, h, w);
  int s = tape.input(Matrix::Zero(h * w, mem), FieldType::trivials(1, mem), h, w);
  const int neg_y = tape.scale(y_node, -1.0);
  for (auto& block : net.blocks()) {
    const int residual = tape.add(tape.op_apply(u, a), neg_y);
    const int g = tape.op_adjoint(residual, a);
    const int x = tape.concat({u, s, g});
    const int z = tape.conv(x, block.lift);
    const int r = tape.add(z, tape.leaky_relu(tape.conv(z, block.intermediate)));
    const int out = tape.conv(r, block.project);
    u = tape.slice_channels(out, 0, c);
    s = tape.slice_channels(out, c, mem);
  }
  return u;
}

std::vector<LossRecord> train(UnrolledNet& net, const ForwardOperator& a,
                              const Dataset& data, const TrainingConfig& cfg,
                              const std::function<void(long)>& progress) {
  if (data.images.empty() || data.images.size() != data.measurements.size())
    throw std::invalid_argument("train: dataset is empty or inconsistent");
  Rng rng = Rng(cfg.seed).fork(0x7261696e);
  Vector params = net.params();
  AdamState adam(params.size(), cfg.adam);
  std::vector<LossRecord> trace;
  for (long it = 1; it <= cfg.iterations; ++it) {
    const std::size_t idx = std::size_t(rng.uniform_int(data.images.size()));
    Tape tape;
    const int y = tape.constant(data.measurements[idx]);
    const int u = unrolled_forward_tape(tape, net, a, y);
    const int diff = tape.add(u, tape.scale(tape.constant(data.images[idx]), -1.0));
    const int loss = tape.squared_norm(diff);
    const double loss_value = tape.scalar_value(loss);
    if (!std::isfinite(loss_value)) {
      std::ostringstream msg;
      msg << "train: non-finite loss " << loss_value << " at iteration " << it
          << " on pair " << idx;
      throw numerical_error(msg.str());
    }
    net.zero_grads();
    tape.backward(loss);
    adam_step(params, net.grads(), adam);
    net.set_params(params);
    if (it % cfg.log_every == 0 || it == 1 || it == cfg.iterations)
      trace.push_back({it, loss_value});
    if (progress) progress(it);
  }
  return trace;
}

}  // namespace eqrec
