#include "eqrec/adam.hpp"
#include "eqrec/tape.hpp"
#include "eqrec/unrolled.hpp"

#include <doctest.h>

using namespace eqrec;

namespace {

// Central finite differences on a scalar function of the layer parameters.
double fd_param_grad(const std::function<double()>& loss, double& param, double h = 1e-5) {
  const double saved = param;
  param = saved + h;
  const double up = loss();
  param = saved - h;
  const double down = loss();
  param = saved;
  return (up - down) / (2.0 * h);
}

double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("scalar chain: d/dw of 1/2 (w x - y)^2 equals (w x - y) x") {
  // realized with a 1x1 convolution on a single pixel
  ConvLayer w(FieldType::trivials(1, 1), FieldType::trivials(1, 1), 1, CyclicGroup(1), false);
  w.coeffs[0] = 1.7;
  const double x = 0.6, y = -0.4;
  Tape tape;
  const int xin = tape.input(Matrix::Constant(1, 1, x), FieldType::trivials(1, 1), 1, 1);
  const int wx = tape.conv(xin, w);
  const int diff = tape.add(wx, tape.constant(Matrix::Constant(1, 1, -y)));
  const int loss = tape.scale(tape.squared_norm(diff), 0.5);
  w.grad_coeffs.setZero();
  w.grad_bias.setZero();
  tape.backward(loss);
  CHECK(w.grad_coeffs[0] == doctest::Approx((w.coeffs[0] * x - y) * x).epsilon(1e-12));
}

TEST_CASE("zero seed gradient gives zero parameter gradients") {
  Rng rng(51);
  ConvLayer layer(FieldType::trivials(1, 1), FieldType::trivials(1, 2), 3, CyclicGroup(1),
                  false);
  he_init(layer, rng);
  Matrix xv(16, 1);
  for (Index i = 0; i < xv.size(); ++i) xv(i, 0) = rng.normal();
  Tape tape;
  const int x = tape.input(xv, FieldType::trivials(1, 1), 4, 4);
  const int loss = tape.squared_norm(tape.leaky_relu(tape.conv(x, layer)));
  layer.grad_coeffs.setZero();
  layer.grad_bias.setZero();
  tape.backward(loss, 0.0);
  CHECK(layer.grad_coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(layer.grad_bias.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tape rejects unrecorded operations") {
  Tape tape;
  const int x = tape.input(Matrix::Zero(4, 1), FieldType::trivials(1, 1), 2, 2);
  const int s = tape.squared_norm(x);
  tape.nodes()[std::size_t(s)].op = static_cast<Tape::Op>(99);
  CHECK_THROWS_AS(tape.backward(s), std::logic_error);
}

TEST_CASE("reverse mode matches finite differences per operation") {
  Rng rng(53);
  const Index h = 5, w = 4;

  SUBCASE("norm nonlinearity with tanh") {
    const FieldType type({{Representation::irrep(4, 1), 2}});
    Matrix xv(h * w, type.channels());
    for (Index i = 0; i < xv.size(); ++i) xv.data()[i] = rng.normal();
    Matrix target(h * w, type.channels());
    for (Index i = 0; i < target.size(); ++i) target.data()[i] = rng.normal();
    auto forward = [&](const Matrix& input) {
      Tape tape;
      const int x = tape.input(input, type, h, w);
      const int nl = tape.norm_nonlin(x, {ScalarFn::Kind::Tanh});
      const int diff = tape.add(nl, tape.scale(tape.constant(target), -1.0));
      return tape.scalar_value(tape.squared_norm(diff));
    };
    // analytic input gradient via tape
    Tape tape;
    const int x = tape.input(xv, type, h, w);
    const int nl = tape.norm_nonlin(x, {ScalarFn::Kind::Tanh});
    const int diff = tape.add(nl, tape.scale(tape.constant(target), -1.0));
    tape.backward(tape.squared_norm(diff));
    const Matrix& analytic = tape.input_grad(x);
    double worst = 0.0;
    for (Index i = 0; i < 12; ++i) {
      Matrix perturbed = xv;
      const double hstep = 1e-6;
      perturbed.data()[i] += hstep;
      const double up = forward(perturbed);
      perturbed.data()[i] -= 2 * hstep;
      const double down = forward(perturbed);
      const double fd = (up - down) / (2 * hstep);
      worst = std::max(worst, std::abs(fd - analytic.data()[i]) /
                                  std::max(1.0, std::abs(fd)));
    }
    CHECK(worst <= 1e-6);
  }

  SUBCASE("conv parameters through leaky relu") {
    ConvLayer layer(FieldType::trivials(1, 2), FieldType::trivials(1, 3), 3, CyclicGroup(1),
                    false);
    he_init(layer, rng);
    Matrix xv(h * w, 2), target(h * w, 3);
    for (Index i = 0; i < xv.size(); ++i) xv.data()[i] = rng.normal();
    for (Index i = 0; i < target.size(); ++i) target.data()[i] = rng.normal();
    auto loss_value = [&]() {
      Tape tape;
      const int x = tape.input(xv, FieldType::trivials(1, 2), h, w);
      const int out = tape.leaky_relu(tape.conv(x, layer));
      const int diff = tape.add(out, tape.scale(tape.constant(target), -1.0));
      return tape.scalar_value(tape.squared_norm(diff));
    };
    layer.grad_coeffs.setZero();
    layer.grad_bias.setZero();
    {
      Tape tape;
      const int x = tape.input(xv, FieldType::trivials(1, 2), h, w);
      const int out = tape.leaky_relu(tape.conv(x, layer));
      const int diff = tape.add(out, tape.scale(tape.constant(target), -1.0));
      tape.backward(tape.squared_norm(diff));
    }
    for (Index i : {Index(0), Index(7), Index(23)}) {
      const double fd = fd_param_grad(loss_value, layer.coeffs[i]);
      CHECK(layer.grad_coeffs[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    for (Index i = 0; i < layer.bias.size(); ++i) {
      const double fd = fd_param_grad(loss_value, layer.bias[i]);
      CHECK(layer.grad_bias[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("two-block unrolled net gradients match central differences") {
  Rng rng(57);
  NetConfig cfg;
  cfg.iterations = 2;
  cfg.width = 8;
  cfg.memory_channels = 2;
  cfg.equivariant = true;
  cfg.group_order = 4;
  UnrolledNet net = init_network(cfg, rng.fork(1));
  // fully random parameters: the zero-initialized residual branch would sit
  // exactly on the leaky-relu kink where central differences are invalid
  {
    Vector p = net.params();
    for (Index i = 0; i < p.size(); ++i) p[i] += 0.25 * rng.normal();
    net.set_params(p);
  }

  RadonGeometry geom;
  geom.n = 8;
  geom.n_views = 4;
  RadonOp op(geom);

  Matrix gt(64, 1), y(op.meas_rows(), 1);
  for (Index i = 0; i < gt.size(); ++i) gt(i, 0) = rng.uniform();
  y = op.apply(gt);

  auto loss_value = [&]() {
    Tape tape;
    const int yn = tape.constant(y);
    const int u = unrolled_forward_tape(tape, net, op, yn);
    const int diff = tape.add(u, tape.scale(tape.constant(gt), -1.0));
    return tape.scalar_value(tape.squared_norm(diff));
  };
  net.zero_grads();
  {
    Tape tape;
    const int yn = tape.constant(y);
    const int u = unrolled_forward_tape(tape, net, op, yn);
    const int diff = tape.add(u, tape.scale(tape.constant(gt), -1.0));
    tape.backward(tape.squared_norm(diff));
  }
  const Vector analytic = net.grads();
  Vector params = net.params();
  Vector fd = Vector::Zero(params.size());
  // probe a spread of parameters, including biases at the tail of each layer
  std::vector<Index> probes;
  for (Index i = 0; i < params.size(); i += std::max<Index>(1, params.size() / 24))
    probes.push_back(i);
  probes.push_back(params.size() - 1);
  Vector fd_probe(Index(probes.size())), an_probe(Index(probes.size()));
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const Index i = probes[pi];
    const double saved = params[i];
    const double hstep = 1e-5;
    params[i] = saved + hstep;
    net.set_params(params);
    const double up = loss_value();
    params[i] = saved - hstep;
    net.set_params(params);
    const double down = loss_value();
    params[i] = saved;
    net.set_params(params);
    fd_probe[Index(pi)] = (up - down) / (2 * hstep);
    an_probe[Index(pi)] = analytic[i];
  }
  CHECK(rel_err(fd_probe, an_probe) <= 1e-6);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Vector p = Vector::Constant(3, 1.5);
    AdamState st(3);
    adam_step(p, Vector::Zero(3), st);
    CHECK((p.array() == 1.5).all());
  }

  SUBCASE("first step magnitude is close to the learning rate") {
    for (double g : {1e-3, 0.1, 10.0}) {
      Vector p = Vector::Zero(1);
      AdamState st(1);
      adam_step(p, Vector::Constant(1, g), st);
      CHECK(std::abs(p[0]) >= 0.99 * st.cfg.lr);
      CHECK(std::abs(p[0]) <= st.cfg.lr);
    }
  }

  SUBCASE("descends on a convex quadratic") {
    Vector w = Vector::Constant(1, 1.0);
    AdamState st(1);
    double prev = w[0];
    for (int i = 0; i < 2; ++i) {
      adam_step(w, w, st);  // grad of 1/2 w^2 is w
      CHECK(w[0] < prev);
      prev = w[0];
    }
  }
}
