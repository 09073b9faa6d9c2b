#include "eqrec/experiment.hpp"
#include "eqrec/tensor_io.hpp"
#include "eqrec/unrolled.hpp"

#include <doctest.h>

using namespace eqrec;

namespace {

NetConfig small_cfg(bool equivariant) {
  NetConfig cfg;
  cfg.iterations = 2;
  cfg.width = 8;
  cfg.memory_channels = 3;
  cfg.equivariant = equivariant;
  cfg.group_order = 4;
  return cfg;
}

// Character-formula counts for the layer coefficient dimensions.
long expected_equivariant_coeffs(const NetConfig& cfg, int in_ch, int out_ch) {
  // per-pair counts for Z_4 with 3x3 filters: trivial->trivial 3,
  // trivial->regular 9, regular->trivial 9, regular->regular 36
  const int fields = cfg.width / cfg.group_order;
  const long lift = long(in_ch) * fields * 9;
  const long mid = long(fields) * fields * 36;
  const long proj = long(fields) * out_ch * 9;
  return lift + mid + proj;
}

}  // namespace

TEST_CASE("prox block basics") {
  Rng rng(61);
  const NetConfig cfg = small_cfg(true);
  UnrolledNet net = init_network(cfg, rng);
  ProxBlock& block = net.blocks().front();
  const Index h = 6, w = 6;

  SUBCASE("zero intermediate makes the block purely affine") {
    Matrix u(h * w, 1), s(h * w, 3), g(h * w, 1);
    for (Index i = 0; i < u.size(); ++i) u.data()[i] = rng.normal();
    for (Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const auto [u1, s1] = prox_block_apply(block, u, s, g, h, w);
    // with K_intermediate = 0 the residual branch vanishes
    Matrix x(h * w, 5);
    x << u, s, g;
    const Matrix direct = conv2d_forward(conv2d_forward(x, h, w, block.lift), h, w,
                                         block.project);
    CHECK((u1 - direct.leftCols(1)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s1 - direct.rightCols(3)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("zero inputs and zero biases map to zero") {
    const auto [u1, s1] = prox_block_apply(block, Matrix::Zero(h * w, 1),
                                           Matrix::Zero(h * w, 3), Matrix::Zero(h * w, 1), h,
                                           w);
    CHECK(u1.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("channel mismatch is rejected") {
    CHECK_THROWS_AS(prox_block_apply(block, Matrix::Zero(h * w, 2), Matrix::Zero(h * w, 3),
                                     Matrix::Zero(h * w, 2), h, w),
                    std::invalid_argument);
  }
}

TEST_CASE("equivariant prox blocks commute with on-grid rotations") {
  Rng rng(67);
  const Index n = 8;
  const CyclicGroup z4(4);
  for (int trial = 0; trial < 5; ++trial) {
    NetConfig cfg = small_cfg(true);
    UnrolledNet net = init_network(cfg, rng.fork(std::uint64_t(trial)));
    // give the residual branch random weights too
    Vector p = net.params();
    for (Index i = 0; i < p.size(); ++i) p[i] += 0.3 * rng.normal();
    net.set_params(p);
    const ProxBlock& block = net.blocks().front();
    Matrix u(n * n, 1), s(n * n, 3), g(n * n, 1);
    for (Index i = 0; i < u.size(); ++i) u.data()[i] = rng.normal();
    for (Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    for (int k = 0; k < 4; ++k) {
      const PlanarIsometry rot{Vector2::Zero(), k, z4};
      auto rotate = [&](const Matrix& m) {
        FeatureField f(n, n, FieldType::trivials(4, int(m.cols())), m);
        return act_on_field(rot, f).data;
      };
      const auto [u1, s1] = prox_block_apply(block, u, s, g, n, n);
      const auto [u2, s2] = prox_block_apply(block, rotate(u), rotate(s), rotate(g), n, n);
      CHECK((u2 - rotate(u1)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((s2 - rotate(s1)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("unrolled forward") {
  Rng rng(71);

  SUBCASE("all-zero parameters produce the zero image") {
    NetConfig cfg = small_cfg(true);
    UnrolledNet net(cfg);  // parameters default to zero
    IdentityOp op(6, 6);
    Matrix y(36, 1);
    for (Index i = 0; i < 36; ++i) y(i, 0) = rng.normal();
    CHECK(unrolled_forward(net, op, y).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("degenerate zero-iteration config returns u0 = 0") {
    NetConfig cfg = small_cfg(false);
    cfg.iterations = 0;
    UnrolledNet net = init_network(cfg, rng);
    IdentityOp op(5, 5);
    const Matrix y = Matrix::Ones(25, 1);
    CHECK(unrolled_forward(net, op, y).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("denoising-mode equivariant net commutes with rotations") {
    NetConfig cfg = small_cfg(true);
    UnrolledNet net = init_network(cfg, rng);
    const Index n = 8;
    IdentityOp op(n, n);
    Matrix y(n * n, 1);
    for (Index i = 0; i < y.size(); ++i) y(i, 0) = rng.normal();
    auto rotate = [&](const Matrix& m) {
      FeatureField f(n, n, FieldType::trivials(4, 1), m);
      return act_on_field({Vector2::Zero(), 1, CyclicGroup(4)}, f).data;
    };
    const Matrix lhs = unrolled_forward(net, op, rotate(y));
    const Matrix rhs = rotate(unrolled_forward(net, op, y));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("init_network contracts") {
  SUBCASE("paper widths: m=4 gives 24 regular fields of 4 channels") {
    NetConfig cfg;
    cfg.iterations = 1;
    cfg.width = 96;
    cfg.equivariant = true;
    cfg.group_order = 4;
    UnrolledNet net = init_network(cfg, Rng(1));
    const ConvLayer& lift = net.blocks().front().lift;
    CHECK(lift.out_channels() == 96);
    CHECK(lift.out_type().fields() == 24);
    CHECK(lift.out_type().blocks().front().rep.dim() == 4);
  }

  SUBCASE("ordinary variant has 96 trivial channels") {
    NetConfig cfg;
    cfg.iterations = 1;
    cfg.width = 96;
    cfg.equivariant = false;
    UnrolledNet net = init_network(cfg, Rng(1));
    CHECK(net.blocks().front().lift.out_channels() == 96);
    CHECK(net.blocks().front().lift.out_type().fields() == 96);
  }

  SUBCASE("width not divisible by m is rejected") {
    NetConfig cfg;
    cfg.width = 10;
    cfg.group_order = 4;
    cfg.equivariant = true;
    CHECK_THROWS_AS((void)UnrolledNet{cfg}, std::invalid_argument);
  }

  SUBCASE("same seed gives bit-identical networks") {
    NetConfig cfg = small_cfg(true);
    UnrolledNet a = init_network(cfg, Rng(99));
    UnrolledNet b = init_network(cfg, Rng(99));
    CHECK((a.params() - b.params()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("parameter accounting") {
  const NetConfig eq = small_cfg(true);
  const NetConfig ord = small_cfg(false);
  UnrolledNet eq_net(eq), ord_net(ord);

  // coefficient dimensions against the character-formula oracle
  const long expected = 2 * expected_equivariant_coeffs(eq, 5, 4);
  CHECK(eq_net.coeff_count() == expected);

  const long ordinary_expected =
      2L * (5 * 8 * 9 + 8 * 8 * 9 + 8 * 4 * 9);  // full kernel dims per block
  CHECK(ord_net.coeff_count() == ordinary_expected);

  CHECK(eq_net.coeff_count() < ord_net.coeff_count());
}

TEST_CASE("an ordinary net reproduces any equivariant net exactly") {
  Rng rng(73);
  NetConfig cfg = small_cfg(true);
  UnrolledNet net = init_network(cfg, rng);
  Vector p = net.params();
  for (Index i = 0; i < p.size(); ++i) p[i] += 0.2 * rng.normal();
  net.set_params(p);

  UnrolledNet plain(small_cfg(false));
  for (std::size_t b = 0; b < net.blocks().size(); ++b) {
    plain.blocks()[b].lift = net.blocks()[b].lift.to_ordinary();
    plain.blocks()[b].intermediate = net.blocks()[b].intermediate.to_ordinary();
    plain.blocks()[b].project = net.blocks()[b].project.to_ordinary();
  }
  RadonGeometry geom;
  geom.n = 8;
  geom.n_views = 5;
  RadonOp op(geom);
  Matrix y(op.meas_rows(), 1);
  for (Index i = 0; i < y.size(); ++i) y(i, 0) = rng.normal();
  const Matrix a = unrolled_forward(net, op, y);
  const Matrix b = unrolled_forward(plain, op, y);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
}

TEST_CASE("training") {
  SUBCASE("overfits a single pair in denoising mode") {
    Rng rng(79);
    NetConfig cfg = small_cfg(true);
    UnrolledNet net = init_network(cfg, rng);
    const Index n = 8;
    IdentityOp op(n, n);
    Matrix gt(n * n, 1);
    for (Index i = 0; i < gt.size(); ++i) gt(i, 0) = rng.uniform();
    Dataset data;
    data.images.push_back(gt);
    data.measurements.push_back(add_gaussian(gt, 0.1, rng));
    TrainingConfig tc;
    tc.iterations = 2000;
    tc.adam.lr = 1e-3;
    tc.seed = 7;
    const auto trace = train(net, op, data, tc);
    CHECK(trace.back().loss < 0.1 * trace.front().loss);
  }

  SUBCASE("zero-target data with zero-initialized net stays at zero loss") {
    NetConfig cfg = small_cfg(false);
    UnrolledNet net(cfg);  // all parameters zero
    IdentityOp op(4, 4);
    Dataset data;
    data.images.push_back(Matrix::Zero(16, 1));
    data.measurements.push_back(Matrix::Zero(16, 1));
    TrainingConfig tc;
    tc.iterations = 10;
    const Vector before = net.params();
    const auto trace = train(net, op, data, tc);
    CHECK(trace.back().loss == 0.0);
    CHECK((net.params() - before).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("loss trace is reproducible bit-exactly") {
    auto run = [&]() {
      NetConfig cfg = small_cfg(true);
      UnrolledNet net = init_network(cfg, Rng(11));
      IdentityOp op(6, 6);
      Rng rng(13);
      Dataset data;
      for (int i = 0; i < 3; ++i) {
        Matrix gt(36, 1);
        for (Index j = 0; j < 36; ++j) gt(j, 0) = rng.uniform();
        data.images.push_back(gt);
        data.measurements.push_back(add_gaussian(gt, 0.05, rng));
      }
      TrainingConfig tc;
      tc.iterations = 50;
      tc.log_every = 10;
      tc.seed = 17;
      return train(net, op, data, tc);
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].iteration == b[i].iteration);
      CHECK(a[i].loss == b[i].loss);
    }
  }

  SUBCASE("empty dataset is rejected") {
    NetConfig cfg = small_cfg(false);
    UnrolledNet net(cfg);
    IdentityOp op(4, 4);
    Dataset data;
    TrainingConfig tc;
    CHECK_THROWS_AS(train(net, op, data, tc), std::invalid_argument);
  }
}

TEST_CASE("checkpoint round trip") {
  Rng rng(83);
  NetConfig cfg = small_cfg(true);
  UnrolledNet net = init_network(cfg, rng);
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "eqrec_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir, net);
  const UnrolledNet loaded = load_checkpoint(dir);
  CHECK(loaded.config() == net.config());
  CHECK((loaded.params() - net.params()).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}
