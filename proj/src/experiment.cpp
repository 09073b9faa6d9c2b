#include "eqrec/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

namespace eqrec {

namespace {

constexpr std::uint64_t kTagTrainPhantoms = 0x7472;
constexpr std::uint64_t kTagTestPhantoms = 0x7465;
constexpr std::uint64_t kTagTrainNoise = 0x6e74;
constexpr std::uint64_t kTagTestNoise = 0x6e65;
constexpr std::uint64_t kTagRotNoise = 0x6e72;
constexpr std::uint64_t kTagAngles = 0x616e;
constexpr std::uint64_t kTagMask = 0x6d61;
constexpr std::uint64_t kTagInit = 0x696e;

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

Matrix image_to_raster(const Matrix& image, int channels) {
  const Index h = image.rows(), w = image.cols();
  Matrix raster = Matrix::Zero(h * w, channels);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) raster(raster_index(r, c, w), 0) = image(r, c);
  return raster;
}

Matrix raster_to_image(const Matrix& raster, Index h, Index w) {
  Matrix image(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) image(r, c) = raster(raster_index(r, c, w), 0);
  return image;
}

ProblemInstance make_problem(const ExperimentConfig& cfg) {
  ProblemInstance p;
  p.kind = cfg.problem;
  const Index n = cfg.phantom.n;
  switch (cfg.problem) {
    case ExperimentConfig::Problem::Ct: {
      RadonGeometry geom;
      geom.n = n;
      geom.n_views = cfg.ct_views;
      p.physical = std::make_unique<RadonOp>(geom);
      // the seed here is fixed so the normalization constant depends only on
      // the geometry, never on the experiment seed
      const double norm = p.physical->norm_estimate(Rng(0x4e04));
      p.meas_scale = 1.0 / norm;
      p.op = std::make_unique<ScaledOp>(*p.physical, p.meas_scale);
      p.noise = NoiseModel::lowdose(cfg.noise_n_in, cfg.noise_mu, cfg.noise_eta);
      break;
    }
    case ExperimentConfig::Problem::Mri: {
      Rng mask_rng = Rng(cfg.seed).fork(kTagMask);
      const double sigma_rows = cfg.mri_sigma_rows > 0 ? cfg.mri_sigma_rows : double(n) / 8.0;
      p.mri_rows = variable_density_rows(n, cfg.mri_fraction, cfg.mri_center_band,
                                         sigma_rows, mask_rng);
      p.op = std::make_unique<MaskedFourierOp>(n, n, p.mri_rows);
      p.noise = NoiseModel::gaussian(cfg.gaussian_sigma, true);
      break;
    }
    case ExperimentConfig::Problem::Denoise: {
      p.op = std::make_unique<IdentityOp>(n, n);
      p.noise = NoiseModel::gaussian(cfg.gaussian_sigma, false);
      break;
    }
    case ExperimentConfig::Problem::Inpaint: {
      Rng mask_rng = Rng(cfg.seed).fork(kTagMask);
      Vector mask(n * n);
      for (Index i = 0; i < mask.size(); ++i)
        mask[i] = mask_rng.uniform() < cfg.inpaint_keep ? 1.0 : 0.0;
      p.op = std::make_unique<InpaintingOp>(n, n, mask);
      p.noise = NoiseModel::gaussian(cfg.gaussian_sigma, false);
      break;
    }
  }
  return p;
}

Matrix ProblemInstance::simulate(const Matrix& image, Rng rng) const {
  switch (kind) {
    case ExperimentConfig::Problem::Ct: {
      // noise acts on the physical sinogram; the result is rescaled into the
      // normalized units the networks consume
      const Matrix sino = physical->apply(image_to_raster(image));
      return meas_scale * simulate_lowdose_ct(sino, noise, rng);
    }
    case ExperimentConfig::Problem::Mri: {
      const Matrix y = op->apply(image_to_raster(image, 2));
      return add_complex_gaussian(y, mri_rows, op->image_h(), op->image_w(), noise.sigma,
                                  rng);
    }
    case ExperimentConfig::Problem::Denoise:
    case ExperimentConfig::Problem::Inpaint: {
      const Matrix y = op->apply(image_to_raster(image));
      return add_gaussian(y, noise.sigma, rng);
    }
  }
  throw std::logic_error("unreachable");
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows) {
  out << "image_id,variant,m,train_size,orientation,angle_deg,ssim,psnr\n";
  for (const auto& r : rows) {
    const double capped_psnr = std::isfinite(r.psnr) ? r.psnr : 99.0;
    out << r.image_id << ',' << r.variant << ',' << r.m << ',' << r.train_size << ','
        << r.orientation << ',' << format_double(r.angle_deg, 4) << ','
        << format_double(r.ssim, 6) << ',' << format_double(capped_psnr, 6) << '\n';
  }
}

TrimmedStats trimmed_stats(std::vector<double> values, double trim_fraction) {
  TrimmedStats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const int drop = int(std::floor(trim_fraction * double(values.size())));
  const int lo = drop, hi = int(values.size()) - drop;
  std::vector<double> kept(values.begin() + lo, values.begin() + hi);
  if (kept.empty()) kept = values;
  s.count = int(kept.size());
  double sum = 0.0;
  for (double v : kept) sum += v;
  s.mean = sum / double(kept.size());
  auto quantile = [&](double q) {
    const double pos = q * double(kept.size() - 1);
    const int i = int(std::floor(pos));
    const double frac = pos - double(i);
    if (i + 1 >= int(kept.size())) return kept.back();
    return kept[std::size_t(i)] * (1.0 - frac) + kept[std::size_t(i) + 1] * frac;
  };
  s.q25 = quantile(0.25);
  s.q50 = quantile(0.50);
  s.q75 = quantile(0.75);
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& rows) {
  // group by (variant, m, train_size, orientation), preserving first-seen order
  std::vector<std::tuple<std::string, int, long, std::string>> keys;
  std::vector<std::vector<double>> ssims, psnrs;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.variant, r.m, r.train_size, r.orientation);
    std::size_t at = keys.size();
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (keys[i] == key) {
        at = i;
        break;
      }
    if (at == keys.size()) {
      keys.push_back(key);
      ssims.emplace_back();
      psnrs.emplace_back();
    }
    ssims[at].push_back(r.ssim);
    psnrs[at].push_back(std::isfinite(r.psnr) ? r.psnr : 99.0);
  }
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& [variant, m, size, orientation] = keys[i];
    for (auto [metric, values] :
         {std::pair<const char*, std::vector<double>*>{"ssim", &ssims[i]},
          {"psnr", &psnrs[i]}}) {
      const TrimmedStats s = trimmed_stats(*values);
      out.push_back({variant, m, size, orientation, metric, s.mean, s.q25, s.q50, s.q75,
                     s.count});
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "variant,m,train_size,orientation,metric,trimmed_mean,q25,q50,q75,count\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.m << ',' << r.train_size << ',' << r.orientation << ','
        << r.metric << ',' << format_double(r.trimmed_mean, 6) << ','
        << format_double(r.q25, 6) << ',' << format_double(r.q50, 6) << ','
        << format_double(r.q75, 6) << ',' << r.count << '\n';
}

double test_rotation_angle(std::uint64_t seed, int image_index) {
  Rng rng = Rng(seed).fork(kTagAngles + std::uint64_t(image_index) * 0x10001);
  return rng.uniform(0.0, 360.0);
}

std::vector<MetricsRecord> evaluate_net(const UnrolledNet& net, const ProblemInstance& problem,
                                        const std::vector<Matrix>& test_images,
                                        const ExperimentConfig& cfg,
                                        const std::string& variant_label, long train_size,
                                        const std::string& orientation) {
  const bool rotated = orientation == "rotated";
  const Index h = problem.op->image_h(), w = problem.op->image_w();
  const int n = int(test_images.size());
  std::vector<MetricsRecord> rows{std::size_t(n)};
  const int m = net.config().equivariant ? net.config().group_order : 1;
  parallel_for(n, cfg.threads, [&](int i) {
    const double angle = rotated ? test_rotation_angle(cfg.seed, i) : 0.0;
    const Matrix gt = rotated ? rotate_image(test_images[std::size_t(i)], angle)
                              : test_images[std::size_t(i)];
    Rng noise_rng =
        Rng(cfg.seed).fork((rotated ? kTagRotNoise : kTagTestNoise) + std::uint64_t(i) * 131);
    const Matrix y = problem.simulate(gt, noise_rng);
    const Matrix recon = raster_to_image(unrolled_forward(net, *problem.op, y), h, w);
    rows[std::size_t(i)] = {i,     variant_label,        m,
                            train_size,                  orientation,
                            angle, ssim(recon, gt, 1.0), psnr(recon, gt, 1.0)};
  });
  return rows;
}

TrainedVariant train_variant(const ExperimentConfig& cfg, const ProblemInstance& problem,
                             const std::string& variant, long train_size,
                             const std::function<void(long)>& progress) {
  PhantomSpec spec = cfg.phantom;
  spec.seed = Rng(cfg.seed).fork(kTagTrainPhantoms).seed();
  const std::vector<Matrix> images = generate_phantoms(spec, int(train_size));
  Dataset data;
  data.images.reserve(images.size());
  data.measurements.reserve(images.size());
  const int channels = cfg.net.image_channels;
  for (std::size_t i = 0; i < images.size(); ++i) {
    data.images.push_back(image_to_raster(images[i], channels));
    Rng noise_rng = Rng(cfg.seed).fork(kTagTrainNoise + std::uint64_t(i) * 131);
    data.measurements.push_back(problem.simulate(images[i], noise_rng));
  }
  NetConfig net_cfg = cfg.net;
  net_cfg.equivariant = variant == "equivariant";
  TrainedVariant out;
  out.net = init_network(net_cfg, Rng(cfg.seed).fork(kTagInit ^ (net_cfg.equivariant ? 1 : 0)));
  TrainingConfig tc = cfg.training;
  tc.seed = Rng(cfg.seed).fork(0x5eed ^ std::uint64_t(train_size)).seed();
  out.trace = train(out.net, *problem.op, data, tc, progress);
  return out;
}

namespace {

std::vector<Matrix> make_test_images(const ExperimentConfig& cfg) {
  PhantomSpec spec = cfg.phantom;
  spec.seed = Rng(cfg.seed).fork(kTagTestPhantoms).seed();
  return generate_phantoms(spec, cfg.test_size);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& trace) {
  std::ofstream out(path);
  out << "iteration,loss\n";
  for (const auto& r : trace)
    out << r.iteration << ',' << format_double(r.loss, 9) << '\n';
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream resolved(cfg.out_dir / "config_resolved.txt");
    resolved << cfg.serialize();
  }
  const ProblemInstance problem = make_problem(cfg);
  const std::vector<Matrix> test_images = make_test_images(cfg);
  std::vector<MetricsRecord> all_rows;
  for (const auto& variant : cfg.variants) {
    for (long train_size : cfg.train_sizes) {
      log << "[experiment] training " << variant << " on " << train_size << " images ("
          << cfg.training.iterations << " iterations)\n";
      log.flush();
      const TrainedVariant trained = train_variant(cfg, problem, variant, train_size);
      const std::string run_tag = variant + "_n" + std::to_string(train_size);
      save_checkpoint(cfg.out_dir / ("checkpoint_" + run_tag), trained.net);
      write_loss_csv(cfg.out_dir / ("loss_" + run_tag + ".csv"), trained.trace);
      for (const std::string orientation : {"upright", "rotated"}) {
        auto rows = evaluate_net(trained.net, problem, test_images, cfg, variant, train_size,
                                 orientation);
        all_rows.insert(all_rows.end(), rows.begin(), rows.end());
      }
      log << "[experiment] finished " << run_tag << "\n";
      log.flush();
    }
  }
  {
    std::ofstream metrics(cfg.out_dir / "metrics.csv");
    write_metrics_csv(metrics, all_rows);
  }
  {
    std::ofstream summary(cfg.out_dir / "summary.csv");
    write_summary_csv(summary, summarize(all_rows));
  }
}

void sweep_group_order(const ExperimentConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream resolved(cfg.out_dir / "config_resolved.txt");
    resolved << cfg.serialize();
  }
  const ProblemInstance problem = make_problem(cfg);
  const std::vector<Matrix> test_images = make_test_images(cfg);
  const long train_size = cfg.train_sizes.front();
  std::vector<MetricsRecord> all_rows;
  std::ofstream out(cfg.out_dir / "sweep.csv");
  out << "m,image_id,ssim,psnr,exact_action\n";
  for (long m : cfg.group_orders) {
    ExperimentConfig mc = cfg;
    mc.net.group_order = int(m);
    mc.net.equivariant = true;
    log << "[sweep-m] training m = " << m << "\n";
    log.flush();
    const TrainedVariant trained = train_variant(mc, problem, "equivariant", train_size);
    const auto rows = evaluate_net(trained.net, problem, test_images, mc, "equivariant",
                                   train_size, "upright");
    const CyclicGroup group{int(m)};
    bool exact = true;
    for (int k = 0; k < group.m; ++k) exact = exact && group.on_grid(k);
    for (const auto& r : rows)
      out << m << ',' << r.image_id << ',' << format_double(r.ssim, 6) << ','
          << format_double(std::isfinite(r.psnr) ? r.psnr : 99.0, 6) << ','
          << (exact ? 1 : 0) << '\n';
  }
}

namespace {

// Single lift / nonlinearity / project stack used by the first-figure demo.
struct DemoFilter {
  ConvLayer lift, project;
};

DemoFilter make_demo_filter(bool equivariant, int width, Rng rng) {
  const CyclicGroup g(equivariant ? 4 : 1);
  const FieldType in = FieldType::trivials(g.m, 1);
  const FieldType mid = equivariant ? FieldType::regulars(g.m, width / g.m)
                                    : FieldType::trivials(1, width);
  const FieldType out = FieldType::trivials(g.m, 1);
  DemoFilter f;
  f.lift = ConvLayer(in, mid, 3, g, equivariant);
  f.project = ConvLayer(mid, out, 3, g, equivariant);
  he_init(f.lift, rng);
  he_init(f.project, rng);
  return f;
}

Matrix demo_filter_apply(const DemoFilter& f, const Matrix& y, Index h, Index w) {
  const Matrix z = leaky_relu_forward(conv2d_forward(y, h, w, f.lift));
  return conv2d_forward(z, h, w, f.project);
}

Fig1Result train_demo_filter(DemoFilter& f, const Matrix& clean, const Matrix& noisy,
                             Index n, long iterations, double lr) {
  Vector params(f.lift.param_count() + f.project.param_count());
  auto read_params = [&]() {
    Index at = 0;
    for (ConvLayer* l : {&f.lift, &f.project}) {
      params.segment(at, l->coeff_count()) = l->coeffs;
      at += l->coeff_count();
      params.segment(at, l->bias_count()) = l->bias;
      at += l->bias_count();
    }
  };
  auto write_params = [&]() {
    Index at = 0;
    for (ConvLayer* l : {&f.lift, &f.project}) {
      l->coeffs = params.segment(at, l->coeff_count());
      at += l->coeff_count();
      l->bias = params.segment(at, l->bias_count());
      at += l->bias_count();
    }
  };
  auto read_grads = [&]() {
    Vector g(params.size());
    Index at = 0;
    for (ConvLayer* l : {&f.lift, &f.project}) {
      g.segment(at, l->coeff_count()) = l->grad_coeffs;
      at += l->coeff_count();
      g.segment(at, l->bias_count()) = l->grad_bias;
      at += l->bias_count();
    }
    return g;
  };
  read_params();
  AdamState adam(params.size(), AdamConfig{lr, 0.9, 0.999, 1e-8});
  const Matrix clean_raster = image_to_raster(clean);
  const Matrix noisy_raster = image_to_raster(noisy);
  for (long it = 0; it < iterations; ++it) {
    Tape tape;
    const int y = tape.input(noisy_raster, FieldType::trivials(1, 1), n, n);
    const int z = tape.leaky_relu(tape.conv(y, f.lift));
    const int u = tape.conv(z, f.project);
    const int diff = tape.add(u, tape.scale(tape.constant(clean_raster), -1.0));
    const int loss = tape.squared_norm(diff);
    f.lift.grad_coeffs.setZero();
    f.lift.grad_bias.setZero();
    f.project.grad_coeffs.setZero();
    f.project.grad_bias.setZero();
    tape.backward(loss);
    adam_step(params, read_grads(), adam);
    write_params();
  }
  Fig1Result result;
  const Matrix denoised = raster_to_image(demo_filter_apply(f, noisy_raster, n, n), n, n);
  result.train_psnr = psnr(denoised, clean, 1.0);
  const Matrix clean_rot = rotate_image(clean, 90.0);
  const Matrix noisy_rot = rotate_image(noisy, 90.0);
  const Matrix denoised_rot =
      raster_to_image(demo_filter_apply(f, image_to_raster(noisy_rot), n, n), n, n);
  result.rotated_psnr = psnr(denoised_rot, clean_rot, 1.0);
  return result;
}

}  // namespace

Fig1Report demo_fig1(Index n, double noise_sigma, int width, long iterations, double lr,
                     std::uint64_t seed, const std::filesystem::path& out_dir) {
  // strongly oriented training image: horizontal bands
  Matrix clean(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      clean(r, c) = 0.5 + 0.45 * std::sin(2.0 * M_PI * double(r) / 6.0);
  Rng rng = Rng(seed).fork(0xf161);
  Matrix noisy = add_gaussian(clean, noise_sigma, rng);

  Fig1Report report;
  DemoFilter equi = make_demo_filter(true, width, Rng(seed).fork(0xe9));
  report.equivariant = train_demo_filter(equi, clean, noisy, n, iterations, lr);
  DemoFilter ord = make_demo_filter(false, width, Rng(seed).fork(0x0d));
  report.ordinary = train_demo_filter(ord, clean, noisy, n, iterations, lr);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_pgm(out_dir / "clean.pgm", clean);
    write_pgm(out_dir / "noisy.pgm", noisy);
    const Matrix noisy_rot = rotate_image(noisy, 90.0);
    write_pgm(out_dir / "noisy_rotated.pgm", noisy_rot);
    write_pgm(out_dir / "equivariant_rotated.pgm",
              raster_to_image(demo_filter_apply(equi, image_to_raster(noisy_rot), n, n), n, n));
    write_pgm(out_dir / "ordinary_rotated.pgm",
              raster_to_image(demo_filter_apply(ord, image_to_raster(noisy_rot), n, n), n, n));
    std::ofstream txt(out_dir / "fig1_metrics.txt");
    txt << "equivariant train_psnr = " << format_double(report.equivariant.train_psnr, 6)
        << "\nequivariant rotated_psnr = " << format_double(report.equivariant.rotated_psnr, 6)
        << "\nordinary train_psnr = " << format_double(report.ordinary.train_psnr, 6)
        << "\nordinary rotated_psnr = " << format_double(report.ordinary.rotated_psnr, 6)
        << "\n";
  }
  return report;
}

Fig2Report demo_fig2(Index n, double keep_fraction, double tv_weight, int outer_iterations,
                     std::uint64_t seed, const std::filesystem::path& out_dir) {
  PhantomSpec spec;
  spec.n = n;
  spec.seed = Rng(seed).fork(0xf162).seed();
  const Matrix image = generate_phantoms(spec, 1).front();
  Rng mask_rng = Rng(seed).fork(0xf163);
  Vector mask(n * n);
  for (Index i = 0; i < mask.size(); ++i)
    mask[i] = mask_rng.uniform() < keep_fraction ? 1.0 : 0.0;
  const Vector ones = Vector::Ones(n * n);

  Fig2Report report;
  const auto masked20 = tv_inpainting_demo(image, mask, 20.0, tv_weight, outer_iterations);
  const auto masked90 = tv_inpainting_demo(image, mask, 90.0, tv_weight, outer_iterations);
  const auto identity90 = tv_inpainting_demo(image, ones, 90.0, tv_weight, outer_iterations);
  report.masked_20deg = masked20.discrepancy;
  report.masked_90deg = masked90.discrepancy;
  report.identity_90deg = identity90.discrepancy;

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_pgm(out_dir / "image.pgm", image);
    write_pgm(out_dir / "recon_upright.pgm", masked20.recon_upright);
    write_pgm(out_dir / "recon_rotated20.pgm", masked20.recon_rotated);
    std::ofstream txt(out_dir / "fig2_metrics.txt");
    txt << "masked 20deg discrepancy = " << format_double(report.masked_20deg, 6)
        << "\nmasked 90deg discrepancy = " << format_double(report.masked_90deg, 6)
        << "\nidentity 90deg discrepancy = " << format_double(report.identity_90deg, 9)
        << "\n";
  }
  return report;
}

KdeCurve kde_curve(const std::vector<double>& values, int grid_points) {
  KdeCurve curve;
  if (values.empty()) return curve;
  const int n = int(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(var / double(n - 1)) : 0.0;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * double(n - 1);
    const int i = int(std::floor(pos));
    const double frac = pos - double(i);
    if (i + 1 >= n) return sorted.back();
    return sorted[std::size_t(i)] * (1.0 - frac) + sorted[std::size_t(i) + 1] * frac;
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1e-3;
  const double h = 0.9 * spread * std::pow(double(n), -0.2);
  const double lo = sorted.front() - 3.0 * h, hi = sorted.back() + 3.0 * h;
  curve.x.resize(std::size_t(grid_points));
  curve.y.resize(std::size_t(grid_points));
  const double norm = 1.0 / (double(n) * h * std::sqrt(2.0 * M_PI));
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + (hi - lo) * double(i) / double(grid_points - 1);
    double acc = 0.0;
    for (double v : values) {
      const double z = (x - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    curve.x[std::size_t(i)] = x;
    curve.y[std::size_t(i)] = acc * norm;
  }
  return curve;
}

}  // namespace eqrec
