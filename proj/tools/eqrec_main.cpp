// Command-line entry point: training, reconstruction, evaluation, the
// rotation-robustness experiment grid, the group-order sweep, the two
// demos, basis dumps and KDE plot data.

#include "eqrec/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace eqrec;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalArgs {
  std::string config_path;
  long seed = -1;
  std::string out;
  int threads = 0;
};

ExperimentConfig load_config(const GlobalArgs& args) {
  ConfigFile file = args.config_path.empty() ? ConfigFile::parse_string("")
                                             : ConfigFile::parse_file(args.config_path);
  ExperimentConfig cfg = ExperimentConfig::from_config(file);
  if (args.seed >= 0) cfg.seed = std::uint64_t(args.seed);
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.threads > 0) cfg.threads = args.threads;
  return cfg;
}

void write_resolved(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir / "config_resolved.txt");
  out << cfg.serialize();
}

int cmd_train(const ExperimentConfig& cfg, const std::string& variant) {
  write_resolved(cfg);
  const ProblemInstance problem = make_problem(cfg);
  const long train_size = cfg.train_sizes.front();
  std::cout << "[train] " << variant << " on " << train_size << " images, "
            << cfg.training.iterations << " iterations\n";
  const TrainedVariant trained = train_variant(cfg, problem, variant, train_size);
  save_checkpoint(cfg.out_dir / ("checkpoint_" + variant + "_n" + std::to_string(train_size)),
                  trained.net);
  std::ofstream loss(cfg.out_dir / ("loss_" + variant + "_n" + std::to_string(train_size) +
                                    ".csv"));
  loss << "iteration,loss\n";
  char buf[64];
  for (const auto& r : trained.trace) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9f\n", r.iteration, r.loss);
    loss << buf;
  }
  std::cout << "[train] final loss " << trained.trace.back().loss << "\n";
  return kExitOk;
}

int cmd_reconstruct(const ExperimentConfig& cfg, const std::string& checkpoint, int index) {
  write_resolved(cfg);
  const ProblemInstance problem = make_problem(cfg);
  const UnrolledNet net = load_checkpoint(checkpoint);
  PhantomSpec spec = cfg.phantom;
  spec.seed = Rng(cfg.seed).fork(0x7465).seed();
  const auto images = generate_phantoms(spec, index + 1);
  const Matrix& gt = images.back();
  Rng noise_rng = Rng(cfg.seed).fork(0x6e65 + std::uint64_t(index) * 131);
  const Matrix y = problem.simulate(gt, noise_rng);
  const Matrix recon =
      raster_to_image(unrolled_forward(net, *problem.op, y), problem.op->image_h(),
                      problem.op->image_w());
  save_matrix(cfg.out_dir / "reconstruction.etn", recon);
  write_pgm(cfg.out_dir / "reconstruction.pgm", recon);
  write_pgm(cfg.out_dir / "ground_truth.pgm", gt);
  std::cout << "[reconstruct] image " << index << " ssim " << ssim(recon, gt, 1.0) << " psnr "
            << psnr(recon, gt, 1.0) << "\n";
  return kExitOk;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint,
                 const std::string& orientation) {
  write_resolved(cfg);
  const ProblemInstance problem = make_problem(cfg);
  const UnrolledNet net = load_checkpoint(checkpoint);
  PhantomSpec spec = cfg.phantom;
  spec.seed = Rng(cfg.seed).fork(0x7465).seed();
  const auto images = generate_phantoms(spec, cfg.test_size);
  const std::string variant = net.config().equivariant ? "equivariant" : "ordinary";
  const auto rows = evaluate_net(net, problem, images, cfg, variant, 0, orientation);
  std::ofstream out(cfg.out_dir / "metrics.csv");
  write_metrics_csv(out, rows);
  std::ofstream summary(cfg.out_dir / "summary.csv");
  write_summary_csv(summary, summarize(rows));
  std::cout << "[evaluate] wrote " << rows.size() << " rows\n";
  return kExitOk;
}

int cmd_basis(int m, const std::string& rep_in, const std::string& rep_out, int size,
              const std::string& out_path) {
  const CyclicGroup group(m);
  auto parse_rep = [&](const std::string& name) {
    if (name == "trivial") return Representation::trivial(m);
    if (name == "regular") return Representation::regular(m);
    if (name.rfind("irrep", 0) == 0) return Representation::irrep(m, std::stoi(name.substr(5)));
    throw config_error("unknown representation: " + name +
                       " (expected trivial, regular or irrep<f>)");
  };
  const KernelSpec spec(parse_rep(rep_in), parse_rep(rep_out), size, group);
  const KernelBasis basis = kernel_basis_nullspace(spec);
  EtnTensor t;
  t.dims = {std::uint64_t(basis.count()), std::uint64_t(spec.dim_out()),
            std::uint64_t(spec.dim_in()), std::uint64_t(size), std::uint64_t(size)};
  t.data.resize(t.element_count());
  for (int b = 0; b < basis.count(); ++b)
    for (Index e = 0; e < basis.elements.rows(); ++e)
      t.data[std::size_t(b) * std::size_t(basis.elements.rows()) + std::size_t(e)] =
          basis.elements(e, b);
  save_tensor(out_path, t);
  std::cout << "[basis] " << rep_in << " -> " << rep_out << " m=" << m << " s=" << size
            << ": " << basis.count() << " elements"
            << (basis.exact ? " (exact)" : " (approximate action)") << "\n";
  return kExitOk;
}

int cmd_plotdata(const std::string& input, const std::string& column,
                 const std::string& variant, const std::string& orientation,
                 long train_size, const std::string& out_path) {
  std::ifstream in(input);
  if (!in) throw config_error("plotdata: cannot open " + input);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::istringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto col_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return int(i);
    throw config_error("plotdata: column not found: " + name);
  };
  const int want = col_index(column);
  const int variant_col = col_index("variant");
  const int orient_col = col_index("orientation");
  const int size_col = col_index("train_size");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!variant.empty() && fields[std::size_t(variant_col)] != variant) continue;
    if (!orientation.empty() && fields[std::size_t(orient_col)] != orientation) continue;
    if (train_size >= 0 && std::stol(fields[std::size_t(size_col)]) != train_size) continue;
    values.push_back(std::stod(fields[std::size_t(want)]));
  }
  const KdeCurve curve = kde_curve(values);
  std::ofstream out(out_path);
  out << "x,y\n";
  char buf[80];
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.8f,%.8f\n", curve.x[i], curve.y[i]);
    out << buf;
  }
  std::cout << "[plotdata] " << values.size() << " samples -> " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Roto-translationally equivariant learned reconstruction benchmark"};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--config", global.config_path, "experiment config file");
  app.add_option("--seed", global.seed, "override the experiment seed");
  app.add_option("--out", global.out, "override the output directory");
  app.add_option("--threads", global.threads, "evaluation fan-out width");

  auto* train_cmd = app.add_subcommand("train", "train one variant");
  std::string variant = "equivariant";
  train_cmd->add_option("--variant", variant, "equivariant or ordinary");

  auto* recon_cmd = app.add_subcommand("reconstruct", "reconstruct one test image");
  std::string checkpoint;
  int image_index = 0;
  recon_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  recon_cmd->add_option("--index", image_index, "test image index");

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test set");
  std::string eval_checkpoint, eval_orientation = "upright";
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--orientation", eval_orientation, "upright or rotated");

  auto* exp_cmd = app.add_subcommand("experiment", "full variant x train-size grid");

  auto* sweep_cmd = app.add_subcommand("sweep-m", "group-order sweep");

  auto* demo_cmd = app.add_subcommand("demo", "paper-figure demos");
  std::string which_demo;
  demo_cmd->add_option("which", which_demo, "fig1 or fig2")->required();
  long fig1_iters = 3000;
  double fig1_sigma = 0.3, fig1_lr = 1e-3;
  int fig1_width = 16, demo_n = 64;
  demo_cmd->add_option("--iters", fig1_iters, "demo training iterations");
  demo_cmd->add_option("--sigma", fig1_sigma, "fig1 noise level");
  demo_cmd->add_option("--lr", fig1_lr, "fig1 learning rate");
  demo_cmd->add_option("--width", fig1_width, "fig1 filter width");
  demo_cmd->add_option("--size", demo_n, "demo image size");
  double fig2_keep = 0.5, fig2_tau = 0.1;
  int fig2_outer = 500;
  demo_cmd->add_option("--keep", fig2_keep, "fig2 kept pixel fraction");
  demo_cmd->add_option("--tau", fig2_tau, "fig2 TV weight");
  demo_cmd->add_option("--outer", fig2_outer, "fig2 outer iterations");

  auto* basis_cmd = app.add_subcommand("basis", "dump a steerable kernel basis");
  int basis_m = 4, basis_size = 3;
  std::string basis_in = "trivial", basis_out = "regular", basis_path = "basis.etn";
  basis_cmd->add_option("--m", basis_m, "group order");
  basis_cmd->add_option("--rep-in", basis_in, "trivial, regular or irrep<f>");
  basis_cmd->add_option("--rep-out", basis_out, "trivial, regular or irrep<f>");
  basis_cmd->add_option("--size", basis_size, "filter size (odd)");
  basis_cmd->add_option("--file", basis_path, "output tensor file");

  auto* plot_cmd = app.add_subcommand("plotdata", "kernel density estimate of a metrics column");
  std::string plot_input, plot_column = "ssim", plot_variant, plot_orientation,
              plot_out = "kde.csv";
  long plot_train_size = -1;
  plot_cmd->add_option("--input", plot_input, "metrics csv")->required();
  plot_cmd->add_option("--column", plot_column, "ssim or psnr");
  plot_cmd->add_option("--variant", plot_variant, "filter by variant");
  plot_cmd->add_option("--orientation", plot_orientation, "filter by orientation");
  plot_cmd->add_option("--train-size", plot_train_size, "filter by train size");
  plot_cmd->add_option("--file", plot_out, "output csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(load_config(global), variant);
    if (*recon_cmd) return cmd_reconstruct(load_config(global), checkpoint, image_index);
    if (*eval_cmd) return cmd_evaluate(load_config(global), eval_checkpoint, eval_orientation);
    if (*exp_cmd) {
      const ExperimentConfig cfg = load_config(global);
      run_experiment(cfg, std::cout);
      return kExitOk;
    }
    if (*sweep_cmd) {
      const ExperimentConfig cfg = load_config(global);
      sweep_group_order(cfg, std::cout);
      return kExitOk;
    }
    if (*demo_cmd) {
      const ExperimentConfig cfg = load_config(global);
      if (which_demo == "fig1") {
        const Fig1Report r = demo_fig1(demo_n, fig1_sigma, fig1_width, fig1_iters, fig1_lr,
                                       cfg.seed, cfg.out_dir);
        std::cout << "equivariant: train " << r.equivariant.train_psnr << " dB, rotated "
                  << r.equivariant.rotated_psnr << " dB\n"
                  << "ordinary:    train " << r.ordinary.train_psnr << " dB, rotated "
                  << r.ordinary.rotated_psnr << " dB\n";
        return kExitOk;
      }
      if (which_demo == "fig2") {
        const Fig2Report r = demo_fig2(demo_n, fig2_keep, fig2_tau, fig2_outer, cfg.seed,
                                       cfg.out_dir);
        std::cout << "masked 20deg discrepancy:   " << r.masked_20deg << "\n"
                  << "masked 90deg discrepancy:   " << r.masked_90deg << "\n"
                  << "identity 90deg discrepancy: " << r.identity_90deg << "\n";
        return kExitOk;
      }
      throw config_error("unknown demo: " + which_demo);
    }
    if (*basis_cmd) return cmd_basis(basis_m, basis_in, basis_out, basis_size, basis_path);
    if (*plot_cmd)
      return cmd_plotdata(plot_input, plot_column, plot_variant, plot_orientation,
                          plot_train_size, plot_out);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const numerical_error& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
