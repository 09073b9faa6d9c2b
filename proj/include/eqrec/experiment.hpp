#pragma once

#include "eqrec/config.hpp"
#include "eqrec/metrics.hpp"
#include "eqrec/tensor_io.hpp"

#include <iosfwd>
#include <memory>

namespace eqrec {

// Forward operator plus measurement simulation for one experiment. The
// networks consume `op`, a spectrally normalized view of the physical
// operator (|A| = 1), so the gradient channel entering the prox blocks has
// the classical 1/L step scale; measurement simulation stays in physical
// units and is rescaled to match.
struct ProblemInstance {
  std::unique_ptr<ForwardOperator> physical;
  std::unique_ptr<ForwardOperator> op;
  double meas_scale = 1.0;
  ExperimentConfig::Problem kind;
  NoiseModel noise;
  std::vector<std::uint8_t> mri_rows;  // row mask (MRI only)

  // Simulated noisy measurements of an H x W image in the network's scale
  // (channel expansion for MRI happens here: the imaginary part starts at
  // zero).
  Matrix simulate(const Matrix& image, Rng rng) const;
};

ProblemInstance make_problem(const ExperimentConfig& cfg);

Matrix image_to_raster(const Matrix& image, int channels = 1);
Matrix raster_to_image(const Matrix& raster, Index h, Index w);  // first channel

struct MetricsRecord {
  int image_id = 0;
  std::string variant;
  int m = 1;
  long train_size = 0;
  std::string orientation;  // "upright" or "rotated"
  double angle_deg = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows);

struct SummaryRow {
  std::string variant;
  int m = 1;
  long train_size = 0;
  std::string orientation;
  std::string metric;
  double trimmed_mean = 0.0;
  double q25 = 0.0, q50 = 0.0, q75 = 0.0;
  int count = 0;
};

// 5%-trimmed statistics (top and bottom 5% of values dropped).
struct TrimmedStats {
  double mean = 0.0;
  double q25 = 0.0, q50 = 0.0, q75 = 0.0;
  int count = 0;
};
TrimmedStats trimmed_stats(std::vector<double> values, double trim_fraction = 0.05);

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

// Deterministic per-image test rotation angle in [0, 360).
double test_rotation_angle(std::uint64_t seed, int image_index);

// Reconstruction + metrics over a test set; angle_mode "upright" evaluates
// the images as-is, "rotated" re-simulates measurements of each rotated
// image. Fan-out across images honours `threads`; results merge in index
// order regardless of the thread count.
std::vector<MetricsRecord> evaluate_net(const UnrolledNet& net, const ProblemInstance& problem,
                                        const std::vector<Matrix>& test_images,
                                        const ExperimentConfig& cfg,
                                        const std::string& variant_label, long train_size,
                                        const std::string& orientation);

struct TrainedVariant {
  UnrolledNet net;
  std::vector<LossRecord> trace;
};

// Train one variant on `train_size` phantoms drawn from the experiment seed.
TrainedVariant train_variant(const ExperimentConfig& cfg, const ProblemInstance& problem,
                             const std::string& variant, long train_size,
                             const std::function<void(long)>& progress = {});

// Full grid (variant x train size): writes metrics.csv, summary.csv, loss
// traces, checkpoints and the resolved config under cfg.out_dir.
void run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Group-order sweep at fixed training set; writes sweep.csv.
void sweep_group_order(const ExperimentConfig& cfg, std::ostream& log);

struct Fig1Result {
  double train_psnr = 0.0;
  double rotated_psnr = 0.0;
};

struct Fig1Report {
  Fig1Result equivariant;
  Fig1Result ordinary;
};

// Single-block denoising demo: trains one lift/nonlinearity/project stack
// per variant on a single clean/noisy pair, then tests on the 90-degree
// rotated pair. Writes the images when out_dir is non-empty.
Fig1Report demo_fig1(Index n, double noise_sigma, int width, long iterations, double lr,
                     std::uint64_t seed, const std::filesystem::path& out_dir);

struct Fig2Report {
  double masked_20deg = 0.0;
  double masked_90deg = 0.0;
  double identity_90deg = 0.0;
};

// TV-regularised inpainting equivariance demo.
Fig2Report demo_fig2(Index n, double keep_fraction, double tv_weight, int outer_iterations,
                     std::uint64_t seed, const std::filesystem::path& out_dir);

// Gaussian kernel density estimate with Silverman bandwidth, 256 grid points.
struct KdeCurve {
  std::vector<double> x, y;
};
KdeCurve kde_curve(const std::vector<double>& values, int grid_points = 256);

}  // namespace eqrec
