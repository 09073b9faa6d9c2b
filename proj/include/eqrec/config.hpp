#pragma once

#include "eqrec/noise.hpp"
#include "eqrec/phantom.hpp"
#include "eqrec/tv.hpp"
#include "eqrec/unrolled.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eqrec {

// Flat `key = value` configuration with [section] headers and # comments.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<long> get_int_list(const std::string& section, const std::string& key,
                                 std::vector<long> fallback) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    std::vector<std::string> fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  // Keys present in the file but never read; used to reject typos.
  std::vector<std::string> unread_keys() const;

  std::string serialize() const;

 private:
  // section -> key -> value, with read tracking
  mutable std::map<std::string, std::map<std::string, std::pair<std::string, bool>>> data_;
};

// Fully resolved experiment description.
struct ExperimentConfig {
  enum class Problem { Ct, Mri, Denoise, Inpaint } problem = Problem::Ct;

  // image / phantom
  PhantomSpec phantom;

  // geometry and noise
  int ct_views = 10;
  double noise_n_in = 1e4;
  double noise_mu = 0.02;
  double noise_eta = 1e-8;
  double gaussian_sigma = 0.05;     // MRI / denoising noise level
  double mri_fraction = 0.20;       // sampled k-space fraction
  double mri_center_band = 0.04;
  double mri_sigma_rows = 0.0;      // 0: default h/8
  double inpaint_keep = 0.5;        // kept pixel fraction

  // network
  NetConfig net;
  std::vector<std::string> variants = {"equivariant", "ordinary"};
  std::vector<long> group_orders = {4};    // sweep-m list

  // training / evaluation
  TrainingConfig training;
  std::vector<long> train_sizes = {10, 50};
  int test_size = 100;

  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  int threads = 1;

  static ExperimentConfig from_config(const ConfigFile& cfg);
  std::string serialize() const;
};

ExperimentConfig::Problem parse_problem(const std::string& name);
std::string problem_name(ExperimentConfig::Problem p);

}  // namespace eqrec
