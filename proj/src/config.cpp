#include "eqrec/config.hpp"

#include <fstream>
#include <sstream>

namespace eqrec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.data_[section][key] = {value, false};
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return fallback;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return fallback;
  k->second.second = true;
  return k->second.first;
}

std::string ConfigFile::require(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw config_error("missing required config key [" + section + "] " + key);
  return get(section, key, "");
}

long ConfigFile::get_int(const std::string& section, const std::string& key,
                         long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  try {
    std::size_t used = 0;
    const long out = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw config_error("config key [" + section + "] " + key + ": not an integer: " + v);
  }
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw config_error("config key [" + section + "] " + key + ": not a number: " + v);
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("config key [" + section + "] " + key + ": not a boolean: " + v);
}

std::vector<std::string> ConfigFile::get_list(const std::string& section,
                                              const std::string& key,
                                              std::vector<std::string> fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  std::vector<std::string> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<long> ConfigFile::get_int_list(const std::string& section, const std::string& key,
                                           std::vector<long> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<long> out;
  for (const auto& item : get_list(section, key, {})) {
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw config_error("config key [" + section + "] " + key + ": bad integer: " + item);
    }
  }
  return out;
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
  data_[section][key] = {value, true};
}

std::vector<std::string> ConfigFile::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [section, keys] : data_)
    for (const auto& [key, entry] : keys)
      if (!entry.second) out.push_back("[" + section + "] " + key);
  return out;
}

std::string ConfigFile::serialize() const {
  std::ostringstream out;
  for (const auto& [section, keys] : data_) {
    if (!section.empty()) out << "[" << section << "]\n";
    for (const auto& [key, entry] : keys) out << key << " = " << entry.first << "\n";
    out << "\n";
  }
  return out.str();
}

ExperimentConfig::Problem parse_problem(const std::string& name) {
  if (name == "ct") return ExperimentConfig::Problem::Ct;
  if (name == "mri") return ExperimentConfig::Problem::Mri;
  if (name == "denoise") return ExperimentConfig::Problem::Denoise;
  if (name == "inpaint") return ExperimentConfig::Problem::Inpaint;
  throw config_error("unknown problem kind: " + name);
}

std::string problem_name(ExperimentConfig::Problem p) {
  switch (p) {
    case ExperimentConfig::Problem::Ct: return "ct";
    case ExperimentConfig::Problem::Mri: return "mri";
    case ExperimentConfig::Problem::Denoise: return "denoise";
    case ExperimentConfig::Problem::Inpaint: return "inpaint";
  }
  return "ct";
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& cfg) {
  ExperimentConfig out;
  out.problem = parse_problem(cfg.get("problem", "kind", "ct"));
  out.phantom.n = cfg.get_int("problem", "size", 64);
  const std::string pk = cfg.get("data", "phantom", "ellipses");
  if (pk == "ellipses") out.phantom.kind = PhantomSpec::Kind::Ellipses;
  else if (pk == "smooth_blobs") out.phantom.kind = PhantomSpec::Kind::SmoothBlobs;
  else throw config_error("unknown phantom kind: " + pk);

  out.ct_views = int(cfg.get_int("problem", "views", 10));
  out.noise_n_in = cfg.get_double("problem", "n_in", 1e4);
  out.noise_mu = cfg.get_double("problem", "mu", 0.02);
  out.noise_eta = cfg.get_double("problem", "eta", 1e-8);
  out.gaussian_sigma = cfg.get_double("problem", "sigma", 0.05);
  out.mri_fraction = cfg.get_double("problem", "mri_fraction", 0.20);
  out.mri_center_band = cfg.get_double("problem", "mri_center_band", 0.04);
  out.mri_sigma_rows = cfg.get_double("problem", "mri_sigma_rows", 0.0);
  out.inpaint_keep = cfg.get_double("problem", "inpaint_keep", 0.5);

  out.net.iterations = int(cfg.get_int("net", "iterations", 8));
  out.net.width = int(cfg.get_int("net", "width", 96));
  out.net.memory_channels = int(cfg.get_int("net", "memory", 5));
  out.net.ksize = int(cfg.get_int("net", "ksize", 3));
  out.net.group_order = int(cfg.get_int("net", "m", 4));
  out.net.image_channels = out.problem == Problem::Mri ? 2 : 1;

  out.variants = cfg.get_list("net", "variants", {"equivariant", "ordinary"});
  for (const auto& v : out.variants)
    if (v != "equivariant" && v != "ordinary")
      throw config_error("unknown variant: " + v);
  out.group_orders = cfg.get_int_list("net", "m_list", {4});

  out.training.iterations = cfg.get_int("train", "iterations", 20000);
  out.training.adam.lr = cfg.get_double("train", "lr", 1e-4);
  out.training.adam.beta1 = cfg.get_double("train", "beta1", 0.9);
  out.training.adam.beta2 = cfg.get_double("train", "beta2", 0.999);
  out.training.adam.eps = cfg.get_double("train", "eps", 1e-8);
  out.training.log_every = int(cfg.get_int("train", "log_every", 100));
  out.train_sizes = cfg.get_int_list("data", "train_sizes", {10, 50});
  out.test_size = int(cfg.get_int("data", "test_size", 100));

  out.seed = std::uint64_t(cfg.get_int("run", "seed", 0));
  out.out_dir = cfg.get("run", "out", "out");
  out.threads = int(cfg.get_int("run", "threads", 1));

  const auto unread = cfg.unread_keys();
  if (!unread.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unread) msg += " " + k;
    throw config_error(msg);
  }
  return out;
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "[problem]\n";
  out << "kind = " << problem_name(problem) << "\n";
  out << "size = " << phantom.n << "\n";
  out << "views = " << ct_views << "\n";
  out << "n_in = " << noise_n_in << "\n";
  out << "mu = " << noise_mu << "\n";
  out << "eta = " << noise_eta << "\n";
  out << "sigma = " << gaussian_sigma << "\n";
  out << "mri_fraction = " << mri_fraction << "\n";
  out << "mri_center_band = " << mri_center_band << "\n";
  out << "mri_sigma_rows = " << mri_sigma_rows << "\n";
  out << "inpaint_keep = " << inpaint_keep << "\n";
  out << "\n[net]\n";
  out << "iterations = " << net.iterations << "\n";
  out << "width = " << net.width << "\n";
  out << "memory = " << net.memory_channels << "\n";
  out << "ksize = " << net.ksize << "\n";
  out << "m = " << net.group_order << "\n";
  out << "variants = ";
  for (std::size_t i = 0; i < variants.size(); ++i)
    out << (i ? "," : "") << variants[i];
  out << "\n";
  out << "m_list = ";
  for (std::size_t i = 0; i < group_orders.size(); ++i)
    out << (i ? "," : "") << group_orders[i];
  out << "\n";
  out << "\n[train]\n";
  out << "iterations = " << training.iterations << "\n";
  out << "lr = " << training.adam.lr << "\n";
  out << "beta1 = " << training.adam.beta1 << "\n";
  out << "beta2 = " << training.adam.beta2 << "\n";
  out << "eps = " << training.adam.eps << "\n";
  out << "log_every = " << training.log_every << "\n";
  out << "\n[data]\n";
  out << "phantom = "
      << (phantom.kind == PhantomSpec::Kind::Ellipses ? "ellipses" : "smooth_blobs") << "\n";
  out << "train_sizes = ";
  for (std::size_t i = 0; i < train_sizes.size(); ++i)
    out << (i ? "," : "") << train_sizes[i];
  out << "\n";
  out << "test_size = " << test_size << "\n";
  out << "\n[run]\n";
  out << "seed = " << seed << "\n";
  out << "out = " << out_dir.string() << "\n";
  out << "threads = " << threads << "\n";
  return out.str();
}

}  // namespace eqrec
