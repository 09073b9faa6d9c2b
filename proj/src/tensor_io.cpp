#include "eqrec/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace eqrec {

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_tensor(const std::filesystem::path& path, const EtnTensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_tensor: cannot open " + path.string());
  out.write("ETN1", 4);
  out.put(char(0));  // dtype f64
  out.put(char(tensor.dims.size()));
  for (auto d : tensor.dims) write_u64(out, d);
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            std::streamsize(tensor.data.size() * 8));
  if (!out) throw std::runtime_error("save_tensor: write failed for " + path.string());
}

EtnTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_tensor: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ETN1", 4) != 0)
    throw std::runtime_error("load_tensor: bad magic in " + path.string());
  const int dtype = in.get();
  if (dtype != 0) throw std::runtime_error("load_tensor: unsupported dtype");
  const int rank = in.get();
  EtnTensor t;
  t.dims.resize(std::size_t(rank));
  for (int i = 0; i < rank; ++i) t.dims[std::size_t(i)] = read_u64(in);
  t.data.resize(t.element_count());
  in.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size() * 8));
  if (!in) throw std::runtime_error("load_tensor: truncated payload in " + path.string());
  return t;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  EtnTensor t;
  t.dims = {std::uint64_t(m.rows()), std::uint64_t(m.cols())};
  t.data.resize(std::size_t(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      t.data[std::size_t(r * m.cols() + c)] = m(r, c);
  save_tensor(path, t);
}

Matrix load_matrix(const std::filesystem::path& path) {
  const EtnTensor t = load_tensor(path);
  if (t.dims.size() != 2) throw std::runtime_error("load_matrix: expected rank 2");
  Matrix m(Index(t.dims[0]), Index(t.dims[1]));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      m(r, c) = t.data[std::size_t(r * m.cols() + c)];
  return m;
}

void write_pgm(const std::filesystem::path& path, const Matrix& image, int bits) {
  if (bits != 8 && bits != 16) throw std::invalid_argument("write_pgm: bits must be 8 or 16");
  const int maxval = bits == 8 ? 255 : 65535;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
  out << "P5\n" << image.cols() << " " << image.rows() << "\n" << maxval << "\n";
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 1.0);
      const unsigned q = unsigned(std::lround(v * maxval));
      if (bits == 8) {
        out.put(char(q));
      } else {
        out.put(char((q >> 8) & 0xff));  // big-endian per PGM spec
        out.put(char(q & 0xff));
      }
    }
}

Matrix read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm: cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2")
    throw std::runtime_error("read_pgm: unsupported format " + magic);
  auto next_token = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("read_pgm: truncated header");
  };
  const Index w = std::stol(next_token());
  const Index h = std::stol(next_token());
  const long maxval = std::stol(next_token());
  Matrix img(h, w);
  if (magic == "P2") {
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) {
        long v;
        in >> v;
        img(r, c) = double(v) / double(maxval);
      }
  } else {
    in.get();  // single whitespace after maxval
    const bool wide = maxval > 255;
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) {
        int v = in.get();
        if (wide) v = (v << 8) | in.get();
        img(r, c) = double(v) / double(maxval);
      }
  }
  if (!in) throw std::runtime_error("read_pgm: truncated payload");
  return img;
}

namespace {

Vector to_vector(const std::vector<double>& v) {
  Vector out(Index(v.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = v[std::size_t(i)];
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const UnrolledNet& net) {
  std::filesystem::create_directories(dir);
  const NetConfig& cfg = net.config();
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("save_checkpoint: cannot write manifest");
  manifest << "eqrec-checkpoint v1\n";
  manifest << "iterations = " << cfg.iterations << "\n";
  manifest << "width = " << cfg.width << "\n";
  manifest << "memory_channels = " << cfg.memory_channels << "\n";
  manifest << "ksize = " << cfg.ksize << "\n";
  manifest << "image_channels = " << cfg.image_channels << "\n";
  manifest << "equivariant = " << (cfg.equivariant ? 1 : 0) << "\n";
  manifest << "group_order = " << cfg.group_order << "\n";
  int bi = 0;
  for (const auto& block : net.blocks()) {
    const std::string prefix = "block" + std::to_string(bi++);
    for (auto [name, layer] : {std::pair<const char*, const ConvLayer*>{"lift", &block.lift},
                               {"intermediate", &block.intermediate},
                               {"project", &block.project}}) {
      for (auto [part, vec] : {std::pair<const char*, const Vector*>{"coeffs", &layer->coeffs},
                               {"bias", &layer->bias}}) {
        const std::string fname = prefix + "_" + name + "_" + part + ".etn";
        EtnTensor t;
        t.dims = {std::uint64_t(vec->size())};
        t.data.assign(vec->data(), vec->data() + vec->size());
        save_tensor(dir / fname, t);
        manifest << "tensor " << fname << "\n";
      }
    }
  }
}

UnrolledNet load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("load_checkpoint: missing manifest");
  std::string line;
  std::getline(manifest, line);
  if (line != "eqrec-checkpoint v1")
    throw std::runtime_error("load_checkpoint: unsupported version header: " + line);
  NetConfig cfg;
  std::vector<std::string> tensors;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "tensor") {
      std::string name;
      ss >> name;
      tensors.push_back(name);
      continue;
    }
    std::string eq;
    long value;
    ss >> eq >> value;
    if (eq != "=") throw std::runtime_error("load_checkpoint: malformed manifest line: " + line);
    if (key == "iterations") cfg.iterations = int(value);
    else if (key == "width") cfg.width = int(value);
    else if (key == "memory_channels") cfg.memory_channels = int(value);
    else if (key == "ksize") cfg.ksize = int(value);
    else if (key == "image_channels") cfg.image_channels = int(value);
    else if (key == "equivariant") cfg.equivariant = value != 0;
    else if (key == "group_order") cfg.group_order = int(value);
    else throw std::runtime_error("load_checkpoint: unknown manifest key: " + key);
  }
  UnrolledNet net(cfg);
  std::size_t at = 0;
  for (auto& block : net.blocks())
    for (ConvLayer* layer : {&block.lift, &block.intermediate, &block.project})
      for (Vector* vec : {&layer->coeffs, &layer->bias}) {
        if (at >= tensors.size()) throw std::runtime_error("load_checkpoint: missing tensors");
        const EtnTensor t = load_tensor(dir / tensors[at++]);
        if (Index(t.element_count()) != vec->size())
          throw std::runtime_error("load_checkpoint: tensor size mismatch in " +
                                   tensors[at - 1]);
        *vec = to_vector(t.data);
      }
  return net;
}

}  // namespace eqrec
