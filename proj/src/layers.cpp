#include "eqrec/layers.hpp"

#include <vector>

namespace eqrec {

namespace {

// im2col scratch reused across calls; conv GEMMs dominate training cost and
// per-call allocation of tens of MB would thrash mmap.
thread_local std::vector<Scalar> g_patch_buffer;

Eigen::Map<Matrix> patch_workspace(Index rows, Index cols) {
  const std::size_t need = std::size_t(rows) * std::size_t(cols);
  if (g_patch_buffer.size() < need) g_patch_buffer.resize(need);
  return {g_patch_buffer.data(), rows, cols};
}

// patches(p, i*s*s + t) = in(shifted p, i), zero outside; t = gy*s + gx and
// the sample sits at (r + gy - hs, c + gx - hs).
void im2col(const Eigen::Ref<const Matrix>& in, Index h, Index w, int s,
            Eigen::Map<Matrix>& patches) {
  const int hs = s / 2;
  const Index cin = in.cols();
  patches.setZero();
  for (Index i = 0; i < cin; ++i) {
    for (int gy = 0; gy < s; ++gy) {
      const Index dy = gy - hs;
      const Index r_lo = std::max(Index(0), -dy);
      const Index r_hi = h - 1 - std::max(Index(0), dy);
      for (int gx = 0; gx < s; ++gx) {
        const Index dx = gx - hs;
        const Index c_lo = std::max(Index(0), -dx);
        const Index c_hi = w - 1 - std::max(Index(0), dx);
        if (r_lo > r_hi || c_lo > c_hi) continue;
        const Index len = c_hi - c_lo + 1;
        auto dst = patches.col(i * s * s + gy * s + gx);
        auto src = in.col(i);
        for (Index r = r_lo; r <= r_hi; ++r)
          dst.segment(r * w + c_lo, len) = src.segment((r + dy) * w + c_lo + dx, len);
      }
    }
  }
}

// Transpose of im2col: scatter-add patch gradients back onto the image.
void col2im(const Eigen::Ref<const Matrix>& dpatches, Index h, Index w, int s,
            Matrix& din) {
  const int hs = s / 2;
  const Index cin = din.cols();
  din.setZero();
  for (Index i = 0; i < cin; ++i) {
    for (int gy = 0; gy < s; ++gy) {
      const Index dy = gy - hs;
      const Index r_lo = std::max(Index(0), -dy);
      const Index r_hi = h - 1 - std::max(Index(0), dy);
      for (int gx = 0; gx < s; ++gx) {
        const Index dx = gx - hs;
        const Index c_lo = std::max(Index(0), -dx);
        const Index c_hi = w - 1 - std::max(Index(0), dx);
        if (r_lo > r_hi || c_lo > c_hi) continue;
        const Index len = c_hi - c_lo + 1;
        auto src = dpatches.col(i * s * s + gy * s + gx);
        auto dst = din.col(i);
        for (Index r = r_lo; r <= r_hi; ++r)
          dst.segment((r + dy) * w + c_lo + dx, len) += src.segment(r * w + c_lo, len);
      }
    }
  }
}

}  // namespace

ConvLayer::ConvLayer(FieldType in_type, FieldType out_type, int ksize, CyclicGroup group,
                     bool equivariant)
    : in_type_(std::move(in_type)), out_type_(std::move(out_type)), ksize_(ksize),
      group_(group), equivariant_(equivariant) {
  if (ksize < 1 || ksize % 2 == 0)
    throw std::invalid_argument("ConvLayer: kernel size must be odd");
  int n_coeffs = 0;
  if (equivariant_) {
    for (const auto& ob : out_type_.blocks()) {
      for (const auto& ib : in_type_.blocks()) {
        KernelSpec spec(ib.rep, ob.rep, ksize_, group_);
        pair_offsets_.push_back(n_coeffs);
        pair_bases_.push_back(kernel_basis_nullspace(spec));
        n_coeffs += ob.multiplicity * ib.multiplicity * pair_bases_.back().count();
      }
    }
  } else {
    n_coeffs = out_channels() * in_channels() * ksize_ * ksize_;
  }
  coeffs = Vector::Zero(n_coeffs);
  bias = Vector::Zero(out_type_.fields());
  grad_coeffs = Vector::Zero(n_coeffs);
  grad_bias = Vector::Zero(out_type_.fields());
}

// Visit every (out block, in block, out field, in field) combination with
// the channel offsets and coefficient slice it owns.
template <typename Fn>
void ConvLayer::for_each_pair(Fn&& fn) const {
  int pair = 0;
  int out_off = 0, out_field = 0;
  for (const auto& ob : out_type_.blocks()) {
    const int dj = ob.rep.dim();
    int in_off = 0, in_field = 0;
    for (const auto& ib : in_type_.blocks()) {
      const int di = ib.rep.dim();
      const KernelBasis& basis = pair_bases_[std::size_t(pair)];
      const int nb = basis.count();
      int coeff = pair_offsets_[std::size_t(pair)];
      for (int of = 0; of < ob.multiplicity; ++of)
        for (int if_ = 0; if_ < ib.multiplicity; ++if_) {
          fn(basis, out_off + of * dj, in_off + if_ * di, dj, di, coeff);
          coeff += nb;
        }
      in_off += di * ib.multiplicity;
      in_field += ib.multiplicity;
      ++pair;
    }
    out_off += dj * ob.multiplicity;
    out_field += ob.multiplicity;
  }
}

Matrix ConvLayer::kernel_matrix() const {
  const int s = ksize_, ss = s * s;
  const int cin = in_channels(), cout = out_channels();
  Matrix km = Matrix::Zero(Index(cin) * ss, cout);
  if (!equivariant_) {
    for (int o = 0; o < cout; ++o)
      for (int i = 0; i < cin; ++i)
        for (int t = 0; t < ss; ++t)
          km(Index(i) * ss + t, o) = coeffs[(Index(o) * cin + i) * ss + t];
    return km;
  }
  for_each_pair([&](const KernelBasis& basis, int go, int gi, int dj, int di, int coeff) {
    for (int b = 0; b < basis.count(); ++b) {
      const double wgt = coeffs[coeff + b];
      if (wgt == 0.0) continue;
      const auto& el = basis.elements;
      for (int r = 0; r < dj; ++r)
        for (int q = 0; q < di; ++q)
          for (int t = 0; t < ss; ++t)
            km(Index(gi + q) * ss + t, go + r) += wgt * el((r * di + q) * ss + t, b);
    }
  });
  return km;
}

void ConvLayer::accumulate_kernel_grad(const Matrix& dkernel) {
  const int s = ksize_, ss = s * s;
  const int cin = in_channels(), cout = out_channels();
  if (!equivariant_) {
    for (int o = 0; o < cout; ++o)
      for (int i = 0; i < cin; ++i)
        for (int t = 0; t < ss; ++t)
          grad_coeffs[(Index(o) * cin + i) * ss + t] += dkernel(Index(i) * ss + t, o);
    return;
  }
  for_each_pair([&](const KernelBasis& basis, int go, int gi, int dj, int di, int coeff) {
    for (int b = 0; b < basis.count(); ++b) {
      double acc = 0.0;
      const auto& el = basis.elements;
      for (int r = 0; r < dj; ++r)
        for (int q = 0; q < di; ++q)
          for (int t = 0; t < ss; ++t)
            acc += el((r * di + q) * ss + t, b) * dkernel(Index(gi + q) * ss + t, go + r);
      grad_coeffs[coeff + b] += acc;
    }
  });
}

ConvLayer ConvLayer::to_ordinary() const {
  ConvLayer plain(FieldType::trivials(1, in_channels()),
                  FieldType::trivials(1, out_channels()), ksize_, CyclicGroup(1), false);
  const Matrix km = kernel_matrix();
  const int ss = ksize_ * ksize_;
  const int cin = in_channels();
  for (int o = 0; o < out_channels(); ++o)
    for (int i = 0; i < cin; ++i)
      for (int t = 0; t < ss; ++t)
        plain.coeffs[(Index(o) * cin + i) * ss + t] = km(Index(i) * ss + t, o);
  // broadcast the field-shared bias to per-channel biases
  int field = 0, ch = 0;
  for (const auto& ob : out_type_.blocks())
    for (int f = 0; f < ob.multiplicity; ++f) {
      for (int d = 0; d < ob.rep.dim(); ++d) plain.bias[ch++] = bias[field];
      ++field;
    }
  return plain;
}

void he_init(ConvLayer& layer, Rng& rng) {
  const double fan_in = double(layer.in_channels()) * layer.ksize() * layer.ksize();
  layer.bias.setZero();
  if (!layer.equivariant()) {
    const double sigma = std::sqrt(2.0 / fan_in);
    for (Index i = 0; i < layer.coeffs.size(); ++i) layer.coeffs[i] = sigma * rng.normal();
    return;
  }
  // Coefficient-space scaling: with an orthonormal basis the realized kernel
  // entries of each pair block average variance sigma^2 * count / entries,
  // so sigma^2 = 2 * dj * di / (Cin_total * count) matches He in expectation.
  const int cin_total = layer.in_channels();
  int pair = 0;
  std::vector<double> pair_sigma;
  for (const auto& ob : layer.out_type().blocks())
    for (const auto& ib : layer.in_type().blocks()) {
      const int nb = layer.pair_bases()[std::size_t(pair)].count();
      pair_sigma.push_back(
          nb == 0 ? 0.0
                  : std::sqrt(2.0 * ob.rep.dim() * ib.rep.dim() / (double(cin_total) * nb)));
      ++pair;
    }
  // walk coefficients in storage order
  pair = 0;
  Index at = 0;
  for (const auto& ob : layer.out_type().blocks()) {
    for (const auto& ib : layer.in_type().blocks()) {
      const int nb = layer.pair_bases()[std::size_t(pair)].count();
      const double sigma = pair_sigma[std::size_t(pair)];
      for (int f = 0; f < ob.multiplicity * ib.multiplicity; ++f)
        for (int b = 0; b < nb; ++b) layer.coeffs[at++] = sigma * rng.normal();
      ++pair;
    }
  }
}

Matrix conv2d_forward(const Eigen::Ref<const Matrix>& in, Index h, Index w,
                      const ConvLayer& layer) {
  if (in.cols() != layer.in_channels() || in.rows() != h * w)
    throw std::invalid_argument("conv2d: input shape does not match layer");
  const int s = layer.ksize();
  auto patches = patch_workspace(h * w, Index(layer.in_channels()) * s * s);
  im2col(in, h, w, s, patches);
  Matrix out(h * w, layer.out_channels());
  out.noalias() = patches * layer.kernel_matrix();
  int field = 0, ch = 0;
  for (const auto& ob : layer.out_type().blocks())
    for (int f = 0; f < ob.multiplicity; ++f) {
      for (int d = 0; d < ob.rep.dim(); ++d) out.col(ch++).array() += layer.bias[field];
      ++field;
    }
  return out;
}

Matrix conv2d_backward(const Eigen::Ref<const Matrix>& in, Index h, Index w,
                       ConvLayer& layer, const Eigen::Ref<const Matrix>& dout) {
  const int s = layer.ksize();
  const Matrix km = layer.kernel_matrix();
  // bias gradient: sum over pixels, shared across each field's channels
  int field = 0, ch = 0;
  for (const auto& ob : layer.out_type().blocks())
    for (int f = 0; f < ob.multiplicity; ++f) {
      double acc = 0.0;
      for (int d = 0; d < ob.rep.dim(); ++d) acc += dout.col(ch++).sum();
      layer.grad_bias[field++] += acc;
    }
  // kernel gradient via recomputed patches
  auto patches = patch_workspace(h * w, Index(layer.in_channels()) * s * s);
  im2col(in, h, w, s, patches);
  Matrix dkm(km.rows(), km.cols());
  dkm.noalias() = patches.transpose() * dout;
  layer.accumulate_kernel_grad(dkm);
  // input gradient: spread dout through the transposed kernel
  Matrix dpatches(h * w, km.rows());
  dpatches.noalias() = dout * km.transpose();
  Matrix din(h * w, layer.in_channels());
  col2im(dpatches, h, w, s, din);
  return din;
}

FeatureField conv2d(const FeatureField& f, const ConvLayer& layer) {
  FeatureField out(f.h, f.w, layer.out_type());
  out.data = conv2d_forward(f.data, f.h, f.w, layer);
  out.approx_action = f.approx_action;
  return out;
}

}  // namespace eqrec
