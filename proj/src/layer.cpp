#include "vpseg/layer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "vpseg/grid.hpp"
#include "vpseg/image_io.hpp"
#include "vpseg/kernels.hpp"

namespace vpseg {

static_assert(std::endian::native == std::endian::little, "tensor files are little endian");

namespace {

constexpr char kMagic[4] = {'V', 'P', 'T', 'V'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError("truncated tensor file " + path.string());
  }
  return v;
}

}  // namespace

void LayerConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("layer eps must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("layer lambda must be nonnegative");
  if (!(step_q() > 0.0)) throw std::invalid_argument("layer tau_q must be positive");
  if (n_f_inner == 0) throw std::invalid_argument("layer n_f_inner must be at least 1");
}

LayerOutput vptv_forward(const FeatureTensor& o, const LayerConfig& cfg) {
  cfg.validate();
  if (o.height * o.width != o.values.cols()) {
    throw std::invalid_argument("vptv_forward: logits do not match the grid shape");
  }
  for (double v : o.values.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("vptv_forward: non-finite logit");
  }
  if (cfg.volume &&
      (cfg.volume->phases() != o.phases() || cfg.volume->pixels() != o.values.cols())) {
    throw std::invalid_argument("vptv_forward: volume does not match the logits");
  }
  CostVolume c = o.values;
  for (double& v : c.data()) v = -v;
  const EdgeWeight edge = unit_edge_weight(o.height, o.width);

  LayerCache cache;
  cache.eps = cfg.eps;
  cache.q = TVDualField::zeros(o.phases(), o.height, o.width);
  cache.f.assign(o.phases(), 0.0);
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const SoftSegmentation u = softmax_step(c, cache.q, cache.f, cfg.eps, o.height, o.width);
    cache.q = update_q(std::move(cache.q), u, cfg.step_q(), cfg.lambda, edge);
    if (cfg.volume) {
      cache.f = volume_step(c, cache.q, cache.f, *cfg.volume, cfg.eps, cfg.n_f_inner);
    }
  }
  // z = (o - div q + f) / eps = (f - K) / eps with K = -o + div q.
  const Matrix k = assemble_cost(c, cache.q);
  cache.z = Matrix(k.rows(), k.cols());
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = 0; j < k.cols(); ++j) cache.z(i, j) = (cache.f[i] - k(i, j)) / cfg.eps;
  }
  cache.u = SoftSegmentation{o.height, o.width, Matrix(k.rows(), k.cols())};
  kernels::gibbs_columns(k, cache.f, cfg.eps, cache.u.u);
  return {cache.u, std::move(cache)};
}

FeatureTensor vptv_backward(const FeatureTensor& grad_u, const LayerCache& cache,
                            const LayerConfig& cfg) {
  const Matrix& u = cache.u.u;
  if (!grad_u.values.same_shape(u) || grad_u.height != cache.u.height ||
      grad_u.width != cache.u.width) {
    throw std::invalid_argument("vptv_backward: gradient shape does not match the cache");
  }
  if (cfg.eps != cache.eps) throw std::invalid_argument("vptv_backward: eps differs from the cache");
  FeatureTensor out{grad_u.height, grad_u.width, Matrix(u.rows(), u.cols())};
  for (std::size_t j = 0; j < u.cols(); ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < u.rows(); ++i) dot += grad_u.values(i, j) * u(i, j);
    for (std::size_t i = 0; i < u.rows(); ++i) {
      out.values(i, j) = u(i, j) * (grad_u.values(i, j) - dot) / cache.eps;
    }
  }
  return out;
}

void write_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const Tensor& t : tensors) {
    std::uint64_t n = 1;
    for (auto d : t.dims) n *= d;
    if (n != t.values.size()) throw std::invalid_argument("tensor dims do not match its values");
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Tensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Tensor> tensors;
  char magic[4];
  while (in.read(magic, 4)) {
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad tensor magic in " + path.string());
    if (get<std::uint32_t>(in, path) != kVersion) {
      throw IoError("unsupported tensor version in " + path.string());
    }
    const auto ndim = get<std::uint32_t>(in, path);
    if (ndim > 8) throw IoError("too many tensor dimensions in " + path.string());
    Tensor t;
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.dims.push_back(get<std::uint64_t>(in, path));
      n *= t.dims.back();
    }
    if (n > (std::uint64_t{1} << 32)) throw IoError("tensor too large in " + path.string());
    t.values.resize(n);
    if (!in.read(reinterpret_cast<char*>(t.values.data()),
                 static_cast<std::streamsize>(n * sizeof(double)))) {
      throw IoError("truncated tensor file " + path.string());
    }
    tensors.push_back(std::move(t));
  }
  if (tensors.empty()) throw IoError("no tensors in " + path.string());
  return tensors;
}

Tensor to_tensor(const FeatureTensor& t) {
  return {{t.phases(), t.height, t.width},
          std::vector<double>(t.values.data().begin(), t.values.data().end())};
}

FeatureTensor to_feature(const Tensor& t) {
  if (t.dims.size() != 3) throw std::invalid_argument("expected a phases x height x width tensor");
  const std::size_t i = t.dims[0];
  const std::size_t h = t.dims[1];
  const std::size_t w = t.dims[2];
  return {h, w, Matrix(i, h * w, t.values)};
}

void save_cache(const std::filesystem::path& path, const LayerCache& cache) {
  const std::size_t i = cache.u.phases();
  const std::size_t h = cache.u.height;
  const std::size_t w = cache.u.width;
  Tensor qx{{i, h, w}, {}};
  Tensor qy{{i, h, w}, {}};
  for (const auto& qi : cache.q.q) {
    qx.values.insert(qx.values.end(), qi.x.begin(), qi.x.end());
    qy.values.insert(qy.values.end(), qi.y.begin(), qi.y.end());
  }
  write_tensors(path, {Tensor{{1}, {cache.eps}}, qx, qy, Tensor{{i}, cache.f},
                       to_tensor(FeatureTensor{h, w, cache.z}),
                       to_tensor(FeatureTensor{h, w, cache.u.u})});
}

LayerCache load_cache(const std::filesystem::path& path) {
  const auto t = read_tensors(path);
  if (t.size() != 6 || t[0].values.size() != 1) throw IoError("malformed layer cache " + path.string());
  LayerCache c;
  c.eps = t[0].values[0];
  const FeatureTensor z = to_feature(t[4]);
  const FeatureTensor u = to_feature(t[5]);
  const FeatureTensor qx = to_feature(t[1]);
  const FeatureTensor qy = to_feature(t[2]);
  if (!z.values.same_shape(u.values) || !qx.values.same_shape(u.values) ||
      !qy.values.same_shape(u.values) || t[3].values.size() != u.phases()) {
    throw IoError("inconsistent layer cache " + path.string());
  }
  c.z = z.values;
  c.u = SoftSegmentation{u.height, u.width, u.values};
  c.f = t[3].values;
  c.q = TVDualField::zeros(u.phases(), u.height, u.width);
  for (std::size_t i = 0; i < u.phases(); ++i) {
    const auto rx = qx.values.row(i);
    const auto ry = qy.values.row(i);
    c.q.q[i].x.assign(rx.begin(), rx.end());
    c.q.q[i].y.assign(ry.begin(), ry.end());
  }
  return c;
}

}  // namespace vpseg
