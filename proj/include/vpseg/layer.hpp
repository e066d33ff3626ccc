#pragma once

// Volume-preserving TV softmax as a standalone tensor operation. The forward
// pass unrolls the segmentation loop with cost -o for T iterations; the
// backward pass differentiates only the final softmax and holds the last TV
// dual and volume dual fixed.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "vpseg/matrix.hpp"
#include "vpseg/segmenter.hpp"
#include "vpseg/volume.hpp"

namespace vpseg {

/// Logits (or gradients) with phases as rows and pixels as columns.
struct FeatureTensor {
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix values;

  std::size_t phases() const noexcept { return values.rows(); }
};

struct LayerConfig {
  double eps = 1.0;
  double lambda = 0.0;
  std::optional<double> tau_q;  ///< defaults to 0.5 * eps
  std::size_t iterations = 30;  ///< unroll depth T
  std::optional<VolumeSpec> volume;
  std::size_t n_f_inner = 1;

  double step_q() const { return tau_q.value_or(0.5 * eps); }
  void validate() const;
};

struct LayerCache {
  TVDualField q;          ///< q^T
  std::vector<double> f;  ///< f^T
  Matrix z;               ///< (o - div q^T + f^T) / eps
  SoftSegmentation u;
  double eps = 1.0;
};

struct LayerOutput {
  SoftSegmentation u;
  LayerCache cache;
};

LayerOutput vptv_forward(const FeatureTensor& o, const LayerConfig& cfg);

/// grad_o = u * (grad_u - <grad_u, u>) / eps per pixel. Throws
/// std::invalid_argument when the gradient or config does not match the cache.
FeatureTensor vptv_backward(const FeatureTensor& grad_u, const LayerCache& cache,
                            const LayerConfig& cfg);

/// Flat binary tensor: "VPTV", uint32 version, uint32 ndim, uint64 dims,
/// float64 row-major values (little endian).
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

void write_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensors(const std::filesystem::path& path);

/// phases x height x width tensor <-> FeatureTensor.
Tensor to_tensor(const FeatureTensor& t);
FeatureTensor to_feature(const Tensor& t);

/// Cache bundle: [eps], q^T x, q^T y, f^T, z, u.
void save_cache(const std::filesystem::path& path, const LayerCache& cache);
LayerCache load_cache(const std::filesystem::path& path);

}  // namespace vpseg
