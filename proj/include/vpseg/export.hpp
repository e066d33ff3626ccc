#pragma once

// CSV and image outputs. Every CSV starts with '#' comment lines carrying the
// dimensions and run parameters.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vpseg/matrix.hpp"
#include "vpseg/segmenter.hpp"

namespace vpseg {

/// Ordered key=value pairs written as "# key=value" header lines.
using Header = std::vector<std::pair<std::string, std::string>>;

void write_coupling_csv(const std::filesystem::path& path, const Coupling& u, const Header& header);

/// Columns: iteration, residual, rowsum_error_<i>..., dual_objective.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace,
                     std::size_t phases, const Header& header);

/// One 16-bit PGM per phase: <dir>/<prefix><i>.pgm.
void write_soft_masks(const std::filesystem::path& dir, const SoftSegmentation& u,
                      const std::string& prefix = "mask_");

/// Two-column key,value CSV.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, double>>& metrics,
                       const Header& header);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace vpseg
