#include "vpseg/export.hpp"

#include <charconv>
#include <fstream>

#include "vpseg/image_io.hpp"

namespace vpseg {

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const Header& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [key, value] : header) out << "# " << key << '=' << value << '\n';
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_coupling_csv(const std::filesystem::path& path, const Coupling& u,
                        const Header& header) {
  Header h = header;
  h.emplace_back("rows", std::to_string(u.rows()));
  h.emplace_back("cols", std::to_string(u.cols()));
  auto out = open_csv(path, h);
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < u.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(u(i, j));
    }
    out << '\n';
  }
  finish(out, path);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace,
                     std::size_t phases, const Header& header) {
  auto out = open_csv(path, header);
  const bool volume = !trace.empty() && !trace.front().rowsum_error.empty();
  out << "iteration,residual";
  if (volume) {
    for (std::size_t i = 0; i < phases; ++i) out << ",rowsum_error_" << i;
  }
  out << ",dual_objective\n";
  for (const TraceRow& r : trace) {
    out << r.iteration << ',' << format_double(r.residual);
    for (double e : r.rowsum_error) out << ',' << format_double(e);
    out << ',' << format_double(r.dual_objective) << '\n';
  }
  finish(out, path);
}

void write_soft_masks(const std::filesystem::path& dir, const SoftSegmentation& u,
                      const std::string& prefix) {
  for (std::size_t i = 0; i < u.phases(); ++i) {
    write_pnm(dir / (prefix + std::to_string(i) + ".pgm"), to_image(u.phase(i)), 16);
  }
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, double>>& metrics,
                       const Header& header) {
  auto out = open_csv(path, header);
  out << "metric,value\n";
  for (const auto& [key, value] : metrics) out << key << ',' << format_double(value) << '\n';
  finish(out, path);
}

}  // namespace vpseg
