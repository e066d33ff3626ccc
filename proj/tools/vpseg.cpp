// Command-line front end: segmentation runs, parameter sweeps, the small
// transport example, synthetic images and the VPTV layer.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numerical
// failure with no usable iterate.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "vpseg/exact_ot.hpp"
#include "vpseg/export.hpp"
#include "vpseg/image_io.hpp"
#include "vpseg/kernels.hpp"
#include "vpseg/layer.hpp"
#include "vpseg/ot.hpp"
#include "vpseg/segmenter.hpp"
#include "vpseg/synth.hpp"

namespace fs = std::filesystem;
using namespace vpseg;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

struct RunConfig {
  fs::path input;
  std::size_t phases = 2;
  std::string volume = "off";
  double eps = 0.01;
  double lambda = 0.05;
  std::optional<double> tau_q;
  double tol = 1e-3;
  std::size_t max_outer = 1000;
  std::size_t n_inner = 1;
  std::uint64_t seed = 1;
  std::string cost = "scalar";
  std::size_t refresh_every = 0;
  double edge_sharpness = 0.0;
  double edge_sigma = 1.0;
  fs::path out = "out";
  fs::path ground_truth;
};

void add_run_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--input", cfg.input, "Input image (PGM/PPM/PNG)");
  app.add_option("--phases", cfg.phases, "Number of phases")->check(CLI::Range(2, 21));
  app.add_option("--volume", cfg.volume,
                 "Phase volumes in ascending-intensity phase order: percentages (35,65), "
                 "ratios (0.35,0.65), pixel counts, or 'off'");
  app.add_option("--eps", cfg.eps, "Entropic weight")->check(CLI::PositiveNumber);
  app.add_option("--lambda", cfg.lambda, "TV weight")->check(CLI::NonNegativeNumber);
  app.add_option("--tau-q", cfg.tau_q, "TV dual step (default 0.5 * eps)")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol", cfg.tol, "Convergence threshold on |du|_F / sqrt(J)")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-iter", cfg.max_outer, "Maximum outer iterations")->check(CLI::PositiveNumber);
  app.add_option("--n-inner", cfg.n_inner, "Volume-dual updates per outer iteration")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "k-means seed");
  app.add_option("--cost", cfg.cost, "Similarity: scalar, mahalanobis or emtv")
      ->check(CLI::IsMember({"scalar", "mahalanobis", "emtv"}));
  app.add_option("--refresh-every", cfg.refresh_every,
                 "Refresh phase statistics every N outer iterations (0 = never)");
  app.add_option("--edge-sharpness", cfg.edge_sharpness, "Edge weight sharpness (0 = off)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--edge-sigma", cfg.edge_sigma, "Edge weight smoothing in pixels")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--ground-truth", cfg.ground_truth,
                 "Ground-truth label image (distinct gray levels, ascending = phase order)");
}

// Fills options not given on the command line from a key=value file.
void apply_config_file(CLI::App& app, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path.string());
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = app.get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") {
      throw CLI::ConversionError("config: unknown key '" + item.name + "'");
    }
    if (opt->count() > 0) continue;
    for (const std::string& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

SegParams to_params(const RunConfig& cfg) {
  SegParams p;
  p.eps = cfg.eps;
  p.lambda = cfg.lambda;
  p.tau_q = cfg.tau_q;
  p.tol_u = cfg.tol;
  p.max_outer = cfg.max_outer;
  p.n_f_inner = cfg.n_inner;
  p.refresh_interval = cfg.refresh_every;
  p.cost = parse_cost_kind(cfg.cost);
  p.edge_sharpness = cfg.edge_sharpness;
  p.edge_sigma = cfg.edge_sigma;
  return p;
}

std::optional<VolumeSpec> to_volume(const std::string& text, std::size_t phases, std::size_t pixels) {
  if (text == "off" || text.empty()) return std::nullopt;
  VolumeSpec v = VolumeSpec::parse(text, pixels);
  if (v.phases() != phases) {
    throw std::invalid_argument("volume: " + std::to_string(v.phases()) + " values given for " +
                                std::to_string(phases) + " phases");
  }
  return v;
}

Header run_header(const RunConfig& cfg, const Image& h, const SegParams& p) {
  return {{"input", cfg.input.string()},
          {"height", std::to_string(h.height)},
          {"width", std::to_string(h.width)},
          {"channels", std::to_string(h.channels)},
          {"phases", std::to_string(cfg.phases)},
          {"volume", cfg.volume},
          {"eps", format_double(p.eps)},
          {"lambda", format_double(p.lambda)},
          {"tau_q", format_double(p.step_q())},
          {"tol", format_double(p.tol_u)},
          {"max_iter", std::to_string(p.max_outer)},
          {"n_inner", std::to_string(p.n_f_inner)},
          {"cost", cfg.cost},
          {"refresh_every", std::to_string(p.refresh_interval)},
          {"seed", std::to_string(cfg.seed)}};
}

struct RunSummary {
  SegmentResult result;
  std::vector<std::pair<std::string, double>> metrics;
};

// Runs one segmentation and writes every output into cfg.out.
RunSummary run_segment(const RunConfig& cfg) {
  const Image h = read_image(cfg.input);
  const SegParams p = to_params(cfg);
  const auto volume = to_volume(cfg.volume, cfg.phases, h.pixels());
  std::optional<LabelMap> truth;
  if (!cfg.ground_truth.empty()) {
    truth = labels_from_image(read_image(cfg.ground_truth));
    if (truth->height != h.height || truth->width != h.width) {
      throw std::invalid_argument("ground truth size differs from the input image");
    }
  }

  RunSummary s{segment(h, cfg.phases, volume, p, cfg.seed), {}};
  const SegmentResult& r = s.result;
  if (!r.converged) {
    std::cerr << "warning: no convergence after " << r.iterations
              << " iterations; writing the last iterate\n";
  }

  fs::create_directories(cfg.out);
  const Header header = run_header(cfg, h, p);
  write_image(cfg.out / "labels.png", labels_to_gray(r.labels, cfg.phases));
  write_image(cfg.out / "labels_palette.png", labels_to_palette(r.labels));
  write_soft_masks(cfg.out, r.u);
  write_tensors(cfg.out / "soft.vptv", {to_tensor(FeatureTensor{r.u.height, r.u.width, r.u.u})});
  write_trace_csv(cfg.out / "trace.csv", r.trace, cfg.phases, header);

  auto& m = s.metrics;
  m.emplace_back("iterations", static_cast<double>(r.iterations));
  m.emplace_back("converged", r.converged ? 1.0 : 0.0);
  m.emplace_back("final_residual", r.trace.empty() ? 0.0 : r.trace.back().residual);
  m.emplace_back("mean_max_probability", mean_max_probability(r.u));
  const auto rows = kernels::row_sums(r.u.u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.emplace_back("mass_" + std::to_string(i), rows[i]);
  }
  if (volume) m.emplace_back("volume_residual", row_sum_residual(r.u.u, volume->counts()));
  if (truth) {
    for (std::size_t i = 0; i < cfg.phases; ++i) {
      const DiceScores d = dice(r.labels, *truth, static_cast<int>(i));
      m.emplace_back("dice_ratio_" + std::to_string(i), d.overlap_ratio);
      m.emplace_back("dice_" + std::to_string(i), d.symmetric);
      m.emplace_back("empty_prediction_" + std::to_string(i), d.empty_prediction ? 1.0 : 0.0);
    }
    m.emplace_back("pixel_accuracy", pixel_accuracy(r.labels, *truth));
  }
  write_metrics_csv(cfg.out / "metrics.csv", m, header);
  return s;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse number '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::vector<std::string> split_semicolons(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ';')) out.push_back(tok);
  if (out.empty()) out.push_back("off");
  return out;
}

void cmd_fig1(const std::string& eps_list, const fs::path& out) {
  const OtInstance p = fig1_instance();
  const ExactOtResult exact = exact_ot_oracle(p.a, p.b, p.c);
  fs::create_directories(out);
  std::vector<std::pair<std::string, double>> summary_rows;
  std::ofstream summary(out / "summary.csv");
  if (!summary) throw IoError("cannot write " + (out / "summary.csv").string());
  summary << "# a=2,5,3\n# b=ones(10)\n# cost=(2i-j)^2\n# exact_cost=" << format_double(exact.cost)
          << "\neps,entropy,cost,relative_cost_gap,row_residual,col_residual,iterations\n";
  write_coupling_csv(out / "coupling_exact.csv", exact.coupling, {{"eps", "0"}});
  for (double eps : parse_list(eps_list)) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps values must be positive");
    const EntropicOtResult r = entropic_ot(p.a, p.b, p.c, eps);
    write_coupling_csv(out / ("coupling_eps_" + format_double(eps) + ".csv"), r.coupling,
                       {{"eps", format_double(eps)}});
    const auto rs = kernels::row_sums(r.coupling);
    const auto cs = kernels::column_sums(r.coupling);
    double row_res = 0.0;
    double col_res = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) row_res = std::max(row_res, std::abs(rs[i] - p.a[i]));
    for (std::size_t j = 0; j < cs.size(); ++j) col_res = std::max(col_res, std::abs(cs[j] - p.b[j]));
    const double cost = coupling_cost(r.coupling, p.c);
    summary << format_double(eps) << ',' << format_double(coupling_entropy(r.coupling)) << ','
            << format_double(cost) << ',' << format_double((cost - exact.cost) / exact.cost) << ','
            << format_double(row_res) << ',' << format_double(col_res) << ',' << r.iterations
            << '\n';
  }
}

void cmd_synth(const std::string& kind, std::size_t size, double noise, std::uint64_t seed,
               const fs::path& out) {
  const SynthKind k = parse_synth_kind(kind);
  const SynthImage s = make_synthetic(k, size, noise, seed);
  fs::create_directories(out);
  write_image(out / "image.png", s.image, 16);
  write_image(out / "truth.png", labels_to_gray(s.truth, s.phases));
  std::ofstream meta(out / "synth.txt");
  meta << "kind=" << kind << "\nsize=" << size << "\nnoise_variance=" << format_double(noise)
       << "\nseed=" << seed << "\nphases=" << s.phases << '\n';
  if (!meta) throw IoError("cannot write " + (out / "synth.txt").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-preserving multiphase segmentation with entropic optimal transport"};
  app.require_subcommand(1);

  RunConfig seg_cfg;
  auto* seg = app.add_subcommand("segment", "Segment one image");
  add_run_options(*seg, seg_cfg);
  fs::path seg_config;
  seg->add_option("--config", seg_config, "Plain-text key=value file; flags override its values");

  RunConfig sweep_cfg;
  std::string sweep_eps = "0.01";
  std::string sweep_lambda = "0.05";
  std::string sweep_volumes = "off";
  auto* sweep = app.add_subcommand("sweep", "Segment one image over eps, lambda and volume lists");
  add_run_options(*sweep, sweep_cfg);
  sweep->add_option("--eps-list", sweep_eps, "Comma-separated eps values");
  sweep->add_option("--lambda-list", sweep_lambda, "Comma-separated lambda values");
  sweep->add_option("--volume-list", sweep_volumes, "Semicolon-separated volume specs");
  fs::path sweep_config;
  sweep->add_option("--config", sweep_config,
                    "Plain-text key=value file; flags override its values");

  std::string fig1_eps = "0.1,1,10";
  fs::path fig1_out = "fig1";
  auto* fig1 = app.add_subcommand("fig1", "Couplings of the 3x10 transport example for several eps");
  fig1->add_option("--eps", fig1_eps, "Comma-separated eps values");
  fig1->add_option("--out", fig1_out, "Output directory");

  std::string synth_kind = "circle";
  std::size_t synth_size = 256;
  double synth_noise = 0.01;
  std::uint64_t synth_seed = 1;
  fs::path synth_out = "synth";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic image and its ground truth");
  synth->add_option("--kind", synth_kind, "circle, two-region, three-level or horse");
  synth->add_option("--size", synth_size, "Side length in pixels (>= 16)");
  synth->add_option("--noise", synth_noise, "Gaussian noise variance");
  synth->add_option("--seed", synth_seed, "Noise seed");
  synth->add_option("--out", synth_out, "Output directory");

  auto* layer = app.add_subcommand("layer", "VPTV softmax layer on tensor files");
  layer->require_subcommand(1);
  LayerConfig lcfg;
  fs::path logits_path, layer_out = "layer";
  std::string layer_volume = "off";
  double layer_tau = 0.0;
  auto* forward = layer->add_subcommand("forward", "Unrolled forward pass");
  forward->add_option("--logits", logits_path, "phases x height x width tensor")->required();
  forward->add_option("--eps", lcfg.eps, "Entropic weight")->check(CLI::PositiveNumber);
  forward->add_option("--lambda", lcfg.lambda, "TV weight")->check(CLI::NonNegativeNumber);
  forward->add_option("--tau-q", layer_tau, "TV dual step (default 0.5 * eps)");
  forward->add_option("--iterations", lcfg.iterations, "Unroll depth T");
  forward->add_option("--volume", layer_volume, "Volume spec or 'off'");
  forward->add_option("--out", layer_out, "Output directory (u.vptv, cache.vptv)");

  fs::path cache_path, grad_path, grad_out = "grad_logits.vptv";
  double backward_eps = 1.0;
  auto* backward = layer->add_subcommand("backward", "Quasi-dropout backward pass");
  backward->add_option("--cache", cache_path, "Cache written by 'layer forward'")->required();
  backward->add_option("--grad", grad_path, "Gradient with respect to u")->required();
  backward->add_option("--eps", backward_eps, "Entropic weight used in the forward pass");
  backward->add_option("--out", grad_out, "Output tensor file");

  try {
    app.parse(argc, argv);
    for (auto [sub, cfg, file] : {std::tuple{seg, &seg_cfg, &seg_config},
                                  std::tuple{sweep, &sweep_cfg, &sweep_config}}) {
      if (!*sub) continue;
      if (!file->empty()) apply_config_file(*sub, *file);
      if (cfg->input.empty()) throw CLI::RequiredError("--input");
    }
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*seg) {
      run_segment(seg_cfg);
    } else if (*sweep) {
      fs::create_directories(sweep_cfg.out);
      std::ofstream table(sweep_cfg.out / "sweep.csv");
      if (!table) throw IoError("cannot write sweep.csv");
      table << "# input=" << sweep_cfg.input.string() << "\n# seed=" << sweep_cfg.seed
            << "\nrun,eps,lambda,volume,iterations,converged,mean_max_probability,dice_1\n";
      std::size_t run = 0;
      const fs::path root = sweep_cfg.out;
      for (double eps : parse_list(sweep_eps)) {
        for (double lam : parse_list(sweep_lambda)) {
          for (const std::string& vol : split_semicolons(sweep_volumes)) {
            RunConfig c = sweep_cfg;
            c.eps = eps;
            c.lambda = lam;
            c.volume = vol;
            c.out = root / ("run_" + std::to_string(run));
            const RunSummary s = run_segment(c);
            double dice1 = -1.0;
            for (const auto& [k, v] : s.metrics) {
              if (k == "dice_1") dice1 = v;
            }
            table << run << ',' << format_double(eps) << ',' << format_double(lam) << ",\"" << vol
                  << "\"," << s.result.iterations << ',' << (s.result.converged ? 1 : 0) << ','
                  << format_double(mean_max_probability(s.result.u)) << ','
                  << format_double(dice1) << '\n';
            ++run;
          }
        }
      }
    } else if (*fig1) {
      cmd_fig1(fig1_eps, fig1_out);
    } else if (*synth) {
      cmd_synth(synth_kind, synth_size, synth_noise, synth_seed, synth_out);
    } else if (*forward) {
      const FeatureTensor o = to_feature(read_tensors(logits_path).at(0));
      if (layer_tau > 0.0) lcfg.tau_q = layer_tau;
      lcfg.volume = to_volume(layer_volume, o.phases(), o.values.cols());
      const LayerOutput out = vptv_forward(o, lcfg);
      fs::create_directories(layer_out);
      write_tensors(layer_out / "u.vptv", {to_tensor(FeatureTensor{o.height, o.width, out.u.u})});
      save_cache(layer_out / "cache.vptv", out.cache);
    } else if (*backward) {
      const LayerCache cache = load_cache(cache_path);
      LayerConfig cfg;
      cfg.eps = backward_eps;
      const FeatureTensor g = to_feature(read_tensors(grad_path).at(0));
      write_tensors(grad_out, {to_tensor(vptv_backward(g, cache, cfg))});
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
