// mrsi-cs: phantom generation, schedule design, acquisition, reconstruction,
// cross-validation and evaluation for undersampled multi-substance MRSI.
//
// Exit codes: 0 ok, 1 other failure, 2 configuration / usage error,
// 3 shape mismatch, 4 solver divergence.

#include <omp.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mrsi/admm.hpp"
#include "mrsi/evaluation.hpp"
#include "mrsi/json_io.hpp"
#include "mrsi/model_selection.hpp"
#include "mrsi/phantom.hpp"
#include "mrsi/sampling.hpp"

#ifndef MRSI_CS_VERSION
#define MRSI_CS_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using mrsi::json_io::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kShape = 3, kDivergence = 4 };

struct Options {
  std::string config;
  std::string out = ".";
  std::string truth, base, schedule, signals, recon;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<int> iters, inner_iters;
  std::optional<double> lambda_x, lambda_w1, lambda_w2;
  bool paper_grid = false;
  int upsample = 1;
  std::vector<std::size_t> snapshot_frames;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mrsi::Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

// Records inputs, outputs, seeds and stage timings; written last.
class RunManifest {
 public:
  RunManifest(std::string command, const Options& opt) : command_(std::move(command)) {
    doc_["tool"] = "mrsi-cs";
    doc_["version"] = MRSI_CS_VERSION;
    doc_["command"] = command_;
    doc_["threads"] = opt.threads;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
    doc_["seeds"] = json::object();
    doc_["timings_s"] = json::object();
    if (!opt.config.empty()) {
      doc_["config"] = {{"path", opt.config}, {"sha256", sha256_file(opt.config)}};
    }
  }

  void input(const fs::path& p) { doc_["inputs"].push_back(entry(p)); }
  void output(const fs::path& p) { doc_["outputs"].push_back(entry(p)); }
  void seed(const std::string& name, std::uint64_t v) { doc_["seeds"][name] = v; }
  void setting(const std::string& name, json v) { doc_["settings"][name] = std::move(v); }

  template <typename F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      doc_["timings_s"][name] = dt.count();
      spdlog::debug("{}: {:.3f} s", name, dt.count());
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void write(const fs::path& dir) const {
    mrsi::json_io::write(dir / ("manifest_" + command_ + ".json"), doc_);
  }

 private:
  static json entry(const fs::path& p) { return {{"path", p.string()}, {"sha256", sha256_file(p)}}; }

  std::string command_;
  json doc_;
};

fs::path input_or(const std::string& given, const Options& opt, const char* fallback) {
  return given.empty() ? fs::path(opt.out) / fallback : fs::path(given);
}

json load_config(const Options& opt) {
  if (opt.config.empty()) throw mrsi::ConfigError("--config", "a configuration file is required");
  return mrsi::json_io::load(opt.config);
}

mrsi::AcquisitionGeometry config_geometry(const json& cfg) {
  return mrsi::json_io::geometry_from_json(mrsi::json_io::require(cfg, "geometry", ""), "geometry");
}

std::vector<std::string> config_labels(const json& cfg, std::size_t count) {
  std::vector<std::string> labels;
  if (cfg.contains("substances") && cfg["substances"].is_array() && cfg["substances"].size() == count) {
    for (const auto& s : cfg["substances"]) labels.push_back(s.value("label", ""));
  }
  labels.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    if (labels[j].empty()) labels[j] = "substance" + std::to_string(j);
  }
  return labels;
}

mrsi::BaseSpectraSet load_base(const fs::path& path, const json& cfg,
                               const mrsi::AcquisitionGeometry& g) {
  auto spectra = mrsi::mrst::read_complex(path);
  if (spectra.rank() != 3) throw mrsi::ShapeError("base spectra must have dims (J, N_C, N_RO)");
  auto labels = config_labels(cfg, spectra.dim(0));
  mrsi::BaseSpectraSet base(std::move(labels), std::move(spectra), g.sign);
  base.check_geometry(g);
  return base;
}

mrsi::SamplingSchedule load_schedule(const fs::path& path, const mrsi::AcquisitionGeometry& g) {
  auto schedule = mrsi::json_io::schedule_from_json(mrsi::json_io::load(path), path.string());
  schedule.validate(g);
  return schedule;
}

mrsi::SolverConfig solver_config(const json& cfg, const Options& opt) {
  mrsi::SolverConfig c;
  if (cfg.contains("solver")) c = mrsi::json_io::solver_from_json(cfg["solver"], "solver");
  if (opt.iters) c.outer_iters = *opt.iters;
  if (opt.inner_iters) c.inner_iters = *opt.inner_iters;
  if (opt.lambda_x) c.lambdas.lambda_x = *opt.lambda_x;
  if (opt.lambda_w1) c.lambdas.lambda_w1 = *opt.lambda_w1;
  if (opt.lambda_w2) c.lambdas.lambda_w2 = *opt.lambda_w2;
  try {
    c.validate();
  } catch (const mrsi::ParameterError& e) {
    throw mrsi::ConfigError("solver", e.what());
  }
  return c;
}

void print_summary(const json& j) { std::fputs(mrsi::json_io::dump(j).c_str(), stdout); }

int cmd_phantom(const Options& opt) {
  RunManifest manifest("phantom", opt);
  const json cfg = load_config(opt);
  auto pc = mrsi::json_io::phantom_from_json(cfg);
  if (opt.seed) pc.rng_seed = *opt.seed;
  manifest.seed("rng_seed", pc.rng_seed);
  const fs::path out(opt.out);
  const auto truth = manifest.stage("make_phantom", [&] { return mrsi::make_phantom(pc); });
  const auto base = manifest.stage("make_base_spectra", [&] { return mrsi::make_base_spectra(pc); });
  mrsi::mrst::write(out / "truth.mrst", truth.to_tensor());
  mrsi::mrst::write(out / "base_spectra.mrst", base.spectra());
  manifest.output(out / "truth.mrst");
  manifest.output(out / "base_spectra.mrst");
  manifest.write(out);
  json labels = json::array();
  for (const auto& s : pc.substances) labels.push_back(s.label);
  print_summary({{"command", "phantom"},
                 {"spatial_dims", pc.geometry.spatial_dims},
                 {"spectral_evolution_points", pc.geometry.spectral_points},
                 {"readout_points", pc.geometry.readout_points},
                 {"frames", pc.frames},
                 {"substances", labels}});
  return kOk;
}

int cmd_design(const Options& opt) {
  RunManifest manifest("design", opt);
  const json cfg = load_config(opt);
  const auto g = config_geometry(cfg);
  auto sc = mrsi::json_io::sampler_from_json(mrsi::json_io::require(cfg, "sampler", ""), "sampler");
  if (opt.seed) sc.skip = *opt.seed;
  manifest.seed("sobol_skip", sc.skip);
  const auto schedule = manifest.stage("build_schedule", [&] { return mrsi::build_schedule(sc, g); });
  const fs::path path = fs::path(opt.out) / "schedule.json";
  mrsi::json_io::write(path, mrsi::json_io::to_json(schedule));
  manifest.output(path);
  manifest.write(opt.out);
  print_summary({{"command", "design"},
                 {"M", schedule.frame_count()},
                 {"acquired_frames", schedule.acquired_frames().size()},
                 {"psi", sc.psi.value_or(mrsi::default_psi(g.spectral_points))}});
  return kOk;
}

int cmd_acquire(const Options& opt) {
  RunManifest manifest("acquire", opt);
  const json cfg = load_config(opt);
  const auto g = config_geometry(cfg);
  const double sigma = cfg.value("noise_sigma", 0.0);
  std::uint64_t seed = cfg.value("rng_seed", std::uint64_t{0});
  if (opt.seed) seed = *opt.seed;
  manifest.seed("rng_seed", seed);
  manifest.setting("noise_sigma", sigma);
  const auto truth_path = input_or(opt.truth, opt, "truth.mrst");
  const auto base_path = input_or(opt.base, opt, "base_spectra.mrst");
  const auto schedule_path = input_or(opt.schedule, opt, "schedule.json");
  const auto truth = mrsi::SubstanceDistribution::from_tensor(mrsi::mrst::read_real(truth_path));
  const mrsi::ForwardModel model(g, load_base(base_path, cfg, g));
  const auto schedule = load_schedule(schedule_path, g);
  manifest.input(truth_path);
  manifest.input(base_path);
  manifest.input(schedule_path);
  if (truth.frames() != schedule.frame_count() || truth.voxels != g.voxel_count() ||
      truth.substances != model.substances()) {
    throw mrsi::ShapeError("truth dims (" + std::to_string(truth.frames()) + ", " +
                           std::to_string(truth.voxels) + ", " + std::to_string(truth.substances) +
                           ") do not match schedule/geometry/base spectra");
  }
  const auto signals =
      manifest.stage("acquire", [&] { return mrsi::acquire(truth, model, schedule, sigma, seed); });
  const fs::path path = fs::path(opt.out) / "signals.mrst";
  mrsi::mrst::write(path, signals.to_tensor(schedule));
  manifest.output(path);
  manifest.write(opt.out);
  print_summary({{"command", "acquire"},
                 {"acquired_frames", schedule.acquired_frames().size()},
                 {"noise_sigma", sigma},
                 {"rng_seed", seed}});
  return kOk;
}

struct Problem {
  mrsi::AcquisitionGeometry geometry;
  std::unique_ptr<mrsi::ForwardModel> model;
  mrsi::SamplingSchedule schedule;
  mrsi::SignalSet signals;
};

Problem load_problem(const json& cfg, const Options& opt, RunManifest& manifest) {
  Problem p;
  p.geometry = config_geometry(cfg);
  const auto base_path = input_or(opt.base, opt, "base_spectra.mrst");
  const auto schedule_path = input_or(opt.schedule, opt, "schedule.json");
  const auto signals_path = input_or(opt.signals, opt, "signals.mrst");
  p.model = std::make_unique<mrsi::ForwardModel>(p.geometry, load_base(base_path, cfg, p.geometry));
  p.schedule = load_schedule(schedule_path, p.geometry);
  p.signals = mrsi::SignalSet::from_tensor(mrsi::mrst::read_complex(signals_path), p.schedule,
                                           p.geometry);
  manifest.input(base_path);
  manifest.input(schedule_path);
  manifest.input(signals_path);
  return p;
}

int cmd_reconstruct(const Options& opt) {
  RunManifest manifest("reconstruct", opt);
  const json cfg = load_config(opt);
  const auto sc = solver_config(cfg, opt);
  manifest.setting("solver", mrsi::json_io::to_json(sc));
  const Problem p = load_problem(cfg, opt, manifest);
  spdlog::info("reconstructing: M = {}, |D| = {}, unknowns per frame = {}, {} outer iterations",
               p.schedule.frame_count(), p.schedule.acquired_frames().size(), p.model->unknowns(),
               sc.outer_iters);
  const auto result =
      manifest.stage("solve", [&] { return mrsi::solve(p.signals, p.schedule, *p.model, sc); });
  const fs::path out(opt.out);
  mrsi::mrst::write(out / "recon.mrst", result.x.to_tensor());
  {
    std::ofstream csv(out / "residuals.csv", std::ios::trunc);
    csv << "iteration,rms_x_minus_z,rms_z_delta\n";
    const double n = std::sqrt(static_cast<double>(result.x.values.size()));
    char line[96];
    for (std::size_t k = 0; k < result.residuals.size(); ++k) {
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", k + 1, result.residuals[k].x_minus_z / n,
                    result.residuals[k].z_delta / n);
      csv << line;
    }
  }
  manifest.output(out / "recon.mrst");
  manifest.output(out / "residuals.csv");
  manifest.write(out);
  const double objective =
      mrsi::objective_value(result.x.values, *p.model, p.schedule, p.signals, sc.lambdas);
  print_summary({{"command", "reconstruct"},
                 {"iterations", result.iterations},
                 {"objective", objective},
                 {"lambdas", mrsi::json_io::to_json(sc.lambdas)}});
  return kOk;
}

std::vector<double> grid_axis(const json& cv, const char* key, const std::vector<double>& fallback) {
  if (cv.contains(key)) return cv[key].get<std::vector<double>>();
  if (cv.contains("grid")) return cv["grid"].get<std::vector<double>>();
  return fallback;
}

int cmd_cv(const Options& opt) {
  RunManifest manifest("cv", opt);
  const json cfg = load_config(opt);
  mrsi::CvPlan plan = opt.paper_grid ? mrsi::CvPlan::paper_grid() : mrsi::CvPlan::coarse_grid();
  Options base_opt = opt;
  base_opt.iters.reset();
  plan.base = solver_config(cfg, base_opt);
  if (cfg.contains("cv") && !opt.paper_grid) {
    const json& cv = cfg["cv"];
    try {
      plan.grid_x = grid_axis(cv, "grid_x", plan.grid_x);
      plan.grid_w1 = grid_axis(cv, "grid_w1", plan.grid_w1);
      plan.grid_w2 = grid_axis(cv, "grid_w2", plan.grid_w2);
    } catch (const json::exception& e) {
      throw mrsi::ConfigError("cv", e.what());
    }
  }
  if (cfg.contains("cv")) plan.cv_outer_iters = cfg["cv"].value("cv_outer_iters", plan.cv_outer_iters);
  if (opt.iters) plan.cv_outer_iters = *opt.iters;
  try {
    plan.validate();
  } catch (const mrsi::ParameterError& e) {
    throw mrsi::ConfigError("cv", e.what());
  }
  const Problem p = load_problem(cfg, opt, manifest);
  const std::size_t total = plan.combinations().size();
  manifest.setting("grid_size", total);
  manifest.setting("cv_outer_iters", plan.cv_outer_iters);
  spdlog::info("cross-validating {} combinations, {} outer iterations each", total,
               plan.cv_outer_iters);
  std::size_t last_report = 0;
  const auto progress = [&](std::size_t done, std::size_t n) {
    if (done == n || done * 20 / n > last_report) {
      last_report = done * 20 / n;
      spdlog::info("cv progress {}/{}", done, n);
    }
  };
  const auto result = manifest.stage("grid_search", [&] {
    return mrsi::grid_search(plan, p.schedule, p.signals, *p.model, progress, opt.threads);
  });
  const fs::path out(opt.out);
  {
    std::ofstream csv(out / "cv_table.csv", std::ios::trunc);
    csv << "lambda_x,lambda_w1,lambda_w2,rmse\n";
    char line[128];
    for (const auto& e : result.table) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", e.lambdas.lambda_x,
                    e.lambdas.lambda_w1, e.lambdas.lambda_w2, e.rmse);
      csv << line;
    }
  }
  json selected = mrsi::json_io::to_json(result.best);
  selected["rmse"] = result.best_rmse;
  mrsi::json_io::write(out / "selected.json", selected);
  manifest.output(out / "cv_table.csv");
  manifest.output(out / "selected.json");
  manifest.write(out);
  print_summary({{"command", "cv"}, {"combinations", total}, {"selected", selected}});
  return kOk;
}

int cmd_evaluate(const Options& opt) {
  RunManifest manifest("evaluate", opt);
  const json cfg = load_config(opt);
  const auto g = config_geometry(cfg);
  const auto recon_path = input_or(opt.recon, opt, "recon.mrst");
  const auto truth_path = input_or(opt.truth, opt, "truth.mrst");
  const auto recon = mrsi::SubstanceDistribution::from_tensor(mrsi::mrst::read_real(recon_path));
  const auto truth = mrsi::SubstanceDistribution::from_tensor(mrsi::mrst::read_real(truth_path));
  manifest.input(recon_path);
  manifest.input(truth_path);
  if (recon.values.rows() != truth.values.rows() || recon.values.cols() != truth.values.cols() ||
      recon.substances != truth.substances) {
    throw mrsi::ShapeError("recon and truth shapes differ");
  }
  if (recon.voxels != g.voxel_count()) throw mrsi::ShapeError("recon does not match the geometry");
  const std::size_t M = recon.frames();
  const auto labels = config_labels(cfg, recon.substances);

  std::vector<std::size_t> frames = opt.snapshot_frames;
  if (frames.empty()) {
    for (std::size_t q = 0; q <= 4; ++q) frames.push_back(std::min(M - 1, q * (M - 1) / 4));
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  }
  for (auto f : frames) {
    if (f >= M) throw mrsi::ConfigError("--snapshot-frames", "frame " + std::to_string(f) + " out of range");
  }

  const fs::path out(opt.out);
  json metrics;
  metrics["normalization"] =
      "each field divided by its own max |value| per substance; normalized_rmse = "
      "||recon - truth||_2 / ||truth||_2 over all frames and voxels";
  metrics["substances"] = json::array();
  std::vector<Eigen::VectorXd> columns;
  std::vector<fs::path> snapshots;
  manifest.stage("metrics", [&] {
    for (std::size_t j = 0; j < recon.substances; ++j) {
      const auto hot = mrsi::hottest_voxel(recon, j);
      const auto hot_truth = mrsi::hottest_voxel(truth, j);
      const Eigen::VectorXd pr = mrsi::temporal_profile(recon, hot, j);
      const Eigen::VectorXd pt = mrsi::temporal_profile(truth, hot_truth, j);
      metrics["substances"].push_back({{"label", labels[j]},
                                       {"normalized_rmse", mrsi::normalized_rmse(recon, truth, j)},
                                       {"hottest_voxel", hot},
                                       {"hottest_voxel_truth", hot_truth},
                                       {"pearson", mrsi::pearson(pr, pt)},
                                       {"plateau_onset", mrsi::plateau_onset(pr)},
                                       {"plateau_onset_truth", mrsi::plateau_onset(pt)},
                                       {"coefficient_of_variation", mrsi::coefficient_of_variation(pr)}});
      columns.push_back(pr);
      columns.push_back(pt);
      if (g.spatial_dims.size() <= 2) {
        const fs::path dir = out / "snapshots";
        fs::create_directories(dir);
        const double scale_r = recon.values.cwiseAbs().maxCoeff();
        const double scale_t = truth.values.cwiseAbs().maxCoeff();
        for (auto f : frames) {
          char name[64];
          std::snprintf(name, sizeof name, "_f%04zu.pgm", f);
          const auto pr_path = dir / (labels[j] + "_recon" + name);
          const auto pt_path = dir / (labels[j] + "_truth" + name);
          mrsi::write_pgm(pr_path, recon, g.spatial_dims, f, j, scale_r, opt.upsample);
          mrsi::write_pgm(pt_path, truth, g.spatial_dims, f, j, scale_t, opt.upsample);
          snapshots.push_back(pr_path);
          snapshots.push_back(pt_path);
        }
      }
    }
  });
  mrsi::json_io::write(out / "metrics.json", metrics);
  {
    std::ofstream csv(out / "profiles.csv", std::ios::trunc);
    csv << "frame";
    for (const auto& l : labels) csv << ',' << l << "_recon," << l << "_truth";
    csv << '\n';
    char cell[40];
    for (std::size_t m = 0; m < M; ++m) {
      csv << m;
      for (const auto& c : columns) {
        std::snprintf(cell, sizeof cell, ",%.17g", c[static_cast<Eigen::Index>(m)]);
        csv << cell;
      }
      csv << '\n';
    }
  }
  manifest.output(out / "metrics.json");
  manifest.output(out / "profiles.csv");
  for (const auto& s : snapshots) manifest.output(s);
  manifest.write(out);
  print_summary(metrics);
  return kOk;
}

spdlog::level::level_enum log_level() {
  const char* env = std::getenv("MRSI_CS_LOG");
  if (env == nullptr) return spdlog::level::info;
  const std::string v(env);
  if (v == "error") return spdlog::level::err;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::info;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("mrsi-cs");
  spdlog::set_default_logger(logger);
  spdlog::set_level(log_level());
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Compressed-sensing reconstruction of multi-substance MRSI time series"};
  app.set_version_flag("--version", MRSI_CS_VERSION);
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment configuration (JSON)");
    sub->add_option("--out", opt.out, "Output directory (also the default input location)");
    sub->add_option("--threads", opt.threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  };
  auto solver_flags = [&](CLI::App* sub) {
    sub->add_option("--base", opt.base, "Base spectra (MRST)");
    sub->add_option("--schedule", opt.schedule, "Sampling schedule (JSON)");
    sub->add_option("--signals", opt.signals, "Acquired signals (MRST)");
    sub->add_option("--inner-iters", opt.inner_iters, "Inner ADMM iterations")->check(CLI::PositiveNumber);
    sub->add_option("--lambda-x", opt.lambda_x, "Weight of the l1 term on x")->check(CLI::NonNegativeNumber);
    sub->add_option("--lambda-w1", opt.lambda_w1, "Weight of the l1 term on frame differences")->check(CLI::NonNegativeNumber);
    sub->add_option("--lambda-w2", opt.lambda_w2, "Weight of the l2 term on frame differences")->check(CLI::NonNegativeNumber);
  };

  auto* phantom = app.add_subcommand("phantom", "Write ground truth and base spectra");
  common(phantom);
  phantom->add_option("--seed", opt.seed, "Override rng_seed");

  auto* design = app.add_subcommand("design", "Build the Sobol undersampling schedule");
  common(design);
  design->add_option("--seed", opt.seed, "Sobol skip (overrides sampler.skip)");

  auto* acquire = app.add_subcommand("acquire", "Simulate noisy undersampled readouts");
  common(acquire);
  acquire->add_option("--seed", opt.seed, "Noise seed (overrides rng_seed)");
  acquire->add_option("--truth", opt.truth, "Ground truth (MRST)");
  acquire->add_option("--base", opt.base, "Base spectra (MRST)");
  acquire->add_option("--schedule", opt.schedule, "Sampling schedule (JSON)");

  auto* reconstruct = app.add_subcommand("reconstruct", "Run the nested ADMM solver");
  common(reconstruct);
  solver_flags(reconstruct);
  reconstruct->add_option("--iters", opt.iters, "Outer iterations")->check(CLI::PositiveNumber);

  auto* cv = app.add_subcommand("cv", "Select lambdas by 2-fold cross-validation");
  common(cv);
  solver_flags(cv);
  cv->add_option("--iters", opt.iters, "Outer iterations per CV solve")->check(CLI::PositiveNumber);
  cv->add_flag("--paper-grid", opt.paper_grid, "Use {1e-4, ..., 1e7} on every axis (1728 combinations)");

  auto* evaluate = app.add_subcommand("evaluate", "Compare a reconstruction with the truth");
  common(evaluate);
  evaluate->add_option("--recon", opt.recon, "Reconstruction (MRST)");
  evaluate->add_option("--truth", opt.truth, "Ground truth (MRST)");
  evaluate->add_option("--upsample", opt.upsample, "Integer nearest-neighbour upscaling of snapshots")->check(CLI::PositiveNumber);
  evaluate->add_option("--snapshot-frames", opt.snapshot_frames, "Frames to export as PGM");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  if (opt.threads > 0) omp_set_num_threads(opt.threads);
  try {
    fs::create_directories(opt.out);
    if (*phantom) return cmd_phantom(opt);
    if (*design) return cmd_design(opt);
    if (*acquire) return cmd_acquire(opt);
    if (*reconstruct) return cmd_reconstruct(opt);
    if (*cv) return cmd_cv(opt);
    if (*evaluate) return cmd_evaluate(opt);
  } catch (const mrsi::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const mrsi::ShapeError& e) {
    spdlog::error("shape mismatch: {}", e.what());
    return kShape;
  } catch (const mrsi::ScheduleError& e) {
    spdlog::error("shape mismatch: {}", e.what());
    return kShape;
  } catch (const mrsi::DivergenceError& e) {
    spdlog::error("solver divergence: {}", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kFailure;
}
