#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "mrsi/json_io.hpp"
#include "mrsi/tensor.hpp"

namespace fs = std::filesystem;
using mrsi::json_io::json;

namespace {

const fs::path kBinary = MRSI_CS_BINARY;

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("mrsi_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
};

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = kBinary.string() + " " + args + " > " + (log.string() + ".out") + " 2> " + log.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

json tiny_config() {
  return json::parse(R"({
    "geometry": {"spatial_dims": [2, 2], "spectral_evolution_points": 2, "readout_points": 4},
    "frames": 16,
    "noise_sigma": 0.01,
    "rng_seed": 3,
    "substances": [
      {"label": "a", "region": [0, 3],
       "profile": {"type": "ramp", "rate": 0.1, "start_frame": 2, "cap": 1.0},
       "peaks": [{"center": [0.5, 1.0], "width": [1.0, 1.0]}]}
    ],
    "sampler": {"n_points": 16},
    "solver": {"lambda_x": 1e-4, "lambda_w1": 1e-3, "lambda_w2": 1e-2}
  })");
}

fs::path write_config(const Workdir& w, const json& j) {
  const auto p = w.dir / "config.json";
  mrsi::json_io::write(p, j);
  return p;
}

std::string base_args(const std::string& cmd, const fs::path& cfg, const fs::path& out) {
  return cmd + " --config " + cfg.string() + " --out " + out.string();
}

}  // namespace

TEST_CASE("missing field exits with the config code and names the field") {
  Workdir w("missing");
  auto j = tiny_config();
  j["substances"][0].erase("profile");
  const auto cfg = write_config(w, j);
  CHECK(run(base_args("phantom", cfg, w.dir), w.dir / "log") == 2);
  CHECK(slurp(w.dir / "log").find("substances[0].profile") != std::string::npos);
}

TEST_CASE("unknown option exits with the config code") {
  Workdir w("badopt");
  CHECK(run("phantom --frobnicate", w.dir / "log") == 2);
}

TEST_CASE("full pipeline on a tiny instance") {
  Workdir w("pipeline");
  const auto cfg = write_config(w, tiny_config());
  const auto out = w.dir / "run";
  REQUIRE(run(base_args("phantom", cfg, out), w.dir / "log") == 0);
  REQUIRE(run(base_args("design", cfg, out), w.dir / "log") == 0);
  REQUIRE(run(base_args("acquire", cfg, out), w.dir / "log") == 0);
  REQUIRE(run(base_args("reconstruct", cfg, out), w.dir / "log") == 0);
  // Header plus one row per default outer iteration.
  CHECK(count_lines(out / "residuals.csv") == 1001);
  const auto recon = mrsi::mrst::read_real(out / "recon.mrst");
  CHECK(recon.dims() == std::vector<std::size_t>{16, 4, 1});
  REQUIRE(run(base_args("evaluate", cfg, out), w.dir / "log") == 0);
  const auto metrics = mrsi::json_io::load(out / "metrics.json");
  CHECK(metrics.contains("normalization"));
  CHECK(metrics["substances"][0]["pearson"].get<double>() > 0.9);

  SUBCASE("phantom output is deterministic") {
    const auto again = w.dir / "again";
    REQUIRE(run(base_args("phantom", cfg, again), w.dir / "log") == 0);
    CHECK(slurp(again / "truth.mrst") == slurp(out / "truth.mrst"));
    CHECK(slurp(again / "base_spectra.mrst") == slurp(out / "base_spectra.mrst"));
  }
  SUBCASE("mismatched signals exit with the shape code") {
    auto j = tiny_config();
    j["sampler"]["n_points"] = 12;
    const auto other = w.dir / "other";
    const auto cfg2 = w.dir / "config2.json";
    mrsi::json_io::write(cfg2, j);
    REQUIRE(run(base_args("design", cfg2, other), w.dir / "log") == 0);
    const std::string args = base_args("reconstruct", cfg, out) + " --schedule " + (other / "schedule.json").string();
    CHECK(run(args, w.dir / "log") == 3);
  }
  SUBCASE("full grid writes every combination") {
    const std::string args = base_args("cv", cfg, out) + " --paper-grid --iters 1";
    REQUIRE(run(args, w.dir / "log") == 0);
    CHECK(count_lines(out / "cv_table.csv") == 1729);
    const auto sel = mrsi::json_io::load(out / "selected.json");
    CHECK(sel.contains("lambda_x"));
  }
}

TEST_CASE("design honours the requested point count") {
  Workdir w("design");
  auto j = tiny_config();
  j["geometry"] = json::parse(R"({"spatial_dims": [8, 16], "spectral_evolution_points": 32, "readout_points": 4})");
  j["sampler"] = json::parse(R"({"n_points": 1024, "dims": [32, 8, 16]})");
  const auto cfg = write_config(w, j);
  REQUIRE(run(base_args("design", cfg, w.dir), w.dir / "log") == 0);
  const auto s = mrsi::json_io::schedule_from_json(mrsi::json_io::load(w.dir / "schedule.json"));
  CHECK(s.frame_count() == 1024);
  CHECK(s.acquired_frames().size() == 1024);
}
