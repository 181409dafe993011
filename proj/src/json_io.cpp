#include "mrsi/json_io.hpp"

#include <fstream>

namespace mrsi::json_io {
namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

template <typename T>
T as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("wrong type (") + e.what() + ")");
  }
}

template <typename T>
T field(const json& j, const std::string& key, const std::string& path) {
  return as<T>(require(j, key, path), join(path, key));
}

template <typename T>
T field_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  return as<T>(j.at(key), join(path, key));
}

const json& require_array(const json& j, const std::string& key, const std::string& path) {
  const json& a = require(j, key, path);
  if (!a.is_array()) throw ConfigError(join(path, key), "expected an array");
  return a;
}

SamplePoint point_from_json(const json& j, const std::string& path) {
  SamplePoint p;
  p.spectral = field<int>(j, "spectral", path);
  p.k = field<std::vector<int>>(j, "k", path);
  return p;
}

json point_to_json(const SamplePoint& p) { return json{{"spectral", p.spectral}, {"k", p.k}}; }

Profile profile_from_json(const json& j, const std::string& path) {
  const auto type = field<std::string>(j, "type", path);
  if (type == "ramp") {
    RampProfile r;
    r.rate = field<double>(j, "rate", path);
    r.start_frame = field_or<std::size_t>(j, "start_frame", path, 0);
    r.cap = field<double>(j, "cap", path);
    return r;
  }
  if (type == "constant") return ConstantProfile{field<double>(j, "level", path)};
  throw ConfigError(join(path, "type"), "unknown profile type '" + type + "'");
}

std::array<double, 2> pair_or_scalar(const json& j, const std::string& path) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v};
  }
  const auto v = as<std::vector<double>>(j, path);
  if (v.size() != 2) throw ConfigError(path, "expected two values");
  return {v[0], v[1]};
}

}  // namespace

json load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing field");
  return *it;
}

json to_json(const AcquisitionGeometry& g) {
  return json{{"spatial_dims", g.spatial_dims},
              {"spectral_evolution_points", g.spectral_points},
              {"readout_points", g.readout_points},
              {"dft_sign_convention", g.sign == DftSign::kForward ? "forward" : "inverse"},
              {"frame_interval_s", g.frame_interval_s}};
}

AcquisitionGeometry geometry_from_json(const json& j, const std::string& path) {
  AcquisitionGeometry g;
  g.spatial_dims = field<std::vector<int>>(j, "spatial_dims", path);
  g.spectral_points = field<int>(j, "spectral_evolution_points", path);
  g.readout_points = field<int>(j, "readout_points", path);
  const auto sign = field_or<std::string>(j, "dft_sign_convention", path, "forward");
  if (sign == "forward") {
    g.sign = DftSign::kForward;
  } else if (sign == "inverse") {
    g.sign = DftSign::kInverse;
  } else {
    throw ConfigError(join(path, "dft_sign_convention"), "expected 'forward' or 'inverse'");
  }
  g.frame_interval_s = field_or<double>(j, "frame_interval_s", path, 4.0);
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
  return g;
}

json to_json(const SamplingSchedule& s) {
  json frames = json::array();
  for (std::size_t m = 0; m < s.frame_count(); ++m) {
    const auto& pts = s.points(m);
    if (pts.empty()) {
      frames.push_back(json{{"m", m}, {"gap", true}});
    } else if (pts.size() == 1) {
      frames.push_back(json{{"m", m}, {"point", point_to_json(pts[0])}});
    } else {
      json arr = json::array();
      for (const auto& p : pts) arr.push_back(point_to_json(p));
      frames.push_back(json{{"m", m}, {"points", arr}});
    }
  }
  return json{{"M", s.frame_count()}, {"frame_interval_s", s.frame_interval_s()}, {"frames", frames}};
}

SamplingSchedule schedule_from_json(const json& j, const std::string& path) {
  const auto M = field<std::size_t>(j, "M", path);
  const auto interval = field_or<double>(j, "frame_interval_s", path, 4.0);
  const json& frames = require_array(j, "frames", path);
  std::vector<std::vector<SamplePoint>> out(M);
  std::vector<bool> seen(M, false);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string fp = index(join(path, "frames"), i);
    const json& f = frames[i];
    const auto m = field<std::size_t>(f, "m", fp);
    if (m >= M) throw ConfigError(join(fp, "m"), "frame index exceeds M");
    if (seen[m]) throw ConfigError(join(fp, "m"), "frame listed twice");
    seen[m] = true;
    if (f.contains("point")) {
      out[m].push_back(point_from_json(f.at("point"), join(fp, "point")));
    } else if (f.contains("points")) {
      const json& pts = f.at("points");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        out[m].push_back(point_from_json(pts[k], index(join(fp, "points"), k)));
      }
    } else if (!field_or<bool>(f, "gap", fp, false)) {
      throw ConfigError(fp, "frame needs 'point', 'points' or 'gap': true");
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (!seen[m]) throw ConfigError(join(path, "frames"), "frame " + std::to_string(m) + " missing");
  }
  return SamplingSchedule(std::move(out), interval);
}

SamplerConfig sampler_from_json(const json& j, const std::string& path) {
  SamplerConfig c;
  c.n_points = field<std::size_t>(j, "n_points", path);
  if (j.contains("psi")) c.psi = as<double>(j.at("psi"), join(path, "psi"));
  c.skip = field_or<std::uint64_t>(j, "skip", path, 0);
  if (j.contains("gaps")) {
    const json& gaps = require_array(j, "gaps", path);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const std::string gp = index(join(path, "gaps"), i);
      c.gaps.push_back({field<std::size_t>(gaps[i], "start_frame", gp),
                        field<std::size_t>(gaps[i], "length", gp)});
    }
  }
  if (j.contains("dims")) c.dims = as<std::vector<int>>(j.at("dims"), join(path, "dims"));
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

PhantomConfig phantom_from_json(const json& j, const std::string& path) {
  PhantomConfig c;
  c.geometry = geometry_from_json(require(j, "geometry", path), join(path, "geometry"));
  c.frames = field<std::size_t>(j, "frames", path);
  c.noise_sigma = field_or<double>(j, "noise_sigma", path, 0.0);
  c.rng_seed = field_or<std::uint64_t>(j, "rng_seed", path, 0);
  const json& subs = require_array(j, "substances", path);
  const auto& dims = c.geometry.spatial_dims;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string sp = index(join(path, "substances"), i);
    const json& s = subs[i];
    SubstanceSpec spec;
    spec.label = field<std::string>(s, "label", sp);
    const json& region = require_array(s, "region", sp);
    for (std::size_t k = 0; k < region.size(); ++k) {
      const std::string rp = index(join(sp, "region"), k);
      if (region[k].is_array()) {
        const auto coord = as<std::vector<int>>(region[k], rp);
        if (coord.size() != dims.size()) throw ConfigError(rp, "coordinate rank does not match spatial_dims");
        std::size_t flat = 0;
        for (std::size_t a = 0; a < dims.size(); ++a) {
          if (coord[a] < 0 || coord[a] >= dims[a]) throw ConfigError(rp, "voxel outside the grid");
          flat = flat * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(coord[a]);
        }
        spec.region.push_back(flat);
      } else {
        spec.region.push_back(as<std::size_t>(region[k], rp));
      }
    }
    spec.profile = profile_from_json(require(s, "profile", sp), join(sp, "profile"));
    const json& peaks = require_array(s, "peaks", sp);
    for (std::size_t k = 0; k < peaks.size(); ++k) {
      const std::string pp = index(join(sp, "peaks"), k);
      Peak pk;
      pk.center = pair_or_scalar(require(peaks[k], "center", pp), join(pp, "center"));
      pk.width = pair_or_scalar(require(peaks[k], "width", pp), join(pp, "width"));
      pk.amplitude = field_or<double>(peaks[k], "amplitude", pp, 1.0);
      spec.peaks.push_back(pk);
    }
    c.substances.push_back(std::move(spec));
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

SolverConfig solver_from_json(const json& j, const std::string& path) {
  SolverConfig c;
  c.lambdas.lambda_x = field_or(j, "lambda_x", path, c.lambdas.lambda_x);
  c.lambdas.lambda_w1 = field_or(j, "lambda_w1", path, c.lambdas.lambda_w1);
  c.lambdas.lambda_w2 = field_or(j, "lambda_w2", path, c.lambdas.lambda_w2);
  c.rho1 = field_or(j, "rho1", path, c.rho1);
  c.rho2 = field_or(j, "rho2", path, c.rho2);
  c.mu = field_or(j, "mu", path, c.mu);
  c.outer_iters = field_or(j, "outer_iters", path, c.outer_iters);
  c.inner_iters = field_or(j, "inner_iters", path, c.inner_iters);
  c.stop_tol = field_or(j, "stop_tol", path, c.stop_tol);
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

json to_json(const Regularization& r) {
  return json{{"lambda_x", r.lambda_x}, {"lambda_w1", r.lambda_w1}, {"lambda_w2", r.lambda_w2}};
}

json to_json(const SolverConfig& c) {
  json j = to_json(c.lambdas);
  j["rho1"] = c.rho1;
  j["rho2"] = c.rho2;
  j["mu"] = c.mu;
  j["outer_iters"] = c.outer_iters;
  j["inner_iters"] = c.inner_iters;
  j["stop_tol"] = c.stop_tol;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << dump(j);
}

}  // namespace mrsi::json_io
