#include "qp/run.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qp/errors.hpp"
#include "qp/green.hpp"
#include "qp/lyapunov.hpp"
#include "qp/parallel.hpp"
#include "qp/rotation.hpp"
#include "qp/spectrum.hpp"
#include "qp/version.hpp"

namespace qp::run {

namespace fs = std::filesystem;

const char* to_string(Task task) {
  switch (task) {
    case Task::Lyapunov: return "lyapunov";
    case Task::Acceleration: return "acceleration";
    case Task::Rotation: return "rotation";
    case Task::Ids: return "ids";
    case Task::Spectrum: return "spectrum";
    case Task::Green: return "green";
    case Task::Boundary: return "boundary";
    case Task::Maximal: return "maximal";
    case Task::RegimeTable: return "regime-table";
    case Task::Identities: return "identities";
    case Task::ThetaLipschitz: return "theta-lipschitz";
  }
  return "?";
}

std::vector<std::string> task_names() {
  return {"lyapunov", "acceleration", "rotation",    "ids",        "spectrum",
          "green",    "boundary",     "maximal",     "regime-table",
          "identities", "theta-lipschitz"};
}

Task task_from_string(const std::string& name) {
  const auto names = task_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Task>(i);
  }
  throw ValidationError("unknown task '" + name + "'");
}

namespace {

// Strict object validation: every required key present, nothing else allowed.
void require_keys(const json& obj, const char* context,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional) {
  if (!obj.is_object())
    throw ValidationError(std::string(context) + ": expected a JSON object");
  std::vector<std::string> problems;
  for (const char* key : required) {
    if (!obj.contains(key)) problems.push_back(std::string("missing field '") + key + "'");
  }
  for (const auto& [key, _] : obj.items()) {
    const auto known = [&](std::initializer_list<const char*> list) {
      return std::any_of(list.begin(), list.end(),
                         [&](const char* k) { return key == k; });
    };
    if (!known(required) && !known(optional))
      problems.push_back("unknown field '" + key + "'");
  }
  if (!problems.empty()) {
    std::string msg = std::string(context) + ":";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
}

double number_at(const json& obj, const char* key, const char* context) {
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw ValidationError(std::string(context) + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const char* context) {
  if (!obj.contains(key)) return fallback;
  return number_at(obj, key, context);
}

std::int64_t integer_or(const json& obj, const char* key, std::int64_t fallback,
                        const char* context) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    throw ValidationError(std::string(context) + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points < 2) throw ValidationError("grid needs at least 2 points");
  if (!(hi > lo)) throw ValidationError("grid needs hi > lo");
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return out;
}

// A grid is either an explicit array or {"lo":, "hi":, "points":}.
std::vector<double> grid_from_json(const json& j, const char* context) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number())
        throw ValidationError(std::string(context) + ": grid entries must be numbers");
      out.push_back(v.get<double>());
    }
    if (out.size() < 2) throw ValidationError(std::string(context) + ": grid too small");
    return out;
  }
  require_keys(j, context, {"lo", "hi", "points"}, {});
  return linspace(number_at(j, "lo", context), number_at(j, "hi", context),
                  static_cast<std::size_t>(integer_or(j, "points", 0, context)));
}

std::vector<double> default_energy_grid(const cocycle::PotentialSpec& pot,
                                        std::size_t points) {
  const double bound = spectrum::containment_bound(pot);
  return linspace(-1.1 * bound, 1.1 * bound, points);
}

}  // namespace

FrequencyLiteral FrequencyLiteral::from_json(const json& j) {
  require_keys(j, "alpha", {}, {"decimal", "quotients"});
  FrequencyLiteral lit;
  if (j.contains("decimal")) {
    if (!j.at("decimal").is_string())
      throw ValidationError("alpha.decimal must be a string");
    lit.decimal = j.at("decimal").get<std::string>();
  }
  if (j.contains("quotients")) {
    if (!j.at("quotients").is_array())
      throw ValidationError("alpha.quotients must be an array of integers");
    std::vector<std::int64_t> qs;
    for (const auto& v : j.at("quotients")) {
      if (!v.is_number_integer())
        throw ValidationError("alpha.quotients entries must be integers");
      qs.push_back(v.get<std::int64_t>());
    }
    lit.quotients = std::move(qs);
  }
  if (lit.decimal.has_value() == lit.quotients.has_value())
    throw ValidationError("alpha needs exactly one of 'decimal' or 'quotients'");
  return lit;
}

json FrequencyLiteral::to_json() const {
  json j = json::object();
  if (decimal) j["decimal"] = *decimal;
  if (quotients) j["quotients"] = *quotients;
  return j;
}

arithmetic::Frequency FrequencyLiteral::materialize() const {
  if (decimal) return arithmetic::Frequency::from_decimal(*decimal);
  return arithmetic::Frequency::from_quotients(*quotients);
}

cocycle::PotentialSpec potential_from_json(const json& j) {
  require_keys(j, "potential", {"lambda"}, {"epsilon", "v"});
  const double lambda = number_at(j, "lambda", "potential");
  const double epsilon = number_or(j, "epsilon", 0.0, "potential");
  std::vector<cocycle::Harmonic> v;
  if (j.contains("v")) {
    if (!j.at("v").is_array()) throw ValidationError("potential.v must be an array");
    for (const auto& h : j.at("v")) {
      require_keys(h, "potential.v[]", {"k"}, {"cos", "sin"});
      cocycle::Harmonic harm;
      harm.k = static_cast<int>(integer_or(h, "k", 0, "potential.v[]"));
      harm.cos_coeff = number_or(h, "cos", 0.0, "potential.v[]");
      harm.sin_coeff = number_or(h, "sin", 0.0, "potential.v[]");
      v.push_back(harm);
    }
  }
  return cocycle::PotentialSpec(lambda, epsilon, std::move(v));
}

json potential_to_json(const cocycle::PotentialSpec& pot) {
  json v = json::array();
  for (const auto& h : pot.v())
    v.push_back(json{{"k", h.k}, {"cos", h.cos_coeff}, {"sin", h.sin_coeff}});
  return json{{"lambda", pot.lambda()}, {"epsilon", pot.epsilon()}, {"v", std::move(v)}};
}

json diophantine_report_to_json(const arithmetic::DiophantineReport& report) {
  return json{{"kind", arithmetic::to_string(report.kind)},
              {"kappa", report.kappa},
              {"tau", report.tau},
              {"worst_k", report.worst_k},
              {"worst_margin", report.worst_margin},
              {"k_max", report.k_max}};
}

RunConfig RunConfig::from_json(const json& j) {
  require_keys(j, "config", {"task", "alpha", "potential"},
               {"params", "seed", "out_prefix"});
  RunConfig cfg;
  if (!j.at("task").is_string()) throw ValidationError("config.task must be a string");
  cfg.task = task_from_string(j.at("task").get<std::string>());
  cfg.alpha = FrequencyLiteral::from_json(j.at("alpha"));
  cfg.potential = potential_from_json(j.at("potential"));
  if (j.contains("params")) {
    if (!j.at("params").is_object())
      throw ValidationError("config.params must be an object");
    cfg.params = j.at("params");
  }
  cfg.seed = integer_or(j, "seed", 0, "config");
  if (j.contains("out_prefix")) {
    if (!j.at("out_prefix").is_string())
      throw ValidationError("config.out_prefix must be a string");
    cfg.out_prefix = j.at("out_prefix").get<std::string>();
  }
  return cfg;
}

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config parse error in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j{{"task", to_string(task)},
         {"alpha", alpha.to_json()},
         {"potential", potential_to_json(potential)},
         {"params", params},
         {"seed", seed}};
  if (!out_prefix.empty()) j["out_prefix"] = out_prefix;
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

std::string config_hash(const RunConfig& config) {
  return hex64(fnv1a64(config.to_json().dump()));
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

json RunRecord::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs)
    outs.push_back(json{{"name", o.name}, {"bytes", o.bytes}, {"digest", o.digest}});
  return json{{"config_hash", config_hash},   {"tool_version", tool_version},
              {"elapsed_seconds", elapsed_seconds}, {"cache_hit", cache_hit},
              {"health_flags", health_flags}, {"outputs", std::move(outs)}};
}

namespace {

struct TaskOutput {
  // name -> full file contents (header line included)
  std::vector<std::pair<std::string, std::string>> files;
  int health_flags = 0;
};

std::string artifact_header(const std::string& hash) {
  return std::string("# ") + kToolName + " " + kToolVersion + " config " + hash + "\n";
}

std::string json_artifact(const std::string& hash, json body) {
  body["tool_version"] = kToolVersion;
  body["config_hash"] = hash;
  return body.dump(2) + "\n";
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- task implementations -------------------------------------------------

std::vector<double> energy_grid_param(const json& params, const char* key,
                                      const cocycle::PotentialSpec& pot,
                                      std::size_t default_points) {
  if (params.contains(key)) return grid_from_json(params.at(key), key);
  return default_energy_grid(pot, default_points);
}

std::vector<double> schedule_param(const json& params, const char* context) {
  if (!params.contains("schedule")) return lyapunov::default_eps_schedule();
  const auto& j = params.at("schedule");
  if (!j.is_array()) throw ValidationError(std::string(context) + ": schedule must be an array");
  std::vector<double> s;
  for (const auto& v : j) s.push_back(v.get<double>());
  return s;
}

TaskOutput run_lyapunov(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                        const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"E_grid", "E", "eps_imag", "n", "m"});
  std::vector<double> grid;
  if (cfg.params.contains("E")) {
    grid.push_back(number_at(cfg.params, "E", "params"));
  } else if (cfg.params.contains("E_grid")) {
    grid = grid_from_json(cfg.params.at("E_grid"), "params.E_grid");
  } else {
    grid = default_energy_grid(cfg.potential, 101);
  }
  const double eps_imag = number_or(cfg.params, "eps_imag", 0.0, "params");
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 10000, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 1024, "params"));

  std::string csv = artifact_header(hash) + "E,eps,L\n";
  for (const double E : grid) {
    const double L = lyapunov::lyapunov_exponent(cfg.potential, alpha, {E, 0.0}, eps_imag,
                                                 n, m, threads);
    csv += format_double(E) + "," + format_double(eps_imag) + "," + format_double(L) + "\n";
  }
  return {{{cfg.prefix() + ".csv", csv}}, 0};
}

TaskOutput run_acceleration(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                            const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"E_grid", "E", "schedule", "n", "m"});
  std::vector<double> grid;
  if (cfg.params.contains("E"))
    grid.push_back(number_at(cfg.params, "E", "params"));
  else if (cfg.params.contains("E_grid"))
    grid = grid_from_json(cfg.params.at("E_grid"), "params.E_grid");
  else
    grid = default_energy_grid(cfg.potential, 21);
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 10000, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 1024, "params"));
  const auto schedule = schedule_param(cfg.params, "params");

  TaskOutput out;
  std::string csv = artifact_header(hash) + "E,eps,L\n";
  json profiles = json::array();
  for (const double E : grid) {
    const auto profile =
        lyapunov::acceleration(cfg.potential, alpha, E, schedule, n, m, threads);
    for (std::size_t i = 0; i < profile.eps_grid.size(); ++i) {
      csv += format_double(E) + "," + format_double(profile.eps_grid[i]) + "," +
             format_double(profile.L_values[i]) + "\n";
    }
    csv += format_double(E) + ",0," + format_double(profile.L0) + "\n";
    json p{{"E", E},
           {"eps_grid", profile.eps_grid},
           {"L_values", profile.L_values},
           {"L0", profile.L0},
           {"slope", profile.slope},
           {"omega_residual", profile.omega_residual},
           {"convexity_warning", profile.convexity_warning}};
    if (profile.omega_int)
      p["omega_int"] = *profile.omega_int;
    else
      p["omega_int"] = nullptr;
    profiles.push_back(std::move(p));
    if (profile.convexity_warning) out.health_flags = 1;
  }
  out.files.emplace_back(cfg.prefix() + ".csv", csv);
  out.files.emplace_back(cfg.prefix() + ".json",
                         json_artifact(hash, json{{"profiles", std::move(profiles)}}));
  return out;
}

TaskOutput run_rotation(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                        const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"E_grid", "n", "m"});
  const auto grid = energy_grid_param(cfg.params, "E_grid", cfg.potential, 101);
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 4096, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 32, "params"));

  std::string csv = artifact_header(hash) + "E,rho,N_from_rho,spread\n";
  for (const double E : grid) {
    const auto r = rotation::rotation_number(cfg.potential, alpha, E, n, m, threads);
    csv += format_double(E) + "," + format_double(r.rho) + "," +
           format_double(rotation::ids_from_rotation(r.rho)) + "," +
           format_double(r.spread) + "\n";
  }
  return {{{cfg.prefix() + ".csv", csv}}, 0};
}

TaskOutput run_ids(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                   const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"E_grid", "n", "m", "method"});
  auto grid = energy_grid_param(cfg.params, "E_grid", cfg.potential, 401);
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 2000, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 16, "params"));
  std::string method = "counting";
  if (cfg.params.contains("method")) method = cfg.params.at("method").get<std::string>();

  std::vector<double> N(grid.size());
  if (method == "counting") {
    const auto table = spectrum::ids_counting(cfg.potential, alpha, grid, n, m, threads);
    N = table.N_values;
    grid = table.E_grid;
  } else if (method == "rotation") {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto r = rotation::rotation_number(cfg.potential, alpha, grid[i],
                                               std::max<std::size_t>(n, 1000), m, threads);
      N[i] = rotation::ids_from_rotation(r.rho);
    }
    // The rotation route carries per-point noise; restore monotonicity.
    for (std::size_t i = 1; i < N.size(); ++i) N[i] = std::max(N[i], N[i - 1]);
  } else {
    throw ValidationError("params.method must be 'counting' or 'rotation'");
  }

  std::string csv = artifact_header(hash) + "E,N\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv += format_double(grid[i]) + "," + format_double(N[i]) + "\n";
  return {{{cfg.prefix() + ".csv", csv}}, 0};
}

TaskOutput run_spectrum(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                        const std::string& hash, int threads) {
  (void)threads;
  require_keys(cfg.params, "params", {}, {"n", "m", "margin", "sigma_grid", "E_samples"});
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 2000, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 8, "params"));
  const double margin =
      number_or(cfg.params, "margin", 3.0 / static_cast<double>(n) + 1e-8, "params");
  const auto S = spectrum::spectrum_approx(cfg.potential, alpha, n, m, margin);

  std::vector<double> sigma_grid;
  if (cfg.params.contains("sigma_grid")) {
    for (const auto& v : cfg.params.at("sigma_grid")) sigma_grid.push_back(v.get<double>());
  } else {
    for (int k = 10; k >= 2; --k) sigma_grid.push_back(std::ldexp(1.0, -k));
  }
  const int E_samples =
      static_cast<int>(integer_or(cfg.params, "E_samples", 512, "params"));
  const auto homog = spectrum::homogeneity_profile(S, sigma_grid, E_samples);

  json intervals = json::array();
  for (const auto& iv : S.intervals) intervals.push_back(json::array({iv.lo, iv.hi}));
  TaskOutput out;
  out.files.emplace_back(
      cfg.prefix() + ".json",
      json_artifact(hash, json{{"intervals", std::move(intervals)}, {"margin", S.margin}}));
  std::string csv = artifact_header(hash) + "sigma,min_ratio,passing\n";
  for (std::size_t i = 0; i < homog.sigma_grid.size(); ++i) {
    csv += format_double(homog.sigma_grid[i]) + "," + format_double(homog.min_ratio[i]) +
           "," + (homog.passing[i] ? "1" : "0") + "\n";
  }
  out.files.emplace_back(cfg.prefix() + "_homogeneity.csv", csv);
  return out;
}

TaskOutput run_green(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                     const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"points", "E_grid", "y", "m", "window"});
  std::vector<cocycle::Complex> zs;
  if (cfg.params.contains("points")) {
    for (const auto& p : cfg.params.at("points")) {
      if (!p.is_array() || p.size() != 2)
        throw ValidationError("params.points entries must be [re, im] pairs");
      zs.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  } else {
    const double y = number_or(cfg.params, "y", 0.3, "params");
    for (const double E : energy_grid_param(cfg.params, "E_grid", cfg.potential, 41))
      zs.emplace_back(E, y);
  }
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 64, "params"));
  const auto window =
      static_cast<std::size_t>(integer_or(cfg.params, "window", 0, "params"));

  std::string csv = artifact_header(hash) + "re_z,im_z,re_G,im_G,window_warning\n";
  for (const auto z : zs) {
    const auto g = green::green_avg(cfg.potential, alpha, z, window, m, threads);
    csv += format_double(z.real()) + "," + format_double(z.imag()) + "," +
           format_double(g.value.real()) + "," + format_double(g.value.imag()) + "," +
           (g.window_warning ? "1" : "0") + "\n";
  }
  return {{{cfg.prefix() + ".csv", csv}}, 0};
}

TaskOutput run_boundary(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                        const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"E_grid", "schedule", "m"});
  const auto grid = energy_grid_param(cfg.params, "E_grid", cfg.potential, 101);
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 64, "params"));
  const auto schedule = schedule_param(cfg.params, "params");

  std::string csv = artifact_header(hash) + "E,ReG_boundary,residual,flag\n";
  for (const double E : grid) {
    const auto b = green::normal_boundary_re_g(cfg.potential, alpha, E, schedule, m, threads);
    csv += format_double(E) + "," + format_double(b.re_g) + "," +
           format_double(b.residual) + "," + (b.nonconvergent ? "1" : "0") + "\n";
  }
  return {{{cfg.prefix() + ".csv", csv}}, 0};
}

TaskOutput run_maximal(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                       const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {}, {"E_grid", "cone", "sigma_grid", "m"});
  const auto grid = energy_grid_param(cfg.params, "E_grid", cfg.potential, 401);
  green::Cone cone;
  if (cfg.params.contains("cone")) {
    const auto& c = cfg.params.at("cone");
    require_keys(c, "params.cone", {}, {"y_min", "y_max", "levels", "aspect"});
    cone.y_min = number_or(c, "y_min", cone.y_min, "params.cone");
    cone.y_max = number_or(c, "y_max", cone.y_max, "params.cone");
    cone.levels = static_cast<int>(integer_or(c, "levels", cone.levels, "params.cone"));
    cone.aspect = static_cast<int>(integer_or(c, "aspect", cone.aspect, "params.cone"));
  }
  std::vector<double> sigma_grid;
  if (cfg.params.contains("sigma_grid")) {
    for (const auto& v : cfg.params.at("sigma_grid")) sigma_grid.push_back(v.get<double>());
  } else {
    for (int k = -3; k <= 7; ++k) sigma_grid.push_back(std::ldexp(1.0, k));
  }
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 16, "params"));

  const auto profile =
      green::maximal_function(cfg.potential, alpha, grid, cone, sigma_grid, m, threads);

  TaskOutput out;
  std::string csv = artifact_header(hash) + "E,Gstar\n";
  for (std::size_t i = 0; i < profile.E_grid.size(); ++i)
    csv += format_double(profile.E_grid[i]) + "," + format_double(profile.Gstar[i]) + "\n";
  out.files.emplace_back(cfg.prefix() + ".csv", csv);

  std::string wcsv = artifact_header(hash) + "sigma,weak_type_stat\n";
  for (std::size_t i = 0; i < profile.sigma_grid.size(); ++i)
    wcsv += format_double(profile.sigma_grid[i]) + "," +
            format_double(profile.weak_type_stat[i]) + "\n";
  out.files.emplace_back(cfg.prefix() + "_weak_type.csv", wcsv);

  out.files.emplace_back(
      cfg.prefix() + ".json",
      json_artifact(hash, json{{"D", profile.D},
                               {"y_min", profile.cone.y_min},
                               {"y_max", profile.cone.y_max},
                               {"levels", profile.cone.levels},
                               {"aspect", profile.cone.aspect}}));
  return out;
}

TaskOutput run_regime_table(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                            const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {},
               {"lambdas", "quantiles", "trunc_n", "n", "m", "tol", "schedule"});
  std::vector<double> lambdas{0.5, 1.0, 2.0};
  if (cfg.params.contains("lambdas")) {
    lambdas.clear();
    for (const auto& v : cfg.params.at("lambdas")) lambdas.push_back(v.get<double>());
  }
  std::vector<double> quantiles{0.1, 0.3, 0.5, 0.7, 0.9};
  if (cfg.params.contains("quantiles")) {
    quantiles.clear();
    for (const auto& v : cfg.params.at("quantiles")) quantiles.push_back(v.get<double>());
  }
  const auto trunc_n =
      static_cast<std::size_t>(integer_or(cfg.params, "trunc_n", 2000, "params"));
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 10000, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 1024, "params"));
  const double tol = number_or(cfg.params, "tol", 0.02, "params");
  const auto schedule = schedule_param(cfg.params, "params");

  TaskOutput out;
  std::string csv = artifact_header(hash) + "lambda,E_sample,L,omega,regime\n";
  for (const double lam : lambdas) {
    // Keep the configured perturbation, swap in the table's lambda.
    const cocycle::PotentialSpec pot(lam, cfg.potential.epsilon(), cfg.potential.v());
    const auto energies = spectrum::quantile_energies(pot, alpha, trunc_n, quantiles);
    for (const double E : energies) {
      const auto profile = lyapunov::acceleration(pot, alpha, E, schedule, n, m, threads);
      if (profile.convexity_warning) out.health_flags = 1;
      std::string omega = "none";
      std::string regime = "unclassifiable";
      if (profile.omega_int) {
        omega = std::to_string(*profile.omega_int);
        regime = lyapunov::to_string(lyapunov::classify_regime(profile, tol));
      }
      csv += format_double(lam) + "," + format_double(E) + "," +
             format_double(profile.L0) + "," + omega + "," + regime + "\n";
    }
  }
  out.files.emplace_back(cfg.prefix() + ".csv", csv);
  return out;
}

TaskOutput run_identities(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                          const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {},
               {"grid_points", "rotation_n", "rotation_m", "ids_n", "ids_m", "lyap_n",
                "lyap_m", "thouless_points", "deriv_points", "deriv_eps", "deriv_dE",
                "tol_relation", "tol_thouless", "tol_derivative"});
  const auto& p = cfg.params;
  const auto grid_points =
      static_cast<std::size_t>(integer_or(p, "grid_points", 50, "params"));
  const auto rotation_n =
      static_cast<std::size_t>(integer_or(p, "rotation_n", 4096, "params"));
  const auto rotation_m =
      static_cast<std::size_t>(integer_or(p, "rotation_m", 16, "params"));
  const auto ids_n = static_cast<std::size_t>(integer_or(p, "ids_n", 2000, "params"));
  const auto ids_m = static_cast<std::size_t>(integer_or(p, "ids_m", 8, "params"));
  const auto lyap_n = static_cast<std::size_t>(integer_or(p, "lyap_n", 10000, "params"));
  const auto lyap_m = static_cast<std::size_t>(integer_or(p, "lyap_m", 256, "params"));
  const auto thouless_points =
      static_cast<std::size_t>(integer_or(p, "thouless_points", 20, "params"));
  const auto deriv_points =
      static_cast<std::size_t>(integer_or(p, "deriv_points", 20, "params"));
  const double deriv_eps = number_or(p, "deriv_eps", 0.1, "params");
  const double deriv_dE = number_or(p, "deriv_dE", deriv_eps / 10.0, "params");
  const double tol_relation = number_or(p, "tol_relation", 0.02, "params");
  const double tol_thouless = number_or(p, "tol_thouless", 0.02, "params");
  const double tol_derivative = number_or(p, "tol_derivative", 0.01, "params");

  const double bound = spectrum::containment_bound(cfg.potential);
  const auto relation_grid = linspace(-1.1 * bound, 1.1 * bound, grid_points);
  const auto ids = spectrum::ids_counting(cfg.potential, alpha,
                                          default_energy_grid(cfg.potential, 401), ids_n,
                                          ids_m, threads);

  std::string csv = artifact_header(hash) + "identity,E,lhs,rhs,residual,tolerance\n";
  double max_relation = 0.0, max_thouless = 0.0, max_derivative = 0.0;

  {
    const auto counting =
        spectrum::ids_counting(cfg.potential, alpha, relation_grid, ids_n, ids_m, threads);
    for (std::size_t i = 0; i < relation_grid.size(); ++i) {
      const auto r = rotation::rotation_number(cfg.potential, alpha, relation_grid[i],
                                               rotation_n, rotation_m, threads);
      const double lhs = counting.N_values[i];
      const double rhs = rotation::ids_from_rotation(r.rho);
      const double res = std::fabs(lhs - rhs);
      max_relation = std::max(max_relation, res);
      csv += std::string("ids_relation,") + format_double(relation_grid[i]) + "," +
             format_double(lhs) + "," + format_double(rhs) + "," + format_double(res) +
             "," + format_double(tol_relation) + "\n";
    }
  }
  {
    const auto zs = linspace(-0.5 * bound, 0.5 * bound, thouless_points);
    for (const double z : zs) {
      const double lhs = green::thouless(ids, {z, 0.0});
      const double rhs = lyapunov::lyapunov_exponent(cfg.potential, alpha, {z, 0.0}, 0.0,
                                                     lyap_n, std::max<std::size_t>(lyap_m, 16),
                                                     threads);
      const double res = std::fabs(lhs - rhs);
      max_thouless = std::max(max_thouless, res);
      csv += std::string("thouless_vs_lyapunov,") + format_double(z) + "," +
             format_double(lhs) + "," + format_double(rhs) + "," + format_double(res) +
             "," + format_double(tol_thouless) + "\n";
    }
  }
  {
    const auto es = linspace(-0.7 * bound, 0.7 * bound, deriv_points);
    for (const double E : es) {
      const double res = green::derivative_identity_residual(
          cfg.potential, alpha, E, deriv_eps, deriv_dE, lyap_n,
          std::max<std::size_t>(lyap_m, 16), 256, threads);
      max_derivative = std::max(max_derivative, res);
      csv += std::string("derivative_identity,") + format_double(E) + ",,," +
             format_double(res) + "," + format_double(tol_derivative) + "\n";
    }
  }

  TaskOutput out;
  out.files.emplace_back(cfg.prefix() + ".csv", csv);
  out.files.emplace_back(
      cfg.prefix() + ".json",
      json_artifact(hash, json{{"max_ids_relation_residual", max_relation},
                               {"max_thouless_residual", max_thouless},
                               {"max_derivative_residual", max_derivative}}));
  return out;
}

TaskOutput run_theta_lipschitz(const RunConfig& cfg, const arithmetic::Frequency& alpha,
                               const std::string& hash, int threads) {
  require_keys(cfg.params, "params", {},
               {"gamma", "tau", "k_max", "E_grid", "n", "m"});
  const double gamma = number_or(cfg.params, "gamma", 0.01, "params");
  const double tau = number_or(cfg.params, "tau", 2.0, "params");
  const std::int64_t k_max = integer_or(cfg.params, "k_max", 1000, "params");
  const auto grid = energy_grid_param(cfg.params, "E_grid", cfg.potential, 101);
  const auto n = static_cast<std::size_t>(integer_or(cfg.params, "n", 4096, "params"));
  const auto m = static_cast<std::size_t>(integer_or(cfg.params, "m", 32, "params"));

  const auto report = theta_lipschitz_probe(cfg.potential, alpha, gamma, tau, k_max, grid,
                                            n, m, threads);

  TaskOutput out;
  std::string csv = artifact_header(hash) + "E,rho,N,selected\n";
  for (std::size_t i = 0; i < report.E_grid.size(); ++i) {
    csv += format_double(report.E_grid[i]) + "," + format_double(report.rho[i]) + "," +
           format_double(report.N[i]) + "," + (report.selected[i] ? "1" : "0") + "\n";
  }
  out.files.emplace_back(cfg.prefix() + ".csv", csv);
  out.files.emplace_back(
      cfg.prefix() + ".json",
      json_artifact(hash,
                    json{{"gamma", gamma},
                         {"tau", tau},
                         {"k_max", k_max},
                         {"max_quotient_selected", report.max_quotient_selected},
                         {"max_quotient_all", report.max_quotient_all},
                         {"empty_selection", report.empty_selection}}));
  return out;
}

TaskOutput dispatch(const RunConfig& cfg, const std::string& hash, int threads) {
  const arithmetic::Frequency alpha = cfg.alpha.materialize();
  switch (cfg.task) {
    case Task::Lyapunov: return run_lyapunov(cfg, alpha, hash, threads);
    case Task::Acceleration: return run_acceleration(cfg, alpha, hash, threads);
    case Task::Rotation: return run_rotation(cfg, alpha, hash, threads);
    case Task::Ids: return run_ids(cfg, alpha, hash, threads);
    case Task::Spectrum: return run_spectrum(cfg, alpha, hash, threads);
    case Task::Green: return run_green(cfg, alpha, hash, threads);
    case Task::Boundary: return run_boundary(cfg, alpha, hash, threads);
    case Task::Maximal: return run_maximal(cfg, alpha, hash, threads);
    case Task::RegimeTable: return run_regime_table(cfg, alpha, hash, threads);
    case Task::Identities: return run_identities(cfg, alpha, hash, threads);
    case Task::ThetaLipschitz: return run_theta_lipschitz(cfg, alpha, hash, threads);
  }
  throw ValidationError("unknown task");
}

}  // namespace

ThetaLipschitzReport theta_lipschitz_probe(const cocycle::PotentialSpec& pot,
                                           const arithmetic::Frequency& alpha,
                                           double gamma, double tau, std::int64_t k_max,
                                           const std::vector<double>& E_grid,
                                           std::size_t n, std::size_t m, int threads) {
  ThetaLipschitzReport report;
  report.E_grid = E_grid;
  report.rho.resize(E_grid.size());
  report.N.resize(E_grid.size());
  report.selected.resize(E_grid.size());
  for (std::size_t i = 0; i < E_grid.size(); ++i) {
    const auto r = rotation::rotation_number(pot, alpha, E_grid[i], n, m, threads);
    report.rho[i] = r.rho;
    report.N[i] = rotation::ids_from_rotation(r.rho);
    report.selected[i] =
        arithmetic::theta_membership(BigFloat(r.rho), alpha, gamma, tau, k_max).member ? 1
                                                                                       : 0;
  }
  double max_all = 0.0;
  for (std::size_t i = 0; i + 1 < E_grid.size(); ++i) {
    max_all = std::max(max_all, std::fabs(report.N[i + 1] - report.N[i]) /
                                    (E_grid[i + 1] - E_grid[i]));
  }
  report.max_quotient_all = max_all;

  double max_sel = 0.0;
  std::size_t prev = E_grid.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < E_grid.size(); ++i) {
    if (!report.selected[i]) continue;
    ++count;
    if (prev < E_grid.size()) {
      max_sel = std::max(max_sel, std::fabs(report.N[i] - report.N[prev]) /
                                      (E_grid[i] - E_grid[prev]));
    }
    prev = i;
  }
  report.max_quotient_selected = max_sel;
  report.empty_selection = count < 2;
  return report;
}

RunRecord run(const RunConfig& config, const RunOptions& options) {
  if (options.out_dir.empty()) throw ValidationError("run: out_dir must be set");
  fs::create_directories(options.out_dir);
  const std::string hash = config_hash(config);
  const std::string record_name = config.prefix() + "_record.json";

  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.config_hash = hash;
  record.tool_version = kToolVersion;

  // Cache replay: copy the stored artifacts, byte-identical, no recompute.
  const fs::path cache_entry =
      options.cache_dir.empty() ? fs::path{} : options.cache_dir / hash;
  if (!cache_entry.empty() && fs::exists(cache_entry / "manifest.json")) {
    const json manifest = json::parse(read_file(cache_entry / "manifest.json"));
    record.cache_hit = true;
    record.health_flags = manifest.at("health_flags").get<int>();
    for (const auto& f : manifest.at("files")) {
      const std::string name = f.at("name").get<std::string>();
      const std::string content = read_file(cache_entry / name);
      write_atomic(options.out_dir / name, content);
      record.outputs.push_back(
          {name, content.size(), hex64(fnv1a64(content))});
    }
    record.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_atomic(options.out_dir / record_name, record.to_json().dump(2) + "\n");
    return record;
  }

  const TaskOutput out = dispatch(config, hash, options.threads);
  record.health_flags = out.health_flags;
  for (const auto& [name, content] : out.files) {
    write_atomic(options.out_dir / name, content);
    record.outputs.push_back({name, content.size(), hex64(fnv1a64(content))});
  }
  record.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_atomic(options.out_dir / record_name, record.to_json().dump(2) + "\n");

  if (!cache_entry.empty()) {
    fs::create_directories(cache_entry);
    json files = json::array();
    for (const auto& [name, content] : out.files) {
      write_atomic(cache_entry / name, content);
      files.push_back(json{{"name", name}});
    }
    write_atomic(cache_entry / "manifest.json",
                 json{{"health_flags", out.health_flags}, {"files", std::move(files)}}
                     .dump(2) +
                     "\n");
  }
  return record;
}

}  // namespace qp::run
