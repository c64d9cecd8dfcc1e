#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qp/cocycle.hpp"

namespace qp::run {

using json = nlohmann::json;

enum class Task {
  Lyapunov,
  Acceleration,
  Rotation,
  Ids,
  Spectrum,
  Green,
  Boundary,
  Maximal,
  RegimeTable,
  Identities,
  ThetaLipschitz,
};

const char* to_string(Task task);
Task task_from_string(const std::string& name);
std::vector<std::string> task_names();

// Frequency literal as it appears in config files: {"decimal": "<string>"} or
// {"quotients": [ints]}.
struct FrequencyLiteral {
  std::optional<std::string> decimal;
  std::optional<std::vector<std::int64_t>> quotients;

  static FrequencyLiteral from_json(const json& j);
  json to_json() const;
  arithmetic::Frequency materialize() const;
};

cocycle::PotentialSpec potential_from_json(const json& j);
json potential_to_json(const cocycle::PotentialSpec& pot);

// Fields exactly as in DiophantineReport: kind, kappa, tau, worst_k,
// worst_margin, k_max.
json diophantine_report_to_json(const arithmetic::DiophantineReport& report);

struct RunConfig {
  Task task = Task::Lyapunov;
  FrequencyLiteral alpha;
  cocycle::PotentialSpec potential;
  json params = json::object();  // task-specific, validated on dispatch
  std::int64_t seed = 0;         // reserved; all algorithms are deterministic
  std::string out_prefix;        // defaults to the task name

  static RunConfig from_json(const json& j);
  static RunConfig from_file(const std::filesystem::path& path);
  json to_json() const;
  std::string prefix() const { return out_prefix.empty() ? to_string(task) : out_prefix; }
};

// FNV-1a 64 of the canonicalized config JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

struct OutputEntry {
  std::string name;
  std::uint64_t bytes = 0;
  std::string digest;  // fnv1a64 of the file contents
};

struct RunRecord {
  std::string config_hash;
  std::string tool_version;
  double elapsed_seconds = 0.0;
  bool cache_hit = false;
  int health_flags = 0;  // nonzero: numeric health check failed (CLI exit 3)
  std::vector<OutputEntry> outputs;

  json to_json() const;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::filesystem::path cache_dir;  // empty: no cache
  int threads = 1;
};

// Executes the task, writes the artifact files (temp + atomic rename) and the
// run record <prefix>_record.json.  With a cache dir, a config whose hash was
// seen before is replayed by copying the cached artifacts, byte-identical,
// with no recomputation.
RunRecord run(const RunConfig& config, const RunOptions& options);

struct ThetaLipschitzReport {
  std::vector<double> E_grid;
  std::vector<double> rho;
  std::vector<double> N;        // 1 - 2 rho
  std::vector<char> selected;   // theta = rho(E) passes the Theta membership test
  double max_quotient_selected = 0.0;  // over adjacent selected pairs
  double max_quotient_all = 0.0;       // unfiltered contrast value
  bool empty_selection = false;
};

// Selects grid energies whose rotation number lies in Theta^tau_gamma (within
// k_max) and reports the max IDS difference quotient over adjacent selected
// pairs, with the unfiltered quotient for contrast.
ThetaLipschitzReport theta_lipschitz_probe(const cocycle::PotentialSpec& pot,
                                           const arithmetic::Frequency& alpha,
                                           double gamma, double tau, std::int64_t k_max,
                                           const std::vector<double>& E_grid,
                                           std::size_t n, std::size_t m, int threads = 1);

// Shortest round-trip decimal formatting (std::to_chars); locale-independent.
std::string format_double(double value);

}  // namespace qp::run
