// qpspec: spectral-theory toolkit for one-frequency quasiperiodic Schrodinger
// operators.  One subcommand per task; the config file carries the model and
// the task parameters, the flags carry execution details (threads, dirs).
//
// Exit codes: 0 success, 2 validation failure, 3 numeric health-check failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "qp/errors.hpp"
#include "qp/run.hpp"
#include "qp/version.hpp"

namespace {

struct Cli {
  std::string config_path;
  std::string out_dir = "out";
  std::string cache_dir;
  int threads = 1;
};

int run_task(qp::run::Task task, const Cli& cli) {
  qp::run::RunConfig config = qp::run::RunConfig::from_file(cli.config_path);
  if (config.task != task) {
    throw qp::ValidationError(std::string("config task '") +
                              qp::run::to_string(config.task) +
                              "' does not match subcommand '" +
                              qp::run::to_string(task) + "'");
  }
  qp::run::RunOptions options;
  options.out_dir = cli.out_dir;
  if (!cli.cache_dir.empty()) options.cache_dir = cli.cache_dir;
  options.threads = cli.threads;

  const qp::run::RunRecord record = qp::run::run(config, options);
  std::printf("config %s%s, %.3fs\n", record.config_hash.c_str(),
              record.cache_hit ? " (cache hit)" : "", record.elapsed_seconds);
  for (const auto& out : record.outputs)
    std::printf("wrote %s/%s (%llu bytes, %s)\n", cli.out_dir.c_str(), out.name.c_str(),
                static_cast<unsigned long long>(out.bytes), out.digest.c_str());
  if (record.health_flags != 0) {
    std::fprintf(stderr, "numeric health check failed (flags=%d)\n", record.health_flags);
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(qp::kToolName) + " " + qp::kToolVersion +
               " - quasiperiodic Schrodinger spectral toolkit"};
  app.require_subcommand(1);

  Cli cli;
  qp::run::Task selected{};
  for (const auto& name : qp::run::task_names()) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " task");
    sub->add_option("--config", cli.config_path, "JSON run configuration")->required();
    sub->add_option("--out", cli.out_dir, "output directory (default: out)");
    sub->add_option("--threads", cli.threads, "worker threads (default: 1)");
    sub->add_option("--cache", cli.cache_dir, "cache directory keyed by config hash");
    sub->callback([&selected, name] { selected = qp::run::task_from_string(name); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run_task(selected, cli);
  } catch (const qp::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
