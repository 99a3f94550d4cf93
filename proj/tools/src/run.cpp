#include "run.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <Eigen/Core>

#ifndef SPINTRACE_VERSION
#define SPINTRACE_VERSION "unknown"
#endif

namespace spintrace::cli {

namespace {

nlohmann::json versions() {
  nlohmann::json v;
  v["spintrace"] = SPINTRACE_VERSION;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#if defined(__clang__)
  v["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  v["compiler"] = "gcc " __VERSION__;
#endif
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int run(const RunOptions& opts, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  TaskResult result;
  try {
    cfg = load_config(opts.config);
    if (opts.seed) cfg.numeric.seed = *opts.seed;
    if (opts.threads) {
      if (*opts.threads == 0) throw ValidationError("--threads must be at least 1");
      cfg.numeric.threads = *opts.threads;
    }
    result = execute(cfg);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json manifest;
  manifest["tool"] = "spintrace";
  manifest["task"] = cfg.task;
  manifest["config"] = opts.config.string();
  manifest["config_hash"] = "fnv1a64:" + fnv1a_hex(cfg.source);
  manifest["seed"] = cfg.numeric.seed;
  manifest["threads"] = cfg.numeric.threads;
  manifest["versions"] = versions();
  manifest["timings"] = {{"total_seconds", seconds}};
  manifest["outputs"] = nlohmann::json::array();
  for (const auto& f : result.files)
    manifest["outputs"].push_back(
        {{"file", cfg.output.prefix + f.name}, {"hash", "fnv1a64:" + fnv1a_hex(f.content)}});
  manifest["summary"] = result.summary;

  try {
    std::filesystem::create_directories(opts.out_dir);
    for (const auto& f : result.files) write_file(opts.out_dir / (cfg.output.prefix + f.name), f.content);
    write_file(opts.out_dir / (cfg.output.prefix + "manifest.json"), manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace spintrace::cli
