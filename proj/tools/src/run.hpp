#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace spintrace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;

struct Artifact {
  std::string name;
  std::string content;
};

struct TaskResult {
  std::vector<Artifact> files;
  /// Small task-specific record copied into the manifest.
  nlohmann::json summary = nlohmann::json::object();
};

/// Runs the configured task in memory. Parameters are checked and the
/// Hilbert dimension is compared with the cap before anything is built.
TaskResult execute(const RunConfig& cfg);

/// Fixed-format number for CSV cells: %.17g.
std::string fmt(double x);

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

/// Loads, executes and writes artifacts plus `<prefix>manifest.json`.
/// Nothing is written unless the task succeeds. Returns the exit code and
/// reports errors on `err`.
int run(const RunOptions& opts, std::ostream& err);

}  // namespace spintrace::cli
