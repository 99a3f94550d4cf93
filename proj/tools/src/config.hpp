#pragma once

// Run configuration read from one JSON file. The schema is documented in
// README.md; unknown keys, duplicate keys and a task block that does not
// name exactly one task are rejected with ValidationError.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spintrace/floquet.hpp"
#include "spintrace/model.hpp"

namespace spintrace::cli {

struct KickBlock {
  HamiltonianSpec terms;
  double period = 1.0;
};

struct ModelBlock {
  ModelContext ctx;
  HamiltonianSpec hamiltonian;
  std::optional<KickBlock> kick;
};

struct NumericBlock {
  std::size_t dimension_cap = kDefaultDimensionCap;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  std::uint64_t seed = 1;
  std::size_t random_seeds = 32;
  std::size_t grid_seeds = 0;
  double seed_radius = 0.0;
  unsigned threads = 1;
};

struct OutputBlock {
  /// File name prefix inside the output directory.
  std::string prefix;
};

struct RunConfig {
  ModelBlock model;
  /// One of spectrum, evolve, orbits, trace, density, verify-sk,
  /// verify-identities, floquet.
  std::string task;
  /// The parameters of that task, checked by the task itself.
  nlohmann::json task_params;
  NumericBlock numeric;
  OutputBlock output;
  /// Raw file contents; the manifest carries its hash.
  std::string source;
};

/// Parses JSON text, rejecting duplicate keys anywhere in the document.
nlohmann::json parse_strict(const std::string& text);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// "1.5 J3@1 J3@2" style term list or {"coefficient": c, "factors": [...]}.
HamiltonianSpec parse_terms(const nlohmann::json& j, const std::string& where);

/// Throws ValidationError when `j` has keys outside `allowed`.
void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                  const std::string& where);

/// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(const std::string& bytes);

/// Strictly increasing grid: either an explicit array or {min, max, count}.
std::vector<double> read_grid(const nlohmann::json& j, const std::string& where);

}  // namespace spintrace::cli
