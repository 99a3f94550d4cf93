#pragma once

// Model description shared by the quantum and classical sides: the chain
// size, the spin quantum number, hbar, and the Hamiltonian as a real
// polynomial in the Cartesian spin components.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace spintrace {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr std::size_t kDefaultDimensionCap = 4096;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed spec, out-of-range site, non-positive width, ...
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not deliver (cap exceeded, step underflow,
/// singular chart point, singular block).
class NumericError : public Error {
 public:
  using Error::Error;
};

class DimensionCapError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// N spins of quantum number j = twice_j / 2 with Planck constant hbar.
struct ModelContext {
  int n_sites = 1;
  int twice_j = 1;
  double hbar = 1.0;

  ModelContext() = default;
  ModelContext(int n, int twice_j_, double hbar_);

  /// Builds a context with hbar chosen so that J_class = hbar (j + 1/2)
  /// equals `j_class`.
  static ModelContext with_fixed_j_class(int n, int twice_j, double j_class);

  [[nodiscard]] double j() const { return 0.5 * twice_j; }
  [[nodiscard]] double j_class() const { return hbar * (twice_j + 1) / 2.0; }
  [[nodiscard]] int local_dim() const { return twice_j + 1; }

  /// (2j+1)^N, or 0 when the product does not fit in size_t.
  [[nodiscard]] std::size_t hilbert_dim() const;

  /// Throws DimensionCapError if (2j+1)^N exceeds `cap`.
  void require_dim_within(std::size_t cap) const;

  void validate() const;
};

/// A single spin component J_axis acting on `site` (both 1-based).
struct Factor {
  int site = 1;
  int axis = 3;

  friend bool operator==(const Factor&, const Factor&) = default;
};

/// coefficient * (P + P^dagger) / 2 with P the ordered product of factors.
/// An empty factor list is the identity.
struct Term {
  double coefficient = 0.0;
  std::vector<Factor> factors;
};

struct HamiltonianSpec {
  std::vector<Term> terms;

  HamiltonianSpec() = default;
  explicit HamiltonianSpec(std::vector<Term> t) : terms(std::move(t)) {}

  HamiltonianSpec& add(double coefficient, std::vector<Factor> factors);

  /// Parses "J3@1" style factor tokens.
  static Factor parse_factor(std::string_view token);

  /// Highest site index referenced (0 for a constant spec).
  [[nodiscard]] int max_site() const;
  [[nodiscard]] int max_degree() const;

  void validate(const ModelContext& ctx) const;

  [[nodiscard]] std::string to_string() const;
};

}  // namespace spintrace
