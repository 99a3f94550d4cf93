#include "spintrace/model.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace spintrace {

ModelContext::ModelContext(int n, int twice_j_, double hbar_)
    : n_sites(n), twice_j(twice_j_), hbar(hbar_) {
  validate();
}

ModelContext ModelContext::with_fixed_j_class(int n, int twice_j,
                                              double j_class) {
  if (!(j_class > 0.0)) throw ValidationError("j_class must be positive");
  return ModelContext(n, twice_j, 2.0 * j_class / (twice_j + 1));
}

void ModelContext::validate() const {
  if (n_sites < 1) throw ValidationError("n_sites must be >= 1");
  if (twice_j < 1) throw ValidationError("twice_j must be >= 1");
  if (!(hbar > 0.0) || !std::isfinite(hbar))
    throw ValidationError("hbar must be positive and finite");
}

std::size_t ModelContext::hilbert_dim() const {
  std::size_t dim = 1;
  const auto d = static_cast<std::size_t>(local_dim());
  for (int i = 0; i < n_sites; ++i) {
    if (dim > std::numeric_limits<std::size_t>::max() / d) return 0;
    dim *= d;
  }
  return dim;
}

void ModelContext::require_dim_within(std::size_t cap) const {
  const std::size_t dim = hilbert_dim();
  if (dim == 0 || dim > cap) {
    std::ostringstream os;
    os << "Hilbert dimension (2j+1)^N = " << local_dim() << "^" << n_sites
       << " exceeds the cap " << cap;
    throw DimensionCapError(os.str());
  }
}

HamiltonianSpec& HamiltonianSpec::add(double coefficient,
                                      std::vector<Factor> factors) {
  terms.push_back(Term{coefficient, std::move(factors)});
  return *this;
}

Factor HamiltonianSpec::parse_factor(std::string_view token) {
  // J<axis>@<site>, axis in {1,2,3}; x/y/z accepted as aliases.
  auto fail = [&] {
    throw ValidationError("bad operator token '" + std::string(token) +
                          "', expected e.g. J3@1");
  };
  if (token.size() < 4 || (token[0] != 'J' && token[0] != 'j')) fail();
  int axis = 0;
  switch (token[1]) {
    case '1': case 'x': axis = 1; break;
    case '2': case 'y': axis = 2; break;
    case '3': case 'z': axis = 3; break;
    default: fail();
  }
  if (token[2] != '@') fail();
  int site = 0;
  const auto* first = token.data() + 3;
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, site);
  if (ec != std::errc() || ptr != last) fail();
  return Factor{site, axis};
}

int HamiltonianSpec::max_site() const {
  int m = 0;
  for (const auto& t : terms)
    for (const auto& f : t.factors) m = std::max(m, f.site);
  return m;
}

int HamiltonianSpec::max_degree() const {
  int m = 0;
  for (const auto& t : terms) m = std::max(m, static_cast<int>(t.factors.size()));
  return m;
}

void HamiltonianSpec::validate(const ModelContext& ctx) const {
  for (const auto& t : terms) {
    if (!std::isfinite(t.coefficient))
      throw ValidationError("non-finite Hamiltonian coefficient");
    for (const auto& f : t.factors) {
      if (f.site < 1 || f.site > ctx.n_sites)
        throw ValidationError("site index " + std::to_string(f.site) +
                              " outside [1, " + std::to_string(ctx.n_sites) +
                              "]");
      if (f.axis < 1 || f.axis > 3)
        throw ValidationError("spin component must be 1, 2 or 3");
    }
  }
}

std::string HamiltonianSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) os << " + ";
    os << terms[i].coefficient;
    for (const auto& f : terms[i].factors) os << "*J" << f.axis << "@" << f.site;
  }
  return os.str();
}

}  // namespace spintrace
