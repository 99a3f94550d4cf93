#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace spintrace::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kTasks{"spectrum", "evolve",    "orbits",           "trace",
                                      "density",  "verify-sk", "verify-identities", "floquet"};

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + ": missing or of the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j, key, where);
}

Term parse_term(const json& t, const std::string& where) {
  Term term;
  if (t.is_string()) {
    std::istringstream in(t.get<std::string>());
    std::string tok;
    if (!(in >> tok)) throw ValidationError(where + ": empty term");
    try {
      std::size_t used = 0;
      term.coefficient = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError(where + ": bad coefficient '" + tok + "'");
    }
    while (in >> tok) term.factors.push_back(HamiltonianSpec::parse_factor(tok));
    return term;
  }
  if (!t.is_object()) throw ValidationError(where + ": term must be a string or an object");
  require_keys(t, {"coefficient", "factors"}, where);
  term.coefficient = get_as<double>(t, "coefficient", where);
  for (const auto& f : get_or<std::vector<std::string>>(t, "factors", {}, where))
    term.factors.push_back(HamiltonianSpec::parse_factor(f));
  return term;
}

ModelBlock parse_model(const json& m) {
  const std::string where = "model";
  if (!m.is_object()) throw ValidationError("model block missing");
  require_keys(m, {"n_sites", "twice_j", "hbar", "j_class", "hamiltonian", "kick"}, where);
  ModelBlock b;
  const int n = get_as<int>(m, "n_sites", where);
  const int tj = get_as<int>(m, "twice_j", where);
  if (m.contains("hbar") == m.contains("j_class"))
    throw ValidationError("model: give exactly one of hbar and j_class");
  if (m.contains("hbar")) {
    b.ctx = ModelContext(n, tj, get_as<double>(m, "hbar", where));
  } else {
    b.ctx = ModelContext::with_fixed_j_class(n, tj, get_as<double>(m, "j_class", where));
  }
  b.ctx.validate();
  b.hamiltonian = parse_terms(m.value("hamiltonian", json::array()), "model.hamiltonian");
  b.hamiltonian.validate(b.ctx);
  if (m.contains("kick")) {
    const auto& k = m.at("kick");
    if (!k.is_object()) throw ValidationError("model.kick must be an object");
    require_keys(k, {"terms", "period"}, "model.kick");
    KickBlock kb;
    kb.terms = parse_terms(k.value("terms", json::array()), "model.kick.terms");
    kb.terms.validate(b.ctx);
    kb.period = get_or<double>(k, "period", 1.0, "model.kick");
    if (!(kb.period > 0.0)) throw ValidationError("model.kick.period must be positive");
    b.kick = kb;
  }
  return b;
}

NumericBlock parse_numeric(const json& n) {
  const std::string where = "numeric";
  NumericBlock b;
  if (n.is_null()) return b;
  if (!n.is_object()) throw ValidationError("numeric must be an object");
  require_keys(n,
               {"dimension_cap", "rel_tol", "abs_tol", "seed", "random_seeds", "grid_seeds",
                "seed_radius", "threads"},
               where);
  b.dimension_cap = get_or<std::size_t>(n, "dimension_cap", b.dimension_cap, where);
  b.rel_tol = get_or<double>(n, "rel_tol", b.rel_tol, where);
  b.abs_tol = get_or<double>(n, "abs_tol", b.abs_tol, where);
  b.seed = get_or<std::uint64_t>(n, "seed", b.seed, where);
  b.random_seeds = get_or<std::size_t>(n, "random_seeds", b.random_seeds, where);
  b.grid_seeds = get_or<std::size_t>(n, "grid_seeds", b.grid_seeds, where);
  b.seed_radius = get_or<double>(n, "seed_radius", b.seed_radius, where);
  b.threads = get_or<unsigned>(n, "threads", b.threads, where);
  if (b.dimension_cap == 0) throw ValidationError("numeric.dimension_cap must be positive");
  if (!(b.rel_tol > 0.0) || !(b.abs_tol > 0.0))
    throw ValidationError("numeric tolerances must be positive");
  if (b.threads == 0) throw ValidationError("numeric.threads must be at least 1");
  return b;
}

}  // namespace

nlohmann::json parse_strict(const std::string& text) {
  std::vector<std::set<std::string>> seen;
  auto cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
        seen.emplace_back();
        break;
      case json::parse_event_t::object_end:
        seen.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!seen.back().insert(key).second) throw ValidationError("duplicate key '" + key + "'");
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
}

void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(where + ": unknown key '" + key + "'");
}

HamiltonianSpec parse_terms(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + " must be an array of terms");
  HamiltonianSpec spec;
  for (std::size_t i = 0; i < j.size(); ++i)
    spec.terms.push_back(parse_term(j[i], where + "[" + std::to_string(i) + "]"));
  return spec;
}

RunConfig parse_config(const std::string& text) {
  const json root = parse_strict(text);
  if (!root.is_object()) throw ValidationError("config must be a JSON object");
  require_keys(root, {"model", "task", "numeric", "output"}, "config");
  RunConfig cfg;
  cfg.source = text;
  cfg.model = parse_model(root.value("model", json()));

  if (!root.contains("task") || !root.at("task").is_object())
    throw ValidationError("task block missing");
  const auto& task = root.at("task");
  if (task.size() != 1) throw ValidationError("task block must name exactly one task");
  cfg.task = task.begin().key();
  if (std::find(kTasks.begin(), kTasks.end(), cfg.task) == kTasks.end())
    throw ValidationError("unknown task '" + cfg.task + "'");
  cfg.task_params = task.begin().value();
  if (cfg.task_params.is_null()) cfg.task_params = json::object();
  if (!cfg.task_params.is_object()) throw ValidationError("task parameters must be an object");

  cfg.numeric = parse_numeric(root.value("numeric", json()));
  if (root.contains("output")) {
    const auto& o = root.at("output");
    if (!o.is_object()) throw ValidationError("output must be an object");
    require_keys(o, {"prefix"}, "output");
    cfg.output.prefix = get_or<std::string>(o, "prefix", "", "output");
    if (cfg.output.prefix.find_first_of("/\\") != std::string::npos)
      throw ValidationError("output.prefix must not contain path separators");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

std::vector<double> read_grid(const nlohmann::json& j, const std::string& where) {
  std::vector<double> g;
  if (j.is_array()) {
    try {
      g = j.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ValidationError(where + ": grid entries must be numbers");
    }
  } else if (j.is_object()) {
    require_keys(j, {"min", "max", "count"}, where);
    const double lo = get_as<double>(j, "min", where), hi = get_as<double>(j, "max", where);
    const int count = get_as<int>(j, "count", where);
    if (count < 2) throw ValidationError(where + ".count must be at least 2");
    for (int i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * i / (count - 1));
  } else {
    throw ValidationError(where + ": grid must be an array or {min, max, count}");
  }
  if (g.empty()) throw ValidationError(where + ": empty grid");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) throw ValidationError(where + ": grid must be strictly increasing");
  return g;
}

}  // namespace spintrace::cli
