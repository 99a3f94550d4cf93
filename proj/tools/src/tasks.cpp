#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "run.hpp"
#include "spintrace/floquet.hpp"
#include "spintrace/orbits.hpp"
#include "spintrace/quantum.hpp"
#include "spintrace/semiclassics.hpp"
#include "spintrace/sk_verify.hpp"
#include "spintrace/symplectic.hpp"

namespace spintrace::cli {

namespace {

using nlohmann::json;

class Params {
 public:
  Params(const json& j, std::string where, const std::vector<std::string>& allowed)
      : j_(j), where_(std::move(where)) {
    require_keys(j_, allowed, where_);
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] const json& raw(const std::string& key) const {
    if (!has(key)) throw ValidationError(where_ + "." + key + " is required");
    return j_.at(key);
  }

  template <class T>
  [[nodiscard]] T get(const std::string& key) const {
    try {
      return raw(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  [[nodiscard]] T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  [[nodiscard]] double positive(const std::string& key, double fallback) const {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0)) throw ValidationError(where_ + "." + key + " must be positive");
    return v;
  }

  [[nodiscard]] std::vector<double> grid(const std::string& key) const {
    return read_grid(raw(key), where_ + "." + key);
  }

  [[nodiscard]] const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
};

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  Csv& cell(double x) { return put(fmt(x)); }
  Csv& cell(long long x) { return put(std::to_string(x)); }
  Csv& cell(int x) { return put(std::to_string(x)); }
  Csv& cell(std::size_t x) { return put(std::to_string(x)); }
  Csv& end() {
    out_ << '\n';
    first_ = true;
    return *this;
  }

  [[nodiscard]] std::string str() const { return out_.str(); }

 private:
  Csv& put(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }

  std::ostringstream out_;
  bool first_ = true;
};

EvolveOptions integration(const NumericBlock& n) {
  EvolveOptions o;
  o.rel_tol = n.rel_tol;
  o.abs_tol = n.abs_tol;
  return o;
}

OrbitSearchConfig orbit_config(const RunConfig& cfg, const Params& p) {
  OrbitSearchConfig c;
  c.random_seeds = cfg.numeric.random_seeds;
  c.rng_seed = cfg.numeric.seed;
  c.threads = cfg.numeric.threads;
  c.integration = integration(cfg.numeric);
  c.shooting_segments = p.get<int>("shooting_segments", c.shooting_segments);
  c.max_repetitions = p.get<int>("max_repetitions", c.max_repetitions);
  c.continuation_step = p.get<double>("continuation_step", c.continuation_step);
  c.return_radius = p.get<double>("return_radius", c.return_radius);
  c.validate();
  return c;
}

const std::vector<std::string> kSearchKeys{"shooting_segments", "max_repetitions",
                                           "continuation_step", "return_radius"};

std::vector<std::string> with_search_keys(std::vector<std::string> keys) {
  keys.insert(keys.end(), kSearchKeys.begin(), kSearchKeys.end());
  return keys;
}

void require_quantum(const RunConfig& cfg) { cfg.model.ctx.require_dim_within(cfg.numeric.dimension_cap); }

void no_kick(const RunConfig& cfg) {
  if (cfg.model.kick) throw ValidationError("task " + cfg.task + " does not use a kick block");
}

TaskResult task_spectrum(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.spectrum", {});
  no_kick(cfg);
  require_quantum(cfg);
  const auto levels = exact_spectrum(cfg.model.hamiltonian, cfg.model.ctx, cfg.numeric.dimension_cap);
  Csv csv({"index", "energy"});
  for (std::size_t i = 0; i < levels.size(); ++i) csv.cell(i).cell(levels[i]).end();
  TaskResult r;
  r.files.push_back({"spectrum.csv", csv.str()});
  r.summary["levels"] = levels.size();
  return r;
}

TaskResult task_evolve(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.evolve", {"theta", "phi", "duration", "samples"});
  no_kick(cfg);
  const auto theta = p.get<std::vector<double>>("theta");
  const auto phi = p.get<std::vector<double>>("phi");
  const int n = cfg.model.ctx.n_sites;
  if (static_cast<int>(theta.size()) != n || static_cast<int>(phi.size()) != n)
    throw ValidationError("task.evolve: theta and phi need one entry per site");
  const double duration = p.get<double>("duration");
  if (!std::isfinite(duration)) throw ValidationError("task.evolve.duration must be finite");
  const int samples = p.get<int>("samples", 100);
  if (samples < 1) throw ValidationError("task.evolve.samples must be at least 1");

  const ClassicalHamiltonian h(cfg.model.hamiltonian, cfg.model.ctx);
  const auto opts = integration(cfg.numeric);
  std::vector<std::string> header{"t", "energy"};
  for (int i = 1; i <= n; ++i)
    for (int a = 1; a <= 3; ++a)
      header.push_back("n" + std::to_string(a) + "_" + std::to_string(i));
  Csv csv(header);
  ClassicalState s = ClassicalState::from_angles(theta, phi);
  const double e0 = h.value(s).real();
  double drift = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = duration * k / samples;
    if (k > 0) s = evolve(h, s, duration / samples, opts).final_state.in_preferred_charts();
    const double e = h.value(s).real();
    drift = std::max(drift, std::abs(e - e0));
    csv.cell(t).cell(e);
    for (const auto& v : s.unit_vectors()) csv.cell(v(0)).cell(v(1)).cell(v(2));
    csv.end();
  }
  TaskResult r;
  r.files.push_back({"trajectory.csv", csv.str()});
  r.summary["energy_drift"] = drift;
  return r;
}

std::vector<std::string> lambda_columns(int count) {
  std::vector<std::string> cols;
  for (int i = 1; i <= count; ++i) {
    cols.push_back("Lambda" + std::to_string(i) + "_re");
    cols.push_back("Lambda" + std::to_string(i) + "_im");
  }
  return cols;
}

TaskResult task_orbits(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.orbits", with_search_keys({"energy", "t_min", "t_max", "period"}));
  no_kick(cfg);
  SearchWindow w;
  if (p.has("period")) {
    if (p.has("energy") || p.has("t_min") || p.has("t_max"))
      throw ValidationError("task.orbits: period mode takes no energy window");
    w = SearchWindow::at_period(p.positive("period", 1.0));
  } else {
    w = SearchWindow::at_energy(p.get<double>("energy"), p.get<double>("t_min"),
                                p.get<double>("t_max"));
    if (!(w.t_min > 0.0) || !(w.t_max > w.t_min))
      throw ValidationError("task.orbits: need 0 < t_min < t_max");
  }
  const auto search = orbit_config(cfg, p);
  const ClassicalHamiltonian h(cfg.model.hamiltonian, cfg.model.ctx);
  auto orbits = find_periodic_orbits(h, w, search);
  std::stable_sort(orbits.begin(), orbits.end(),
                   [](const auto& a, const auto& b) { return a.period < b.period; });

  const int pairs = cfg.model.ctx.n_sites - 1;
  std::vector<std::string> header{"T", "T_P", "r", "E", "S", "k"};
  for (auto& c : lambda_columns(pairs)) header.push_back(c);
  header.push_back("G");
  Csv csv(header);
  int excluded = 0;
  for (const auto& o : orbits) {
    csv.cell(o.period).cell(o.primitive_period).cell(o.repetitions).cell(o.energy)
        .cell(o.action).cell(o.k);
    for (int i = 0; i < pairs; ++i) {
      if (i < static_cast<int>(o.reduced.pairs.size())) {
        const cplx l = o.reduced.pairs[i].lambda;
        csv.cell(l.real()).cell(l.imag());
      } else {
        csv.cell(std::nan("")).cell(std::nan(""));
      }
    }
    csv.cell(o.maslov_phase).end();
    if (!exclusion_reason(o).empty()) ++excluded;
  }
  TaskResult r;
  r.files.push_back({"orbits.csv", csv.str()});
  r.summary["orbits"] = orbits.size();
  r.summary["excluded_from_sums"] = excluded;
  return r;
}

TaskResult task_trace(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.trace",
           with_search_keys({"times", "with_orbits", "e_center", "window", "sigma_smooth"}));
  no_kick(cfg);
  const auto times = p.grid("times");
  const bool with_orbits = p.get<bool>("with_orbits", true);
  const double window = p.positive("window", 1e300);
  const double sigma = p.get<double>("sigma_smooth", 0.0);
  if (sigma < 0.0) throw ValidationError("task.trace.sigma_smooth must be non-negative");
  const auto search = orbit_config(cfg, p);
  require_quantum(cfg);
  const ExactSystem ex(cfg.model.hamiltonian, cfg.model.ctx, cfg.numeric.dimension_cap);
  const ClassicalHamiltonian h(cfg.model.hamiltonian, cfg.model.ctx);
  const double center = p.get<double>("e_center", 0.0);
  const auto rows = time_domain_compare(ex, h, times, search, with_orbits, center, window, sigma);
  Csv csv({"t", "exact_re", "exact_im", "semiclassical_re", "semiclassical_im", "orbits",
           "fourier"});
  for (const auto& row : rows)
    csv.cell(row.t).cell(row.exact.real()).cell(row.exact.imag()).cell(row.semiclassical.real())
        .cell(row.semiclassical.imag()).cell(row.orbits).cell(row.fourier).end();
  TaskResult r;
  r.files.push_back({"trace.csv", csv.str()});
  r.summary["times"] = rows.size();
  return r;
}

std::string two_column(const std::vector<double>& x, const std::vector<double>& y,
                       const std::string& xname) {
  Csv csv({xname, "value"});
  for (std::size_t i = 0; i < x.size(); ++i) csv.cell(x[i]).cell(y[i]).end();
  return csv.str();
}

TaskResult task_density(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.density",
           with_search_keys({"grid", "width", "t_min", "t_max", "start_energy", "repetitions"}));
  no_kick(cfg);
  const auto grid = p.grid("grid");
  const double width = p.positive("width", 0.0);
  const double t_min = p.positive("t_min", 0.0), t_max = p.positive("t_max", 0.0);
  if (!(t_max > t_min)) throw ValidationError("task.density: need t_min < t_max");
  const int reps = p.get<int>("repetitions", 8);
  if (reps < 1) throw ValidationError("task.density.repetitions must be at least 1");
  const double e_start = p.get<double>("start_energy", grid[grid.size() / 2]);
  const auto search = orbit_config(cfg, p);
  require_quantum(cfg);

  const ExactSystem ex(cfg.model.hamiltonian, cfg.model.ctx, cfg.numeric.dimension_cap);
  const auto exact = ex.density(grid, width);
  const ClassicalHamiltonian h(cfg.model.hamiltonian, cfg.model.ctx);
  const auto orbits = find_periodic_orbits(h, SearchWindow::at_energy(e_start, t_min, t_max), search);
  std::vector<OrbitFamily> families;
  json notes = json::array();
  for (const auto& o : orbits) {
    if (o.repetitions != 1 || !exclusion_reason(o).empty()) continue;
    families.push_back(continue_family(h, o, grid, search));
    for (const auto& n : families.back().notes) notes.push_back(n);
  }
  const auto osc = density_osc(families, grid, cfg.model.ctx.hbar, width, reps);
  TaskResult r;
  r.files.push_back({"density_exact.csv", two_column(grid, exact.value, "x")});
  r.files.push_back({"density_osc.csv", two_column(grid, osc.value, "x")});
  r.summary["families"] = families.size();
  r.summary["continuation_notes"] = notes;
  return r;
}

TaskResult task_verify_sk(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.verify-sk", {"twice_j", "points", "j_class", "recursion_axes"});
  no_kick(cfg);
  const auto tj = p.get<std::vector<int>>("twice_j");
  const int points = p.get<int>("points", 20);
  if (points < 1) throw ValidationError("task.verify-sk.points must be at least 1");
  const double j_class = p.positive("j_class", 1.0);
  const auto axes = p.get<std::vector<int>>("recursion_axes", {});
  for (int a : axes)
    if (a < 1 || a > 3) throw ValidationError("task.verify-sk.recursion_axes entries must be 1..3");
  if (!axes.empty() && cfg.model.ctx.n_sites != 1)
    throw ValidationError("task.verify-sk: the recursion check is single-site");

  std::mt19937_64 rng(cfg.numeric.seed);
  const int n = cfg.model.ctx.n_sites;
  const auto pts = near_real_samples(n, points, rng);
  const auto rep = verify_hprime(cfg.model.hamiltonian, n, tj, pts, j_class);
  json report;
  report["slope"] = rep.slope;
  report["exact"] = rep.exact;
  report["levels"] = json::array();
  for (const auto& l : rep.levels)
    report["levels"].push_back({{"twice_j", l.twice_j}, {"hbar", l.hbar}, {"max_residual", l.max_residual}});
  if (!axes.empty()) {
    const auto rpts = interior_samples(1, points, rng);
    report["recursion"] = json::array();
    for (int a : axes) {
      const auto rr = verify_recursion(cfg.model.hamiltonian, cfg.model.ctx, a, rpts);
      report["recursion"].push_back({{"axis", a}, {"max_residual", rr.max_residual}});
    }
  }
  TaskResult r;
  r.files.push_back({"verify_sk.json", report.dump(2) + "\n"});
  r.summary["slope"] = rep.slope;
  r.summary["exact"] = rep.exact;
  return r;
}

TaskResult task_verify_identities(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.verify-identities", {"sizes", "samples", "scale"});
  const auto sizes = p.get<std::vector<int>>("sizes", {2, 4, 6, 8, 10, 12, 14, 16, 18, 20});
  for (int s : sizes)
    if (s < 2 || s % 2 != 0) throw ValidationError("task.verify-identities.sizes must be even and >= 2");
  const int samples = p.get<int>("samples", 1000);
  if (samples < 1) throw ValidationError("task.verify-identities.samples must be at least 1");
  const double scale = p.positive("scale", 0.6);

  std::mt19937_64 rng(cfg.numeric.seed);
  json report;
  report["sizes"] = json::array();
  double worst_dets = 0.0, worst_inv = 0.0;
  for (int s : sizes) {
    const int n = s / 2;
    double dets = 0.0, inv = 0.0;
    for (int k = 0; k < samples; ++k) {
      const CMatrix m = random_symplectic(n, rng, scale / std::sqrt(n));
      const CMatrix w = random_symplectic(n, rng, scale / std::sqrt(n));
      dets = std::max(dets, three_dets_residual(m));
      inv = std::max(inv, symplectic_invariance_residual(m, w));
    }
    report["sizes"].push_back({{"size", s}, {"samples", samples}, {"max_three_dets", dets},
                               {"max_invariance", inv}});
    worst_dets = std::max(worst_dets, dets);
    worst_inv = std::max(worst_inv, inv);
  }
  report["max_three_dets"] = worst_dets;
  report["max_invariance"] = worst_inv;
  TaskResult r;
  r.files.push_back({"verify_identities.json", report.dump(2) + "\n"});
  r.summary["max_three_dets"] = worst_dets;
  r.summary["max_invariance"] = worst_inv;
  return r;
}

TaskResult task_floquet(const RunConfig& cfg) {
  Params p(cfg.task_params, "task.floquet",
           {"n_max", "orbits", "density_points", "width", "unit_threshold"});
  if (!cfg.model.kick) throw ValidationError("task floquet needs a model.kick block");
  const int n_max = p.get<int>("n_max", 3);
  if (n_max < 1) throw ValidationError("task.floquet.n_max must be at least 1");
  const bool with_orbits = p.get<bool>("orbits", true);
  const int points = p.get<int>("density_points", 512);
  if (points < 2) throw ValidationError("task.floquet.density_points must be at least 2");
  const double width = p.positive("width", 0.05);
  DrivenModel model{cfg.model.hamiltonian, cfg.model.kick->terms, cfg.model.kick->period};
  model.validate(cfg.model.ctx);
  MapSearchConfig search;
  search.random_seeds = cfg.numeric.random_seeds;
  search.grid_seeds = cfg.numeric.grid_seeds;
  search.seed_radius = cfg.numeric.seed_radius;
  search.rng_seed = cfg.numeric.seed;
  search.threads = cfg.numeric.threads;
  search.integration = integration(cfg.numeric);
  search.unit_threshold = p.get<double>("unit_threshold", search.unit_threshold);
  search.validate();
  require_quantum(cfg);

  const auto& ctx = cfg.model.ctx;
  const CMatrix f = build_floquet(model, ctx, cfg.numeric.dimension_cap);
  const auto spec = floquet_spectrum(f);
  TaskResult r;
  {
    Csv csv({"index", "theta"});
    for (std::size_t i = 0; i < spec.phases.size(); ++i) csv.cell(i).cell(spec.phases[i]).end();
    r.files.push_back({"floquet_phases.csv", csv.str()});
  }
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = -kPi + 2 * kPi * i / points;
  const auto d = eigenphase_density(spec.phases, grid, width, ctx);
  r.files.push_back({"floquet_density.csv", two_column(grid, d.value, "theta")});
  r.files.push_back({"floquet_density_alt.csv", two_column(grid, d.value_alt_norm, "theta")});

  Csv traces({"n", "exact_re", "exact_im", "semiclassical_re", "semiclassical_im", "used",
              "excluded"});
  const int dim = 2 * ctx.n_sites;
  std::vector<std::string> oh{"n", "n_P", "r", "S", "det_M_minus_1"};
  for (auto& c : lambda_columns(dim)) oh.push_back(c);
  oh.push_back("G");
  Csv orbit_table(oh);
  json warnings = json::array();
  const StroboscopicMap map(model, ctx);
  for (int n = 1; n <= n_max; ++n) {
    const cplx exact = spec.trace_power(n);
    MapTraceSum sum;
    if (with_orbits) {
      const auto orbits = find_map_orbits(map, n, search);
      sum = trace_F_semiclassical(orbits, n, ctx.hbar);
      for (const auto& o : orbits) {
        orbit_table.cell(o.n).cell(o.primitive_n).cell(o.repetitions).cell(o.action)
            .cell(o.det_minus_one);
        for (int i = 0; i < dim; ++i) {
          const cplx l = i < static_cast<int>(o.eigenvalues.size()) ? o.eigenvalues[i]
                                                                     : cplx(std::nan(""), 0.0);
          orbit_table.cell(l.real()).cell(l.imag());
        }
        orbit_table.cell(o.maslov_phase).end();
      }
      for (const auto& w : sum.warnings) warnings.push_back(w);
    }
    traces.cell(n).cell(exact.real()).cell(exact.imag());
    if (with_orbits)
      traces.cell(sum.value.real()).cell(sum.value.imag());
    else
      traces.cell(std::nan("")).cell(std::nan(""));
    traces.cell(sum.used).cell(sum.excluded).end();
  }
  r.files.push_back({"floquet_traces.csv", traces.str()});
  if (with_orbits) r.files.push_back({"floquet_orbits.csv", orbit_table.str()});
  r.summary["unitarity_residual"] = unitarity_residual(f);
  r.summary["warnings"] = warnings;
  return r;
}

}  // namespace

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

TaskResult execute(const RunConfig& cfg) {
  if (cfg.task == "spectrum") return task_spectrum(cfg);
  if (cfg.task == "evolve") return task_evolve(cfg);
  if (cfg.task == "orbits") return task_orbits(cfg);
  if (cfg.task == "trace") return task_trace(cfg);
  if (cfg.task == "density") return task_density(cfg);
  if (cfg.task == "verify-sk") return task_verify_sk(cfg);
  if (cfg.task == "verify-identities") return task_verify_identities(cfg);
  if (cfg.task == "floquet") return task_floquet(cfg);
  throw ValidationError("unknown task '" + cfg.task + "'");
}

}  // namespace spintrace::cli
