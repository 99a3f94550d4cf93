#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "run.hpp"
#include "spintrace/quantum.hpp"

using namespace spintrace;
using namespace spintrace::cli;
namespace fs = std::filesystem;

namespace {

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spintrace_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run_config(const std::string& text, const std::string& out = "out",
                 std::optional<std::uint64_t> seed = std::nullopt) {
    const auto path = dir_ / "config.json";
    std::ofstream(path) << text;
    RunOptions o;
    o.config = path;
    o.out_dir = dir_ / out;
    o.seed = seed;
    std::ostringstream err;
    const int code = run(o, err);
    last_error_ = err.str();
    return code;
  }

  std::string read(const std::string& rel) const {
    std::ifstream in(dir_ / rel, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  bool has_outputs(const std::string& out = "out") const {
    return fs::exists(dir_ / out) && !fs::is_empty(dir_ / out);
  }

  fs::path dir_;
  std::string last_error_;
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const char* kRotation = R"({
  "model": {"n_sites": 1, "twice_j": 2, "hbar": 0.5, "hamiltonian": ["1.3 J3@1"]},
  "task": {"spectrum": {}}
})";

const char* kTopOrbits = R"({
  "model": {"n_sites": 1, "twice_j": 20, "j_class": 1.0,
            "hamiltonian": ["0.5 J3@1 J3@1", {"coefficient": 1.5, "factors": ["J1@1"]}]},
  "task": {"orbits": {"energy": 0.2, "t_min": 1.0, "t_max": 13.0}},
  "numeric": {"random_seeds": 4}
})";

}  // namespace

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config(R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hamiltonian": []},
                                "task": {"spectrum": {}, "orbits": {}}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hbar": 2},
                                "task": {"spectrum": {}}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1,
                                "hamiltonian": ["1 J3@2"]}, "task": {"spectrum": {}}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "colour": 3},
                                "task": {"spectrum": {}}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1}})"),
               ValidationError);
  EXPECT_THROW(parse_config("{ not json"), ValidationError);
  EXPECT_THROW(read_grid(nlohmann::json::parse("[0.0, 1.0, 1.0]"), "g"), ValidationError);
  EXPECT_EQ(read_grid(nlohmann::json::parse(R"({"min": 0, "max": 1, "count": 5})"), "g").size(), 5u);
}

TEST(Config, TermForms) {
  const auto cfg = parse_config(kTopOrbits);
  ASSERT_EQ(cfg.model.hamiltonian.terms.size(), 2u);
  EXPECT_EQ(cfg.model.hamiltonian.terms[0].factors.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.model.hamiltonian.terms[1].coefficient, 1.5);
  EXPECT_NEAR(cfg.model.ctx.j_class(), 1.0, 1e-15);
  EXPECT_EQ(cfg.task, "orbits");
}

TEST_F(CliRun, SpectrumOfLinearHamiltonian) {
  ASSERT_EQ(run_config(kRotation), kExitOk) << last_error_;
  const auto rows = csv_rows(read("out/spectrum.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"index", "energy"}));
  const double hw = 0.5 * 1.3;
  EXPECT_NEAR(std::stod(rows[1][1]), -hw, 1e-14);
  EXPECT_NEAR(std::stod(rows[2][1]), 0.0, 1e-14);
  EXPECT_NEAR(std::stod(rows[3][1]), hw, 1e-14);
}

TEST_F(CliRun, ManifestCarriesConfigHash) {
  ASSERT_EQ(run_config(kRotation, "out", 77), kExitOk);
  const auto m = nlohmann::json::parse(read("out/manifest.json"));
  EXPECT_EQ(m.at("config_hash"), "fnv1a64:" + fnv1a_hex(kRotation));
  EXPECT_EQ(m.at("seed"), 77);
  EXPECT_EQ(m.at("task"), "spectrum");
  EXPECT_EQ(m.at("outputs")[0].at("hash"), "fnv1a64:" + fnv1a_hex(read("out/spectrum.csv")));
  EXPECT_TRUE(m.at("timings").contains("total_seconds"));
  EXPECT_TRUE(m.at("versions").contains("eigen"));
}

TEST_F(CliRun, TwoTaskBlocksExitTwoWithoutOutputs) {
  const char* dup = R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hamiltonian": []},
                        "task": {"spectrum": {}}, "task": {"evolve": {}}})";
  EXPECT_EQ(run_config(dup), kExitValidation);
  EXPECT_FALSE(has_outputs());
  const char* both = R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hamiltonian": []},
                         "task": {"spectrum": {}, "evolve": {}}})";
  EXPECT_EQ(run_config(both), kExitValidation);
  EXPECT_FALSE(has_outputs());
}

TEST_F(CliRun, CapExceededExitThreeWithoutOutputs) {
  const char* big = R"({"model": {"n_sites": 3, "twice_j": 30, "hbar": 0.1, "hamiltonian": ["1 J3@1"]},
                        "task": {"spectrum": {}}, "numeric": {"dimension_cap": 1000}})";
  EXPECT_EQ(run_config(big), kExitNumeric);
  EXPECT_FALSE(has_outputs());
}

TEST_F(CliRun, TaskParameterErrorsExitTwo) {
  const char* bad = R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hamiltonian": ["1 J3@1"]},
                        "task": {"spectrum": {"points": 3}}})";
  EXPECT_EQ(run_config(bad), kExitValidation);
  const char* grid = R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hamiltonian": ["1 J3@1"]},
                         "task": {"trace": {"times": [1.0, 0.5], "with_orbits": false}}})";
  EXPECT_EQ(run_config(grid), kExitValidation);
  const char* kick = R"({"model": {"n_sites": 1, "twice_j": 2, "hbar": 1, "hamiltonian": ["1 J3@1"]},
                         "task": {"floquet": {}}})";
  EXPECT_EQ(run_config(kick), kExitValidation);
  EXPECT_FALSE(has_outputs());
}

TEST_F(CliRun, VerifyIdentitiesReport) {
  const char* cfg = R"({"model": {"n_sites": 1, "twice_j": 1, "hbar": 1, "hamiltonian": []},
                        "task": {"verify-identities": {"samples": 50}}})";
  ASSERT_EQ(run_config(cfg), kExitOk) << last_error_;
  const auto r = nlohmann::json::parse(read("out/verify_identities.json"));
  ASSERT_EQ(r.at("sizes").size(), 10u);
  for (const auto& s : r.at("sizes")) EXPECT_LT(s.at("max_three_dets").get<double>(), 1e-9);
  EXPECT_LT(r.at("max_three_dets").get<double>(), 1e-9);
  EXPECT_LT(r.at("max_invariance").get<double>(), 1e-9);
}

TEST_F(CliRun, DensityRoundTripsBitExactly) {
  const char* cfg = R"({"model": {"n_sites": 1, "twice_j": 12, "hbar": 0.2,
                                  "hamiltonian": ["0.7 J1@1"],
                                  "kick": {"terms": ["0.9 J3@1 J3@1"], "period": 1.0}},
                        "task": {"floquet": {"orbits": false, "density_points": 64}}})";
  ASSERT_EQ(run_config(cfg), kExitOk) << last_error_;
  const auto rows = csv_rows(read("out/floquet_density.csv"));
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"theta", "value"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double v = std::strtod(rows[i][1].c_str(), nullptr);
    EXPECT_EQ(fmt(v), rows[i][1]);
  }
  EXPECT_TRUE(fs::exists(dir_ / "out/floquet_density_alt.csv"));
}

TEST_F(CliRun, OrbitTableSortedAndDeterministic) {
  ASSERT_EQ(run_config(kTopOrbits, "a"), kExitOk) << last_error_;
  ASSERT_EQ(run_config(kTopOrbits, "b"), kExitOk) << last_error_;
  const std::string a = read("a/orbits.csv");
  EXPECT_EQ(a, read("b/orbits.csv"));
  const auto rows = csv_rows(a);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"T", "T_P", "r", "E", "S", "k", "G"}));
  ASSERT_GE(rows.size(), 3u);
  for (std::size_t i = 2; i < rows.size(); ++i)
    EXPECT_LE(std::stod(rows[i - 1][0]), std::stod(rows[i][0]));
}
