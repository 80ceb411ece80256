#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "urnflow/commands.hpp"
#include "urnflow/config.hpp"
#include "urnflow/csv.hpp"
#include "urnflow/error.hpp"
#include "urnflow/svg.hpp"

using namespace urnflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> data_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("urnflow_unit_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kHypercycle = R"({
  "model": {"kind": "replicator", "preset": "hypercycle", "k": 3, "b": 1.0, "d": 0.5, "nu": 4.0},
  "run": {"command": "simulate", "seed": 9, "simulate": {"z0": [30, 30, 30], "max_steps": 1234}},
  "output": {"formats": ["csv", "svg"]}
})";

}  // namespace

TEST_CASE("config round-trips through its canonical form") {
  auto cfg = experiment::parse_config(kHypercycle);
  const auto text = experiment::serialize_config(cfg);
  auto again = experiment::parse_config(text);
  CHECK(experiment::serialize_config(again) == text);
  CHECK(again.run.seed == 9);
  CHECK(again.run.simulate.max_steps == 1234);
}

TEST_CASE("config errors name the offending key") {
  try {
    experiment::parse_config(R"({"model": {"kind": "replicator", "preset": "hypercycle", "k": 3,
      "b": 1, "d": 1, "nu": 1, "colour": 2}})");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
  CHECK_THROWS_AS(experiment::parse_config("{\"model\": "), Error);
  CHECK_THROWS_AS(experiment::parse_config(R"({"model": {"kind": "replicator", "preset": "hypercycle", "k": 3,
      "b": 1, "d": 1, "nu": 1}, "run": {"simulate": {"z0": [1, 2]}}})"),
                  Error);
}

TEST_CASE("simulate writes a thinned path with a strictly increasing clock") {
  auto cfg = experiment::parse_config(kHypercycle);
  cfg.output.directory = scratch("simulate").string();
  cfg.output.thin = 100;
  experiment::CommandContext ctx;
  auto res = experiment::cmd_simulate(cfg, ctx);
  const auto text = slurp(fs::path(cfg.output.directory) / "path.csv");
  auto rows = data_rows(text);
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] == "n,tau,z_1,z_2,z_3,x_1,x_2,x_3,pop");
  CHECK(rows.size() - 1 == (1234 + 99) / 100 + 1);
  double prev = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto comma = rows[i].find(',');
    const double tau = std::stod(rows[i].substr(comma + 1));
    CHECK(tau > prev);
    prev = tau;
  }
  const auto svg = slurp(fs::path(cfg.output.directory) / "path.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("simulate from the empty urn warns and writes one row") {
  auto cfg = experiment::parse_config(kHypercycle);
  cfg.run.simulate.z0 = {0, 0, 0};
  cfg.output.directory = scratch("empty").string();
  cfg.output.svg = false;
  std::vector<std::string> said;
  experiment::CommandContext ctx{1, [&](const std::string& s) { said.push_back(s); }};
  experiment::cmd_simulate(cfg, ctx);
  CHECK(data_rows(slurp(fs::path(cfg.output.directory) / "path.csv")).size() == 2);
  bool warned = false;
  for (const auto& s : said) warned = warned || s.find("warning") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("ode on the k=3 hypercycle ends at the barycentre") {
  auto cfg = experiment::parse_config(R"({
    "model": {"kind": "replicator", "preset": "hypercycle", "k": 3, "b": 1.0, "d": 2.5, "nu": 4.0},
    "run": {"command": "ode", "ode": {"x0": [0.6, 0.3, 0.1], "T": 200}},
    "output": {"formats": ["csv"], "thin": 10}})");
  cfg.output.directory = scratch("ode").string();
  experiment::CommandContext ctx;
  experiment::cmd_ode(cfg, ctx);
  auto rows = data_rows(slurp(fs::path(cfg.output.directory) / "flow.csv"));
  CHECK(rows.front() == "t,x_1,x_2,x_3,f");
  std::istringstream last(rows.back());
  std::string cell;
  std::getline(last, cell, ',');
  CHECK(std::stod(cell) == doctest::Approx(200.0));
  for (int i = 0; i < 3; ++i) {
    std::getline(last, cell, ',');
    CHECK(std::abs(std::stod(cell) - 1.0 / 3.0) < 1e-6);
  }
}

TEST_CASE("ode analysis of the k=5 hypercycle") {
  auto cfg = experiment::parse_config(R"({
    "model": {"kind": "replicator", "preset": "hypercycle", "k": 5, "b": 1.0, "d": 2.5, "nu": 4.0},
    "run": {"command": "ode", "ode": {"T": 10, "analysis": true}},
    "output": {"formats": ["csv"]}})");
  cfg.output.directory = scratch("analysis").string();
  experiment::CommandContext ctx;
  experiment::cmd_ode(cfg, ctx);
  auto rows = data_rows(slurp(fs::path(cfg.output.directory) / "analysis.csv"));
  std::size_t equilibria = 0;
  bool interior = false;
  for (const auto& r : rows) {
    if (r.rfind("equilibrium,", 0) == 0) ++equilibria;
    if (r.rfind("interior,", 0) == 0) {
      interior = true;
      const double v = std::stod(r.substr(r.rfind(',') + 1));
      CHECK(v == doctest::Approx(1.0 / 75.0));
    }
  }
  CHECK(equilibria == 5);
  CHECK(interior);
}

TEST_CASE("ode on the oscillating fixture writes the period") {
  auto cfg = experiment::parse_config(R"({
    "model": {"kind": "selection_mutation", "preset": "cyclic", "f": 1.0, "s": 2.835,
              "mu1": 0.5, "mu2": 0.1, "nu": 1.0, "d": 0.5},
    "run": {"command": "ode", "ode": {"x0": [0.5, 0.3, 0.2], "T": 50, "orbit_t_max": 2000}},
    "output": {"formats": ["csv"]}})");
  cfg.output.directory = scratch("orbit").string();
  experiment::CommandContext ctx;
  experiment::cmd_ode(cfg, ctx);
  const auto text = slurp(fs::path(cfg.output.directory) / "orbit.csv");
  CHECK(text.find("# period=") != std::string::npos);
}

TEST_CASE("ensemble of the pure death control") {
  auto cfg = experiment::parse_config(R"({
    "model": {"kind": "custom", "k": 2, "rules": [{"move": [-1, 0], "factors": [0]},
                                                  {"move": [0, -1], "factors": [1]}]},
    "run": {"command": "ensemble", "ensemble": {"z0": [3, 3], "replicates": 10, "survival_threshold": 100,
                                                "max_steps": 1000}},
    "output": {"formats": ["csv"]}})");
  cfg.output.directory = scratch("ensemble").string();
  std::vector<std::string> said;
  experiment::CommandContext ctx{2, [&](const std::string& s) { said.push_back(s); }};
  experiment::cmd_ensemble(cfg, ctx);
  bool found = false;
  for (const auto& s : said) found = found || s.rfind("establishment 0.000 [0.000, ", 0) == 0;
  CHECK(found);
  CHECK(fs::exists(fs::path(cfg.output.directory) / "ensemble.csv"));
}

TEST_CASE("csv writer formats numbers round-trippably") {
  std::ostringstream os;
  io::CsvWriter w(os);
  w.header({"a", "b"});
  w.field(0.1).field(std::int64_t{-3}).end_row();
  CHECK(os.str() == "a,b\n0.1,-3\n");
  CHECK(io::indexed("x", 2) == std::vector<std::string>{"x_1", "x_2"});
}

TEST_CASE("svg escapes labels and caps point counts") {
  io::Panel p;
  p.title = "a < b & c";
  p.x_label = "t";
  for (int i = 0; i < 10000; ++i) p.x.push_back(i);
  io::Series s{"y", std::vector<double>(10000, 1.0)};
  p.series.push_back(s);
  const auto svg = io::render_svg(std::vector<io::Panel>{p});
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("a < b") == std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}
