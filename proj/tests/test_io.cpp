#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "pdp/io.hpp"
#include "pdp/rng.hpp"

using namespace pdp;

namespace {
std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("pdp_io_test_" + std::to_string(SplitMix64(std::random_device{}()).next() % 100000));
  std::filesystem::create_directories(dir);
  return dir;
}
}  // namespace

TEST_CASE("decimal formatting round-trips doubles bit-exactly") {
  SplitMix64 rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    double v;
    switch (trial % 4) {
      case 0: v = rng.uniform(-1e3, 1e3); break;
      case 1: v = rng.uniform(-1, 1) * 1e-12; break;
      case 2: v = rng.uniform(-1, 1) * 1e15; break;
      default: v = 1.0 / (1.0 + static_cast<double>(trial)); break;
    }
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(std::strtod(format_double(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("control csv round trip is bit exact") {
  const auto dir = temp_dir();
  const TimeGrid grid(12.0, 37);
  ControlTrajectory u(2, 37);
  SplitMix64 rng(55);
  for (int j = 0; j < 37; ++j) {
    u.values(0, j) = rng.uniform(-0.8, 0.8);
    u.values(1, j) = rng.uniform(-0.4, 0.4);
  }
  write_control_csv(dir / "u.csv", grid, u);
  const ControlCsv back = read_control_csv(dir / "u.csv");
  CHECK(back.N == 37);
  CHECK(back.t_f == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(back.u.m() == 2);
  CHECK((back.u.values - u.values).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed control files give line-numbered diagnostics") {
  const auto dir = temp_dir();
  {
    std::ofstream os(dir / "bad.csv");
    os << "t,u1\n0,0.5\n0.1,notanumber\n";
  }
  try {
    read_control_csv(dir / "bad.csv");
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  {
    std::ofstream os(dir / "cols.csv");
    os << "t,u1\n0,0.5,9\n";
  }
  CHECK_THROWS_AS(read_control_csv(dir / "cols.csv"), std::runtime_error);
  {
    std::ofstream os(dir / "grid.csv");
    os << "t,u1\n0,0.5\n0.1,0.5\n0.35,0.5\n";
  }
  CHECK_THROWS_AS(read_control_csv(dir / "grid.csv"), std::runtime_error);
  {
    std::ofstream os(dir / "hdr.csv");
    os << "x,u1\n0,0.5\n";
  }
  CHECK_THROWS_AS(read_control_csv(dir / "hdr.csv"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run config parsing rejects unknown keys and bad values") {
  const RunConfig ok = RunConfig::from_json_text(
      R"({"model":"double_integrator","N":100,"step_rule":2,"c0":1.0,"seed":7})");
  CHECK(ok.model == "double_integrator");
  CHECK(ok.N == 100);
  CHECK(ok.seed == 7);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"model":"x","notakey":1})"),
                  std::invalid_argument);

  RunConfig bad = ok;
  bad.eps = -1.0;
  CHECK_THROWS_AS(bad.make_pdp_config(), std::invalid_argument);
  bad = ok;
  bad.step_rule = 3;
  CHECK_THROWS_AS(bad.make_step_rule(), std::invalid_argument);
  bad = ok;
  bad.model = "nope";
  CHECK_THROWS_AS(bad.make_model(), std::invalid_argument);
}

TEST_CASE("step rule defaults depend on rule and model") {
  RunConfig cfg;
  cfg.model = "double_integrator";
  cfg.step_rule = 2;
  CHECK(cfg.make_step_rule().beta == 3.0);
  cfg.model = "free_flying_robot";
  CHECK(cfg.make_step_rule().beta == 2.0);
  cfg.step_rule = 1;
  CHECK(cfg.make_step_rule().beta == 1.0);
  CHECK(cfg.make_pdp_config().alpha == 0.4);
  cfg.model = "double_integrator";
  CHECK(cfg.make_pdp_config().alpha == 1.0);
}

TEST_CASE("config hash is stable and content sensitive") {
  RunConfig a, b;
  a.model = b.model = "double_integrator";
  CHECK(config_hash(a.canonical_json()) == config_hash(b.canonical_json()));
  b.seed = 99;
  CHECK(config_hash(a.canonical_json()) != config_hash(b.canonical_json()));
}

TEST_CASE("manifest accumulates entries") {
  const auto dir = temp_dir();
  manifest_add(dir, "u.csv", "abc123", 7);
  manifest_add(dir, "x.csv", "abc123", 7);
  manifest_add(dir, "u.csv", "def456", 8);  // replaces
  std::ifstream is(dir / "manifest.json");
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  CHECK(text.find("u.csv") != std::string::npos);
  CHECK(text.find("x.csv") != std::string::npos);
  CHECK(text.find("def456") != std::string::npos);
  CHECK(text.find("code_version") != std::string::npos);
  std::filesystem::remove_all(dir);
}
