#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "rflab/cli.hpp"
#include "rflab/io.hpp"

namespace fs = std::filesystem;
using namespace rflab;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rflab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("psi-check happy path writes outputs and a manifest") {
  const auto out = scratch("psi");
  CHECK(cli::run({"psi-check", "--d", "3", "--out", out.string(), "--norm-d", "3,4"}) == 0);
  const auto dir = out / "psi-check";
  CHECK(fs::exists(dir / "psi_properties.csv"));
  const auto manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["config"]["d"] == 3);
  for (const auto& o : manifest["outputs"])
    CHECK(o["sha256"].get<std::string>() == io::sha256_file(dir / o["file"].get<std::string>()));
  CHECK(manifest["outputs"].size() == 2);
}

TEST_CASE("usage errors exit with 1") {
  const auto out = scratch("usage");
  CHECK(cli::run({"psi-check", "--bogus", "1"}) == 1);
  CHECK(cli::run({"no-such-command"}) == 1);
  CHECK(cli::run({}) == 1);
  CHECK(cli::run({"psi-check", "--d", "three", "--out", out.string()}) == 1);
  CHECK(cli::run({"linear-residual", "--d", "5", "--r", "6", "--out", out.string()}) == 1);
}

TEST_CASE("config files: defaults, errors and precedence") {
  const auto out = scratch("config");
  io::write_file(out / "empty.json", "{}");
  auto cfg = cli::load_config(out / "empty.json", "psi-check");
  CHECK(cfg.get_int("d") == 3);

  io::write_file(out / "bad.json", "{\n  \"d\": 3,\n  \"grid\" 10\n}");
  try {
    cli::load_config(out / "bad.json", "psi-check");
    CHECK(false);
  } catch (const cli::ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(cli::run({"psi-check", "--config", (out / "bad.json").string(), "--out", out.string()}) == 1);

  io::write_file(out / "unknown.json", "{\"dd\": 3}");
  try {
    cli::load_config(out / "unknown.json", "psi-check");
    CHECK(false);
  } catch (const cli::ConfigError& e) {
    CHECK(std::string(e.what()).find("\"dd\"") != std::string::npos);
  }
  io::write_file(out / "typed.json", "{\"d\": 2.5}");
  CHECK_THROWS_AS(cli::load_config(out / "typed.json", "psi-check"), cli::ConfigError);

  io::write_file(out / "d3.json", "{\"d\": 3, \"norm_d\": [3]}");
  CHECK(cli::run({"psi-check", "--config", (out / "d3.json").string(), "--d", "5", "--out", out.string()}) == 0);
  const auto manifest = nlohmann::json::parse(io::read_file(out / "psi-check" / "manifest.json"));
  CHECK(manifest["config"]["d"] == 5);
  CHECK(manifest["config"]["norm_d"] == nlohmann::json::array({3}));
}

TEST_CASE("config json round trip") {
  auto cfg = cli::default_config("concentration");
  cfg.seed = 12;
  cfg.params["r"] = std::vector<std::int64_t>{8, 16};
  cfg.params["delta"] = 0.125;
  auto back = cli::default_config("concentration");
  cli::apply_json(back, cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.get_int_list("r") == std::vector<std::int64_t>{8, 16});
}

TEST_CASE("seed precedence: environment below file below flag") {
  ::setenv("RF_LAB_SEED", "77", 1);
  CHECK(cli::default_config("psi-check").seed == 77);
  const auto out = scratch("seed");
  io::write_file(out / "s.json", "{\"seed\": 5}");
  CHECK(cli::load_config(out / "s.json", "psi-check").seed == 5);
  ::setenv("RF_LAB_SEED", "x", 1);
  CHECK_THROWS_AS(cli::default_config("psi-check"), cli::ConfigError);
  ::unsetenv("RF_LAB_SEED");
  CHECK(cli::default_config("psi-check").seed == 0);
}

TEST_CASE("invariant violations exit with 2") {
  const auto out = scratch("violation");
  CHECK(cli::run({"exp-identity", "--order", "1", "--out", out.string()}) == 2);
  const auto manifest = nlohmann::json::parse(io::read_file(out / "exp-identity" / "manifest.json"));
  CHECK(manifest["status"] == "invariant_violation");
  CHECK(cli::run({"represent-poly", "--tol", "0", "--n-polys", "2", "--out", out.string()}) == 2);
}

TEST_CASE("fixed seeds give byte-identical csv files") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::vector<std::string> common{"concentration", "--d", "2", "--k", "2", "--r", "64,256", "--trials", "3",
                                        "--probes", "100", "--seed", "7"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a.string(), "--jobs", "1"});
  args_b.insert(args_b.end(), {"--out", b.string(), "--jobs", "3"});
  CHECK(cli::run(args_a) == 0);
  CHECK(cli::run(args_b) == 0);
  for (const char* f : {"concentration_trials.csv", "concentration_summary.csv", "concentration_fit.csv"})
    CHECK(io::read_file(a / "concentration" / f) == io::read_file(b / "concentration" / f));
}

TEST_CASE("every subcommand runs at small scale") {
  const auto out = scratch("all");
  const std::string o = out.string();
  CHECK(cli::run({"legendre-check", "--out", o}) == 0);
  CHECK(cli::run({"represent-poly", "--n-polys", "3", "--out", o}) == 0);
  CHECK(cli::run({"learn-poly", "--r", "20", "--steps", "500", "--validation-size", "50", "--out", o}) == 0);
  CHECK(cli::run({"params", "--out", o}) == 0);
  CHECK(cli::run({"linear-residual", "--d", "10", "--r", "3", "--trials", "20", "--out", o}) == 0);
  CHECK(cli::run({"correlation-decay", "--d", "2,3", "--trials", "4", "--mc-samples", "1000", "--out", o}) == 0);
  CHECK(cli::run({"neuron-inapprox", "--r", "20", "--d", "2,3", "--n-train", "300", "--baseline-d", "3", "--out", o}) ==
        0);
  CHECK(cli::run({"exp-identity", "--out", o}) == 0);
  for (const auto& name : cli::subcommand_names())
    if (name != "psi-check" && name != "concentration") CHECK(fs::exists(out / name / "manifest.json"));
}
