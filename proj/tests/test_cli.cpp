#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "compeval/dataset.hpp"
#include "compeval/report.hpp"
#include "fixtures.hpp"

using namespace compeval;

namespace {

int run_cli(const std::string& args, const std::filesystem::path& stdout_to) {
  const std::string command =
      std::string(COMPEVAL_CLI_PATH) + " " + args + " > " + stdout_to.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli validate reports clean and broken manifests") {
  testfx::TempDir dir("cli_validate");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::SugarCrepe, 4);
  const auto out = dir.path / "stdout.txt";

  REQUIRE(run_cli("validate --manifest " + fixture.manifest.string(), out) == 0);
  const json clean = json::parse(detail::read_file(out));
  REQUIRE(clean.at("errors").empty());

  std::ofstream(fixture.manifest, std::ios::app) << "{broken json\n";
  REQUIRE(run_cli("validate --manifest " + fixture.manifest.string(), out) == 1);
  const json broken = json::parse(detail::read_file(out));
  REQUIRE(broken.at("errors").size() == 1);
}

TEST_CASE("cli eval writes reports and cli report re-exports them") {
  testfx::TempDir dir("cli_eval");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::ARO, 8);
  const auto run_dir = dir.path / "run";

  const json config = {
      {"benchmarks", json::array({{{"manifest", fixture.manifest.string()}, {"kind", "ARO"}}})},
      {"models", json::array({{{"name", "oracle"},
                               {"kind", "embedding"},
                               {"endpoint", "mock:oracle"}}})},
      {"mode", "contrastive_zero_shot"},
      {"output_dir", run_dir.string()},
      {"seed", 5}};
  const auto config_path = dir.path / "config.json";
  detail::atomic_write_file(config_path, config.dump(2));

  const auto out = dir.path / "stdout.txt";
  REQUIRE(run_cli("eval --config " + config_path.string(), out) == 0);
  REQUIRE(std::filesystem::exists(run_dir / "report.json"));
  REQUIRE(std::filesystem::exists(run_dir / "report.csv"));
  REQUIRE(std::filesystem::exists(run_dir / "report.md"));

  const BenchmarkReport report = load_report_json(run_dir / "report.json");
  for (const auto& [code, stats] : report.rows[0].subsets) {
    REQUIRE(stats.accuracy() == 1.0);
  }

  REQUIRE(run_cli("report --in " + run_dir.string() + " --format csv", out) == 0);
  const BenchmarkReport from_csv = report_from_csv(detail::read_file(out));
  REQUIRE(from_csv == report);
}

TEST_CASE("cli eval surfaces config errors with a failing exit code") {
  testfx::TempDir dir("cli_badconfig");
  const auto config_path = dir.path / "config.json";
  detail::atomic_write_file(config_path, R"({"benchmarks": [], "models": [],
    "mode": "contrastive_zero_shot", "output_dir": "x"})");
  const auto out = dir.path / "stdout.txt";
  REQUIRE(run_cli("eval --config " + config_path.string(), out) == 1);
  REQUIRE(detail::read_file(out).find("InvalidConfig") != std::string::npos);
}
