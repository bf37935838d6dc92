// compeval command line: evaluate benchmarks, sweep prompting modes, validate
// manifests, forge demonstration banks, and re-export stored reports.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "compeval/compeval.hpp"

namespace {

namespace fs = std::filesystem;
using compeval::json;

json parse_json_file(const std::string& path) {
  return json::parse(compeval::detail::read_file(path));
}

std::vector<std::vector<std::string>> load_object_lists(const std::string& path) {
  const std::string text = compeval::detail::read_file(path);
  std::vector<std::vector<std::string>> lists;
  const std::string trimmed = compeval::detail::trim(text);
  if (!trimmed.empty() && trimmed.front() == '[') {
    for (const auto& entry : json::parse(trimmed)) {
      lists.push_back(entry.get<std::vector<std::string>>());
    }
    return lists;
  }
  // JSONL rows: {"objects": ["a", "b", "c", "d"]}
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (compeval::detail::is_blank(line)) continue;
    const json record = json::parse(line);
    lists.push_back(record.at("objects").get<std::vector<std::string>>());
  }
  return lists;
}

int run_eval_command(const std::string& config_path) {
  const compeval::RunConfig config = compeval::run_config_from_json(parse_json_file(config_path));
  const compeval::BenchmarkReport report = compeval::run_eval(config);
  compeval::write_run_outputs(report, config.output_dir);
  std::cout << compeval::report_to_markdown(report);
  std::cout << "report written to " << (fs::path(config.output_dir) / "report.json").string()
            << "\n";
  return 0;
}

int run_sweep_command(const std::string& config_path) {
  const compeval::SweepConfig sweep =
      compeval::sweep_config_from_json(parse_json_file(config_path));
  const compeval::SweepResult result = compeval::run_sweep(sweep);
  std::cout << compeval::sweep_to_markdown(result);
  for (const auto& cell : result.cells) {
    if (!cell.ok) {
      std::cerr << "cell " << cell.name << " failed: " << cell.error << "\n";
    }
  }
  std::cout << "combined report written to "
            << (fs::path(sweep.base.output_dir) / "combined.json").string() << "\n";
  return result.all_ok() ? 0 : 1;
}

int run_validate_command(const std::string& manifest, const std::string& kind_name) {
  compeval::ManifestKind kind = compeval::ManifestKind::Auto;
  if (kind_name == "pairwise") kind = compeval::ManifestKind::Pairwise;
  else if (kind_name == "winoground") kind = compeval::ManifestKind::Winoground;
  else if (kind_name == "bank") kind = compeval::ManifestKind::Bank;
  else if (kind_name != "auto") {
    std::cerr << "unknown --kind '" << kind_name << "'\n";
    return 2;
  }
  const compeval::ValidationReport report = compeval::validate_manifest(manifest, kind);
  std::cout << report.to_json().dump(2) << "\n";
  return report.ok() ? 0 : 1;
}

int run_forge_command(const std::string& objects_path, const std::string& out_dir,
                      const std::string& config_path, const std::string& bank_id,
                      std::uint64_t seed) {
  const json config = parse_json_file(config_path);
  const auto& textgen_cfg = config.at("textgen");
  const auto& imagegen_cfg = config.at("imagegen");
  compeval::RetryPolicy policy;
  if (config.contains("retry")) {
    policy.max_attempts = config.at("retry").value("max_attempts", 5);
    policy.base_delay_ms = config.at("retry").value("base_delay_ms", 250);
  }
  compeval::RemoteTextGenClient textgen(
      textgen_cfg.at("endpoint").get<std::string>(), textgen_cfg.at("model").get<std::string>(),
      textgen_cfg.value("auth_env", ""), policy, textgen_cfg.value("temperature", 1.0));
  compeval::RemoteImageGenClient imagegen(imagegen_cfg.at("endpoint").get<std::string>(),
                                          imagegen_cfg.at("model").get<std::string>(),
                                          imagegen_cfg.value("auth_env", ""), policy);
  compeval::ForgeOptions opts;
  opts.max_attempts = config.value("max_attempts", 3);
  opts.concurrency = config.value("concurrency", std::size_t{1});
  const std::string effective_id = bank_id.empty() ? fs::path(out_dir).filename().string() : bank_id;
  const auto lists = load_object_lists(objects_path);
  const compeval::DemoBank bank = compeval::build_synthetic_bank(
      lists, textgen, imagegen, seed, effective_id, out_dir, opts);
  std::cout << "bank '" << bank.bank_id << "' with " << bank.demos.size() << " demos written to "
            << out_dir << "\n";
  return 0;
}

int run_report_command(const std::string& in_path, const std::string& format_name,
                       const std::string& out_path) {
  fs::path path = in_path;
  if (fs::is_directory(path)) path /= "report.json";
  const compeval::BenchmarkReport report = compeval::load_report_json(path);
  const std::string rendered =
      compeval::render_report(report, compeval::report_format_from_name(format_name));
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    compeval::detail::atomic_write_file(out_path, rendered);
    std::cout << "written to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional vision-language benchmark evaluation harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string manifest_path;
  std::string kind_name = "auto";
  std::string objects_path;
  std::string out_dir;
  std::string bank_id;
  std::uint64_t seed = 0;
  std::string forge_config;
  std::string report_in;
  std::string report_format = "md";
  std::string report_out;

  auto* eval_cmd = app.add_subcommand("eval", "run one evaluation from a config file");
  eval_cmd->add_option("--config", config_path, "run config JSON")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "run the zero/1/5-shot x synthetic/real grid");
  sweep_cmd->add_option("--config", config_path, "sweep config JSON")->required();

  auto* validate_cmd = app.add_subcommand("validate", "validate a JSONL manifest");
  validate_cmd->add_option("--manifest", manifest_path, "manifest path")->required();
  validate_cmd->add_option("--kind", kind_name, "auto|pairwise|winoground|bank");

  auto* forge_cmd = app.add_subcommand("forge", "build a synthetic demonstration bank");
  forge_cmd->add_option("--objects", objects_path, "object lists (JSON array or JSONL)")->required();
  forge_cmd->add_option("--out", out_dir, "bank output directory")->required();
  forge_cmd->add_option("--config", forge_config, "service endpoints JSON")->required();
  forge_cmd->add_option("--bank-id", bank_id, "bank id (default: output dir name)");
  forge_cmd->add_option("--seed", seed, "bank seed");

  auto* report_cmd = app.add_subcommand("report", "re-export a stored run report");
  report_cmd->add_option("--in", report_in, "run directory or report.json")->required();
  report_cmd->add_option("--format", report_format, "md|csv|json");
  report_cmd->add_option("--out", report_out, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval_cmd->parsed()) return run_eval_command(config_path);
    if (sweep_cmd->parsed()) return run_sweep_command(config_path);
    if (validate_cmd->parsed()) return run_validate_command(manifest_path, kind_name);
    if (forge_cmd->parsed()) {
      return run_forge_command(objects_path, out_dir, forge_config, bank_id, seed);
    }
    if (report_cmd->parsed()) return run_report_command(report_in, report_format, report_out);
  } catch (const compeval::EvalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
