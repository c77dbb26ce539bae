#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrusim/metrics.hpp"
#include "vrusim/scenario.hpp"
#include "vrusim/scenario_io.hpp"
#include "vrusim/trace.hpp"

namespace {

using namespace vrusim;

// Builtin name or path to a scenario JSON file.
ScenarioConfig load_config(const std::string& arg) {
  if (std::filesystem::exists(arg)) return load_scenario(arg);
  const auto& names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), arg) != names.end()) return builtin_scenario(arg);
  throw ConfigError("'" + arg + "' is neither a file nor a builtin scenario");
}

void apply_overrides(ScenarioConfig& cfg, const std::string& mode,
                     const std::optional<std::uint64_t>& seed) {
  if (!mode.empty()) cfg.pipeline = pipeline_from_string(mode);
  if (seed) cfg.seed = *seed;
  cfg.validate();
}

int verdict_exit_code(const GradeReport& report) {
  for (const auto& row : report.rows)
    if (row.verdict == Verdict::Fail) return 1;
  return 0;
}

void print_report(const GradeReport& report, const std::string& format) {
  if (format == "json")
    std::cout << report_to_json(report) << "\n";
  else
    std::cout << report_to_text(report);
}

int cmd_run(const std::string& scenario, const std::string& mode,
            const std::optional<std::uint64_t>& seed, std::string out, bool do_grade,
            const std::string& format) {
  ScenarioConfig cfg = load_config(scenario);
  apply_overrides(cfg, mode, seed);
  const SimulationTrace trace = run(cfg);
  if (out.empty()) out = cfg.name + "." + to_string(cfg.pipeline) + ".trace.jsonl";
  save_trace_jsonl(trace, out);
  std::cerr << "wrote " << out << " (" << trace.events.size() << " events)\n";
  if (!do_grade) return 0;
  const GradeReport report = grade(trace);
  print_report(report, format);
  return verdict_exit_code(report);
}

int cmd_grade(const std::string& path, const std::string& format, const std::string& out) {
  const SimulationTrace trace = load_trace_jsonl(path);
  const GradeReport report = grade(trace);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw TraceError("cannot write " + out);
    f << report_to_json(report) << "\n";
  }
  print_report(report, format);
  return verdict_exit_code(report);
}

int cmd_compare(const std::string& scenario, const std::string& modes_csv) {
  ScenarioConfig cfg = load_config(scenario);
  std::vector<std::string> modes;
  for (std::size_t pos = 0; pos < modes_csv.size();) {
    const std::size_t comma = std::min(modes_csv.find(',', pos), modes_csv.size());
    if (comma > pos) modes.push_back(modes_csv.substr(pos, comma - pos));
    pos = comma + 1;
  }
  if (modes.empty()) throw ConfigError("--modes must name at least one pipeline mode");

  std::vector<std::pair<std::string, MetricsReport>> results;
  for (const auto& mode : modes) {
    cfg.pipeline = pipeline_from_string(mode);
    results.emplace_back(mode, compute_metrics(run(cfg)));
  }
  std::printf("%-8s %10s %10s %12s %12s %10s\n", "mode", "vam_pub", "denm_pub", "e2e_p50_ms",
              "e2e_p99_ms", "min_lead_s");
  for (const auto& [mode, m] : results) {
    std::string lead = "-";
    if (!m.warning_lead_s.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f",
                    *std::min_element(m.warning_lead_s.begin(), m.warning_lead_s.end()));
      lead = buf;
    }
    if (m.warning_e2e.count > 0)
      std::printf("%-8s %10llu %10llu %12.1f %12.1f %10s\n", mode.c_str(),
                  static_cast<unsigned long long>(m.vam.published),
                  static_cast<unsigned long long>(m.denm.published), m.warning_e2e.p50_ms,
                  m.warning_e2e.p99_ms, lead.c_str());
    else
      std::printf("%-8s %10llu %10llu %12s %12s %10s\n", mode.c_str(),
                  static_cast<unsigned long long>(m.vam.published),
                  static_cast<unsigned long long>(m.denm.published), "-", "-", lead.c_str());
  }
  if (results.size() >= 2 && results[0].second.warning_e2e.count > 0 &&
      results[1].second.warning_e2e.count > 0)
    std::printf("p99 delta %s vs %s: %+.1f ms\n", results[1].first.c_str(),
                results[0].first.c_str(),
                results[1].second.warning_e2e.p99_ms - results[0].second.warning_e2e.p99_ms);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"grid-geocast V2X safety pipeline: deterministic simulator and grader"};
  app.require_subcommand(1);

  std::string scenario, mode, out, format = "text", trace_path, report_path, emit_name;
  std::string modes_csv = "central,edge";
  std::optional<std::uint64_t> seed;
  bool do_grade = false;

  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write its trace");
  run_cmd->add_option("scenario", scenario, "builtin name or scenario JSON path")->required();
  run_cmd->add_option("--mode", mode, "pipeline override: central|edge|direct");
  run_cmd->add_option("--seed", seed, "seed override");
  run_cmd->add_option("--out", out, "trace output path");
  run_cmd->add_flag("--grade", do_grade, "grade the run and use verdict exit codes");
  run_cmd->add_option("--format", format, "grade output: text|json")
      ->check(CLI::IsMember({"text", "json"}));

  auto* grade_cmd = app.add_subcommand("grade", "grade a recorded trace");
  grade_cmd->add_option("trace", trace_path, "trace JSONL path")->required();
  grade_cmd->add_option("--format", format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));
  grade_cmd->add_option("--out", out, "also write the JSON report here");

  auto* compare_cmd =
      app.add_subcommand("compare", "run one scenario under several pipeline modes");
  compare_cmd->add_option("scenario", scenario, "builtin name or scenario JSON path")
      ->required();
  compare_cmd->add_option("--modes", modes_csv, "comma-separated pipeline modes");

  auto* scenarios_cmd = app.add_subcommand("scenarios", "list builtins or emit one as JSON");
  scenarios_cmd->add_option("name", emit_name, "builtin to emit (omit to list)");

  auto* report_cmd = app.add_subcommand("report", "re-render a saved grade report");
  report_cmd->add_option("report", report_path, "report JSON path")->required();
  report_cmd->add_option("--format", format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(scenario, mode, seed, out, do_grade, format);
    if (grade_cmd->parsed()) return cmd_grade(trace_path, format, out);
    if (compare_cmd->parsed()) return cmd_compare(scenario, modes_csv);
    if (scenarios_cmd->parsed()) {
      if (emit_name.empty()) {
        for (const auto& name : builtin_scenario_names()) std::cout << name << "\n";
      } else {
        std::cout << scenario_to_json(builtin_scenario(emit_name)) << "\n";
      }
      return 0;
    }
    if (report_cmd->parsed()) {
      std::ifstream f(report_path);
      if (!f) throw TraceError("cannot open " + report_path);
      std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      print_report(report_from_json(text), format);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
