// tools/eecnsim.cpp
// Command-line front end: run one scenario, run the algorithm comparison
// matrix, sweep marking thresholds, or just validate a scenario file.
//
// Exit codes: 0 success, 1 configuration error, 2 internal failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eecn/engine.hpp"
#include "eecn/errors.hpp"
#include "eecn/metrics.hpp"
#include "eecn/scenario.hpp"
#include "eecn/study.hpp"

namespace {

struct CommonOpts {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::string report_path;
  std::string trace_path;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_trace = true) {
  cmd->add_option("scenario", o.scenario_path, "scenario JSON file")->required();
  cmd->add_option("--seed", o.seed, "override the scenario seed");
  cmd->add_option("--duration", o.duration_s, "override duration, seconds");
  cmd->add_option("--report", o.report_path, "write the report here");
  cmd->add_option("--format", o.format, "report format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  if (with_trace)
    cmd->add_option("--trace", o.trace_path, "write the event trace CSV here");
}

eecn::ScenarioConfig load(const CommonOpts& o) {
  eecn::ScenarioConfig cfg = eecn::load_scenario(o.scenario_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.duration_s) {
    if (*o.duration_s <= 0) throw eecn::ConfigError("--duration: must be positive");
    cfg.duration = eecn::from_seconds(*o.duration_s);
  }
  return cfg;
}

void write_or_print(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) throw eecn::ConfigError("cannot open output file: " + path);
  out << body;
}

void print_summary(const eecn::SimReport& r) {
  std::cout << "scenario: " << r.scenario << " (seed " << r.seed << ", "
            << r.duration_s << " s)\n"
            << "  packets sent " << r.packets_sent << ", delivered "
            << r.packets_delivered << ", dropped " << r.packets_dropped
            << " (" << r.drop_pct << "%), marked " << r.packets_marked
            << " (CL1 " << r.marks_cl1 << " / CL2 " << r.marks_cl2 << ")\n"
            << "  elephant mean FCT " << r.mean_fct_s[0] << " s, short mean FCT "
            << r.mean_fct_s[1] << " s, Jain " << r.jain_goodput << "\n";
}

int cmd_run(const CommonOpts& o) {
  eecn::ScenarioConfig cfg = load(o);
  auto world = eecn::build_world(cfg);
  if (!o.trace_path.empty()) world->trace().enable(true);
  const eecn::SimReport report = world->run();
  print_summary(report);
  if (o.format == "json") {
    write_or_print(o.report_path, eecn::report_to_json(report).dump(2) + "\n");
  } else {
    std::ostringstream os;
    eecn::report_to_csv(report, os);
    write_or_print(o.report_path, os.str());
  }
  if (!o.trace_path.empty()) {
    std::ofstream t(o.trace_path);
    if (!t) throw eecn::ConfigError("cannot open trace file: " + o.trace_path);
    world->trace().write_csv(t);
  }
  return 0;
}

int cmd_compare(const CommonOpts& o, const std::vector<std::string>& algo_names) {
  eecn::ScenarioConfig cfg = load(o);
  std::vector<eecn::CcAlgo> algos;
  for (const auto& name : algo_names)
    algos.push_back(eecn::detail::parse_algo(name, "--algos"));
  if (algos.empty())
    algos = {eecn::CcAlgo::Eecn, eecn::CcAlgo::NewRenoEcn, eecn::CcAlgo::NewReno};
  const eecn::CompareResult result = eecn::run_compare(cfg, algos);
  for (const auto& row : result.rows) {
    std::cout << "--- " << to_string(row.algo) << " ---\n";
    print_summary(row.report);
  }
  if (o.format == "json") {
    write_or_print(o.report_path, eecn::compare_to_json(result).dump(2) + "\n");
  } else {
    std::ostringstream os;
    eecn::compare_to_csv(result, os);
    write_or_print(o.report_path, os.str());
  }
  return 0;
}

std::vector<std::pair<double, double>> parse_pairs(
    const std::vector<std::string>& specs) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
      throw eecn::ConfigError("--thresholds: expected th1:th2, got '" + s + "'");
    try {
      pairs.emplace_back(std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
    } catch (const std::exception&) {
      throw eecn::ConfigError("--thresholds: bad number in '" + s + "'");
    }
  }
  return pairs;
}

int cmd_sweep(const CommonOpts& o, const std::vector<std::string>& pair_specs) {
  eecn::ScenarioConfig cfg = load(o);
  const auto pairs = parse_pairs(pair_specs);
  const eecn::SweepResult result = eecn::run_sweep(cfg, pairs);
  for (const auto& r : result.rows)
    std::cout << "th " << r.th1 << "/" << r.th2 << ": drops " << r.total_drops
              << ", marks " << r.total_marks << ", SF delay " << r.sf_delay_s
              << " s\n";
  if (o.format == "json") {
    write_or_print(o.report_path, eecn::sweep_to_json(result).dump(2) + "\n");
  } else {
    std::ostringstream os;
    eecn::sweep_to_csv(result, os);
    write_or_print(o.report_path, os.str());
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  eecn::ScenarioConfig cfg = eecn::load_scenario(path);
  auto world = eecn::build_world(cfg);  // exercises topology validation too
  std::cout << path << ": ok (" << world->node_count() << " nodes, "
            << world->link_count() << " links, " << cfg.flows.size()
            << " flows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-level simulator for two-level congestion notification"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "run one scenario");
  add_common(run, run_opts);

  CommonOpts cmp_opts;
  std::vector<std::string> algos;
  CLI::App* compare = app.add_subcommand("compare", "run once per algorithm");
  add_common(compare, cmp_opts, /*with_trace=*/false);
  compare->add_option("--algos", algos, "subset of eecn,ecn,newreno")
      ->delimiter(',');

  CommonOpts sweep_opts;
  std::vector<std::string> pair_specs;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep marking thresholds");
  add_common(sweep, sweep_opts, /*with_trace=*/false);
  sweep->add_option("--thresholds", pair_specs, "pairs th1:th2,...")
      ->delimiter(',');

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", validate_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (compare->parsed()) return cmd_compare(cmp_opts, algos);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, pair_specs);
    if (validate->parsed()) return cmd_validate(validate_path);
  } catch (const eecn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
