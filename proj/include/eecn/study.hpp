// include/eecn/study.hpp
// Multi-run studies: the per-algorithm comparison matrix and the marking
// threshold sweep. Every member run uses the base scenario's seed and flow
// schedule so differences come only from the mechanism under test.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eecn/engine.hpp"
#include "eecn/errors.hpp"
#include "eecn/metrics.hpp"
#include "eecn/scenario.hpp"

namespace eecn {

struct CompareRow {
  CcAlgo algo = CcAlgo::Eecn;
  SimReport report;
};

struct CompareResult {
  std::vector<CompareRow> rows;

  const SimReport* find(CcAlgo a) const {
    for (const auto& r : rows)
      if (r.algo == a) return &r.report;
    return nullptr;
  }
};

// Comparison convention: (baseline - eecn) / baseline.
inline double reduction_pct(double baseline, double value) {
  if (baseline == 0.0) return 0.0;
  return 100.0 * (baseline - value) / baseline;
}

// Runs the scenario once per algorithm. All flows take the algorithm under
// test and the routers run the matching discipline (two-level marking for
// eecn, classic RED+CE otherwise), mirroring how the baselines are deployed.
inline CompareResult run_compare(const ScenarioConfig& base,
                                 const std::vector<CcAlgo>& algos) {
  CompareResult result;
  for (CcAlgo algo : algos) {
    ScenarioConfig cfg = base;
    for (auto& f : cfg.flows) f.algo = algo;
    const QueueMode mode =
        algo == CcAlgo::Eecn ? QueueMode::Eecn : QueueMode::Ecn;
    cfg.queue.mode = mode;
    for (auto& m : cfg.router_modes) m = mode;
    auto world = build_world(cfg);
    result.rows.push_back({algo, world->run()});
  }
  return result;
}

struct SweepRow {
  double th1 = 0.0;
  double th2 = 0.0;
  double ef_throughput_bps = 0.0;
  double sf_throughput_bps = 0.0;
  std::uint64_t total_drops = 0;
  std::uint64_t total_marks = 0;
  double ef_delay_s = 0.0;
  double sf_delay_s = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

inline SweepResult run_sweep(const ScenarioConfig& base,
                             const std::vector<std::pair<double, double>>& pairs) {
  SweepResult result;
  for (const auto& [th1, th2] : pairs) {
    if (!(th1 < th2))
      throw ConfigError("thresholds: th1 (" + std::to_string(th1) +
                        ") must be < th2 (" + std::to_string(th2) + ")");
    ScenarioConfig cfg = base;
    cfg.queue.th1 = th1;
    cfg.queue.th2 = th2;
    auto world = build_world(cfg);
    const SimReport rep = world->run();
    SweepRow row;
    row.th1 = th1;
    row.th2 = th2;
    row.ef_throughput_bps = rep.mean_goodput_bps[0];
    row.sf_throughput_bps = rep.mean_goodput_bps[1];
    row.total_drops = rep.packets_dropped;
    row.total_marks = rep.packets_marked;
    row.ef_delay_s = rep.mean_e2e_delay_s[0];
    row.sf_delay_s = rep.mean_e2e_delay_s[1];
    result.rows.push_back(row);
  }
  return result;
}

// --- rendering ----------------------------------------------------------------

inline nlohmann::json compare_to_json(const CompareResult& c) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : c.rows) {
    nlohmann::json row = report_to_json(r.report);
    row["algo"] = to_string(r.algo);
    j["rows"].push_back(row);
  }
  const SimReport* eecn = c.find(CcAlgo::Eecn);
  if (eecn && c.rows.size() > 1) {
    nlohmann::json red = nlohmann::json::object();
    for (const auto& r : c.rows) {
      if (r.algo == CcAlgo::Eecn) continue;
      red[to_string(r.algo)] = {
          {"drops_pct", reduction_pct(
                            static_cast<double>(r.report.packets_dropped),
                            static_cast<double>(eecn->packets_dropped))},
          {"marks_pct", reduction_pct(
                            static_cast<double>(r.report.packets_marked),
                            static_cast<double>(eecn->packets_marked))},
          {"short_fct_pct",
           reduction_pct(r.report.mean_fct_s[1], eecn->mean_fct_s[1])},
          {"e2e_delay_pct", reduction_pct(r.report.mean_e2e_delay_s[1],
                                          eecn->mean_e2e_delay_s[1])},
      };
    }
    j["reductions_vs_eecn"] = red;
  }
  return j;
}

inline void compare_to_csv(const CompareResult& c, std::ostream& os) {
  os << "algo,packets_dropped,bytes_dropped,packets_marked,bytes_marked,"
        "drop_pct,ef_fct_s,sf_fct_s,ef_goodput_bps,sf_goodput_bps,"
        "ef_delay_s,sf_delay_s,jain_goodput\n";
  for (const auto& r : c.rows) {
    const auto& rep = r.report;
    os << to_string(r.algo) << ',' << rep.packets_dropped << ','
       << rep.bytes_dropped << ',' << rep.packets_marked << ','
       << rep.bytes_marked << ',' << format_g17(rep.drop_pct) << ','
       << format_g17(rep.mean_fct_s[0]) << ',' << format_g17(rep.mean_fct_s[1])
       << ',' << format_g17(rep.mean_goodput_bps[0]) << ','
       << format_g17(rep.mean_goodput_bps[1]) << ','
       << format_g17(rep.mean_e2e_delay_s[0]) << ','
       << format_g17(rep.mean_e2e_delay_s[1]) << ','
       << format_g17(rep.jain_goodput) << '\n';
  }
}

inline nlohmann::json sweep_to_json(const SweepResult& s) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : s.rows) {
    j["rows"].push_back({
        {"th1", r.th1},
        {"th2", r.th2},
        {"ef_throughput_bps", r.ef_throughput_bps},
        {"sf_throughput_bps", r.sf_throughput_bps},
        {"total_drops", r.total_drops},
        {"total_marks", r.total_marks},
        {"ef_delay_s", r.ef_delay_s},
        {"sf_delay_s", r.sf_delay_s},
    });
  }
  return j;
}

inline void sweep_to_csv(const SweepResult& s, std::ostream& os) {
  os << "th1,th2,ef_throughput_bps,sf_throughput_bps,total_drops,total_marks,"
        "ef_delay_s,sf_delay_s\n";
  for (const auto& r : s.rows) {
    os << format_g17(r.th1) << ',' << format_g17(r.th2) << ','
       << format_g17(r.ef_throughput_bps) << ','
       << format_g17(r.sf_throughput_bps) << ',' << r.total_drops << ','
       << r.total_marks << ',' << format_g17(r.ef_delay_s) << ','
       << format_g17(r.sf_delay_s) << '\n';
  }
}

}  // namespace eecn
