// Acceptance suite: end-to-end checks of the headline results on the desk
// scenarios, plus the oracle-equivalence and property gates. Each check
// prints one PASS/FAIL line.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eecn/codepoint.hpp"
#include "eecn/engine.hpp"
#include "eecn/metrics.hpp"
#include "eecn/queue.hpp"
#include "eecn/rng.hpp"
#include "eecn/scenario.hpp"
#include "eecn/study.hpp"
#include "eecn/transport.hpp"

using namespace eecn;

namespace {

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("[CRITERION %2d] %s — %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string scenario_path(const std::string& name) {
  return std::string(EECN_SCENARIO_DIR) + "/" + name;
}

// The desk-scale comparison run is shared by criteria 1-3.
struct DeskCompare {
  CompareResult result;
  double wall_seconds = 0.0;
};

const DeskCompare& desk_compare() {
  static const DeskCompare dc = [] {
    DeskCompare d;
    const ScenarioConfig cfg = load_scenario(scenario_path("dumbbell-desk.json"));
    const auto t0 = std::chrono::steady_clock::now();
    d.result = run_compare(
        cfg, {CcAlgo::Eecn, CcAlgo::NewRenoEcn, CcAlgo::NewReno});
    d.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return d;
  }();
  return dc;
}

// --- 1. drop ordering ---------------------------------------------------------

TEST(Acceptance, C01_DropOrdering) {
  const auto& d = desk_compare();
  const SimReport& eecn = *d.result.find(CcAlgo::Eecn);
  const SimReport& ecn = *d.result.find(CcAlgo::NewRenoEcn);
  const SimReport& newreno = *d.result.find(CcAlgo::NewReno);
  const bool order = eecn.packets_dropped < ecn.packets_dropped &&
                     ecn.packets_dropped < newreno.packets_dropped;
  const bool halved = static_cast<double>(eecn.packets_dropped) <=
                      0.5 * static_cast<double>(ecn.packets_dropped);
  const bool timely = d.wall_seconds < 30.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "drops eecn=%llu < ecn=%llu < newreno=%llu, eecn <= 0.5*ecn, "
                "compare ran in %.1f s",
                (unsigned long long)eecn.packets_dropped,
                (unsigned long long)ecn.packets_dropped,
                (unsigned long long)newreno.packets_dropped, d.wall_seconds);
  verdict(1, order && halved && timely, buf);
  EXPECT_TRUE(order);
  EXPECT_TRUE(halved);
  EXPECT_TRUE(timely);
}

// --- 2. mark reduction ----------------------------------------------------------

TEST(Acceptance, C02_MarkReduction) {
  const auto& d = desk_compare();
  const SimReport& eecn = *d.result.find(CcAlgo::Eecn);
  const SimReport& ecn = *d.result.find(CcAlgo::NewRenoEcn);
  const bool pass = static_cast<double>(eecn.packets_marked) <=
                    0.25 * static_cast<double>(ecn.packets_marked);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "marks eecn=%llu <= 0.25 * ecn=%llu",
                (unsigned long long)eecn.packets_marked,
                (unsigned long long)ecn.packets_marked);
  verdict(2, pass, buf);
  EXPECT_TRUE(pass);
}

// --- 3. short-flow completion time ----------------------------------------------

TEST(Acceptance, C03_ShortFlowFct) {
  const auto& d = desk_compare();
  const SimReport& eecn = *d.result.find(CcAlgo::Eecn);
  const SimReport& ecn = *d.result.find(CcAlgo::NewRenoEcn);
  const SimReport& newreno = *d.result.find(CcAlgo::NewReno);
  for (const auto& row : d.result.rows)
    for (const auto& f : row.report.flows)
      ASSERT_TRUE(f.completed) << "flow " << f.flow_id << " did not finish";

  const double sf_eecn = eecn.mean_fct_s[1];
  const double sf_ecn = ecn.mean_fct_s[1];
  const bool sf_pass = sf_eecn <= 0.70 * sf_ecn;

  // Elephants largely unaffected: each algorithm's mean stays within 10% of
  // the cross-algorithm mean.
  const double ef[3] = {eecn.mean_fct_s[0], ecn.mean_fct_s[0],
                        newreno.mean_fct_s[0]};
  const double mid = (ef[0] + ef[1] + ef[2]) / 3.0;
  double worst = 0.0;
  for (double v : ef) worst = std::max(worst, std::abs(v / mid - 1.0));
  const bool ef_pass = worst <= 0.10;

  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "short FCT eecn=%.1f ms vs ecn=%.1f ms (%.0f%% lower, need "
                ">=30%%); elephant FCT spread %.1f%% (limit 10%%)",
                sf_eecn * 1e3, sf_ecn * 1e3, 100.0 * (1.0 - sf_eecn / sf_ecn),
                100.0 * worst);
  verdict(3, sf_pass && ef_pass, buf);
  EXPECT_TRUE(sf_pass);
  EXPECT_TRUE(ef_pass);
}

// --- 4. estimator oracle equivalence ---------------------------------------------

TEST(Acceptance, C04_EstimatorOracle) {
  // Straight-line re-evaluation of the level formula and threshold cases.
  auto oracle = [](double occ, double cap, double g, double a) {
    double cl = (occ + g / 10.0 - a / 10.0) / cap;
    if (cl < 0.0) cl = 0.0;
    if (cl > 1.0) cl = 1.0;
    if (cl < 0.3) return CongestionLevel::None;
    if (cl < 0.5) return CongestionLevel::CL1;
    return CongestionLevel::CL2;
  };

  // Worked example: 60 of 100 queued with matched rates -> 0.6 -> severe.
  ASSERT_DOUBLE_EQ(congestion_value(60, 100, 700, 700), 0.6);
  ASSERT_EQ(classify_value(0.6, 0.3, 0.5), CongestionLevel::CL2);

  SplitMix64 rng(20260809);
  int checked = 0;
  bool all_equal = true;
  for (int i = 0; i < 10000; ++i) {
    const double cap = 1.0 + static_cast<double>(rng.next_below(1000));
    const double occ = static_cast<double>(rng.next_below(
        static_cast<std::uint64_t>(cap) + 1));
    const double g = rng.next_double() * 20000.0;
    const double a = rng.next_double() * 20000.0;
    const CongestionLevel got =
        classify_value(congestion_value(occ, cap, g, a), 0.3, 0.5);
    if (got != oracle(occ, cap, g, a)) all_equal = false;
    ++checked;
  }

  // The same agreement through live queue state: rates are driven through
  // the measurement window, occupancy adjusted afterwards.
  int queue_checked = 0;
  bool queue_equal = true;
  SplitMix64 gen(77);
  for (int i = 0; i < 200; ++i) {
    const int arrivals = static_cast<int>(gen.next_below(120));
    const int departures = static_cast<int>(gen.next_below(arrivals + 1));
    const int target_occ = static_cast<int>(gen.next_below(101));
    QueueConfig qc;
    qc.red_min = 990;  // keep RED quiet
    qc.red_max = 999;
    qc.capacity = 1000;
    RouterQueue q(qc, "oracle");
    SplitMix64 red(1);
    for (int k = 0; k < arrivals; ++k) {
      Packet p;
      p.cp = kCpCl2;  // passes every mode untouched
      q.offer(p, from_millis(k % 99), red, nullptr);
    }
    for (int k = 0; k < departures; ++k) q.pop(from_millis(99), nullptr);
    // Second window: shape occupancy without disturbing the completed rates.
    int occ_now = arrivals - departures;
    while (occ_now < target_occ) {
      Packet p;
      p.cp = kCpCl2;
      q.offer(p, from_millis(101), red, nullptr);
      ++occ_now;
    }
    while (occ_now > target_occ) {
      q.pop(from_millis(101), nullptr);
      --occ_now;
    }
    const CongestionLevel got = q.classify(from_millis(150));
    const CongestionLevel want =
        oracle(target_occ, 1000, arrivals * 10.0, departures * 10.0);
    if (got != want) queue_equal = false;
    ++queue_checked;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d randomized tuples + %d live-queue cases agree with the "
                "straight-line evaluation",
                checked, queue_checked);
  verdict(4, all_equal && queue_equal, buf);
  EXPECT_TRUE(all_equal);
  EXPECT_TRUE(queue_equal);
}

// --- 5. window arithmetic suite ---------------------------------------------------

TEST(Acceptance, C05_WindowArithmetic) {
  bool ok = true;
  auto expect_eq = [&ok](double got, double want, double tol = 0.0) {
    if (std::abs(got - want) > tol) ok = false;
    return std::abs(got - want) <= tol;
  };

  EXPECT_TRUE(expect_eq(initial_cwnd({true, CongestionLevel::None}, 1000), 10000));
  EXPECT_TRUE(expect_eq(initial_cwnd({true, CongestionLevel::CL2}, 1000), 1000));
  EXPECT_TRUE(expect_eq(initial_cwnd({true, CongestionLevel::CL1}, 500), 2500));

  auto fresh = [](double cwnd, double cur, double avg) {
    ConnectionState st;
    st.cc_algo = CcAlgo::Eecn;
    st.eecn_negotiated = true;
    st.seg_size = 1000;
    st.cwnd = cwnd;
    st.phase = TcpPhase::SlowStart;
    st.cur_rtt = cur;
    st.avg_rtt = avg;
    st.rtt_samples = 1;
    return st;
  };

  auto st = fresh(16000, 0.12, 0.10);  // divide by 8 with the 2-segment floor
  on_congestion_echo(st, CongestionLevel::CL2, 1.0);
  EXPECT_TRUE(expect_eq(st.cwnd, 2000));
  EXPECT_TRUE(expect_eq(st.ssthresh, 2000));

  st = fresh(8000, 0.08, 0.10);  // half divisor below the average
  on_congestion_echo(st, CongestionLevel::CL2, 1.0);
  EXPECT_TRUE(expect_eq(st.cwnd, 2000));

  st = fresh(10000, 0.10, 0.10);  // decay fixed point at zero exponent
  on_congestion_echo(st, CongestionLevel::CL1, 1.0);
  EXPECT_TRUE(expect_eq(st.cwnd, 10000));

  st = fresh(5000, 0.08, 0.10);  // slow start, below average: full segment
  st.ssthresh = 1e12;
  on_ack_window_growth(st);
  EXPECT_TRUE(expect_eq(st.cwnd, 6000));

  st = fresh(5000, 0.10, 0.10);  // slow start, smoothed growth
  st.ssthresh = 1e12;
  on_ack_window_growth(st);
  EXPECT_TRUE(expect_eq(st.cwnd, 5300));

  st = fresh(5000, 0.08, 0.10);  // avoidance creep
  st.ssthresh = 4000;
  st.phase = TcpPhase::CongestionAvoidance;
  on_ack_window_growth(st);
  EXPECT_TRUE(expect_eq(st.cwnd, 5020));

  EXPECT_TRUE(expect_eq(std::exp(-0.03), 0.97044553354850818, 1e-12));

  ConnectionState rm;
  rm.cfg.avg_rtt_running_mean = true;
  on_rtt_sample(rm, 0.1);
  EXPECT_TRUE(expect_eq(rm.avg_rtt, 0.1));
  on_rtt_sample(rm, 0.2);
  EXPECT_TRUE(expect_eq(rm.avg_rtt, 0.15, 1e-12));

  st = fresh(10000, 0.1, 0.1);
  on_loss(st, LossKind::Timeout);
  EXPECT_TRUE(expect_eq(st.cwnd, 1000));
  EXPECT_TRUE(expect_eq(st.ssthresh, 5000));

  st = fresh(3000, 0.1, 0.1);
  on_loss(st, LossKind::TripleDupAck);
  EXPECT_TRUE(expect_eq(st.ssthresh, 2000));

  ConnectionState ecn;
  ecn.cc_algo = CcAlgo::NewRenoEcn;
  ecn.ecn_negotiated = true;
  ecn.seg_size = 1000;
  ecn.cwnd = 10000;
  ecn.phase = TcpPhase::SlowStart;
  ecn.cur_rtt = ecn.avg_rtt = 0.1;
  ecn.rtt_samples = 1;
  baseline_ecn_behavior(ecn, 1.0);
  EXPECT_TRUE(expect_eq(ecn.cwnd, 5000));
  baseline_ecn_behavior(ecn, 1.04);  // second echo inside one RTT
  EXPECT_TRUE(expect_eq(ecn.cwnd, 5000));

  ConnectionState plain;
  plain.cc_algo = CcAlgo::NewReno;
  plain.cwnd = 10000;
  baseline_ecn_behavior(plain, 1.0);
  EXPECT_TRUE(expect_eq(plain.cwnd, 10000));

  verdict(5, ok, "window arithmetic examples hold exactly");
  EXPECT_TRUE(ok);
}

// --- 6. handshake scenario conformance --------------------------------------------

struct Wire {
  Endpoint a;
  Endpoint b;
  SimTime now = 0;
  std::function<void(Packet&)> hook;
  std::vector<Packet> to_a, to_b;

  Wire(std::uint64_t bytes_a, std::uint64_t bytes_b)
      : a(1, Role::Initiator, CcAlgo::Eecn, bytes_a, 10, 20, 1000),
        b(1, Role::Responder, CcAlgo::Eecn, bytes_b, 20, 10, 1000) {}

  void pump() {
    std::vector<Packet> wave;
    a.start(now, wave);
    while (!wave.empty()) {
      std::vector<Packet> next;
      for (auto& p : wave) {
        now += from_millis(5);
        if (hook) hook(p);
        std::vector<Packet> out;
        if (p.dst_node == 10) {
          to_a.push_back(p);
          a.on_packet(p, now, out);
        } else {
          to_b.push_back(p);
          b.on_packet(p, now, out);
        }
        next.insert(next.end(), out.begin(), out.end());
      }
      wave = std::move(next);
    }
  }
};

TEST(Acceptance, C06_HandshakeScenarios) {
  bool ok = true;

  {  // Clean path: responder is the data sender, both sides start at ten.
    Wire w(0, 10000);
    w.pump();
    ok &= decode_tcp_eecn(w.to_b.at(0).tcp_signal()) == TcpEecn::Capable;
    ok &= decode_tcp_eecn(w.to_a.at(0).tcp_signal()) == TcpEecn::Capable;
    ok &= initial_cwnd(w.a.outcome(), 1000) == 10000.0;
    ok &= initial_cwnd(w.b.outcome(), 1000) == 10000.0;
    int burst = 0;
    for (const auto& p : w.to_a)
      if (p.is_data()) ++burst;
    ok &= burst == 10;  // ten segments on the wire right after the handshake
  }
  {  // Marked SYN: the level-1 echo arrives in the SYN-ACK, five segments.
    Wire w(16000, 0);
    w.hook = [](Packet& p) {
      if (p.syn && !p.ack) p.cp = with_level(p.cp, CongestionLevel::CL1);
    };
    w.pump();
    ok &= decode_tcp_eecn(w.to_a.at(0).tcp_signal()) == TcpEecn::CL1Echo;
    ok &= w.a.outcome().observed_level == CongestionLevel::CL1;
    ok &= initial_cwnd(w.a.outcome(), 1000) == 5000.0;
  }
  {  // Both control packets marked: echo goes both ways, windows 5 and 1.
    Wire w(9000, 0);
    w.hook = [](Packet& p) {
      if (p.syn && !p.ack) p.cp = with_level(p.cp, CongestionLevel::CL1);
      if (p.syn && p.ack) p.cp = with_level(p.cp, CongestionLevel::CL2);
    };
    w.pump();
    const Packet& synack = w.to_a.at(0);
    ok &= decode_tcp_eecn(synack.tcp_signal()) == TcpEecn::CL1Echo;
    ok &= synack.cp == kCpCl2;
    ok &= decode_tcp_eecn(w.to_b.at(1).tcp_signal()) == TcpEecn::CL2Echo;
    ok &= initial_cwnd(w.a.outcome(), 1000) == 5000.0;
    ok &= initial_cwnd(w.b.outcome(), 1000) == 1000.0;
  }

  // The same windows through a real router using scripted marking windows.
  for (auto [level, want] :
       {std::pair{CongestionLevel::CL1, 5000.0},
        std::pair{CongestionLevel::CL2, 1000.0}}) {
    ScenarioConfig cfg;
    cfg.name = "replay";
    cfg.seed = 3;
    cfg.duration = from_millis(5000);
    cfg.bottleneck = {1e7, from_millis(1)};
    FlowSpec f;
    f.algo = CcAlgo::Eecn;
    f.src = "c1";
    f.dst = "s1";
    f.size_bytes = 16000;
    cfg.flows = {f};
    cfg.forced_marks = {{"r1", level, 0, from_millis(3)}};
    auto world = build_dumbbell(cfg);
    const SimReport rep = world->run();
    ok &= rep.flows.at(0).completed;
    ok &= world->initiator(0).outcome().observed_level == level;
    ok &= initial_cwnd(world->initiator(0).outcome(), 1000) == want;
  }

  verdict(6, ok, "flag sequences and 10/5/1 initial windows reproduced");
  EXPECT_TRUE(ok);
}

// --- 7. coexistence ------------------------------------------------------------

TEST(Acceptance, C07_Coexistence) {
  bool eecn_via_ce = false;
  bool ecn_via_cl2 = false;
  {
    // Two-level flow crossing a classic-mode router that stamps CE.
    ScenarioConfig cfg;
    cfg.name = "coexist-eecn";
    cfg.topology = Topology::MultiHop;
    cfg.seed = 5;
    cfg.duration = from_millis(10'000);
    cfg.bottleneck = {1e7, from_millis(1)};
    FlowSpec f;
    f.algo = CcAlgo::Eecn;
    f.src = "c1";
    f.dst = "s1";
    f.size_bytes = 60'000;
    cfg.flows = {f};
    cfg.forced_marks = {{"r2", CongestionLevel::CL2, from_millis(10), from_millis(40)}};
    auto world = build_multihop(cfg);
    world->trace().enable(true);
    const SimReport rep = world->run();
    bool reacted = false;
    for (const auto& row : world->trace().rows())
      if (row.event == TraceEvent::Echo &&
          row.detail.find("level=CL2;dir=rx") != std::string::npos)
        reacted = true;
    eecn_via_ce = rep.flows.at(0).completed && rep.flows.at(0).marks_cl2 > 0 &&
                  reacted;
  }
  {
    // Classic flow crossing a two-level router that upgrades to (1,1).
    ScenarioConfig cfg;
    cfg.name = "coexist-ecn";
    cfg.topology = Topology::MultiHop;
    cfg.seed = 5;
    cfg.duration = from_millis(10'000);
    cfg.bottleneck = {1e7, from_millis(1)};
    FlowSpec f;
    f.algo = CcAlgo::NewRenoEcn;
    f.src = "c1";
    f.dst = "s1";
    f.size_bytes = 60'000;
    cfg.flows = {f};
    cfg.forced_marks = {{"r1", CongestionLevel::CL2, from_millis(10), from_millis(40)}};
    auto world = build_multihop(cfg);
    world->trace().enable(true);
    const SimReport rep = world->run();
    bool reacted = false;
    for (const auto& row : world->trace().rows())
      if (row.event == TraceEvent::Echo &&
          row.detail.find("level=CE;dir=rx") != std::string::npos)
        reacted = true;
    ecn_via_cl2 = rep.flows.at(0).completed && rep.flows.at(0).marks_cl2 > 0 &&
                  reacted;
  }
  verdict(7, eecn_via_ce && ecn_via_cl2,
          "CE read as severe level by the two-level sender; upgraded (1,1) "
          "read as CE by the classic sender");
  EXPECT_TRUE(eecn_via_ce);
  EXPECT_TRUE(ecn_via_cl2);
}

// --- 8. fairness ----------------------------------------------------------------

TEST(Acceptance, C08_Fairness) {
  ScenarioConfig cfg;
  cfg.name = "fairness";
  cfg.seed = 1;
  cfg.duration = from_millis(30'000);
  cfg.bottleneck = {1e7, from_millis(5)};
  cfg.queue.red_max_p = 0.3;
  cfg.queue.red_qw = 0.01;
  for (int i = 1; i <= 3; ++i) {
    FlowSpec f;
    f.algo = CcAlgo::Eecn;
    f.src = "c" + std::to_string(i);
    f.dst = "s" + std::to_string(i);
    f.size_bytes = 50'000'000;  // spans the whole run
    f.start = from_millis(50);
    f.cls = FlowClass::Elephant;
    cfg.flows.push_back(f);
  }
  auto world = build_dumbbell(cfg);
  const SimReport rep = world->run();
  const bool pass = rep.jain_steady >= 0.9;
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "three long flows share the bottleneck with Jain %.4f over "
                "[%g s, %g s]",
                rep.jain_steady, rep.steady_window_s[0], rep.steady_window_s[1]);
  verdict(8, pass, buf);
  EXPECT_TRUE(pass);
}

// --- 9. threshold sensitivity ----------------------------------------------------

TEST(Acceptance, C09_ThresholdSensitivity) {
  const ScenarioConfig cfg = load_scenario(scenario_path("dumbbell-desk.json"));
  const SweepResult sweep =
      run_sweep(cfg, {{0.5, 0.7}, {0.3, 0.5}, {0.2, 0.4}});
  ASSERT_EQ(sweep.rows.size(), 3u);
  const auto& r = sweep.rows;
  const bool drops_dir =
      r[0].total_drops <= r[1].total_drops && r[1].total_drops <= r[2].total_drops;
  const bool delay_dir = r[0].sf_delay_s >= r[1].sf_delay_s - 1e-12 &&
                         r[1].sf_delay_s >= r[2].sf_delay_s - 1e-12;
  // Lowering the pair from the default must not reduce marking and must not
  // lengthen the bottleneck sojourn.
  const bool marks_dir = r[1].total_marks <= r[2].total_marks;
  auto bottleneck_sojourn = [&cfg](double th1, double th2) {
    ScenarioConfig c = cfg;
    c.queue.th1 = th1;
    c.queue.th2 = th2;
    auto world = build_world(c);
    const SimReport rep = world->run();
    for (const auto& q : rep.queues)
      if (q.queue_id == "r1->r2") return q.mean_sojourn_s;
    return 0.0;
  };
  const bool sojourn_dir =
      bottleneck_sojourn(0.3, 0.5) >= bottleneck_sojourn(0.2, 0.4) - 1e-12;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "drops %llu/%llu/%llu non-decreasing; short-flow delay "
                "%.2f/%.2f/%.2f ms non-increasing; marks %llu->%llu",
                (unsigned long long)r[0].total_drops,
                (unsigned long long)r[1].total_drops,
                (unsigned long long)r[2].total_drops, r[0].sf_delay_s * 1e3,
                r[1].sf_delay_s * 1e3, r[2].sf_delay_s * 1e3,
                (unsigned long long)r[1].total_marks,
                (unsigned long long)r[2].total_marks);
  verdict(9, drops_dir && delay_dir && marks_dir && sojourn_dir, buf);
  EXPECT_TRUE(drops_dir);
  EXPECT_TRUE(delay_dir);
  EXPECT_TRUE(marks_dir);
  EXPECT_TRUE(sojourn_dir);
}

// --- 10. property suites ----------------------------------------------------------

int level_rank(const std::string& cp) {
  if (cp == "CL2") return 2;
  if (cp == "CL1") return 1;
  return 0;
}

std::map<std::string, std::string> parse_detail(const std::string& detail) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < detail.size()) {
    const auto semi = detail.find(';', pos);
    const std::string item = detail.substr(pos, semi - pos);
    const auto eq = item.find('=');
    if (eq != std::string::npos) kv[item.substr(0, eq)] = item.substr(eq + 1);
    if (semi == std::string::npos) break;
    pos = semi + 1;
  }
  return kv;
}

TEST(Acceptance, C10_PropertySuites) {
  // Determinism: identical seeds give byte-identical traces.
  ScenarioConfig cfg = load_scenario(scenario_path("dumbbell-desk.json"));
  cfg.duration = from_millis(20'000);
  std::string first;
  {
    auto w = build_dumbbell(cfg);
    w->trace().enable(true);
    w->run();
    first = w->trace().to_csv();
  }
  auto world = build_dumbbell(cfg);
  world->trace().enable(true);
  const SimReport rep = world->run();
  const std::string second = world->trace().to_csv();
  const bool deterministic = !first.empty() && first == second;

  // Conservation over the full run.
  const bool conserved = rep.ledger.injected ==
                         rep.ledger.delivered + rep.ledger.dropped +
                             rep.ledger.resident;

  // Scan the trace for severity downgrades, window-floor violations and the
  // three-ACK echo budget.
  bool no_downgrade = true;
  bool cwnd_floor = true;
  std::map<std::uint32_t, long> cl1_budget;
  bool echo_budget = true;
  long mark_rows = 0;
  for (const auto& row : world->trace().rows()) {
    const auto kv = parse_detail(row.detail);
    if (row.event == TraceEvent::Mark) {
      ++mark_rows;
      if (level_rank(kv.at("cp_after")) < level_rank(kv.at("cp_before")))
        no_downgrade = false;
      if (kv.at("cp_after") == "CL1") cl1_budget[row.flow] += 3;
    } else if (row.event == TraceEvent::Echo) {
      if (kv.count("level") && kv.at("level") == "CL1" &&
          row.detail.find("dir=tx") != std::string::npos) {
        if (--cl1_budget[row.flow] < 0) echo_budget = false;
      }
    }
    if (kv.count("cwnd")) {
      if (std::stod(kv.at("cwnd")) < 1000.0 - 1e-6) cwnd_floor = false;
    }
  }

  // Codepoint round-trip over all four values.
  bool roundtrip = true;
  for (const auto m :
       {IpEecn::NotCapable, IpEecn::Capable, IpEecn::CL1, IpEecn::CL2})
    roundtrip &= decode_ip_eecn(encode_ip_eecn(m)) == m;
  for (bool ce : {false, true})
    for (bool ect : {false, true}) {
      const EcnCodepoint cp{ce, ect};
      roundtrip &= encode_ip_ecn(decode_ip_ecn(cp)) == cp;
    }

  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "trace hash stable, ledger %llu = %llu+%llu+%llu, %ld marks "
                "with no downgrade, window floor held, CL1 echo budget held, "
                "codepoints round-trip",
                (unsigned long long)rep.ledger.injected,
                (unsigned long long)rep.ledger.delivered,
                (unsigned long long)rep.ledger.dropped,
                (unsigned long long)rep.ledger.resident, mark_rows);
  const bool pass = deterministic && conserved && no_downgrade && cwnd_floor &&
                    echo_budget && roundtrip;
  verdict(10, pass, buf);
  EXPECT_TRUE(deterministic);
  EXPECT_TRUE(conserved);
  EXPECT_TRUE(no_downgrade);
  EXPECT_TRUE(cwnd_floor);
  EXPECT_TRUE(echo_budget);
  EXPECT_TRUE(roundtrip);
  EXPECT_GT(mark_rows, 0);
}

}  // namespace
