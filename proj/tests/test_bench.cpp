#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "svs/bench/experiments.hpp"
#include "svs/bench/report.hpp"
#include "svs/bench/topology.hpp"
#include "svs/core/error.hpp"

using namespace svs;
using namespace svs::bench;

namespace {

scene::ScenarioConfig sim_scenario(int cameras, int density, double duration,
                                   uint64_t seed) {
  scene::ScenarioConfig cfg;
  for (int i = 1; i <= cameras; ++i) {
    scene::CameraConfig cam;
    cam.camera_id = i;
    cfg.cameras.push_back(cam);
  }
  cfg.duration = duration;
  cfg.density_level = density;
  cfg.seed = seed;
  cfg.feature_dim = 16;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("summarize_middle applies the central-batch methodology") {
  SUBCASE("values 1..150 with 25/25 trim") {
    std::vector<double> v;
    for (int i = 1; i <= 150; ++i) v.push_back(i);
    const auto s = summarize_middle(v, 25, 25);
    CHECK(s.count == 100);
    CHECK(s.mean == doctest::Approx(75.5));
    CHECK(s.min == doctest::Approx(26));
    CHECK(s.max == doctest::Approx(125));
  }
  SUBCASE("120 samples with 20/20 trim summarize the middle 80") {
    std::vector<double> v;
    for (int i = 1; i <= 120; ++i) v.push_back(i);
    CHECK(summarize_middle(v, 20, 20).count == 80);
  }
  SUBCASE("all-equal samples have zero spread") {
    std::vector<double> v(40, 3.25);
    const auto s = summarize_middle(v, 5, 5);
    CHECK(s.stddev == doctest::Approx(0.0));
    CHECK(s.min == s.max);
  }
  SUBCASE("too few samples name the required minimum") {
    std::vector<double> v(10, 1.0);
    CHECK_THROWS_WITH_AS(summarize_middle(v, 6, 6),
                         doctest::Contains("at least 13"), ValidationError);
  }
  SUBCASE("exactness against a naive long-double oracle") {
    std::vector<double> v;
    for (int i = 0; i < 333; ++i) v.push_back(std::sin(i * 0.7) * 1e3);
    const auto s = summarize_middle(v, 41, 17);
    long double sum = 0;
    for (int i = 41; i < 333 - 17; ++i) sum += v[i];
    const double mean = double(sum / (333 - 41 - 17));
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("compute_throughput") {
  CHECK(compute_throughput(900, 60.0) == doctest::Approx(15.0));
  CHECK(compute_throughput(0, 60.0) == doctest::Approx(0.0));
  // 16 nodes x 990 frames in 60 s: 264 system-wide, 16.5 per node
  const double total = compute_throughput(16 * 990, 60.0);
  CHECK(total == doctest::Approx(264.0));
  CHECK(total / 16.0 == doctest::Approx(16.5));
  CHECK_THROWS_AS(compute_throughput(1, 0.0), ValidationError);
}

TEST_CASE("sim world: stable single camera meets the cost model") {
  const auto sc = scene::Scenario::build(sim_scenario(1, 2, 20, 42));
  WorldConfig wc;
  wc.label_node_count = 1;
  wc.label_density = 2;
  SimWorld world(sc, wc);
  world.run_to_drain();

  REQUIRE(world.samples().size() == 20);
  CHECK(world.frames_completed() == 600);
  CHECK(world.emitted_batches() == world.expected_batches());
  for (const auto& s : world.samples()) {
    // five stages at c0 + c1*density = 90 ms each, plus queueing slack
    CHECK(s.latency_s >= 0.45 - 1e-9);
    CHECK(s.latency_s < 0.7);
    CHECK(s.detections == doctest::Approx(2.0));
  }
  // server received two records per batch
  CHECK(world.server().row_count() == 40);
  CHECK(world.server().rows()[0].global_id >= 1001);
}

TEST_CASE("sim world with zero density has fixed-cost latency and no records") {
  const auto sc = scene::Scenario::build(sim_scenario(1, 0, 10, 42));
  WorldConfig wc;
  SimWorld world(sc, wc);
  world.run_to_drain();
  REQUIRE(world.samples().size() == 10);
  for (const auto& s : world.samples()) {
    CHECK(s.latency_s == doctest::Approx(0.25).epsilon(0.02));  // 5 x 50 ms
    CHECK(s.detections == doctest::Approx(0.0));
  }
  CHECK(world.server().row_count() == 0);
}

TEST_CASE("sim world is deterministic across repeated runs") {
  auto run_once = [] {
    const auto sc = scene::Scenario::build(sim_scenario(2, 3, 15, 7));
    WorldConfig wc;
    wc.subscribers = 2;
    SimWorld world(sc, wc);
    world.run_to_drain();
    std::string digest;
    for (const auto& s : world.samples())
      digest += std::to_string(s.camera_id) + ":" + std::to_string(s.batch_index) +
                ":" + format_double(s.latency_s) + ":" + format_double(s.ts) + ";";
    digest += "|rows=" + std::to_string(world.server().row_count());
    return digest;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("object anomaly takes the fast path ahead of record emission") {
  auto cfg = sim_scenario(1, 2, 20, 99);
  scene::GroundTruthEvent ev;
  ev.event_id = 5;
  ev.kind = scene::EventKind::object_anomaly;
  ev.camera_id = 1;
  ev.appearance_time = 6.0;
  ev.duration = 2.0;
  ev.object_class = "knife";
  cfg.events.push_back(ev);
  const auto sc = scene::Scenario::build(cfg);

  WorldConfig wc;
  wc.subscribers = 3;
  SimWorld world(sc, wc);
  world.run_to_drain();

  REQUIRE(!world.alert_traces().empty());
  long checked = 0;
  for (const auto& trace : world.alert_traces()) {
    REQUIRE(trace.kind == "object");
    const double emit = world.emit_time(trace.camera_id, trace.batch_index);
    REQUIRE(emit > 0);
    CHECK(trace.enqueue_time < emit);  // broker enqueue precedes emission
    ++checked;
  }
  CHECK(checked >= 2);  // event spans two batches

  // every subscriber got the alert; object alerts never touch the server
  long object_receipts = 0;
  for (const auto& r : world.receipts()) {
    CHECK(r.kind == "object");
    CHECK(r.topic == "anomaly/object/knife");
    ++object_receipts;
  }
  CHECK(object_receipts == 3 * checked);
}

TEST_CASE("behavior anomaly is confirmed at the server then fanned out") {
  auto cfg = sim_scenario(1, 2, 40, 17);
  scene::GroundTruthEvent ev;
  ev.event_id = 8;
  ev.kind = scene::EventKind::behavior_anomaly;
  ev.camera_id = 1;
  ev.appearance_time = 8.0;
  ev.duration = 10.0;
  ev.person_uid = 0;  // bind to whoever is present
  cfg.events.push_back(ev);
  const auto sc = scene::Scenario::build(cfg);

  WorldConfig wc;
  wc.subscribers = 2;
  wc.ainode.instrument_hops = true;
  SimWorld world(sc, wc);
  world.run_to_drain();

  long behavior_receipts = 0;
  for (const auto& r : world.receipts()) {
    if (r.kind != "behavior") continue;
    ++behavior_receipts;
    CHECK(r.topic == "anomaly/behavior");
    // confirmation takes two additional scored keyframes after the first
    CHECK(r.receipt_time - ev.appearance_time > 2.0 * 20 / 30.0);
    CHECK(r.hops.contains("t_server_ingest"));  // routed via the server
    CHECK(r.origin_time >= ev.appearance_time - 1.5);
  }
  CHECK(behavior_receipts == 2);  // one maximal run, two subscribers
  CHECK(world.server().notifications_sent() == 1);
}

TEST_CASE("stage failures drop the batch and keep the pipeline alive") {
  struct FailingDetector : ainode::Detector {
    std::vector<ainode::Detection> detect(const scene::FrameTruth& t) override {
      if (t.frame_index >= 60 && t.frame_index < 90)
        throw StageError("synthetic stage failure", t.camera_id, 2);
      ainode::ReferenceDetector ref(scenario);
      return ref.detect(t);
    }
    const scene::Scenario* scenario = nullptr;
  };

  const auto sc = scene::Scenario::build(sim_scenario(1, 1, 10, 5));
  WorldConfig wc;
  wc.stage_factory = [](const scene::Scenario* s, int) {
    ainode::StageSet set = ainode::StageSet::reference(s);
    auto det = std::make_unique<FailingDetector>();
    det->scenario = s;
    set.detector = std::move(det);
    return set;
  };
  SimWorld world(sc, wc);
  world.run_to_drain();
  CHECK(world.batches_dropped() == 1);   // batch 2 (frames 60..89)
  CHECK(world.emitted_batches() == 9);   // the other nine flow through
}

TEST_CASE("mini load-stress sweep: shape checks and per-cell summaries") {
  ExperimentConfig cfg;
  cfg.kind = "load_stress";
  cfg.node_counts = {1, 2};
  cfg.density_levels = {0, 2, 5};
  cfg.duration = 30;
  cfg.warmup_batches = 5;
  cfg.cooldown_batches = 5;
  cfg.feature_dim = 8;
  cfg.seed = 11;

  const auto result = run_load_stress(cfg);
  CHECK(result.check_failures.empty());
  REQUIRE(result.cells.size() == 6);
  REQUIRE(result.rows.size() == 6 * 30);

  double lat_1_0 = 0, lat_2_5 = 0;
  for (const auto& c : result.cells) {
    CHECK_FALSE(c.failed);
    CHECK(c.throughput_per_node_fps <= 30.5);
    if (c.node_count == 1 && c.density == 0) lat_1_0 = c.latency.mean;
    if (c.node_count == 2 && c.density == 5) lat_2_5 = c.latency.mean;
  }
  CHECK(lat_1_0 == doctest::Approx(0.25).epsilon(0.05));
  CHECK(lat_2_5 > lat_1_0);

  // per-node latency must grow with density for a fixed node count
  std::map<int, double> prev;
  for (const auto& c : result.cells) {
    if (prev.count(c.node_count)) CHECK(c.latency.mean >= prev[c.node_count]);
    prev[c.node_count] = c.latency.mean;
  }
}

TEST_CASE("load-stress reports are byte-identical across runs and jobs") {
  ExperimentConfig cfg;
  cfg.kind = "load_stress";
  cfg.node_counts = {1, 2};
  cfg.density_levels = {1, 3};
  cfg.duration = 20;
  cfg.warmup_batches = 4;
  cfg.cooldown_batches = 4;
  cfg.feature_dim = 8;
  cfg.seed = 3;

  const std::string dir1 = "build/test-report-a";
  const std::string dir2 = "build/test-report-b";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);

  cfg.jobs = 1;
  emit_report(run_load_stress(cfg), dir1);
  cfg.jobs = 2;
  emit_report(run_load_stress(cfg), dir2);

  for (const char* name : {"samples.csv", "summary_long.csv", "summary.txt"})
    CHECK(slurp(dir1 + "/" + std::string(name)) ==
          slurp(dir2 + "/" + std::string(name)));
}

TEST_CASE("mini endurance: minute samples, accounting, spike co-location") {
  ExperimentConfig cfg;
  cfg.kind = "endurance";
  cfg.node_counts = {2};
  cfg.endurance_hours = 1.0;  // 60 minutes
  cfg.feature_dim = 8;
  cfg.seed = 23;
  // background level 1 with a 3-minute level-9 spike mid-run
  cfg.density_timeline = {{0.0, 1}, {1800.0, 9}, {1980.0, 1}};

  const auto result = run_endurance(cfg);
  CHECK(result.check_failures.empty());
  REQUIRE(result.minutes.size() == 60);

  long batches_total = 0;
  for (const auto& m : result.minutes) batches_total += m.batches;
  // 2 cameras x 3600 s x 30 fps / 30 frames: every batch lands in a minute
  CHECK(batches_total == 7200);

  // latency peak co-located with the density peak within +-2 samples
  long density_peak = 0, latency_peak = 0;
  double best_d = -1, best_l = -1;
  for (const auto& m : result.minutes) {
    if (m.detections > best_d) {
      best_d = m.detections;
      density_peak = m.minute;
    }
    if (m.latency_s > best_l) {
      best_l = m.latency_s;
      latency_peak = m.minute;
    }
  }
  CHECK(std::abs(latency_peak - density_peak) <= 2);
}

TEST_CASE("mini pcp: behavioral exceeds object and hops telescope") {
  ExperimentConfig cfg;
  cfg.kind = "pcp";
  cfg.node_counts = {4};
  cfg.runs = 3;
  cfg.subscribers = 2;
  cfg.feature_dim = 8;
  cfg.seed = 29;
  cfg.pcp_event_min_s = 12;
  cfg.pcp_event_max_s = 20;

  const auto result = run_pcp(cfg);
  CHECK(result.check_failures.empty());
  REQUIRE(result.samples.size() == 2 * 3 * 2);  // kinds x runs x subscribers

  double object_mean = -1, behavior_mean = -1;
  for (const auto& c : result.cells) {
    if (c.kind == "object") object_mean = c.stats.mean;
    if (c.kind == "behavior") behavior_mean = c.stats.mean;
    CHECK(c.lost == 0);
  }
  REQUIRE(object_mean > 0);
  REQUIRE(behavior_mean > 0);
  CHECK(behavior_mean - object_mean >= 2.0 * 20 / 30.0);  // 2 S / fps

  for (const auto& s : result.samples) {
    CHECK_FALSE(s.lost);
    CHECK(s.pcp_latency > 0);
    CHECK(std::abs(s.hop_sum - s.pcp_latency) <= 0.05 * s.pcp_latency);
    // ingress alone puts a floor under every sample
    CHECK(s.pcp_latency > 3.0);
  }
  // matched pairs on one topology: behavior > object run by run
  std::map<long, double> object_by_run, behavior_by_run;
  for (const auto& s : result.samples) {
    auto& slot = s.kind == "object" ? object_by_run : behavior_by_run;
    if (!slot.count(s.run)) slot[s.run] = s.pcp_latency;
  }
  for (const auto& [run, obj] : object_by_run)
    CHECK(behavior_by_run.at(run) > obj);
}

TEST_CASE("emit_report writes the spec column order and re-runs identically") {
  ExperimentConfig cfg;
  cfg.kind = "load_stress";
  cfg.node_counts = {1};
  cfg.density_levels = {1};
  cfg.duration = 12;
  cfg.warmup_batches = 2;
  cfg.cooldown_batches = 2;
  cfg.feature_dim = 8;

  const auto result = run_load_stress(cfg);
  const std::string dir = "build/test-report-c";
  std::filesystem::remove_all(dir);
  const auto files = emit_report(result, dir);
  REQUIRE(files.size() == 3);

  const std::string csv = slurp(dir + "/samples.csv");
  CHECK(csv.rfind("experiment,node_count,density,batch,latency_s,"
                  "throughput_fps,detections,ts\n", 0) == 0);
  const std::string again_dir = "build/test-report-d";
  std::filesystem::remove_all(again_dir);
  emit_report(result, again_dir);
  CHECK(slurp(dir + "/samples.csv") == slurp(again_dir + "/samples.csv"));

  // report summary round trip
  const std::string summary = summarize_samples_csv(dir + "/samples.csv");
  CHECK(summary.find("nodes density") != std::string::npos);
  CHECK(summary.find("1 1 ") != std::string::npos);
}

TEST_CASE("experiment config validation and json round trip") {
  ExperimentConfig cfg;
  cfg.node_counts = {20};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("16"), ValidationError);
  cfg.node_counts = {4};
  cfg.density_levels = {11};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.density_levels = {3};
  cfg.warmup_batches = 80;
  cfg.cooldown_batches = 80;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  ExperimentConfig ok;
  ok.kind = "pcp";
  ok.runs = 7;
  ok.subscribers = 2;
  const auto back = ExperimentConfig::from_json(ok.to_json());
  CHECK(back.kind == "pcp");
  CHECK(back.runs == 7);
  CHECK(back.subscribers == 2);
  CHECK(back.node_counts == ok.node_counts);
}
