#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "svs/core/rng.hpp"
#include "svs/server/server_node.hpp"

using namespace svs;
using namespace svs::server;

namespace {

MetadataRecord human(double t, int camera, std::vector<float> feature,
                     long local_id = 1) {
  MetadataRecord r;
  r.record_time = round_ms(t);
  r.camera_id = camera;
  r.class_id = 0;
  r.bbox = {100, 100, 50, 140};
  r.feature = std::move(feature);
  r.local_id = local_id;
  return r;
}

MetadataRecord scored(double t, int camera, double score) {
  auto r = human(t, camera, {1.0f, 0.0f});
  r.anomaly_score = score;
  return r;
}

}  // namespace

TEST_CASE("ingest stores valid human records and assigns global ids") {
  ServerNodeCore core(ServerConfig{});
  const auto res = core.ingest(human(1.0, 1, {1.0f, 0.0f}), 1.0);
  CHECK(res.stored);
  CHECK(res.global_id == 1001);  // ids start at 1001
  CHECK(core.row_count() == 1);
  CHECK(core.rows()[0].global_id == 1001);
}

TEST_CASE("ingest rejections: score ceiling, features, zero norm") {
  ServerNodeCore core(ServerConfig{});
  SUBCASE("anomaly score above 40") {
    auto r = scored(1.0, 1, 41.0);
    const auto res = core.ingest(r, 1.0);
    CHECK_FALSE(res.stored);
    CHECK(res.reject_reason.find("40") != std::string::npos);
    CHECK(core.row_count() == 0);
    CHECK(core.rejected() == 1);
  }
  SUBCASE("zero-norm feature") {
    const auto res = core.ingest(human(1.0, 1, {0.0f, 0.0f}), 1.0);
    CHECK_FALSE(res.stored);
    CHECK(core.rejected() == 1);
  }
  SUBCASE("non-human record with a feature") {
    auto r = human(1.0, 1, {1.0f, 0.0f});
    r.class_id = 43;
    const auto res = core.ingest(r, 1.0);
    CHECK_FALSE(res.stored);
  }
  SUBCASE("non-human record without feature is fine") {
    MetadataRecord r;
    r.record_time = 1.0;
    r.camera_id = 1;
    r.class_id = 43;
    r.bbox = {10, 10, 60, 60};
    const auto res = core.ingest(r, 1.0);
    CHECK(res.stored);
    CHECK(res.global_id == 0);  // no identity for objects
  }
}

TEST_CASE("cosine re-id: identical reuses, orthogonal mints, 0.7071 reuses") {
  ServerNodeCore core(ServerConfig{});
  const auto a = core.ingest(human(1.0, 1, {1.0f, 0.0f, 0.0f, 0.0f}), 1.0);
  CHECK(a.global_id == 1001);

  // identical vector: cos = 1.0 -> reuse
  const auto b = core.ingest(human(2.0, 2, {1.0f, 0.0f, 0.0f, 0.0f}), 2.0);
  CHECK(b.global_id == 1001);

  // orthogonal: cos = 0.0 < 0.7 -> new id
  const auto c = core.ingest(human(3.0, 1, {0.0f, 1.0f, 0.0f, 0.0f}), 3.0);
  CHECK(c.global_id == 1002);

  // [1,1,0,0]/sqrt(2) vs [1,0,0,0]: cos = 0.70710678 >= 0.7 -> reuse
  const float inv = 1.0f / std::sqrt(2.0f);
  ServerNodeCore fresh(ServerConfig{});
  fresh.ingest(human(1.0, 1, {1.0f, 0.0f, 0.0f, 0.0f}), 1.0);
  const auto d = fresh.ingest(human(2.0, 2, {inv, inv, 0.0f, 0.0f}), 2.0);
  CHECK(d.global_id == 1001);
}

TEST_CASE("re-id horizon: identities older than H are not matched") {
  ServerConfig cfg;
  cfg.horizon_s = 10.0;
  ServerNodeCore core(cfg);
  core.ingest(human(0.0, 1, {1.0f, 0.0f}), 0.0);
  const auto res = core.ingest(human(100.0, 1, {1.0f, 0.0f}), 100.0);
  CHECK(res.global_id == 1002);  // gallery entry expired
}

TEST_CASE("argmax stability: pre-normalization scaling changes nothing") {
  Rng rng(55);
  std::vector<std::vector<float>> base;
  for (int i = 0; i < 40; ++i) {
    std::vector<float> f(8);
    for (auto& v : f) v = float(rng.normal());
    base.push_back(std::move(f));
  }
  auto run = [&](double scale) {
    ServerNodeCore core(ServerConfig{});
    std::vector<long> ids;
    for (size_t i = 0; i < base.size(); ++i) {
      auto f = base[i];
      double norm2 = 0;
      for (auto& v : f) {
        v = float(v * scale);
        norm2 += double(v) * v;
      }
      for (auto& v : f) v = float(v / std::sqrt(norm2));
      ids.push_back(core.ingest(human(double(i), 1, f), double(i)).global_id);
    }
    return ids;
  };
  CHECK(run(1.0) == run(7.5));
  CHECK(run(1.0) == run(0.02));
}

TEST_CASE("behavioral confirmation: three consecutive sub-threshold scores") {
  SUBCASE("[10, 10, 10] notifies on the third") {
    ServerNodeCore core(ServerConfig{});
    CHECK_FALSE(core.ingest(scored(1.0, 1, 10), 1.0).notification);
    CHECK_FALSE(core.ingest(scored(2.0, 1, 10), 2.0).notification);
    const auto res = core.ingest(scored(3.0, 1, 10), 3.0);
    REQUIRE(res.notification);
    CHECK(res.notification->camera_id == 1);
    CHECK(res.notification->origin_time == doctest::Approx(1.0));
    CHECK(core.notifications_sent() == 1);
  }
  SUBCASE("[40, 40, 10] does not notify") {
    ServerNodeCore core(ServerConfig{});
    core.ingest(scored(1.0, 1, 40), 1.0);
    core.ingest(scored(2.0, 1, 40), 2.0);
    CHECK_FALSE(core.ingest(scored(3.0, 1, 10), 3.0).notification);
  }
  SUBCASE("[10, 40, 10] does not notify (run broken)") {
    ServerNodeCore core(ServerConfig{});
    core.ingest(scored(1.0, 1, 10), 1.0);
    core.ingest(scored(2.0, 1, 40), 2.0);
    CHECK_FALSE(core.ingest(scored(3.0, 1, 10), 3.0).notification);
  }
  SUBCASE("one notification per maximal run, re-armed by a high score") {
    ServerNodeCore core(ServerConfig{});
    long notes = 0;
    const double seq[] = {10, 10, 10, 10, 10, 40, 10, 10, 10};
    double t = 1;
    for (double s : seq)
      if (core.ingest(scored(t++, 1, s), t).notification) ++notes;
    CHECK(notes == 2);
  }
  SUBCASE("runs are tracked per camera") {
    ServerNodeCore core(ServerConfig{});
    long notes = 0;
    for (int i = 0; i < 3; ++i) {
      if (core.ingest(scored(10 + i, 1, 10), 10 + i).notification) ++notes;
      if (core.ingest(scored(10 + i, 2, 40), 10 + i).notification) ++notes;
    }
    CHECK(notes == 1);
  }
  SUBCASE("records of one keyframe count as one observation") {
    ServerNodeCore core(ServerConfig{});
    long notes = 0;
    // two persons per keyframe -> two records sharing record_time and score
    for (int batch = 0; batch < 3; ++batch) {
      const double t = 1.0 + batch;
      auto r1 = scored(t, 1, 10);
      auto r2 = scored(t, 1, 10);
      r2.local_id = 2;
      r2.feature = {0.0f, 1.0f};
      if (core.ingest(r1, t).notification) ++notes;
      if (core.ingest(r2, t).notification) ++notes;
    }
    CHECK(notes == 1);  // fires on the third keyframe, not the sixth record
  }
}

TEST_CASE("exhaustive 2^10 confirmation sequences match the run oracle") {
  for (unsigned mask = 0; mask < 1024; ++mask) {
    ServerNodeCore core(ServerConfig{});
    std::vector<double> scores;
    long notes = 0;
    for (int bit = 0; bit < 10; ++bit) {
      const double s = (mask >> bit) & 1 ? 10.0 : 40.0;
      scores.push_back(s);
      if (core.ingest(scored(1.0 + bit, 1, s), 1.0 + bit).notification) ++notes;
    }
    CHECK(notes == testing::maximal_subthreshold_runs(scores, 20.0));
  }
}

TEST_CASE("statistics: headcounts, occupancy, heatmap conservation") {
  ServerConfig cfg;
  cfg.camera_tags = {{1, "hallway"}, {2, "parking"}};
  cfg.camera_dims = {{1, {1280, 720}}, {2, {1280, 720}}};
  ServerNodeCore core(cfg);

  SUBCASE("five records of one person make headcount 1") {
    for (int i = 0; i < 5; ++i)
      core.ingest(human(1.0 + i, 1, {1.0f, 0.0f}), 1.0 + i);
    const auto report = core.statistics(0, 10);
    CHECK(report.headcount.at(1) == 1);
    CHECK(report.records == 5);
    long mass = 0;
    for (long c : report.heatmap.at(1)) mass += c;
    CHECK(mass == 5);  // heatmap mass equals record count
    CHECK(report.occupancy.at("hallway") == doctest::Approx(0.1));
  }
  SUBCASE("empty interval is a valid all-zero report") {
    const auto report = core.statistics(100, 200);
    CHECK(report.records == 0);
    for (const auto& [cam, n] : report.headcount) CHECK(n == 0);
  }
}

TEST_CASE("statistics match a brute-force full scan on seeded ingest") {
  Rng rng(777);
  ServerConfig cfg;
  cfg.camera_dims = {{1, {1280, 720}}, {2, {1280, 720}}};
  ServerNodeCore core(cfg);
  std::vector<MetadataRecord> dump;
  // 8 identities with orthogonal features across 2 cameras
  for (int i = 0; i < 300; ++i) {
    std::vector<float> f(8, 0.0f);
    f[rng.uniform_int(8)] = 1.0f;
    auto r = human(double(i) * 0.5, 1 + int(rng.uniform_int(2)), f);
    r.bbox = {rng.uniform(0, 1200), rng.uniform(0, 640), 50, 70};
    dump.push_back(r);
    core.ingest(r, r.record_time);
  }
  const double t0 = 30, t1 = 100;
  const auto report = core.statistics(t0, t1);

  // Oracle: naive full scan over the retained dump using stored global ids.
  std::map<int, std::set<long>> ids;
  std::map<int, long> count;
  for (size_t i = 0; i < dump.size(); ++i) {
    const auto& stored = core.rows()[i];
    if (stored.record_time < t0 || stored.record_time >= t1) continue;
    ++count[stored.camera_id];
    ids[stored.camera_id].insert(stored.global_id);
  }
  long total = 0;
  for (const auto& [cam, n] : count) total += n;
  CHECK(report.records == total);
  for (const auto& [cam, s] : ids)
    CHECK(report.headcount.at(cam) == long(s.size()));
  long mass = 0;
  for (const auto& [cam, cells] : report.heatmap)
    for (long c : cells) mass += c;
  CHECK(mass == report.records);
}

TEST_CASE("re-id clusters equal the pairwise-cosine oracle (noiseless)") {
  // 6 identities, 120 records interleaved across 3 cameras.
  Rng rng(31337);
  std::vector<std::vector<float>> identity;
  for (int i = 0; i < 6; ++i) {
    std::vector<float> f(16);
    double n2 = 0;
    for (auto& v : f) {
      v = float(rng.normal());
      n2 += double(v) * v;
    }
    for (auto& v : f) v = float(v / std::sqrt(n2));
    identity.push_back(std::move(f));
  }
  ServerNodeCore core(ServerConfig{});
  std::vector<MetadataRecord> dump;
  for (int i = 0; i < 120; ++i) {
    const auto& f = identity[rng.uniform_int(6)];
    auto r = human(double(i), 1 + int(rng.uniform_int(3)), f);
    dump.push_back(r);
    core.ingest(r, r.record_time);
  }
  const auto oracle = testing::cosine_clusters(dump, 0.7);
  REQUIRE(oracle.size() == 6);  // random 16-d unit vectors stay below 0.7

  // Partition by assigned global_id must match the oracle partition.
  std::map<long, std::set<size_t>> by_gid;
  for (size_t i = 0; i < core.rows().size(); ++i)
    by_gid[core.rows()[i].global_id].insert(i);
  REQUIRE(by_gid.size() == oracle.size());
  for (const auto& cluster : oracle) {
    const long gid = core.rows()[*cluster.begin()].global_id;
    CHECK(by_gid.at(gid) == cluster);
  }
}

TEST_CASE("auto-reset at the row cap; the id counter survives") {
  ServerConfig cfg;
  cfg.reset_rows = 1000;  // scaled-down cap, same mechanism
  ServerNodeCore core(cfg);
  long resets = 0;
  for (int i = 0; i < 999; ++i) {
    const auto res = core.ingest(human(double(i), 1, {1.0f, 0.0f}), double(i));
    if (res.reset) ++resets;
  }
  CHECK(resets == 0);
  CHECK(core.row_count() == 999);
  const auto res = core.ingest(human(999.0, 1, {1.0f, 0.0f}), 999.0);
  REQUIRE(res.reset);
  CHECK(res.reset->rows_cleared == 1000);
  CHECK(res.reset->reason == "rows");
  CHECK(core.row_count() == 0);

  // Counter preserved: gallery cleared but the next mint continues.
  const auto after = core.ingest(human(1000.0, 1, {0.0f, 1.0f}), 1000.0);
  CHECK(after.global_id == 1002);  // 1001 was used before the reset
}

TEST_CASE("auto-reset on virtual uptime via tick") {
  ServerNodeCore core(ServerConfig{});
  for (int i = 0; i < 10; ++i)
    core.ingest(human(double(i), 1, {1.0f, 0.0f}), double(i));
  CHECK_FALSE(core.tick(23.9 * 3600).has_value());
  const auto reset = core.tick(24.0 * 3600);
  REQUIRE(reset);
  CHECK(reset->reason == "uptime");
  CHECK(reset->rows_cleared == 10);
  CHECK(core.row_count() == 0);
}

TEST_CASE("audit hook receives reset and notification events") {
  ServerConfig cfg;
  cfg.reset_rows = 5;
  ServerNodeCore core(cfg);
  std::vector<nlohmann::json> events;
  core.audit = [&](const nlohmann::json& j) { events.push_back(j); };
  for (int i = 0; i < 3; ++i) core.ingest(scored(1.0 + i, 1, 10), 1.0 + i);
  for (int i = 0; i < 2; ++i)
    core.ingest(human(5.0 + i, 1, {1.0f, 0.0f}), 5.0 + i);
  REQUIRE(events.size() == 2);
  CHECK(events[0]["event"] == "notification");
  CHECK(events[1]["event"] == "reset");
  CHECK(events[1]["rows_cleared"] == 5);
}
