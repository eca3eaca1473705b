#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "svs/core/error.hpp"
#include "svs/scene/scenario.hpp"

using namespace svs;
using namespace svs::scene;

namespace {

ScenarioConfig one_camera(double duration, int density, uint64_t seed) {
  ScenarioConfig cfg;
  CameraConfig cam;
  cam.camera_id = 1;
  cfg.cameras.push_back(cam);
  cfg.duration = duration;
  cfg.density_level = density;
  cfg.seed = seed;
  return cfg;
}

// Mean-square frame-to-frame displacement of box-relative keypoints for one
// person over [f0, f1). Independent oracle for the scorer's quantity.
double relative_velocity_variance(const Scenario& sc, int cam, long uid,
                                  long f0, long f1) {
  double sum = 0;
  long count = 0;
  for (long f = f0 + 1; f < f1; ++f) {
    const FrameTruth a = sc.frame(cam, f - 1);
    const FrameTruth b = sc.frame(cam, f);
    const PersonState* pa = nullptr;
    const PersonState* pb = nullptr;
    for (const auto& p : a.persons)
      if (p.uid == uid) pa = &p;
    for (const auto& p : b.persons)
      if (p.uid == uid) pb = &p;
    if (!pa || !pb) continue;
    const double acx = pa->bbox[0] + pa->bbox[2] / 2;
    const double acy = pa->bbox[1] + pa->bbox[3] / 2;
    const double bcx = pb->bbox[0] + pb->bbox[2] / 2;
    const double bcy = pb->bbox[1] + pb->bbox[3] / 2;
    for (int j = 0; j < 17; ++j) {
      const double dx = (pb->keypoints[j].x - bcx) - (pa->keypoints[j].x - acx);
      const double dy = (pb->keypoints[j].y - bcy) - (pa->keypoints[j].y - acy);
      sum += dx * dx + dy * dy;
      count += 2;
    }
  }
  return count ? sum / double(count) : 0;
}

}  // namespace

TEST_CASE("validation errors name the offending field") {
  auto cfg = one_camera(10, 3, 1);
  SUBCASE("fps") {
    cfg.cameras[0].fps = 0;
    CHECK_THROWS_WITH_AS(Scenario::build(cfg), doctest::Contains("fps"),
                         ValidationError);
  }
  SUBCASE("duration") {
    cfg.duration = 0;
    CHECK_THROWS_WITH_AS(Scenario::build(cfg), doctest::Contains("duration"),
                         ValidationError);
  }
  SUBCASE("density range") {
    cfg.density_level = 10;
    CHECK_THROWS_WITH_AS(Scenario::build(cfg),
                         doctest::Contains("density_level"), ValidationError);
  }
  SUBCASE("duplicate camera id") {
    cfg.cameras.push_back(cfg.cameras[0]);
    CHECK_THROWS_WITH_AS(Scenario::build(cfg), doctest::Contains("camera_id"),
                         ValidationError);
  }
  SUBCASE("event on unknown camera") {
    GroundTruthEvent ev;
    ev.kind = EventKind::object_anomaly;
    ev.camera_id = 9;
    ev.appearance_time = 1;
    ev.duration = 1;
    ev.object_class = "knife";
    cfg.events.push_back(ev);
    CHECK_THROWS_AS(Scenario::build(cfg), ValidationError);
  }
}

TEST_CASE("density 0 scenario emits only empty frames") {
  const auto sc = Scenario::build(one_camera(10, 0, 7));
  REQUIRE(sc.frame_count(1) == 300);
  for (long f = 0; f < 300; ++f) CHECK(sc.frame(1, f).persons.empty());
}

TEST_CASE("identical config and seed give byte-identical streams") {
  auto cfg = one_camera(34, 3, 7);
  const auto a = Scenario::build(cfg);
  const auto b = Scenario::build(cfg);
  CHECK(a.stream_hash(1, 1000) == b.stream_hash(1, 1000));
  cfg.seed = 8;
  const auto c = Scenario::build(cfg);
  CHECK(a.stream_hash(1, 1000) != c.stream_hash(1, 1000));
}

TEST_CASE("density level realizes the per-batch mean count") {
  // Oracle: count persons per 30-frame batch straight off the generator.
  const auto sc = Scenario::build(one_camera(110, 5, 21));
  const long batches = sc.frame_count(1) / 30;
  REQUIRE(batches >= 100);
  double total = 0;
  for (long b = 0; b < batches; ++b) {
    long in_batch = 0;
    for (long f = b * 30; f < (b + 1) * 30; ++f)
      in_batch += long(sc.frame(1, f).persons.size());
    total += double(in_batch) / 30.0;
  }
  const double mean = total / double(batches);
  CHECK(mean == doctest::Approx(5.0).epsilon(0.1));
  CHECK(mean >= 4.5);
  CHECK(mean <= 5.5);
}

TEST_CASE("reflective bounds keep every box inside the frame") {
  const auto sc = Scenario::build(one_camera(30, 6, 3));
  const auto& cam = sc.config().cameras[0];
  for (long f = 0; f < sc.frame_count(1); f += 7) {
    for (const auto& p : sc.frame(1, f).persons) {
      CHECK(p.bbox[0] >= -1e-9);
      CHECK(p.bbox[1] >= -1e-9);
      CHECK(p.bbox[0] + p.bbox[2] <= cam.width + 1e-9);
      CHECK(p.bbox[1] + p.bbox[3] <= cam.height + 1e-9);
      CHECK(p.bbox[2] > 0);
      CHECK(p.bbox[3] > 0);
    }
  }
}

TEST_CASE("keypoints: exactly 17, visible ones are inside the frame") {
  const auto sc = Scenario::build(one_camera(20, 4, 5));
  const auto& cam = sc.config().cameras[0];
  for (long f = 0; f < sc.frame_count(1); f += 11) {
    for (const auto& p : sc.frame(1, f).persons) {
      REQUIRE(p.keypoints.size() == 17);
      for (const auto& kp : p.keypoints) {
        if (kp.conf > 0) {
          CHECK(kp.x >= 0);
          CHECK(kp.x <= cam.width);
          CHECK(kp.y >= 0);
          CHECK(kp.y <= cam.height);
        }
      }
    }
  }
}

TEST_CASE("feature vectors are unit-norm and stable per person") {
  auto cfg = one_camera(60, 2, 11);
  CameraConfig cam2;
  cam2.camera_id = 2;
  cfg.cameras.push_back(cam2);
  cfg.person_pool = 4;  // closed world so identities move between cameras
  const auto sc = Scenario::build(cfg);

  std::map<long, const std::vector<float>*> seen;
  std::set<long> uids;
  for (int cam = 1; cam <= 2; ++cam) {
    for (long f = 0; f < sc.frame_count(cam); f += 13) {
      for (const auto& p : sc.frame(cam, f).persons) {
        uids.insert(p.uid);
        double norm2 = 0;
        for (float v : *p.feature) norm2 += double(v) * v;
        CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-6);
        auto [it, fresh] = seen.emplace(p.uid, p.feature);
        if (!fresh) CHECK(*it->second == *p.feature);  // exact equality
      }
    }
  }
  // Closed world: nobody beyond the pool ever appears.
  for (long uid : uids) CHECK(uid <= 4);
}

TEST_CASE("object anomaly events embed an extra labeled detection") {
  auto cfg = one_camera(30, 1, 9);
  GroundTruthEvent ev;
  ev.event_id = 42;
  ev.kind = EventKind::object_anomaly;
  ev.camera_id = 1;
  ev.appearance_time = 10.0;
  ev.duration = 5.0;
  ev.object_class = "knife";
  cfg.events.push_back(ev);
  const auto sc = Scenario::build(cfg);

  long first = -1, count = 0;
  for (long f = 0; f < sc.frame_count(1); ++f) {
    const auto ft = sc.frame(1, f);
    if (!ft.objects.empty()) {
      if (first < 0) first = f;
      ++count;
      CHECK(ft.objects[0].class_id == 43);
      CHECK(ft.objects[0].label == "knife");
    }
  }
  REQUIRE(first >= 0);
  // First frame containing the event lands within one frame period of t=10.
  CHECK(std::abs(double(first) / 30.0 - 10.0) <= 1.0 / 30.0 + 1e-9);
  // The event appears in at least ceil(duration*fps) - 1 frames.
  CHECK(count >= long(std::ceil(5.0 * 30.0)) - 1);
}

TEST_CASE("overlapping events are both present") {
  auto cfg = one_camera(30, 1, 9);
  for (int i = 0; i < 2; ++i) {
    GroundTruthEvent ev;
    ev.event_id = i + 1;
    ev.kind = EventKind::object_anomaly;
    ev.camera_id = 1;
    ev.appearance_time = 5.0 + i;
    ev.duration = 10.0;
    ev.object_class = i == 0 ? "knife" : "gun";
    cfg.events.push_back(ev);
  }
  const auto sc = Scenario::build(cfg);
  const auto ft = sc.frame(1, 8 * 30);  // t = 8, inside both windows
  CHECK(ft.objects.size() == 2);
  CHECK(ft.active_event_ids.size() == 2);
}

TEST_CASE("behavior anomaly raises relative keypoint velocity variance") {
  auto cfg = one_camera(40, 3, 13);
  GroundTruthEvent ev;
  ev.event_id = 7;
  ev.kind = EventKind::behavior_anomaly;
  ev.camera_id = 1;
  ev.appearance_time = 20.0;
  ev.duration = 5.0;
  ev.person_uid = 3;
  cfg.events.push_back(ev);
  const auto sc = Scenario::build(cfg);

  // Oracle: measure the generator's own output before and during the event.
  const double v_normal = relative_velocity_variance(sc, 1, 3, 30, 20 * 30 - 30);
  const double v_anom =
      relative_velocity_variance(sc, 1, 3, 20 * 30 + 2, 25 * 30 - 2);
  REQUIRE(v_normal > 0);
  REQUIRE(v_anom > 0);
  // Amplitude scales by 4, variance by ~16 (gait retuning and window
  // truncation move it a little).
  const double factor = v_anom / v_normal;
  CHECK(factor > 8.0);
  CHECK(factor < 40.0);
  // Anomalous flag visible on ground truth during the window only.
  bool flagged_inside = false, flagged_outside = false;
  for (const auto& p : sc.frame(1, 21 * 30).persons)
    if (p.uid == 3) flagged_inside = p.behavior_anomalous;
  for (const auto& p : sc.frame(1, 10 * 30).persons)
    if (p.uid == 3) flagged_outside = p.behavior_anomalous;
  CHECK(flagged_inside);
  CHECK_FALSE(flagged_outside);
}

TEST_CASE("inject_event returns a new scenario; out-of-range events throw") {
  const auto sc = Scenario::build(one_camera(30, 1, 4));
  GroundTruthEvent ev;
  ev.event_id = 1;
  ev.kind = EventKind::object_anomaly;
  ev.camera_id = 1;
  ev.appearance_time = 12.0;
  ev.duration = 2.0;
  ev.object_class = "gun";
  const auto sc2 = sc.with_event(ev);
  CHECK(sc.frame(1, 13 * 30).objects.empty());
  CHECK(sc2.frame(1, 13 * 30).objects.size() == 1);

  ev.appearance_time = 31.0;
  CHECK_THROWS_AS(sc.with_event(ev), RangeError);
}

TEST_CASE("unknown camera is a not-found error") {
  const auto sc = Scenario::build(one_camera(5, 1, 2));
  CHECK_THROWS_AS(sc.frame(9, 0), NotFoundError);
  CHECK_THROWS_AS(sc.frame(1, 100000), RangeError);
}

TEST_CASE("per-camera density schedule overrides the global level") {
  auto cfg = one_camera(60, 2, 6);
  cfg.density_schedule[1] = {{0.0, 1}, {30.0, 4}};
  const auto sc = Scenario::build(cfg);
  CHECK(sc.level_at(1, 10) == 1);
  CHECK(sc.level_at(1, 45 * 30) == 4);
  CHECK(long(sc.frame(1, 10 * 30).persons.size()) == 1);
  CHECK(long(sc.frame(1, 50 * 30).persons.size()) == 4);
}

TEST_CASE("scenario json round-trips through snake_case keys") {
  auto cfg = one_camera(15, 3, 77);
  cfg.detector_noise.miss_rate = 0.1;
  cfg.detector_noise.box_jitter_px = 2.0;
  GroundTruthEvent ev;
  ev.event_id = 5;
  ev.kind = EventKind::behavior_anomaly;
  ev.camera_id = 1;
  ev.appearance_time = 3;
  ev.duration = 4;
  ev.person_uid = 2;
  cfg.events.push_back(ev);

  const auto j = scenario_to_json(cfg);
  CHECK(j.contains("cameras"));
  CHECK(j["cameras"][0].contains("camera_id"));
  CHECK(j["cameras"][0].contains("ingress_delay"));
  CHECK(j.contains("density_level"));
  CHECK(j.contains("detector_noise"));
  CHECK(j["detector_noise"].contains("miss_rate"));

  const auto back = scenario_from_json(j);
  CHECK(back.cameras.size() == cfg.cameras.size());
  CHECK(back.duration == cfg.duration);
  CHECK(back.density_level == cfg.density_level);
  CHECK(back.seed == cfg.seed);
  CHECK(back.detector_noise.miss_rate == cfg.detector_noise.miss_rate);
  CHECK(back.events.size() == 1);
  CHECK(back.events[0].person_uid == 2);
  // Build both, expect identical streams.
  CHECK(Scenario::build(cfg).stream_hash(1, 450) ==
        Scenario::build(back).stream_hash(1, 450));
}
