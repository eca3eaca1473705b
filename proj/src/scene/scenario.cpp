#include "svs/scene/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>

#include "svs/core/error.hpp"
#include "svs/core/rng.hpp"

namespace svs::scene {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// COCO-17 joints as offsets relative to the bounding box.
struct JointSpec {
  float rx, ry;   // relative position within the box
  float amp;      // oscillation amplitude scale
  float dir_deg;  // oscillation direction
};

constexpr JointSpec kJoints[17] = {
    {0.50f, 0.08f, 0.15f, 10},   // nose
    {0.46f, 0.06f, 0.15f, 100},  // left eye
    {0.54f, 0.06f, 0.15f, 80},   // right eye
    {0.42f, 0.08f, 0.15f, 170},  // left ear
    {0.58f, 0.08f, 0.15f, 190},  // right ear
    {0.35f, 0.20f, 0.30f, 0},    // left shoulder
    {0.65f, 0.20f, 0.30f, 180},  // right shoulder
    {0.30f, 0.35f, 0.60f, 20},   // left elbow
    {0.70f, 0.35f, 0.60f, 160},  // right elbow
    {0.25f, 0.50f, 1.00f, 30},   // left wrist
    {0.75f, 0.50f, 1.00f, 150},  // right wrist
    {0.40f, 0.52f, 0.30f, 90},   // left hip
    {0.60f, 0.52f, 0.30f, 90},   // right hip
    {0.38f, 0.72f, 0.60f, 75},   // left knee
    {0.62f, 0.72f, 0.60f, 105},  // right knee
    {0.36f, 0.95f, 1.00f, 45},   // left ankle
    {0.64f, 0.95f, 1.00f, 135},  // right ankle
};

// Folds unbounded linear motion into [0, span] (reflective walls).
// Returns position and the effective (post-reflection) velocity.
std::pair<double, double> fold(double raw, double span, double v) {
  if (span <= 0) return {0.0, 0.0};
  const double period = 2.0 * span;
  double m = std::fmod(raw, period);
  if (m < 0) m += period;
  if (m <= span) return {m, v};
  return {period - m, -v};
}

long frame_of(double t_seconds, double fps) {
  return static_cast<long>(std::ceil(t_seconds * fps - 1e-9));
}

}  // namespace

int Scenario::cam_slot(int camera_id) const {
  auto it = cam_index_.find(camera_id);
  if (it == cam_index_.end())
    throw NotFoundError("unknown camera_id " + std::to_string(camera_id));
  return it->second;
}

long Scenario::frame_count(int camera_id) const {
  return cams_[cam_slot(camera_id)].frames;
}

double Scenario::fps(int camera_id) const {
  return cams_[cam_slot(camera_id)].cam.fps;
}

int Scenario::level_at(int camera_id, long frame_index) const {
  const CamPlan& plan = cams_[cam_slot(camera_id)];
  const double t = double(frame_index) / plan.cam.fps;
  int level = cfg_.density_level;
  for (const auto& seg : plan.levels) {
    if (seg.start <= t + 1e-9)
      level = seg.level;
    else
      break;
  }
  return level;
}

Scenario::Motion Scenario::draw_motion(uint64_t seed, const CameraConfig& cam) const {
  Rng rng(seed);
  Motion m;
  const double max_w = std::min(72.0, cam.width / 4.0);
  const double max_h = std::min(200.0, cam.height / 2.0);
  m.w = rng.uniform(36.0, std::max(37.0, max_w));
  m.h = rng.uniform(110.0, std::max(111.0, max_h));
  m.x0 = rng.uniform(0.0, std::max(1.0, cam.width - m.w));
  m.y0 = rng.uniform(0.0, std::max(1.0, cam.height - m.h));
  const double speed = rng.uniform(1.0, 4.0);
  const double angle = rng.uniform(0.0, kTwoPi);
  m.vx = speed * std::cos(angle);
  m.vy = speed * std::sin(angle);
  m.gait_hz = rng.uniform(cfg_.motion.gait_min_hz, cfg_.motion.gait_max_hz);
  for (auto& p : m.phase) p = static_cast<float>(rng.uniform(0.0, kTwoPi));
  return m;
}

void Scenario::build_population() {
  // One sequential pass over a global timeline; all draws come from streams
  // derived from the scenario seed, so the schedule is reproducible.
  struct Arrival {
    long uid;
    double avail_t;
  };
  struct BuildEvent {
    double t;
    uint64_t seq;
    int cam_slot;
    enum Kind { departure, level_change, retry } kind;
    int stay_idx = -1;
    long scheduled_exit = -1;
    bool operator>(const BuildEvent& o) const {
      if (t != o.t) return t > o.t;
      return seq > o.seq;
    }
  };

  const bool closed_world = cfg_.person_pool > 0;
  Rng churn(mix64(cfg_.seed, 0xC08ull));
  std::priority_queue<BuildEvent, std::vector<BuildEvent>, std::greater<>> queue;
  uint64_t seq = 0;
  std::vector<std::deque<Arrival>> pending(cams_.size());
  std::deque<Arrival> offsite;  // closed world only
  std::vector<std::vector<int>> active(cams_.size());

  if (closed_world)
    next_uid_ = cfg_.person_pool + 1;

  std::vector<long> pool;
  for (long u = 1; closed_world && u <= cfg_.person_pool; ++u) pool.push_back(u);
  size_t pool_next = 0;

  auto close_stay = [&](int slot, int stay_idx, long exit_frame) {
    CamPlan& plan = cams_[slot];
    Stay& stay = plan.stays[stay_idx];
    stay.exit = std::min(stay.exit, std::max(exit_frame, stay.enter));
    auto& act = active[slot];
    act.erase(std::remove(act.begin(), act.end(), stay_idx), act.end());
    // churn: the person may transfer to another camera
    const double t = double(exit_frame) / plan.cam.fps;
    const bool transfer =
        cams_.size() > 1 &&
        (closed_world || churn.uniform() < cfg_.motion.transfer_prob);
    if (transfer) {
      size_t target = churn.uniform_int(cams_.size() - 1);
      if (target >= size_t(slot)) ++target;
      const double transit =
          churn.uniform(cfg_.motion.transit_min_s, cfg_.motion.transit_max_s);
      pending[target].push_back({stay.uid, t + transit});
    } else if (closed_world) {
      offsite.push_back({stay.uid, t + cfg_.motion.transit_min_s});
    }
  };

  auto spawn = [&](int slot, double t) -> bool {
    CamPlan& plan = cams_[slot];
    const long enter = frame_of(t, plan.cam.fps);
    if (enter >= plan.frames) return false;
    long uid = 0;
    auto& queue_in = pending[slot];
    while (!queue_in.empty() && uid == 0) {
      const Arrival a = queue_in.front();
      if (a.avail_t > t) break;  // FIFO: nobody at the door yet
      queue_in.pop_front();
      if (t - a.avail_t > cfg_.motion.stale_after_s) continue;  // walked away
      uid = a.uid;
    }
    if (uid == 0 && closed_world) {
      if (!offsite.empty() && offsite.front().avail_t <= t) {
        uid = offsite.front().uid;
        offsite.pop_front();
      } else if (pool_next < pool.size()) {
        uid = pool[pool_next++];
      }
    }
    if (uid == 0 && !closed_world) uid = next_uid_++;
    if (uid == 0) {
      // Closed world with everyone busy or in transit: try again shortly.
      double retry_at = t + 0.5;
      if (!queue_in.empty()) retry_at = std::min(retry_at, queue_in.front().avail_t);
      if (!offsite.empty()) retry_at = std::min(retry_at, offsite.front().avail_t);
      queue.push({std::max(retry_at, t + 1.0 / plan.cam.fps), seq++, slot,
                  BuildEvent::retry});
      return false;
    }
    const double dwell =
        churn.uniform(cfg_.motion.dwell_min_s, cfg_.motion.dwell_max_s);
    Stay stay;
    stay.uid = uid;
    stay.enter = enter;
    stay.exit = std::min(plan.frames, enter + std::max<long>(1, lround(dwell * plan.cam.fps)));
    stay.motion = draw_motion(mix64(cfg_.seed, 0x57A9ull, uint64_t(uid),
                                    mix64(uint64_t(plan.cam.camera_id), uint64_t(enter))),
                              plan.cam);
    const int idx = static_cast<int>(plan.stays.size());
    plan.stays.push_back(stay);
    active[slot].push_back(idx);
    if (stay.exit < plan.frames)
      queue.push({double(stay.exit) / plan.cam.fps, seq++, slot,
                  BuildEvent::departure, idx, stay.exit});
    return true;
  };

  auto settle = [&](int slot, double t) {
    CamPlan& plan = cams_[slot];
    const long f = frame_of(t, plan.cam.fps);
    if (f >= plan.frames) return;
    int level = cfg_.density_level;
    for (const auto& seg : plan.levels)
      if (seg.start <= t + 1e-9) level = seg.level;
    while (static_cast<int>(active[slot].size()) > level) {
      const int idx = active[slot].back();
      close_stay(slot, idx, f);
    }
    while (static_cast<int>(active[slot].size()) < level) {
      if (!spawn(slot, t)) break;
    }
  };

  // Initial population and scheduled level changes.
  for (size_t slot = 0; slot < cams_.size(); ++slot) {
    settle(static_cast<int>(slot), 0.0);
    for (const auto& seg : cams_[slot].levels)
      if (seg.start > 0)
        queue.push({seg.start, seq++, static_cast<int>(slot), BuildEvent::level_change});
  }

  while (!queue.empty()) {
    const BuildEvent ev = queue.top();
    queue.pop();
    CamPlan& plan = cams_[ev.cam_slot];
    if (ev.kind == BuildEvent::departure) {
      // Stale when a level change already closed the stay early.
      if (plan.stays[ev.stay_idx].exit != ev.scheduled_exit) continue;
      close_stay(ev.cam_slot, ev.stay_idx, ev.scheduled_exit);
    }
    settle(ev.cam_slot, ev.t);
  }
}

void Scenario::overlay_events() {
  for (size_t i = 0; i < events_.size(); ++i) {
    GroundTruthEvent& ev = events_[i];
    const int slot = cam_slot(ev.camera_id);
    CamPlan& plan = cams_[slot];
    plan.event_idx.push_back(static_cast<int>(i));
    if (ev.kind != EventKind::behavior_anomaly) continue;

    const double fps = plan.cam.fps;
    const long f_a = std::min(frame_of(ev.appearance_time, fps), plan.frames - 1);
    const long f_b = std::min(frame_of(ev.appearance_time + ev.duration, fps), plan.frames);

    if (ev.person_uid == 0) {
      // Auto-bind: lowest uid present when the event starts.
      long best = 0;
      for (const auto& stay : plan.stays)
        if (stay.enter <= f_a && f_a < stay.exit && (best == 0 || stay.uid < best))
          best = stay.uid;
      ev.person_uid = best != 0 ? best : next_uid_++;
    }

    // The target is pinned on camera for the whole window.
    bool covered = false;
    for (auto& stay : plan.stays) {
      if (stay.uid != ev.person_uid) continue;
      if (stay.exit <= f_a || stay.enter >= f_b) continue;
      stay.enter = std::min(stay.enter, f_a);
      stay.exit = std::max(stay.exit, f_b);
      covered = true;
      break;
    }
    if (!covered) {
      Stay stay;
      stay.uid = ev.person_uid;
      stay.enter = f_a;
      stay.exit = f_b;
      stay.motion = draw_motion(mix64(cfg_.seed, 0xE57ull, uint64_t(ev.event_id)), plan.cam);
      plan.stays.push_back(stay);
    }
  }
}

void Scenario::build_epochs() {
  for (auto& plan : cams_) {
    std::set<long> bounds{0};
    for (const auto& stay : plan.stays) {
      if (stay.enter < plan.frames) bounds.insert(stay.enter);
      if (stay.exit < plan.frames) bounds.insert(stay.exit);
    }
    plan.epoch_starts.assign(bounds.begin(), bounds.end());
    plan.epoch_stays.resize(plan.epoch_starts.size());
    // Order stays by index (creation order) for stable person ordering.
    for (size_t e = 0; e < plan.epoch_starts.size(); ++e) {
      const long f = plan.epoch_starts[e];
      for (int idx = 0; idx < static_cast<int>(plan.stays.size()); ++idx) {
        const Stay& s = plan.stays[idx];
        if (s.enter <= f && f < s.exit) plan.epoch_stays[e].push_back(idx);
      }
    }
  }
}

void Scenario::build_features() {
  std::set<long> uids;
  for (const auto& plan : cams_)
    for (const auto& stay : plan.stays) uids.insert(stay.uid);
  for (const auto& ev : events_)
    if (ev.kind == EventKind::behavior_anomaly && ev.person_uid > 0)
      uids.insert(ev.person_uid);
  for (long uid : uids) {
    Rng rng(mix64(cfg_.seed, 0xFEA7ull, uint64_t(uid)));
    std::vector<float> f(cfg_.feature_dim);
    double norm2 = 0;
    for (auto& v : f) {
      v = static_cast<float>(rng.normal());
      norm2 += double(v) * v;
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-30));
    for (auto& v : f) v = static_cast<float>(v * inv);
    features_[uid] = std::move(f);
  }
}

Scenario Scenario::build(ScenarioConfig cfg) {
  validate(cfg);
  Scenario s;
  s.cfg_ = std::move(cfg);
  s.events_ = s.cfg_.events;
  for (size_t i = 0; i < s.cfg_.cameras.size(); ++i) {
    CamPlan plan;
    plan.cam = s.cfg_.cameras[i];
    plan.frames = lround(s.cfg_.duration * plan.cam.fps);
    auto it = s.cfg_.density_schedule.find(plan.cam.camera_id);
    if (it == s.cfg_.density_schedule.end())
      it = s.cfg_.density_schedule.find(0);
    if (it != s.cfg_.density_schedule.end()) {
      plan.levels = it->second;
      std::stable_sort(plan.levels.begin(), plan.levels.end(),
                       [](const DensitySegment& a, const DensitySegment& b) {
                         return a.start < b.start;
                       });
    }
    s.cam_index_[plan.cam.camera_id] = static_cast<int>(i);
    s.cams_.push_back(std::move(plan));
  }
  s.build_population();
  s.overlay_events();
  s.build_epochs();
  s.build_features();
  return s;
}

Scenario Scenario::with_event(GroundTruthEvent ev) const {
  ScenarioConfig cfg = cfg_;
  if (ev.appearance_time < 0 || ev.appearance_time >= cfg.duration)
    throw RangeError("event appearance_time " + std::to_string(ev.appearance_time) +
                     " is outside the scenario duration");
  cfg.events.push_back(std::move(ev));
  return build(std::move(cfg));
}

const std::vector<float>& Scenario::feature_of(long uid) const {
  auto it = features_.find(uid);
  if (it == features_.end())
    throw NotFoundError("no feature for person_uid " + std::to_string(uid));
  return it->second;
}

FrameTruth Scenario::frame(int camera_id, long frame_index) const {
  const int slot = cam_slot(camera_id);
  const CamPlan& plan = cams_[slot];
  if (frame_index < 0 || frame_index >= plan.frames)
    throw RangeError("frame_index " + std::to_string(frame_index) +
                     " out of range for camera " + std::to_string(camera_id));

  FrameTruth out;
  out.camera_id = camera_id;
  out.frame_index = frame_index;
  out.t = double(frame_index) / plan.cam.fps;

  // Active behavior windows for this camera, by uid.
  std::vector<std::pair<long, long>> anomalous;  // uid, event_id
  for (int ei : plan.event_idx) {
    const GroundTruthEvent& ev = events_[ei];
    if (out.t + 1e-9 < ev.appearance_time ||
        out.t >= ev.appearance_time + ev.duration - 1e-9)
      continue;
    out.active_event_ids.push_back(ev.event_id);
    if (ev.kind == EventKind::behavior_anomaly)
      anomalous.emplace_back(ev.person_uid, ev.event_id);
    else {
      ObjectState obj;
      obj.event_id = ev.event_id;
      obj.label = ev.object_class;
      obj.class_id = cfg_.anomaly_classes.at(ev.object_class);
      Rng rng(mix64(cfg_.seed, 0x0B7ull, uint64_t(ev.event_id)));
      const double w = 60, h = 60;
      obj.bbox = {rng.uniform(0.0, plan.cam.width - w),
                  rng.uniform(0.0, plan.cam.height - h), w, h};
      out.objects.push_back(std::move(obj));
    }
  }

  const auto epoch_it = std::upper_bound(plan.epoch_starts.begin(),
                                         plan.epoch_starts.end(), frame_index);
  const size_t epoch = epoch_it - plan.epoch_starts.begin() - 1;
  out.persons.reserve(plan.epoch_stays[epoch].size());

  for (int idx : plan.epoch_stays[epoch]) {
    const Stay& stay = plan.stays[idx];
    const Motion& m = stay.motion;
    const long n = frame_index - stay.enter;
    PersonState p;
    p.uid = stay.uid;
    for (const auto& [uid, evid] : anomalous)
      if (uid == stay.uid) p.behavior_anomalous = true;

    const double span_x = plan.cam.width - m.w;
    const double span_y = plan.cam.height - m.h;
    const auto [px, vx] = fold(m.x0 + m.vx * double(n), span_x, m.vx);
    const auto [py, vy] = fold(m.y0 + m.vy * double(n), span_y, m.vy);
    p.bbox = {px, py, m.w, m.h};
    p.velocity = {vx, vy};

    const double amp_scale =
        cfg_.motion.amp_px *
        (p.behavior_anomalous ? cfg_.motion.anomaly_amp_factor : 1.0);
    const double gait = p.behavior_anomalous ? cfg_.motion.anomaly_gait_hz : m.gait_hz;
    const double wt = kTwoPi * gait * (double(n) / plan.cam.fps);
    for (int j = 0; j < 17; ++j) {
      const JointSpec& spec = kJoints[j];
      const double osc = amp_scale * spec.amp * std::sin(wt + m.phase[j]);
      const double rad = spec.dir_deg * kTwoPi / 360.0;
      const double kx = px + spec.rx * m.w + osc * std::cos(rad);
      const double ky = py + spec.ry * m.h + osc * std::sin(rad);
      const bool inside = kx >= 0 && kx <= plan.cam.width && ky >= 0 &&
                          ky <= plan.cam.height;
      p.keypoints[j] = {static_cast<float>(kx), static_cast<float>(ky),
                        inside ? 1.0f : 0.0f};
    }
    p.feature = &features_.at(stay.uid);
    out.persons.push_back(std::move(p));
  }
  return out;
}

uint64_t Scenario::stream_hash(int camera_id, long frames) const {
  const long n = std::min(frames, frame_count(camera_id));
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mixin = [&h](uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (long f = 0; f < n; ++f) {
    const FrameTruth ft = frame(camera_id, f);
    mixin(uint64_t(ft.persons.size()));
    for (const auto& p : ft.persons) {
      mixin(uint64_t(p.uid));
      mixin(uint64_t(llround(p.bbox[0] * 64)));
      mixin(uint64_t(llround(p.bbox[1] * 64)));
      for (const auto& kp : p.keypoints)
        mixin(uint64_t(llround(double(kp.x) * 16) * 31 +
                       llround(double(kp.y) * 16)));
    }
    for (const auto& o : ft.objects) mixin(uint64_t(o.class_id));
  }
  return h;
}

}  // namespace svs::scene
