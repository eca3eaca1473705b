#pragma once

#include <chrono>
#include <thread>

namespace svs {

// Maps wall time to virtual seconds for live (socket) deployments:
// virtual = wall_elapsed * time_scale. Sim runs use Simulator instead.
class VirtualClock {
 public:
  explicit VirtualClock(double time_scale = 1.0)
      : scale_(time_scale), start_(std::chrono::steady_clock::now()) {}

  double now() const {
    const std::chrono::duration<double> wall =
        std::chrono::steady_clock::now() - start_;
    return wall.count() * scale_;
  }

  double scale() const { return scale_; }

  void sleep_until(double t_virtual) const {
    const auto target =
        start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(t_virtual / scale_));
    if (target > std::chrono::steady_clock::now())
      std::this_thread::sleep_until(target);
  }

  // Sleeps for a virtual duration (scaled down to wall time).
  void sleep_for(double dt_virtual) const {
    if (dt_virtual <= 0) return;
    std::this_thread::sleep_for(
        std::chrono::duration<double>(dt_virtual / scale_));
  }

 private:
  double scale_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace svs
