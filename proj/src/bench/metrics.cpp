#include "svs/bench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "svs/core/error.hpp"

namespace svs::bench {

SummaryStats summarize_middle(const std::vector<double>& samples, int warmup,
                              int cooldown) {
  if (warmup < 0 || cooldown < 0)
    throw ValidationError("warmup and cooldown must be >= 0");
  const long n = static_cast<long>(samples.size());
  const long needed = long(warmup) + cooldown + 1;
  if (n < needed)
    throw ValidationError("summarize_middle needs at least " +
                          std::to_string(needed) + " samples (got " +
                          std::to_string(n) + ")");
  SummaryStats s;
  s.count = size_t(n - warmup - cooldown);
  s.min = samples[warmup];
  s.max = samples[warmup];
  double sum = 0;
  for (long i = warmup; i < n - cooldown; ++i) {
    sum += samples[i];
    s.min = std::min(s.min, samples[i]);
    s.max = std::max(s.max, samples[i]);
  }
  s.mean = sum / double(s.count);
  double var = 0;
  for (long i = warmup; i < n - cooldown; ++i) {
    const double d = samples[i] - s.mean;
    var += d * d;
  }
  s.stddev = std::sqrt(var / double(s.count));
  return s;
}

double compute_throughput(long frames_completed, double window_s) {
  if (!(window_s > 0)) throw ValidationError("throughput window must be > 0");
  return double(frames_completed) / window_s;
}

}  // namespace svs::bench
