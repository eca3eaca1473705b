#include "svs/bench/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "svs/core/error.hpp"

namespace svs::bench {

namespace {

constexpr const char* kShapeNote =
    "NOTE: latencies and throughputs below come from the synthetic stage cost\n"
    "model running on a virtual clock. They reproduce the qualitative shapes\n"
    "of a hardware deployment (trends across density, node count and time),\n"
    "never its absolute numbers, which are hardware-bound.\n";

std::ofstream open_out(const std::string& dir, const std::string& name,
                       std::vector<std::string>& written) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TransportError("cannot write report file: " + path);
  written.push_back(path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string> emit_report(const LoadStressResult& result,
                                     const std::string& out_dir) {
  std::vector<std::string> written;

  {
    auto out = open_out(out_dir, "samples.csv", written);
    out << "experiment,node_count,density,batch,latency_s,throughput_fps,"
           "detections,ts\n";
    for (const auto& r : result.rows)
      out << "load_stress," << r.node_count << ',' << r.density << ','
          << r.batch_index << ',' << format_double(r.latency_s) << ','
          << format_double(r.throughput_fps) << ','
          << format_double(r.detections) << ',' << format_double(r.ts) << '\n';
  }
  {
    auto out = open_out(out_dir, "summary_long.csv", written);
    out << "experiment,node_count,density,metric,value\n";
    for (const auto& c : result.cells) {
      if (c.failed) continue;
      const auto row = [&](const char* metric, double v) {
        out << "load_stress," << c.node_count << ',' << c.density << ','
            << metric << ',' << format_double(v) << '\n';
      };
      row("latency_mean_s", c.latency.mean);
      row("latency_min_s", c.latency.min);
      row("latency_max_s", c.latency.max);
      row("latency_stddev_s", c.latency.stddev);
      row("throughput_total_fps", c.throughput_total_fps);
      row("throughput_per_node_fps", c.throughput_per_node_fps);
      row("detections_mean", c.mean_detections);
    }
  }
  {
    auto out = open_out(out_dir, "summary.txt", written);
    out << kShapeNote << '\n';
    out << "load-stress sweep: " << result.cfg.node_counts.size()
        << " node counts x " << result.cfg.density_levels.size()
        << " densities, " << format_double(result.cfg.duration)
        << " s per cell, middle batches " << result.cfg.warmup_batches << ".."
        << "N-" << result.cfg.cooldown_batches << "\n\n";
    out << "nodes density latency_mean_s latency_max_s per_node_fps total_fps\n";
    for (const auto& c : result.cells) {
      if (c.failed) {
        out << c.node_count << ' ' << c.density << " FAILED: " << c.error << '\n';
        continue;
      }
      out << c.node_count << ' ' << c.density << ' '
          << format_double(c.latency.mean) << ' ' << format_double(c.latency.max)
          << ' ' << format_double(c.throughput_per_node_fps) << ' '
          << format_double(c.throughput_total_fps) << '\n';
    }
    if (!result.check_failures.empty()) {
      out << "\nembedded checks FAILED:\n";
      for (const auto& f : result.check_failures) out << "  - " << f << '\n';
    } else {
      out << "\nembedded checks passed\n";
    }
  }
  return written;
}

std::vector<std::string> emit_report(const EnduranceResult& result,
                                     const std::string& out_dir) {
  std::vector<std::string> written;
  {
    auto out = open_out(out_dir, "minutes.csv", written);
    out << "experiment,node_count,minute,batches,latency_s,throughput_fps,"
           "detections,resets_so_far\n";
    for (const auto& m : result.minutes)
      out << "endurance," << m.node_count << ',' << m.minute << ',' << m.batches
          << ',' << format_double(m.latency_s) << ','
          << format_double(m.throughput_fps) << ','
          << format_double(m.detections) << ',' << m.resets_so_far << '\n';
  }
  {
    auto out = open_out(out_dir, "resets.csv", written);
    out << "node_count,t,reason,rows_cleared,identities_cleared\n";
    for (const auto& r : result.resets)
      out << r.node_count << ',' << format_double(r.event.t) << ','
          << r.event.reason << ',' << r.event.rows_cleared << ','
          << r.event.identities_cleared << '\n';
  }
  {
    auto out = open_out(out_dir, "audit.ndjson", written);
    for (const auto& line : result.audit) out << line << '\n';
  }
  {
    auto out = open_out(out_dir, "summary.txt", written);
    out << kShapeNote << '\n';
    out << "endurance: " << format_double(result.cfg.endurance_hours)
        << " virtual hours, node counts:";
    for (int n : result.cfg.node_counts) out << ' ' << n;
    out << "\nresets: " << result.resets.size() << "\n";
    if (!result.check_failures.empty()) {
      out << "\nembedded checks FAILED:\n";
      for (const auto& f : result.check_failures) out << "  - " << f << '\n';
    } else {
      out << "\nembedded checks passed\n";
    }
  }
  return written;
}

std::vector<std::string> emit_report(const PcpResult& result,
                                     const std::string& out_dir) {
  std::vector<std::string> written;
  {
    auto out = open_out(out_dir, "pcp_samples.csv", written);
    out << "experiment,kind,node_count,run,event_id,subscriber_id,origin_time,"
           "receipt_time,pcp_latency,hop_sum,lost\n";
    for (const auto& s : result.samples)
      out << "pcp," << s.kind << ',' << s.node_count << ',' << s.run << ','
          << s.event_id << ',' << s.subscriber_id << ','
          << format_double(s.origin_time) << ',' << format_double(s.receipt_time)
          << ',' << format_double(s.pcp_latency) << ','
          << format_double(s.hop_sum) << ',' << (s.lost ? 1 : 0) << '\n';
  }
  {
    auto out = open_out(out_dir, "pcp_summary.txt", written);
    out << kShapeNote << '\n';
    out << "end-to-end notification latency (s), per node count and kind\n\n";
    out << "nodes";
    std::vector<std::string> kinds;
    for (const auto& c : result.cells) {
      bool seen = false;
      for (const auto& k : kinds) seen = seen || k == c.kind;
      if (!seen) kinds.push_back(c.kind);
    }
    for (const auto& k : kinds)
      out << "  " << k << "(mean/min/max/sd)";
    out << '\n';
    for (int n : result.cfg.node_counts) {
      out << n;
      for (const auto& k : kinds) {
        for (const auto& c : result.cells) {
          if (c.node_count != n || c.kind != k) continue;
          out << "  " << format_double(c.stats.mean) << '/'
              << format_double(c.stats.min) << '/' << format_double(c.stats.max)
              << '/' << format_double(c.stats.stddev);
          if (c.lost) out << " (lost " << c.lost << ')';
        }
      }
      out << '\n';
    }
    if (!result.check_failures.empty()) {
      out << "\nembedded checks FAILED:\n";
      for (const auto& f : result.check_failures) out << "  - " << f << '\n';
    } else {
      out << "\nembedded checks passed\n";
    }
  }
  return written;
}

std::string summarize_samples_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw TransportError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw TransportError("empty csv: " + csv_path);

  struct Agg {
    long n = 0;
    double latency = 0, fps = 0;
  };
  std::map<std::pair<int, int>, Agg> cells;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 8) continue;
    Agg& a = cells[{std::stoi(fields[1]), std::stoi(fields[2])}];
    ++a.n;
    a.latency += std::stod(fields[4]);
    a.fps += std::stod(fields[5]);
  }
  std::ostringstream out;
  out << "nodes density batches latency_mean_s throughput_mean_fps\n";
  for (const auto& [key, a] : cells)
    out << key.first << ' ' << key.second << ' ' << a.n << ' '
        << format_double(a.latency / std::max(1L, a.n)) << ' '
        << format_double(a.fps / std::max(1L, a.n)) << '\n';
  return out.str();
}

}  // namespace svs::bench
