#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "svs/bench/report.hpp"
#include "svs/live/live.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_sigint(int) { g_interrupted = 1; }

void wait_for_interrupt() {
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  while (!g_interrupted)
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

int run_bench(const std::string& kind, const std::string& config_path,
              const std::string& out_dir, int jobs) {
  svs::bench::ExperimentConfig cfg;
  if (!config_path.empty())
    cfg = svs::bench::ExperimentConfig::load_file(config_path);
  cfg.kind = kind;
  if (jobs > 0) cfg.jobs = jobs;
  if (kind == "pcp" && config_path.empty()) cfg.node_counts = {4, 8, 12, 16};
  if (kind == "endurance" && config_path.empty()) cfg.node_counts = {8};

  std::vector<std::string> files;
  std::vector<std::string> failures;
  if (kind == "load_stress") {
    auto result = svs::bench::run_load_stress(cfg);
    files = svs::bench::emit_report(result, out_dir);
    failures = result.check_failures;
  } else if (kind == "endurance") {
    auto result = svs::bench::run_endurance(cfg);
    files = svs::bench::emit_report(result, out_dir);
    failures = result.check_failures;
  } else {
    auto result = svs::bench::run_pcp(cfg);
    files = svs::bench::emit_report(result, out_dir);
    failures = result.check_failures;
  }
  for (const auto& f : files) std::cout << "wrote " << f << '\n';
  if (!failures.empty()) {
    std::cerr << "embedded checks FAILED:\n";
    for (const auto& f : failures) std::cerr << "  - " << f << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svs: desk-scale smart video surveillance testbed"};
  app.require_subcommand(1);

  // --- ai-node ---
  auto* ai = app.add_subcommand("ai-node", "run one per-camera pipeline");
  svs::live::AiNodeOptions ai_opts;
  ai->add_option("--camera", ai_opts.camera_id, "camera id")->required();
  ai->add_option("--scenario", ai_opts.scenario_path, "scenario JSON")->required();
  ai->add_option("--server", ai_opts.server_addr, "server host:port")->required();
  ai->add_option("--cloud", ai_opts.cloud_addr, "cloud host:port")->required();
  ai->add_option("--batch", ai_opts.batch, "frames per batch");
  ai->add_option("--window", ai_opts.window, "pose window size");
  ai->add_option("--stride", ai_opts.stride, "pose window stride");
  ai->add_option("--time-scale", ai_opts.time_scale,
                 "virtual seconds per wall second (0: scenario value)");

  // --- serve ---
  auto* serve = app.add_subcommand("serve", "run the aggregation server");
  svs::live::ServeOptions serve_opts;
  serve_opts.listen = "127.0.0.1:7601";
  serve->add_option("--listen", serve_opts.listen, "listen host:port");
  serve->add_option("--cloud", serve_opts.cloud,
                    "cloud host:port for behavioral notifications");
  serve->add_option("--reset-rows", serve_opts.server.reset_rows,
                    "auto-reset row cap");
  serve->add_option("--reset-hours", serve_opts.server.reset_hours,
                    "auto-reset uptime cap (virtual hours)");
  serve->add_option("--theta", serve_opts.server.theta,
                    "re-id cosine similarity threshold");
  serve->add_option("--tau", serve_opts.server.tau,
                    "behavioral anomaly score threshold");
  serve->add_option("--audit", serve_opts.audit_path, "NDJSON audit log path");
  serve->add_option("--time-scale", serve_opts.time_scale,
                    "virtual seconds per wall second");

  // --- cloud ---
  auto* cloud = app.add_subcommand("cloud", "run the cloud tier");
  svs::live::CloudOptions cloud_opts;
  cloud_opts.listen = "127.0.0.1:7602";
  std::string profile_path;
  cloud->add_option("--listen", cloud_opts.listen, "listen host:port");
  cloud->add_option("--latency-profile", profile_path,
                    "latency profile JSON path");
  cloud->add_option("--nodes", cloud_opts.node_count,
                    "deployment node count (fanout tier)");
  cloud->add_option("--endpoint-cap", cloud_opts.endpoint_cap,
                    "max subscriber endpoints");
  cloud->add_option("--time-scale", cloud_opts.time_scale,
                    "virtual seconds per wall second");

  // --- notify ---
  auto* notify = app.add_subcommand("notify", "run a subscriber endpoint");
  svs::live::NotifyOptions notify_opts;
  notify->add_option("--connect", notify_opts.cloud_addr, "cloud host:port")
      ->required();
  notify->add_option("--pattern", notify_opts.pattern, "topic pattern");
  notify->add_option("--log", notify_opts.log_path, "receipt CSV path");
  notify->add_option("--time-scale", notify_opts.time_scale,
                     "virtual seconds per wall second");

  // --- bench ---
  auto* bench = app.add_subcommand("bench", "run an experiment");
  bench->require_subcommand(1);
  std::string bench_config, bench_out = "bench-out";
  int bench_jobs = 0;
  for (const char* kind : {"load-stress", "endurance", "pcp"}) {
    auto* sub = bench->add_subcommand(kind);
    sub->add_option("--config", bench_config, "experiment config JSON");
    sub->add_option("--out", bench_out, "output directory");
    sub->add_option("--jobs", bench_jobs, "parallel cells (1 = serial)");
  }

  // --- report ---
  auto* report = app.add_subcommand("report", "summarize experiment output");
  auto* report_summary = report->add_subcommand("summary");
  std::string report_csv;
  report_summary->add_option("csv", report_csv, "samples.csv path")->required();

  // --- scenario ---
  auto* scenario = app.add_subcommand("scenario", "scenario utilities");
  auto* scenario_validate = scenario->add_subcommand("validate");
  std::string scenario_path;
  scenario_validate->add_option("path", scenario_path, "scenario JSON")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ai) {
      const long batches = svs::live::run_ai_node(ai_opts);
      std::cout << "ai-node camera " << ai_opts.camera_id << " emitted "
                << batches << " batches\n";
      return 0;
    }
    if (*serve) {
      svs::live::ServeNode node(serve_opts);
      std::cout << "serve listening on port " << node.port() << '\n';
      wait_for_interrupt();
      node.stop();
      return 0;
    }
    if (*cloud) {
      if (!profile_path.empty())
        cloud_opts.profile = svs::cloud::LatencyProfile::load_file(profile_path);
      svs::live::CloudNode node(cloud_opts);
      std::cout << "cloud listening on port " << node.port() << '\n';
      wait_for_interrupt();
      node.stop();
      return 0;
    }
    if (*notify) {
      svs::live::NotifyClient client(notify_opts);
      std::cout << "subscribed to " << notify_opts.pattern << '\n';
      wait_for_interrupt();
      client.stop();
      std::cout << "received " << client.received() << " notifications\n";
      return 0;
    }
    if (*bench) {
      std::string kind;
      for (const auto* sub : bench->get_subcommands())
        kind = sub->get_name() == "load-stress" ? "load_stress" : sub->get_name();
      return run_bench(kind, bench_config, bench_out, bench_jobs);
    }
    if (*report) {
      std::cout << svs::bench::summarize_samples_csv(report_csv);
      return 0;
    }
    if (*scenario) {
      const auto cfg = svs::scene::load_scenario_file(scenario_path);
      svs::scene::validate(cfg);
      const auto sc = svs::scene::Scenario::build(cfg);
      std::cout << "ok: " << cfg.cameras.size() << " cameras, "
                << cfg.duration << " s";
      if (!cfg.cameras.empty())
        std::cout << ", " << sc.frame_count(cfg.cameras.front().camera_id)
                  << " frames on camera " << cfg.cameras.front().camera_id;
      std::cout << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
