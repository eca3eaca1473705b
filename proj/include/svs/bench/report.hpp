#pragma once

#include <string>
#include <vector>

#include "svs/bench/experiments.hpp"

namespace svs::bench {

// Writes CSV and text outputs with a stable byte layout: identical inputs
// produce identical files.
std::vector<std::string> emit_report(const LoadStressResult& result,
                                     const std::string& out_dir);
std::vector<std::string> emit_report(const EnduranceResult& result,
                                     const std::string& out_dir);
std::vector<std::string> emit_report(const PcpResult& result,
                                     const std::string& out_dir);

// Quick aggregation of a samples.csv produced by the load-stress report.
std::string summarize_samples_csv(const std::string& csv_path);

std::string format_double(double v);

}  // namespace svs::bench
