#pragma once

// Brute-force oracles kept independent of the implementation paths they
// check. Test-only code.

#include <map>
#include <set>
#include <vector>

#include "svs/server/server_node.hpp"

namespace svs::testing {

// Pairwise-cosine clustering over records in ingestion order: a record joins
// the first existing cluster whose ANY member matches at >= theta, else it
// opens a new one. With noiseless (exactly equal) features this is the
// ground-truth identity partition regardless of ordering.
inline std::vector<std::set<size_t>> cosine_clusters(
    const std::vector<server::MetadataRecord>& records, double theta) {
  std::vector<std::set<size_t>> clusters;
  std::vector<std::vector<float>> member_features;
  std::vector<size_t> cluster_of;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!records[i].is_human()) continue;
    bool placed = false;
    for (size_t c = 0; c < clusters.size() && !placed; ++c) {
      for (size_t j : clusters[c]) {
        if (server::cosine_similarity(records[i].feature, records[j].feature) >=
            theta) {
          clusters[c].insert(i);
          placed = true;
          break;
        }
      }
    }
    if (!placed) clusters.push_back({i});
  }
  return clusters;
}

// Number of maximal runs of >= 3 consecutive sub-threshold scores.
inline int maximal_subthreshold_runs(const std::vector<double>& scores,
                                     double tau) {
  int runs = 0;
  int len = 0;
  for (double s : scores) {
    if (s < tau) {
      ++len;
      if (len == 3) ++runs;
    } else {
      len = 0;
    }
  }
  return runs;
}

}  // namespace svs::testing
