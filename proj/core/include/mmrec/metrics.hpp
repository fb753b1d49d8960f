#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "mmrec/fusion.hpp"
#include "mmrec/interest.hpp"

namespace mmrec {

// Model-ordered ranking plus the ground-truth relevant set.
struct RankedList {
  std::vector<VideoId> ranking;  // no duplicates
  std::set<VideoId> relevant;
};

// |top-K ∩ relevant| / K; the denominator stays K even when fewer items
// were returned.
double precision_at_k(const RankedList& list, int k);

// |top-K ∩ relevant| / |relevant|; requires a nonempty relevant set.
double recall_at_k(const RankedList& list, int k);

// Binary gains, DCG discount 1/log2(i+1) with ranks starting at 1; IDCG over
// min(K, |relevant|) ideal positions.
double ndcg_at_k(const RankedList& list, int k);

// Mann-Whitney AUC, (#concordant + 0.5 #tied) / (#pos * #neg), computed via
// a sort with average ranks for ties. Requires both classes.
double auc(const std::vector<std::pair<double, int>>& scored);

// Harmonic mean of precision/recall at the threshold; 0 when both are 0.
double f1_score(const std::vector<std::pair<double, int>>& prob_labels, double threshold = 0.5);

// Arithmetic mean of the attention triples over all scored pairs.
std::array<double, 3> modality_weight_share(const std::vector<AttentionWeights>& weights);

struct MetricsReport {
  std::map<int, double> precision;  // keyed by K
  std::map<int, double> recall;
  std::map<int, double> ndcg;
  double auc = 0.0;
  double f1 = 0.0;
  std::array<double, 3> weight_share = {0.0, 0.0, 0.0};
  int user_count = 0;
  int skipped_users = 0;
};

}  // namespace mmrec
