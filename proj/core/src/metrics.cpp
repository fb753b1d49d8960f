#include "mmrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmrec/errors.hpp"

namespace mmrec {

namespace {

int hits_in_top_k(const RankedList& list, int k) {
  int hits = 0;
  int limit = std::min<int>(k, static_cast<int>(list.ranking.size()));
  for (int i = 0; i < limit; ++i) {
    if (list.relevant.count(list.ranking[static_cast<std::size_t>(i)]) > 0) ++hits;
  }
  return hits;
}

}  // namespace

double precision_at_k(const RankedList& list, int k) {
  if (k < 1) throw ArgumentError("precision_at_k: K must be >= 1");
  return static_cast<double>(hits_in_top_k(list, k)) / k;
}

double recall_at_k(const RankedList& list, int k) {
  if (k < 1) throw ArgumentError("recall_at_k: K must be >= 1");
  if (list.relevant.empty()) throw ArgumentError("recall_at_k: empty relevant set; caller must skip");
  return static_cast<double>(hits_in_top_k(list, k)) / static_cast<double>(list.relevant.size());
}

double ndcg_at_k(const RankedList& list, int k) {
  if (k < 1) throw ArgumentError("ndcg_at_k: K must be >= 1");
  if (list.relevant.empty()) throw ArgumentError("ndcg_at_k: empty relevant set; caller must skip");
  double dcg = 0.0;
  int limit = std::min<int>(k, static_cast<int>(list.ranking.size()));
  for (int i = 0; i < limit; ++i) {
    if (list.relevant.count(list.ranking[static_cast<std::size_t>(i)]) > 0) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  int ideal = std::min<int>(k, static_cast<int>(list.relevant.size()));
  double idcg = 0.0;
  for (int i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

double auc(const std::vector<std::pair<double, int>>& scored) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& [score, label] : scored) {
    if (label != 0) ++n_pos;
    else ++n_neg;
  }
  if (n_pos == 0 || n_neg == 0) throw ArgumentError("auc: needs at least one positive and one negative");

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scored[a].first < scored[b].first; });

  // Average ranks over tie groups; rank sum of positives gives the
  // Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scored[order[j]].first == scored[order[i]].first) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t) {
      if (scored[order[t]].second != 0) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  double stat = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return stat / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double f1_score(const std::vector<std::pair<double, int>>& prob_labels, double threshold) {
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [p, label] : prob_labels) {
    bool predicted = p >= threshold;
    if (predicted && label != 0) ++tp;
    else if (predicted && label == 0) ++fp;
    else if (!predicted && label != 0) ++fn;
  }
  if (tp == 0) return 0.0;  // degenerate cases collapse to 0 by convention
  // Harmonic mean of precision and recall in exact count form.
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::array<double, 3> modality_weight_share(const std::vector<AttentionWeights>& weights) {
  if (weights.empty()) throw ArgumentError("modality_weight_share: empty collection");
  std::array<double, 3> mean = {0.0, 0.0, 0.0};
  for (const auto& w : weights) {
    for (int m = 0; m < kModalityCount; ++m) mean[static_cast<std::size_t>(m)] += w.alpha[static_cast<std::size_t>(m)];
  }
  for (auto& v : mean) v /= static_cast<double>(weights.size());
  return mean;
}

}  // namespace mmrec
