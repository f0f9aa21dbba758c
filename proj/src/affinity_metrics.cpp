#include "dygeval/affinity_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "dygeval/error.hpp"

namespace dygeval {

namespace {

// node id -> candidate position, or -1.
std::vector<int> candidate_index(const std::vector<NodeId>& candidates, std::size_t num_nodes) {
  std::vector<int> index(num_nodes, -1);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] >= num_nodes) {
      throw Error("candidate node " + std::to_string(candidates[i]) + " outside node range " +
                  std::to_string(num_nodes));
    }
    index[candidates[i]] = static_cast<int>(i);
  }
  return index;
}

AffinityTruth truth_from_events(std::span<const EdgeEvent> events, const AffinityQuery& q,
                                const std::vector<int>& index) {
  AffinityTruth truth;
  truth.values.assign(q.candidates->size(), 0.0);
  const double t_hi = q.t + q.horizon;
  auto lo = std::lower_bound(events.begin(), events.end(), q.t,
                             [](const EdgeEvent& e, double t) { return e.t < t; });
  double total = 0.0;
  for (auto it = lo; it != events.end() && it->t <= t_hi; ++it) {
    if (it->src != q.src) continue;
    const int pos = index[it->dst];
    if (pos < 0) continue;
    truth.values[static_cast<std::size_t>(pos)] += it->w;
    total += it->w;
  }
  if (total > 0.0) {
    for (double& v : truth.values) v /= total;
    truth.all_zero = false;
  }
  return truth;
}

void check_query(const AffinityQuery& q, std::size_t num_nodes) {
  if (!q.candidates || q.candidates->empty()) throw Error("query without candidates");
  if (q.src >= num_nodes) throw Error("query source outside node range");
  if (!(q.horizon > 0.0)) throw Error("query horizon must be positive");
}

}  // namespace

CandidateList make_candidates(std::vector<NodeId> nodes) {
  if (nodes.empty()) throw Error("candidate list is empty");
  std::vector<NodeId> sorted = nodes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error("candidate list contains duplicates");
  }
  return std::make_shared<const std::vector<NodeId>>(std::move(nodes));
}

AffinityTruth ground_truth_affinity(const GraphSlice& slice, const AffinityQuery& query) {
  if (slice.label_free()) throw LabelAccessError("ground truth requested from a label-free slice");
  check_query(query, slice.num_nodes());
  return truth_from_events(slice.events(), query,
                           candidate_index(*query.candidates, slice.num_nodes()));
}

AffinityTruth ground_truth_affinity(const StreamPtr& stream, const AffinityQuery& query) {
  check_query(query, stream->num_nodes());
  return truth_from_events(stream->events(), query,
                           candidate_index(*query.candidates, stream->num_nodes()));
}

std::vector<AffinityTruth> ground_truth_batch(const GraphSlice& slice,
                                              std::span<const AffinityQuery> queries) {
  if (slice.label_free()) throw LabelAccessError("ground truth requested from a label-free slice");
  std::vector<AffinityTruth> out;
  out.reserve(queries.size());
  const std::vector<NodeId>* cached = nullptr;
  std::vector<int> index;
  for (const auto& q : queries) {
    check_query(q, slice.num_nodes());
    if (q.candidates.get() != cached) {
      index = candidate_index(*q.candidates, slice.num_nodes());
      cached = q.candidates.get();
    }
    out.push_back(truth_from_events(slice.events(), q, index));
  }
  return out;
}

std::vector<AffinityQuery> enumerate_queries(const GraphSlice& slice,
                                             const CandidateList& candidates,
                                             double bucket_width) {
  if (!(bucket_width > 0.0)) throw Error("bucket width must be positive");
  if (!candidates || candidates->empty()) throw Error("query enumeration without candidates");
  std::vector<AffinityQuery> queries;
  const auto events = slice.events();
  std::vector<NodeId> active;
  auto it = events.begin();
  for (std::size_t b = 0;; ++b) {
    const double t0 = slice.t_start() + static_cast<double>(b) * bucket_width;
    if (!(t0 < slice.t_end())) break;
    const double t1 = t0 + bucket_width;
    active.clear();
    while (it != events.end() && it->t < t1) {
      active.push_back(it->src);
      ++it;
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    for (NodeId src : active) queries.push_back({src, t0, bucket_width, candidates});
  }
  return queries;
}

double dcg(std::span<const double> relevances_in_order, int k) {
  if (k < 1) throw Error("NDCG cutoff k must be at least 1");
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), relevances_in_order.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += (std::exp2(relevances_in_order[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return sum;
}

double ndcg_at_k(std::span<const double> predicted_scores, const AffinityTruth& truth, int k) {
  if (k < 1) throw Error("NDCG cutoff k must be at least 1");
  if (predicted_scores.size() != truth.values.size()) {
    throw Error("score / truth length mismatch (" + std::to_string(predicted_scores.size()) +
                " vs " + std::to_string(truth.values.size()) + ")");
  }
  const std::size_t n = truth.values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predicted_scores[a] > predicted_scores[b];
  });
  std::vector<double> ranked(n);
  for (std::size_t i = 0; i < n; ++i) ranked[i] = truth.values[order[i]];

  std::vector<double> ideal = truth.values;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal, k);
  if (idcg <= 0.0) return 1.0;
  return std::min(1.0, dcg(ranked, k) / idcg);
}

MeanNdcg mean_ndcg(std::span<const AffinityTruth> truths,
                   std::span<const std::vector<double>> predicted_scores, int k) {
  if (truths.empty()) throw Error("mean NDCG over an empty query list");
  if (truths.size() != predicted_scores.size()) throw Error("truth / prediction count mismatch");
  MeanNdcg out;
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i].all_zero) continue;
    sum += ndcg_at_k(predicted_scores[i], truths[i], k);
    ++out.queries_used;
  }
  if (out.queries_used == 0) {
    out.value = 1.0;
    out.all_zero_warning = true;
  } else {
    out.value = sum / static_cast<double>(out.queries_used);
  }
  return out;
}

MeanNdcg mean_ndcg(const GraphSlice& slice, std::span<const AffinityQuery> queries,
                   std::span<const std::vector<double>> predicted_scores, int k) {
  if (queries.empty()) throw Error("mean NDCG over an empty query list");
  const auto truths = ground_truth_batch(slice, queries);
  return mean_ndcg(truths, predicted_scores, k);
}

}  // namespace dygeval
