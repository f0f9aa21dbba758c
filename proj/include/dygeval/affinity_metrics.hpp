#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dygeval/temporal_graph.hpp"

namespace dygeval {

inline constexpr int kDefaultNdcgK = 10;

using CandidateList = std::shared_ptr<const std::vector<NodeId>>;

// Makes a candidate list, rejecting empty lists and duplicates.
CandidateList make_candidates(std::vector<NodeId> nodes);

// Source `src` at time t over the inclusive horizon [t, t + horizon].
struct AffinityQuery {
  NodeId src = 0;
  double t = 0.0;
  double horizon = 1.0;
  CandidateList candidates;
};

struct AffinityTruth {
  std::vector<double> values;  // aligned with the query's candidates
  bool all_zero = true;
};

// Normalized interaction weight from query.src to every candidate inside the
// horizon. Throws LabelAccessError on label-free slices.
AffinityTruth ground_truth_affinity(const GraphSlice& slice, const AffinityQuery& query);
AffinityTruth ground_truth_affinity(const StreamPtr& stream, const AffinityQuery& query);

// Truth for many queries at once; same semantics as ground_truth_affinity.
std::vector<AffinityTruth> ground_truth_batch(const GraphSlice& slice,
                                              std::span<const AffinityQuery> queries);

// Pluggable truth source. The harness routes every ground-truth lookup for
// scoring through one of these so label poisoning can be injected in tests.
using TruthFn = std::function<std::vector<AffinityTruth>(
    const GraphSlice&, std::span<const AffinityQuery>)>;

// One query per (source active in the bucket, bucket start), buckets of width
// `bucket_width` tiling the slice. Horizon equals the bucket width. Uses only
// event timing and source ids, never destinations, so it is safe on label-free
// slices.
std::vector<AffinityQuery> enumerate_queries(const GraphSlice& slice,
                                             const CandidateList& candidates,
                                             double bucket_width);

// Sum of (2^rel - 1) / log2(i + 1) over the first min(k, n) positions.
double dcg(std::span<const double> relevances_in_order, int k);

// Candidates ranked by descending score, ties by ascending index. Returns 1
// when the truth has no positive relevance.
double ndcg_at_k(std::span<const double> predicted_scores, const AffinityTruth& truth,
                 int k = kDefaultNdcgK);

struct MeanNdcg {
  double value = 1.0;
  std::size_t queries_used = 0;
  bool all_zero_warning = false;
};

// Mean NDCG@k over queries whose truth is not all-zero.
MeanNdcg mean_ndcg(std::span<const AffinityTruth> truths,
                   std::span<const std::vector<double>> predicted_scores,
                   int k = kDefaultNdcgK);

MeanNdcg mean_ndcg(const GraphSlice& slice, std::span<const AffinityQuery> queries,
                   std::span<const std::vector<double>> predicted_scores,
                   int k = kDefaultNdcgK);

}  // namespace dygeval
