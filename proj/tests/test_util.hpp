#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "dygeval/dgnn_lite.hpp"
#include "dygeval/temporal_graph.hpp"

namespace dygeval::fixture {

inline StreamPtr make_stream(std::vector<EdgeEvent> events, std::size_t num_nodes) {
  return std::make_shared<const EdgeStream>(std::move(events), num_nodes);
}

// Events at the given times, cycling through sources 0..2 and destination 3.
inline StreamPtr stream_at(const std::vector<double>& times) {
  std::vector<EdgeEvent> ev;
  for (std::size_t i = 0; i < times.size(); ++i) {
    ev.push_back({static_cast<NodeId>(i % 3), 3, times[i], 1.0});
  }
  return make_stream(std::move(ev), 4);
}

// Small drift stream that trains in well under a second.
inline DriftConfig small_drift(std::uint64_t seed = 11, double drift_rate = 0.05) {
  DriftConfig c;
  c.num_nodes = 40;
  c.num_destinations = 15;
  c.num_communities = 3;
  c.horizon = 40.0;
  c.base_rate = 20.0;
  c.drift_rate = drift_rate;
  c.rng_seed = seed;
  return c;
}

// Independent NDCG: direct DCG of the predicted order, IDCG by trying every
// permutation of the relevances.
inline double brute_force_ndcg(const std::vector<double>& scores,
                               const std::vector<double>& truth, int k) {
  const std::size_t n = truth.size();
  auto dcg_of = [&](const std::vector<std::size_t>& order) {
    double s = 0.0;
    for (std::size_t i = 0; i < n && static_cast<int>(i) < k; ++i) {
      s += (std::pow(2.0, truth[order[i]]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
  };
  std::vector<std::size_t> predicted(n);
  std::iota(predicted.begin(), predicted.end(), 0);
  std::stable_sort(predicted.begin(), predicted.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    best = std::max(best, dcg_of(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best == 0.0) return 1.0;
  return dcg_of(predicted) / best;
}

struct Trained {
  StreamPtr stream;
  GraphSlice train;
  GraphSlice test;
  CandidateList candidates;
  std::vector<AffinityQuery> train_queries;
  DgnnModel model;
};

// Split of the small drift stream plus a briefly trained model.
inline Trained train_small(DgnnConfig config = {}, double drift_rate = 0.05) {
  const StreamPtr s =
      std::make_shared<const EdgeStream>(synth_drift_stream(small_drift(11, drift_rate)));
  auto [train, test] = split_train_test(s, 0.7);
  const CandidateList cands = make_candidates(destination_nodes(train));
  auto queries = enumerate_queries(train, cands, train.length() / 20);
  config.epochs = 15;
  DgnnModel model = train_dgnn(train, queries, config);
  return {s, train, test, cands, std::move(queries), std::move(model)};
}

}  // namespace dygeval::fixture
