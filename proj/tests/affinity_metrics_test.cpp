#include <gtest/gtest.h>

#include <cmath>

#include "dygeval/affinity_metrics.hpp"
#include "dygeval/error.hpp"
#include "dygeval/rng.hpp"
#include "test_util.hpp"

using namespace dygeval;
using dygeval::fixture::brute_force_ndcg;
using dygeval::fixture::make_stream;

namespace {

AffinityQuery query(NodeId src, double t, double horizon, std::vector<NodeId> cands) {
  return {src, t, horizon, make_candidates(std::move(cands))};
}

AffinityTruth truth_of(std::vector<double> v) {
  AffinityTruth t;
  t.all_zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  t.values = std::move(v);
  return t;
}

}  // namespace

TEST(GroundTruthAffinity, SingleDestinationIsOneHot) {
  const auto s = make_stream({{0, 2, 1.0, 2.0}, {0, 2, 1.5, 1.0}, {1, 3, 1.2, 1.0}}, 4);
  const auto t = ground_truth_affinity(GraphSlice::whole(s), query(0, 1.0, 1.0, {2, 3}));
  EXPECT_EQ(t.values, (std::vector<double>{1.0, 0.0}));
  EXPECT_FALSE(t.all_zero);
}

TEST(GroundTruthAffinity, WeightsAreNormalized) {
  const auto s = make_stream({{0, 1, 1.0, 3.0}, {0, 2, 2.0, 1.0}, {0, 1, 9.0, 5.0}}, 3);
  const auto t = ground_truth_affinity(GraphSlice::whole(s), query(0, 1.0, 2.0, {1, 2}));
  EXPECT_DOUBLE_EQ(t.values[0], 0.75);
  EXPECT_DOUBLE_EQ(t.values[1], 0.25);
}

TEST(GroundTruthAffinity, HorizonIsInclusive) {
  const auto s = make_stream({{0, 1, 3.0, 1.0}, {0, 2, 3.5, 1.0}}, 3);
  const auto t = ground_truth_affinity(GraphSlice::whole(s), query(0, 1.0, 2.0, {1, 2}));
  EXPECT_EQ(t.values, (std::vector<double>{1.0, 0.0}));
}

TEST(GroundTruthAffinity, EmptyHorizonSetsFlag) {
  const auto s = make_stream({{0, 1, 5.0, 1.0}}, 3);
  const auto t = ground_truth_affinity(GraphSlice::whole(s), query(0, 1.0, 1.0, {1, 2}));
  EXPECT_TRUE(t.all_zero);
  EXPECT_EQ(t.values, (std::vector<double>{0.0, 0.0}));
}

TEST(GroundTruthAffinity, LabelFreeSliceRefuses) {
  const auto s = make_stream({{0, 1, 1.0, 1.0}}, 2);
  const auto q = query(0, 1.0, 1.0, {1});
  EXPECT_THROW(ground_truth_affinity(GraphSlice::whole(s).as_unlabeled(), q), LabelAccessError);
  const std::vector<AffinityQuery> qs{q};
  EXPECT_THROW(ground_truth_batch(GraphSlice::whole(s).as_unlabeled(), qs), LabelAccessError);
}

TEST(MakeCandidates, RejectsEmptyAndDuplicates) {
  EXPECT_THROW(make_candidates({}), Error);
  EXPECT_THROW(make_candidates({1, 2, 1}), Error);
}

TEST(Dcg, Examples) {
  EXPECT_DOUBLE_EQ(dcg(std::vector<double>{1, 0, 0}, 3), 1.0);
  EXPECT_NEAR(dcg(std::vector<double>{0, 1}, 2), 1.0 / std::log2(3.0), 1e-12);
  EXPECT_NEAR(dcg(std::vector<double>{0, 1}, 2), 0.63093, 1e-5);
  EXPECT_EQ(dcg(std::vector<double>{0, 0, 0}, 3), 0.0);
  EXPECT_THROW(dcg(std::vector<double>{1}, 0), Error);
}

TEST(Dcg, CutoffTruncates) {
  EXPECT_DOUBLE_EQ(dcg(std::vector<double>{1, 1, 1}, 1), 1.0);
}

TEST(NdcgAtK, DefaultCutoffIsTen) { EXPECT_EQ(kDefaultNdcgK, 10); }

TEST(NdcgAtK, PerfectOrderIsOne) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<double>{3, 2, 1}, truth_of({0.5, 0.3, 0.2}), 3), 1.0);
}

TEST(NdcgAtK, ReversedOrder) {
  const std::vector<double> scores{1, 2, 3};
  const auto t = truth_of({0.5, 0.3, 0.2});
  const double v = ndcg_at_k(scores, t, 3);
  EXPECT_NEAR(v, 0.7907, 5e-5);
  EXPECT_NEAR(v, brute_force_ndcg(scores, t.values, 3), 1e-12);

  // Every ordering of three candidates lands between this value and 1.
  std::vector<double> perm{1, 2, 3};
  do {
    const double x = ndcg_at_k(perm, t, 3);
    EXPECT_GE(x, v - 1e-12);
    EXPECT_LE(x, 1.0);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(NdcgAtK, TiesBreakByCandidateIndex) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<double>{1, 1}, truth_of({1, 0}), 1), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<double>{1, 1}, truth_of({0, 1}), 1), 0.0);
}

TEST(NdcgAtK, MatchesBruteForceOnRandomInstances) {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng.below(6);
    const int k = 1 + static_cast<int>(rng.below(7));
    std::vector<double> scores(n), truth(n);
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = static_cast<double>(rng.below(4));  // ties on purpose
      truth[j] = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    }
    EXPECT_NEAR(ndcg_at_k(scores, truth_of(truth), k), brute_force_ndcg(scores, truth, k), 1e-12);
  }
}

TEST(NdcgAtK, RejectsMismatchedLengths) {
  EXPECT_THROW(ndcg_at_k(std::vector<double>{1, 2}, truth_of({1}), 10), Error);
}

TEST(MeanNdcg, SingletonAndMean) {
  const std::vector<AffinityTruth> one{truth_of({0.5, 0.3, 0.2})};
  const std::vector<std::vector<double>> s1{{1, 2, 3}};
  EXPECT_DOUBLE_EQ(mean_ndcg(one, s1, 3).value, ndcg_at_k(s1[0], one[0], 3));

  // NDCG@1 of 1.0 and 0.5.
  const std::vector<AffinityTruth> two{truth_of({1, 0}), truth_of({std::log2(1.5), 1})};
  const std::vector<std::vector<double>> s2{{1, 0}, {1, 0}};
  EXPECT_NEAR(ndcg_at_k(s2[1], two[1], 1), 0.5, 1e-12);
  EXPECT_NEAR(mean_ndcg(two, s2, 1).value, 0.75, 1e-12);
}

TEST(MeanNdcg, ExcludesAllZeroTruth) {
  Rng rng(4);
  std::vector<AffinityTruth> truths;
  std::vector<std::vector<double>> scores;
  double sum = 0.0;
  std::size_t used = 0;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> t(4, 0.0), s(4);
    const bool empty = rng.uniform() < 0.4;
    for (int j = 0; j < 4; ++j) {
      if (!empty) t[j] = rng.uniform();
      s[j] = rng.uniform();
    }
    if (!empty) {
      sum += brute_force_ndcg(s, t, 3);
      ++used;
    }
    truths.push_back(truth_of(t));
    scores.push_back(s);
  }
  const MeanNdcg m = mean_ndcg(truths, scores, 3);
  EXPECT_EQ(m.queries_used, used);
  EXPECT_NEAR(m.value, sum / used, 1e-12);
  EXPECT_FALSE(m.all_zero_warning);
}

TEST(MeanNdcg, AllZeroWarns) {
  const std::vector<AffinityTruth> truths{truth_of({0, 0})};
  const std::vector<std::vector<double>> scores{{1, 2}};
  const MeanNdcg m = mean_ndcg(truths, scores);
  EXPECT_TRUE(m.all_zero_warning);
  EXPECT_EQ(m.queries_used, 0u);
}

TEST(EnumerateQueries, OnePerActiveSourcePerBucket) {
  const auto s = make_stream(
      {{0, 3, 0.1, 1}, {1, 3, 0.5, 1}, {0, 3, 0.9, 1}, {2, 3, 1.5, 1}, {0, 3, 3.2, 1}}, 4);
  const auto qs = enumerate_queries(window(s, 0, 4), make_candidates({3}), 1.0);
  ASSERT_EQ(qs.size(), 4u);
  EXPECT_EQ(qs[0].src, 0u);
  EXPECT_EQ(qs[1].src, 1u);
  EXPECT_EQ(qs[2].src, 2u);
  EXPECT_EQ(qs[2].t, 1.0);
  EXPECT_EQ(qs[3].t, 3.0);
  EXPECT_EQ(qs[3].horizon, 1.0);
}

TEST(EnumerateQueries, WorksOnLabelFreeSlices) {
  const auto s = make_stream({{0, 1, 0.1, 1}}, 2);
  EXPECT_EQ(enumerate_queries(GraphSlice::whole(s).as_unlabeled(), make_candidates({1}), 1).size(),
            1u);
}
