#include <gtest/gtest.h>

#include <cmath>

#include "dygeval/baselines.hpp"
#include "dygeval/error.hpp"
#include "test_util.hpp"

using namespace dygeval;
using dygeval::fixture::make_stream;
using Eigen::MatrixXd;

namespace {

const fixture::Trained& shared_model() {
  static const fixture::Trained t = fixture::train_small();
  return t;
}

ReferenceSet shared_reference() {
  const auto& t = shared_model();
  return select_reference_nodes(training_embeddings(t.model, t.train), 6,
                                ReferenceStrategy::first_n);
}

double logit(double p) { return std::log(p / (1 - p)); }

StaticDiscrepancyGraph random_graph(Rng& rng, int nodes, int cols, double label) {
  StaticDiscrepancyGraph g;
  g.features = MatrixXd(nodes, cols);
  for (Eigen::Index i = 0; i < g.features.size(); ++i) g.features.data()[i] = rng.uniform(-1, 1);
  g.adjacency = MatrixXd::Zero(nodes, nodes);
  for (int a = 0; a < nodes; ++a) {
    for (int b = a + 1; b < nodes; ++b) {
      if (rng.uniform() < 0.4) g.adjacency(a, b) = g.adjacency(b, a) = 1;
    }
  }
  g.label = label;
  return g;
}

}  // namespace

TEST(Threshold, ReportedTaus) {
  EXPECT_EQ(std::vector<double>(std::begin(kThresholdTaus), std::end(kThresholdTaus)),
            (std::vector<double>{0.5, 0.7, 0.9}));
}

TEST(Threshold, CountsQueriesAboveTau) {
  const std::vector<std::vector<double>> p{{0.9, 0.1}, {0.4, 0.6}, {0.2, 0.8}};
  EXPECT_DOUBLE_EQ(threshold_fraction(p, {0.7}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(threshold_fraction(p, {0.5}), 1.0);
  EXPECT_DOUBLE_EQ(threshold_fraction(p, {0.95}), 0.0);
}

TEST(Threshold, Validation) {
  const std::vector<std::vector<double>> p{{1.0}};
  EXPECT_THROW(threshold_fraction(p, {0.0}), Error);
  EXPECT_THROW(threshold_fraction(p, {1.0}), Error);
  EXPECT_THROW(threshold_fraction({}, {0.5}), Error);
}

TEST(Threshold, EstimateMatchesPredictions) {
  const auto& t = shared_model();
  const auto qs = enumerate_queries(t.test, t.candidates, t.test.length() / 10);
  const auto probs = predict_batch(t.model, t.test, qs);
  std::size_t hits = 0;
  for (const auto& p : probs) hits += *std::max_element(p.begin(), p.end()) > 0.1;
  EXPECT_DOUBLE_EQ(threshold_estimate(t.model, t.test.as_unlabeled(), qs, {0.1}),
                   static_cast<double>(hits) / probs.size());
}

TEST(StaticDiscrepancy, SingleEventHasOneEdge) {
  const auto& t = shared_model();
  const auto s = make_stream({{0, 30, 5.0, 1.0}}, t.stream->num_nodes());
  const auto g = build_static_discrepancy(t.model, shared_reference(), GraphSlice::whole(s), 0.4);
  EXPECT_EQ(g.adjacency.rows(), 2);
  EXPECT_EQ(g.adjacency.sum(), 2.0);
  EXPECT_EQ(g.adjacency(0, 1), 1.0);
  EXPECT_EQ(g.label, 0.4);
}

TEST(StaticDiscrepancy, EdgesAtLastTimestampOnly) {
  const auto& t = shared_model();
  const auto s = make_stream({{0, 1, 1.0, 1.0},
                              {0, 30, 2.0, 1.0},
                              {1, 31, 2.0, 1.0},
                              {2, 30, 2.0, 1.0},
                              {0, 30, 2.0, 1.0}},
                             t.stream->num_nodes());
  const auto g = build_static_discrepancy(t.model, shared_reference(), GraphSlice::whole(s), 0.0);
  ASSERT_EQ(g.adjacency.rows(), 5);  // nodes 0, 1, 2, 30, 31
  EXPECT_EQ(g.adjacency, g.adjacency.transpose());
  EXPECT_EQ(g.adjacency.diagonal().sum(), 0.0);
  EXPECT_EQ(g.adjacency.sum() / 2, 3.0);
  EXPECT_EQ(g.adjacency(0, 1), 0.0);  // earlier timestamp
}

TEST(StaticDiscrepancy, DroppedFinalBatchLeavesNoEdges) {
  const auto& t = shared_model();
  const auto s = make_stream({{0, 30, 1.0, 1.0}, {1, 31, 2.0, 1.0}}, t.stream->num_nodes());
  const GraphSlice g = GraphSlice::whole(s);
  const auto own = build_static_discrepancy(t.model, shared_reference(), g, 0.0);
  EXPECT_EQ(own.adjacency.sum(), 2.0);
  // The seed's final batch sat at t = 3 and was dropped entirely.
  const auto seeded = build_static_discrepancy(t.model, shared_reference(), g, 0.0, 3.0);
  EXPECT_EQ(seeded.adjacency.sum(), 0.0);
  EXPECT_EQ(seeded.features, own.features);
}

TEST(Threshold, MonotoneInTauAndBounded) {
  const auto& t = shared_model();
  const GraphSlice test = t.test.as_unlabeled();
  const auto qs = enumerate_queries(test, t.candidates, test.length() / 10);
  double prev = 1.0;
  for (double tau = 0.02; tau < 1.0; tau += 0.04) {
    const double v = threshold_estimate(t.model, test, qs, {tau});
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
}

TEST(StaticDiscrepancy, FeaturesMatchDynamicPipeline) {
  const auto& t = shared_model();
  SimulationConfig c;
  c.count = 3;
  const auto graphs = build_simulated_set(t.train, c, 1);
  const std::vector<double> labels{0.1, 0.2, 0.3};
  const ReferenceSet ref = shared_reference();
  const auto records = build_discrepancy_set(t.model, graphs, labels, ref);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto g = build_static_discrepancy(t.model, ref, graphs[i].slice, labels[i]);
    EXPECT_EQ(g.features, records[i].features);
  }
}

TEST(Gcn, EmptyAdjacencyIsPerNode) {
  Rng rng(3);
  StaticDiscrepancyGraph g = random_graph(rng, 5, 4, 0.5);
  g.adjacency.setZero();
  const GcnRegressor r(GcnConfig{}, 4);

  // Without edges, the pooled logit is the mean of single-node logits.
  double mean_logit = 0.0;
  for (int i = 0; i < 5; ++i) {
    StaticDiscrepancyGraph one{g.features.row(i), MatrixXd::Zero(1, 1), 0.5};
    mean_logit += logit(r.predict(one)) / 5;
  }
  EXPECT_NEAR(logit(r.predict(g)), mean_logit, 1e-10);
}

TEST(Gcn, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const StaticDiscrepancyGraph g = random_graph(rng, 6, 3, 0.3);
  GcnConfig c;
  c.hidden_dim = 5;
  GcnRegressor r(c, 3);
  std::vector<double> grad;
  r.loss_and_gradient(g, grad);
  std::vector<double> dummy;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double keep = r.values()[i];
    r.values()[i] = keep + 1e-6;
    const double up = r.loss_and_gradient(g, dummy);
    r.values()[i] = keep - 1e-6;
    const double down = r.loss_and_gradient(g, dummy);
    r.values()[i] = keep;
    const double numeric = (up - down) / 2e-6;
    EXPECT_LT(std::abs(numeric - grad[i]) / std::max(std::abs(numeric) + std::abs(grad[i]), 1e-5),
              1e-4)
        << "coordinate " << i;
  }
}

TEST(Gcn, ConstantLabelsAreMatched) {
  Rng rng(5);
  std::vector<StaticDiscrepancyGraph> train;
  for (int i = 0; i < 15; ++i) train.push_back(random_graph(rng, 3 + rng.below(5), 4, 0.35));
  const StaticDiscrepancyGraph test = random_graph(rng, 6, 4, 0.0);
  GcnConfig c;
  c.epochs = 20;
  EXPECT_NEAR(gnnevaluator_estimate(train, test, c), 0.35, 1e-2);
}

TEST(Gcn, DeterministicTraining) {
  Rng rng(6);
  std::vector<StaticDiscrepancyGraph> train;
  for (int i = 0; i < 8; ++i) train.push_back(random_graph(rng, 4, 3, rng.uniform()));
  GcnConfig c;
  c.epochs = 10;
  const auto a = train_gcn_regressor(train, c);
  const auto b = train_gcn_regressor(train, c);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_THROW(train_gcn_regressor(std::span(train).first(1), c), Error);
}
