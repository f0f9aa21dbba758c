#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dygeval/dgnn_lite.hpp"
#include "dygeval/discrepancy.hpp"
#include "dygeval/simulation.hpp"

namespace dygeval {

struct ThresholdConfig {
  double tau = 0.5;
  void validate() const;
};

inline constexpr double kThresholdTaus[] = {0.5, 0.7, 0.9};

// Fraction of queries whose largest softmax probability exceeds tau.
double threshold_fraction(std::span<const std::vector<double>> probabilities,
                          const ThresholdConfig& config);

// Runs the model over a label-free slice and returns threshold_fraction.
double threshold_estimate(const DgnnModel& model, const GraphSlice& slice,
                          std::span<const AffinityQuery> queries, const ThresholdConfig& config);

// Cosine discrepancy features plus the undirected adjacency of the edges at
// the snapshot time. The snapshot defaults to the graph's last timestamp; for
// a simulated graph pass the seed window's last timestamp, so a graph whose
// final batch was dropped gets an empty adjacency.
struct StaticDiscrepancyGraph {
  Eigen::MatrixXd features;   // M x n_ref
  Eigen::MatrixXd adjacency;  // M x M, symmetric 0/1, zero diagonal
  double label = 0.0;
};

StaticDiscrepancyGraph build_static_discrepancy(const DgnnModel& model, const ReferenceSet& ref,
                                                const GraphSlice& graph, double label,
                                                std::optional<double> snapshot_time = {});

struct GcnConfig {
  int hidden_dim = 32;
  double learning_rate = 0.05;
  int epochs = 60;
  std::uint64_t rng_seed = 5;
};

// Two mean-aggregating graph convolutions (row-normalized A + I), mean
// pooling and a logistic head.
class GcnRegressor {
 public:
  GcnRegressor(const GcnConfig& config, int input_dim);

  double predict(const StaticDiscrepancyGraph& graph) const;
  double loss_and_gradient(const StaticDiscrepancyGraph& graph, std::vector<double>& grad) const;
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  GcnConfig config_;
  int input_dim_;
  std::vector<double> data_;
};

GcnRegressor train_gcn_regressor(std::span<const StaticDiscrepancyGraph> train_set,
                                 const GcnConfig& config);

double gnnevaluator_estimate(std::span<const StaticDiscrepancyGraph> train_set,
                             const StaticDiscrepancyGraph& test_graph,
                             const GcnConfig& config = {});

}  // namespace dygeval
