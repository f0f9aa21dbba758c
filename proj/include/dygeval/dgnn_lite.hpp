#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dygeval/affinity_metrics.hpp"
#include "dygeval/temporal_graph.hpp"

namespace dygeval {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DgnnConfig {
  int embed_dim = 16;
  double time_decay = 0.5;  // lambda in exp(-lambda * dt)
  double learning_rate = 0.5;
  int epochs = 40;
  std::uint64_t rng_seed = 1;

  void validate() const;
  friend bool operator==(const DgnnConfig&, const DgnnConfig&) = default;
};

// Latent node embeddings for a set of nodes at a point in time.
struct EmbeddingMatrix {
  RowMatrix rows;               // M x d
  std::vector<NodeId> node_ids;  // M, unique, ascending
  double as_of_time = 0.0;

  std::size_t size() const noexcept { return node_ids.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(rows.cols()); }
};

// Compact temporal model.
//
// Every node has a learned static embedding x_n and a dynamic memory m_n; its
// embedding is h_n = x_n + m_n. Replaying an event (u, v, t, w) updates
//
//   m_u <- exp(-lambda * (t - tau_u)) * m_u + w' * P x_v,   tau_u <- t
//
// with w' the weight divided by the mean training weight. Candidate v is scored
// for source u by dot(h_u, h_v), and a softmax over candidates gives the
// affinity prediction. P and the static table are learned; `memory` is the
// replay state at the end of the training slice.
class DgnnModel {
 public:
  DgnnModel() = default;
  DgnnModel(DgnnConfig config, std::size_t num_nodes);

  const DgnnConfig& config() const noexcept { return config_; }
  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  int dim() const noexcept { return config_.embed_dim; }

  const RowMatrix& features() const noexcept { return features_; }
  const Eigen::MatrixXd& projection() const noexcept { return projection_; }
  const RowMatrix& memory() const noexcept { return memory_; }
  double weight_scale() const noexcept { return weight_scale_; }

  // x + memory for every node: the trained dynamic embedding table.
  RowMatrix node_embeddings() const { return features_ + memory_; }

  RowMatrix& mutable_features() noexcept { return features_; }
  Eigen::MatrixXd& mutable_projection() noexcept { return projection_; }
  RowMatrix& mutable_memory() noexcept { return memory_; }
  void set_weight_scale(double s) noexcept { weight_scale_ = s; }

  bool all_finite() const;

  friend bool operator==(const DgnnModel& a, const DgnnModel& b) {
    return a.config_ == b.config_ && a.features_ == b.features_ &&
           a.projection_ == b.projection_ && a.memory_ == b.memory_ &&
           a.weight_scale_ == b.weight_scale_;
  }

 private:
  DgnnConfig config_;
  RowMatrix features_;
  Eigen::MatrixXd projection_;
  RowMatrix memory_;
  double weight_scale_ = 1.0;
};

struct DgnnTrainingLog {
  std::vector<double> epoch_loss;  // loss of the accepted parameters per epoch
};

// Queries used for training are enumerated by the caller; their truth is
// computed from `train`. Full-batch gradient descent with step halving when
// the loss would increase.
DgnnModel train_dgnn(const GraphSlice& train, std::span<const AffinityQuery> queries,
                     const DgnnConfig& config, DgnnTrainingLog* log = nullptr);

// Mean cross-entropy over answerable queries; memory replay starts from zero
// at train.t_start(). When `grad_features` / `grad_projection` are non-null
// they receive the exact gradient (reverse pass through the replay).
double dgnn_loss(const DgnnModel& model, const GraphSlice& train,
                 std::span<const AffinityQuery> queries,
                 std::span<const AffinityTruth> truths, RowMatrix* grad_features,
                 Eigen::MatrixXd* grad_projection);

// Largest relative error between the analytic gradient and central finite
// differences over `coordinates` random entries of P and the feature table.
double dgnn_gradient_check(const DgnnModel& model, const GraphSlice& train,
                           std::span<const AffinityQuery> queries, int coordinates,
                           std::uint64_t seed, double step = 1e-5);

// Embeddings of all nodes active in `slice` after replaying it from the
// trained state (memory clocks reset to slice.t_start()). The model is not
// modified.
EmbeddingMatrix embed(const DgnnModel& model, const GraphSlice& slice);

// Embeddings of all nodes active in `train` taken from the trained state.
EmbeddingMatrix training_embeddings(const DgnnModel& model, const GraphSlice& train);

// Softmax affinity for one query using events of `slice` strictly before
// query.t, replayed from the trained state.
std::vector<double> predict_affinity(const DgnnModel& model, const GraphSlice& slice,
                                     const AffinityQuery& query);

// Same as predict_affinity for a batch of queries sharing one replay.
std::vector<std::vector<double>> predict_batch(const DgnnModel& model, const GraphSlice& slice,
                                               std::span<const AffinityQuery> queries);

// Mean NDCG@k of predict_batch against truth from `truth_fn` (ground truth of
// `slice` when empty).
MeanNdcg ground_truth_ndcg(const DgnnModel& model, const GraphSlice& slice,
                           std::span<const AffinityQuery> queries, int k = kDefaultNdcgK,
                           const TruthFn& truth_fn = {});

void save_dgnn(const DgnnModel& model, const std::string& path);
DgnnModel load_dgnn(const std::string& path);
std::string dgnn_to_json(const DgnnModel& model);
DgnnModel dgnn_from_json(const std::string& text);

}  // namespace dygeval
