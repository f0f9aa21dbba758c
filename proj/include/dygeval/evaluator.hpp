#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dygeval/dgnn_lite.hpp"
#include "dygeval/discrepancy.hpp"

namespace dygeval {

enum class EvaluatorBackbone { self_attention, mlp };

std::string to_string(EvaluatorBackbone backbone);
EvaluatorBackbone backbone_from_string(const std::string& name);

struct EvaluatorConfig {
  EvaluatorBackbone backbone = EvaluatorBackbone::self_attention;
  int layers = 2;
  int heads = 2;
  int hidden_dim = 32;
  double learning_rate = 0.02;
  int epochs = 60;
  std::uint64_t rng_seed = 3;
  int max_tokens = 256;

  int ffn_dim() const noexcept { return 2 * hidden_dim; }
  void validate() const;
  friend bool operator==(const EvaluatorConfig&, const EvaluatorConfig&) = default;
};

// All regressor weights in one flat buffer, addressed through named groups.
class EvaluatorParams {
 public:
  struct Group {
    std::string name;
    std::size_t offset;
    int rows;
    int cols;
  };

  EvaluatorParams() = default;
  // Zero-filled parameters for the given shape.
  EvaluatorParams(const EvaluatorConfig& config, int input_dim);
  // Xavier-uniform weights, unit layer-norm gains, zero biases.
  static EvaluatorParams initialize(const EvaluatorConfig& config, int input_dim);

  const EvaluatorConfig& config() const noexcept { return config_; }
  int input_dim() const noexcept { return input_dim_; }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<Group>& groups() const noexcept { return groups_; }
  const Group& group(const std::string& name) const;

  Eigen::Map<Eigen::MatrixXd> matrix(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> matrix(const std::string& name) const;
  Eigen::Map<const Eigen::MatrixXd> matrix(std::size_t group_index) const;
  Eigen::Map<Eigen::MatrixXd> matrix(std::size_t group_index);

  // Fixed per-column standardization applied to inputs before the projection:
  // (x - shift) * scale. Set from training data, not learned; identity by default.
  const Eigen::RowVectorXd& input_shift() const noexcept { return input_shift_; }
  const Eigen::RowVectorXd& input_scale() const noexcept { return input_scale_; }
  void set_input_normalization(Eigen::RowVectorXd shift, Eigen::RowVectorXd scale);

  bool all_finite() const;

  friend bool operator==(const EvaluatorParams& a, const EvaluatorParams& b) {
    return a.config_ == b.config_ && a.input_dim_ == b.input_dim_ && a.data_ == b.data_ &&
           a.input_shift_ == b.input_shift_ && a.input_scale_ == b.input_scale_;
  }

 private:
  EvaluatorConfig config_;
  int input_dim_ = 0;
  std::vector<double> data_;
  std::vector<Group> groups_;
  Eigen::RowVectorXd input_shift_;
  Eigen::RowVectorXd input_scale_;
};

// Rows kept when a matrix exceeds max_tokens: every ceil(M / max_tokens)-th.
Eigen::MatrixXd cap_tokens(const Eigen::MatrixXd& x, int max_tokens);

// Predicted performance in (0, 1).
double evaluator_forward(const EvaluatorParams& params, const Eigen::MatrixXd& x);

// Squared error (forward(x) - y)^2 and its gradient in the flat layout.
double evaluator_loss_and_gradient(const EvaluatorParams& params, const Eigen::MatrixXd& x,
                                   double y, std::vector<double>& grad);

struct EvaluatorTrainingLog {
  double initial_mse = 0.0;
  double final_mse = 0.0;
  std::vector<double> epoch_mse;  // full-set MSE after each epoch
};

// Per-record gradient descent in a seeded shuffled order each epoch; returns
// the parameters with the lowest full-set MSE seen (initial ones included).
EvaluatorParams train_evaluator(std::span<const DiscrepancyRecord> records,
                                const EvaluatorConfig& config,
                                EvaluatorTrainingLog* log = nullptr);

double evaluator_mse(const EvaluatorParams& params, std::span<const DiscrepancyRecord> records);

// Label-free performance estimate. `test` must be flagged label-free.
double estimate(const EvaluatorParams& params, const DgnnModel& model, const ReferenceSet& ref,
                const GraphSlice& test, DiscrepancyKind kind = DiscrepancyKind::cosine);

// Worst relative error between analytic and central-difference gradients over
// at least `coordinates` entries, with every parameter group sampled.
double evaluator_gradient_check(const EvaluatorConfig& config, const Eigen::MatrixXd& x,
                                double y, std::uint64_t seed, int coordinates = 24,
                                double step = 1e-5);
double evaluator_gradient_check(const EvaluatorParams& params, const Eigen::MatrixXd& x,
                                double y, std::uint64_t seed, int coordinates = 24,
                                double step = 1e-5);

std::string evaluator_to_json(const EvaluatorParams& params);
EvaluatorParams evaluator_from_json(const std::string& text);
void save_evaluator(const EvaluatorParams& params, const std::string& path);
EvaluatorParams load_evaluator(const std::string& path);

}  // namespace dygeval
