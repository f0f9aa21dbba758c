#include "dygeval/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dygeval/error.hpp"
#include "dygeval/rng.hpp"

namespace dygeval {

using Eigen::MatrixXd;

void ThresholdConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error("tau must lie in (0, 1)");
}

double threshold_fraction(std::span<const std::vector<double>> probabilities,
                          const ThresholdConfig& config) {
  config.validate();
  if (probabilities.empty()) throw Error("threshold estimate needs at least one query");
  std::size_t hits = 0;
  for (const auto& p : probabilities) {
    if (p.empty()) continue;
    if (*std::max_element(p.begin(), p.end()) > config.tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probabilities.size());
}

double threshold_estimate(const DgnnModel& model, const GraphSlice& slice,
                          std::span<const AffinityQuery> queries, const ThresholdConfig& config) {
  if (queries.empty()) throw Error("threshold estimate needs at least one query");
  const auto probs = predict_batch(model, slice, queries);
  return threshold_fraction(probs, config);
}

StaticDiscrepancyGraph build_static_discrepancy(const DgnnModel& model, const ReferenceSet& ref,
                                                const GraphSlice& graph, double label,
                                                std::optional<double> snapshot_time) {
  if (graph.empty()) throw Error("cannot build a static graph from an empty slice");
  const EmbeddingMatrix z = embed(model, graph);
  StaticDiscrepancyGraph out;
  out.features = cosine_discrepancy(z, ref).values;
  out.label = label;
  const auto m = static_cast<Eigen::Index>(z.size());
  out.adjacency = MatrixXd::Zero(m, m);
  auto row_of = [&](NodeId id) {
    const auto it = std::lower_bound(z.node_ids.begin(), z.node_ids.end(), id);
    return static_cast<Eigen::Index>(it - z.node_ids.begin());
  };
  const auto events = graph.events();
  const double last = snapshot_time.value_or(events.back().t);
  for (auto it = events.rbegin(); it != events.rend() && it->t == last; ++it) {
    if (it->src == it->dst) continue;
    const Eigen::Index a = row_of(it->src);
    const Eigen::Index b = row_of(it->dst);
    out.adjacency(a, b) = 1.0;
    out.adjacency(b, a) = 1.0;
  }
  return out;
}

namespace {

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

MatrixXd normalized_adjacency(const MatrixXd& a) {
  MatrixXd n = a + MatrixXd::Identity(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < n.rows(); ++r) n.row(r) /= n.row(r).sum();
  return n;
}

// Offsets into the flat buffer: W1 (in x h), b1 (h), W2 (h x h), b2 (h), wo (h), bo.
struct GcnLayout {
  std::size_t w1, b1, w2, b2, wo, bo, total;
  GcnLayout(int in, int h) {
    const auto n = static_cast<std::size_t>(in);
    const auto hh = static_cast<std::size_t>(h);
    w1 = 0;
    b1 = w1 + n * hh;
    w2 = b1 + hh;
    b2 = w2 + hh * hh;
    wo = b2 + hh;
    bo = wo + hh;
    total = bo + 1;
  }
};

}  // namespace

GcnRegressor::GcnRegressor(const GcnConfig& config, int input_dim)
    : config_(config), input_dim_(input_dim) {
  if (config.hidden_dim < 1 || input_dim < 1) throw Error("GCN dimensions must be positive");
  const GcnLayout l(input_dim, config.hidden_dim);
  data_.assign(l.total, 0.0);
  Rng rng(derive_seed(config.rng_seed, "gcn.init"));
  const double lim1 = std::sqrt(6.0 / (input_dim + config.hidden_dim));
  const double lim2 = std::sqrt(6.0 / (2.0 * config.hidden_dim));
  const double limo = std::sqrt(6.0 / (config.hidden_dim + 1.0));
  for (std::size_t i = l.w1; i < l.b1; ++i) data_[i] = rng.uniform(-lim1, lim1);
  for (std::size_t i = l.w2; i < l.b2; ++i) data_[i] = rng.uniform(-lim2, lim2);
  for (std::size_t i = l.wo; i < l.bo; ++i) data_[i] = rng.uniform(-limo, limo);
}

namespace {

struct GcnPass {
  MatrixXd an, ax, h1, ah1, h2, pooled;
  double pred = 0.0;
};

template <typename Data>
GcnPass gcn_forward(Data data, int in, int h, const StaticDiscrepancyGraph& g) {
  if (g.features.cols() != in) throw Error("static graph feature width does not match the GCN");
  const GcnLayout l(in, h);
  using CMap = Eigen::Map<const MatrixXd>;
  const CMap w1(data + l.w1, in, h), b1(data + l.b1, 1, h), w2(data + l.w2, h, h),
      b2(data + l.b2, 1, h), wo(data + l.wo, h, 1);
  GcnPass p;
  p.an = normalized_adjacency(g.adjacency);
  p.ax = p.an * g.features;
  MatrixXd z1 = p.ax * w1;
  z1.rowwise() += b1.row(0);
  p.h1 = z1.array().tanh();
  p.ah1 = p.an * p.h1;
  MatrixXd z2 = p.ah1 * w2;
  z2.rowwise() += b2.row(0);
  p.h2 = z2.array().tanh();
  p.pooled = p.h2.colwise().mean();
  p.pred = sigmoid((p.pooled * wo)(0, 0) + data[l.bo]);
  return p;
}

}  // namespace

double GcnRegressor::predict(const StaticDiscrepancyGraph& graph) const {
  return gcn_forward(data_.data(), input_dim_, config_.hidden_dim, graph).pred;
}

double GcnRegressor::loss_and_gradient(const StaticDiscrepancyGraph& graph,
                                       std::vector<double>& grad) const {
  const int in = input_dim_;
  const int h = config_.hidden_dim;
  const GcnLayout l(in, h);
  const GcnPass p = gcn_forward(data_.data(), in, h, graph);
  grad.assign(data_.size(), 0.0);
  const double diff = p.pred - graph.label;
  const double dlogit = 2.0 * diff * p.pred * (1.0 - p.pred);

  using Map = Eigen::Map<MatrixXd>;
  using CMap = Eigen::Map<const MatrixXd>;
  const CMap w2(data_.data() + l.w2, h, h), wo(data_.data() + l.wo, h, 1);
  Map gw1(grad.data() + l.w1, in, h), gb1(grad.data() + l.b1, 1, h), gw2(grad.data() + l.w2, h, h),
      gb2(grad.data() + l.b2, 1, h), gwo(grad.data() + l.wo, h, 1);

  gwo = p.pooled.transpose() * dlogit;
  grad[l.bo] = dlogit;
  const auto m = static_cast<double>(p.h2.rows());
  const MatrixXd dh2 = MatrixXd::Ones(p.h2.rows(), 1) * (wo.transpose() * dlogit) / m;
  const MatrixXd dz2 = dh2.cwiseProduct((1.0 - p.h2.array().square()).matrix());
  gw2 = p.ah1.transpose() * dz2;
  gb2 = dz2.colwise().sum();
  const MatrixXd dh1 = p.an.transpose() * (dz2 * w2.transpose());
  const MatrixXd dz1 = dh1.cwiseProduct((1.0 - p.h1.array().square()).matrix());
  gw1 = p.ax.transpose() * dz1;
  gb1 = dz1.colwise().sum();
  return diff * diff;
}

GcnRegressor train_gcn_regressor(std::span<const StaticDiscrepancyGraph> train_set,
                                 const GcnConfig& config) {
  if (train_set.size() < 2) throw Error("GNNEvaluator training needs at least 2 graphs");
  const auto in = static_cast<int>(train_set.front().features.cols());
  GcnRegressor model(config, in);
  const GcnLayout l(in, config.hidden_dim);

  double mean = 0.0;
  for (const auto& g : train_set) mean += g.label;
  mean = std::clamp(mean / static_cast<double>(train_set.size()), 0.01, 0.99);
  model.values()[l.bo] = std::log(mean / (1.0 - mean));

  auto mse = [&](const GcnRegressor& r) {
    double total = 0.0;
    for (const auto& g : train_set) total += std::pow(r.predict(g) - g.label, 2);
    return total / static_cast<double>(train_set.size());
  };
  GcnRegressor best = model;
  double best_mse = mse(model);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.rng_seed, "gcn.shuffle", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const double loss = model.loss_and_gradient(train_set[i], grad);
      if (!std::isfinite(loss)) throw DivergenceError("GNNEvaluator loss is not finite", epoch + 1);
      auto v = model.values();
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= config.learning_rate * grad[j];
    }
    const double e = mse(model);
    if (!std::isfinite(e)) throw DivergenceError("GNNEvaluator loss is not finite", epoch + 1);
    if (e < best_mse) {
      best_mse = e;
      best = model;
    }
  }
  return best;
}

double gnnevaluator_estimate(std::span<const StaticDiscrepancyGraph> train_set,
                             const StaticDiscrepancyGraph& test_graph, const GcnConfig& config) {
  return train_gcn_regressor(train_set, config).predict(test_graph);
}

}  // namespace dygeval
