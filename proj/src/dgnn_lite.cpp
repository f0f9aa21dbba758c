#include "dygeval/dgnn_lite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dygeval/error.hpp"
#include "dygeval/rng.hpp"
#include "json.hpp"
#include "json_util.hpp"

namespace dygeval {

namespace {

// Mutable replay state: memory rows plus each node's last update time.
struct ReplayState {
  RowMatrix memory;
  std::vector<double> clock;

  ReplayState(const RowMatrix& start, double t0)
      : memory(start), clock(static_cast<std::size_t>(start.rows()), t0) {}

  // Returns the decay factor applied to m_u.
  double apply(const DgnnModel& model, const EdgeEvent& e) {
    const double dt = std::max(0.0, e.t - clock[e.src]);
    const double decay = std::exp(-model.config().time_decay * dt);
    const double w = e.w / model.weight_scale();
    memory.row(e.src) = decay * memory.row(e.src) +
                        w * (model.projection() * model.features().row(e.dst).transpose()).transpose();
    clock[e.src] = e.t;
    return decay;
  }
};

std::vector<std::size_t> order_by_time(std::span<const AffinityQuery> queries) {
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return queries[a].t < queries[b].t; });
  return order;
}

void check_nodes(const DgnnModel& model, const AffinityQuery& q) {
  if (q.src >= model.num_nodes()) throw Error("unknown node id " + std::to_string(q.src));
  for (NodeId c : *q.candidates) {
    if (c >= model.num_nodes()) throw Error("unknown node id " + std::to_string(c));
  }
}

// Raw dot-product scores for one query against the current replay state.
Eigen::VectorXd score_query(const DgnnModel& model, const ReplayState& state,
                            const AffinityQuery& q) {
  const auto& cands = *q.candidates;
  const Eigen::RowVectorXd hu = model.features().row(q.src) + state.memory.row(q.src);
  Eigen::VectorXd s(static_cast<Eigen::Index>(cands.size()));
  for (std::size_t i = 0; i < cands.size(); ++i) {
    s[static_cast<Eigen::Index>(i)] =
        hu.dot(model.features().row(cands[i]) + state.memory.row(cands[i]));
  }
  return s;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& s) {
  const double mx = s.maxCoeff();
  Eigen::VectorXd p = (s.array() - mx).exp();
  return p / p.sum();
}

RowMatrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-0.1, 0.1);
  }
  return m;
}

double mean_weight(const GraphSlice& slice) {
  double s = 0.0;
  for (const auto& e : slice.events()) s += e.w;
  return slice.empty() ? 1.0 : s / static_cast<double>(slice.size());
}

std::vector<NodeId> active_nodes(const GraphSlice& slice) {
  std::vector<char> seen(slice.num_nodes(), 0);
  for (const auto& e : slice.events()) {
    seen[e.src] = 1;
    seen[e.dst] = 1;
  }
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < seen.size(); ++v) {
    if (seen[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

EmbeddingMatrix gather(const DgnnModel& model, const RowMatrix& memory,
                       std::vector<NodeId> nodes, double as_of) {
  EmbeddingMatrix z;
  z.rows.resize(static_cast<Eigen::Index>(nodes.size()), model.dim());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    z.rows.row(static_cast<Eigen::Index>(i)) = model.features().row(nodes[i]) + memory.row(nodes[i]);
  }
  z.node_ids = std::move(nodes);
  z.as_of_time = as_of;
  return z;
}

}  // namespace

void DgnnConfig::validate() const {
  if (embed_dim < 2) throw Error("embed_dim must be at least 2");
  if (!(time_decay > 0.0)) throw Error("time_decay must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (epochs < 1) throw Error("epochs must be at least 1");
}

DgnnModel::DgnnModel(DgnnConfig config, std::size_t num_nodes) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config_.rng_seed, "dgnn-init"));
  const auto n = static_cast<Eigen::Index>(num_nodes);
  features_ = uniform_matrix(n, config_.embed_dim, rng);
  projection_ = uniform_matrix(config_.embed_dim, config_.embed_dim, rng);
  memory_ = RowMatrix::Zero(n, config_.embed_dim);
}

bool DgnnModel::all_finite() const {
  return features_.allFinite() && projection_.allFinite() && memory_.allFinite() &&
         std::isfinite(weight_scale_);
}

double dgnn_loss(const DgnnModel& model, const GraphSlice& train,
                 std::span<const AffinityQuery> queries, std::span<const AffinityTruth> truths,
                 RowMatrix* grad_features, Eigen::MatrixXd* grad_projection) {
  if (queries.size() != truths.size()) throw Error("query / truth count mismatch");
  const bool want_grad = grad_features != nullptr || grad_projection != nullptr;
  const auto events = train.events();
  const int d = model.dim();
  ReplayState state(RowMatrix::Zero(static_cast<Eigen::Index>(model.num_nodes()), d),
                    train.t_start());

  // Gradient of the loss w.r.t. h_n injected by a query, applied in reverse.
  struct Injection {
    std::size_t boundary;  // events [0, boundary) precede the query
    std::vector<NodeId> nodes;
    RowMatrix grads;
  };
  std::vector<Injection> injections;
  std::vector<double> decays;
  if (want_grad) decays.reserve(events.size());

  std::size_t answerable = 0;
  for (const auto& t : truths) answerable += t.all_zero ? 0 : 1;
  if (answerable == 0) throw Error("no answerable training queries");
  const double scale = 1.0 / static_cast<double>(answerable);

  double loss = 0.0;
  std::size_t next = 0;
  for (std::size_t qi : order_by_time(queries)) {
    const auto& q = queries[qi];
    while (next < events.size() && events[next].t < q.t) {
      const double a = state.apply(model, events[next]);
      if (want_grad) decays.push_back(a);
      ++next;
    }
    if (truths[qi].all_zero) continue;
    const auto& y = truths[qi].values;
    const Eigen::VectorXd p = softmax(score_query(model, state, q));
    for (std::size_t c = 0; c < y.size(); ++c) {
      if (y[c] > 0.0) loss -= scale * y[c] * std::log(std::max(p[static_cast<Eigen::Index>(c)], 1e-300));
    }
    if (!want_grad) continue;

    const auto& cands = *q.candidates;
    Injection inj;
    inj.boundary = next;
    inj.nodes.reserve(cands.size() + 1);
    inj.grads = RowMatrix::Zero(static_cast<Eigen::Index>(cands.size() + 1), d);
    const Eigen::RowVectorXd hu = model.features().row(q.src) + state.memory.row(q.src);
    inj.nodes.push_back(q.src);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double g = scale * (p[static_cast<Eigen::Index>(c)] - y[c]);
      const Eigen::RowVectorXd hc = model.features().row(cands[c]) + state.memory.row(cands[c]);
      inj.grads.row(0) += g * hc;
      inj.nodes.push_back(cands[c]);
      inj.grads.row(static_cast<Eigen::Index>(c + 1)) = g * hu;
    }
    injections.push_back(std::move(inj));
  }
  if (!want_grad) return loss;
  while (next < events.size()) {
    decays.push_back(state.apply(model, events[next]));
    ++next;
  }

  RowMatrix gx = RowMatrix::Zero(static_cast<Eigen::Index>(model.num_nodes()), d);
  Eigen::MatrixXd gp = Eigen::MatrixXd::Zero(d, d);
  RowMatrix adj_memory = RowMatrix::Zero(static_cast<Eigen::Index>(model.num_nodes()), d);
  auto inject = [&](const Injection& inj) {
    for (std::size_t i = 0; i < inj.nodes.size(); ++i) {
      gx.row(inj.nodes[i]) += inj.grads.row(static_cast<Eigen::Index>(i));
      adj_memory.row(inj.nodes[i]) += inj.grads.row(static_cast<Eigen::Index>(i));
    }
  };
  // Injections are in time order, so boundaries are non-decreasing.
  std::ptrdiff_t qi = static_cast<std::ptrdiff_t>(injections.size()) - 1;
  for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(events.size()) - 1; k >= 0; --k) {
    while (qi >= 0 && injections[static_cast<std::size_t>(qi)].boundary > static_cast<std::size_t>(k)) {
      inject(injections[static_cast<std::size_t>(qi)]);
      --qi;
    }
    const auto& e = events[static_cast<std::size_t>(k)];
    const Eigen::RowVectorXd g = adj_memory.row(e.src);
    if (g.isZero(0.0)) continue;
    const double w = e.w / model.weight_scale();
    gp.noalias() += w * g.transpose() * model.features().row(e.dst);
    gx.row(e.dst) += w * (model.projection().transpose() * g.transpose()).transpose();
    adj_memory.row(e.src) = decays[static_cast<std::size_t>(k)] * g;
  }
  for (; qi >= 0; --qi) inject(injections[static_cast<std::size_t>(qi)]);

  if (grad_features) *grad_features = std::move(gx);
  if (grad_projection) *grad_projection = std::move(gp);
  return loss;
}

DgnnModel train_dgnn(const GraphSlice& train, std::span<const AffinityQuery> queries,
                     const DgnnConfig& config, DgnnTrainingLog* log) {
  config.validate();
  if (train.empty()) throw Error("cannot train on an empty slice");
  if (queries.empty()) throw Error("cannot train without queries");
  DgnnModel model(config, train.num_nodes());
  model.set_weight_scale(mean_weight(train));
  for (const auto& q : queries) check_nodes(model, q);
  const auto truths = ground_truth_batch(train, queries);

  RowMatrix gx;
  Eigen::MatrixXd gp;
  double loss = dgnn_loss(model, train, queries, truths, &gx, &gp);
  if (!std::isfinite(loss)) throw DivergenceError("dgnn loss is not finite", 0);
  double lr = config.learning_rate;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    bool accepted = false;
    for (int attempt = 0; attempt < 20 && !accepted; ++attempt) {
      DgnnModel trial = model;
      trial.mutable_features() -= lr * gx;
      trial.mutable_projection() -= lr * gp;
      RowMatrix tgx;
      Eigen::MatrixXd tgp;
      const double trial_loss = dgnn_loss(trial, train, queries, truths, &tgx, &tgp);
      if (std::isfinite(trial_loss) && trial_loss <= loss) {
        model = std::move(trial);
        loss = trial_loss;
        gx = std::move(tgx);
        gp = std::move(tgp);
        accepted = true;
        // Grow the step after a successful one; the small symmetric init sits
        // near a flat saddle where a fixed step barely moves.
        lr *= 2.0;
      } else {
        lr *= 0.5;
      }
    }
    if (!std::isfinite(loss)) throw DivergenceError("dgnn loss is not finite", epoch);
    if (log) log->epoch_loss.push_back(loss);
  }

  ReplayState state(model.memory(), train.t_start());
  for (const auto& e : train.events()) state.apply(model, e);
  model.mutable_memory() = std::move(state.memory);
  if (!model.all_finite()) throw DivergenceError("dgnn parameters are not finite", config.epochs);
  return model;
}

double dgnn_gradient_check(const DgnnModel& model, const GraphSlice& train,
                           std::span<const AffinityQuery> queries, int coordinates,
                           std::uint64_t seed, double step) {
  const auto truths = ground_truth_batch(train, queries);
  RowMatrix gx;
  Eigen::MatrixXd gp;
  dgnn_loss(model, train, queries, truths, &gx, &gp);
  const auto active = active_nodes(train);
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < coordinates; ++i) {
    DgnnModel plus = model;
    DgnnModel minus = model;
    double analytic;
    const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(model.dim())));
    const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(model.dim())));
    if (i % 2 == 0) {
      plus.mutable_projection()(r, c) += step;
      minus.mutable_projection()(r, c) -= step;
      analytic = gp(r, c);
    } else {
      const NodeId n = active[rng.below(active.size())];
      plus.mutable_features()(n, c) += step;
      minus.mutable_features()(n, c) -= step;
      analytic = gx(n, c);
    }
    const double numeric = (dgnn_loss(plus, train, queries, truths, nullptr, nullptr) -
                            dgnn_loss(minus, train, queries, truths, nullptr, nullptr)) /
                           (2.0 * step);
    const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

EmbeddingMatrix embed(const DgnnModel& model, const GraphSlice& slice) {
  ReplayState state(model.memory(), slice.t_start());
  for (const auto& e : slice.events()) {
    if (e.src >= model.num_nodes() || e.dst >= model.num_nodes()) {
      throw Error("slice references a node unknown to the model");
    }
    state.apply(model, e);
  }
  return gather(model, state.memory, active_nodes(slice), slice.t_end());
}

EmbeddingMatrix training_embeddings(const DgnnModel& model, const GraphSlice& train) {
  return gather(model, model.memory(), active_nodes(train), train.t_end());
}

std::vector<std::vector<double>> predict_batch(const DgnnModel& model, const GraphSlice& slice,
                                               std::span<const AffinityQuery> queries) {
  for (const auto& q : queries) check_nodes(model, q);
  const auto events = slice.events();
  ReplayState state(model.memory(), slice.t_start());
  std::vector<std::vector<double>> out(queries.size());
  std::size_t next = 0;
  for (std::size_t qi : order_by_time(queries)) {
    const auto& q = queries[qi];
    while (next < events.size() && events[next].t < q.t) state.apply(model, events[next++]);
    const Eigen::VectorXd p = softmax(score_query(model, state, q));
    out[qi].assign(p.data(), p.data() + p.size());
  }
  return out;
}

std::vector<double> predict_affinity(const DgnnModel& model, const GraphSlice& slice,
                                     const AffinityQuery& query) {
  return predict_batch(model, slice, std::span<const AffinityQuery>(&query, 1)).front();
}

MeanNdcg ground_truth_ndcg(const DgnnModel& model, const GraphSlice& slice,
                           std::span<const AffinityQuery> queries, int k, const TruthFn& truth_fn) {
  const auto truths = truth_fn ? truth_fn(slice, queries) : ground_truth_batch(slice, queries);
  const auto scores = predict_batch(model, slice, queries);
  return mean_ndcg(truths, scores, k);
}

std::string dgnn_to_json(const DgnnModel& model) {
  nlohmann::json j;
  j["format"] = "dygeval.dgnn";
  j["version"] = 1;
  j["config"] = model.config();
  j["num_nodes"] = model.num_nodes();
  j["weight_scale"] = model.weight_scale();
  j["features"] = matrix_to_json(model.features());
  j["projection"] = matrix_to_json(model.projection());
  j["memory"] = matrix_to_json(model.memory());
  return j.dump();
}

DgnnModel dgnn_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  check_format(j, "dygeval.dgnn", 1);
  DgnnModel model(j.at("config").get<DgnnConfig>(), j.at("num_nodes").get<std::size_t>());
  model.set_weight_scale(j.at("weight_scale").get<double>());
  model.mutable_features() = matrix_from_json<RowMatrix>(j.at("features"));
  model.mutable_projection() = matrix_from_json<Eigen::MatrixXd>(j.at("projection"));
  model.mutable_memory() = matrix_from_json<RowMatrix>(j.at("memory"));
  if (model.features().rows() != static_cast<Eigen::Index>(model.num_nodes()) ||
      model.features().cols() != model.dim() || model.projection().rows() != model.dim() ||
      model.projection().cols() != model.dim() || model.memory().rows() != model.features().rows() ||
      model.memory().cols() != model.dim()) {
    throw Error("dgnn checkpoint has inconsistent shapes");
  }
  return model;
}

void save_dgnn(const DgnnModel& model, const std::string& path) { write_text_file(path, dgnn_to_json(model)); }

DgnnModel load_dgnn(const std::string& path) { return dgnn_from_json(read_text_file(path)); }

}  // namespace dygeval
