#include "dygeval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dygeval/error.hpp"
#include "dygeval/rng.hpp"
#include "json_util.hpp"

namespace dygeval {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(EvaluatorBackbone backbone) {
  return backbone == EvaluatorBackbone::self_attention ? "self_attention" : "mlp";
}

EvaluatorBackbone backbone_from_string(const std::string& name) {
  if (name == "self_attention" || name == "attention") return EvaluatorBackbone::self_attention;
  if (name == "mlp") return EvaluatorBackbone::mlp;
  throw Error("unknown backbone '" + name + "' (expected self_attention or mlp)");
}

void EvaluatorConfig::validate() const {
  if (layers < 1) throw Error("evaluator needs at least one layer");
  if (heads < 1) throw Error("evaluator needs at least one head");
  if (hidden_dim < 1) throw Error("evaluator hidden_dim must be positive");
  if (backbone == EvaluatorBackbone::self_attention && hidden_dim % heads != 0) {
    throw Error("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by " +
                std::to_string(heads) + " heads");
  }
  if (!(learning_rate > 0.0)) throw Error("evaluator learning_rate must be positive");
  if (epochs < 1) throw Error("evaluator epochs must be at least 1");
  if (max_tokens < 1) throw Error("max_tokens must be at least 1");
}

namespace {

constexpr double kLnEps = 1e-5;

// Group indices of one block, in layout order.
struct BlockLayout {
  std::size_t ln1_gain, ln1_bias;
  // attention: query, key, value, out, out_bias; mlp: w1, b1, w2, b2 (b_out unused)
  std::size_t m0, m1, m2, m3, m4;
  std::size_t ln2_gain, ln2_bias;
  std::size_t f_w1, f_b1, f_w2, f_b2;
};

struct Layout {
  std::size_t in_w, in_b;
  std::vector<BlockLayout> blocks;
  std::size_t out_w, out_b;
};

Layout layout_of(const EvaluatorConfig& config) {
  // Must mirror the construction order in EvaluatorParams.
  Layout l{};
  std::size_t g = 0;
  l.in_w = g++;
  l.in_b = g++;
  for (int b = 0; b < config.layers; ++b) {
    BlockLayout bl{};
    bl.ln1_gain = g++;
    bl.ln1_bias = g++;
    bl.m0 = g++;
    bl.m1 = g++;
    bl.m2 = g++;
    bl.m3 = g++;
    bl.m4 = config.backbone == EvaluatorBackbone::self_attention ? g++ : 0;
    bl.ln2_gain = g++;
    bl.ln2_bias = g++;
    bl.f_w1 = g++;
    bl.f_b1 = g++;
    bl.f_w2 = g++;
    bl.f_b2 = g++;
    l.blocks.push_back(bl);
  }
  l.out_w = g++;
  l.out_b = g++;
  return l;
}

bool is_gain(const std::string& name) { return name.ends_with(".gain"); }
bool is_bias(const std::string& name) {
  return name.ends_with("bias") || name.ends_with(".b1") || name.ends_with(".b2");
}

double gelu(double u) {
  constexpr double s = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * u * (1.0 + std::tanh(s * (u + 0.044715 * u * u * u)));
}

double gelu_grad(double u) {
  constexpr double s = 0.7978845608028654;
  const double th = std::tanh(s * (u + 0.044715 * u * u * u));
  return 0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * s * (1.0 + 3.0 * 0.044715 * u * u);
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct LnCache {
  MatrixXd xhat;
  VectorXd rstd;
};

MatrixXd layer_norm(const MatrixXd& x, const MatrixXd& gain, const MatrixXd& bias, LnCache& c) {
  const auto h = static_cast<double>(x.cols());
  c.xhat.resize(x.rows(), x.cols());
  c.rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).sum() / h;
    const double var = (x.row(r).array() - mu).square().sum() / h;
    c.rstd(r) = 1.0 / std::sqrt(var + kLnEps);
    c.xhat.row(r) = (x.row(r).array() - mu) * c.rstd(r);
  }
  MatrixXd y = c.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const MatrixXd& gain, const LnCache& c,
                             Eigen::Map<MatrixXd> dgain, Eigen::Map<MatrixXd> dbias) {
  dgain.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const MatrixXd dxhat = dy.array().rowwise() * gain.row(0).array();
  const auto h = static_cast<double>(dy.cols());
  MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double m1 = dxhat.row(r).sum() / h;
    const double m2 = dxhat.row(r).dot(c.xhat.row(r)) / h;
    dx.row(r) = c.rstd(r) * (dxhat.row(r).array() - m1 - c.xhat.row(r).array() * m2).matrix();
  }
  return dx;
}

struct FfnCache {
  MatrixXd input, pre, act;
};

MatrixXd ffn(const MatrixXd& x, const MatrixXd& w1, const MatrixXd& b1, const MatrixXd& w2,
             const MatrixXd& b2, FfnCache& c) {
  c.input = x;
  c.pre = x * w1;
  c.pre.rowwise() += b1.row(0);
  c.act = c.pre.unaryExpr(&gelu);
  MatrixXd out = c.act * w2;
  out.rowwise() += b2.row(0);
  return out;
}

MatrixXd ffn_backward(const MatrixXd& dout, const MatrixXd& w1, const MatrixXd& w2,
                      const FfnCache& c, Eigen::Map<MatrixXd> dw1, Eigen::Map<MatrixXd> db1,
                      Eigen::Map<MatrixXd> dw2, Eigen::Map<MatrixXd> db2) {
  dw2 += c.act.transpose() * dout;
  db2.row(0) += dout.colwise().sum();
  const MatrixXd dpre = (dout * w2.transpose()).cwiseProduct(c.pre.unaryExpr(&gelu_grad));
  dw1 += c.input.transpose() * dpre;
  db1.row(0) += dpre.colwise().sum();
  return dpre * w1.transpose();
}

struct AttnCache {
  MatrixXd input, q, k, v, o;
  // Per head, transposed: column j holds query j's weights over the keys, so
  // the softmax runs down contiguous columns.
  std::vector<MatrixXd> probs_t;
};

MatrixXd attention(const MatrixXd& x, const MatrixXd& wq, const MatrixXd& wk, const MatrixXd& wv,
                   const MatrixXd& wo, const MatrixXd& bo, int heads, AttnCache& c) {
  const Eigen::Index m = x.rows();
  const Eigen::Index dh = wq.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.input = x;
  c.q = x * wq;
  c.k = x * wk;
  c.v = x * wv;
  c.o.resize(m, wq.cols());
  c.probs_t.resize(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    MatrixXd st = (c.k.middleCols(h * dh, dh) * c.q.middleCols(h * dh, dh).transpose()) * scale;
    st.rowwise() -= st.colwise().maxCoeff();
    st = st.array().exp();
    st.array().rowwise() /= st.colwise().sum().array();
    c.o.middleCols(h * dh, dh).noalias() = st.transpose() * c.v.middleCols(h * dh, dh);
    c.probs_t[static_cast<std::size_t>(h)] = std::move(st);
  }
  MatrixXd out = c.o * wo;
  out.rowwise() += bo.row(0);
  return out;
}

MatrixXd attention_backward(const MatrixXd& dout, const MatrixXd& wq, const MatrixXd& wk,
                            const MatrixXd& wv, const MatrixXd& wo, int heads,
                            const AttnCache& c, Eigen::Map<MatrixXd> dwq,
                            Eigen::Map<MatrixXd> dwk, Eigen::Map<MatrixXd> dwv,
                            Eigen::Map<MatrixXd> dwo, Eigen::Map<MatrixXd> dbo) {
  const Eigen::Index dh = wq.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  dwo += c.o.transpose() * dout;
  dbo.row(0) += dout.colwise().sum();
  const MatrixXd d_o = dout * wo.transpose();
  MatrixXd dq(c.q.rows(), c.q.cols()), dk(c.k.rows(), c.k.cols()), dv(c.v.rows(), c.v.cols());
  for (int h = 0; h < heads; ++h) {
    const MatrixXd& pt = c.probs_t[static_cast<std::size_t>(h)];
    const auto doh = d_o.middleCols(h * dh, dh);
    const MatrixXd dat = c.v.middleCols(h * dh, dh) * doh.transpose();
    dv.middleCols(h * dh, dh).noalias() = pt * doh;
    const Eigen::RowVectorXd coldot = (dat.array() * pt.array()).colwise().sum();
    const MatrixXd dst = (pt.array() * (dat.rowwise() - coldot).array()).matrix() * scale;
    dq.middleCols(h * dh, dh).noalias() = dst.transpose() * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = dst * c.q.middleCols(h * dh, dh);
  }
  dwq += c.input.transpose() * dq;
  dwk += c.input.transpose() * dk;
  dwv += c.input.transpose() * dv;
  return dq * wq.transpose() + dk * wk.transpose() + dv * wv.transpose();
}

struct BlockCache {
  LnCache ln1, ln2;
  AttnCache attn;
  FfnCache mix, ffn;
};

struct ForwardCache {
  MatrixXd input;
  MatrixXd pooled;  // 1 x H
  double logit = 0.0;
  std::vector<BlockCache> blocks;
};

void check_input(const EvaluatorParams& params, const MatrixXd& x) {
  if (x.cols() != params.input_dim()) {
    throw Error("discrepancy matrix has " + std::to_string(x.cols()) + " columns, evaluator expects " +
                std::to_string(params.input_dim()));
  }
  if (x.rows() < 1) throw Error("discrepancy matrix has no rows");
  if (!x.allFinite()) throw Error("discrepancy matrix contains NaN or infinite values");
}

double run_forward(const EvaluatorParams& params, const MatrixXd& x, ForwardCache& c) {
  const auto& cfg = params.config();
  const Layout l = layout_of(cfg);
  c.input = (x.rowwise() - params.input_shift()).array().rowwise() * params.input_scale().array();
  MatrixXd h = c.input * MatrixXd(params.matrix(l.in_w));
  h.rowwise() += params.matrix(l.in_b).row(0);
  c.blocks.resize(l.blocks.size());
  for (std::size_t b = 0; b < l.blocks.size(); ++b) {
    const BlockLayout& bl = l.blocks[b];
    BlockCache& bc = c.blocks[b];
    const MatrixXd a = layer_norm(h, params.matrix(bl.ln1_gain), params.matrix(bl.ln1_bias), bc.ln1);
    if (cfg.backbone == EvaluatorBackbone::self_attention) {
      h += attention(a, params.matrix(bl.m0), params.matrix(bl.m1), params.matrix(bl.m2),
                     params.matrix(bl.m3), params.matrix(bl.m4), cfg.heads, bc.attn);
    } else {
      h += ffn(a, params.matrix(bl.m0), params.matrix(bl.m1), params.matrix(bl.m2),
               params.matrix(bl.m3), bc.mix);
    }
    const MatrixXd cn = layer_norm(h, params.matrix(bl.ln2_gain), params.matrix(bl.ln2_bias), bc.ln2);
    h += ffn(cn, params.matrix(bl.f_w1), params.matrix(bl.f_b1), params.matrix(bl.f_w2),
             params.matrix(bl.f_b2), bc.ffn);
  }
  c.pooled = h.colwise().mean();
  c.logit = (c.pooled * params.matrix(l.out_w))(0, 0) + params.matrix(l.out_b)(0, 0);
  return sigmoid(c.logit);
}

// Adds d(loss)/d(params) to `grad`, given d(loss)/d(logit).
void run_backward(const EvaluatorParams& params, const ForwardCache& c, double dlogit,
                  std::vector<double>& grad) {
  const auto& cfg = params.config();
  const Layout l = layout_of(cfg);
  const auto& groups = params.groups();
  auto g = [&](std::size_t idx) {
    const auto& gr = groups[idx];
    return Eigen::Map<MatrixXd>(grad.data() + gr.offset, gr.rows, gr.cols);
  };
  g(l.out_w) += c.pooled.transpose() * dlogit;
  g(l.out_b)(0, 0) += dlogit;
  const Eigen::Index m = c.input.rows();
  const MatrixXd dpool = MatrixXd(params.matrix(l.out_w)).transpose() * dlogit;  // 1 x H
  MatrixXd dh = MatrixXd::Ones(m, 1) * dpool / static_cast<double>(m);

  for (std::size_t bi = l.blocks.size(); bi-- > 0;) {
    const BlockLayout& bl = l.blocks[bi];
    const BlockCache& bc = c.blocks[bi];
    const MatrixXd dcn = ffn_backward(dh, params.matrix(bl.f_w1), params.matrix(bl.f_w2), bc.ffn,
                                      g(bl.f_w1), g(bl.f_b1), g(bl.f_w2), g(bl.f_b2));
    dh += layer_norm_backward(dcn, params.matrix(bl.ln2_gain), bc.ln2, g(bl.ln2_gain),
                              g(bl.ln2_bias));
    MatrixXd da;
    if (cfg.backbone == EvaluatorBackbone::self_attention) {
      da = attention_backward(dh, params.matrix(bl.m0), params.matrix(bl.m1), params.matrix(bl.m2),
                              params.matrix(bl.m3), cfg.heads, bc.attn, g(bl.m0), g(bl.m1),
                              g(bl.m2), g(bl.m3), g(bl.m4));
    } else {
      da = ffn_backward(dh, params.matrix(bl.m0), params.matrix(bl.m2), bc.mix, g(bl.m0),
                        g(bl.m1), g(bl.m2), g(bl.m3));
    }
    dh += layer_norm_backward(da, params.matrix(bl.ln1_gain), bc.ln1, g(bl.ln1_gain),
                              g(bl.ln1_bias));
  }
  g(l.in_w) += c.input.transpose() * dh;
  g(l.in_b).row(0) += dh.colwise().sum();
}

}  // namespace

EvaluatorParams::EvaluatorParams(const EvaluatorConfig& config, int input_dim)
    : config_(config), input_dim_(input_dim) {
  config.validate();
  if (input_dim < 1) throw Error("evaluator input dimension must be positive");
  const int h = config.hidden_dim;
  const int f = config.ffn_dim();
  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    groups_.push_back({std::move(name), offset, rows, cols});
    offset += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  };
  add("input.weight", input_dim, h);
  add("input.bias", 1, h);
  for (int b = 0; b < config.layers; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    add(p + "ln1.gain", 1, h);
    add(p + "ln1.bias", 1, h);
    if (config.backbone == EvaluatorBackbone::self_attention) {
      add(p + "attn.query", h, h);
      add(p + "attn.key", h, h);
      add(p + "attn.value", h, h);
      add(p + "attn.out", h, h);
      add(p + "attn.out_bias", 1, h);
    } else {
      add(p + "mix.w1", h, f);
      add(p + "mix.b1", 1, f);
      add(p + "mix.w2", f, h);
      add(p + "mix.b2", 1, h);
    }
    add(p + "ln2.gain", 1, h);
    add(p + "ln2.bias", 1, h);
    add(p + "ffn.w1", h, f);
    add(p + "ffn.b1", 1, f);
    add(p + "ffn.w2", f, h);
    add(p + "ffn.b2", 1, h);
  }
  add("readout.weight", h, 1);
  add("readout.bias", 1, 1);
  data_.assign(offset, 0.0);
  input_shift_ = Eigen::RowVectorXd::Zero(input_dim);
  input_scale_ = Eigen::RowVectorXd::Ones(input_dim);
}

void EvaluatorParams::set_input_normalization(Eigen::RowVectorXd shift, Eigen::RowVectorXd scale) {
  if (shift.size() != input_dim_ || scale.size() != input_dim_) {
    throw Error("input normalization must have one entry per input column");
  }
  if (!shift.allFinite() || !scale.allFinite()) throw Error("input normalization is not finite");
  input_shift_ = std::move(shift);
  input_scale_ = std::move(scale);
}

EvaluatorParams EvaluatorParams::initialize(const EvaluatorConfig& config, int input_dim) {
  EvaluatorParams p(config, input_dim);
  Rng rng(derive_seed(config.rng_seed, "evaluator.init"));
  for (std::size_t i = 0; i < p.groups_.size(); ++i) {
    const Group& g = p.groups_[i];
    auto m = p.matrix(i);
    if (is_gain(g.name)) {
      m.setOnes();
    } else if (is_bias(g.name)) {
      m.setZero();
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(g.rows + g.cols));
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
      }
    }
  }
  return p;
}

const EvaluatorParams::Group& EvaluatorParams::group(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw Error("no evaluator parameter group '" + name + "'");
}

Eigen::Map<MatrixXd> EvaluatorParams::matrix(const std::string& name) {
  const Group& g = group(name);
  return {data_.data() + g.offset, g.rows, g.cols};
}

Eigen::Map<const MatrixXd> EvaluatorParams::matrix(const std::string& name) const {
  const Group& g = group(name);
  return {data_.data() + g.offset, g.rows, g.cols};
}

Eigen::Map<const MatrixXd> EvaluatorParams::matrix(std::size_t group_index) const {
  const Group& g = groups_.at(group_index);
  return {data_.data() + g.offset, g.rows, g.cols};
}

Eigen::Map<MatrixXd> EvaluatorParams::matrix(std::size_t group_index) {
  const Group& g = groups_.at(group_index);
  return {data_.data() + g.offset, g.rows, g.cols};
}

bool EvaluatorParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }) &&
         input_shift_.allFinite() && input_scale_.allFinite();
}

MatrixXd cap_tokens(const MatrixXd& x, int max_tokens) {
  if (max_tokens < 1) throw Error("max_tokens must be at least 1");
  const Eigen::Index m = x.rows();
  if (m <= max_tokens) return x;
  const Eigen::Index stride = (m + max_tokens - 1) / max_tokens;
  const Eigen::Index kept = (m + stride - 1) / stride;
  MatrixXd out(kept, x.cols());
  for (Eigen::Index i = 0; i < kept; ++i) out.row(i) = x.row(i * stride);
  return out;
}

double evaluator_forward(const EvaluatorParams& params, const MatrixXd& x) {
  check_input(params, x);
  ForwardCache c;
  return run_forward(params, cap_tokens(x, params.config().max_tokens), c);
}

double evaluator_loss_and_gradient(const EvaluatorParams& params, const MatrixXd& x, double y,
                                   std::vector<double>& grad) {
  check_input(params, x);
  grad.assign(params.values().size(), 0.0);
  ForwardCache c;
  const double pred = run_forward(params, cap_tokens(x, params.config().max_tokens), c);
  const double diff = pred - y;
  run_backward(params, c, 2.0 * diff * pred * (1.0 - pred), grad);
  return diff * diff;
}

double evaluator_mse(const EvaluatorParams& params, std::span<const DiscrepancyRecord> records) {
  if (records.empty()) throw Error("cannot compute MSE of an empty set");
  double total = 0.0;
  for (const auto& r : records) {
    const double d = evaluator_forward(params, r.features) - r.label;
    total += d * d;
  }
  return total / static_cast<double>(records.size());
}

EvaluatorParams train_evaluator(std::span<const DiscrepancyRecord> records,
                                const EvaluatorConfig& config, EvaluatorTrainingLog* log) {
  config.validate();
  if (records.size() < 2) throw Error("evaluator training needs at least 2 records");
  const auto input_dim = static_cast<int>(records.front().features.cols());
  double label_mean = 0.0;
  std::vector<DiscrepancyRecord> capped;
  capped.reserve(records.size());
  for (const auto& r : records) {
    if (!(r.label >= 0.0 && r.label <= 1.0)) throw Error("evaluator labels must lie in [0, 1]");
    if (r.features.cols() != input_dim) throw Error("discrepancy records differ in column count");
    label_mean += r.label;
    capped.push_back({cap_tokens(r.features, config.max_tokens), r.label});
  }
  label_mean /= static_cast<double>(records.size());

  EvaluatorParams params = EvaluatorParams::initialize(config, input_dim);
  {
    // Standardize every column over all training tokens so cosine, L1 and MSE
    // features enter the projection on the same scale.
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(input_dim);
    Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(input_dim);
    double tokens = 0.0;
    for (const auto& r : capped) {
      sum += r.features.colwise().sum();
      sq += r.features.array().square().colwise().sum().matrix();
      tokens += static_cast<double>(r.features.rows());
    }
    const Eigen::RowVectorXd mean = sum / tokens;
    const Eigen::RowVectorXd var = (sq / tokens - mean.cwiseProduct(mean)).cwiseMax(0.0);
    params.set_input_normalization(mean, (var.array().sqrt() + 1e-6).inverse().matrix());
  }
  // Start the readout at the mean label so early steps fit structure, not offset.
  const double m0 = std::clamp(label_mean, 0.01, 0.99);
  params.matrix("readout.bias")(0, 0) = std::log(m0 / (1.0 - m0));

  EvaluatorTrainingLog local;
  EvaluatorTrainingLog& lg = log ? *log : local;
  lg = {};
  lg.initial_mse = evaluator_mse(params, capped);
  double best_mse = lg.initial_mse;
  EvaluatorParams best = params;

  std::vector<std::size_t> order(capped.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.rng_seed, "evaluator.shuffle", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const double loss = evaluator_loss_and_gradient(params, capped[i].features, capped[i].label, grad);
      if (!std::isfinite(loss)) throw DivergenceError("evaluator loss is not finite", epoch + 1);
      auto v = params.values();
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= config.learning_rate * grad[j];
    }
    const double mse = evaluator_mse(params, capped);
    if (!std::isfinite(mse)) throw DivergenceError("evaluator loss is not finite", epoch + 1);
    lg.epoch_mse.push_back(mse);
    if (mse < best_mse) {
      best_mse = mse;
      best = params;
    }
  }
  lg.final_mse = best_mse;
  return best;
}

double estimate(const EvaluatorParams& params, const DgnnModel& model, const ReferenceSet& ref,
                const GraphSlice& test, DiscrepancyKind kind) {
  if (!test.label_free()) {
    throw LabelAccessError("estimate requires a label-free test slice");
  }
  if (test.empty()) throw Error("cannot estimate on an empty test slice");
  const EmbeddingMatrix z = embed(model, test);
  if (z.size() == 0) throw Error("test slice has no active nodes");
  return evaluator_forward(params, compute_discrepancy(kind, z, ref).values);
}

double evaluator_gradient_check(const EvaluatorConfig& config, const MatrixXd& x, double y,
                                std::uint64_t seed, int coordinates, double step) {
  EvaluatorParams params = EvaluatorParams::initialize(config, static_cast<int>(x.cols()));
  // Move gains and biases off their initial values so every path is exercised.
  Rng rng(derive_seed(seed, "evaluator.gradcheck.perturb"));
  for (double& v : params.values()) v += rng.uniform(-0.1, 0.1);
  return evaluator_gradient_check(params, x, y, seed, coordinates, step);
}

double evaluator_gradient_check(const EvaluatorParams& params, const MatrixXd& x, double y,
                                std::uint64_t seed, int coordinates, double step) {
  std::vector<double> grad;
  evaluator_loss_and_gradient(params, x, y, grad);
  Rng rng(derive_seed(seed, "evaluator.gradcheck"));
  std::vector<std::size_t> coords;
  for (const auto& g : params.groups()) {
    coords.push_back(g.offset + rng.below(static_cast<std::uint64_t>(g.rows) * g.cols));
  }
  while (coords.size() < static_cast<std::size_t>(coordinates)) {
    coords.push_back(rng.below(params.values().size()));
  }
  EvaluatorParams probe = params;
  std::vector<double> scratch;
  double worst = 0.0;
  for (std::size_t c : coords) {
    const double orig = probe.values()[c];
    probe.values()[c] = orig + step;
    const double lp = evaluator_loss_and_gradient(probe, x, y, scratch);
    probe.values()[c] = orig - step;
    const double lm = evaluator_loss_and_gradient(probe, x, y, scratch);
    probe.values()[c] = orig;
    const double numeric = (lp - lm) / (2.0 * step);
    const double err = std::abs(grad[c] - numeric) /
                       std::max(std::abs(grad[c]) + std::abs(numeric), 1e-5);
    worst = std::max(worst, err);
  }
  return worst;
}

std::string evaluator_to_json(const EvaluatorParams& params) {
  nlohmann::json j;
  j["format"] = "dygeval.evaluator";
  j["version"] = 1;
  j["config"] = params.config();
  j["input_dim"] = params.input_dim();
  j["input_shift"] = std::vector<double>(params.input_shift().begin(), params.input_shift().end());
  j["input_scale"] = std::vector<double>(params.input_scale().begin(), params.input_scale().end());
  auto& groups = j["groups"] = nlohmann::json::object();
  for (std::size_t i = 0; i < params.groups().size(); ++i) {
    groups[params.groups()[i].name] = matrix_to_json(params.matrix(i));
  }
  return j.dump();
}

EvaluatorParams evaluator_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  check_format(j, "dygeval.evaluator", 1);
  EvaluatorParams params(j.at("config").get<EvaluatorConfig>(), j.at("input_dim").get<int>());
  const auto& groups = j.at("groups");
  if (groups.size() != params.groups().size()) {
    throw Error("evaluator checkpoint has the wrong number of parameter groups");
  }
  for (std::size_t i = 0; i < params.groups().size(); ++i) {
    const auto& g = params.groups()[i];
    if (!groups.contains(g.name)) throw Error("evaluator checkpoint lacks group '" + g.name + "'");
    const MatrixXd m = matrix_from_json<MatrixXd>(groups.at(g.name));
    if (m.rows() != g.rows || m.cols() != g.cols) {
      throw Error("evaluator group '" + g.name + "' has the wrong shape");
    }
    params.matrix(i) = m;
  }
  const auto shift = j.at("input_shift").get<std::vector<double>>();
  const auto scale = j.at("input_scale").get<std::vector<double>>();
  params.set_input_normalization(
      Eigen::Map<const Eigen::RowVectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size())),
      Eigen::Map<const Eigen::RowVectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size())));
  return params;
}

void save_evaluator(const EvaluatorParams& params, const std::string& path) {
  write_text_file(path, evaluator_to_json(params));
}

EvaluatorParams load_evaluator(const std::string& path) {
  return evaluator_from_json(read_text_file(path));
}

}  // namespace dygeval
