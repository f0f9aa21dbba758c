#include "dygeval/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dygeval/error.hpp"
#include "json_util.hpp"

namespace dygeval {

std::string to_string(DiscrepancyKind kind) {
  return nlohmann::json(kind).get<std::string>();
}

DiscrepancyKind discrepancy_kind_from_string(const std::string& name) {
  if (name == "cosine") return DiscrepancyKind::cosine;
  if (name == "l1") return DiscrepancyKind::l1;
  if (name == "mse") return DiscrepancyKind::mse;
  throw Error("unknown discrepancy '" + name + "' (expected cosine, l1 or mse)");
}

std::string to_string(ReferenceStrategy strategy) {
  return nlohmann::json(strategy).get<std::string>();
}

ReferenceStrategy reference_strategy_from_string(const std::string& name) {
  if (name == "first_n") return ReferenceStrategy::first_n;
  if (name == "random") return ReferenceStrategy::random;
  if (name == "degree_top") return ReferenceStrategy::degree_top;
  throw Error("unknown reference strategy '" + name + "'");
}

ReferenceSet select_reference_nodes(const EmbeddingMatrix& z_train, std::size_t n_ref,
                                    ReferenceStrategy strategy, std::uint64_t seed,
                                    std::span<const double> degrees) {
  const std::size_t m = z_train.size();
  if (n_ref == 0) throw Error("n_ref must be positive");
  if (n_ref > m) {
    throw Error("n_ref " + std::to_string(n_ref) + " exceeds the " + std::to_string(m) +
                " embedded training nodes");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  switch (strategy) {
    case ReferenceStrategy::first_n:
      break;
    case ReferenceStrategy::random: {
      Rng rng(seed);
      rng.shuffle(std::span<std::size_t>(order));
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_ref));
      break;
    }
    case ReferenceStrategy::degree_top: {
      auto degree = [&](std::size_t row) {
        const NodeId id = z_train.node_ids[row];
        return id < degrees.size() ? degrees[id] : 0.0;
      };
      // node_ids are ascending, so a stable sort breaks ties by id.
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return degree(a) > degree(b); });
      break;
    }
  }
  ReferenceSet ref;
  ref.anchor_embeddings.resize(static_cast<Eigen::Index>(n_ref), z_train.rows.cols());
  for (std::size_t i = 0; i < n_ref; ++i) {
    ref.anchor_ids.push_back(z_train.node_ids[order[i]]);
    ref.anchor_embeddings.row(static_cast<Eigen::Index>(i)) =
        z_train.rows.row(static_cast<Eigen::Index>(order[i]));
  }
  return ref;
}

std::vector<double> node_degrees(const GraphSlice& slice) {
  std::vector<double> deg(slice.num_nodes(), 0.0);
  for (const auto& e : slice.events()) {
    deg[e.src] += e.w;
    deg[e.dst] += e.w;
  }
  return deg;
}

namespace {

void check_dims(const EmbeddingMatrix& z, const ReferenceSet& ref) {
  if (ref.size() == 0) throw Error("reference set is empty");
  if (z.rows.cols() != ref.anchor_embeddings.cols()) {
    throw Error("embedding dimension " + std::to_string(z.rows.cols()) +
                " does not match reference dimension " +
                std::to_string(ref.anchor_embeddings.cols()));
  }
}

template <typename F>
DiscrepancyMatrix pairwise(const EmbeddingMatrix& z, const ReferenceSet& ref, F f) {
  check_dims(z, ref);
  DiscrepancyMatrix out;
  out.values.resize(z.rows.rows(), ref.anchor_embeddings.rows());
  for (Eigen::Index i = 0; i < z.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < ref.anchor_embeddings.rows(); ++j) {
      out.values(i, j) = f(z.rows.row(i), ref.anchor_embeddings.row(j), out);
    }
  }
  return out;
}

}  // namespace

DiscrepancyMatrix cosine_discrepancy(const EmbeddingMatrix& z, const ReferenceSet& ref) {
  return pairwise(z, ref, [](const auto& a, const auto& b, DiscrepancyMatrix& out) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      ++out.zero_norm_entries;
      return 0.0;
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  });
}

DiscrepancyMatrix l1_discrepancy(const EmbeddingMatrix& z, const ReferenceSet& ref) {
  return pairwise(z, ref, [](const auto& a, const auto& b, DiscrepancyMatrix&) {
    return (a - b).cwiseAbs().sum() / static_cast<double>(a.size());
  });
}

DiscrepancyMatrix mse_discrepancy(const EmbeddingMatrix& z, const ReferenceSet& ref) {
  return pairwise(z, ref, [](const auto& a, const auto& b, DiscrepancyMatrix&) {
    return (a - b).squaredNorm() / static_cast<double>(a.size());
  });
}

DiscrepancyMatrix compute_discrepancy(DiscrepancyKind kind, const EmbeddingMatrix& z,
                                      const ReferenceSet& ref) {
  switch (kind) {
    case DiscrepancyKind::cosine:
      return cosine_discrepancy(z, ref);
    case DiscrepancyKind::l1:
      return l1_discrepancy(z, ref);
    case DiscrepancyKind::mse:
      return mse_discrepancy(z, ref);
  }
  throw Error("unknown discrepancy kind");
}

std::vector<DiscrepancyRecord> build_discrepancy_set(const DgnnModel& model,
                                                     std::span<const SimulatedGraph> simulated,
                                                     std::span<const double> labels,
                                                     const ReferenceSet& ref,
                                                     DiscrepancyKind kind) {
  if (simulated.size() != labels.size()) {
    throw Error("discrepancy set needs one label per simulated graph");
  }
  std::vector<DiscrepancyRecord> out;
  out.reserve(simulated.size());
  for (std::size_t i = 0; i < simulated.size(); ++i) {
    const EmbeddingMatrix z = embed(model, simulated[i].slice);
    if (z.size() == 0) {
      throw Error("simulated graph " + std::to_string(i) + " has no active nodes");
    }
    out.push_back({compute_discrepancy(kind, z, ref).values, labels[i]});
  }
  return out;
}

std::string discrepancy_set_to_json(std::span<const DiscrepancyRecord> records) {
  nlohmann::json j;
  j["format"] = "dygeval.discrepancy_set";
  j["version"] = 1;
  auto& arr = j["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"label", r.label}, {"features", matrix_to_json(r.features)}});
  }
  return j.dump();
}

std::vector<DiscrepancyRecord> discrepancy_set_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  check_format(j, "dygeval.discrepancy_set", 1);
  std::vector<DiscrepancyRecord> out;
  for (const auto& r : j.at("records")) {
    out.push_back({matrix_from_json<Eigen::MatrixXd>(r.at("features")),
                   r.at("label").get<double>()});
  }
  return out;
}

std::string reference_set_to_json(const ReferenceSet& ref) {
  nlohmann::json j;
  j["format"] = "dygeval.reference_set";
  j["version"] = 1;
  j["anchor_ids"] = ref.anchor_ids;
  j["anchor_embeddings"] = matrix_to_json(ref.anchor_embeddings);
  return j.dump();
}

ReferenceSet reference_set_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  check_format(j, "dygeval.reference_set", 1);
  ReferenceSet ref;
  ref.anchor_ids = j.at("anchor_ids").get<std::vector<NodeId>>();
  ref.anchor_embeddings = matrix_from_json<RowMatrix>(j.at("anchor_embeddings"));
  if (ref.anchor_ids.size() != static_cast<std::size_t>(ref.anchor_embeddings.rows())) {
    throw Error("reference ids and embeddings disagree in count");
  }
  return ref;
}

}  // namespace dygeval
