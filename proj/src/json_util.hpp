#pragma once

// Internal JSON plumbing shared by the checkpoint and report writers.

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <string>

#include "dygeval/error.hpp"
#include "dygeval/harness.hpp"
#include "json.hpp"

namespace dygeval {

template <typename Matrix>
nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

template <typename Matrix>
Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw Error("matrix payload does not match its shape");
  }
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  }
  return m;
}

inline void check_format(const nlohmann::json& j, const char* format, int version) {
  if (!j.contains("format") || j.at("format") != format) {
    throw Error(std::string("expected a '") + format + "' document");
  }
  if (j.at("version").get<int>() != version) {
    throw Error(std::string("unsupported ") + format + " version " +
                std::to_string(j.at("version").get<int>()));
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

NLOHMANN_JSON_SERIALIZE_ENUM(DiscrepancyKind, {{DiscrepancyKind::cosine, "cosine"},
                                               {DiscrepancyKind::l1, "l1"},
                                               {DiscrepancyKind::mse, "mse"}})

NLOHMANN_JSON_SERIALIZE_ENUM(ReferenceStrategy, {{ReferenceStrategy::first_n, "first_n"},
                                                 {ReferenceStrategy::random, "random"},
                                                 {ReferenceStrategy::degree_top, "degree_top"}})

NLOHMANN_JSON_SERIALIZE_ENUM(EvaluatorBackbone, {{EvaluatorBackbone::self_attention, "self_attention"},
                                                 {EvaluatorBackbone::mlp, "mlp"}})

NLOHMANN_JSON_SERIALIZE_ENUM(AugmentationKind, {{AugmentationKind::edge_drop, "edge_drop"},
                                                {AugmentationKind::time_shift, "time_shift"},
                                                {AugmentationKind::weight_jitter, "weight_jitter"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DgnnConfig, embed_dim, time_decay, learning_rate,
                                                epochs, rng_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DriftConfig, num_nodes, num_communities,
                                                num_destinations, horizon, drift_rate, base_rate,
                                                concentration, popularity_skew, rng_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SeedConfig, seed_fraction, offset_jitter)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AugmentationSpec, kind, p, magnitude, rng_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulationConfig, count, p_lo, p_hi, seed,
                                                extra_augmentations)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvaluatorConfig, backbone, layers, heads,
                                                hidden_dim, learning_rate, epochs, rng_seed,
                                                max_tokens)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GcnConfig, hidden_dim, learning_rate, epochs,
                                                rng_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, dataset_path, drift,
                                                train_fraction, tte_offsets, bucket_width, models,
                                                simulation, discrepancy, n_ref, reference_strategy,
                                                evaluator, gnnevaluator, taus, k, master_seed,
                                                run_baselines)

}  // namespace dygeval
