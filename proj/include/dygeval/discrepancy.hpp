#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dygeval/dgnn_lite.hpp"
#include "dygeval/simulation.hpp"

namespace dygeval {

enum class DiscrepancyKind { cosine, l1, mse };
enum class ReferenceStrategy { first_n, random, degree_top };

std::string to_string(DiscrepancyKind kind);
DiscrepancyKind discrepancy_kind_from_string(const std::string& name);
std::string to_string(ReferenceStrategy strategy);
ReferenceStrategy reference_strategy_from_string(const std::string& name);

// Fixed training-side anchor nodes giving every feature matrix n_ref columns.
struct ReferenceSet {
  std::vector<NodeId> anchor_ids;
  RowMatrix anchor_embeddings;  // n_ref x d

  std::size_t size() const noexcept { return anchor_ids.size(); }
};

// `degrees` is indexed by node id and only consulted for degree_top (highest
// first, ties by ascending id). `seed` only matters for random.
ReferenceSet select_reference_nodes(const EmbeddingMatrix& z_train, std::size_t n_ref,
                                    ReferenceStrategy strategy, std::uint64_t seed = 0,
                                    std::span<const double> degrees = {});

// Total event weight touching each node in `slice`.
std::vector<double> node_degrees(const GraphSlice& slice);

struct DiscrepancyMatrix {
  Eigen::MatrixXd values;             // M x n_ref
  std::size_t zero_norm_entries = 0;  // cosine entries forced to 0
};

// L1 and MSE are both averaged over the d embedding coordinates.
DiscrepancyMatrix cosine_discrepancy(const EmbeddingMatrix& z, const ReferenceSet& ref);
DiscrepancyMatrix l1_discrepancy(const EmbeddingMatrix& z, const ReferenceSet& ref);
DiscrepancyMatrix mse_discrepancy(const EmbeddingMatrix& z, const ReferenceSet& ref);
DiscrepancyMatrix compute_discrepancy(DiscrepancyKind kind, const EmbeddingMatrix& z,
                                      const ReferenceSet& ref);

// Features plus scalar label. Holds no adjacency by construction.
struct DiscrepancyRecord {
  Eigen::MatrixXd features;
  double label = 0.0;

  friend bool operator==(const DiscrepancyRecord&, const DiscrepancyRecord&) = default;
};

std::vector<DiscrepancyRecord> build_discrepancy_set(const DgnnModel& model,
                                                     std::span<const SimulatedGraph> simulated,
                                                     std::span<const double> labels,
                                                     const ReferenceSet& ref,
                                                     DiscrepancyKind kind = DiscrepancyKind::cosine);

std::string discrepancy_set_to_json(std::span<const DiscrepancyRecord> records);
std::vector<DiscrepancyRecord> discrepancy_set_from_json(const std::string& text);

std::string reference_set_to_json(const ReferenceSet& ref);
ReferenceSet reference_set_from_json(const std::string& text);

}  // namespace dygeval
