#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dygeval/affinity_metrics.hpp"
#include "dygeval/dgnn_lite.hpp"
#include "dygeval/rng.hpp"
#include "dygeval/temporal_graph.hpp"

namespace dygeval {

struct SeedConfig {
  double seed_fraction = 0.25;  // tail fraction of the training span
  double offset_jitter = 0.0;   // max earlier shift of the seed window

  void validate() const;
  friend bool operator==(const SeedConfig&, const SeedConfig&) = default;
};

enum class AugmentationKind { edge_drop, time_shift, weight_jitter };

struct AugmentationSpec {
  AugmentationKind kind = AugmentationKind::edge_drop;
  double p = 0.3;          // fraction dropped (edge_drop)
  double magnitude = 0.0;  // shift half-width (time_shift) or log-scale half-width (weight_jitter)
  std::uint64_t rng_seed = 0;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

struct SimulationProvenance {
  double seed_start = 0.0;
  double seed_end = 0.0;
  double jitter = 0.0;  // realized shift of the seed window
  std::vector<AugmentationSpec> augmentations;
};

// A simulated test-time graph: its own event stream, viewed over the seed
// window's time bounds.
struct SimulatedGraph {
  GraphSlice slice;
  SimulationProvenance provenance;

  double drop_rate() const;
};

// Latest seed_fraction of the training span, shifted earlier by
// uniform(0, offset_jitter) drawn from `rng`.
GraphSlice extract_seed(const GraphSlice& train, const SeedConfig& config, Rng& rng,
                        double* realized_jitter = nullptr);

// Removes exactly floor(p * n) events chosen uniformly without replacement.
SimulatedGraph edge_drop(const GraphSlice& seed, double p, Rng& rng);

// Optional augmentations applied after edge_drop; they keep the window bounds.
SimulatedGraph apply_augmentation(const SimulatedGraph& graph, const AugmentationSpec& spec);

struct SimulationConfig {
  std::size_t count = 200;
  double p_lo = 0.05;
  double p_hi = 0.5;
  SeedConfig seed;
  std::vector<AugmentationSpec> extra_augmentations;  // off by default

  void validate() const;
};

// Member i uses its own generator seeded from derive_seed(master_seed,
// "simulation", i), so members are independent of count and of each other.
std::vector<SimulatedGraph> build_simulated_set(const GraphSlice& seed_source,
                                                const SimulationConfig& config,
                                                std::uint64_t master_seed);

// Mean NDCG@k of the frozen model on the simulated graph.
double label_simulated(const DgnnModel& model, const SimulatedGraph& graph,
                       const CandidateList& candidates, double bucket_width,
                       int k = kDefaultNdcgK);

struct ManifestEntry {
  std::size_t index = 0;
  double p = 0.0;
  double jitter = 0.0;
  double seed_start = 0.0;
  double seed_end = 0.0;
  double label = 0.0;
  std::size_t events = 0;
};

std::vector<ManifestEntry> make_manifest(std::span<const SimulatedGraph> graphs,
                                         std::span<const double> labels);
std::string manifest_to_json(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> manifest_from_json(const std::string& text);

}  // namespace dygeval
