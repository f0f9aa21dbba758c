#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dygeval/baselines.hpp"
#include "dygeval/dgnn_lite.hpp"
#include "dygeval/discrepancy.hpp"
#include "dygeval/evaluator.hpp"
#include "dygeval/simulation.hpp"
#include "dygeval/temporal_graph.hpp"

namespace dygeval {

inline constexpr const char* kVersion = "dygeval 1.0.0";

struct ExperimentConfig {
  std::string dataset_path;  // CSV edge stream; synthetic `drift` when empty
  DriftConfig drift;
  double train_fraction = 0.7;
  std::vector<double> tte_offsets;  // 7 offsets; j/8 of the test length when empty
  double bucket_width = 0.0;        // query bucket; span / 50 when 0
  std::vector<DgnnConfig> models{DgnnConfig{}};
  SimulationConfig simulation;
  DiscrepancyKind discrepancy = DiscrepancyKind::cosine;
  std::size_t n_ref = 64;
  ReferenceStrategy reference_strategy = ReferenceStrategy::degree_top;
  EvaluatorConfig evaluator;
  GcnConfig gnnevaluator;
  std::vector<double> taus{0.5, 0.7, 0.9};
  int k = kDefaultNdcgK;
  std::uint64_t master_seed = 42;
  bool run_baselines = true;

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// Deterministic seeds for every stage, all derived from master_seed.
struct StageSeeds {
  std::uint64_t simulation = 0;
  std::uint64_t reference = 0;
  std::vector<std::uint64_t> dgnn;
  std::vector<std::uint64_t> evaluator;
  std::vector<std::uint64_t> gnnevaluator;
};
StageSeeds stage_seeds(const ExperimentConfig& config);

// Loaded stream, split and the query layout shared by every stage.
struct ExperimentData {
  StreamPtr stream;
  GraphSlice train;
  GraphSlice test;
  CandidateList candidates;
  double bucket_width = 1.0;
  TteVariantSet variants;
};

ExperimentData load_data(const ExperimentConfig& config);

DgnnModel train_model(const ExperimentConfig& config, const ExperimentData& data,
                      std::size_t model_index, DgnnTrainingLog* log = nullptr);

ReferenceSet make_reference(const ExperimentConfig& config, const ExperimentData& data,
                            const DgnnModel& model);

struct SimulationResult {
  std::vector<SimulatedGraph> graphs;
  std::vector<double> labels;
};

SimulationResult simulate(const ExperimentConfig& config, const ExperimentData& data,
                          const DgnnModel& model);

EvaluatorParams fit_evaluator(const ExperimentConfig& config,
                              std::span<const DiscrepancyRecord> records, std::size_t model_index,
                              EvaluatorTrainingLog* log = nullptr);

// Label-free DyGEval estimate for every TTE variant.
std::vector<double> estimate_variants(const ExperimentConfig& config, const ExperimentData& data,
                                      const DgnnModel& model, const ReferenceSet& ref,
                                      const EvaluatorParams& params);

struct VariantRow {
  std::size_t model = 0;
  std::size_t variant = 0;
  double offset = 0.0;
  std::size_t events = 0;
  double ground_truth = 0.0;
  std::vector<double> estimates;   // aligned with EvaluationReport::methods
  std::vector<double> abs_errors;  // |estimate - ground_truth|

  friend bool operator==(const VariantRow&, const VariantRow&) = default;
};

struct RankRow {
  std::string model;
  double ground_truth = 0.0;  // mean GT NDCG over the variants
  int ground_truth_rank = 0;
  double estimate = 0.0;  // mean DyGEval estimate over the variants
  int estimate_rank = 0;

  friend bool operator==(const RankRow&, const RankRow&) = default;
};

struct ReportMetadata {
  std::string version = kVersion;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::uint64_t>> stage_seeds;
  std::vector<double> simulated_label_mean;  // per model
  std::vector<double> simulated_label_std;
  std::vector<double> evaluator_train_mse;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct EvaluationReport {
  std::vector<std::string> methods;
  std::vector<std::string> models;
  std::vector<VariantRow> rows;
  std::vector<std::vector<double>> mae;  // [model][method]
  std::vector<RankRow> ranks;
  ReportMetadata metadata;

  double mae_of(std::size_t model, const std::string& method) const;
  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

inline constexpr const char* kDyGEvalMethod = "DyGEval";
inline constexpr const char* kGnnEvaluatorMethod = "GNNEvaluator";
std::string threshold_method_name(double tau);

// generate/load -> split -> train models -> TTE variants -> simulate and label
// -> discrepancy set -> train evaluator -> estimate -> score. `truth_fn`
// supplies test-variant ground truth for scoring only; estimators receive
// label-free slices.
EvaluationReport run_pipeline(const ExperimentConfig& config, const TruthFn& truth_fn = {});

struct AblationRow {
  std::string setting;
  double mae = 0.0;
};

inline constexpr std::size_t kDefaultAblationCounts[] = {50, 100, 150, 200, 250};

// DyGEval MAE (first model) per simulated-set size, everything else fixed.
std::vector<AblationRow> run_k_ablation(const ExperimentConfig& config,
                                        std::span<const std::size_t> counts);
std::vector<AblationRow> run_discrepancy_ablation(const ExperimentConfig& config);
std::vector<AblationRow> run_backbone_ablation(const ExperimentConfig& config);

enum class ReportFormat { json, csv, markdown };
ReportFormat report_format_from_string(const std::string& name);

std::string emit_report(const EvaluationReport& report, ReportFormat format);
EvaluationReport report_from_json(const std::string& text);
std::string emit_ablation(const std::vector<AblationRow>& rows, const std::string& header,
                          ReportFormat format);

}  // namespace dygeval
