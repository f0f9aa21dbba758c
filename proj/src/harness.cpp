#include "dygeval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "dygeval/error.hpp"
#include "json_util.hpp"

namespace dygeval {

namespace {

// Runs `f`, prefixing any library error with the stage name.
template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const LabelAccessError& e) {
    throw LabelAccessError(std::string(stage) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(stage) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(stage) + ": " + e.what());
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string model_name(const DgnnConfig& c) {
  std::ostringstream ss;
  // No commas: the name is a CSV field.
  ss << "dgnn(d=" << c.embed_dim << " decay=" << c.time_decay << " epochs=" << c.epochs << ")";
  return ss.str();
}

// Rank 1 is the highest value; ties keep index order.
std::vector<int> ranks_of(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<int> rank(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r) + 1;
  return rank;
}

const std::set<std::string> kConfigKeys = {
    "dataset_path", "drift",     "train_fraction",     "tte_offsets", "bucket_width",
    "models",       "simulation", "discrepancy",       "n_ref",       "reference_strategy",
    "evaluator",    "gnnevaluator", "taus",            "k",           "master_seed",
    "run_baselines"};

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) drift.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  if (!tte_offsets.empty() && tte_offsets.size() != kNumTteVariants - 1) {
    throw Error("tte_offsets must list exactly 7 offsets");
  }
  if (!(bucket_width >= 0.0)) throw Error("bucket_width must be non-negative");
  if (models.empty()) throw Error("at least one model config is required");
  for (const auto& m : models) m.validate();
  simulation.validate();
  if (n_ref < 1) throw Error("n_ref must be positive");
  evaluator.validate();
  for (double tau : taus) ThresholdConfig{tau}.validate();
  if (k < 1) throw Error("k must be at least 1");
}

ExperimentConfig config_from_json(const std::string& text) {
  return in_stage("config", [&] {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (!kConfigKeys.contains(key)) throw Error("unknown config key '" + key + "'");
    }
    // The enum converters silently map unknown names; check them explicitly.
    if (j.contains("discrepancy")) discrepancy_kind_from_string(j["discrepancy"].get<std::string>());
    if (j.contains("reference_strategy")) {
      reference_strategy_from_string(j["reference_strategy"].get<std::string>());
    }
    if (j.contains("evaluator") && j["evaluator"].contains("backbone")) {
      backbone_from_string(j["evaluator"]["backbone"].get<std::string>());
    }
    auto cfg = j.get<ExperimentConfig>();
    cfg.validate();
    return cfg;
  });
}

std::string config_to_json(const ExperimentConfig& config) {
  return nlohmann::json(config).dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(in_stage("config", [&] { return read_text_file(path); }));
}

StageSeeds stage_seeds(const ExperimentConfig& config) {
  StageSeeds s;
  const std::uint64_t m = config.master_seed;
  s.simulation = derive_seed(m, "simulation");
  s.reference = derive_seed(m, "reference");
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    s.dgnn.push_back(splitmix64(derive_seed(m, "dgnn", i) ^ config.models[i].rng_seed));
    s.evaluator.push_back(splitmix64(derive_seed(m, "evaluator", i) ^ config.evaluator.rng_seed));
    s.gnnevaluator.push_back(
        splitmix64(derive_seed(m, "gnnevaluator", i) ^ config.gnnevaluator.rng_seed));
  }
  return s;
}

ExperimentData load_data(const ExperimentConfig& config) {
  return in_stage("load", [&] {
    config.validate();
    auto stream = std::make_shared<const EdgeStream>(config.dataset_path.empty()
                                                         ? synth_drift_stream(config.drift)
                                                         : read_edge_stream_file(config.dataset_path));
    auto [train, test] = split_train_test(stream, config.train_fraction);
    auto candidates = make_candidates(destination_nodes(train));
    const double bucket = config.bucket_width > 0.0 ? config.bucket_width : train.length() / 50.0;
    const auto offsets = config.tte_offsets.empty() ? default_tte_offsets(test) : config.tte_offsets;
    auto variants = make_tte_variants(test, offsets);
    return ExperimentData{std::move(stream), train,  test, std::move(candidates),
                          bucket,            std::move(variants)};
  });
}

DgnnModel train_model(const ExperimentConfig& config, const ExperimentData& data,
                      std::size_t model_index, DgnnTrainingLog* log) {
  return in_stage("train-dgnn", [&] {
    DgnnConfig cfg = config.models.at(model_index);
    cfg.rng_seed = stage_seeds(config).dgnn.at(model_index);
    const auto queries = enumerate_queries(data.train, data.candidates, data.bucket_width);
    return train_dgnn(data.train, queries, cfg, log);
  });
}

ReferenceSet make_reference(const ExperimentConfig& config, const ExperimentData& data,
                            const DgnnModel& model) {
  return in_stage("reference", [&] {
    const EmbeddingMatrix z = training_embeddings(model, data.train);
    const auto degrees = node_degrees(data.train);
    return select_reference_nodes(z, std::min(config.n_ref, z.size()), config.reference_strategy,
                                  stage_seeds(config).reference, degrees);
  });
}

SimulationResult simulate(const ExperimentConfig& config, const ExperimentData& data,
                          const DgnnModel& model) {
  return in_stage("simulate", [&] {
    SimulationResult r;
    r.graphs = build_simulated_set(data.train, config.simulation, stage_seeds(config).simulation);
    r.labels.reserve(r.graphs.size());
    for (const auto& g : r.graphs) {
      r.labels.push_back(label_simulated(model, g, data.candidates, data.bucket_width, config.k));
    }
    return r;
  });
}

EvaluatorParams fit_evaluator(const ExperimentConfig& config,
                              std::span<const DiscrepancyRecord> records, std::size_t model_index,
                              EvaluatorTrainingLog* log) {
  return in_stage("train-evaluator", [&] {
    EvaluatorConfig cfg = config.evaluator;
    cfg.rng_seed = stage_seeds(config).evaluator.at(model_index);
    return train_evaluator(records, cfg, log);
  });
}

std::vector<double> estimate_variants(const ExperimentConfig& config, const ExperimentData& data,
                                      const DgnnModel& model, const ReferenceSet& ref,
                                      const EvaluatorParams& params) {
  return in_stage("estimate", [&] {
    std::vector<double> out;
    for (const auto& v : data.variants.variants) {
      out.push_back(estimate(params, model, ref, v.as_unlabeled(), config.discrepancy));
    }
    return out;
  });
}

std::string threshold_method_name(double tau) {
  std::ostringstream ss;
  ss << "Thres.(tau=" << tau << ")";
  return ss.str();
}

double EvaluationReport::mae_of(std::size_t model, const std::string& method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) throw Error("report has no method '" + method + "'");
  return mae.at(model).at(static_cast<std::size_t>(it - methods.begin()));
}

namespace {

// Everything one model needs for scoring and estimation, shared by the
// pipeline and the ablation drivers.
struct ModelRun {
  DgnnModel model;
  ReferenceSet ref;
  std::vector<double> labels;
  std::vector<double> ground_truth;  // per variant
};

ModelRun prepare_model(const ExperimentConfig& config, const ExperimentData& data,
                       std::size_t index, std::span<const SimulatedGraph> graphs,
                       const TruthFn& truth_fn) {
  ModelRun run;
  run.model = train_model(config, data, index);
  run.ref = make_reference(config, data, run.model);
  run.labels = in_stage("simulate", [&] {
    std::vector<double> labels;
    for (const auto& g : graphs) {
      labels.push_back(label_simulated(run.model, g, data.candidates, data.bucket_width, config.k));
    }
    return labels;
  });
  run.ground_truth = in_stage("score", [&] {
    std::vector<double> gt;
    for (const auto& v : data.variants.variants) {
      const auto queries = enumerate_queries(v, data.candidates, data.bucket_width);
      gt.push_back(ground_truth_ndcg(run.model, v, queries, config.k, truth_fn).value);
    }
    return gt;
  });
  return run;
}

std::vector<SimulatedGraph> simulate_graphs(const ExperimentConfig& config,
                                            const ExperimentData& data) {
  return in_stage("simulate", [&] {
    return build_simulated_set(data.train, config.simulation, stage_seeds(config).simulation);
  });
}

std::vector<DiscrepancyRecord> discrepancy_records(const ModelRun& run,
                                                   std::span<const SimulatedGraph> graphs,
                                                   DiscrepancyKind kind) {
  return in_stage("discrepancy", [&] {
    return build_discrepancy_set(run.model, graphs, run.labels, run.ref, kind);
  });
}

double mean_abs_error(std::span<const double> est, std::span<const double> gt) {
  double total = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) total += std::abs(est[i] - gt[i]);
  return total / static_cast<double>(est.size());
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvaluationReport run_pipeline(const ExperimentConfig& config, const TruthFn& truth_fn) {
  const ExperimentData data = load_data(config);
  const StageSeeds seeds = stage_seeds(config);
  const auto graphs = simulate_graphs(config, data);

  EvaluationReport report;
  report.methods.push_back(kDyGEvalMethod);
  if (config.run_baselines) {
    for (double tau : config.taus) report.methods.push_back(threshold_method_name(tau));
    report.methods.push_back(kGnnEvaluatorMethod);
  }
  report.metadata.master_seed = config.master_seed;
  report.metadata.stage_seeds.emplace_back("simulation", seeds.simulation);
  report.metadata.stage_seeds.emplace_back("reference", seeds.reference);

  std::vector<double> mean_gt;
  std::vector<double> mean_est;
  for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
    const std::string idx = std::to_string(mi);
    report.metadata.stage_seeds.emplace_back("dgnn." + idx, seeds.dgnn[mi]);
    report.metadata.stage_seeds.emplace_back("evaluator." + idx, seeds.evaluator[mi]);
    report.metadata.stage_seeds.emplace_back("gnnevaluator." + idx, seeds.gnnevaluator[mi]);
    report.models.push_back(model_name(config.models[mi]));

    const ModelRun run = prepare_model(config, data, mi, graphs, truth_fn);
    const auto records = discrepancy_records(run, graphs, config.discrepancy);
    EvaluatorTrainingLog elog;
    const EvaluatorParams params = fit_evaluator(config, records, mi, &elog);

    const double lm = mean_of(run.labels);
    double var = 0.0;
    for (double y : run.labels) var += (y - lm) * (y - lm);
    report.metadata.simulated_label_mean.push_back(lm);
    report.metadata.simulated_label_std.push_back(
        std::sqrt(var / static_cast<double>(run.labels.size())));
    report.metadata.evaluator_train_mse.push_back(elog.final_mse);

    // columns: method; rows: variant
    std::vector<std::vector<double>> est(report.methods.size());
    est[0] = estimate_variants(config, data, run.model, run.ref, params);
    if (config.run_baselines) {
      in_stage("baselines", [&] {
        std::size_t col = 1;
        for (double tau : config.taus) {
          for (const auto& v : data.variants.variants) {
            const GraphSlice unl = v.as_unlabeled();
            const auto queries = enumerate_queries(unl, data.candidates, data.bucket_width);
            est[col].push_back(threshold_estimate(run.model, unl, queries, ThresholdConfig{tau}));
          }
          ++col;
        }
        std::vector<StaticDiscrepancyGraph> train_static;
        for (std::size_t i = 0; i < graphs.size(); ++i) {
          const auto& p = graphs[i].provenance;
          const auto seed_events = data.train.restrict(p.seed_start, p.seed_end).events();
          train_static.push_back(build_static_discrepancy(run.model, run.ref, graphs[i].slice,
                                                          run.labels[i], seed_events.back().t));
        }
        GcnConfig gcfg = config.gnnevaluator;
        gcfg.rng_seed = seeds.gnnevaluator[mi];
        const GcnRegressor gcn = train_gcn_regressor(train_static, gcfg);
        for (const auto& v : data.variants.variants) {
          est[col].push_back(
              gcn.predict(build_static_discrepancy(run.model, run.ref, v.as_unlabeled(), 0.0)));
        }
        return 0;
      });
    }

    std::vector<double> mae(report.methods.size(), 0.0);
    for (std::size_t vi = 0; vi < data.variants.variants.size(); ++vi) {
      VariantRow row;
      row.model = mi;
      row.variant = vi;
      row.offset = data.variants.offsets[vi];
      row.events = data.variants.variants[vi].size();
      row.ground_truth = run.ground_truth[vi];
      for (std::size_t c = 0; c < report.methods.size(); ++c) {
        row.estimates.push_back(est[c][vi]);
        row.abs_errors.push_back(std::abs(est[c][vi] - row.ground_truth));
      }
      report.rows.push_back(std::move(row));
    }
    for (std::size_t c = 0; c < report.methods.size(); ++c) {
      mae[c] = mean_abs_error(est[c], run.ground_truth);
    }
    report.mae.push_back(std::move(mae));
    mean_gt.push_back(mean_of(run.ground_truth));
    mean_est.push_back(mean_of(est[0]));
  }

  const auto gt_rank = ranks_of(mean_gt);
  const auto est_rank = ranks_of(mean_est);
  for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
    report.ranks.push_back(
        {report.models[mi], mean_gt[mi], gt_rank[mi], mean_est[mi], est_rank[mi]});
  }
  return report;
}

namespace {

// One model, one simulated set; `vary` yields (setting, MAE) rows.
template <typename F>
std::vector<AblationRow> ablate(const ExperimentConfig& config, F vary) {
  const ExperimentData data = load_data(config);
  const auto graphs = simulate_graphs(config, data);
  const ModelRun run = prepare_model(config, data, 0, graphs, {});
  return vary(data, graphs, run);
}

double dygeval_mae(const ExperimentConfig& config, const ExperimentData& data, const ModelRun& run,
                   std::span<const DiscrepancyRecord> records) {
  const EvaluatorParams params = fit_evaluator(config, records, 0);
  const auto est = estimate_variants(config, data, run.model, run.ref, params);
  return mean_abs_error(est, run.ground_truth);
}

}  // namespace

std::vector<AblationRow> run_k_ablation(const ExperimentConfig& config,
                                        std::span<const std::size_t> counts) {
  if (counts.empty()) throw Error("ablate-k: counts must not be empty");
  // Simulated members are seeded per index, so the set for count c is the
  // first c members of the largest set.
  ExperimentConfig big = config;
  big.simulation.count = *std::max_element(counts.begin(), counts.end());
  return ablate(big, [&](const ExperimentData& data, std::span<const SimulatedGraph> graphs,
                         const ModelRun& run) {
    const auto records = discrepancy_records(run, graphs, config.discrepancy);
    std::vector<AblationRow> rows;
    for (std::size_t c : counts) {
      if (c < 2) throw Error("ablate-k: every count must be at least 2");
      rows.push_back({std::to_string(c),
                      dygeval_mae(config, data, run, std::span(records).first(c))});
    }
    return rows;
  });
}

std::vector<AblationRow> run_discrepancy_ablation(const ExperimentConfig& config) {
  return ablate(config, [&](const ExperimentData& data, std::span<const SimulatedGraph> graphs,
                            const ModelRun& run) {
    std::vector<AblationRow> rows;
    for (auto kind : {DiscrepancyKind::cosine, DiscrepancyKind::l1, DiscrepancyKind::mse}) {
      ExperimentConfig c = config;
      c.discrepancy = kind;
      const auto records = discrepancy_records(run, graphs, kind);
      rows.push_back({to_string(kind), dygeval_mae(c, data, run, records)});
    }
    return rows;
  });
}

std::vector<AblationRow> run_backbone_ablation(const ExperimentConfig& config) {
  return ablate(config, [&](const ExperimentData& data, std::span<const SimulatedGraph> graphs,
                            const ModelRun& run) {
    const auto records = discrepancy_records(run, graphs, config.discrepancy);
    std::vector<AblationRow> rows;
    for (auto backbone : {EvaluatorBackbone::self_attention, EvaluatorBackbone::mlp}) {
      ExperimentConfig c = config;
      c.evaluator.backbone = backbone;
      rows.push_back({to_string(backbone), dygeval_mae(c, data, run, records)});
    }
    return rows;
  });
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw Error("unknown report format '" + name + "' (expected json, csv or markdown)");
}

namespace {

using ojson = nlohmann::ordered_json;

ojson report_json(const EvaluationReport& r) {
  ojson j;
  j["format"] = "dygeval.report";
  j["version"] = 1;
  j["methods"] = r.methods;
  j["models"] = r.models;
  auto& rows = j["rows"] = ojson::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"model", row.model},
                    {"variant", row.variant},
                    {"offset", row.offset},
                    {"events", row.events},
                    {"ground_truth", row.ground_truth},
                    {"estimates", row.estimates},
                    {"abs_errors", row.abs_errors}});
  }
  j["mae"] = r.mae;
  auto& ranks = j["ranks"] = ojson::array();
  for (const auto& rk : r.ranks) {
    ranks.push_back({{"model", rk.model},
                     {"ground_truth", rk.ground_truth},
                     {"ground_truth_rank", rk.ground_truth_rank},
                     {"estimate", rk.estimate},
                     {"estimate_rank", rk.estimate_rank}});
  }
  auto& meta = j["metadata"];
  meta["version"] = r.metadata.version;
  meta["master_seed"] = r.metadata.master_seed;
  auto& seeds = meta["stage_seeds"] = ojson::array();
  for (const auto& [name, seed] : r.metadata.stage_seeds) {
    seeds.push_back({{"stage", name}, {"seed", seed}});
  }
  meta["simulated_label_mean"] = r.metadata.simulated_label_mean;
  meta["simulated_label_std"] = r.metadata.simulated_label_std;
  meta["evaluator_train_mse"] = r.metadata.evaluator_train_mse;
  return j;
}

std::string report_csv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "model,variant,offset,events,method,estimate,ground_truth,abs_error\n";
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < r.methods.size(); ++c) {
      out << r.models[row.model] << ",g_" << row.variant << ',' << ojson(row.offset).dump() << ','
          << row.events << ',' << r.methods[c] << ',' << ojson(row.estimates[c]).dump() << ','
          << ojson(row.ground_truth).dump() << ',' << ojson(row.abs_errors[c]).dump() << '\n';
    }
  }
  return out.str();
}

std::string report_markdown(const EvaluationReport& r) {
  std::ostringstream out;
  for (std::size_t mi = 0; mi < r.models.size(); ++mi) {
    std::vector<const VariantRow*> rows;
    for (const auto& row : r.rows) {
      if (row.model == mi) rows.push_back(&row);
    }
    out << "### Absolute error: " << r.models[mi] << "\n\n| Method |";
    for (const auto* row : rows) out << " g_" << row->variant << " |";
    out << " Avg. |\n|---|";
    for (std::size_t i = 0; i <= rows.size(); ++i) out << "---|";
    out << '\n';
    for (std::size_t c = 0; c < r.methods.size(); ++c) {
      out << "| " << r.methods[c] << " |";
      for (const auto* row : rows) out << ' ' << fixed(row->abs_errors[c]) << " |";
      out << ' ' << fixed(r.mae[mi][c]) << " |\n";
    }
    out << "| Ground truth NDCG |";
    for (const auto* row : rows) out << ' ' << fixed(row->ground_truth) << " |";
    double sum = 0.0;
    for (const auto* row : rows) sum += row->ground_truth;
    out << ' ' << fixed(rows.empty() ? 0.0 : sum / static_cast<double>(rows.size())) << " |\n\n";
  }
  out << "### Model ranking\n\n| Model | GT NDCG | GT rank | Estimated NDCG | Estimated rank |\n"
      << "|---|---|---|---|---|\n";
  for (const auto& rk : r.ranks) {
    out << "| " << rk.model << " | " << fixed(rk.ground_truth) << " | " << rk.ground_truth_rank
        << " | " << fixed(rk.estimate) << " | " << rk.estimate_rank << " |\n";
  }
  out << "\n" << r.metadata.version << ", master seed " << r.metadata.master_seed << '\n';
  return out.str();
}

}  // namespace

std::string emit_report(const EvaluationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json:
      return report_json(report).dump(2) + "\n";
    case ReportFormat::csv:
      return report_csv(report);
    case ReportFormat::markdown:
      return report_markdown(report);
  }
  throw Error("unknown report format");
}

EvaluationReport report_from_json(const std::string& text) {
  return in_stage("report", [&] {
    const auto j = nlohmann::json::parse(text);
    check_format(j, "dygeval.report", 1);
    EvaluationReport r;
    r.methods = j.at("methods").get<std::vector<std::string>>();
    r.models = j.at("models").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("model").get<std::size_t>(), row.at("variant").get<std::size_t>(),
                        row.at("offset").get<double>(), row.at("events").get<std::size_t>(),
                        row.at("ground_truth").get<double>(),
                        row.at("estimates").get<std::vector<double>>(),
                        row.at("abs_errors").get<std::vector<double>>()});
    }
    r.mae = j.at("mae").get<std::vector<std::vector<double>>>();
    for (const auto& rk : j.at("ranks")) {
      r.ranks.push_back({rk.at("model").get<std::string>(), rk.at("ground_truth").get<double>(),
                         rk.at("ground_truth_rank").get<int>(), rk.at("estimate").get<double>(),
                         rk.at("estimate_rank").get<int>()});
    }
    const auto& meta = j.at("metadata");
    r.metadata.version = meta.at("version").get<std::string>();
    r.metadata.master_seed = meta.at("master_seed").get<std::uint64_t>();
    for (const auto& s : meta.at("stage_seeds")) {
      r.metadata.stage_seeds.emplace_back(s.at("stage").get<std::string>(),
                                          s.at("seed").get<std::uint64_t>());
    }
    r.metadata.simulated_label_mean = meta.at("simulated_label_mean").get<std::vector<double>>();
    r.metadata.simulated_label_std = meta.at("simulated_label_std").get<std::vector<double>>();
    r.metadata.evaluator_train_mse = meta.at("evaluator_train_mse").get<std::vector<double>>();
    return r;
  });
}

std::string emit_ablation(const std::vector<AblationRow>& rows, const std::string& header,
                          ReportFormat format) {
  switch (format) {
    case ReportFormat::json: {
      ojson j = ojson::array();
      for (const auto& r : rows) j.push_back({{header, r.setting}, {"mae", r.mae}});
      return j.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::string out = header + ",mae\n";
      for (const auto& r : rows) out += r.setting + "," + ojson(r.mae).dump() + "\n";
      return out;
    }
    case ReportFormat::markdown: {
      std::string out = "| " + header + " | MAE |\n|---|---|\n";
      for (const auto& r : rows) out += "| " + r.setting + " | " + fixed(r.mae) + " |\n";
      return out;
    }
  }
  throw Error("unknown report format");
}

}  // namespace dygeval
