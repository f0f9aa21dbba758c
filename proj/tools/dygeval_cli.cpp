// Command-line front end: one subcommand per pipeline stage.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dygeval/error.hpp"
#include "dygeval/harness.hpp"

using namespace dygeval;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

struct Options {
  std::string config;
  std::string out;
  std::string model;
  std::string records;
  std::string evaluator;
  std::string format = "markdown";
  std::size_t model_index = 0;
  std::vector<std::size_t> counts{std::begin(kDefaultAblationCounts),
                                  std::end(kDefaultAblationCounts)};
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-free performance estimation for temporal graph models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("-f,--format", o.format, "json, csv or markdown")
        ->check(CLI::IsMember({"json", "csv", "markdown", "md"}));
  };

  auto* generate = app.add_subcommand("generate", "write the synthetic drift stream as CSV");
  add_config(generate);
  generate->add_option("-o,--out", o.out, "output CSV (stdout when omitted)");

  auto* train = app.add_subcommand("train-dgnn", "train a temporal model on the training split");
  add_config(train);
  train->add_option("--model-index", o.model_index, "which entry of `models` to train");
  train->add_option("-o,--out", o.out, "model checkpoint")->required();

  auto* sim = app.add_subcommand("simulate", "build and label the simulated graph set");
  add_config(sim);
  sim->add_option("-m,--model", o.model, "model checkpoint")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", o.out, "manifest (stdout when omitted)");
  sim->add_option("-r,--records", o.records, "also write the discrepancy set here");

  auto* fit = app.add_subcommand("train-evaluator", "train the regressor on a discrepancy set");
  add_config(fit);
  fit->add_option("-r,--records", o.records, "discrepancy set")->required()->check(CLI::ExistingFile);
  fit->add_option("-o,--out", o.out, "evaluator checkpoint")->required();

  auto* est = app.add_subcommand("estimate", "label-free estimates for every test variant");
  add_config(est);
  est->add_option("-m,--model", o.model, "model checkpoint")->required()->check(CLI::ExistingFile);
  est->add_option("-e,--evaluator", o.evaluator, "evaluator checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_option("-o,--out", o.out, "output CSV (stdout when omitted)");

  auto* abl_k = app.add_subcommand("ablate-k", "MAE against the simulated set size");
  add_config(abl_k);
  add_format(abl_k);
  abl_k->add_option("--counts", o.counts, "simulated set sizes");
  abl_k->add_option("-o,--out", o.out, "output (stdout when omitted)");

  auto* abl_d = app.add_subcommand("ablate-discrepancy", "MAE per discrepancy function");
  add_config(abl_d);
  add_format(abl_d);
  abl_d->add_option("-o,--out", o.out, "output (stdout when omitted)");

  auto* abl_b = app.add_subcommand("ablate-backbone", "MAE per evaluator backbone");
  add_config(abl_b);
  add_format(abl_b);
  abl_b->add_option("-o,--out", o.out, "output (stdout when omitted)");

  auto* rep = app.add_subcommand("report", "run the whole pipeline and emit the report");
  add_config(rep);
  add_format(rep);
  rep->add_option("-o,--out", o.out, "output (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);
  const CLI::App* sub = app.get_subcommands().front();

  try {
    const ExperimentConfig cfg = config_or_default(o.config);
    if (sub == generate) {
      write_output(o.out, to_csv(*load_data(cfg).stream));
    } else if (sub == train) {
      const auto data = load_data(cfg);
      DgnnTrainingLog log;
      const DgnnModel model = train_model(cfg, data, o.model_index, &log);
      save_dgnn(model, o.out);
      std::cerr << "train-dgnn: loss " << log.epoch_loss.front() << " -> " << log.epoch_loss.back()
                << " over " << log.epoch_loss.size() << " epochs\n";
    } else if (sub == sim) {
      const auto data = load_data(cfg);
      const DgnnModel model = load_dgnn(o.model);
      const SimulationResult r = simulate(cfg, data, model);
      write_output(o.out, manifest_to_json(make_manifest(r.graphs, r.labels)) + "\n");
      if (!o.records.empty()) {
        const ReferenceSet ref = make_reference(cfg, data, model);
        write_output(o.records, discrepancy_set_to_json(build_discrepancy_set(
                                    model, r.graphs, r.labels, ref, cfg.discrepancy)));
      }
    } else if (sub == fit) {
      const auto records = discrepancy_set_from_json(read_file(o.records));
      EvaluatorTrainingLog log;
      save_evaluator(fit_evaluator(cfg, records, 0, &log), o.out);
      std::cerr << "train-evaluator: MSE " << log.initial_mse << " -> " << log.final_mse << '\n';
    } else if (sub == est) {
      const auto data = load_data(cfg);
      const DgnnModel model = load_dgnn(o.model);
      const ReferenceSet ref = make_reference(cfg, data, model);
      const auto estimates = estimate_variants(cfg, data, model, ref, load_evaluator(o.evaluator));
      std::ostringstream out;
      out << "variant,offset,events,estimate\n";
      for (std::size_t i = 0; i < estimates.size(); ++i) {
        out << "g_" << i << ',' << data.variants.offsets[i] << ','
            << data.variants.variants[i].size() << ',' << estimates[i] << '\n';
      }
      write_output(o.out, out.str());
    } else if (sub == abl_k) {
      write_output(o.out, emit_ablation(run_k_ablation(cfg, o.counts), "count",
                                        report_format_from_string(o.format)));
    } else if (sub == abl_d) {
      write_output(o.out, emit_ablation(run_discrepancy_ablation(cfg), "discrepancy",
                                        report_format_from_string(o.format)));
    } else if (sub == abl_b) {
      write_output(o.out, emit_ablation(run_backbone_ablation(cfg), "backbone",
                                        report_format_from_string(o.format)));
    } else if (sub == rep) {
      write_output(o.out, emit_report(run_pipeline(cfg), report_format_from_string(o.format)));
    }
  } catch (const std::exception& e) {
    std::cerr << "dygeval " << sub->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
