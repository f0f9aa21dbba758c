#include "dygeval/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dygeval/error.hpp"
#include "json_util.hpp"

namespace dygeval {

void SeedConfig::validate() const {
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) {
    throw Error("seed_fraction must lie in (0, 1]");
  }
  if (!(offset_jitter >= 0.0)) throw Error("offset_jitter must be non-negative");
}

void SimulationConfig::validate() const {
  if (count < 1) throw Error("simulated set needs at least one member");
  if (!(p_lo > 0.0 && p_lo < p_hi && p_hi < 1.0)) {
    throw Error("p_range must satisfy 0 < p_lo < p_hi < 1");
  }
  seed.validate();
}

double SimulatedGraph::drop_rate() const {
  for (const auto& a : provenance.augmentations) {
    if (a.kind == AugmentationKind::edge_drop) return a.p;
  }
  return 0.0;
}

GraphSlice extract_seed(const GraphSlice& train, const SeedConfig& config, Rng& rng,
                        double* realized_jitter) {
  config.validate();
  const double span = train.length();
  const double shift = config.offset_jitter > 0.0 ? rng.uniform(0.0, config.offset_jitter) : 0.0;
  const double end = train.t_end() - shift;
  const double start = std::max(train.t_start(), end - config.seed_fraction * span);
  if (realized_jitter) *realized_jitter = shift;
  if (!(end > start)) throw Error("seed window shifted outside the training slice");
  GraphSlice seed = train.restrict(start, end);
  if (seed.empty()) throw Error("empty seed window");
  return seed;
}

SimulatedGraph edge_drop(const GraphSlice& seed, double p, Rng& rng) {
  if (!(p > 0.0 && p < 1.0)) throw Error("edge drop rate must lie in (0, 1)");
  const auto events = seed.events();
  const std::size_t n = events.size();
  const auto drop = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9));

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::vector<char> dropped(n, 0);
  for (std::size_t i = 0; i < drop; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
    dropped[idx[i]] = 1;
  }
  std::vector<EdgeEvent> kept;
  kept.reserve(n - drop);
  for (std::size_t i = 0; i < n; ++i) {
    if (!dropped[i]) kept.push_back(events[i]);
  }
  auto stream = std::make_shared<const EdgeStream>(std::move(kept), seed.num_nodes(),
                                                   seed.parent().metadata());
  GraphSlice slice(stream, seed.t_start(), seed.t_end());
  if (seed.label_free()) slice = slice.as_unlabeled();
  SimulatedGraph g{std::move(slice), {}};
  g.provenance.seed_start = seed.t_start();
  g.provenance.seed_end = seed.t_end();
  g.provenance.augmentations.push_back({AugmentationKind::edge_drop, p, 0.0, 0});
  return g;
}

SimulatedGraph apply_augmentation(const SimulatedGraph& graph, const AugmentationSpec& spec) {
  if (spec.kind == AugmentationKind::edge_drop) {
    Rng rng(spec.rng_seed);
    SimulatedGraph out = edge_drop(graph.slice, spec.p, rng);
    out.provenance.seed_start = graph.provenance.seed_start;
    out.provenance.seed_end = graph.provenance.seed_end;
    out.provenance.jitter = graph.provenance.jitter;
    auto augs = graph.provenance.augmentations;
    augs.push_back(spec);
    out.provenance.augmentations = std::move(augs);
    return out;
  }
  if (!(spec.magnitude >= 0.0)) throw Error("augmentation magnitude must be non-negative");
  Rng rng(spec.rng_seed);
  const double lo = graph.slice.t_start();
  const double hi = std::nextafter(graph.slice.t_end(), -std::numeric_limits<double>::infinity());
  std::vector<EdgeEvent> events(graph.slice.events().begin(), graph.slice.events().end());
  for (auto& e : events) {
    if (spec.kind == AugmentationKind::time_shift) {
      e.t = std::clamp(e.t + rng.uniform(-spec.magnitude, spec.magnitude), lo, hi);
    } else {
      e.w *= std::exp(rng.uniform(-spec.magnitude, spec.magnitude));
    }
  }
  auto stream = std::make_shared<const EdgeStream>(std::move(events), graph.slice.num_nodes(),
                                                   graph.slice.parent().metadata());
  SimulatedGraph out{GraphSlice(stream, graph.slice.t_start(), graph.slice.t_end()),
                     graph.provenance};
  if (graph.slice.label_free()) out.slice = out.slice.as_unlabeled();
  out.provenance.augmentations.push_back(spec);
  return out;
}

std::vector<SimulatedGraph> build_simulated_set(const GraphSlice& seed_source,
                                                const SimulationConfig& config,
                                                std::uint64_t master_seed) {
  config.validate();
  std::vector<SimulatedGraph> out;
  out.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    Rng rng(derive_seed(master_seed, "simulation", i));
    double p = rng.uniform(config.p_lo, config.p_hi);
    double jitter = 0.0;
    const GraphSlice seed = extract_seed(seed_source, config.seed, rng, &jitter);
    SimulatedGraph g = edge_drop(seed, p, rng);
    for (int retry = 0; retry < 5 && g.slice.empty(); ++retry) {
      p *= 0.5;
      g = edge_drop(seed, p, rng);
    }
    if (g.slice.empty()) {
      throw Error("simulated graph " + std::to_string(i) + " is empty after 5 retries");
    }
    g.provenance.jitter = jitter;
    for (std::size_t a = 0; a < config.extra_augmentations.size(); ++a) {
      AugmentationSpec spec = config.extra_augmentations[a];
      spec.rng_seed = derive_seed(master_seed ^ spec.rng_seed, "augmentation", i * 64 + a);
      g = apply_augmentation(g, spec);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double label_simulated(const DgnnModel& model, const SimulatedGraph& graph,
                       const CandidateList& candidates, double bucket_width, int k) {
  const auto queries = enumerate_queries(graph.slice, candidates, bucket_width);
  if (queries.empty()) throw Error("simulated graph has no answerable queries");
  const MeanNdcg m = ground_truth_ndcg(model, graph.slice, queries, k);
  if (m.all_zero_warning) throw Error("simulated graph has no answerable queries");
  return m.value;
}

std::vector<ManifestEntry> make_manifest(std::span<const SimulatedGraph> graphs,
                                         std::span<const double> labels) {
  if (graphs.size() != labels.size()) throw Error("manifest needs one label per graph");
  std::vector<ManifestEntry> out;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    out.push_back({i, g.drop_rate(), g.provenance.jitter, g.provenance.seed_start,
                   g.provenance.seed_end, labels[i], g.slice.size()});
  }
  return out;
}

std::string manifest_to_json(std::span<const ManifestEntry> entries) {
  nlohmann::json j;
  j["format"] = "dygeval.simulated_set";
  j["version"] = 1;
  auto& members = j["members"] = nlohmann::json::array();
  for (const auto& e : entries) {
    members.push_back({{"index", e.index},
                       {"p", e.p},
                       {"jitter", e.jitter},
                       {"seed_start", e.seed_start},
                       {"seed_end", e.seed_end},
                       {"label", e.label},
                       {"events", e.events}});
  }
  return j.dump(2);
}

std::vector<ManifestEntry> manifest_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  check_format(j, "dygeval.simulated_set", 1);
  std::vector<ManifestEntry> out;
  for (const auto& m : j.at("members")) {
    out.push_back({m.at("index").get<std::size_t>(), m.at("p").get<double>(),
                   m.at("jitter").get<double>(), m.at("seed_start").get<double>(),
                   m.at("seed_end").get<double>(), m.at("label").get<double>(),
                   m.at("events").get<std::size_t>()});
  }
  return out;
}

}  // namespace dygeval
