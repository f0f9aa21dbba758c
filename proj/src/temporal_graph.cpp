#include "dygeval/temporal_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dygeval/error.hpp"
#include "dygeval/rng.hpp"

namespace dygeval {

namespace {

void check_event(const EdgeEvent& e, std::size_t num_nodes, bool allow_self_loops) {
  if (!std::isfinite(e.t) || e.t < 0.0) {
    throw Error("negative or non-finite timestamp");
  }
  if (!std::isfinite(e.w) || e.w <= 0.0) {
    throw Error("non-positive or non-finite weight");
  }
  if (e.src >= num_nodes || e.dst >= num_nodes) {
    throw Error("node id " + std::to_string(std::max(e.src, e.dst)) +
                " out of range for " + std::to_string(num_nodes) + " nodes");
  }
  if (!allow_self_loops && e.src == e.dst) {
    throw Error("self-loop on node " + std::to_string(e.src));
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (field.front() == '+') field.remove_prefix(1);
  }
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

EdgeStream::EdgeStream(std::vector<EdgeEvent> events, std::size_t num_nodes,
                       StreamMetadata metadata)
    : events_(std::move(events)), num_nodes_(num_nodes), metadata_(std::move(metadata)) {
  for (const auto& e : events_) check_event(e, num_nodes_, metadata_.allow_self_loops);
  std::stable_sort(events_.begin(), events_.end(),
                   [](const EdgeEvent& a, const EdgeEvent& b) { return a.t < b.t; });
}

double EdgeStream::t_min() const {
  if (events_.empty()) throw Error("t_min of an empty stream");
  return events_.front().t;
}

double EdgeStream::t_max() const {
  if (events_.empty()) throw Error("t_max of an empty stream");
  return events_.back().t;
}

GraphSlice::GraphSlice(StreamPtr parent, double t_start, double t_end)
    : parent_(std::move(parent)), t_start_(t_start), t_end_(t_end) {
  if (!parent_) throw Error("slice without a parent stream");
  if (!(t_start <= t_end)) {
    throw Error("inverted window bounds [" + std::to_string(t_start) + ", " +
                std::to_string(t_end) + ")");
  }
  const auto ev = parent_->events();
  auto lo = std::lower_bound(ev.begin(), ev.end(), t_start,
                             [](const EdgeEvent& e, double t) { return e.t < t; });
  auto hi = std::lower_bound(lo, ev.end(), t_end,
                             [](const EdgeEvent& e, double t) { return e.t < t; });
  begin_ = static_cast<std::size_t>(lo - ev.begin());
  end_ = static_cast<std::size_t>(hi - ev.begin());
}

GraphSlice GraphSlice::whole(StreamPtr parent) {
  if (!parent || parent->empty()) throw Error("whole() of an empty stream");
  const double lo = parent->t_min();
  const double hi = std::nextafter(parent->t_max(), std::numeric_limits<double>::infinity());
  return GraphSlice(std::move(parent), lo, hi);
}

std::span<const EdgeEvent> GraphSlice::events() const noexcept {
  return parent_->events().subspan(begin_, end_ - begin_);
}

GraphSlice GraphSlice::as_unlabeled() const {
  GraphSlice copy = *this;
  copy.label_free_ = true;
  return copy;
}

GraphSlice GraphSlice::restrict(double a, double b) const {
  const double lo = std::max(t_start_, a);
  const double hi = std::max(lo, std::min(t_end_, b));
  GraphSlice out(parent_, lo, hi);
  out.label_free_ = label_free_;
  return out;
}

EdgeStream parse_edge_stream(std::istream& in, std::string name) {
  std::vector<EdgeEvent> events;
  std::string line;
  std::size_t line_no = 0;
  NodeId max_id = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (first_content) {
      first_content = false;
      if (std::isalpha(static_cast<unsigned char>(text.front()))) continue;  // header
    }
    std::array<std::string_view, 4> fields;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = text.find(',', pos);
      if (count == fields.size()) {
        throw ParseError("expected 4 fields src,dst,timestamp,weight", line_no);
      }
      fields[count++] = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (count != 4) throw ParseError("expected 4 fields src,dst,timestamp,weight", line_no);

    EdgeEvent e;
    if (!parse_number(fields[0], e.src)) throw ParseError("bad source node id", line_no);
    if (!parse_number(fields[1], e.dst)) throw ParseError("bad destination node id", line_no);
    if (!parse_number(fields[2], e.t) || !std::isfinite(e.t)) {
      throw ParseError("bad timestamp", line_no);
    }
    if (!parse_number(fields[3], e.w) || !std::isfinite(e.w)) {
      throw ParseError("bad weight", line_no);
    }
    if (e.t < 0.0) throw ParseError("negative timestamp", line_no);
    if (e.w <= 0.0) throw ParseError("non-positive weight", line_no);
    if (e.src == e.dst) throw ParseError("self-loop without allow_self_loops", line_no);
    max_id = std::max({max_id, e.src, e.dst});
    events.push_back(e);
  }
  if (events.empty()) throw ParseError("empty input", 0);
  return EdgeStream(std::move(events), static_cast<std::size_t>(max_id) + 1,
                    StreamMetadata{std::move(name), false});
}

EdgeStream parse_edge_stream(std::string_view text, std::string name) {
  std::istringstream in{std::string(text)};
  return parse_edge_stream(in, std::move(name));
}

EdgeStream read_edge_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge stream '" + path + "'");
  return parse_edge_stream(in, path);
}

std::string to_csv(const EdgeStream& stream) {
  std::string out = "src,dst,t,w\n";
  out.reserve(out.size() + stream.size() * 32);
  for (const auto& e : stream.events()) {
    out += std::to_string(e.src);
    out += ',';
    out += std::to_string(e.dst);
    out += ',';
    append_double(out, e.t);
    out += ',';
    append_double(out, e.w);
    out += '\n';
  }
  return out;
}

void write_edge_stream(std::ostream& out, const EdgeStream& stream) {
  out << to_csv(stream);
  if (!out) throw Error("failed writing edge stream");
}

GraphSlice window(StreamPtr stream, double t_start, double t_end) {
  return GraphSlice(std::move(stream), t_start, t_end);
}

std::pair<GraphSlice, GraphSlice> split_train_test(StreamPtr stream, double train_fraction) {
  if (!stream || stream->empty()) throw Error("cannot split an empty stream");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  const auto ev = stream->events();
  const std::size_t n = ev.size();
  if (ev.front().t == ev.back().t) {
    throw Error("all events share one timestamp; no train/test split exists");
  }
  const auto target = static_cast<std::size_t>(
      std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t k = std::clamp<std::size_t>(target, 1, n);

  // Round up to the end of the timestamp group holding event k-1.
  const double group_t = ev[k - 1].t;
  auto up = std::upper_bound(ev.begin(), ev.end(), group_t,
                             [](double t, const EdgeEvent& e) { return t < e.t; });
  double t_cut;
  if (up != ev.end()) {
    t_cut = up->t;
  } else {
    // Train would swallow everything: cut before the last group instead.
    t_cut = group_t;
  }
  const double t_end = std::nextafter(stream->t_max(), std::numeric_limits<double>::infinity());
  GraphSlice train(stream, stream->t_min(), t_cut);
  GraphSlice test(stream, t_cut, t_end);
  if (train.empty() || test.empty()) {
    throw Error("split leaves an empty train or test slice");
  }
  return {std::move(train), std::move(test)};
}

std::vector<double> default_tte_offsets(const GraphSlice& test) {
  std::vector<double> offsets;
  for (std::size_t j = 1; j < kNumTteVariants; ++j) {
    offsets.push_back(test.length() * static_cast<double>(j) / kNumTteVariants);
  }
  return offsets;
}

TteVariantSet make_tte_variants(const GraphSlice& test, std::span<const double> offsets) {
  if (offsets.size() != kNumTteVariants - 1) {
    throw Error("expected 7 TTE offsets, got " + std::to_string(offsets.size()));
  }
  TteVariantSet set;
  set.offsets[0] = 0.0;
  set.variants.push_back(test);
  double prev = 0.0;
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    const double o = offsets[j];
    if (!(o > prev)) {
      throw Error("TTE offsets must be positive and strictly increasing (offset " +
                  std::to_string(o) + ")");
    }
    if (!(o < test.length())) {
      throw Error("TTE offset " + std::to_string(o) + " is not shorter than the test window (" +
                  std::to_string(test.length()) + ")");
    }
    prev = o;
    set.offsets[j + 1] = o;
    set.variants.push_back(test.restrict(test.t_start() + o, test.t_end()));
  }
  return set;
}

void DriftConfig::validate() const {
  if (num_communities == 0) throw Error("num_communities must be positive");
  if (num_communities > num_nodes) throw Error("num_communities exceeds num_nodes");
  if (num_destinations < num_communities || num_destinations >= num_nodes) {
    throw Error("num_destinations must be in [num_communities, num_nodes)");
  }
  if (num_nodes - num_destinations < num_communities) {
    throw Error("fewer sources than communities");
  }
  if (!(horizon > 0.0)) throw Error("horizon must be positive");
  if (!(drift_rate >= 0.0)) throw Error("drift_rate must be non-negative");
  if (!(base_rate > 0.0)) throw Error("base_rate must be positive");
  if (!(concentration >= 0.0)) throw Error("concentration must be non-negative");
}

bool drift_is_destination(const DriftConfig& config, NodeId node) {
  return node >= config.num_nodes - config.num_destinations;
}

std::size_t drift_community(const DriftConfig& config, NodeId node) {
  const std::size_t sources = config.num_nodes - config.num_destinations;
  if (drift_is_destination(config, node)) {
    return (node - sources) * config.num_communities / config.num_destinations;
  }
  return static_cast<std::size_t>(node) * config.num_communities / sources;
}

EdgeStream synth_drift_stream(const DriftConfig& config) {
  config.validate();
  const std::size_t sources = config.num_nodes - config.num_destinations;
  const std::size_t communities = config.num_communities;

  // Members of each destination community, ordered by popularity rank.
  std::vector<std::vector<NodeId>> members(communities);
  for (std::size_t v = sources; v < config.num_nodes; ++v) {
    members[drift_community(config, static_cast<NodeId>(v))].push_back(static_cast<NodeId>(v));
  }
  std::vector<std::vector<double>> popularity(communities);
  for (std::size_t c = 0; c < communities; ++c) {
    for (std::size_t r = 0; r < members[c].size(); ++r) {
      popularity[c].push_back(std::pow(static_cast<double>(r + 1), -config.popularity_skew));
    }
  }

  Rng rng(config.rng_seed);
  std::vector<EdgeEvent> events;
  std::vector<double> pref(communities);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(communities);
  double t = rng.exponential(config.base_rate);
  while (t < config.horizon) {
    const auto src = static_cast<NodeId>(rng.below(sources));
    const double angle = step * static_cast<double>(drift_community(config, src)) +
                         config.drift_rate * t;
    for (std::size_t c = 0; c < communities; ++c) {
      pref[c] = std::exp(config.concentration * std::cos(step * static_cast<double>(c) - angle));
    }
    const std::size_t c = rng.categorical(pref);
    const NodeId dst = members[c][rng.categorical(popularity[c])];
    const double w = 1.0 + static_cast<double>(rng.below(3));
    events.push_back({src, dst, t, w});
    t += rng.exponential(config.base_rate);
  }
  if (events.empty()) throw Error("drift configuration produced no events");
  return EdgeStream(std::move(events), config.num_nodes,
                    StreamMetadata{"synthetic-drift", false});
}

std::vector<NodeId> destination_nodes(const GraphSlice& slice) {
  std::vector<char> seen(slice.num_nodes(), 0);
  for (const auto& e : slice.events()) seen[e.dst] = 1;
  std::vector<NodeId> out;
  for (std::size_t v = 0; v < seen.size(); ++v) {
    if (seen[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

}  // namespace dygeval
