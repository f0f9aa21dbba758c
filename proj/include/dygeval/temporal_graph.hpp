#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dygeval {

using NodeId = std::uint32_t;

struct EdgeEvent {
  NodeId src = 0;
  NodeId dst = 0;
  double t = 0.0;
  double w = 1.0;

  friend bool operator==(const EdgeEvent&, const EdgeEvent&) = default;
};

struct StreamMetadata {
  std::string name;
  bool allow_self_loops = false;

  friend bool operator==(const StreamMetadata&, const StreamMetadata&) = default;
};

// Time-ordered interaction events. Immutable once constructed.
class EdgeStream {
 public:
  // Validates every event and sorts stably by timestamp (ties keep input order).
  EdgeStream(std::vector<EdgeEvent> events, std::size_t num_nodes,
             StreamMetadata metadata = {});

  std::span<const EdgeEvent> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  std::size_t num_nodes() const noexcept { return num_nodes_; }
  const StreamMetadata& metadata() const noexcept { return metadata_; }
  double t_min() const;
  double t_max() const;

  friend bool operator==(const EdgeStream&, const EdgeStream&) = default;

 private:
  std::vector<EdgeEvent> events_;
  std::size_t num_nodes_ = 0;
  StreamMetadata metadata_;
};

using StreamPtr = std::shared_ptr<const EdgeStream>;

// Half-open time window [t_start, t_end) over a shared parent stream.
//
// A slice may be flagged label-free: ground-truth affinity cannot be computed
// from it, and estimators refuse slices that are not flagged.
class GraphSlice {
 public:
  GraphSlice(StreamPtr parent, double t_start, double t_end);

  // Covers every event of `parent`; t_end is the next double above t_max.
  static GraphSlice whole(StreamPtr parent);

  std::span<const EdgeEvent> events() const noexcept;
  std::size_t size() const noexcept { return end_ - begin_; }
  bool empty() const noexcept { return begin_ == end_; }
  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  double length() const noexcept { return t_end_ - t_start_; }
  const EdgeStream& parent() const noexcept { return *parent_; }
  const StreamPtr& parent_ptr() const noexcept { return parent_; }
  std::size_t num_nodes() const noexcept { return parent_->num_nodes(); }

  bool label_free() const noexcept { return label_free_; }
  GraphSlice as_unlabeled() const;

  // Restriction to [max(t_start, a), min(t_end, b)); keeps the label flag.
  GraphSlice restrict(double a, double b) const;

  friend bool operator==(const GraphSlice& a, const GraphSlice& b) {
    return a.parent_ == b.parent_ && a.t_start_ == b.t_start_ &&
           a.t_end_ == b.t_end_ && a.label_free_ == b.label_free_;
  }

 private:
  StreamPtr parent_;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
  bool label_free_ = false;
};

inline constexpr std::size_t kNumTteVariants = 8;

// g_0 .. g_7: the test window with progressively later start times.
struct TteVariantSet {
  std::array<double, kNumTteVariants> offsets{};  // offsets[0] == 0
  std::vector<GraphSlice> variants;
};

struct DriftConfig {
  std::size_t num_nodes = 100;
  std::size_t num_communities = 5;
  // Node ids [num_nodes - num_destinations, num_nodes) are destinations; the
  // rest are sources. Both sides are split into num_communities blocks.
  std::size_t num_destinations = 40;
  double horizon = 100.0;
  double drift_rate = 0.05;  // radians of preference rotation per time unit
  double base_rate = 60.0;   // events per time unit
  double concentration = 3.0;  // von Mises sharpness over the community ring
  double popularity_skew = 1.0;  // Zipf exponent inside a community
  std::uint64_t rng_seed = 7;

  void validate() const;
};

EdgeStream parse_edge_stream(std::istream& in, std::string name = {});
EdgeStream parse_edge_stream(std::string_view text, std::string name = {});
EdgeStream read_edge_stream_file(const std::string& path);

// CSV with header `src,dst,t,w`; timestamps and weights in shortest
// round-trip form.
void write_edge_stream(std::ostream& out, const EdgeStream& stream);
std::string to_csv(const EdgeStream& stream);

GraphSlice window(StreamPtr stream, double t_start, double t_end);

// Train gets the first ceil(fraction * n) events rounded up to a whole
// timestamp group; rounded down instead when that would leave test empty.
std::pair<GraphSlice, GraphSlice> split_train_test(StreamPtr stream,
                                                   double train_fraction);

// Seven start offsets at j/8 of the window length.
std::vector<double> default_tte_offsets(const GraphSlice& test);

TteVariantSet make_tte_variants(const GraphSlice& test,
                                std::span<const double> offsets);

EdgeStream synth_drift_stream(const DriftConfig& config);

// Source / destination community of a node in a stream produced by
// synth_drift_stream with `config`.
std::size_t drift_community(const DriftConfig& config, NodeId node);
bool drift_is_destination(const DriftConfig& config, NodeId node);

// Sorted node ids appearing as a destination in `slice`.
std::vector<NodeId> destination_nodes(const GraphSlice& slice);

}  // namespace dygeval
