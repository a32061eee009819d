#pragma once

// Temporal network container, edge-list I/O, and snapshot statistics.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace netchrono {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::size_t;

struct Edge {
  NodeIndex u{0};
  NodeIndex v{0};
  double t{0.0};
};

struct RawEdge {
  std::string u;
  std::string v;
  double t{0.0};
};

// Undirected, simple, timestamped graph. Immutable after construction.
class TemporalNetwork {
 public:
  TemporalNetwork() = default;

  // Builds from dense indices. Throws DomainError on self-loops, duplicates,
  // dangling endpoints or non-finite timestamps.
  TemporalNetwork(std::vector<std::string> node_ids, std::vector<Edge> edges)
      : node_ids_(std::move(node_ids)), edges_(std::move(edges)) {
    const auto n = node_ids_.size();
    adjacency_.assign(n, {});
    lookup_.reserve(edges_.size() * 2);
    for (EdgeIndex k = 0; k < edges_.size(); ++k) {
      const Edge& e = edges_[k];
      if (e.u >= n || e.v >= n) {
        throw DomainError("edge " + std::to_string(k) + " references an unknown node");
      }
      if (e.u == e.v) {
        throw DomainError("self-loop on node '" + node_ids_[e.u] + "'");
      }
      if (!std::isfinite(e.t)) {
        throw DomainError("non-finite timestamp on edge (" + node_ids_[e.u] + ", " +
                          node_ids_[e.v] + ")");
      }
      if (!lookup_.emplace(key(e.u, e.v), k).second) {
        throw DomainError("duplicate edge (" + node_ids_[e.u] + ", " + node_ids_[e.v] + ")");
      }
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  }

  // Builds from string-labelled edges. Nodes are indexed by first appearance;
  // a repeated undirected pair keeps its first position and the earliest time.
  static TemporalNetwork from_raw(std::span<const RawEdge> raw) {
    std::vector<std::string> ids;
    std::unordered_map<std::string, NodeIndex> index;
    auto intern = [&](const std::string& id) {
      auto [it, fresh] = index.emplace(id, static_cast<NodeIndex>(ids.size()));
      if (fresh) ids.push_back(id);
      return it->second;
    };
    std::vector<Edge> edges;
    std::unordered_map<std::uint64_t, EdgeIndex> seen;
    for (const auto& r : raw) {
      if (r.u == r.v) throw DomainError("self-loop on node '" + r.u + "'");
      const NodeIndex a = intern(r.u);
      const NodeIndex b = intern(r.v);
      auto [it, fresh] = seen.emplace(key(a, b), edges.size());
      if (fresh) {
        edges.push_back({a, b, r.t});
      } else {
        edges[it->second].t = std::min(edges[it->second].t, r.t);
      }
    }
    return TemporalNetwork(std::move(ids), std::move(edges));
  }

  std::size_t node_count() const noexcept { return node_ids_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(EdgeIndex k) const { return edges_.at(k); }
  const std::vector<std::string>& node_ids() const noexcept { return node_ids_; }
  const std::string& node_id(NodeIndex i) const { return node_ids_.at(i); }

  std::span<const NodeIndex> neighbors(NodeIndex i) const { return adjacency_.at(i); }
  std::size_t degree(NodeIndex i) const { return adjacency_.at(i).size(); }

  std::optional<EdgeIndex> find_edge(NodeIndex a, NodeIndex b) const {
    auto it = lookup_.find(key(a, b));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<double> timestamps() const {
    std::vector<double> ts(edges_.size());
    std::transform(edges_.begin(), edges_.end(), ts.begin(), [](const Edge& e) { return e.t; });
    return ts;
  }

  // Same topology and node indexing, new per-edge timestamps.
  TemporalNetwork with_timestamps(std::span<const double> ts) const {
    if (ts.size() != edges_.size()) {
      throw DomainError("timestamp vector length does not match edge count");
    }
    auto edges = edges_;
    for (EdgeIndex k = 0; k < edges.size(); ++k) edges[k].t = ts[k];
    return TemporalNetwork(node_ids_, std::move(edges));
  }

  static std::uint64_t key(NodeIndex a, NodeIndex b) noexcept {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

 private:
  std::vector<std::string> node_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeIndex>> adjacency_;
  std::unordered_map<std::uint64_t, EdgeIndex> lookup_;
};

// ---------------------------------------------------------------------------
// Edge-list text format: `u<TAB>v<TAB>t` per line, `#` starts a comment line.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace detail

inline TemporalNetwork parse_edge_list(std::string_view text) {
  std::vector<RawEdge> raw;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = detail::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto fields = detail::split_fields(line);
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 fields (u, v, t), got " + std::to_string(fields.size()));
    }
    const auto t = detail::parse_double(fields[2]);
    if (!t || !std::isfinite(*t)) {
      throw ParseError(line_no, "invalid timestamp '" + std::string(fields[2]) + "'");
    }
    if (fields[0] == fields[1]) {
      throw ParseError(line_no, "self-loop (" + std::string(fields[0]) + ", " +
                                    std::string(fields[1]) + ") rejected");
    }
    raw.push_back({std::string(fields[0]), std::string(fields[1]), *t});
  }
  return TemporalNetwork::from_raw(raw);
}

// Canonical form: edges sorted by (t, u, v) with node ids compared as strings.
inline std::string write_edge_list(const TemporalNetwork& net) {
  std::vector<EdgeIndex> order(net.edge_count());
  std::iota(order.begin(), order.end(), EdgeIndex{0});
  const auto& edges = net.edges();
  std::sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) {
    const Edge& x = edges[a];
    const Edge& y = edges[b];
    if (x.t != y.t) return x.t < y.t;
    if (net.node_id(x.u) != net.node_id(y.u)) return net.node_id(x.u) < net.node_id(y.u);
    return net.node_id(x.v) < net.node_id(y.v);
  });
  std::string out;
  out.reserve(order.size() * 16);
  for (auto k : order) {
    const Edge& e = edges[k];
    out += net.node_id(e.u);
    out += '\t';
    out += net.node_id(e.v);
    out += '\t';
    out += detail::format_double(e.t);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct DistinguishablePairs {
  std::uint64_t count{0};  // E_d
  double ratio{0.0};       // P_Ed = E_d / C(M, 2)
};

inline DistinguishablePairs distinguishable_pairs(const TemporalNetwork& net) {
  const std::uint64_t m = net.edge_count();
  if (m < 2) throw DomainError("distinguishable_pairs requires at least 2 edges");
  auto ts = net.timestamps();
  std::sort(ts.begin(), ts.end());
  const std::uint64_t all = m * (m - 1) / 2;
  std::uint64_t tied = 0;
  for (std::size_t i = 0; i < ts.size();) {
    std::size_t j = i;
    while (j < ts.size() && ts[j] == ts[i]) ++j;
    const std::uint64_t g = j - i;
    tied += g * (g - 1) / 2;
    i = j;
  }
  const std::uint64_t ed = all - tied;
  return {ed, static_cast<double>(ed) / static_cast<double>(all)};
}

inline std::size_t snapshot_count(const TemporalNetwork& net) {
  auto ts = net.timestamps();
  std::sort(ts.begin(), ts.end());
  return static_cast<std::size_t>(std::unique(ts.begin(), ts.end()) - ts.begin());
}

struct NetworkStats {
  std::size_t nodes{0};
  std::size_t edges{0};
  std::uint64_t distinguishable{0};
  double distinguishable_ratio{0.0};
  std::size_t snapshots{0};
};

inline NetworkStats network_stats(const TemporalNetwork& net) {
  const auto dp = distinguishable_pairs(net);
  return {net.node_count(), net.edge_count(), dp.count, dp.ratio, snapshot_count(net)};
}

inline nlohmann::ordered_json to_json(const NetworkStats& s) {
  nlohmann::ordered_json j;
  j["N"] = s.nodes;
  j["M"] = s.edges;
  j["E_d"] = s.distinguishable;
  j["P_Ed"] = s.distinguishable_ratio;
  j["S"] = s.snapshots;
  return j;
}

// ---------------------------------------------------------------------------
// Sampling and normalized order

// Keeps ceil(fraction * M) uniformly chosen edges with their timestamps. Edge
// order follows the source; nodes not touched by a kept edge are dropped.
inline TemporalNetwork sample_subnetwork(const TemporalNetwork& net, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction >= 0.5 && fraction <= 1.0)) {
    throw DomainError("sample fraction must lie in [0.5, 1.0]");
  }
  const auto m = net.edge_count();
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(m) - 1e-9));
  if (keep < 2) throw DomainError("sampled subnetwork would have fewer than 2 edges");

  std::vector<EdgeIndex> idx(m);
  std::iota(idx.begin(), idx.end(), EdgeIndex{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());

  std::vector<NodeIndex> remap(net.node_count(), ~NodeIndex{0});
  for (auto k : idx) {
    remap[net.edge(k).u] = 0;
    remap[net.edge(k).v] = 0;
  }
  std::vector<std::string> ids;
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    if (remap[i] == 0) {
      remap[i] = static_cast<NodeIndex>(ids.size());
      ids.push_back(net.node_id(i));
    }
  }
  std::vector<Edge> edges;
  edges.reserve(keep);
  for (auto k : idx) {
    const Edge& e = net.edge(k);
    edges.push_back({remap[e.u], remap[e.v], e.t});
  }
  return TemporalNetwork(std::move(ids), std::move(edges));
}

struct NormalizedOrder {
  std::vector<double> alpha;  // rank / M, ties share the mean rank
};

inline std::vector<double> mean_ranks(std::span<const double> values) {
  const auto m = values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(m);
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && values[order[j]] == values[order[i]]) ++j;
    const double mean = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = mean;
    i = j;
  }
  return rank;
}

inline NormalizedOrder normalized_positions(std::span<const double> timestamps) {
  auto rank = mean_ranks(timestamps);
  const auto m = static_cast<double>(timestamps.size());
  for (auto& r : rank) r /= m;
  return {std::move(rank)};
}

inline NormalizedOrder normalized_positions(const TemporalNetwork& net) {
  if (net.edge_count() == 0) throw DomainError("normalized_positions requires at least 1 edge");
  const auto ts = net.timestamps();
  return normalized_positions(std::span<const double>(ts));
}

}  // namespace netchrono
