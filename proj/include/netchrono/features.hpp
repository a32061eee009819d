#pragma once

// Structural edge features computed from the static topology.
//
// Each edge is described by 12 numbers: the endpoint mean of five node
// metrics followed by seven pair metrics of its endpoints.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"
#include "netio.hpp"

namespace netchrono {

inline constexpr std::size_t kNodeMetricCount = 5;
inline constexpr std::size_t kPairMetricCount = 7;
inline constexpr std::size_t kEdgeFeatureDim = kNodeMetricCount + kPairMetricCount;

using EdgeEmbedding = std::array<double, kEdgeFeatureDim>;

struct NodeMetrics {
  std::vector<double> degree;
  std::vector<double> clustering;
  std::vector<double> betweenness;  // normalized by (N-1)(N-2)/2
  std::vector<double> pagerank;
  std::vector<double> neighbor_clustering;

  std::size_t size() const noexcept { return degree.size(); }

  std::array<double, kNodeMetricCount> row(NodeIndex i) const {
    return {degree[i], clustering[i], betweenness[i], pagerank[i], neighbor_clustering[i]};
  }
};

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

// ---------------------------------------------------------------------------
// Node metrics

inline std::vector<double> clustering_coefficients(const TemporalNetwork& net) {
  const auto n = net.node_count();
  std::vector<double> cc(n, 0.0);
  std::vector<char> mark(n, 0);
  for (NodeIndex i = 0; i < n; ++i) {
    const auto nbrs = net.neighbors(i);
    const auto k = nbrs.size();
    if (k < 2) continue;
    for (auto w : nbrs) mark[w] = 1;
    std::size_t links = 0;
    for (auto w : nbrs) {
      for (auto x : net.neighbors(w)) links += mark[x];
    }
    for (auto w : nbrs) mark[w] = 0;
    // every triangle edge among neighbours was counted twice
    cc[i] = static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  return cc;
}

// Brandes accumulation over unweighted shortest paths.
inline std::vector<double> betweenness_centrality(const TemporalNetwork& net) {
  const auto n = net.node_count();
  std::vector<double> bc(n, 0.0);
  if (n < 3) return bc;

  std::vector<NodeIndex> stack;
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::deque<NodeIndex> queue;
  for (NodeIndex s = 0; s < n; ++s) {
    stack.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push_back(s);
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      stack.push_back(v);
      for (auto w : net.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const auto w = *it;
      for (auto v : net.neighbors(w)) {
        if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) bc[w] += delta[w];
    }
  }
  // each unordered pair was visited from both ends
  const double scale = static_cast<double>((n - 1) * (n - 2));
  for (auto& b : bc) b /= scale;
  return bc;
}

inline std::vector<double> pagerank(const TemporalNetwork& net, const PageRankOptions& opt = {}) {
  const auto n = net.node_count();
  const double nd = static_cast<double>(n);
  std::vector<double> x(n, 1.0 / nd), next(n);
  for (int it = 0; it < opt.max_iterations; ++it) {
    double dangling = 0.0;
    for (NodeIndex i = 0; i < n; ++i) {
      if (net.degree(i) == 0) dangling += x[i];
    }
    const double base = (1.0 - opt.damping) / nd + opt.damping * dangling / nd;
    double diff = 0.0;
    for (NodeIndex i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto j : net.neighbors(i)) acc += x[j] / static_cast<double>(net.degree(j));
      next[i] = base + opt.damping * acc;
      diff += std::abs(next[i] - x[i]);
    }
    x.swap(next);
    if (diff < opt.tolerance) break;
  }
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  for (auto& v : x) v /= total;
  return x;
}

inline NodeMetrics node_metrics(const TemporalNetwork& net) {
  const auto n = net.node_count();
  if (n == 0 || net.edge_count() == 0) throw DomainError("node_metrics requires a non-empty network");
  NodeMetrics m;
  m.degree.resize(n);
  for (NodeIndex i = 0; i < n; ++i) m.degree[i] = static_cast<double>(net.degree(i));
  m.clustering = clustering_coefficients(net);
  m.betweenness = betweenness_centrality(net);
  m.pagerank = pagerank(net);
  m.neighbor_clustering.assign(n, 0.0);
  for (NodeIndex i = 0; i < n; ++i) {
    const auto nbrs = net.neighbors(i);
    if (nbrs.empty()) continue;
    double acc = 0.0;
    for (auto w : nbrs) acc += m.clustering[w];
    m.neighbor_clustering[i] = acc / static_cast<double>(nbrs.size());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Pair metrics

struct PairMetrics {
  double common_neighbors{0};
  double random_walk{0};
  double mst{0};
  double jaccard{0};
  double resource_allocation{0};
  double adamic_adar{0};
  double shortest_path{0};  // with the edge itself removed

  std::array<double, kPairMetricCount> as_array() const {
    return {common_neighbors, random_walk,         mst,          jaccard,
            resource_allocation, adamic_adar, shortest_path};
  }
};

// Kruskal over unit weights, edges visited in (min id, max id) order with ids
// compared as strings, so the result does not depend on input line order.
inline std::vector<std::uint8_t> mst_membership(const TemporalNetwork& net) {
  const auto& edges = net.edges();
  std::vector<NodeIndex> by_id(net.node_count());
  std::iota(by_id.begin(), by_id.end(), NodeIndex{0});
  std::sort(by_id.begin(), by_id.end(),
            [&](NodeIndex a, NodeIndex b) { return net.node_id(a) < net.node_id(b); });
  std::vector<NodeIndex> rank(net.node_count());
  for (NodeIndex r = 0; r < by_id.size(); ++r) rank[by_id[r]] = r;
  std::vector<EdgeIndex> order(edges.size());
  std::iota(order.begin(), order.end(), EdgeIndex{0});
  auto lo_hi = [&](EdgeIndex k) {
    const auto a = rank[edges[k].u], b = rank[edges[k].v];
    return std::pair{std::min(a, b), std::max(a, b)};
  };
  std::sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) { return lo_hi(a) < lo_hi(b); });

  std::vector<NodeIndex> parent(net.node_count());
  std::iota(parent.begin(), parent.end(), NodeIndex{0});
  auto find = [&](NodeIndex x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<std::uint8_t> in_tree(edges.size(), 0);
  for (auto k : order) {
    const auto a = find(edges[k].u);
    const auto b = find(edges[k].v);
    if (a != b) {
      parent[a] = b;
      in_tree[k] = 1;
    }
  }
  return in_tree;
}

// BFS distance from u to v ignoring the direct (u, v) link; N when unreachable.
inline double detour_length(const TemporalNetwork& net, NodeIndex u, NodeIndex v) {
  const auto n = net.node_count();
  std::vector<long> dist(n, -1);
  std::deque<NodeIndex> queue{u};
  dist[u] = 0;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop_front();
    for (auto y : net.neighbors(x)) {
      if (x == u && y == v) continue;
      if (dist[y] >= 0) continue;
      dist[y] = dist[x] + 1;
      if (y == v) return static_cast<double>(dist[y]);
      queue.push_back(y);
    }
  }
  return static_cast<double>(n);
}

namespace detail {

inline PairMetrics pair_metrics_with(const TemporalNetwork& net, NodeIndex u, NodeIndex v,
                                     double mst_flag) {
  PairMetrics p;
  const auto nu = net.neighbors(u);
  const auto nv = net.neighbors(v);
  // 2-step walk averaged over both directions so the value ignores edge orientation
  const double inv_ends = 0.5 / static_cast<double>(nu.size()) + 0.5 / static_cast<double>(nv.size());
  std::size_t common = 0;
  // both lists are sorted
  auto a = nu.begin();
  auto b = nv.begin();
  while (a != nu.end() && b != nv.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      const double dw = static_cast<double>(net.degree(*a));
      ++common;
      p.random_walk += inv_ends / dw;
      p.resource_allocation += 1.0 / dw;
      if (dw >= 2.0) p.adamic_adar += 1.0 / std::log(dw);
      ++a;
      ++b;
    }
  }
  const auto uni = nu.size() + nv.size() - common;
  p.common_neighbors = static_cast<double>(common);
  p.jaccard = uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
  p.mst = mst_flag;
  p.shortest_path = detour_length(net, u, v);
  return p;
}

}  // namespace detail

inline PairMetrics pair_metrics(const TemporalNetwork& net, NodeIndex u, NodeIndex v) {
  const auto k = net.find_edge(u, v);
  if (!k) throw DomainError("pair_metrics: (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") is not an edge");
  const auto tree = mst_membership(net);
  return detail::pair_metrics_with(net, u, v, tree[*k]);
}

// ---------------------------------------------------------------------------
// Edge embeddings

struct Standardization {
  std::array<double, kEdgeFeatureDim> mean{};
  std::array<double, kEdgeFeatureDim> stddev{};
};

struct EdgeFeatures {
  std::vector<EdgeEmbedding> raw;
  std::vector<EdgeEmbedding> standardized;
  Standardization stats;
};

inline EdgeEmbedding raw_edge_embedding(const TemporalNetwork& net, const NodeMetrics& nm,
                                        std::span<const std::uint8_t> tree, EdgeIndex k) {
  const Edge& e = net.edge(k);
  EdgeEmbedding h{};
  const auto ru = nm.row(e.u);
  const auto rv = nm.row(e.v);
  for (std::size_t c = 0; c < kNodeMetricCount; ++c) h[c] = 0.5 * (ru[c] + rv[c]);
  const auto pm = detail::pair_metrics_with(net, e.u, e.v, tree[k]).as_array();
  std::copy(pm.begin(), pm.end(), h.begin() + kNodeMetricCount);
  return h;
}

inline EdgeEmbedding edge_embedding(const TemporalNetwork& net, EdgeIndex k) {
  const auto nm = node_metrics(net);
  const auto tree = mst_membership(net);
  return raw_edge_embedding(net, nm, tree, k);
}

inline constexpr double kStdFloor = 1e-8;

// Per-coordinate z-score over the rows, population std floored at kStdFloor.
template <std::size_t D>
std::pair<std::vector<std::array<double, D>>, std::pair<std::array<double, D>, std::array<double, D>>>
zscore(const std::vector<std::array<double, D>>& rows) {
  std::array<double, D> mean{}, sd{};
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t c = 0; c < D; ++c) mean[c] += r[c];
  for (auto& m : mean) m /= n;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < D; ++c) sd[c] += (r[c] - mean[c]) * (r[c] - mean[c]);
  for (auto& s : sd) s = std::max(std::sqrt(s / n), kStdFloor);
  auto out = rows;
  for (auto& r : out)
    for (std::size_t c = 0; c < D; ++c) r[c] = (r[c] - mean[c]) / sd[c];
  return {std::move(out), {mean, sd}};
}

inline EdgeFeatures edge_embeddings(const TemporalNetwork& net, const NodeMetrics& nm) {
  const auto tree = mst_membership(net);
  EdgeFeatures f;
  f.raw.reserve(net.edge_count());
  for (EdgeIndex k = 0; k < net.edge_count(); ++k) f.raw.push_back(raw_edge_embedding(net, nm, tree, k));
  auto [z, stats] = zscore(f.raw);
  f.standardized = std::move(z);
  f.stats.mean = stats.first;
  f.stats.stddev = stats.second;
  return f;
}

inline EdgeFeatures edge_embeddings(const TemporalNetwork& net) {
  return edge_embeddings(net, node_metrics(net));
}

// Node conditioning table for the diffusion denoiser: z-scored node metrics.
using NodeFeature = std::array<double, kNodeMetricCount>;

inline std::vector<NodeFeature> conditioning_features(const NodeMetrics& nm) {
  std::vector<NodeFeature> rows(nm.size());
  for (NodeIndex i = 0; i < nm.size(); ++i) rows[i] = nm.row(i);
  return zscore(rows).first;
}

}  // namespace netchrono
