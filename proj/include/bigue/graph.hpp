#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bigue {

using Vertex = std::size_t;

struct Edge {
  Vertex u;
  Vertex v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Immutable simple undirected graph. Edges are stored normalized (u < v)
// and sorted; adjacency queries are O(1) through a dense bit table, which is
// fine for the few-hundred-vertex graphs this library targets.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n_vertices, std::span<const Edge> edges, std::vector<std::string> labels = {})
      : n_(n_vertices), adjacency_(n_vertices * n_vertices, 0), neighbors_(n_vertices), degree_(n_vertices, 0) {
    if (labels.empty()) {
      labels.reserve(n_);
      for (std::size_t i = 0; i < n_; ++i) labels.push_back(std::to_string(i));
    }
    if (labels.size() != n_) throw std::invalid_argument("graph: label count does not match vertex count");
    labels_ = std::move(labels);

    edges_.reserve(edges.size());
    for (Edge e : edges) {
      if (e.u >= n_ || e.v >= n_) throw std::invalid_argument("graph: edge endpoint out of range");
      if (e.u == e.v) throw std::invalid_argument("graph: self-loop");
      if (e.u > e.v) std::swap(e.u, e.v);
      auto& cell = adjacency_[e.u * n_ + e.v];
      if (cell) throw std::invalid_argument("graph: duplicate edge");
      cell = 1;
      adjacency_[e.v * n_ + e.u] = 1;
      edges_.push_back(e);
    }
    std::sort(edges_.begin(), edges_.end());
    for (const Edge& e : edges_) {
      neighbors_[e.u].push_back(e.v);
      neighbors_[e.v].push_back(e.u);
    }
    for (std::size_t w = 0; w < n_; ++w) {
      std::sort(neighbors_[w].begin(), neighbors_[w].end());
      degree_[w] = neighbors_[w].size();
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::size_t>& degrees() const noexcept { return degree_; }
  std::size_t degree(Vertex w) const { return degree_.at(w); }
  std::span<const Vertex> neighbors(Vertex w) const { return neighbors_.at(w); }

  bool adjacent(Vertex u, Vertex v) const noexcept { return adjacency_[u * n_ + v] != 0; }

  // Row of the adjacency table, one byte per vertex.
  std::span<const std::uint8_t> adjacency_row(Vertex u) const noexcept {
    return {adjacency_.data() + u * n_, n_};
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.labels_ == b.labels_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::vector<Vertex>> neighbors_;
  std::vector<std::size_t> degree_;
  std::vector<std::string> labels_;
};

inline constexpr std::size_t unreachable = std::numeric_limits<std::size_t>::max();

// Hop distances from `source`; unreachable vertices get `unreachable`.
inline std::vector<std::size_t> bfs_distances(const Graph& g, Vertex source) {
  std::vector<std::size_t> dist(g.size(), unreachable);
  std::queue<Vertex> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    Vertex c = frontier.front();
    frontier.pop();
    for (Vertex nb : g.neighbors(c)) {
      if (dist[nb] == unreachable) {
        dist[nb] = dist[c] + 1;
        frontier.push(nb);
      }
    }
  }
  return dist;
}

// Component id per vertex, numbered by smallest member.
inline std::vector<std::size_t> connected_components(const Graph& g, std::size_t* count = nullptr) {
  std::vector<std::size_t> comp(g.size(), unreachable);
  std::size_t next = 0;
  for (Vertex s = 0; s < g.size(); ++s) {
    if (comp[s] != unreachable) continue;
    std::vector<Vertex> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      Vertex c = stack.back();
      stack.pop_back();
      for (Vertex nb : g.neighbors(c)) {
        if (comp[nb] == unreachable) {
          comp[nb] = next;
          stack.push_back(nb);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

inline bool is_connected(const Graph& g) {
  std::size_t count = 0;
  connected_components(g, &count);
  return count <= 1;
}

// Vertices of the largest connected component (ties: the component holding
// the smallest vertex index), in increasing order.
inline std::vector<Vertex> largest_component(const Graph& g) {
  std::size_t count = 0;
  auto comp = connected_components(g, &count);
  std::vector<std::size_t> sizes(count, 0);
  for (auto c : comp) ++sizes[c];
  std::size_t best = 0;
  for (std::size_t c = 1; c < count; ++c)
    if (sizes[c] > sizes[best]) best = c;
  std::vector<Vertex> members;
  for (Vertex w = 0; w < g.size(); ++w)
    if (comp[w] == best) members.push_back(w);
  return members;
}

// Subgraph induced by `keep` (increasing vertex order), labels carried over.
inline Graph induced_subgraph(const Graph& g, std::span<const Vertex> keep) {
  std::vector<std::size_t> index(g.size(), unreachable);
  for (std::size_t i = 0; i < keep.size(); ++i) index[keep[i]] = i;
  std::vector<Edge> edges;
  for (const Edge& e : g.edges())
    if (index[e.u] != unreachable && index[e.v] != unreachable) edges.push_back({index[e.u], index[e.v]});
  std::vector<std::string> labels;
  labels.reserve(keep.size());
  for (Vertex w : keep) labels.push_back(g.labels()[w]);
  return Graph(keep.size(), edges, std::move(labels));
}

// Same vertex set with some edges removed.
inline Graph remove_edges(const Graph& g, std::span<const Edge> removed) {
  std::vector<Edge> rest;
  for (const Edge& e : g.edges()) {
    bool drop = std::any_of(removed.begin(), removed.end(), [&](Edge r) {
      if (r.u > r.v) std::swap(r.u, r.v);
      return r == e;
    });
    if (!drop) rest.push_back(e);
  }
  return Graph(g.size(), rest, g.labels());
}

}  // namespace bigue
