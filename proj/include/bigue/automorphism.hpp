#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bigue/embedding.hpp"
#include "bigue/graph.hpp"

namespace bigue {

// Edge-preserving relabelling. Applied to an embedding as
// theta'[w] = theta[permutation[w]] (same for kappa).
struct Automorphism {
  std::vector<Vertex> permutation;

  bool is_identity() const {
    for (std::size_t i = 0; i < permutation.size(); ++i)
      if (permutation[i] != i) return false;
    return true;
  }
  friend bool operator==(const Automorphism&, const Automorphism&) = default;
  friend auto operator<=>(const Automorphism&, const Automorphism&) = default;
};

struct AutomorphismSet {
  std::vector<Automorphism> elements;
  // Set when the search stopped at the size limit; `elements` then holds
  // the automorphisms found so far rather than the whole group.
  bool truncated = false;
};

inline Automorphism identity_automorphism(std::size_t n) {
  Automorphism a;
  a.permutation.resize(n);
  std::iota(a.permutation.begin(), a.permutation.end(), Vertex{0});
  return a;
}

inline bool preserves_edges(const Graph& g, const Automorphism& a) {
  const auto& p = a.permutation;
  if (p.size() != g.size()) return false;
  std::vector<bool> seen(g.size(), false);
  for (Vertex x : p) {
    if (x >= g.size() || seen[x]) return false;
    seen[x] = true;
  }
  for (Vertex u = 0; u < g.size(); ++u)
    for (Vertex v = u + 1; v < g.size(); ++v)
      if (g.adjacent(u, v) != g.adjacent(p[u], p[v])) return false;
  return true;
}

inline Embedding apply_automorphism(const Embedding& emb, const Automorphism& a) {
  Embedding out = emb;
  for (std::size_t w = 0; w < emb.size(); ++w) {
    out.theta[w] = emb.theta[a.permutation[w]];
    out.kappa[w] = emb.kappa[a.permutation[w]];
  }
  return out;
}

// Coarsest equitable refinement of the degree partition (colour
// refinement). Automorphisms map every vertex inside its own colour class.
inline std::vector<std::size_t> equitable_colors(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> color(n);
  for (Vertex w = 0; w < n; ++w) color[w] = g.degree(w);
  std::size_t classes = 0;
  while (true) {
    std::map<std::vector<std::size_t>, std::size_t> ids;
    std::vector<std::vector<std::size_t>> signature(n);
    for (Vertex w = 0; w < n; ++w) {
      auto& s = signature[w];
      s.push_back(color[w]);
      std::vector<std::size_t> nb;
      for (Vertex x : g.neighbors(w)) nb.push_back(color[x]);
      std::sort(nb.begin(), nb.end());
      s.insert(s.end(), nb.begin(), nb.end());
      ids.emplace(s, 0);
    }
    std::size_t next = 0;
    for (auto& [sig, id] : ids) id = next++;
    for (Vertex w = 0; w < n; ++w) color[w] = ids[signature[w]];
    if (next == classes) break;
    classes = next;
  }
  return color;
}

namespace detail {

struct AutomorphismSearch {
  const Graph& g;
  std::vector<std::size_t> color;
  std::vector<Vertex> order;
  std::vector<Vertex> image;
  std::vector<bool> used;
  std::size_t limit;
  AutomorphismSet result;

  AutomorphismSearch(const Graph& graph, std::size_t lim)
      : g(graph), color(equitable_colors(graph)), image(graph.size()), used(graph.size(), false), limit(lim) {
    // Visit vertices breadth-first, each component seeded from its rarest
    // colour, so every new vertex is constrained by already-mapped neighbours.
    const std::size_t n = g.size();
    std::vector<std::size_t> class_size(n + 1, 0);
    for (auto c : color) ++class_size[c];
    std::vector<bool> placed(n, false);
    while (order.size() < n) {
      Vertex seed = n;
      for (Vertex w = 0; w < n; ++w)
        if (!placed[w] && (seed == n || class_size[color[w]] < class_size[color[seed]])) seed = w;
      std::vector<Vertex> queue{seed};
      placed[seed] = true;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        Vertex c = queue[head];
        order.push_back(c);
        for (Vertex nb : g.neighbors(c))
          if (!placed[nb]) {
            placed[nb] = true;
            queue.push_back(nb);
          }
      }
    }
  }

  bool consistent(std::size_t depth, Vertex v, Vertex w) const {
    for (std::size_t i = 0; i < depth; ++i) {
      const Vertex x = order[i];
      if (g.adjacent(v, x) != g.adjacent(w, image[x])) return false;
    }
    return true;
  }

  // Returns false once the limit is exceeded.
  bool extend(std::size_t depth) {
    if (depth == order.size()) {
      result.elements.push_back({image});
      return result.elements.size() <= limit;
    }
    const Vertex v = order[depth];
    for (Vertex w = 0; w < g.size(); ++w) {
      if (used[w] || color[w] != color[v] || !consistent(depth, v, w)) continue;
      image[v] = w;
      used[w] = true;
      const bool keep_going = extend(depth + 1);
      used[w] = false;
      if (!keep_going) return false;
    }
    return true;
  }
};

}  // namespace detail

// All automorphisms of `g` when the group has at most `limit` elements;
// otherwise the first `limit` found with `truncated` set. Backtracking over
// colour-refined candidates with pairwise adjacency checks.
inline AutomorphismSet enumerate_automorphisms(const Graph& g, std::size_t limit = 10'000) {
  if (limit < 1) throw std::invalid_argument("automorphisms: limit must be at least 1");
  if (g.size() == 0) return {{Automorphism{}}, false};
  detail::AutomorphismSearch search(g, limit);
  const bool complete = search.extend(0);
  auto result = std::move(search.result);
  if (!complete) {
    result.elements.resize(limit);
    result.truncated = true;
  }
  std::sort(result.elements.begin(), result.elements.end());
  return result;
}

}  // namespace bigue
