#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bigue/angles.hpp"
#include "bigue/embedding.hpp"
#include "bigue/graph.hpp"
#include "bigue/model.hpp"
#include "bigue/rng.hpp"
#include "bigue/sampler.hpp"

namespace bigue {

// ---------------------------------------------------------------------------
// Graph generation and properties

// Independent Bernoulli draw for every pair with the model's edge probability.
inline Graph sample_graph(const Embedding& emb, Rng& rng, const MuPolicy& mu_policy = {},
                          std::vector<std::string> labels = {}) {
  const std::size_t n = emb.size();
  const double mu = mu_policy(emb.beta, emb.kappa);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (Vertex a = 0; a + 1 < n; ++a)
    for (Vertex b = a + 1; b < n; ++b)
      if (u(rng) < edge_probability(emb, a, b, mu)) edges.push_back({a, b});
  return Graph(n, edges, std::move(labels));
}

inline double density(const Graph& g) {
  if (g.size() < 2) throw std::invalid_argument("density: needs at least two vertices");
  const double n = static_cast<double>(g.size());
  return static_cast<double>(g.edge_count()) / (n * (n - 1.0) / 2.0);
}

// 3 x triangles / connected triples; 0 without any triple.
inline double transitivity(const Graph& g) {
  double triangles = 0.0;
  double triples = 0.0;
  for (Vertex w = 0; w < g.size(); ++w) {
    const auto nb = g.neighbors(w);
    const double d = static_cast<double>(nb.size());
    triples += d * (d - 1.0) / 2.0;
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j)
        if (g.adjacent(nb[i], nb[j])) triangles += 1.0;
  }
  // each triangle was counted once per corner
  return triples == 0.0 ? 0.0 : triangles / triples;
}

// Mean hop distance over vertex pairs of the largest connected component.
inline double avg_shortest_path(const Graph& g) {
  const auto comp = largest_component(g);
  if (comp.size() < 2) throw std::domain_error("shortest path: largest component has fewer than two vertices");
  double total = 0.0;
  for (Vertex s : comp) {
    const auto dist = bfs_distances(g, s);
    for (Vertex t : comp)
      if (t > s) total += static_cast<double>(dist[t]);
  }
  const double m = static_cast<double>(comp.size());
  return total / (m * (m - 1.0) / 2.0);
}

// ---------------------------------------------------------------------------
// Hyperbolic coordinates

struct HyperbolicCoords {
  std::vector<double> r;
  std::vector<double> theta;

  std::size_t size() const noexcept { return r.size(); }
};

// r_w = R - 2 ln(kappa_w / kappa_min), R = 2 ln(|V| / (pi mu kappa_min^2)),
// clamped at the origin.
inline HyperbolicCoords to_hyperbolic(const Embedding& emb, double mu) {
  if (emb.kappa.empty()) throw std::invalid_argument("to_hyperbolic: empty embedding");
  for (double k : emb.kappa)
    if (!(k > 0.0)) throw std::invalid_argument("to_hyperbolic: kappa must be positive");
  const double kmin = *std::min_element(emb.kappa.begin(), emb.kappa.end());
  const double outer = 2.0 * std::log(static_cast<double>(emb.size()) / (pi * mu * kmin * kmin));
  HyperbolicCoords h;
  h.theta = emb.theta;
  h.r.resize(emb.size());
  for (std::size_t w = 0; w < emb.size(); ++w) h.r[w] = std::max(0.0, outer - 2.0 * std::log(emb.kappa[w] / kmin));
  return h;
}

inline HyperbolicCoords to_hyperbolic(const Embedding& emb, const MuPolicy& mu_policy = {}) {
  return to_hyperbolic(emb, mu_policy(emb.beta, emb.kappa));
}

inline double outer_radius(const Embedding& emb, double mu) {
  const double kmin = *std::min_element(emb.kappa.begin(), emb.kappa.end());
  return 2.0 * std::log(static_cast<double>(emb.size()) / (pi * mu * kmin * kmin));
}

inline double hyperbolic_distance(const HyperbolicCoords& c, Vertex u, Vertex v) {
  if (u == v) return 0.0;
  const double ru = c.r[u], rv = c.r[v];
  const double dtheta = angular_separation(c.theta[u], c.theta[v]);
  if (dtheta == 0.0) return std::fabs(ru - rv);
  // cosh(ru - rv) + sinh ru sinh rv (1 - cos dtheta) avoids cancellation for
  // nearby points.
  const double s = std::sin(0.5 * dtheta);
  const double arg = std::cosh(ru - rv) + 2.0 * std::sinh(ru) * std::sinh(rv) * s * s;
  return std::acosh(std::max(1.0, arg));
}

// ---------------------------------------------------------------------------
// Greedy routing

namespace detail {

inline bool greedy_route(const Graph& g, const HyperbolicCoords& c, Vertex source, Vertex target,
                         std::vector<std::uint8_t>& visited) {
  std::fill(visited.begin(), visited.end(), 0);
  Vertex cur = source;
  visited[cur] = 1;
  for (std::size_t hops = 0; hops < g.size(); ++hops) {
    if (cur == target) return true;
    const auto nb = g.neighbors(cur);
    if (nb.empty()) return false;
    Vertex next = nb[0];
    double best = std::numeric_limits<double>::infinity();
    for (Vertex x : nb) {
      const double d = hyperbolic_distance(c, x, target);
      if (d < best) {  // neighbours are sorted, so ties keep the smaller index
        best = d;
        next = x;
      }
    }
    if (visited[next]) return false;
    visited[next] = 1;
    cur = next;
  }
  return cur == target;
}

}  // namespace detail

// Fraction of ordered source-target pairs (within the largest component)
// that greedy forwarding delivers. All pairs when there are at most
// `pair_budget`, otherwise `pair_budget` pairs drawn uniformly with `rng`.
inline double greedy_routing_success(const Graph& g, const HyperbolicCoords& coords, std::size_t pair_budget,
                                     Rng& rng) {
  const auto comp = largest_component(g);
  const std::size_t m = comp.size();
  if (m < 2) throw std::domain_error("greedy routing: largest component has fewer than two vertices");
  std::vector<std::uint8_t> visited(g.size(), 0);
  std::size_t success = 0, total = 0;
  const std::size_t all_pairs = m * (m - 1);
  if (all_pairs <= pair_budget) {
    for (Vertex s : comp)
      for (Vertex t : comp) {
        if (s == t) continue;
        success += detail::greedy_route(g, coords, s, t, visited);
        ++total;
      }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    while (total < pair_budget) {
      const Vertex s = comp[pick(rng)], t = comp[pick(rng)];
      if (s == t) continue;
      success += detail::greedy_route(g, coords, s, t, visited);
      ++total;
    }
  }
  return static_cast<double>(success) / static_cast<double>(total);
}

inline double greedy_routing_success(const Graph& g, const HyperbolicCoords& coords, std::size_t pair_budget = 10'000,
                                     std::uint64_t seed = 0) {
  Rng rng = make_rng(seed, Stream::analysis);
  return greedy_routing_success(g, coords, pair_budget, rng);
}

// ---------------------------------------------------------------------------
// Global hierarchy level

// h = 1 - (2/pi) <dtheta(u, v)> over edges, each edge oriented from its
// inner (smaller r) endpoint. Lies in [-1, 1]; 1 when every edge is
// angularly aligned.
inline double global_hierarchy_level(const Graph& g, const HyperbolicCoords& coords) {
  if (g.edge_count() == 0) throw std::domain_error("hierarchy: graph has no edges");
  double sum = 0.0;
  for (const Edge& e : g.edges()) {
    const Vertex inner = coords.r[e.u] <= coords.r[e.v] ? e.u : e.v;
    const Vertex outer = inner == e.u ? e.v : e.u;
    sum += angular_separation(coords.theta[inner], coords.theta[outer]);
  }
  return 1.0 - (2.0 / pi) * sum / static_cast<double>(g.edge_count());
}

// ---------------------------------------------------------------------------
// Interval summaries

struct IntervalSummary {
  std::size_t count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double hdi50_low = 0.0;
  double hdi50_high = 0.0;
};

// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Shortest interval covering ceil(mass * n) sorted values.
inline std::pair<double, double> highest_density_interval(std::vector<double> values, double mass) {
  if (values.empty()) throw std::invalid_argument("hdi: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n))));
  std::size_t best = 0;
  double width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= n; ++i) {
    const double w = values[i + k - 1] - values[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {values[best], values[best + k - 1]};
}

// Equal-tailed interval holding `mass` of the values.
inline std::pair<double, double> central_interval(std::vector<double> values, double mass) {
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - mass) / 2.0;
  return {quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail)};
}

inline IntervalSummary summarize(std::vector<double> values) {
  IntervalSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  s.q25 = quantile_sorted(values, 0.25);
  s.q75 = quantile_sorted(values, 0.75);
  auto [lo, hi] = highest_density_interval(values, 0.5);
  // the shortest half-interval may miss an even-count median by a hair
  s.hdi50_low = std::min(lo, s.median);
  s.hdi50_high = std::max(hi, s.median);
  return s;
}

// ---------------------------------------------------------------------------
// Posterior predictive summary

struct PredictiveConfig {
  std::uint64_t seed = 0;
  std::size_t routing_pair_budget = 10'000;
  MuPolicy mu;
};

struct PredictiveDraw {
  std::size_t chain = 0;
  std::uint64_t iteration = 0;
  std::optional<double> density;
  std::optional<double> transitivity;
  std::optional<double> avg_shortest_path;
  std::optional<double> greedy_success;
  std::optional<double> hierarchy;
};

struct PredictiveSummary {
  std::vector<PredictiveDraw> per_draw;
  IntervalSummary density;
  IntervalSummary transitivity;
  IntervalSummary avg_shortest_path;
  IntervalSummary greedy_success;
  IntervalSummary hierarchy;
  std::size_t skipped = 0;  // metric evaluations that raised and were dropped
};

namespace detail {

template <class F>
std::optional<double> guarded(F&& f, std::size_t& skipped) {
  try {
    return f();
  } catch (const std::domain_error&) {
    ++skipped;
    return std::nullopt;
  }
}

inline std::vector<double> collect(const std::vector<PredictiveDraw>& rows, std::optional<double> PredictiveDraw::*m) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.*m) out.push_back(*(r.*m));
  return out;
}

}  // namespace detail

// One generated graph per draw for the graph properties; routing and
// hierarchy use the draw's coordinates on the observed graph. Each draw has
// its own RNG substream, so results do not depend on evaluation order.
inline PredictiveSummary posterior_predictive_summary(const DrawSet& draws, const Graph& graph,
                                                      const PredictiveConfig& config = {}) {
  if (draws.empty()) throw std::invalid_argument("predictive: no draws");
  PredictiveSummary out;
  std::size_t index = 0;
  for (const Draw& d : draws.draws) {
    check_embedding(d.embedding, graph.size());
    Rng rng = make_rng(config.seed, Stream::draw, index++);
    PredictiveDraw row;
    row.chain = d.chain;
    row.iteration = d.iteration;
    const Graph sampled = sample_graph(d.embedding, rng, config.mu);
    row.density = detail::guarded([&] { return density(sampled); }, out.skipped);
    row.transitivity = detail::guarded([&] { return transitivity(sampled); }, out.skipped);
    row.avg_shortest_path = detail::guarded([&] { return avg_shortest_path(sampled); }, out.skipped);
    const auto coords = to_hyperbolic(d.embedding, config.mu);
    row.greedy_success =
        detail::guarded([&] { return greedy_routing_success(graph, coords, config.routing_pair_budget, rng); },
                        out.skipped);
    row.hierarchy = detail::guarded([&] { return global_hierarchy_level(graph, coords); }, out.skipped);
    out.per_draw.push_back(row);
  }
  out.density = summarize(detail::collect(out.per_draw, &PredictiveDraw::density));
  out.transitivity = summarize(detail::collect(out.per_draw, &PredictiveDraw::transitivity));
  out.avg_shortest_path = summarize(detail::collect(out.per_draw, &PredictiveDraw::avg_shortest_path));
  out.greedy_success = summarize(detail::collect(out.per_draw, &PredictiveDraw::greedy_success));
  out.hierarchy = summarize(detail::collect(out.per_draw, &PredictiveDraw::hierarchy));
  return out;
}

// ---------------------------------------------------------------------------
// Link prediction

// Normalized rank of each removed-edge score among the non-edge scores:
// (strictly lower + ties / 2) / count.
inline std::vector<double> normalized_ranks(std::span<const double> removed_scores,
                                            std::span<const double> non_edge_scores) {
  if (non_edge_scores.empty()) throw std::invalid_argument("ranks: no non-edges to rank against");
  std::vector<double> sorted(non_edge_scores.begin(), non_edge_scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(removed_scores.size());
  for (double s : removed_scores) {
    const auto lower = std::lower_bound(sorted.begin(), sorted.end(), s) - sorted.begin();
    const auto upper = std::upper_bound(sorted.begin(), sorted.end(), s) - sorted.begin();
    out.push_back((static_cast<double>(lower) + 0.5 * static_cast<double>(upper - lower)) /
                  static_cast<double>(sorted.size()));
  }
  return out;
}

inline std::vector<double> rank_histogram(std::span<const double> ranks, std::size_t bins = 20) {
  std::vector<double> h(bins, 0.0);
  if (ranks.empty()) return h;
  for (double r : ranks) {
    auto b = static_cast<std::size_t>(r * static_cast<double>(bins));
    h[std::min(b, bins - 1)] += 1.0;
  }
  for (double& x : h) x /= static_cast<double>(ranks.size());
  return h;
}

// Mean over the ensemble of the edge probability of every pair, as a dense
// symmetric table.
inline std::vector<double> ensemble_edge_scores(std::span<const Embedding> ensemble, const MuPolicy& mu_policy = {}) {
  if (ensemble.empty()) throw std::invalid_argument("scores: empty ensemble");
  const std::size_t n = ensemble.front().size();
  std::vector<double> score(n * n, 0.0);
  for (const Embedding& e : ensemble) {
    const double mu = mu_policy(e.beta, e.kappa);
    for (Vertex u = 0; u + 1 < n; ++u)
      for (Vertex v = u + 1; v < n; ++v) score[u * n + v] += edge_probability(e, u, v, mu);
  }
  for (Vertex u = 0; u + 1 < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) {
      score[u * n + v] /= static_cast<double>(ensemble.size());
      score[v * n + u] = score[u * n + v];
    }
  return score;
}

struct LinkPredictionResult {
  std::vector<Edge> removed;
  std::vector<double> ranks;
  double auc = 0.0;
  std::size_t removal_attempts = 0;
};

// Picks ceil(fraction * |E|) edges uniformly to remove; with
// `keep_connected`, removals that disconnect a connected graph are redrawn.
inline std::pair<Graph, std::vector<Edge>> remove_random_edges(const Graph& g, double fraction, Rng& rng,
                                                               bool keep_connected, std::size_t* attempts = nullptr,
                                                               std::size_t max_attempts = 1000) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("removal fraction must lie in (0, 1)");
  if (g.edge_count() == 0) throw std::invalid_argument("link prediction: no removable edges");
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(g.edge_count())));
  if (k >= g.edge_count()) throw std::invalid_argument("link prediction: removal would empty the graph");
  const bool require = keep_connected && is_connected(g);
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    std::vector<Edge> pool = g.edges();
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    Graph damaged = remove_edges(g, pool);
    if (!require || is_connected(damaged)) {
      if (attempts) *attempts = attempt;
      return {std::move(damaged), std::move(pool)};
    }
  }
  throw std::runtime_error("link prediction: could not find a removal that keeps the graph connected");
}

// Scores the unconnected pairs of the damaged graph with the ensemble's
// averaged edge probability and ranks each removed edge against the
// never-removed non-edges. AUC is the mean normalized rank.
inline LinkPredictionResult score_removed_edges(const Graph& original, std::span<const Edge> removed,
                                                std::span<const Embedding> ensemble, const MuPolicy& mu = {}) {
  const std::size_t n = original.size();
  for (const auto& e : ensemble) check_embedding(e, n);
  const auto score = ensemble_edge_scores(ensemble, mu);
  std::vector<double> removed_scores, non_edge_scores;
  for (const Edge& e : removed) removed_scores.push_back(score[e.u * n + e.v]);
  for (Vertex u = 0; u + 1 < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (!original.adjacent(u, v)) non_edge_scores.push_back(score[u * n + v]);
  LinkPredictionResult out;
  out.removed.assign(removed.begin(), removed.end());
  out.ranks = normalized_ranks(removed_scores, non_edge_scores);
  double sum = 0.0;
  for (double r : out.ranks) sum += r;
  out.auc = out.ranks.empty() ? 0.0 : sum / static_cast<double>(out.ranks.size());
  return out;
}

// Full experiment: damage the graph, obtain an ensemble for the damaged
// graph from `embed` (posterior sampler, fixed point estimate, ...), rank.
inline LinkPredictionResult link_prediction_experiment(
    const Graph& graph, double removal_fraction,
    const std::function<std::vector<Embedding>(const Graph& damaged)>& embed, Rng& rng, bool keep_connected = true,
    const MuPolicy& mu = {}) {
  std::size_t attempts = 0;
  auto [damaged, removed] = remove_random_edges(graph, removal_fraction, rng, keep_connected, &attempts);
  const auto ensemble = embed(damaged);
  auto out = score_removed_edges(graph, removed, ensemble, mu);
  out.removal_attempts = attempts;
  return out;
}

}  // namespace bigue
