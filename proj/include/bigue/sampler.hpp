#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "bigue/angles.hpp"
#include "bigue/embedding.hpp"
#include "bigue/gauge.hpp"
#include "bigue/graph.hpp"
#include "bigue/model.hpp"
#include "bigue/rng.hpp"

namespace bigue {

enum class MoveKind : std::size_t { rw_theta, rw_kappa, rw_beta, flip, exchange, translate };

inline constexpr std::size_t move_kind_count = 6;
inline constexpr std::array<std::string_view, move_kind_count> move_names{"rw_theta", "rw_kappa", "rw_beta",
                                                                           "flip",     "exchange", "translate"};

inline bool is_cluster_move(MoveKind k) noexcept { return k >= MoveKind::flip; }

// Probabilities over the six move kinds, in `move_names` order.
struct MoveMixture {
  std::array<double, move_kind_count> weights{0.3, 0.2, 0.1, 0.15, 0.125, 0.125};

  static MoveMixture bigue() { return {}; }
  // Random-walk-only kernel with the same relative weights on the three
  // coordinate moves.
  static MoveMixture random_walk() { return {{0.5, 1.0 / 3.0, 1.0 / 6.0, 0.0, 0.0, 0.0}}; }

  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("move mixture: negative weight");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("move mixture: weights must sum to 1");
  }

  MoveKind sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    std::size_t last = 0;
    for (std::size_t i = 0; i < move_kind_count; ++i) {
      if (weights[i] <= 0.0) continue;
      last = i;
      if (x < weights[i]) return static_cast<MoveKind>(i);
      x -= weights[i];
    }
    return static_cast<MoveKind>(last);
  }

  friend bool operator==(const MoveMixture&, const MoveMixture&) = default;
};

struct SamplerConfig {
  std::size_t n_chains = 4;
  std::uint64_t n_iterations = 0;
  double warmup_fraction = 0.5;
  std::uint64_t thinning_k = 10'000;
  // Stride of in-run recording. Recording with stride k yields exactly
  // thin_chain(record-everything, k), without holding every state.
  std::uint64_t record_stride = 1;
  bool keep_warmup = false;
  MoveMixture mixture;
  double rw_step_theta = 0.1;
  double rw_step_log_kappa = 0.1;
  double rw_step_beta = 0.1;
  double threshold_max_gap_multiplier = 2.0;
  std::uint64_t seed = 0;
  // Cached log-posterior is recomputed from scratch this often.
  std::uint64_t revalidate_every = 10'000;

  // Frozen parameters are never proposed; frozen angles are also left out
  // of cluster partitions.
  bool freeze_kappa = false;
  bool freeze_beta = false;
  std::vector<Vertex> frozen_theta;

  void validate() const {
    mixture.validate();
    if (n_chains < 1) throw std::invalid_argument("sampler: need at least one chain");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
      throw std::invalid_argument("sampler: warmup fraction must lie in [0, 1)");
    if (thinning_k < 1 || record_stride < 1) throw std::invalid_argument("sampler: thinning must be at least 1");
    if (!(rw_step_theta >= 0.0 && rw_step_log_kappa >= 0.0 && rw_step_beta >= 0.0))
      throw std::invalid_argument("sampler: step sizes must be nonnegative");
    if (!(threshold_max_gap_multiplier > 0.0)) throw std::invalid_argument("sampler: threshold multiplier must be positive");
    if (revalidate_every < 1) throw std::invalid_argument("sampler: revalidation period must be at least 1");
  }

  std::uint64_t warmup_iterations() const {
    return static_cast<std::uint64_t>(std::floor(warmup_fraction * static_cast<double>(n_iterations)));
  }
};

struct MoveCounters {
  std::array<std::uint64_t, move_kind_count> proposed{};
  std::array<std::uint64_t, move_kind_count> accepted{};

  double acceptance_rate(MoveKind k) const {
    const auto i = static_cast<std::size_t>(k);
    return proposed[i] == 0 ? 0.0 : static_cast<double>(accepted[i]) / static_cast<double>(proposed[i]);
  }
  friend bool operator==(const MoveCounters&, const MoveCounters&) = default;
};

struct ChainState {
  Embedding embedding;
  double log_post = neg_inf;
  double log_lik = 0.0;
  Rng rng;
  std::uint64_t iteration = 0;
  MoveCounters counters;
  // Maintained by Kernel: log angular separations (row-major |V| x |V|) and
  // log kappa of the current embedding. Rebuilt when their size is off.
  std::vector<double> log_sep;
  std::vector<double> log_kappa;
};

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

inline double sample_truncated_half_normal(const PriorConfig& prior, Rng& rng) {
  std::normal_distribution<double> normal(prior.beta0, prior.sigma);
  for (;;) {
    const double b = normal(rng);
    if (b > 1.0) return b;
  }
}

}  // namespace detail

// Starts from the gauge-normalized ground truth when given; otherwise
// kappa_u = deg(u), theta and beta drawn from their priors.
inline ChainState init_state(const Posterior& post, std::uint64_t seed, std::size_t chain_id,
                             const std::optional<Embedding>& ground_truth = std::nullopt) {
  const Graph& g = *post.graph;
  if (g.size() < 3) throw std::invalid_argument("sampler: graphs with fewer than 3 vertices are unsupported");
  ChainState s;
  s.rng = make_rng(seed, Stream::chain, chain_id);
  if (ground_truth) {
    check_embedding(*ground_truth, g.size());
    s.embedding = canonical_gauge(wrapped(*ground_truth), post.gauge);
  } else {
    Embedding e;
    e.kappa.resize(g.size());
    for (Vertex w = 0; w < g.size(); ++w)
      e.kappa[w] = std::max(static_cast<double>(g.degree(w)), 2.0 * post.prior.epsilon);
    std::uniform_real_distribution<double> angle(-pi, pi);
    e.theta.resize(g.size());
    for (double& t : e.theta) t = wrap_angle(angle(s.rng));
    e.beta = detail::sample_truncated_half_normal(post.prior, s.rng);
    s.embedding = canonical_gauge(std::move(e), post.gauge);
  }
  s.log_lik = post.log_likelihood(s.embedding);
  const double lp = post.log_prior(s.embedding);
  s.log_post = lp == neg_inf ? neg_inf : lp + s.log_lik;
  return s;
}

// ---------------------------------------------------------------------------
// Random-walk proposals

enum class RwTarget { theta, kappa, beta };

struct RwProposal {
  Embedding embedding;
  double log_hastings = 0.0;
  // Vertex whose coordinate moved (theta and kappa moves), with its new
  // raw value before gauge re-imposition.
  std::optional<Vertex> vertex;
  double raw_value = 0.0;
};

// Vertices whose angle may be proposed individually: everything except the
// gauge anchor and frozen angles.
inline std::vector<Vertex> free_theta_vertices(std::size_t n, const Gauge& gauge, const SamplerConfig& config) {
  std::vector<Vertex> out;
  for (Vertex w = 0; w < n; ++w) {
    if (w == gauge.anchor) continue;
    if (std::find(config.frozen_theta.begin(), config.frozen_theta.end(), w) != config.frozen_theta.end()) continue;
    out.push_back(w);
  }
  return out;
}

// Vertices that take part in cluster partitions: all non-frozen angles.
inline std::vector<Vertex> movable_vertices(std::size_t n, const SamplerConfig& config) {
  std::vector<Vertex> out;
  for (Vertex w = 0; w < n; ++w)
    if (std::find(config.frozen_theta.begin(), config.frozen_theta.end(), w) == config.frozen_theta.end())
      out.push_back(w);
  return out;
}

// theta: normal step on one free angle (wrapped); kappa: log-normal
// multiplicative step on one kappa, Hastings log-correction equal to the
// log step; beta: normal step. Gauge re-imposed. Returns nothing when the
// requested coordinate is frozen or no angle is free.
inline std::optional<RwProposal> rw_proposal(const Embedding& emb, RwTarget which, const SamplerConfig& config,
                                             const Gauge& gauge, Rng& rng, std::span<const Vertex> free_theta) {
  RwProposal p;
  p.embedding = emb;
  switch (which) {
    case RwTarget::theta: {
      if (free_theta.empty()) return std::nullopt;
      std::uniform_int_distribution<std::size_t> pick(0, free_theta.size() - 1);
      const Vertex w = free_theta[pick(rng)];
      std::normal_distribution<double> step(0.0, 1.0);
      const double raw = wrap_angle(emb.theta[w] + config.rw_step_theta * step(rng));
      p.embedding.theta[w] = raw;
      p.vertex = w;
      p.raw_value = raw;
      break;
    }
    case RwTarget::kappa: {
      if (config.freeze_kappa) return std::nullopt;
      std::uniform_int_distribution<std::size_t> pick(0, emb.size() - 1);
      const Vertex w = pick(rng);
      std::normal_distribution<double> step(0.0, 1.0);
      const double z = config.rw_step_log_kappa * step(rng);
      p.embedding.kappa[w] = emb.kappa[w] * std::exp(z);
      p.log_hastings = z;
      p.vertex = w;
      p.raw_value = p.embedding.kappa[w];
      break;
    }
    case RwTarget::beta: {
      if (config.freeze_beta) return std::nullopt;
      std::normal_distribution<double> step(0.0, 1.0);
      p.embedding.beta = emb.beta + config.rw_step_beta * step(rng);
      break;
    }
  }
  canonicalize_in_place(p.embedding, gauge);
  return p;
}

inline std::optional<RwProposal> rw_proposal(const Embedding& emb, RwTarget which, const SamplerConfig& config,
                                             const Gauge& gauge, Rng& rng) {
  const auto free_theta = free_theta_vertices(emb.size(), gauge, config);
  return rw_proposal(emb, which, config, gauge, rng, free_theta);
}

// ---------------------------------------------------------------------------
// Cluster partitioning and transformations

// Angularly contiguous group of vertices. Members are listed in
// counter-clockwise order starting at `start`; `extent` is the arc from the
// first to the last member.
struct Cluster {
  std::vector<Vertex> members;
  double start = 0.0;
  double extent = 0.0;
};

struct Clustering {
  std::vector<Cluster> clusters;
  double threshold = 0.0;
};

// Cuts the circle at every gap between angle-consecutive vertices that
// exceeds `threshold`. Without such a gap everything is one cluster,
// started after the widest gap.
inline Clustering partition_at_threshold(const Embedding& emb, double threshold, std::span<const Vertex> vertices) {
  Clustering out;
  out.threshold = threshold;
  if (vertices.empty()) return out;
  std::vector<Vertex> order(vertices.begin(), vertices.end());
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return emb.theta[a] < emb.theta[b]; });
  const std::size_t m = order.size();
  // gap[i] runs from order[i] to order[i + 1] (cyclically).
  std::vector<double> gap(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = emb.theta[order[i]];
    const double b = emb.theta[order[(i + 1) % m]];
    gap[i] = i + 1 < m ? b - a : b + two_pi - a;
  }
  if (m == 1) gap[0] = two_pi;

  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i < m; ++i)
    if (gap[i] > threshold) cuts.push_back(i);
  if (cuts.empty()) cuts.push_back(static_cast<std::size_t>(std::max_element(gap.begin(), gap.end()) - gap.begin()));

  for (std::size_t c = 0; c < cuts.size(); ++c) {
    const std::size_t first = (cuts[c] + 1) % m;
    const std::size_t last = cuts[(c + 1) % cuts.size()];
    Cluster cl;
    cl.start = emb.theta[order[first]];
    for (std::size_t i = first;; i = (i + 1) % m) {
      cl.members.push_back(order[i]);
      if (i == last) break;
    }
    cl.extent = wrap_positive(emb.theta[order[last]] - cl.start);
    out.clusters.push_back(std::move(cl));
  }
  return out;
}

// Threshold ~ Uniform(0, m * 2pi / |V|).
inline Clustering partition_clusters(const Embedding& emb, Rng& rng, const SamplerConfig& config,
                                     std::span<const Vertex> vertices) {
  std::uniform_real_distribution<double> u(0.0, config.threshold_max_gap_multiplier * two_pi /
                                                     static_cast<double>(emb.size()));
  return partition_at_threshold(emb, u(rng), vertices);
}

inline Clustering partition_clusters(const Embedding& emb, Rng& rng, const SamplerConfig& config) {
  const auto vertices = movable_vertices(emb.size(), config);
  return partition_clusters(emb, rng, config, vertices);
}

// Reflection of the cluster about the midpoint of its arc.
inline void flip_cluster(Embedding& emb, const Cluster& cl) {
  const double end = cl.start + cl.extent;
  for (Vertex w : cl.members) {
    const double offset = wrap_positive(emb.theta[w] - cl.start);
    emb.theta[w] = wrap_angle(end - offset);
  }
}

// Rigid rotation moving the cluster's arc start to `new_start`.
inline void move_cluster_start(Embedding& emb, const Cluster& cl, double new_start) {
  const double shift = new_start - cl.start;
  for (Vertex w : cl.members) emb.theta[w] = wrap_angle(emb.theta[w] + shift);
}

inline void exchange_clusters(Embedding& emb, const Cluster& a, const Cluster& b) {
  move_cluster_start(emb, a, b.start);
  move_cluster_start(emb, b, a.start);
}

inline void translate_cluster(Embedding& emb, const Cluster& a, const Cluster& target) {
  move_cluster_start(emb, a, target.start);
}

inline Embedding flip_move(const Embedding& emb, const Clustering& clustering, Rng& rng, const Gauge& gauge) {
  if (clustering.clusters.empty()) throw std::invalid_argument("flip: no clusters");
  std::uniform_int_distribution<std::size_t> pick(0, clustering.clusters.size() - 1);
  Embedding out = emb;
  flip_cluster(out, clustering.clusters[pick(rng)]);
  canonicalize_in_place(out, gauge);
  return out;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> pick_two(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::uniform_int_distribution<std::size_t> second(0, n - 2);
  const std::size_t i = first(rng);
  std::size_t j = second(rng);
  if (j >= i) ++j;
  return {i, j};
}

}  // namespace detail

// Empty when there are fewer than two clusters (the move is skipped).
inline std::optional<Embedding> exchange_move(const Embedding& emb, const Clustering& clustering, Rng& rng,
                                              const Gauge& gauge) {
  if (clustering.clusters.size() < 2) return std::nullopt;
  const auto [i, j] = detail::pick_two(clustering.clusters.size(), rng);
  Embedding out = emb;
  exchange_clusters(out, clustering.clusters[i], clustering.clusters[j]);
  canonicalize_in_place(out, gauge);
  return out;
}

inline std::optional<Embedding> translate_move(const Embedding& emb, const Clustering& clustering, Rng& rng,
                                               const Gauge& gauge) {
  if (clustering.clusters.size() < 2) return std::nullopt;
  const auto [i, j] = detail::pick_two(clustering.clusters.size(), rng);
  Embedding out = emb;
  translate_cluster(out, clustering.clusters[i], clustering.clusters[j]);
  canonicalize_in_place(out, gauge);
  return out;
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings kernel

struct StepOutcome {
  MoveKind move;
  bool accepted;
};

// Accept with probability min(1, exp(log_ratio)); -inf always rejects.
inline bool metropolis_accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio) || log_ratio == neg_inf) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform_open(rng)) < log_ratio;
}

namespace detail {

inline double log_r_over_mu(std::size_t n, double mu) { return std::log(static_cast<double>(n) / two_pi) - std::log(mu); }

inline void rebuild_separations(ChainState& s) {
  const std::size_t n = s.embedding.size();
  s.log_sep.assign(n * n, 0.0);
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      s.log_sep[u * n + v] = s.log_sep[v * n + u] =
          std::log(angular_separation(s.embedding.theta[u], s.embedding.theta[v]));
  s.log_kappa = log_kappas(s.embedding);
}

// Log-likelihood from cached separations with the given beta, mu and
// kappa (vertex w optionally overridden).
inline double cached_log_likelihood(const Graph& g, const ChainState& s, double beta, double mu, Vertex w = 0,
                                    double log_kappa_w = std::numeric_limits<double>::quiet_NaN()) {
  const std::size_t n = g.size();
  const double c = log_r_over_mu(n, mu);
  const bool override_w = !std::isnan(log_kappa_w);
  double total = 0.0;
  for (Vertex u = 0; u + 1 < n; ++u) {
    const auto row = g.adjacency_row(u);
    const double* ls = &s.log_sep[u * n];
    const double lku = override_w && u == w ? log_kappa_w : s.log_kappa[u];
    for (Vertex v = u + 1; v < n; ++v) {
      const double lkv = override_w && v == w ? log_kappa_w : s.log_kappa[v];
      total += log_pair_term(ls[v] + c - lku - lkv, beta, row[v] != 0);
    }
  }
  return total;
}

struct PairUpdate {
  Vertex u, v;
  double log_sep;
};

}  // namespace detail

// Holds per-run invariants of the kernel (free vertex lists) and updates
// the likelihood incrementally: single-angle moves and cluster moves only
// touch pairs whose separation changed, since every cluster transformation
// is rigid on the cluster and gauge re-imposition is a global isometry.
class Kernel {
 public:
  Kernel(const Posterior& post, const SamplerConfig& config)
      : post_(post),
        config_(config),
        free_theta_(free_theta_vertices(post.graph->size(), post.gauge, config)),
        movable_(movable_vertices(post.graph->size(), config)) {
    config_.validate();
  }

  StepOutcome step(ChainState& s) const {
    const std::size_t n = post_.graph->size();
    if (s.log_sep.size() != n * n || s.log_kappa.size() != n) detail::rebuild_separations(s);
    const MoveKind kind = config_.mixture.sample(s.rng);
    const bool accepted = attempt(s, kind);
    auto& c = s.counters;
    ++c.proposed[static_cast<std::size_t>(kind)];
    if (accepted) ++c.accepted[static_cast<std::size_t>(kind)];
    ++s.iteration;
    if (s.iteration % config_.revalidate_every == 0) revalidate(s);
    return {kind, accepted};
  }

  // Recomputes the cached quantities from scratch.
  void revalidate(ChainState& s) const {
    detail::rebuild_separations(s);
    s.log_lik = post_.log_likelihood(s.embedding);
    const double lp = post_.log_prior(s.embedding);
    s.log_post = lp == neg_inf ? neg_inf : lp + s.log_lik;
  }

  const SamplerConfig& config() const { return config_; }
  const Posterior& posterior() const { return post_; }

 private:
  bool attempt(ChainState& s, MoveKind kind) const {
    switch (kind) {
      case MoveKind::rw_theta: return attempt_theta(s);
      case MoveKind::rw_kappa: return attempt_kappa(s);
      case MoveKind::rw_beta: return attempt_beta(s);
      default: return attempt_cluster(s, kind);
    }
  }

  bool attempt_theta(ChainState& s) const {
    auto p = rw_proposal(s.embedding, RwTarget::theta, config_, post_.gauge, s.rng, free_theta_);
    if (!p) return false;
    const double lp = post_.log_prior(p->embedding);
    if (lp == neg_inf) return false;
    const Graph& g = *post_.graph;
    const std::size_t n = g.size();
    const Vertex w = *p->vertex;
    row_.resize(n);
    double delta = 0.0;
    if (post_.likelihood_enabled) {
      const double mu = post_.mu(s.embedding.beta, s.embedding.kappa);
      const double c = detail::log_r_over_mu(n, mu) - s.log_kappa[w];
      const auto adj = g.adjacency_row(w);
      const double* old_row = &s.log_sep[w * n];
      for (Vertex v = 0; v < n; ++v) {
        if (v == w) continue;
        row_[v] = std::log(angular_separation(p->raw_value, s.embedding.theta[v]));
        const double base = c - s.log_kappa[v];
        delta += log_pair_term(row_[v] + base, s.embedding.beta, adj[v] != 0) -
                 log_pair_term(old_row[v] + base, s.embedding.beta, adj[v] != 0);
      }
    } else {
      for (Vertex v = 0; v < n; ++v)
        if (v != w) row_[v] = std::log(angular_separation(p->raw_value, s.embedding.theta[v]));
    }
    const double new_lik = s.log_lik + delta;
    if (!finish(s, std::move(p->embedding), lp, new_lik, 0.0)) return false;
    for (Vertex v = 0; v < n; ++v)
      if (v != w) s.log_sep[w * n + v] = s.log_sep[v * n + w] = row_[v];
    return true;
  }

  bool attempt_kappa(ChainState& s) const {
    auto p = rw_proposal(s.embedding, RwTarget::kappa, config_, post_.gauge, s.rng, free_theta_);
    if (!p) return false;
    const double lp = post_.log_prior(p->embedding);
    if (lp == neg_inf) return false;
    const Graph& g = *post_.graph;
    const std::size_t n = g.size();
    const Vertex w = *p->vertex;
    const double new_lk = std::log(p->raw_value);
    double new_lik = 0.0;
    if (post_.likelihood_enabled) {
      if (post_.mu.mode == MuPolicy::Mode::fixed_mean) {
        const double c = detail::log_r_over_mu(n, post_.mu(s.embedding.beta, s.embedding.kappa));
        const auto adj = g.adjacency_row(w);
        const double* row = &s.log_sep[w * n];
        double delta = 0.0;
        for (Vertex v = 0; v < n; ++v) {
          if (v == w) continue;
          const double base = row[v] + c - s.log_kappa[v];
          delta += log_pair_term(base - new_lk, s.embedding.beta, adj[v] != 0) -
                   log_pair_term(base - s.log_kappa[w], s.embedding.beta, adj[v] != 0);
        }
        new_lik = s.log_lik + delta;
      } else {
        const double mu = post_.mu(p->embedding.beta, p->embedding.kappa);
        new_lik = detail::cached_log_likelihood(g, s, s.embedding.beta, mu, w, new_lk);
      }
    }
    if (!finish(s, std::move(p->embedding), lp, new_lik, p->log_hastings)) return false;
    s.log_kappa[w] = new_lk;
    return true;
  }

  bool attempt_beta(ChainState& s) const {
    auto p = rw_proposal(s.embedding, RwTarget::beta, config_, post_.gauge, s.rng, free_theta_);
    if (!p) return false;
    const double lp = post_.log_prior(p->embedding);
    if (lp == neg_inf) return false;
    double new_lik = 0.0;
    if (post_.likelihood_enabled) {
      const double mu = post_.mu(p->embedding.beta, p->embedding.kappa);
      new_lik = detail::cached_log_likelihood(*post_.graph, s, p->embedding.beta, mu);
    }
    return finish(s, std::move(p->embedding), lp, new_lik, 0.0);
  }

  bool attempt_cluster(ChainState& s, MoveKind kind) const {
    const Clustering clustering = partition_clusters(s.embedding, s.rng, config_, movable_);
    if (clustering.clusters.empty()) return false;
    const auto& cl = clustering.clusters;
    const std::size_t n = post_.graph->size();
    Embedding moved = s.embedding;
    group_.assign(n, 0);
    if (kind == MoveKind::flip) {
      std::uniform_int_distribution<std::size_t> pick(0, cl.size() - 1);
      const Cluster& a = cl[pick(s.rng)];
      flip_cluster(moved, a);
      for (Vertex w : a.members) group_[w] = 1;
    } else {
      if (cl.size() < 2) return false;
      const auto [i, j] = detail::pick_two(cl.size(), s.rng);
      if (kind == MoveKind::exchange) {
        exchange_clusters(moved, cl[i], cl[j]);
        for (Vertex w : cl[j].members) group_[w] = 2;
      } else {
        translate_cluster(moved, cl[i], cl[j]);
      }
      for (Vertex w : cl[i].members) group_[w] = 1;
    }

    // Separation changes only for pairs split across differently moved groups.
    const Graph& g = *post_.graph;
    updates_.clear();
    double delta = 0.0;
    const double mu = post_.likelihood_enabled ? post_.mu(s.embedding.beta, s.embedding.kappa) : 1.0;
    const double c = detail::log_r_over_mu(n, mu);
    for (Vertex u = 0; u < n; ++u) {
      if (group_[u] == 0) continue;
      const auto adj = g.adjacency_row(u);
      for (Vertex v = 0; v < n; ++v) {
        if (group_[v] == group_[u] || (group_[v] != 0 && v < u)) continue;
        const double ls = std::log(angular_separation(moved.theta[u], moved.theta[v]));
        updates_.push_back({u, v, ls});
        if (!post_.likelihood_enabled) continue;
        const double base = c - s.log_kappa[u] - s.log_kappa[v];
        delta += log_pair_term(ls + base, s.embedding.beta, adj[v] != 0) -
                 log_pair_term(s.log_sep[u * n + v] + base, s.embedding.beta, adj[v] != 0);
      }
    }
    canonicalize_in_place(moved, post_.gauge);
    const double lp = post_.log_prior(moved);
    if (lp == neg_inf) return false;
    const double new_lik = s.log_lik + delta;
    if (!finish(s, std::move(moved), lp, new_lik, 0.0)) return false;
    for (const auto& up : updates_) s.log_sep[up.u * n + up.v] = s.log_sep[up.v * n + up.u] = up.log_sep;
    return true;
  }

  // Incremental updates are meaningless from a state with -inf likelihood;
  // such proposals are evaluated from scratch.
  bool finish(ChainState& s, Embedding&& proposal, double log_prior, double new_lik, double log_hastings) const {
    if (!std::isfinite(s.log_lik) || std::isnan(new_lik)) new_lik = post_.log_likelihood(proposal);
    const double new_post = new_lik == neg_inf ? neg_inf : log_prior + new_lik;
    bool accept;
    if (new_post == neg_inf || std::isnan(new_post)) {
      accept = false;
    } else if (s.log_post == neg_inf) {
      accept = true;
    } else {
      accept = metropolis_accept(new_post - s.log_post + log_hastings, s.rng);
    }
    if (accept) {
      s.embedding = std::move(proposal);
      s.log_post = new_post;
      s.log_lik = new_lik;
    }
    return accept;
  }

  const Posterior& post_;
  SamplerConfig config_;
  std::vector<Vertex> free_theta_;
  std::vector<Vertex> movable_;
  // Scratch buffers; a Kernel serves one chain at a time.
  mutable std::vector<double> row_;
  mutable std::vector<int> group_;
  mutable std::vector<detail::PairUpdate> updates_;
};

inline StepOutcome mh_step(ChainState& state, const Posterior& post, const SamplerConfig& config) {
  return Kernel(post, config).step(state);
}

// ---------------------------------------------------------------------------
// Chains and draw sets

struct Draw {
  std::size_t chain = 0;
  std::uint64_t iteration = 0;
  bool warmup = false;
  Embedding embedding;
  double log_posterior = neg_inf;

  friend bool operator==(const Draw&, const Draw&) = default;
};

struct ChainStats {
  std::size_t chain = 0;
  MoveCounters counters;
  friend bool operator==(const ChainStats&, const ChainStats&) = default;
};

struct DrawSet {
  std::vector<std::string> labels;
  std::vector<Draw> draws;
  std::vector<ChainStats> chains;

  std::size_t size() const noexcept { return draws.size(); }
  bool empty() const noexcept { return draws.empty(); }
  friend bool operator==(const DrawSet&, const DrawSet&) = default;
};

namespace detail {

inline bool should_record(std::uint64_t index, std::uint64_t warmup, const SamplerConfig& config) {
  if (index >= warmup) return (index - warmup) % config.record_stride == 0;
  return config.keep_warmup && index % config.record_stride == 0;
}

}  // namespace detail

// Runs n_iterations steps. State 0 is the initial state; states before the
// warm-up boundary are recorded only with keep_warmup. Deterministic in
// (seed, chain_id).
inline DrawSet run_chain(const Posterior& post, const SamplerConfig& config, std::size_t chain_id,
                         const std::optional<Embedding>& init = std::nullopt) {
  Kernel kernel(post, config);
  ChainState state = init_state(post, config.seed, chain_id, init);
  const std::uint64_t warmup = config.warmup_iterations();
  DrawSet out;
  out.labels = post.graph->labels();
  auto record = [&](std::uint64_t index) {
    if (!detail::should_record(index, warmup, config)) return;
    out.draws.push_back({chain_id, index, index < warmup, state.embedding, state.log_post});
  };
  record(0);
  for (std::uint64_t i = 1; i <= config.n_iterations; ++i) {
    kernel.step(state);
    record(i);
  }
  out.chains.push_back({chain_id, state.counters});
  return out;
}

inline DrawSet merge_draw_sets(std::vector<DrawSet> parts) {
  DrawSet out;
  for (auto& p : parts) {
    if (out.labels.empty()) out.labels = p.labels;
    out.draws.insert(out.draws.end(), std::make_move_iterator(p.draws.begin()),
                     std::make_move_iterator(p.draws.end()));
    out.chains.insert(out.chains.end(), p.chains.begin(), p.chains.end());
  }
  std::stable_sort(out.draws.begin(), out.draws.end(), [](const Draw& a, const Draw& b) {
    return a.chain != b.chain ? a.chain < b.chain : a.iteration < b.iteration;
  });
  std::sort(out.chains.begin(), out.chains.end(),
            [](const ChainStats& a, const ChainStats& b) { return a.chain < b.chain; });
  return out;
}

// Runs config.n_chains independent chains, one thread each. Results do not
// depend on scheduling.
inline DrawSet run_chains(const Posterior& post, const SamplerConfig& config,
                          const std::optional<Embedding>& init = std::nullopt, bool parallel = true) {
  config.validate();
  std::vector<DrawSet> parts(config.n_chains);
  if (parallel && config.n_chains > 1) {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(config.n_chains);
    for (std::size_t c = 0; c < config.n_chains; ++c)
      workers.emplace_back([&, c] {
        try {
          parts[c] = run_chain(post, config, c, init);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    for (auto& w : workers) w.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t c = 0; c < config.n_chains; ++c) parts[c] = run_chain(post, config, c, init);
  }
  return merge_draw_sets(std::move(parts));
}

// Keeps post-warm-up draws 0, k, 2k, ... of every chain; warm-up draws are
// dropped.
inline DrawSet thin_chain(const DrawSet& draws, std::uint64_t k) {
  if (k < 1) throw std::invalid_argument("thin: k must be at least 1");
  DrawSet out;
  out.labels = draws.labels;
  out.chains = draws.chains;
  std::vector<std::pair<std::size_t, std::uint64_t>> seen;  // chain -> post-warm-up count
  for (const Draw& d : draws.draws) {
    if (d.warmup) continue;
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == d.chain; });
    if (it == seen.end()) {
      seen.emplace_back(d.chain, 0);
      it = seen.end() - 1;
    }
    if (it->second % k == 0) out.draws.push_back(d);
    ++it->second;
  }
  return out;
}

}  // namespace bigue
