#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include "bigue/angles.hpp"
#include "bigue/embedding.hpp"
#include "bigue/gauge.hpp"
#include "bigue/graph.hpp"

namespace bigue {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// mu = beta sin(pi/beta) / (2 pi <kappa>)
inline double mu_constant(double beta, double mean_kappa) {
  if (!(beta > 1.0)) throw std::domain_error("mu: beta must exceed 1");
  return beta * std::sin(pi / beta) / (two_pi * mean_kappa);
}

inline double mu_constant(double beta, std::span<const double> kappa) {
  if (kappa.empty()) throw std::invalid_argument("mu: empty kappa");
  const double mean = std::accumulate(kappa.begin(), kappa.end(), 0.0) / static_cast<double>(kappa.size());
  return mu_constant(beta, mean);
}

// Which quantity stands in for the expected hidden degree in mu. The
// default follows the current kappa vector; the alternative pins it to a
// fixed value such as the observed mean degree.
struct MuPolicy {
  enum class Mode { kappa_mean, fixed_mean };
  Mode mode = Mode::kappa_mean;
  double fixed_mean = 1.0;

  static MuPolicy from_kappa() { return {}; }
  static MuPolicy fixed(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("mu: fixed mean must be positive");
    return {Mode::fixed_mean, mean};
  }
  static MuPolicy from_mean_degree(const Graph& g) {
    return fixed(2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.size()));
  }

  double operator()(double beta, std::span<const double> kappa) const {
    return mode == Mode::kappa_mean ? mu_constant(beta, kappa) : mu_constant(beta, fixed_mean);
  }

  friend bool operator==(const MuPolicy&, const MuPolicy&) = default;
};

// log(1 + e^z) without overflow; +inf and -inf map to +inf and 0.
inline double softplus(double z) noexcept {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double edge_probability(double theta_u, double theta_v, double kappa_u, double kappa_v, double beta, double mu,
                               std::size_t n_vertices) {
  const double d = arc_distance(theta_u, theta_v, n_vertices);
  const double log_x = std::log(d) - std::log(mu * kappa_u * kappa_v);
  return std::exp(-softplus(beta * log_x));
}

inline double edge_probability(const Embedding& emb, Vertex u, Vertex v, double mu) {
  return edge_probability(emb.theta[u], emb.theta[v], emb.kappa[u], emb.kappa[v], emb.beta, mu, emb.size());
}

// Log of P[a_uv] given log x = log(d / (mu kappa_u kappa_v)):
// -log(1 + x^beta) for an edge, -log(1 + x^-beta) for a non-edge.
inline double log_pair_term(double log_x, double beta, bool connected) noexcept {
  return -softplus(connected ? beta * log_x : -beta * log_x);
}

namespace detail {

// Sum of the pair terms involving vertex w, with w's angle and kappa taken
// from the arguments (other vertices from emb).
inline double vertex_terms(const Graph& g, const Embedding& emb, Vertex w, double theta_w, double log_kappa_w,
                           double log_r_over_mu, std::span<const double> log_kappa) {
  double sum = 0.0;
  const auto row = g.adjacency_row(w);
  const double base = log_r_over_mu - log_kappa_w;
  for (Vertex v = 0; v < g.size(); ++v) {
    if (v == w) continue;
    const double sep = angular_separation(theta_w, emb.theta[v]);
    sum += log_pair_term(std::log(sep) + base - log_kappa[v], emb.beta, row[v] != 0);
  }
  return sum;
}

inline std::vector<double> log_kappas(const Embedding& emb) {
  std::vector<double> out(emb.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(emb.kappa[i]);
  return out;
}

}  // namespace detail

inline double log_likelihood(const Graph& g, const Embedding& emb, const MuPolicy& mu_policy = {}) {
  check_embedding(emb, g.size());
  const std::size_t n = g.size();
  if (n < 2) return 0.0;
  const double mu = mu_policy(emb.beta, emb.kappa);
  const double log_r_over_mu = std::log(static_cast<double>(n) / two_pi) - std::log(mu);
  const auto log_kappa = detail::log_kappas(emb);
  double total = 0.0;
  for (Vertex u = 0; u + 1 < n; ++u) {
    const auto row = g.adjacency_row(u);
    const double base = log_r_over_mu - log_kappa[u];
    const double tu = emb.theta[u];
    for (Vertex v = u + 1; v < n; ++v) {
      const double sep = angular_separation(tu, emb.theta[v]);
      total += log_pair_term(std::log(sep) + base - log_kappa[v], emb.beta, row[v] != 0);
    }
  }
  return total;
}

// Change in log-likelihood when only vertex w moves to `new_theta`. Costs
// O(|V|) instead of O(|V|^2); mu is unaffected by angular moves.
inline double log_likelihood_delta_theta(const Graph& g, const Embedding& emb, Vertex w, double new_theta,
                                         const MuPolicy& mu_policy = {}) {
  const double mu = mu_policy(emb.beta, emb.kappa);
  const double log_r_over_mu = std::log(static_cast<double>(g.size()) / two_pi) - std::log(mu);
  const auto log_kappa = detail::log_kappas(emb);
  const double lk = log_kappa[w];
  return detail::vertex_terms(g, emb, w, new_theta, lk, log_r_over_mu, log_kappa) -
         detail::vertex_terms(g, emb, w, emb.theta[w], lk, log_r_over_mu, log_kappa);
}

// Same for a single kappa change. Only valid when mu does not depend on the
// kappa vector (fixed-mean policy); otherwise every pair changes.
inline double log_likelihood_delta_kappa(const Graph& g, const Embedding& emb, Vertex w, double new_kappa,
                                         const MuPolicy& mu_policy) {
  if (mu_policy.mode != MuPolicy::Mode::fixed_mean)
    throw std::logic_error("incremental kappa update requires a fixed mu");
  const double mu = mu_policy(emb.beta, emb.kappa);
  const double log_r_over_mu = std::log(static_cast<double>(g.size()) / two_pi) - std::log(mu);
  const auto log_kappa = detail::log_kappas(emb);
  return detail::vertex_terms(g, emb, w, emb.theta[w], std::log(new_kappa), log_r_over_mu, log_kappa) -
         detail::vertex_terms(g, emb, w, emb.theta[w], log_kappa[w], log_r_over_mu, log_kappa);
}

// Unnormalized log prior. Normalization constants are dropped; only
// differences between states are meaningful.
inline double log_prior(const Embedding& emb, const PriorConfig& prior, const Gauge& gauge) {
  if (!(emb.beta > 1.0)) return neg_inf;
  const double zb = (emb.beta - prior.beta0) / prior.sigma;
  double total = -0.5 * zb * zb;
  for (double k : emb.kappa) {
    if (!(k > prior.epsilon)) return neg_inf;
    const double r = k / prior.gamma;
    total -= std::log1p(r * r);
  }
  for (double t : emb.theta)
    if (!(t >= -pi && t < pi)) return neg_inf;
  if (gauge.anchor < emb.size() && gauge.half_plane < emb.size() && !satisfies_gauge(emb, gauge)) return neg_inf;
  return total;
}

inline double log_posterior(const Graph& g, const Embedding& emb, const PriorConfig& prior, const Gauge& gauge,
                            const MuPolicy& mu_policy = {}) {
  check_embedding(emb, g.size());
  const double lp = log_prior(emb, prior, gauge);
  if (lp == neg_inf) return neg_inf;
  return lp + log_likelihood(g, emb, mu_policy);
}

// Everything the sampler needs to evaluate the target density.
struct Posterior {
  const Graph* graph = nullptr;
  PriorConfig prior;
  Gauge gauge;
  MuPolicy mu;
  // Disabling the likelihood turns the target into the prior (used to
  // check prior recovery).
  bool likelihood_enabled = true;

  Posterior(const Graph& g, PriorConfig p = {}, MuPolicy m = {})
      : graph(&g), prior(p), gauge(make_gauge(g)), mu(m) {
    prior.validate();
  }

  double log_likelihood(const Embedding& emb) const {
    return likelihood_enabled ? bigue::log_likelihood(*graph, emb, mu) : 0.0;
  }
  double log_prior(const Embedding& emb) const { return bigue::log_prior(emb, prior, gauge); }
  double operator()(const Embedding& emb) const {
    const double lp = log_prior(emb);
    return lp == neg_inf ? neg_inf : lp + log_likelihood(emb);
  }
};

}  // namespace bigue
