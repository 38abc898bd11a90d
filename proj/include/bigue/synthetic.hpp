#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bigue/analysis.hpp"
#include "bigue/angles.hpp"
#include "bigue/embedding.hpp"
#include "bigue/graph.hpp"
#include "bigue/model.hpp"
#include "bigue/rng.hpp"

namespace bigue {

// Density proportional to kappa^-exponent on (low, high).
struct TruncatedPareto {
  double exponent = 2.5;
  double low = 4.0;
  double high = 10.0;

  void validate() const {
    if (!(low > 0.0) || !(low < high)) throw std::invalid_argument("truncated Pareto: need 0 < low < high");
    if (!(exponent > 1.0)) throw std::invalid_argument("truncated Pareto: exponent must exceed 1");
  }

  // Inverse CDF; u = 0 gives `low`, u = 1 gives `high`.
  double quantile(double u) const {
    const double s = exponent - 1.0;
    const double a = std::pow(low, -s), b = std::pow(high, -s);
    return std::pow(a - u * (a - b), -1.0 / s);
  }

  double cdf(double k) const {
    if (k <= low) return 0.0;
    if (k >= high) return 1.0;
    const double s = exponent - 1.0;
    const double a = std::pow(low, -s), b = std::pow(high, -s);
    return (a - std::pow(k, -s)) / (a - b);
  }

  double operator()(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return quantile(u(rng));
  }

  friend bool operator==(const TruncatedPareto&, const TruncatedPareto&) = default;
};

inline Embedding sample_prior_embedding(std::size_t n, double beta, const TruncatedPareto& law, Rng& rng) {
  if (n < 3) throw std::invalid_argument("synthetic: need at least 3 vertices");
  law.validate();
  Embedding e;
  e.beta = beta;
  e.theta.resize(n);
  e.kappa.resize(n);
  std::uniform_real_distribution<double> angle(-pi, pi);
  for (auto& t : e.theta) t = wrap_angle(angle(rng));
  for (auto& k : e.kappa) k = law(rng);
  return e;
}

struct GeneratorSettings {
  std::size_t n = 30;
  double beta = 2.5;
  TruncatedPareto kappa_law;
  std::uint64_t seed = 0;
  bool require_connected = false;
  // Bimodal construction only.
  std::optional<double> shift;
};

struct GroundTruthInstance {
  Graph graph;
  Embedding embedding;
  GeneratorSettings settings;
  std::size_t rejections = 0;
  // Bimodal construction: the vertex whose pairs used either position, and
  // the embedding with its shifted angle.
  std::optional<Vertex> shifted_vertex;
  std::optional<Embedding> alternate;
};

class generation_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t max_generation_attempts = 1000;

// Attempt a draws from substream (instance, a); connectivity rejections move
// on to the next attempt.
inline GroundTruthInstance generate_instance(std::size_t n, double beta, const TruncatedPareto& law,
                                             std::uint64_t seed, bool require_connected = false) {
  if (!(beta > 1.0)) throw std::invalid_argument("synthetic: beta must exceed 1");
  for (std::size_t attempt = 0; attempt < max_generation_attempts; ++attempt) {
    Rng rng = make_rng(seed, Stream::instance, attempt);
    Embedding e = sample_prior_embedding(n, beta, law, rng);
    Graph g = sample_graph(e, rng);
    if (require_connected && !is_connected(g)) continue;
    GroundTruthInstance out;
    out.graph = std::move(g);
    out.embedding = std::move(e);
    out.settings = {n, beta, law, seed, require_connected, std::nullopt};
    out.rejections = attempt;
    return out;
  }
  throw generation_failure("synthetic: " + std::to_string(max_generation_attempts) +
                           " consecutive disconnected graphs");
}

// One vertex u is chosen uniformly; each pair (u, v) is drawn with u at its
// original angle or at angle + shift, with an independent fair coin per pair.
inline GroundTruthInstance make_bimodal_instance(std::size_t n, double beta, const TruncatedPareto& law, double shift,
                                                 std::uint64_t seed) {
  if (shift == 0.0) throw std::invalid_argument("bimodal: shift must be nonzero");
  if (!(beta > 1.0)) throw std::invalid_argument("synthetic: beta must exceed 1");
  Rng rng = make_rng(seed, Stream::instance);
  Embedding base = sample_prior_embedding(n, beta, law, rng);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const Vertex u = pick(rng);
  Embedding alt = base;
  alt.theta[u] = wrap_angle(base.theta[u] + shift);

  const double mu = mu_constant(beta, base.kappa);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<Edge> edges;
  for (Vertex a = 0; a + 1 < n; ++a)
    for (Vertex b = a + 1; b < n; ++b) {
      const Embedding& src = (a == u || b == u) && coin(rng) ? alt : base;
      if (unit(rng) < edge_probability(src, a, b, mu)) edges.push_back({a, b});
    }
  GroundTruthInstance out;
  out.graph = Graph(n, edges);
  out.embedding = std::move(base);
  out.settings = {n, beta, law, seed, false, shift};
  out.shifted_vertex = u;
  out.alternate = std::move(alt);
  return out;
}

}  // namespace bigue
