#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "bigue/angles.hpp"

namespace bigue {

// Point in the parameter space of the circle model: one angle and one
// hidden-degree parameter per vertex plus the inverse temperature.
struct Embedding {
  std::vector<double> theta;
  std::vector<double> kappa;
  double beta = 2.0;

  std::size_t size() const noexcept { return theta.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

// Hyperparameters of the independent priors on beta, kappa and theta.
struct PriorConfig {
  double beta0 = 3.0;
  double sigma = 2.0;
  double gamma = 4.0;
  double epsilon = 1e-10;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("prior: sigma must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("prior: gamma must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("prior: epsilon must be positive");
  }

  friend bool operator==(const PriorConfig&, const PriorConfig&) = default;
};

inline void check_embedding(const Embedding& emb, std::size_t n_vertices) {
  if (emb.theta.size() != n_vertices || emb.kappa.size() != n_vertices)
    throw std::invalid_argument("embedding size does not match graph size");
}

// Checks every invariant of a stored embedding; returns false instead of
// throwing so property tests can assert on it.
inline bool is_valid_embedding(const Embedding& emb, const PriorConfig& prior) {
  if (emb.theta.size() != emb.kappa.size()) return false;
  if (!(emb.beta > 1.0)) return false;
  for (double t : emb.theta)
    if (!(t >= -pi && t < pi)) return false;
  for (double k : emb.kappa)
    if (!(k > prior.epsilon)) return false;
  return true;
}

inline Embedding wrapped(Embedding emb) {
  for (double& t : emb.theta) t = wrap_angle(t);
  return emb;
}

}  // namespace bigue
