#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bigue/angles.hpp"
#include "bigue/embedding.hpp"
#include "bigue/graph.hpp"

namespace bigue {

// Gauge fixing of the circle's rotation and reflection symmetries: the
// anchor sits at angle 0 and the half-plane vertex in [0, pi].
struct Gauge {
  Vertex anchor = 0;
  Vertex half_plane = 1;

  friend bool operator==(const Gauge&, const Gauge&) = default;
};

// Highest and second-highest degree vertices; degree ties go to the
// smallest index.
inline Gauge make_gauge(const Graph& g) {
  if (g.size() < 2) throw std::invalid_argument("gauge: needs at least two vertices");
  std::vector<Vertex> order(g.size());
  std::iota(order.begin(), order.end(), Vertex{0});
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return g.degree(a) > g.degree(b); });
  return {order[0], order[1]};
}

// theta = -pi is the wrapped image of +pi, which belongs to the half plane.
inline bool in_half_plane(double theta) noexcept { return (theta >= 0.0 && theta <= pi) || theta == -pi; }

inline bool satisfies_gauge(const Embedding& emb, const Gauge& gauge) {
  return emb.theta[gauge.anchor] == 0.0 && in_half_plane(emb.theta[gauge.half_plane]);
}

inline void rotate_in_place(Embedding& emb, double angle) {
  for (double& t : emb.theta) t = wrap_angle(t + angle);
}

inline void reflect_in_place(Embedding& emb) {
  for (double& t : emb.theta) t = wrap_angle(-t);
}

// Rotates so the anchor is at 0, then reflects if the half-plane vertex
// fell outside [0, pi]. Idempotent.
inline void canonicalize_in_place(Embedding& emb, const Gauge& gauge) {
  const double shift = emb.theta[gauge.anchor];
  if (shift != 0.0) {
    for (double& t : emb.theta) t = wrap_angle(t - shift);
    emb.theta[gauge.anchor] = 0.0;
  }
  if (!in_half_plane(emb.theta[gauge.half_plane])) reflect_in_place(emb);
}

inline Embedding canonical_gauge(Embedding emb, const Gauge& gauge) {
  if (gauge.anchor >= emb.size() || gauge.half_plane >= emb.size())
    throw std::invalid_argument("gauge: vertex out of range");
  canonicalize_in_place(emb, gauge);
  return emb;
}

}  // namespace bigue
