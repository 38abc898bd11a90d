#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "bigue/angles.hpp"
#include "bigue/automorphism.hpp"
#include "bigue/embedding.hpp"

namespace bigue {

struct AlignmentResult {
  Embedding embedding;
  double objective = 0.0;
  // Index into the supplied set; equal to its size when the implicit
  // identity won.
  std::size_t automorphism = 0;
  bool reflected = false;
  double rotation = 0.0;
};

// Sum over vertices of the squared angular separation to the reference.
inline double alignment_objective(std::span<const double> theta, std::span<const double> reference,
                                  double rotation = 0.0) {
  double s = 0.0;
  for (std::size_t w = 0; w < theta.size(); ++w) {
    const double d = angular_separation(theta[w] + rotation, reference[w]);
    s += d * d;
  }
  return s;
}

namespace detail {

template <class F>
double golden_section_minimize(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

struct RotationFit {
  double rotation;
  double objective;
};

inline RotationFit best_rotation(std::span<const double> theta, std::span<const double> reference,
                                 std::size_t grid = 360, double tol = 1e-9) {
  const double step = two_pi / static_cast<double>(grid);
  RotationFit best{0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < grid; ++k) {
    const double phi = step * static_cast<double>(k);
    const double f = alignment_objective(theta, reference, phi);
    if (f < best.objective) best = {phi, f};
  }
  auto f = [&](double phi) { return alignment_objective(theta, reference, phi); };
  const double refined = golden_section_minimize(f, best.rotation - step, best.rotation + step, tol);
  const double fr = f(refined);
  if (fr < best.objective) best = {wrap_positive(refined), fr};
  return best;
}

}  // namespace detail

// Transforms `emb` (automorphism, then optional reflection, then rotation)
// to minimize the summed squared angular separation to `reference`. The
// identity is always tried, so the objective never exceeds that of the
// untransformed embedding.
inline AlignmentResult align_embedding(const Embedding& emb, const Embedding& reference,
                                       std::span<const Automorphism> autos) {
  if (emb.size() != reference.size() || emb.kappa.size() != reference.kappa.size())
    throw std::invalid_argument("align: embedding sizes differ");
  const Automorphism identity = identity_automorphism(emb.size());
  std::vector<const Automorphism*> candidates;
  bool has_identity = false;
  for (const auto& a : autos) {
    if (a.permutation.size() != emb.size()) throw std::invalid_argument("align: automorphism size mismatch");
    has_identity = has_identity || a.is_identity();
    candidates.push_back(&a);
  }
  if (!has_identity) candidates.push_back(&identity);

  AlignmentResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<double> theta(emb.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& perm = candidates[i]->permutation;
    for (int reflect = 0; reflect < 2; ++reflect) {
      for (std::size_t w = 0; w < emb.size(); ++w) {
        const double t = emb.theta[perm[w]];
        theta[w] = reflect ? -t : t;
      }
      const auto fit = detail::best_rotation(theta, reference.theta);
      if (fit.objective < best.objective) {
        best.objective = fit.objective;
        best.automorphism = i;
        best.reflected = reflect != 0;
        best.rotation = fit.rotation;
      }
    }
  }

  const auto& perm = candidates[best.automorphism]->permutation;
  best.embedding = emb;
  for (std::size_t w = 0; w < emb.size(); ++w) {
    const double t = emb.theta[perm[w]];
    best.embedding.theta[w] = wrap_angle((best.reflected ? -t : t) + best.rotation);
    best.embedding.kappa[w] = emb.kappa[perm[w]];
  }
  return best;
}

}  // namespace bigue
