#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "bigue/angles.hpp"
#include "bigue/errors.hpp"
#include "bigue/sampler.hpp"

namespace bigue {

enum class TraceKind { linear, circular };

// values[c][i]: draw i of chain c.
struct ParameterTrace {
  std::vector<std::vector<double>> chains;
  TraceKind kind = TraceKind::linear;

  std::size_t n_chains() const noexcept { return chains.size(); }
  std::size_t length() const noexcept { return chains.empty() ? 0 : chains.front().size(); }
  std::size_t total() const noexcept { return n_chains() * length(); }

  void validate() const {
    if (chains.empty() || chains.front().empty()) throw std::invalid_argument("trace: empty");
    for (const auto& c : chains)
      if (c.size() != chains.front().size()) throw std::invalid_argument("trace: chains differ in length");
  }
};

inline double circular_mean(std::span<const double> angles) {
  if (angles.empty()) throw std::invalid_argument("circular mean: empty input");
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  s /= static_cast<double>(angles.size());
  c /= static_cast<double>(angles.size());
  if (std::hypot(s, c) < 1e-12) throw undefined_mean_error("circular mean: resultant length vanishes");
  return std::atan2(s, c);
}

// Circular traces become signed deviations from the pooled circular mean.
inline ParameterTrace center_trace(const ParameterTrace& t) {
  if (t.kind == TraceKind::linear) return t;
  std::vector<double> pooled;
  for (const auto& c : t.chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double m = circular_mean(pooled);
  ParameterTrace out{t.chains, TraceKind::linear};
  for (auto& c : out.chains)
    for (double& x : c) x = signed_deviation(x, m);
  return out;
}

namespace detail {

inline double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Biased (1/N) autocovariance at one lag.
inline double autocov_at(std::span<const double> x, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace detail

// Per-chain autocovariance normalized by lag 0, averaged over chains.
inline std::vector<double> normalized_autocovariance(const ParameterTrace& trace, std::size_t max_lag) {
  const auto t = center_trace(trace);
  t.validate();
  if (t.length() <= max_lag) throw std::invalid_argument("autocovariance: chain shorter than max lag");
  std::vector<double> out(max_lag + 1, 0.0);
  for (const auto& c : t.chains) {
    const double m = detail::mean_of(c);
    const double v0 = detail::autocov_at(c, m, 0);
    if (!(v0 > 0.0)) throw degenerate_trace_error("autocovariance: zero-variance chain");
    out[0] += 1.0;
    for (std::size_t l = 1; l <= max_lag; ++l) out[l] += detail::autocov_at(c, m, l) / v0;
  }
  for (double& x : out) x /= static_cast<double>(t.n_chains());
  out[0] = 1.0;
  return out;
}

// Multi-chain effective sample size: autocorrelations combined across
// chains through the between/within variance estimate, summed in pairs and
// truncated by Geyer's initial monotone sequence.
inline double effective_sample_size(const ParameterTrace& trace) {
  const auto t = center_trace(trace);
  t.validate();
  const std::size_t m = t.n_chains(), n = t.length();
  if (m < 2 && n < 100) throw std::invalid_argument("ess: need two chains or at least 100 draws");
  if (n < 4) throw std::invalid_argument("ess: chains too short");

  std::vector<double> means(m), var(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = detail::mean_of(t.chains[c]);
    var[c] = detail::autocov_at(t.chains[c], means[c], 0) * static_cast<double>(n) / static_cast<double>(n - 1);
  }
  const double w = detail::mean_of(var);
  double b_over_n = 0.0;
  if (m > 1) {
    const double mm = detail::mean_of(means);
    for (double x : means) b_over_n += (x - mm) * (x - mm);
    b_over_n /= static_cast<double>(m - 1);
  }
  const double var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n) + b_over_n;
  if (!(var_plus > 0.0) || !(w > 0.0)) throw degenerate_trace_error("ess: zero variance");

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov += detail::autocov_at(t.chains[c], means[c], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };

  std::vector<double> r(n, 0.0);
  r[0] = 1.0;
  double even = 1.0, odd = rho(1);
  r[1] = odd;
  std::size_t lag = 1;
  while (lag + 4 < n && even + odd > 0.0) {
    even = rho(lag + 1);
    odd = rho(lag + 2);
    if (even + odd >= 0.0) {
      r[lag + 1] = even;
      r[lag + 2] = odd;
    }
    lag += 2;
  }
  const std::size_t max_lag = lag;
  if (even > 0.0 && max_lag + 1 < n) r[max_lag + 1] = even;
  // Enforce a monotone sequence of pair sums.
  for (std::size_t l = 1; l + 2 <= max_lag; l += 2) {
    if (r[l + 1] + r[l + 2] > r[l - 1] + r[l]) {
      r[l + 1] = (r[l - 1] + r[l]) / 2.0;
      r[l + 2] = r[l + 1];
    }
  }
  double sum = 0.0;
  for (std::size_t l = 0; l <= max_lag; ++l) sum += r[l];
  const double extra = max_lag + 1 < n ? r[max_lag + 1] : 0.0;
  const double total = static_cast<double>(m * n);
  double tau = -1.0 + 2.0 * sum + extra;
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

namespace detail {

// Halves every chain (the middle draw of odd-length chains is dropped).
inline std::vector<std::vector<double>> split_chains(const ParameterTrace& t) {
  std::vector<std::vector<double>> out;
  const std::size_t n = t.length(), half = n / 2;
  for (const auto& c : t.chains) {
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(n - half), c.end());
  }
  return out;
}

inline double rhat_of(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size(), n = chains.front().size();
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    double s = 0.0;
    for (double x : chains[c]) s += (x - means[c]) * (x - means[c]);
    vars[c] = s / static_cast<double>(n - 1);
  }
  const double w = mean_of(vars);
  if (!(w > 0.0)) throw degenerate_trace_error("rhat: zero within-chain variance");
  const double mm = mean_of(means);
  double b = 0.0;
  for (double x : means) b += (x - mm) * (x - mm);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  const double var_hat = w * static_cast<double>(n - 1) / static_cast<double>(n) + b / static_cast<double>(n);
  // The pooled estimate can dip below w when chains agree better than
  // sampling noise suggests; report that as no evidence against mixing.
  return std::max(1.0, std::sqrt(var_hat / w));
}

// Average ranks of the pooled draws mapped through the normal quantile
// (Blom offsets).
inline std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (double x : chains[c]) pooled.emplace_back(x, pooled.size());
  const std::size_t s = pooled.size();
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> rank(s);
  for (std::size_t i = 0; i < s;) {
    std::size_t j = i;
    while (j + 1 < s && pooled[j + 1].first == pooled[i].first) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = avg;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> normal;
  auto out = chains;
  std::size_t idx = 0;
  for (auto& c : out)
    for (double& x : c) x = boost::math::quantile(normal, (rank[idx++] - 0.375) / (static_cast<double>(s) + 0.25));
  return out;
}

}  // namespace detail

// Classic split potential scale reduction on the raw values.
inline double split_rhat_plain(const ParameterTrace& trace) {
  const auto t = center_trace(trace);
  t.validate();
  if (t.n_chains() < 2 || t.length() < 4) throw std::invalid_argument("rhat: need two chains of at least 4 draws");
  return detail::rhat_of(detail::split_chains(t));
}

// Rank-normalized split potential scale reduction.
inline double split_rhat(const ParameterTrace& trace) {
  const auto t = center_trace(trace);
  t.validate();
  if (t.n_chains() < 2 || t.length() < 4) throw std::invalid_argument("rhat: need two chains of at least 4 draws");
  const auto split = detail::split_chains(t);
  const double first = split.front().front();
  if (std::all_of(split.begin(), split.end(),
                  [&](const auto& c) { return std::all_of(c.begin(), c.end(), [&](double x) { return x == first; }); }))
    throw degenerate_trace_error("rhat: constant trace");
  return detail::rhat_of(detail::rank_normalize(split));
}

// ---------------------------------------------------------------------------
// Multivariate normality

struct HenzeZirklerResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double smoothing = 0.0;
};

// points: one row per observation. Uses the maximum-likelihood covariance;
// p-value from the log-normal approximation of the null distribution.
inline HenzeZirklerResult henze_zirkler_test(const Eigen::MatrixXd& points) {
  const auto n = static_cast<double>(points.rows());
  const auto d = static_cast<double>(points.cols());
  if (points.rows() < points.cols() + 2) throw std::invalid_argument("henze-zirkler: too few points");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / n;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const double scale = cov.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
      ldlt.vectorD().minCoeff() <= 1e-12 * scale)
    throw std::domain_error("henze-zirkler: singular covariance");
  // Mahalanobis inner products y_i . S^-1 y_j
  const Eigen::MatrixXd solved = ldlt.solve(centered.transpose());
  const Eigen::MatrixXd gram = centered * solved;

  const double b = (1.0 / std::sqrt(2.0)) * std::pow((2.0 * d + 1.0) / 4.0, 1.0 / (d + 4.0)) *
                   std::pow(n, 1.0 / (d + 4.0));
  const double b2 = b * b;
  double pair_sum = 0.0, single_sum = 0.0;
  const auto rows = points.rows();
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double di = gram(i, i);
    single_sum += std::exp(-b2 * di / (2.0 * (1.0 + b2)));
    for (Eigen::Index j = 0; j < rows; ++j) {
      const double dij = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      pair_sum += std::exp(-b2 * dij / 2.0);
    }
  }
  const double hz = pair_sum / n - 2.0 * std::pow(1.0 + b2, -d / 2.0) * single_sum +
                    n * std::pow(1.0 + 2.0 * b2, -d / 2.0);

  const double a = 1.0 + 2.0 * b2;
  const double w = (1.0 + b2) * (1.0 + 3.0 * b2);
  const double b4 = b2 * b2, b8 = b4 * b4;
  const double mu = 1.0 - std::pow(a, -d / 2.0) * (1.0 + d * b2 / a + d * (d + 2.0) * b4 / (2.0 * a * a));
  const double si2 = 2.0 * std::pow(1.0 + 4.0 * b2, -d / 2.0) +
                     2.0 * std::pow(a, -d) * (1.0 + 2.0 * d * b4 / (a * a) + 3.0 * d * (d + 2.0) * b8 / (4.0 * std::pow(a, 4))) -
                     4.0 * std::pow(w, -d / 2.0) * (1.0 + 3.0 * d * b4 / (2.0 * w) + d * (d + 2.0) * b8 / (2.0 * w * w));
  const double pmu = std::log(std::sqrt(mu * mu * mu * mu / (si2 + mu * mu)));
  const double psi = std::sqrt(std::log((si2 + mu * mu) / (mu * mu)));
  const boost::math::normal_distribution<double> normal;
  const double z = (std::log(hz) - pmu) / psi;
  return {hz, boost::math::cdf(boost::math::complement(normal, z)), b};
}

// ---------------------------------------------------------------------------
// Circular density modes

// Wrapped-normal kernel density of the angles on a regular grid.
inline std::vector<double> circular_kde(std::span<const double> angles, double bandwidth, std::size_t grid = 360) {
  if (angles.empty()) throw std::invalid_argument("kde: empty input");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
  std::vector<double> dens(grid, 0.0);
  const double step = two_pi / static_cast<double>(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    const double x = -pi + step * static_cast<double>(k);
    double s = 0.0;
    for (double a : angles) {
      const double dev = signed_deviation(x, a);
      for (int wrap = -2; wrap <= 2; ++wrap) {
        const double z = (dev + two_pi * wrap) / bandwidth;
        s += std::exp(-0.5 * z * z);
      }
    }
    dens[k] = s / (static_cast<double>(angles.size()) * bandwidth * std::sqrt(two_pi));
  }
  return dens;
}

// Number of cyclic local maxima of the density estimate at least
// `min_relative_height` times the global maximum.
inline std::size_t count_circular_modes(std::span<const double> angles, double bandwidth = 0.2,
                                        double min_relative_height = 0.1, std::size_t grid = 360) {
  const auto dens = circular_kde(angles, bandwidth, grid);
  const double top = *std::max_element(dens.begin(), dens.end());
  std::size_t modes = 0;
  for (std::size_t k = 0; k < grid; ++k) {
    const double prev = dens[(k + grid - 1) % grid], next = dens[(k + 1) % grid];
    if (dens[k] > prev && dens[k] >= next && dens[k] >= min_relative_height * top) ++modes;
  }
  return modes;
}

// ---------------------------------------------------------------------------
// Reports over draw sets

struct NamedTrace {
  std::string name;
  ParameterTrace trace;
};

// One trace per parameter from the post-warm-up draws. Chains are cut to
// the shortest chain so all have equal length.
inline std::vector<NamedTrace> traces_from_draws(const DrawSet& draws) {
  std::map<std::size_t, std::vector<const Draw*>> by_chain;
  for (const Draw& d : draws.draws)
    if (!d.warmup) by_chain[d.chain].push_back(&d);
  if (by_chain.empty()) throw data_error("diagnostics: no post-warm-up draws");
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (auto& [c, v] : by_chain) len = std::min(len, v.size());
  const std::size_t n = by_chain.begin()->second.front()->embedding.size();
  std::vector<std::string> labels = draws.labels;
  if (labels.size() != n) {
    labels.clear();
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  }

  std::vector<NamedTrace> out;
  auto add = [&](std::string name, TraceKind kind, auto get) {
    NamedTrace t{std::move(name), {{}, kind}};
    for (auto& [c, v] : by_chain) {
      std::vector<double> xs(len);
      for (std::size_t i = 0; i < len; ++i) xs[i] = get(v[i]->embedding);
      t.trace.chains.push_back(std::move(xs));
    }
    out.push_back(std::move(t));
  };
  for (std::size_t w = 0; w < n; ++w)
    add("theta[" + labels[w] + "]", TraceKind::circular, [w](const Embedding& e) { return e.theta[w]; });
  for (std::size_t w = 0; w < n; ++w)
    add("kappa[" + labels[w] + "]", TraceKind::linear, [w](const Embedding& e) { return e.kappa[w]; });
  add("beta", TraceKind::linear, [](const Embedding& e) { return e.beta; });
  return out;
}

struct ParameterDiagnostics {
  std::string name;
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double rhat_plain = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> autocovariance;
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  // Parameters that never vary (gauge anchor, frozen coordinates).
  std::vector<std::string> constant;
  std::vector<double> mean_autocovariance;
  double rhat_max = std::numeric_limits<double>::quiet_NaN();
  double ess_median = std::numeric_limits<double>::quiet_NaN();
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline DiagnosticsReport diagnose(const DrawSet& draws, std::size_t max_lag = 50) {
  DiagnosticsReport rep;
  const auto traces = traces_from_draws(draws);
  rep.chains = traces.front().trace.n_chains();
  rep.draws_per_chain = traces.front().trace.length();
  max_lag = std::min(max_lag, rep.draws_per_chain > 0 ? rep.draws_per_chain - 1 : 0);
  std::vector<double> rhats, esss;
  std::size_t curves = 0;
  for (const auto& [name, trace] : traces) {
    const double first = trace.chains.front().front();
    const bool constant = std::all_of(trace.chains.begin(), trace.chains.end(), [&](const auto& c) {
      return std::all_of(c.begin(), c.end(), [&](double x) { return x == first; });
    });
    if (constant) {
      rep.constant.push_back(name);
      continue;
    }
    ParameterDiagnostics p;
    p.name = name;
    try {
      if (rep.chains >= 2 && rep.draws_per_chain >= 4) {
        p.rhat = split_rhat(trace);
        p.rhat_plain = split_rhat_plain(trace);
        rhats.push_back(p.rhat);
      }
    } catch (const std::domain_error&) {
    }
    try {
      p.ess = effective_sample_size(trace);
      esss.push_back(p.ess);
    } catch (const std::exception&) {
    }
    try {
      p.autocovariance = normalized_autocovariance(trace, max_lag);
      if (rep.mean_autocovariance.empty()) rep.mean_autocovariance.assign(max_lag + 1, 0.0);
      for (std::size_t l = 0; l <= max_lag; ++l) rep.mean_autocovariance[l] += p.autocovariance[l];
      ++curves;
    } catch (const std::domain_error&) {
    }
    rep.parameters.push_back(std::move(p));
  }
  for (double& x : rep.mean_autocovariance) x /= static_cast<double>(curves);
  if (!rhats.empty()) rep.rhat_max = *std::max_element(rhats.begin(), rhats.end());
  if (!esss.empty()) rep.ess_median = median(esss);
  return rep;
}

}  // namespace bigue
