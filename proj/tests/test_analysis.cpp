#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "bigue/analysis.hpp"
#include "bigue/synthetic.hpp"
#include "oracles.hpp"

using namespace bigue;
using Catch::Approx;

namespace {

Graph make_graph(std::size_t n, std::vector<Edge> edges) { return Graph(n, edges); }

HyperbolicCoords coords(std::vector<double> r, std::vector<double> theta) { return {std::move(r), std::move(theta)}; }

}  // namespace

TEST_CASE("graph properties match brute-force references") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const Graph g = oracle::random_graph(n, 0.1 + 0.8 * (trial % 9) / 8.0, rng);
    CHECK(density(g) == Approx(oracle::density(g)));
    CHECK(transitivity(g) == Approx(oracle::transitivity(g)));
    if (largest_component(g).size() >= 2) CHECK(avg_shortest_path(g) == Approx(oracle::avg_shortest_path(g)));
  }
}

TEST_CASE("graph property examples") {
  const Graph tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(density(tri) == 1.0);
  CHECK(transitivity(tri) == 1.0);
  CHECK(avg_shortest_path(tri) == 1.0);

  const Graph path = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  CHECK(density(path) == Approx(0.5));
  CHECK(transitivity(path) == 0.0);
  CHECK(avg_shortest_path(path) == Approx(10.0 / 6.0));

  CHECK(transitivity(make_graph(3, {{0, 1}})) == 0.0);
  CHECK_THROWS_AS(avg_shortest_path(make_graph(3, {})), std::domain_error);
  // Largest component only: the isolated vertex is ignored.
  CHECK(avg_shortest_path(make_graph(4, {{0, 1}, {1, 2}})) == Approx(4.0 / 3.0));
}

TEST_CASE("generated graphs follow the edge probabilities") {
  Rng gen = make_rng(2, Stream::instance);
  const Embedding e = sample_prior_embedding(12, 3.0, TruncatedPareto{}, gen);
  const double mu = mu_constant(e.beta, e.kappa);
  const int reps = 4000;
  std::vector<int> hits(144, 0);
  Rng rng = make_rng(3, Stream::draw);
  for (int r = 0; r < reps; ++r) {
    const Graph g = sample_graph(e, rng);
    for (const Edge& x : g.edges()) ++hits[x.u * 12 + x.v];
  }
  for (Vertex u = 0; u < 12; ++u)
    for (Vertex v = u + 1; v < 12; ++v) {
      const double p = edge_probability(e, u, v, mu);
      const double sd = std::sqrt(p * (1 - p) / reps);
      CHECK(std::fabs(hits[u * 12 + v] / double(reps) - p) <= 4.5 * sd + 1e-12);
    }
}

TEST_CASE("five-vertex edge frequencies within three standard deviations") {
  Embedding e;
  e.theta = {0.0, 0.4, 1.9, -2.5, 3.0};
  e.kappa = {1.0, 2.0, 0.7, 3.5, 1.4};
  e.beta = 2.2;
  const double mu = static_cast<double>(oracle::mu(e));
  const int reps = 10'000;
  std::vector<int> hits(25, 0);
  Rng rng = make_rng(4, Stream::draw);
  for (int r = 0; r < reps; ++r) {
    const Graph g = sample_graph(e, rng);
    for (const Edge& x : g.edges()) ++hits[x.u * 5 + x.v];
  }
  for (Vertex u = 0; u < 5; ++u)
    for (Vertex v = u + 1; v < 5; ++v) {
      const double p = static_cast<double>(oracle::probability(e, u, v));
      CHECK(edge_probability(e, u, v, mu) == Approx(p).epsilon(1e-12));
      CHECK(std::fabs(hits[u * 5 + v] / double(reps) - p) <= 3.0 * std::sqrt(p * (1 - p) / reps));
    }

  // Coincident angles connect with certainty.
  Embedding same = e;
  same.theta.assign(5, 0.7);
  CHECK(sample_graph(same, rng).edge_count() == 10);
}

TEST_CASE("mean degree tracks mean hidden degree on large graphs") {
  Rng rng = make_rng(6, Stream::instance);
  const Embedding e = sample_prior_embedding(1000, 2.5, TruncatedPareto{}, rng);
  const Graph g = sample_graph(e, rng);
  const double mean_kappa = std::accumulate(e.kappa.begin(), e.kappa.end(), 0.0) / 1000.0;
  const double mean_degree = 2.0 * static_cast<double>(g.edge_count()) / 1000.0;
  CHECK(mean_degree == Approx(mean_kappa).epsilon(0.1));
}

TEST_CASE("hyperbolic coordinates") {
  Embedding e;
  e.theta = {0.0, 1.0, 2.0, 3.0};
  e.kappa = {1.0, 2.0, 4.0, 1e6};
  e.beta = 2.0;
  const double mu = 0.1;
  const auto h = to_hyperbolic(e, mu);
  const double big_r = 2.0 * std::log(4.0 / (pi * mu));
  CHECK(outer_radius(e, mu) == Approx(big_r));
  CHECK(h.r[0] == Approx(big_r));
  CHECK(h.r[1] == Approx(big_r - 2.0 * std::log(2.0)));
  CHECK(h.r[2] == Approx(big_r - 2.0 * std::log(4.0)));
  CHECK(h.r[3] == 0.0);
  CHECK(h.theta == e.theta);

  e.kappa[0] = 0.0;
  CHECK_THROWS_AS(to_hyperbolic(e, mu), std::invalid_argument);
}

TEST_CASE("hyperbolic distance matches the textbook formula") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> r(0.0, 8.0), t(-pi, pi);
  for (int i = 0; i < 2000; ++i) {
    const auto c = coords({r(rng), r(rng)}, {t(rng), t(rng)});
    const double expected = static_cast<double>(
        oracle::hyperbolic_distance(c.r[0], c.r[1], oracle::separation(c.theta[0], c.theta[1])));
    CHECK(hyperbolic_distance(c, 0, 1) == Approx(expected).epsilon(1e-8).margin(1e-6));
  }
  const auto same = coords({1.0, 3.0}, {0.5, 0.5});
  CHECK(hyperbolic_distance(same, 0, 1) == Approx(2.0));
  CHECK(hyperbolic_distance(same, 1, 1) == 0.0);
  const auto origin = coords({0.0, 2.5}, {0.0, 2.0});
  CHECK(hyperbolic_distance(origin, 0, 1) == Approx(2.5));
}

TEST_CASE("greedy routing") {
  const Graph complete = make_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  const auto c4 = coords({1, 1, 1, 1}, {0.0, 1.5, 3.0, -1.5});
  CHECK(greedy_routing_success(complete, c4) == 1.0);

  const Graph star = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const auto cs = coords({0, 3, 3, 3, 3}, {0.0, 0.0, 1.5, 3.0, -1.5});
  CHECK(greedy_routing_success(star, cs) == 1.0);

  // 3 - 0 - 1 - 2 with 3 placed next to 2: routes between the two ends
  // turn back and fail on the revisit.
  const Graph trap = make_graph(4, {{0, 1}, {1, 2}, {0, 3}});
  const auto ct = coords({1, 1, 1, 1}, {2.0, 3.0, 0.0, 0.1});
  std::vector<std::uint8_t> visited(4);
  CHECK_FALSE(detail::greedy_route(trap, ct, 3, 2, visited));
  CHECK_FALSE(detail::greedy_route(trap, ct, 0, 2, visited));
  CHECK(detail::greedy_route(trap, ct, 1, 2, visited));
  CHECK_FALSE(detail::greedy_route(trap, ct, 1, 3, visited));
  CHECK(detail::greedy_route(trap, ct, 2, 0, visited));
  CHECK(greedy_routing_success(trap, ct) == Approx(8.0 / 12.0));

  // Isolated vertices are outside the largest component and never routed.
  const Graph with_isolated = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  const auto ci = coords({1, 1, 1, 1, 1}, {0.0, 1.5, 3.0, -1.5, 0.7});
  CHECK(greedy_routing_success(with_isolated, ci) == 1.0);

  // Sampling path: deterministic per seed.
  const auto inst = generate_instance(60, 2.5, TruncatedPareto{}, 5, true);
  const auto h = to_hyperbolic(inst.embedding);
  const double a = greedy_routing_success(inst.graph, h, 500, std::uint64_t{1});
  CHECK(a == greedy_routing_success(inst.graph, h, 500, std::uint64_t{1}));
  CHECK(a > 0.0);
  CHECK(a <= 1.0);
}

TEST_CASE("global hierarchy level") {
  const Graph star = make_graph(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK(global_hierarchy_level(star, coords({0, 2, 2, 2}, {0, 0, 0, 0})) == Approx(1.0));
  CHECK(global_hierarchy_level(star, coords({0, 2, 2, 2}, {0, -pi, -pi, -pi})) == Approx(-1.0));
  CHECK(global_hierarchy_level(star, coords({0, 2, 2, 2}, {0, pi / 2, -pi / 2, 0})) == Approx(1.0 - 2.0 / 3.0));
  CHECK_THROWS_AS(global_hierarchy_level(make_graph(3, {}), coords({0, 0, 0}, {0, 0, 0})), std::domain_error);
}

TEST_CASE("routing and hierarchy ignore rotations and reflections") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(25, 2.5, TruncatedPareto{}, 40 + seed, false);
    const HyperbolicCoords c = to_hyperbolic(inst.embedding);
    HyperbolicCoords turned = c, mirrored = c;
    for (double& t : turned.theta) t = wrap_angle(t + 1.234);
    for (double& t : mirrored.theta) t = wrap_angle(-t);
    const double s = greedy_routing_success(inst.graph, c, 10'000, seed);
    CHECK(greedy_routing_success(inst.graph, turned, 10'000, seed) == s);
    CHECK(greedy_routing_success(inst.graph, mirrored, 10'000, seed) == s);
    const double h = global_hierarchy_level(inst.graph, c);
    CHECK(global_hierarchy_level(inst.graph, turned) == Approx(h).margin(1e-12));
    CHECK(global_hierarchy_level(inst.graph, mirrored) == Approx(h).margin(1e-12));
  }
}

TEST_CASE("interval summaries") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  CHECK(quantile_sorted(v, 0.0) == 1);
  CHECK(quantile_sorted(v, 1.0) == 4);
  CHECK(quantile_sorted(v, 0.25) == Approx(1.75));

  const auto hdi = highest_density_interval({10, 0, 0.2, 5, 0.1}, 0.5);
  CHECK(hdi.first == 0.0);
  CHECK(hdi.second == 0.2);

  const auto ci = central_interval({1, 2, 3, 4, 5}, 0.5);
  CHECK(ci.first == 2.0);
  CHECK(ci.second == 4.0);

  std::mt19937_64 rng(6);
  std::exponential_distribution<double> ex(1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xs(1 + trial);
    for (double& x : xs) x = ex(rng);
    const auto s = summarize(xs);
    CHECK(s.count == xs.size());
    CHECK(s.q25 <= s.median);
    CHECK(s.median <= s.q75);
    CHECK(s.hdi50_low <= s.median);
    CHECK(s.median <= s.hdi50_high);
  }
  CHECK(summarize({}).count == 0);
}

TEST_CASE("posterior predictive summary") {
  const auto inst = generate_instance(25, 2.5, TruncatedPareto{}, 7, true);
  DrawSet ds;
  for (std::uint64_t i = 0; i < 40; ++i) ds.draws.push_back({0, i, false, inst.embedding, 0.0});
  PredictiveConfig cfg;
  cfg.seed = 3;
  const auto a = posterior_predictive_summary(ds, inst.graph, cfg);
  const auto b = posterior_predictive_summary(ds, inst.graph, cfg);
  REQUIRE(a.per_draw.size() == 40);
  CHECK(a.density.count == 40);
  CHECK(a.density.median == b.density.median);
  CHECK(a.transitivity.q75 == b.transitivity.q75);
  // Routing and hierarchy depend only on the coordinates, identical here.
  CHECK(a.hierarchy.q25 == a.hierarchy.q75);
  CHECK(a.per_draw[0].greedy_success == a.per_draw[39].greedy_success);
  // Generated graphs differ between draws.
  bool differs = false;
  for (const auto& r : a.per_draw) differs = differs || r.density != a.per_draw[0].density;
  CHECK(differs);
  CHECK_THROWS_AS(posterior_predictive_summary(DrawSet{}, inst.graph), std::invalid_argument);
}

TEST_CASE("normalized ranks match pairwise comparison") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> removed(1 + trial % 7), others(1 + trial % 23);
    for (double& x : removed) x = level(rng) / 10.0;
    for (double& x : others) x = level(rng) / 10.0;
    const auto got = normalized_ranks(removed, others);
    const auto want = oracle::normalized_ranks(removed, others);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(want[i]));
  }
  CHECK(normalized_ranks(std::vector<double>{0.5}, std::vector<double>{0.1, 0.5, 0.9}) ==
        std::vector<double>{0.5});
  CHECK_THROWS_AS(normalized_ranks(std::vector<double>{0.5}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("rank histogram") {
  const auto h = rank_histogram(std::vector<double>{0.0, 0.04, 0.5, 1.0}, 20);
  REQUIRE(h.size() == 20);
  CHECK(h[0] == 0.5);
  CHECK(h[10] == 0.25);
  CHECK(h[19] == 0.25);
  CHECK(rank_histogram(std::vector<double>{}, 5) == std::vector<double>(5, 0.0));
}

TEST_CASE("edge removal and scoring") {
  const auto inst = generate_instance(40, 3.0, TruncatedPareto{}, 9, true);
  Rng rng = make_rng(9, Stream::removal);
  std::size_t attempts = 0;
  const auto [damaged, removed] = remove_random_edges(inst.graph, 0.1, rng, true, &attempts);
  CHECK(removed.size() == static_cast<std::size_t>(std::ceil(0.1 * inst.graph.edge_count())));
  CHECK(damaged.edge_count() + removed.size() == inst.graph.edge_count());
  CHECK(is_connected(damaged));
  CHECK(attempts >= 1);
  for (const Edge& e : removed) {
    CHECK(inst.graph.adjacent(e.u, e.v));
    CHECK_FALSE(damaged.adjacent(e.u, e.v));
  }

  const std::vector<Embedding> ensemble{inst.embedding};
  const auto res = score_removed_edges(inst.graph, removed, ensemble);
  const double mu = mu_constant(inst.embedding.beta, inst.embedding.kappa);
  std::vector<double> rs, os;
  for (const Edge& e : removed) rs.push_back(edge_probability(inst.embedding, e.u, e.v, mu));
  for (Vertex u = 0; u < 40; ++u)
    for (Vertex v = u + 1; v < 40; ++v)
      if (!inst.graph.adjacent(u, v)) os.push_back(edge_probability(inst.embedding, u, v, mu));
  const auto want = oracle::normalized_ranks(rs, os);
  double auc = 0;
  for (double r : want) auc += r / want.size();
  CHECK(res.auc == Approx(auc));
  CHECK(res.auc > 0.5);

  // The ensemble mean of two identical members equals either member.
  const std::vector<Embedding> doubled{inst.embedding, inst.embedding};
  CHECK(score_removed_edges(inst.graph, removed, doubled).ranks == res.ranks);

  CHECK_THROWS_AS(remove_random_edges(inst.graph, 0.0, rng, true), std::invalid_argument);
  CHECK_THROWS_AS(remove_random_edges(make_graph(3, {}), 0.1, rng, true), std::invalid_argument);
}

TEST_CASE("link prediction experiment hands the damaged graph to the embedder") {
  const auto inst = generate_instance(30, 3.0, TruncatedPareto{}, 10, true);
  Rng rng = make_rng(10, Stream::removal);
  std::size_t seen_edges = 0;
  const auto res = link_prediction_experiment(
      inst.graph, 0.2,
      [&](const Graph& damaged) {
        seen_edges = damaged.edge_count();
        return std::vector<Embedding>{inst.embedding};
      },
      rng);
  CHECK(seen_edges + res.removed.size() == inst.graph.edge_count());
  CHECK(res.ranks.size() == res.removed.size());
  CHECK(res.removal_attempts >= 1);
}
