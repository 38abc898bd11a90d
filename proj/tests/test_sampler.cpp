#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bigue/sampler.hpp"
#include "bigue/synthetic.hpp"
#include "oracles.hpp"

using namespace bigue;
using Catch::Approx;

namespace {

Embedding angles(std::vector<double> theta) {
  Embedding e;
  e.kappa.assign(theta.size(), 1.0);
  e.theta = std::move(theta);
  e.beta = 2.5;
  return e;
}

std::vector<Vertex> all_vertices(std::size_t n) {
  std::vector<Vertex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

GroundTruthInstance small_instance(std::uint64_t seed, std::size_t n = 20) {
  return generate_instance(n, 2.5, TruncatedPareto{}, seed, true);
}

}  // namespace

TEST_CASE("partition cuts at gaps wider than the threshold") {
  const Embedding e = angles({0.0, 0.1, 3.0, 3.1});
  const auto c = partition_at_threshold(e, 1.0, all_vertices(4));
  REQUIRE(c.clusters.size() == 2);
  CHECK(c.clusters[0].members == std::vector<Vertex>{2, 3});
  CHECK(c.clusters[0].start == 3.0);
  CHECK(c.clusters[0].extent == Approx(0.1));
  CHECK(c.clusters[1].members == std::vector<Vertex>{0, 1});

  // No gap exceeds the threshold: one cluster starting after the widest gap.
  const auto one = partition_at_threshold(e, 10.0, all_vertices(4));
  REQUIRE(one.clusters.size() == 1);
  CHECK(one.clusters[0].members == std::vector<Vertex>{0, 1, 2, 3});

  // A tiny threshold isolates every vertex.
  CHECK(partition_at_threshold(e, 1e-6, all_vertices(4)).clusters.size() == 4);
  CHECK(partition_at_threshold(e, 1.0, std::vector<Vertex>{}).clusters.empty());
}

TEST_CASE("partition covers every listed vertex exactly once") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> thr(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + trial % 15;
    const Embedding e = oracle::random_embedding(n, rng);
    const auto c = partition_at_threshold(e, thr(rng), all_vertices(n));
    std::vector<int> count(n, 0);
    for (const auto& cl : c.clusters) {
      CHECK(cl.extent >= 0.0);
      CHECK(cl.extent < two_pi);
      for (Vertex w : cl.members) ++count[w];
    }
    for (int k : count) CHECK(k == 1);
  }
}

TEST_CASE("clusters are tight inside and separated by wide gaps") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> thr(0.01, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + trial % 25;
    const Embedding e = oracle::random_embedding(n, rng);
    const double t = thr(rng);
    const auto c = partition_at_threshold(e, t, all_vertices(n));
    for (const auto& cl : c.clusters)
      for (std::size_t i = 0; i + 1 < cl.members.size(); ++i)
        CHECK(wrap_positive(e.theta[cl.members[i + 1]] - e.theta[cl.members[i]]) <= t);
    if (c.clusters.size() < 2) continue;
    for (std::size_t i = 0; i < c.clusters.size(); ++i) {
      const auto& a = c.clusters[i];
      const auto& b = c.clusters[(i + 1) % c.clusters.size()];
      CHECK(wrap_positive(e.theta[b.members.front()] - e.theta[a.members.back()]) > t);
    }
  }
}

TEST_CASE("flip reverses a cluster within its arc") {
  Embedding e = angles({0.2, 0.4, 0.9, -2.0});
  const auto c = partition_at_threshold(e, 1.0, all_vertices(4));
  const Cluster* target = nullptr;
  for (const auto& cl : c.clusters)
    if (cl.members.front() == 0) target = &cl;
  REQUIRE(target != nullptr);
  flip_cluster(e, *target);
  CHECK(e.theta[0] == Approx(0.9));
  CHECK(e.theta[1] == Approx(0.7));
  CHECK(e.theta[2] == Approx(0.2));
  CHECK(e.theta[3] == -2.0);
}

TEST_CASE("exchange and translate move clusters rigidly") {
  const Embedding e = angles({0.0, 0.1, 2.0, 2.2});
  const auto c = partition_at_threshold(e, 1.0, all_vertices(4));
  REQUIRE(c.clusters.size() == 2);
  const Cluster& a = c.clusters[0];  // {2, 3} starting at 2.0
  const Cluster& b = c.clusters[1];  // {0, 1} starting at 0.0
  REQUIRE(a.members == std::vector<Vertex>{2, 3});

  Embedding x = e;
  exchange_clusters(x, a, b);
  CHECK(x.theta[2] == Approx(0.0).margin(1e-15));
  CHECK(x.theta[3] == Approx(0.2));
  CHECK(x.theta[0] == Approx(2.0));
  CHECK(x.theta[1] == Approx(2.1));

  Embedding t = e;
  translate_cluster(t, a, b);
  CHECK(t.theta[2] == Approx(0.0).margin(1e-15));
  CHECK(t.theta[3] == Approx(0.2));
  CHECK(t.theta[0] == 0.0);
  CHECK(t.theta[1] == 0.1);
}

TEST_CASE("cluster transformations are isometries on the cluster and flip is an involution") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> thr(0.05, 1.5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 4 + trial % 12;
    const Embedding e = oracle::random_embedding(n, rng);
    const auto c = partition_at_threshold(e, thr(rng), all_vertices(n));
    for (const auto& cl : c.clusters) {
      Embedding f = e;
      flip_cluster(f, cl);
      Embedding r = e;
      move_cluster_start(r, cl, cl.start + 1.3);
      for (Vertex u : cl.members)
        for (Vertex v : cl.members) {
          const double d = angular_separation(e.theta[u], e.theta[v]);
          CHECK(angular_separation(f.theta[u], f.theta[v]) == Approx(d).margin(1e-12));
          CHECK(angular_separation(r.theta[u], r.theta[v]) == Approx(d).margin(1e-12));
        }
      Embedding back = f;
      flip_cluster(back, cl);
      for (std::size_t w = 0; w < n; ++w) CHECK(angular_separation(back.theta[w], e.theta[w]) < 1e-12);
    }
  }
}

TEST_CASE("moves with fewer than two clusters are skipped") {
  const Embedding e = angles({0.0, 0.1, 0.2});
  const auto c = partition_at_threshold(e, 10.0, all_vertices(3));
  Rng rng = make_rng(1, Stream::chain);
  CHECK_FALSE(exchange_move(e, c, rng, Gauge{0, 1}).has_value());
  CHECK_FALSE(translate_move(e, c, rng, Gauge{0, 1}).has_value());
  CHECK(satisfies_gauge(flip_move(e, c, rng, Gauge{0, 1}), Gauge{0, 1}));
}

TEST_CASE("kappa proposal carries the log-normal Hastings factor") {
  const auto inst = small_instance(3, 10);
  const Gauge gauge = make_gauge(inst.graph);
  const Embedding e = canonical_gauge(inst.embedding, gauge);
  SamplerConfig cfg;
  Rng rng = make_rng(2, Stream::chain);
  for (int i = 0; i < 200; ++i) {
    const auto p = rw_proposal(e, RwTarget::kappa, cfg, gauge, rng);
    REQUIRE(p.has_value());
    const Vertex w = *p->vertex;
    CHECK(p->log_hastings == Approx(std::log(p->embedding.kappa[w] / e.kappa[w])).margin(1e-12));
    CHECK(satisfies_gauge(p->embedding, gauge));
  }
  cfg.freeze_kappa = true;
  CHECK_FALSE(rw_proposal(e, RwTarget::kappa, cfg, gauge, rng).has_value());
}

TEST_CASE("theta proposals never move the anchor or frozen angles") {
  const auto inst = small_instance(5, 8);
  const Gauge gauge = make_gauge(inst.graph);
  SamplerConfig cfg;
  cfg.frozen_theta = {gauge.half_plane};
  const auto free = free_theta_vertices(8, gauge, cfg);
  CHECK(free.size() == 6);
  CHECK(std::find(free.begin(), free.end(), gauge.anchor) == free.end());
  CHECK(std::find(free.begin(), free.end(), gauge.half_plane) == free.end());
  CHECK(movable_vertices(8, cfg).size() == 7);
}

TEST_CASE("metropolis acceptance frequency matches the ratio") {
  Rng rng = make_rng(7, Stream::chain);
  int hits = 0;
  const int trials = 200'000;
  for (int i = 0; i < trials; ++i) hits += metropolis_accept(-std::log(2.0), rng);
  CHECK(static_cast<double>(hits) / trials == Approx(0.5).margin(0.005));
  CHECK(metropolis_accept(0.0, rng));
  CHECK(metropolis_accept(3.0, rng));
  CHECK_FALSE(metropolis_accept(neg_inf, rng));
  CHECK_FALSE(metropolis_accept(std::nan(""), rng));
}

TEST_CASE("move mixture sampling follows the weights") {
  const MoveMixture m;
  Rng rng = make_rng(8, Stream::chain);
  std::array<int, move_kind_count> count{};
  const int trials = 200'000;
  for (int i = 0; i < trials; ++i) ++count[static_cast<std::size_t>(m.sample(rng))];
  for (std::size_t k = 0; k < move_kind_count; ++k)
    CHECK(static_cast<double>(count[k]) / trials == Approx(m.weights[k]).margin(0.005));

  const auto rw = MoveMixture::random_walk();
  for (int i = 0; i < 1000; ++i) CHECK_FALSE(is_cluster_move(rw.sample(rng)));
  CHECK_THROWS_AS((MoveMixture{{0.5, 0.5, 0.5, 0, 0, 0}}.validate()), std::invalid_argument);
}

TEST_CASE("initial state uses degrees for kappa and satisfies the gauge") {
  const auto inst = small_instance(11);
  const Posterior post(inst.graph);
  const ChainState s = init_state(post, 1, 0);
  for (Vertex w = 0; w < inst.graph.size(); ++w)
    CHECK(s.embedding.kappa[w] == std::max<double>(inst.graph.degree(w), 2e-10));
  CHECK(satisfies_gauge(s.embedding, post.gauge));
  CHECK(is_valid_embedding(s.embedding, post.prior));
  CHECK(s.log_post == Approx(post(s.embedding)));

  const ChainState t = init_state(post, 1, 0, inst.embedding);
  CHECK(t.embedding == canonical_gauge(inst.embedding, post.gauge));
}

TEST_CASE("every state satisfies the gauge and the cached posterior stays exact") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto inst = small_instance(seed, 15);
    for (bool fixed_mu : {false, true}) {
      const Posterior post(inst.graph, PriorConfig{},
                           fixed_mu ? MuPolicy::from_mean_degree(inst.graph) : MuPolicy::from_kappa());
      SamplerConfig cfg;
      cfg.revalidate_every = 1'000'000'000;
      cfg.rw_step_theta = 0.4;
      cfg.rw_step_log_kappa = 0.4;
      cfg.rw_step_beta = 0.4;
      Kernel kernel(post, cfg);
      ChainState s = init_state(post, seed, 0);
      for (int i = 0; i < 20'000; ++i) {
        kernel.step(s);
        if (i % 97 == 0) {
          REQUIRE(satisfies_gauge(s.embedding, post.gauge));
          REQUIRE(is_valid_embedding(s.embedding, post.prior));
          REQUIRE(s.log_post == Approx(post(s.embedding)).margin(1e-8));
        }
      }
      CHECK(s.log_post == Approx(post(s.embedding)).margin(1e-8));
      CHECK(s.log_lik == Approx(log_likelihood(inst.graph, s.embedding, post.mu)).margin(1e-8));
      std::uint64_t accepted = 0;
      for (auto a : s.counters.accepted) accepted += a;
      CHECK(accepted > 0);
    }
  }
}

TEST_CASE("chains are deterministic in seed and chain id") {
  const auto inst = small_instance(4, 12);
  const Posterior post(inst.graph);
  SamplerConfig cfg;
  cfg.n_chains = 3;
  cfg.n_iterations = 3000;
  cfg.seed = 99;
  cfg.keep_warmup = true;
  const DrawSet a = run_chains(post, cfg, std::nullopt, true);
  const DrawSet b = run_chains(post, cfg, std::nullopt, false);
  CHECK(a == b);
  CHECK(a.size() == 3 * 3001);
  cfg.seed = 100;
  CHECK_FALSE(run_chains(post, cfg) == a);
}

TEST_CASE("zero iterations record only the initial state") {
  const auto inst = small_instance(6, 10);
  const Posterior post(inst.graph);
  SamplerConfig cfg;
  cfg.n_chains = 2;
  const DrawSet d = run_chains(post, cfg);
  REQUIRE(d.size() == 2);
  CHECK(d.draws[0].iteration == 0);
  CHECK_FALSE(d.draws[0].warmup);
  CHECK(d.draws[1].chain == 1);
}

TEST_CASE("thinning keeps every k-th post-warmup draw") {
  DrawSet d;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::uint64_t i = 0; i < 10; ++i) d.draws.push_back({c, i, i < 4, angles({0, 1, 2}), 0.0});
  const DrawSet t = thin_chain(d, 3);
  std::vector<std::uint64_t> its;
  for (const auto& x : t.draws)
    if (x.chain == 0) its.push_back(x.iteration);
  CHECK(its == std::vector<std::uint64_t>{4, 7});
  CHECK(t.size() == 4);
  CHECK(thin_chain(d, 1).size() == 12);
  CHECK_THROWS_AS(thin_chain(d, 0), std::invalid_argument);
}

TEST_CASE("in-run record stride equals thinning a full run") {
  const auto inst = small_instance(8, 12);
  const Posterior post(inst.graph);
  SamplerConfig cfg;
  cfg.n_chains = 2;
  cfg.n_iterations = 2001;
  cfg.seed = 5;
  const DrawSet full = run_chains(post, cfg);
  cfg.record_stride = 7;
  const DrawSet strided = run_chains(post, cfg);
  CHECK(strided.draws == thin_chain(full, 7).draws);
}

TEST_CASE("frozen parameters stay fixed") {
  const auto inst = small_instance(10, 10);
  const Posterior post(inst.graph);
  SamplerConfig cfg;
  cfg.freeze_beta = true;
  cfg.freeze_kappa = true;
  cfg.frozen_theta = {3};
  Kernel kernel(post, cfg);
  ChainState s = init_state(post, 1, 0, inst.embedding);
  const Embedding start = s.embedding;
  for (int i = 0; i < 5000; ++i) kernel.step(s);
  CHECK(s.embedding.beta == start.beta);
  CHECK(s.embedding.kappa == start.kappa);
  CHECK(s.counters.accepted[1] == 0);
  CHECK(s.counters.accepted[2] == 0);
}
