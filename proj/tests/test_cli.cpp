#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bigue/cli.hpp"

using namespace bigue;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "bigue");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bigue_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("help, version and usage errors") {
  CHECK(run({"--help"}).code == 0);
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out == std::string(tool_version) + "\n");
  CHECK(run({"sample", "--help"}).code == 0);

  CHECK(run({"--no-such-flag"}).code == 1);
  CHECK(run({"thin"}).code == 1);
  const auto missing_iters = run({"sample", "graph.edges"});
  CHECK(missing_iters.code == 1);
  CHECK(missing_iters.err.find("--iterations") != std::string::npos);
  CHECK(run({"generate", "--n", "2"}).code == 1);
}

TEST_CASE("data errors exit with code 2") {
  const auto dir = scratch("errors");
  { std::ofstream(dir / "bad.edges") << "a b c\n"; }
  const auto r = run({"sample", (dir / "bad.edges").string(), "--iterations", "10", "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.edges:1") != std::string::npos);
  CHECK(run({"diagnose", (dir / "nothing-here.jsonl").string()}).code == 2);
}

TEST_CASE("mixture parsing") {
  CHECK(parse_mixture("bigue") == MoveMixture::bigue());
  CHECK(parse_mixture("rw") == MoveMixture::random_walk());
  CHECK(parse_mixture("0.5,0.5,0,0,0,0").weights[0] == 0.5);
  CHECK_THROWS(parse_mixture("0.5,0.5"));
  CHECK_THROWS(parse_mixture("nonsense"));
}

TEST_CASE("sampler configuration survives a JSON round trip") {
  SamplerConfig c;
  c.n_chains = 3;
  c.n_iterations = 1234;
  c.warmup_fraction = 0.25;
  c.record_stride = 7;
  c.mixture = MoveMixture::random_walk();
  c.rw_step_theta = 0.4;
  c.seed = 42;
  c.frozen_theta = {1, 2};
  c.freeze_beta = true;
  const SamplerConfig back = sampler_config_from_json(sampler_config_to_json(c));
  CHECK(back.n_chains == 3);
  CHECK(back.n_iterations == 1234);
  CHECK(back.warmup_fraction == 0.25);
  CHECK(back.record_stride == 7);
  CHECK(back.mixture == c.mixture);
  CHECK(back.rw_step_theta == 0.4);
  CHECK(back.seed == 42);
  CHECK(back.frozen_theta == c.frozen_theta);
  CHECK(back.freeze_beta);
  PriorConfig p;
  p.sigma = 1.5;
  CHECK(prior_from_json(prior_to_json(p)) == p);
}

TEST_CASE("generate, sample, diagnose, thin, align, analyze and predict") {
  const auto dir = scratch("flow");
  const std::string prefix = (dir / "inst").string();
  const auto gen = run({"generate", "--n", "20", "--seed", "3", "--connected", "--out", prefix});
  REQUIRE(gen.code == 0);
  REQUIRE(fs::exists(prefix + ".edges"));
  REQUIRE(fs::exists(prefix + ".truth.json"));
  const auto truth = read_json(prefix + ".truth.json");
  CHECK(truth.at("generator").at("seed") == 3);

  const std::string draws = (dir / "draws").string();
  const auto smp = run({"sample", prefix + ".edges", "--iterations", "4000", "--chains", "2", "--thin", "20", "--seed",
                        "5", "--init", "truth", "--truth", prefix + ".truth.json", "--out", draws});
  REQUIRE(smp.code == 0);
  REQUIRE(fs::exists(fs::path(draws) / "chain_0.jsonl"));
  REQUIRE(fs::exists(fs::path(draws) / "chain_1.jsonl"));
  const auto manifest = read_json(fs::path(draws) / "manifest.json");
  CHECK(manifest.at("outputs").size() == 2);
  CHECK(manifest.at("config").at("record_stride") == 20);
  const DrawSet ds = read_draws(fs::path(draws) / "chain_0.jsonl");
  CHECK(ds.size() == 201);
  CHECK(ds.chains.size() == 1);

  const std::string diag = (dir / "diag").string();
  fs::create_directories(diag);
  const auto dg = run({"diagnose", draws, "--out", diag});
  REQUIRE(dg.code == 0);
  CHECK(dg.out.find("rhat_max") != std::string::npos);
  for (const char* f : {"diagnostics.csv", "autocovariance.csv", "henze_zirkler.csv", "summary.csv"})
    CHECK(fs::exists(fs::path(diag) / f));

  const std::string thinned = (dir / "thinned.jsonl").string();
  REQUIRE(run({"thin", draws, "--k", "10", "--out", thinned}).code == 0);
  CHECK(read_draws(thinned).size() == 2 * 11);

  const std::string aligned = (dir / "aligned.jsonl").string();
  REQUIRE(run({"align", "--graph", prefix + ".edges", draws, "--out", aligned}).code == 0);
  CHECK(read_draws(aligned).size() == 2 * 201);

  const std::string ana = (dir / "ana").string();
  fs::create_directories(ana);
  REQUIRE(run({"analyze", "--graph", prefix + ".edges", thinned, "--out", ana, "--pair-budget", "50"}).code == 0);
  CHECK(fs::exists(fs::path(ana) / "predictive_summary.csv"));
  CHECK(fs::exists(fs::path(ana) / "predictive_draws.csv"));

  const std::string prd = (dir / "prd").string();
  fs::create_directories(prd);
  REQUIRE(run({"predict", "--graph", prefix + ".edges", "--truth", prefix + ".truth.json", "--out", prd,
               "--iterations", "2000", "--chains", "2", "--thin", "100"})
              .code == 0);
  for (const char* f : {"ranks.csv", "rank_histogram.csv", "auc.csv"}) CHECK(fs::exists(fs::path(prd) / f));
}

TEST_CASE("a manifest rerun reproduces the draws byte for byte") {
  const auto dir = scratch("rerun");
  const std::string prefix = (dir / "g").string();
  REQUIRE(run({"generate", "--n", "15", "--seed", "8", "--connected", "--out", prefix}).code == 0);
  const auto first = dir / "first";
  REQUIRE(run({"sample", prefix + ".edges", "--iterations", "3000", "--chains", "3", "--seed", "11", "--thin", "7",
               "--mixture", "rw", "--out", first.string()})
              .code == 0);
  const auto second = dir / "second";
  REQUIRE(run({"sample", "--manifest", (first / "manifest.json").string(), "--out", second.string()}).code == 0);
  for (int c = 0; c < 3; ++c) {
    const std::string f = "chain_" + std::to_string(c) + ".jsonl";
    CHECK(slurp(first / f) == slurp(second / f));
  }

  // A modified input is refused.
  { std::ofstream(prefix + ".edges", std::ios::app) << "extra1 extra2\n"; }
  CHECK(run({"sample", "--manifest", (first / "manifest.json").string(), "--out", (dir / "third").string()}).code == 2);
}

TEST_CASE("bimodal generation records the alternate embedding") {
  const auto dir = scratch("bimodal");
  const std::string prefix = (dir / "b").string();
  REQUIRE(run({"generate", "--n", "12", "--seed", "2", "--bimodal", "--shift", "3.0", "--out", prefix}).code == 0);
  const auto t = read_json(prefix + ".truth.json");
  CHECK(t.contains("alternate"));
  CHECK(t.contains("shifted_vertex"));
}
