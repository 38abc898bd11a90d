#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bigue/alignment.hpp"
#include "bigue/analysis.hpp"
#include "bigue/automorphism.hpp"
#include "bigue/diagnostics.hpp"
#include "bigue/errors.hpp"
#include "bigue/io.hpp"
#include "bigue/sampler.hpp"
#include "bigue/synthetic.hpp"

namespace bigue {

inline constexpr const char* tool_version = "0.1.0";

// Bad flag values that parse fine but make no sense together.
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration echo

inline json sampler_config_to_json(const SamplerConfig& c) {
  return {{"n_chains", c.n_chains},
          {"n_iterations", c.n_iterations},
          {"warmup_fraction", c.warmup_fraction},
          {"thinning_k", c.thinning_k},
          {"record_stride", c.record_stride},
          {"keep_warmup", c.keep_warmup},
          {"mixture", c.mixture.weights},
          {"rw_step_theta", c.rw_step_theta},
          {"rw_step_log_kappa", c.rw_step_log_kappa},
          {"rw_step_beta", c.rw_step_beta},
          {"threshold_max_gap_multiplier", c.threshold_max_gap_multiplier},
          {"seed", c.seed},
          {"revalidate_every", c.revalidate_every},
          {"freeze_kappa", c.freeze_kappa},
          {"freeze_beta", c.freeze_beta},
          {"frozen_theta", c.frozen_theta}};
}

inline SamplerConfig sampler_config_from_json(const json& j) {
  SamplerConfig c;
  c.n_chains = j.at("n_chains").get<std::size_t>();
  c.n_iterations = j.at("n_iterations").get<std::uint64_t>();
  c.warmup_fraction = j.at("warmup_fraction").get<double>();
  c.thinning_k = j.at("thinning_k").get<std::uint64_t>();
  c.record_stride = j.at("record_stride").get<std::uint64_t>();
  c.keep_warmup = j.at("keep_warmup").get<bool>();
  c.mixture.weights = j.at("mixture").get<std::array<double, move_kind_count>>();
  c.rw_step_theta = j.at("rw_step_theta").get<double>();
  c.rw_step_log_kappa = j.at("rw_step_log_kappa").get<double>();
  c.rw_step_beta = j.at("rw_step_beta").get<double>();
  c.threshold_max_gap_multiplier = j.at("threshold_max_gap_multiplier").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.revalidate_every = j.at("revalidate_every").get<std::uint64_t>();
  c.freeze_kappa = j.at("freeze_kappa").get<bool>();
  c.freeze_beta = j.at("freeze_beta").get<bool>();
  c.frozen_theta = j.at("frozen_theta").get<std::vector<Vertex>>();
  return c;
}

inline json prior_to_json(const PriorConfig& p) {
  return {{"beta0", p.beta0}, {"sigma", p.sigma}, {"gamma", p.gamma}, {"epsilon", p.epsilon}};
}

inline PriorConfig prior_from_json(const json& j) {
  return {j.at("beta0").get<double>(), j.at("sigma").get<double>(), j.at("gamma").get<double>(),
          j.at("epsilon").get<double>()};
}

inline MoveMixture parse_mixture(const std::string& text) {
  if (text == "bigue") return MoveMixture::bigue();
  if (text == "rw") return MoveMixture::random_walk();
  MoveMixture m;
  std::stringstream in(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= move_kind_count) throw usage_error("--mixture: expected six weights");
    try {
      m.weights[i++] = std::stod(item);
    } catch (const std::exception&) {
      throw usage_error("--mixture: bad weight '" + item + "'");
    }
  }
  if (i != move_kind_count) throw usage_error("--mixture: expected 'bigue', 'rw' or six comma-separated weights");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(std::string("--mixture: ") + e.what());
  }
  return m;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".jsonl") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw data_error("no draw files given");
  return out;
}

inline DrawSet read_draw_files(const std::vector<std::string>& args) {
  std::vector<DrawSet> parts;
  for (const auto& p : expand_inputs(args)) parts.push_back(read_draws(p));
  auto merged = merge_draw_sets(std::move(parts));
  if (merged.empty()) throw data_error("draw files contain no draws");
  return merged;
}

inline MuPolicy parse_mu(const std::string& s, const Graph& g) {
  if (s == "kappa-mean") return MuPolicy::from_kappa();
  if (s == "mean-degree") return MuPolicy::from_mean_degree(g);
  throw usage_error("--mu must be 'kappa-mean' or 'mean-degree'");
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenerateArgs {
  std::size_t n = 30;
  double beta = 2.5;
  double kappa_low = 4.0, kappa_high = 10.0, exponent = 2.5;
  std::uint64_t seed = 0;
  bool connected = false;
  bool bimodal = false;
  double shift = 2.0;
  std::string out = "instance";
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const TruncatedPareto law{a.exponent, a.kappa_low, a.kappa_high};
  try {
    law.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  const auto inst = a.bimodal ? make_bimodal_instance(a.n, a.beta, law, a.shift, a.seed)
                              : generate_instance(a.n, a.beta, law, a.seed, a.connected);
  const fs::path edges = a.out + ".edges", truth = a.out + ".truth.json";
  write_edge_list(inst.graph, edges);
  json t = embedding_to_json(inst.embedding, inst.graph.labels());
  t["generator"] = {{"n", a.n},           {"beta", a.beta},
                    {"kappa_law", {{"exponent", law.exponent}, {"low", law.low}, {"high", law.high}}},
                    {"seed", a.seed},     {"require_connected", a.connected},
                    {"bimodal", a.bimodal}, {"rejections", inst.rejections}};
  if (inst.alternate) {
    t["generator"]["shift"] = a.shift;
    t["shifted_vertex"] = inst.graph.labels()[*inst.shifted_vertex];
    t["alternate"] = embedding_to_json(*inst.alternate, inst.graph.labels());
  }
  write_json(t, truth);
  std::size_t isolated = 0;
  for (auto d : inst.graph.degrees()) isolated += d == 0;
  out << "vertices " << inst.graph.size() << "\nedges " << inst.graph.edge_count() << "\n";
  if (isolated > 0) out << "warning: " << isolated << " isolated vertices are not representable in the edge list\n";
  out << "wrote " << edges.string() << " " << truth.string() << "\n";
  return 0;
}

struct SampleArgs {
  std::string graph;
  std::string manifest;
  std::string out = "draws";
  std::size_t chains = 4;
  std::uint64_t iterations = 0;
  std::uint64_t thin = 1;
  double warmup = 0.5;
  bool drop_warmup = false;
  std::uint64_t seed = 0;
  std::string mixture = "bigue";
  double step_theta = 0.1, step_kappa = 0.1, step_beta = 0.1;
  double threshold_multiplier = 2.0;
  std::string init = "prior";
  std::string truth;
  bool largest_component = false;
  std::string mu = "kappa-mean";
};

inline int cmd_sample(SampleArgs a, std::ostream& out) {
  SamplerConfig config;
  PriorConfig prior;
  if (!a.manifest.empty()) {
    const json m = read_json(a.manifest);
    try {
      if (m.at("command") != "sample") throw data_error("manifest is not from a sample run");
      config = sampler_config_from_json(m.at("config"));
      prior = prior_from_json(m.at("prior"));
      const auto& in = m.at("inputs");
      if (a.graph.empty()) a.graph = in.at("graph").at("path").get<std::string>();
      if (file_digest(a.graph) != in.at("graph").at("digest").get<std::string>())
        throw data_error("graph file differs from the one recorded in the manifest");
      a.largest_component = m.at("largest_component").get<bool>();
      a.mu = m.at("mu").get<std::string>();
      a.init = m.at("init").get<std::string>();
      if (in.contains("truth")) {
        if (a.truth.empty()) a.truth = in.at("truth").at("path").get<std::string>();
        if (file_digest(a.truth) != in.at("truth").at("digest").get<std::string>())
          throw data_error("truth file differs from the one recorded in the manifest");
      }
    } catch (const json::exception& e) {
      throw data_error(std::string("manifest: ") + e.what());
    }
  } else {
    if (a.graph.empty()) throw usage_error("sample: a graph file or --manifest is required");
    if (a.iterations == 0) throw usage_error("sample: --iterations is required");
    config.n_chains = a.chains;
    config.n_iterations = a.iterations;
    config.record_stride = a.thin;
    config.thinning_k = a.thin;
    config.warmup_fraction = a.warmup;
    config.keep_warmup = !a.drop_warmup;
    config.seed = a.seed;
    config.mixture = parse_mixture(a.mixture);
    config.rw_step_theta = a.step_theta;
    config.rw_step_log_kappa = a.step_kappa;
    config.rw_step_beta = a.step_beta;
    config.threshold_max_gap_multiplier = a.threshold_multiplier;
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  if (a.init != "prior" && a.init != "truth") throw usage_error("--init must be 'prior' or 'truth'");
  if (a.init == "truth" && a.truth.empty()) throw usage_error("--init truth needs --truth FILE");

  const Graph g = read_edge_list(a.graph, {a.largest_component});
  std::optional<Embedding> init;
  if (a.init == "truth") {
    std::vector<std::string> labels;
    const Embedding e = embedding_from_json(read_json(a.truth), &labels);
    init = match_labels(e, labels, g);
  }
  Posterior post(g, prior, parse_mu(a.mu, g));

  const auto started = std::chrono::steady_clock::now();
  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<DrawSet> parts(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < config.n_chains; ++c)
    workers.emplace_back([&, c] {
      try {
        parts[c] = run_chain(post, config, c, init);
        write_draws(parts[c], dir / ("chain_" + std::to_string(c) + ".jsonl"));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json manifest = {{"tool", "bigue"},
                   {"version", tool_version},
                   {"command", "sample"},
                   {"created", utc_timestamp()},
                   {"wall_clock_seconds", seconds},
                   {"inputs", {{"graph", {{"path", a.graph}, {"digest", file_digest(a.graph)}}}}},
                   {"config", sampler_config_to_json(config)},
                   {"prior", prior_to_json(prior)},
                   {"mu", a.mu},
                   {"init", a.init},
                   {"largest_component", a.largest_component},
                   {"vertices", g.size()},
                   {"edges", g.edge_count()}};
  if (!a.truth.empty()) manifest["inputs"]["truth"] = {{"path", a.truth}, {"digest", file_digest(a.truth)}};
  json outputs = json::array(), acceptance = json::object();
  for (std::size_t c = 0; c < config.n_chains; ++c) {
    const fs::path f = dir / ("chain_" + std::to_string(c) + ".jsonl");
    outputs.push_back({{"path", f.string()}, {"digest", file_digest(f)}});
    json rates = json::object();
    for (std::size_t k = 0; k < move_kind_count; ++k)
      rates[std::string(move_names[k])] = parts[c].chains.front().counters.acceptance_rate(static_cast<MoveKind>(k));
    acceptance[std::to_string(c)] = rates;
  }
  manifest["outputs"] = outputs;
  manifest["acceptance"] = acceptance;
  write_json(manifest, dir / "manifest.json");
  out << "wrote " << config.n_chains << " chain files and " << (dir / "manifest.json").string() << "\n";
  return 0;
}

inline int cmd_thin(const std::vector<std::string>& inputs, std::uint64_t k, const std::string& path,
                    std::ostream& out) {
  if (k < 1) throw usage_error("--k must be at least 1");
  const auto thinned = thin_chain(read_draw_files(inputs), k);
  write_draws(thinned, path);
  out << "kept " << thinned.size() << " draws\n";
  return 0;
}

struct AlignArgs {
  std::string graph;
  std::vector<std::string> inputs;
  std::string reference;       // "chain:iteration"
  std::string reference_file;  // embedding file
  std::string out = "aligned.jsonl";
  std::size_t limit = 10'000;
  bool largest_component = false;
};

inline int cmd_align(const AlignArgs& a, std::ostream& out) {
  const Graph g = read_edge_list(a.graph, {a.largest_component});
  DrawSet draws = read_draw_files(a.inputs);
  for (const auto& d : draws.draws)
    if (d.embedding.size() != g.size()) throw data_error("draws and graph differ in vertex count");
  Embedding ref;
  if (!a.reference_file.empty()) {
    std::vector<std::string> labels;
    const Embedding e = embedding_from_json(read_json(a.reference_file), &labels);
    ref = match_labels(e, labels, g);
  } else if (!a.reference.empty()) {
    const auto colon = a.reference.find(':');
    if (colon == std::string::npos) throw usage_error("--reference must be CHAIN:ITERATION");
    std::size_t chain = 0;
    std::uint64_t iter = 0;
    try {
      chain = std::stoul(a.reference.substr(0, colon));
      iter = std::stoull(a.reference.substr(colon + 1));
    } catch (const std::exception&) {
      throw usage_error("--reference must be CHAIN:ITERATION");
    }
    auto it = std::find_if(draws.draws.begin(), draws.draws.end(),
                           [&](const Draw& d) { return d.chain == chain && d.iteration == iter; });
    if (it == draws.draws.end()) throw data_error("reference draw not found");
    ref = it->embedding;
  } else {
    // last post-warm-up draw of the lowest chain
    const Draw* last = nullptr;
    for (const auto& d : draws.draws)
      if (!d.warmup && (!last || d.chain < last->chain || (d.chain == last->chain && d.iteration > last->iteration)))
        last = &d;
    if (!last) throw data_error("no post-warm-up draw to use as reference");
    ref = last->embedding;
  }
  const auto autos = enumerate_automorphisms(g, a.limit);
  for (auto& d : draws.draws) d.embedding = align_embedding(d.embedding, ref, autos.elements).embedding;
  write_draws(draws, a.out);
  out << "automorphisms " << autos.elements.size() << (autos.truncated ? " (truncated)" : "") << "\n";
  out << "aligned " << draws.size() << " draws\n";
  return 0;
}

struct DiagnoseArgs {
  std::vector<std::string> inputs;
  std::string out = ".";
  std::size_t max_lag = 50;
  std::size_t hz_pairs = 20;
};

inline int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const DrawSet draws = read_draw_files(a.inputs);
  const auto rep = diagnose(draws, a.max_lag);
  const fs::path dir(a.out);

  CsvTable params{{"parameter", "rhat", "rhat_plain", "ess"}, {}};
  for (const auto& p : rep.parameters)
    params.rows.push_back({p.name, csv_number(p.rhat), csv_number(p.rhat_plain), csv_number(p.ess)});
  params.write(dir / "diagnostics.csv");

  CsvTable acov{{"lag", "mean_autocovariance"}, {}};
  for (std::size_t l = 0; l < rep.mean_autocovariance.size(); ++l)
    acov.rows.push_back({std::to_string(l), csv_number(rep.mean_autocovariance[l])});
  acov.write(dir / "autocovariance.csv");

  // Henze-Zirkler on pairs of centred angles, in vertex order.
  CsvTable hz{{"parameter_a", "parameter_b", "statistic", "p_value"}, {}};
  const auto traces = traces_from_draws(draws);
  std::vector<std::pair<std::string, std::vector<double>>> angles;
  for (const auto& t : traces) {
    if (t.trace.kind != TraceKind::circular) continue;
    if (std::find(rep.constant.begin(), rep.constant.end(), t.name) != rep.constant.end()) continue;
    std::vector<double> flat;
    try {
      for (const auto& c : center_trace(t.trace).chains) flat.insert(flat.end(), c.begin(), c.end());
    } catch (const std::domain_error&) {
      continue;
    }
    angles.emplace_back(t.name, std::move(flat));
  }
  std::size_t done = 0;
  for (std::size_t i = 0; i < angles.size() && done < a.hz_pairs; ++i)
    for (std::size_t j = i + 1; j < angles.size() && done < a.hz_pairs; ++j) {
      Eigen::MatrixXd pts(static_cast<Eigen::Index>(angles[i].second.size()), 2);
      for (std::size_t k = 0; k < angles[i].second.size(); ++k) {
        pts(static_cast<Eigen::Index>(k), 0) = angles[i].second[k];
        pts(static_cast<Eigen::Index>(k), 1) = angles[j].second[k];
      }
      try {
        const auto r = henze_zirkler_test(pts);
        hz.rows.push_back({angles[i].first, angles[j].first, csv_number(r.statistic), csv_number(r.p_value)});
        ++done;
      } catch (const std::exception&) {
      }
    }
  hz.write(dir / "henze_zirkler.csv");

  CsvTable summary{{"quantity", "value"}, {}};
  summary.rows.push_back({"rhat_max", csv_number(rep.rhat_max)});
  summary.rows.push_back({"ess_median", csv_number(rep.ess_median)});
  summary.rows.push_back({"chains", std::to_string(rep.chains)});
  summary.rows.push_back({"draws_per_chain", std::to_string(rep.draws_per_chain)});
  summary.write(dir / "summary.csv");

  out << "rhat_max " << std::setprecision(4) << std::fixed << rep.rhat_max << "\n";
  out << "ess_median " << std::setprecision(1) << rep.ess_median << "\n";
  out << "chains " << rep.chains << "\ndraws_per_chain " << rep.draws_per_chain << "\n";
  return 0;
}

struct AnalyzeArgs {
  std::string graph;
  std::vector<std::string> inputs;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t pair_budget = 10'000;
  std::string mu = "kappa-mean";
  bool largest_component = false;
};

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const Graph g = read_edge_list(a.graph, {a.largest_component});
  DrawSet draws = read_draw_files(a.inputs);
  std::erase_if(draws.draws, [](const Draw& d) { return d.warmup; });
  if (draws.empty()) throw data_error("no post-warm-up draws");
  const auto summary = posterior_predictive_summary(draws, g, {a.seed, a.pair_budget, parse_mu(a.mu, g)});
  const fs::path dir(a.out);

  auto opt = [](const std::optional<double>& x) { return x ? csv_number(*x) : std::string("nan"); };
  CsvTable rows{{"chain", "iteration", "density", "transitivity", "avg_shortest_path", "greedy_success", "hierarchy"},
                {}};
  for (const auto& r : summary.per_draw)
    rows.rows.push_back({std::to_string(r.chain), std::to_string(r.iteration), opt(r.density), opt(r.transitivity),
                         opt(r.avg_shortest_path), opt(r.greedy_success), opt(r.hierarchy)});
  rows.write(dir / "predictive_draws.csv");

  auto observed = [&](auto f) -> std::string {
    try {
      return csv_number(f());
    } catch (const std::domain_error&) {
      return "nan";
    }
  };
  CsvTable table{{"metric", "observed", "median", "q25", "q75", "hdi50_low", "hdi50_high", "count"}, {}};
  auto add = [&](const std::string& name, const std::string& obs, const IntervalSummary& s) {
    table.rows.push_back({name, obs, csv_number(s.median), csv_number(s.q25), csv_number(s.q75),
                          csv_number(s.hdi50_low), csv_number(s.hdi50_high), std::to_string(s.count)});
  };
  add("density", observed([&] { return density(g); }), summary.density);
  add("transitivity", observed([&] { return transitivity(g); }), summary.transitivity);
  add("avg_shortest_path", observed([&] { return avg_shortest_path(g); }), summary.avg_shortest_path);
  add("greedy_success", "nan", summary.greedy_success);
  add("hierarchy", "nan", summary.hierarchy);
  table.write(dir / "predictive_summary.csv");
  table.write(out);
  return 0;
}

struct PredictArgs {
  std::string graph;
  std::string truth;
  std::string out = ".";
  double fraction = 0.05;
  std::uint64_t seed = 0;
  std::size_t chains = 2;
  std::uint64_t iterations = 200'000;
  std::uint64_t thin = 1'000;
  double step_theta = 0.1, step_kappa = 0.1, step_beta = 0.1;
  bool allow_disconnecting = false;
  bool largest_component = false;
  std::size_t bins = 20;
};

inline int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const Graph g = read_edge_list(a.graph, {a.largest_component});
  SamplerConfig config;
  config.n_chains = a.chains;
  config.n_iterations = a.iterations;
  config.record_stride = a.thin;
  config.seed = a.seed;
  config.rw_step_theta = a.step_theta;
  config.rw_step_log_kappa = a.step_kappa;
  config.rw_step_beta = a.step_beta;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  if (!(a.fraction > 0.0 && a.fraction < 1.0)) throw usage_error("--fraction must lie in (0, 1)");
  if (a.bins < 1) throw usage_error("--bins must be at least 1");

  Rng rng = make_rng(a.seed, Stream::removal);
  auto [damaged, removed] = remove_random_edges(g, a.fraction, rng, !a.allow_disconnecting);
  const Posterior post(damaged);
  const DrawSet draws = run_chains(post, config);
  std::vector<Embedding> ensemble;
  for (const auto& d : draws.draws) ensemble.push_back(d.embedding);
  std::vector<std::pair<std::string, LinkPredictionResult>> results;
  results.emplace_back("posterior", score_removed_edges(g, removed, ensemble));
  if (!a.truth.empty()) {
    std::vector<std::string> labels;
    const Embedding e = match_labels(embedding_from_json(read_json(a.truth), &labels), labels, g);
    results.emplace_back("truth", score_removed_edges(g, removed, std::vector<Embedding>{e}));
  }

  const fs::path dir(a.out);
  CsvTable ranks{{"method", "u", "v", "normalized_rank"}, {}};
  CsvTable hist{{"bin_low", "bin_high"}, {}};
  CsvTable auc{{"method", "auc", "removed_edges"}, {}};
  for (std::size_t b = 0; b < a.bins; ++b)
    hist.rows.push_back({csv_number(static_cast<double>(b) / static_cast<double>(a.bins)),
                         csv_number(static_cast<double>(b + 1) / static_cast<double>(a.bins))});
  for (const auto& [name, r] : results) {
    for (std::size_t i = 0; i < r.removed.size(); ++i)
      ranks.rows.push_back({name, g.labels()[r.removed[i].u], g.labels()[r.removed[i].v], csv_number(r.ranks[i])});
    hist.header.push_back(name);
    const auto h = rank_histogram(r.ranks, a.bins);
    for (std::size_t b = 0; b < a.bins; ++b) hist.rows[b].push_back(csv_number(h[b]));
    auc.rows.push_back({name, csv_number(r.auc), std::to_string(r.removed.size())});
  }
  ranks.write(dir / "ranks.csv");
  hist.write(dir / "rank_histogram.csv");
  auc.write(dir / "auc.csv");
  auc.write(out);
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian inference of S1 graph embeddings with cluster-transformation MCMC", "bigue"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic instance (edge list + ground truth)");
  generate->add_option("--n", gen.n, "Number of vertices")->check(CLI::Range(3ul, 1'000'000ul));
  generate->add_option("--beta", gen.beta, "Inverse temperature");
  generate->add_option("--kappa-low", gen.kappa_low, "Lower bound of the kappa law");
  generate->add_option("--kappa-high", gen.kappa_high, "Upper bound of the kappa law");
  generate->add_option("--exponent", gen.exponent, "Pareto exponent of the kappa density");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_flag("--connected", gen.connected, "Redraw until the graph is connected");
  generate->add_flag("--bimodal", gen.bimodal, "Shift one vertex's angle for a random half of its pairs");
  generate->add_option("--shift", gen.shift, "Angular shift of the bimodal construction");
  generate->add_option("--out", gen.out, "Output prefix");

  SampleArgs smp;
  auto* sample = app.add_subcommand("sample", "Run MCMC chains on a graph");
  sample->add_option("graph", smp.graph, "Edge-list file");
  sample->add_option("--manifest", smp.manifest, "Rerun the configuration recorded in a manifest");
  sample->add_option("--out", smp.out, "Output directory");
  sample->add_option("--chains", smp.chains, "Number of chains");
  sample->add_option("--iterations", smp.iterations, "Iterations per chain");
  sample->add_option("--thin", smp.thin, "Record every k-th state");
  sample->add_option("--warmup", smp.warmup, "Warm-up fraction");
  sample->add_flag("--drop-warmup", smp.drop_warmup, "Do not record warm-up states");
  sample->add_option("--seed", smp.seed, "Random seed");
  sample->add_option("--mixture", smp.mixture, "'bigue', 'rw', or six comma-separated move weights");
  sample->add_option("--step-theta", smp.step_theta, "Angular random-walk scale");
  sample->add_option("--step-kappa", smp.step_kappa, "Log-kappa random-walk scale");
  sample->add_option("--step-beta", smp.step_beta, "Beta random-walk scale");
  sample->add_option("--threshold-multiplier", smp.threshold_multiplier, "Cluster threshold scale");
  sample->add_option("--init", smp.init, "'prior' or 'truth'");
  sample->add_option("--truth", smp.truth, "Ground-truth embedding file");
  sample->add_flag("--largest-component", smp.largest_component, "Keep only the largest connected component");
  sample->add_option("--mu", smp.mu, "'kappa-mean' or 'mean-degree'");

  std::vector<std::string> thin_inputs;
  std::uint64_t thin_k = 0;
  std::string thin_out = "thinned.jsonl";
  auto* thin = app.add_subcommand("thin", "Keep every k-th post-warm-up draw of each chain");
  thin->add_option("draws", thin_inputs, "Draw files or directories")->required();
  thin->add_option("--k", thin_k, "Thinning interval")->required();
  thin->add_option("--out", thin_out, "Output file");

  AlignArgs aln;
  auto* align = app.add_subcommand("align", "Align draws to a reference embedding");
  align->add_option("--graph", aln.graph, "Edge-list file")->required();
  align->add_option("draws", aln.inputs, "Draw files or directories")->required();
  auto* ref_draw = align->add_option("--reference", aln.reference, "Reference draw as CHAIN:ITERATION");
  align->add_option("--reference-file", aln.reference_file, "Reference embedding file")->excludes(ref_draw);
  align->add_option("--out", aln.out, "Output file");
  align->add_option("--automorphism-limit", aln.limit, "Maximum automorphisms to enumerate");
  align->add_flag("--largest-component", aln.largest_component, "Keep only the largest connected component");

  DiagnoseArgs dia;
  auto* diag = app.add_subcommand("diagnose", "Convergence diagnostics tables");
  diag->add_option("draws", dia.inputs, "Draw files or directories")->required();
  diag->add_option("--out", dia.out, "Output directory");
  diag->add_option("--max-lag", dia.max_lag, "Largest autocovariance lag");
  diag->add_option("--hz-pairs", dia.hz_pairs, "Number of angle pairs tested for normality");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Posterior-predictive summary tables");
  analyze->add_option("--graph", ana.graph, "Edge-list file")->required();
  analyze->add_option("draws", ana.inputs, "Draw files or directories")->required();
  analyze->add_option("--out", ana.out, "Output directory");
  analyze->add_option("--seed", ana.seed, "Random seed");
  analyze->add_option("--pair-budget", ana.pair_budget, "Routed pairs per draw");
  analyze->add_option("--mu", ana.mu, "'kappa-mean' or 'mean-degree'");
  analyze->add_flag("--largest-component", ana.largest_component, "Keep only the largest connected component");

  PredictArgs prd;
  auto* predict = app.add_subcommand("predict", "Link-prediction experiment");
  predict->add_option("--graph", prd.graph, "Edge-list file")->required();
  predict->add_option("--truth", prd.truth, "Also score this embedding");
  predict->add_option("--out", prd.out, "Output directory");
  predict->add_option("--fraction", prd.fraction, "Fraction of edges removed");
  predict->add_option("--seed", prd.seed, "Random seed");
  predict->add_option("--chains", prd.chains, "Number of chains");
  predict->add_option("--iterations", prd.iterations, "Iterations per chain");
  predict->add_option("--thin", prd.thin, "Record every k-th state");
  predict->add_option("--step-theta", prd.step_theta, "Angular random-walk scale");
  predict->add_option("--step-kappa", prd.step_kappa, "Log-kappa random-walk scale");
  predict->add_option("--step-beta", prd.step_beta, "Beta random-walk scale");
  predict->add_option("--bins", prd.bins, "Rank histogram bins");
  predict->add_flag("--allow-disconnecting", prd.allow_disconnecting, "Accept removals that disconnect the graph");
  predict->add_flag("--largest-component", prd.largest_component, "Keep only the largest connected component");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << tool_version << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*sample) return cmd_sample(smp, out);
    if (*thin) return cmd_thin(thin_inputs, thin_k, thin_out, out);
    if (*align) return cmd_align(aln, out);
    if (*diag) return cmd_diagnose(dia, out);
    if (*analyze) return cmd_analyze(ana, out);
    if (*predict) return cmd_predict(prd, out);
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    // data, format and generation failures
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace bigue
