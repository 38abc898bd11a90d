#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bigue/embedding.hpp"
#include "bigue/errors.hpp"
#include "bigue/graph.hpp"
#include "bigue/sampler.hpp"

namespace bigue {

using json = nlohmann::json;

inline constexpr int draws_format_version = 1;
inline constexpr int embedding_format_version = 1;

// ---------------------------------------------------------------------------
// Edge lists

struct EdgeListOptions {
  bool largest_component_only = false;
  std::ostream* warnings = &std::cerr;
};

// Two whitespace-separated labels per line; blank lines and '#' comments
// are skipped. Vertices are indexed by first appearance.
inline Graph parse_edge_list(std::istream& in, const EdgeListOptions& opt = {}, const std::string& source = "input") {
  std::map<std::string, Vertex> index;
  std::vector<std::string> labels;
  std::set<std::pair<Vertex, Vertex>> seen;
  std::vector<Edge> edges;
  auto vertex_of = [&](const std::string& label) {
    auto [it, inserted] = index.emplace(label, labels.size());
    if (inserted) labels.push_back(label);
    return it->second;
  };
  std::string line;
  std::size_t line_no = 0;
  std::size_t self_loops = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra))
      throw data_error(source + ":" + std::to_string(line_no) + ": expected two vertex labels");
    const Vertex u = vertex_of(a), v = vertex_of(b);
    if (u == v) {
      ++self_loops;
      continue;
    }
    if (seen.emplace(std::min(u, v), std::max(u, v)).second) edges.push_back({u, v});
  }
  if (in.bad()) throw data_error(source + ": read failure");
  if (self_loops > 0 && opt.warnings)
    *opt.warnings << "warning: " << source << ": dropped " << self_loops << " self-loop(s)\n";
  if (labels.empty() || edges.empty()) throw data_error(source + ": graph has no edges");
  Graph g(labels.size(), edges, labels);
  if (opt.largest_component_only && !is_connected(g)) {
    const auto keep = largest_component(g);
    g = induced_subgraph(g, keep);
  }
  return g;
}

inline Graph read_edge_list(const std::filesystem::path& path, const EdgeListOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  return parse_edge_list(in, opt, path.string());
}

// Isolated vertices cannot be represented and are lost.
inline void write_edge_list(const Graph& g, std::ostream& out) {
  for (const Edge& e : g.edges()) out << g.labels()[e.u] << ' ' << g.labels()[e.v] << '\n';
}

// ---------------------------------------------------------------------------
// Atomic writes

// Writes to a sibling temporary file and renames it over `path`.
template <class Writer>
void write_atomically(const std::filesystem::path& path, Writer&& write) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + tmp.string());
    write(out);
    out.flush();
    if (!out) throw data_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ostream& out) { write_edge_list(g, out); });
}

// ---------------------------------------------------------------------------
// Draw files: a header line, one JSON record per draw, then one record of
// move counters per chain.

namespace detail {

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double number_or_neg_inf(const json& j) { return j.is_null() ? neg_inf : j.get<double>(); }

inline json counters_json(const MoveCounters& c) {
  json proposed = json::object(), accepted = json::object();
  for (std::size_t i = 0; i < move_kind_count; ++i) {
    proposed[std::string(move_names[i])] = c.proposed[i];
    accepted[std::string(move_names[i])] = c.accepted[i];
  }
  return {{"proposed", proposed}, {"accepted", accepted}};
}

inline MoveCounters counters_from_json(const json& j) {
  MoveCounters c;
  for (std::size_t i = 0; i < move_kind_count; ++i) {
    const std::string name(move_names[i]);
    c.proposed[i] = j.at("proposed").at(name).get<std::uint64_t>();
    c.accepted[i] = j.at("accepted").at(name).get<std::uint64_t>();
  }
  return c;
}

}  // namespace detail

inline json draw_to_json(const Draw& d) {
  return {{"chain", d.chain},         {"iteration", d.iteration}, {"warmup", d.warmup},
          {"beta", d.embedding.beta}, {"theta", d.embedding.theta}, {"kappa", d.embedding.kappa},
          {"log_posterior", detail::finite_or_null(d.log_posterior)}};
}

inline void write_draws(const DrawSet& draws, std::ostream& out) {
  json header = {{"format", "bigue-draws"}, {"version", draws_format_version}, {"labels", draws.labels}};
  out << header.dump() << '\n';
  for (const Draw& d : draws.draws) out << draw_to_json(d).dump() << '\n';
  for (const ChainStats& c : draws.chains)
    out << json{{"chain_stats", c.chain}, {"counters", detail::counters_json(c.counters)}}.dump() << '\n';
}

inline void write_draws(const DrawSet& draws, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ostream& out) { write_draws(draws, out); });
}

struct ReadDrawsOptions {
  // Stop quietly at an incomplete last line instead of failing.
  bool allow_truncated = false;
};

inline DrawSet parse_draws(std::istream& in, const std::string& source = "input", const ReadDrawsOptions& opt = {}) {
  const std::string where = source + ": ";
  std::string line;
  if (!std::getline(in, line)) throw data_error(where + "missing header");
  DrawSet out;
  try {
    const json header = json::parse(line);
    if (header.value("format", "") != "bigue-draws") throw data_error(where + "not a draws file");
    if (header.value("version", -1) != draws_format_version)
      throw data_error(where + "unsupported draws format version");
    out.labels = header.at("labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw data_error(where + "bad header: " + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const bool complete = !in.eof();
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      if (!complete && opt.allow_truncated) break;
      throw data_error(where + "line " + std::to_string(line_no) + ": truncated or malformed record");
    }
    try {
      if (rec.contains("chain_stats")) {
        out.chains.push_back({rec.at("chain_stats").get<std::size_t>(), detail::counters_from_json(rec.at("counters"))});
        continue;
      }
      Draw d;
      d.chain = rec.at("chain").get<std::size_t>();
      d.iteration = rec.at("iteration").get<std::uint64_t>();
      d.warmup = rec.at("warmup").get<bool>();
      d.embedding.beta = rec.at("beta").get<double>();
      d.embedding.theta = rec.at("theta").get<std::vector<double>>();
      d.embedding.kappa = rec.at("kappa").get<std::vector<double>>();
      d.log_posterior = detail::number_or_neg_inf(rec.at("log_posterior"));
      if (d.embedding.theta.size() != d.embedding.kappa.size() ||
          (!out.labels.empty() && d.embedding.theta.size() != out.labels.size()))
        throw data_error(where + "line " + std::to_string(line_no) + ": coordinate count mismatch");
      out.draws.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw data_error(where + "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline DrawSet read_draws(const std::filesystem::path& path, const ReadDrawsOptions& opt = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  return parse_draws(in, path.string(), opt);
}

// ---------------------------------------------------------------------------
// Embedding files

inline json embedding_to_json(const Embedding& e, const std::vector<std::string>& labels) {
  return {{"format", "bigue-embedding"}, {"version", embedding_format_version}, {"labels", labels},
          {"beta", e.beta},              {"theta", e.theta},                    {"kappa", e.kappa}};
}

inline Embedding embedding_from_json(const json& j, std::vector<std::string>* labels = nullptr) {
  try {
    if (j.value("format", "") != "bigue-embedding") throw data_error("not an embedding file");
    if (j.value("version", -1) != embedding_format_version) throw data_error("unsupported embedding version");
    Embedding e;
    e.beta = j.at("beta").get<double>();
    e.theta = j.at("theta").get<std::vector<double>>();
    e.kappa = j.at("kappa").get<std::vector<double>>();
    const auto l = j.at("labels").get<std::vector<std::string>>();
    if (e.theta.size() != e.kappa.size() || l.size() != e.theta.size())
      throw data_error("embedding: coordinate count mismatch");
    if (labels) *labels = l;
    return e;
  } catch (const json::exception& e) {
    throw data_error(std::string("embedding: ") + e.what());
  }
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

inline void write_json(const json& j, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

// Reorders the embedding's coordinates to follow the graph's labels.
inline Embedding match_labels(const Embedding& e, const std::vector<std::string>& emb_labels, const Graph& g) {
  std::map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < emb_labels.size(); ++i) at[emb_labels[i]] = i;
  if (emb_labels.size() != g.size()) throw data_error("embedding and graph differ in vertex count");
  Embedding out = e;
  for (Vertex w = 0; w < g.size(); ++w) {
    auto it = at.find(g.labels()[w]);
    if (it == at.end()) throw data_error("embedding lacks vertex " + g.labels()[w]);
    out.theta[w] = e.theta[it->second];
    out.kappa[w] = e.kappa[it->second];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Digests

// 64-bit FNV-1a of the file contents, as 16 hex digits.
inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const {
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  void write(const std::filesystem::path& path) const {
    write_atomically(path, [&](std::ostream& out) { write(out); });
  }
};

}  // namespace bigue
