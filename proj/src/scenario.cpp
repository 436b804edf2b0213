#include "bearing_flows/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bearing_flows/error.hpp"

namespace bearing_flows {

using nlohmann::json;

CertName ParseCertName(const std::string& name) {
  static const std::map<std::string, CertName> kNames = {
      {"nu", CertName::kNu},
      {"conjecture", CertName::kConjecture},
      {"spectrum", CertName::kSpectrum},
      {"rigidity", CertName::kRigidity},
      {"persistence", CertName::kPersistence},
  };
  const auto it = kNames.find(name);
  if (it == kNames.end()) {
    throw Error(ErrorCode::kUnknownName,
                "unknown certificate '" + name +
                    "' (expected nu, conjecture, spectrum, rigidity, persistence)");
  }
  return it->second;
}

const char* ToString(CertName name) {
  switch (name) {
    case CertName::kNu: return "nu";
    case CertName::kConjecture: return "conjecture";
    case CertName::kSpectrum: return "spectrum";
    case CertName::kRigidity: return "rigidity";
    case CertName::kPersistence: return "persistence";
  }
  return "unknown";
}

bool IsRandomized(CertName name) {
  return name == CertName::kNu || name == CertName::kPersistence;
}

namespace {

// Line on which each JSON value starts, keyed by JSON pointer. Only run on
// text that already parsed, so the scanner can be forgiving.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : text_(text) {
    SkipSpace();
    Value("");
  }

  int line(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
      const auto it = lines_.find(p);
      if (it != lines_.end()) return it->second;
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) return 1;
      p.resize(slash);
    }
  }

 private:
  void SkipSpace() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' ||
            text_[pos_] == '\n')) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string String() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        out += text_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  static std::string Escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void Value(const std::string& pointer) {
    if (pos_ >= text_.size()) return;
    lines_.emplace(pointer, line_);
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      SkipSpace();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = String();
        SkipSpace();
        ++pos_;  // colon
        SkipSpace();
        Value(pointer + "/" + Escape(key));
        SkipSpace();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          SkipSpace();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      SkipSpace();
      int index = 0;
      while (pos_ < text_.size() && text_[pos_] != ']') {
        Value(pointer + "/" + std::to_string(index++));
        SkipSpace();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          SkipSpace();
        }
      }
      ++pos_;
    } else if (c == '"') {
      String();
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' &&
             text_[pos_] != ']' && text_[pos_] != ' ' && text_[pos_] != '\n' &&
             text_[pos_] != '\r' && text_[pos_] != '\t') {
        ++pos_;
      }
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

class Reader {
 public:
  Reader(const json& doc, const LineIndex& index, std::string source)
      : doc_(doc), index_(index), source_(std::move(source)) {}

  [[noreturn]] void Fail(const std::string& pointer, const std::string& message) const {
    throw Error(ErrorCode::kValidation, source_ + ":" + std::to_string(index_.line(pointer)) +
                                            ": " + (pointer.empty() ? "/" : pointer) +
                                            ": " + message);
  }

  const json& At(const std::string& pointer) const {
    return doc_.at(json::json_pointer(pointer));
  }
  bool Has(const std::string& pointer) const {
    return doc_.contains(json::json_pointer(pointer));
  }

  const json& Require(const std::string& pointer) const {
    if (!Has(pointer)) Fail(pointer, "required field is missing");
    return At(pointer);
  }

  double Number(const std::string& pointer) const {
    const json& v = Require(pointer);
    if (!v.is_number()) Fail(pointer, "expected a number");
    const double out = v.get<double>();
    if (!std::isfinite(out)) Fail(pointer, "expected a finite number");
    return out;
  }

  long long Integer(const std::string& pointer) const {
    const json& v = Require(pointer);
    if (!v.is_number_integer()) Fail(pointer, "expected an integer");
    return v.get<long long>();
  }

  bool Bool(const std::string& pointer) const {
    const json& v = Require(pointer);
    if (!v.is_boolean()) Fail(pointer, "expected true or false");
    return v.get<bool>();
  }

  std::string String(const std::string& pointer) const {
    const json& v = Require(pointer);
    if (!v.is_string()) Fail(pointer, "expected a string");
    return v.get<std::string>();
  }

  const json& Array(const std::string& pointer) const {
    const json& v = Require(pointer);
    if (!v.is_array()) Fail(pointer, "expected an array");
    return v;
  }

  Eigen::VectorXd Vector(const std::string& pointer, int size) const {
    const json& v = Array(pointer);
    if (static_cast<int>(v.size()) != size) {
      Fail(pointer, "expected " + std::to_string(size) + " coordinates");
    }
    Eigen::VectorXd out(size);
    for (int c = 0; c < size; ++c) out[c] = Number(pointer + "/" + std::to_string(c));
    return out;
  }

  // Rows of d numbers, one per vertex.
  Eigen::VectorXd Positions(const std::string& pointer, int n, int d) const {
    const json& rows = Array(pointer);
    if (static_cast<int>(rows.size()) != n) {
      Fail(pointer, "expected " + std::to_string(n) + " positions, got " +
                        std::to_string(rows.size()));
    }
    Eigen::VectorXd x(n * d);
    for (int i = 0; i < n; ++i) {
      x.segment(i * d, d) = Vector(pointer + "/" + std::to_string(i), d);
    }
    return x;
  }

  Edge EdgeAt(const std::string& pointer, int n) const {
    const json& pair = Array(pointer);
    if (pair.size() != 2) Fail(pointer, "an edge is a pair [from, to]");
    const long long from = Integer(pointer + "/0");
    const long long to = Integer(pointer + "/1");
    for (long long v : {from, to}) {
      if (v < 1 || v > n) {
        Fail(pointer, "vertex " + std::to_string(v) + " is outside 1.." + std::to_string(n));
      }
    }
    if (from == to) Fail(pointer, "self loop");
    return Edge{static_cast<Vertex>(from - 1), static_cast<Vertex>(to - 1)};
  }

 private:
  const json& doc_;
  const LineIndex& index_;
  std::string source_;
};

ControllerKind ParseKind(const Reader& r, const ScenarioOverrides& overrides) {
  const std::string law = overrides.controller ? *overrides.controller : r.String("/controller");
  const std::string topology =
      overrides.topology ? *overrides.topology : r.String("/topology");
  if (law != "consensus" && law != "formation") {
    if (overrides.controller) {
      throw Error(ErrorCode::kValidation, "--controller must be consensus or formation");
    }
    r.Fail("/controller", "unknown controller '" + law + "' (expected consensus or formation)");
  }
  if (topology != "undirected" && topology != "directed") {
    if (overrides.topology) {
      throw Error(ErrorCode::kValidation, "--topology must be undirected or directed");
    }
    r.Fail("/topology", "unknown topology '" + topology + "' (expected undirected or directed)");
  }
  if (law == "consensus") {
    return topology == "directed" ? ControllerKind::kConsensusDirected
                                  : ControllerKind::kConsensusUndirected;
  }
  return topology == "directed" ? ControllerKind::kFormationDirected
                                : ControllerKind::kFormationUndirected;
}

}  // namespace

Scenario ParseScenario(const std::string& text, const std::string& source,
                       const ScenarioOverrides& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    int line = 1;
    for (std::size_t i = 0; i + 1 < end; ++i) line += text[i] == '\n';
    std::string what = e.what();
    const auto column = what.find("column ");
    const auto colon = what.find(": ", column == std::string::npos ? 0 : column);
    if (colon != std::string::npos) what = what.substr(colon + 2);
    throw Error(ErrorCode::kParse, source + ":" + std::to_string(line) + ": " + what);
  }
  const LineIndex index(text);
  const Reader r(doc, index, source);
  if (!doc.is_object()) r.Fail("", "a scenario is a JSON object");

  static const std::set<std::string> kKnown = {
      "name",   "description", "graph",    "formation", "controller", "topology",
      "target", "sim",         "analysis",    "seed",               "nu_restarts",
      "output", "hamiltonian", "persistence_trials", "notes"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.count(key)) r.Fail("/" + key, "unknown field");
  }

  Scenario s;
  s.name = r.Has("/name") ? r.String("/name") : "scenario";
  if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) {
    r.Fail("/name", "name must be non-empty and free of path separators");
  }
  if (r.Has("/description")) s.description = r.String("/description");

  const long long n = r.Integer("/graph/n");
  if (n < 1 || n > 10000) r.Fail("/graph/n", "vertex count must be in 1..10000");
  std::vector<Edge> edges;
  const json& edge_list = r.Array("/graph/edges");
  std::set<Edge> seen;
  for (std::size_t k = 0; k < edge_list.size(); ++k) {
    const std::string p = "/graph/edges/" + std::to_string(k);
    const Edge e = r.EdgeAt(p, static_cast<int>(n));
    if (!seen.insert(e).second) r.Fail(p, "duplicate edge");
    edges.push_back(e);
  }

  const ControllerKind kind = ParseKind(r, overrides);
  DirectedGraph graph(static_cast<int>(n), edges);
  if (IsUndirected(kind)) graph = graph.Symmetrized();
  s.graph = graph;

  const long long d = r.Integer("/formation/d");
  if (d < 2 || d > 16) r.Fail("/formation/d", "dimension must be in 2..16");
  s.d = static_cast<int>(d);
  s.x0 = r.Positions("/formation/positions", static_cast<int>(n), s.d);

  if (IsFormation(kind)) {
    if (!r.Has("/target")) r.Fail("/target", "formation controllers need a target");
    const bool by_positions = r.Has("/target/targets_from");
    const bool by_bearings = r.Has("/target/bearings");
    if (by_positions == by_bearings) {
      r.Fail("/target", "give exactly one of 'targets_from' or 'bearings'");
    }
    try {
      BearingTarget target = [&] {
        if (by_positions) {
          const Eigen::VectorXd shape =
              r.Positions("/target/targets_from", static_cast<int>(n), s.d);
          return BearingTarget::FromFormation(Formation(graph, s.d, shape));
        }
        std::map<Edge, Eigen::VectorXd> bearings;
        const json& list = r.Array("/target/bearings");
        for (std::size_t k = 0; k < list.size(); ++k) {
          const std::string p = "/target/bearings/" + std::to_string(k);
          const Edge e = r.EdgeAt(p + "/edge", static_cast<int>(n));
          if (!graph.has_edge(e.from, e.to)) r.Fail(p + "/edge", "edge is not in the graph");
          bearings[e] = r.Vector(p + "/u", s.d);
        }
        return BearingTarget::FromBearings(graph, s.d, bearings);
      }();
      s.controller = Controller::FormationControl(!IsUndirected(kind), std::move(target));
      s.controller.Validate(graph);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kValidation) throw;
      r.Fail("/target", e.what());
    }
  } else {
    if (r.Has("/target")) r.Fail("/target", "consensus controllers take no target");
    s.controller = Controller::Consensus(!IsUndirected(kind));
  }

  if (r.Has("/sim")) {
    if (!r.At("/sim").is_object()) r.Fail("/sim", "expected an object");
    static const std::set<std::string> kSim = {"dt",           "t_max",        "stop_tol",
                                               "merge_clusters", "record_every",
                                               "coincidence_eps"};
    for (const auto& [key, value] : r.At("/sim").items()) {
      if (!kSim.count(key)) r.Fail("/sim/" + key, "unknown simulation field");
    }
    if (r.Has("/sim/dt")) s.sim.dt = r.Number("/sim/dt");
    if (r.Has("/sim/t_max")) s.sim.t_max = r.Number("/sim/t_max");
    if (r.Has("/sim/stop_tol")) s.sim.stop_tol = r.Number("/sim/stop_tol");
    if (r.Has("/sim/merge_clusters")) s.sim.merge_clusters = r.Bool("/sim/merge_clusters");
    if (r.Has("/sim/record_every")) {
      s.sim.record_every = static_cast<int>(r.Integer("/sim/record_every"));
    }
    if (r.Has("/sim/coincidence_eps")) s.sim.coincidence_eps = r.Number("/sim/coincidence_eps");
    try {
      s.sim.Validate();
    } catch (const Error& e) {
      r.Fail("/sim", e.what());
    }
  }

  if (r.Has("/analysis")) {
    const json& list = r.Array("/analysis");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = "/analysis/" + std::to_string(k);
      try {
        s.analyses.push_back(ParseCertName(r.String(p)));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kValidation) throw;
        r.Fail(p, e.what());
      }
    }
  }
  if (r.Has("/seed")) {
    const long long seed = r.Integer("/seed");
    if (seed < 0) r.Fail("/seed", "seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  for (CertName c : s.analyses) {
    if (IsRandomized(c) && !s.seed) {
      r.Fail("/analysis", std::string("'") + ToString(c) + "' is randomized and needs a seed");
    }
  }
  if (r.Has("/nu_restarts")) {
    s.nu_restarts = static_cast<int>(r.Integer("/nu_restarts"));
    if (s.nu_restarts < 1) r.Fail("/nu_restarts", "must be positive");
  }
  if (r.Has("/persistence_trials")) {
    s.persistence_trials = static_cast<int>(r.Integer("/persistence_trials"));
    if (s.persistence_trials < 1) r.Fail("/persistence_trials", "must be positive");
  }
  if (r.Has("/hamiltonian")) {
    const std::string metric = r.String("/hamiltonian");
    if (metric == "complete") {
      s.hamiltonian = HamiltonianMetric::kCompleteGeometric;
    } else if (metric == "graph-edges") {
      s.hamiltonian = HamiltonianMetric::kGraphEdges;
    } else {
      r.Fail("/hamiltonian", "expected 'complete' or 'graph-edges'");
    }
  }
  s.csv_name = s.name + ".csv";
  s.report_name = s.name + ".report.json";
  if (r.Has("/output/csv")) s.csv_name = r.String("/output/csv");
  if (r.Has("/output/report")) s.report_name = r.String("/output/report");
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path,
                      const ScenarioOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParse, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseScenario(buf.str(), path.string(), overrides);
}

std::filesystem::path DataDirectory() {
  if (const char* env = std::getenv("BEARING_FLOWS_DATA_DIR"); env && *env) {
    return env;
  }
#ifdef BEARING_FLOWS_DATA_DIR
  return BEARING_FLOWS_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace bearing_flows
