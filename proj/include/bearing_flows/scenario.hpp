#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bearing_flows/analysis.hpp"
#include "bearing_flows/controllers.hpp"
#include "bearing_flows/simulation.hpp"

namespace bearing_flows {

/// Certificates that a scenario or the `analyze` command can request.
enum class CertName { kNu, kConjecture, kSpectrum, kRigidity, kPersistence };

/// Accepts nu, conjecture, spectrum, rigidity, persistence.
/// Throws Error(kUnknownName).
CertName ParseCertName(const std::string& name);
const char* ToString(CertName name);
bool IsRandomized(CertName name);

/// One simulation/analysis job read from a JSON document.
///
///   {
///     "name": "square",
///     "graph": {"n": 4, "edges": [[1, 2], [2, 3], [3, 4], [4, 1]]},
///     "formation": {"d": 2, "positions": [[0, 0], [1, 0], [1, 1], [0, 1]]},
///     "controller": "consensus" | "formation",
///     "topology": "directed" | "undirected",
///     "target": {"targets_from": [...]}            (or {"bearings": [{"edge": [1, 2], "u": [1, 0]}]})
///     "sim": {"dt": 1e-3, "t_max": 10, "stop_tol": 1e-6, "merge_clusters": true,
///             "record_every": 1, "coincidence_eps": 1e-9},
///     "analysis": ["nu", "spectrum"],
///     "seed": 7,
///     "nu_restarts": 64, "persistence_trials": 20,
///     "hamiltonian": "complete" | "graph-edges",
///     "output": {"csv": "square.csv", "report": "square.report.json"}
///   }
///
/// Vertex labels are 1-based. Undirected controller kinds use the closure of
/// the listed edges under reversal.
struct Scenario {
  std::string name;
  std::string description;
  DirectedGraph graph;
  int d = 2;
  Eigen::VectorXd x0;
  Controller controller;
  SimConfig sim;
  std::vector<CertName> analyses;
  std::optional<std::uint64_t> seed;
  int nu_restarts = 64;
  int persistence_trials = 20;
  HamiltonianMetric hamiltonian = HamiltonianMetric::kCompleteGeometric;
  std::string csv_name;
  std::string report_name;

  Formation initial() const { return Formation(graph, d, x0); }
};

/// Command-line replacements for the scenario's controller and topology.
struct ScenarioOverrides {
  std::optional<std::string> controller;
  std::optional<std::string> topology;
};

/// Parses and validates a scenario. Errors carry `source:line:` prefixes.
/// Throws Error(kParse) on malformed JSON, Error(kValidation) on bad content.
Scenario ParseScenario(const std::string& text, const std::string& source = "<scenario>",
                       const ScenarioOverrides& overrides = {});

/// Reads and parses a file. Throws Error(kParse) when it cannot be read.
Scenario LoadScenario(const std::filesystem::path& path,
                      const ScenarioOverrides& overrides = {});

/// Directory holding the bundled scenarios: $BEARING_FLOWS_DATA_DIR when set,
/// otherwise the source tree's data directory.
std::filesystem::path DataDirectory();

}  // namespace bearing_flows
