#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bearing_flows/scenario.hpp"

namespace bearing_flows {

/// Computes the requested certificates for a scenario's initial formation.
/// Spectra use the controller's target shape when it has one.
CertificateReport ComputeCertificates(const Scenario& scenario,
                                      const std::vector<CertName>& names);

/// {"d": d, "positions": [[...], ...]}
nlohmann::json FormationFragment(int d, const Eigen::VectorXd& x);

nlohmann::json ToJson(const CertificateReport& report, int d);
nlohmann::json SimulationSummary(const Trajectory& trajectory);

/// Trajectory as JSON columns: t, x (one row per recorded state), phi_tilde,
/// psi, V, grad_norm, centroid.
nlohmann::json TrajectoryJson(const Trajectory& trajectory);

enum class OutputFormat { kCsv, kJson };

struct RunOptions {
  std::optional<double> dt;
  std::optional<double> t_max;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::kCsv;
  /// Replaces the scenario's analysis list when set.
  std::optional<std::vector<CertName>> certs;
  ScenarioOverrides overrides;
};

struct RunResult {
  int exit_code = 1;  // 0 converged, 2 time limit, 1 error
  std::string message;
  std::vector<std::filesystem::path> written;
  std::string report;  // report JSON text
};

/// Simulates, computes the requested certificates, then writes the trajectory
/// and the report. Nothing is written unless every step succeeds.
RunResult RunScenario(const Scenario& scenario, const RunOptions& options);

/// Loads then runs; parse and validation failures become exit code 1.
RunResult RunScenarioFile(const std::filesystem::path& path, const RunOptions& options);

/// Certificates only; writes `<name>.report.json` unless out_dir is empty
/// and returns 0, or 1 on error.
RunResult AnalyzeScenarioFile(const std::filesystem::path& path,
                              const RunOptions& options);

/// Writes all files atomically: each goes to a temporary sibling first and is
/// renamed only after every write succeeded.
void WriteFilesAtomically(
    const std::vector<std::pair<std::filesystem::path, std::string>>& files);

}  // namespace bearing_flows
