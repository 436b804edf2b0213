#include "bearing_flows/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bearing_flows/error.hpp"

namespace bearing_flows {

using nlohmann::json;

CertificateReport ComputeCertificates(const Scenario& scenario,
                                      const std::vector<CertName>& names) {
  const Formation initial = scenario.initial();
  const std::uint64_t seed = scenario.seed.value_or(1);
  CertificateReport report;
  for (CertName name : names) {
    switch (name) {
      case CertName::kNu: {
        report.nu = EstimateNu(scenario.graph, scenario.d, scenario.nu_restarts, seed);
        report.t_reach_bound = FiniteTimeBound(initial, report.nu->value);
        break;
      }
      case CertName::kConjecture:
        report.conjecture = ComputeConjectureBound(initial, scenario.hamiltonian);
        break;
      case CertName::kSpectrum: {
        const auto& target = scenario.controller.target;
        if (target && target->shape()) {
          report.spectrum = JacobianSpectrum(initial.WithPositions(*target->shape()));
        } else if (target) {
          throw Error(ErrorCode::kMissingTarget,
                      "spectrum needs target positions, not bare bearings");
        } else {
          report.spectrum = JacobianSpectrum(initial);
        }
        break;
      }
      case CertName::kRigidity:
        report.rigidity = IsBearingRigid(initial);
        break;
      case CertName::kPersistence:
        report.persistence = PersistenceCheck(scenario.graph, scenario.d,
                                              scenario.persistence_trials, seed);
        break;
    }
  }
  return report;
}

json FormationFragment(int d, const Eigen::VectorXd& x) {
  json positions = json::array();
  for (Eigen::Index i = 0; i < x.size() / d; ++i) {
    json row = json::array();
    for (int c = 0; c < d; ++c) row.push_back(x[i * d + c]);
    positions.push_back(std::move(row));
  }
  return json{{"d", d}, {"positions", std::move(positions)}};
}

namespace {

json Eigenvalues(const std::vector<std::complex<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(json::array({v.real(), v.imag()}));
  return out;
}

json OneBased(const std::vector<int>& labels) {
  json out = json::array();
  for (int v : labels) out.push_back(v + 1);
  return out;
}

}  // namespace

json ToJson(const CertificateReport& report, int d) {
  json out = json::object();
  if (report.nu) {
    const NuEstimate& nu = *report.nu;
    out["nu"] = {
        {"value", nu.value},
        {"kind", "estimate (upper bound on the true constant)"},
        {"restarts", nu.restarts},
        {"patterns", nu.patterns},
        {"local_runs", nu.local_runs},
        {"best_minimizer", FormationFragment(d, nu.best_minimizer)},
        {"best_pattern", OneBased(nu.best_pattern)},
    };
  }
  if (report.t_reach_bound) out["t_reach_bound"] = *report.t_reach_bound;
  if (report.conjecture) {
    const ConjectureBound& c = *report.conjecture;
    out["conjecture"] = {
        {"cycle_length", c.cycle_length},
        {"cycle", OneBased(c.cycle)},
        {"n", c.n},
        {"bound", c.bound},
        {"caption_bound", c.caption_bound},
    };
  }
  if (report.spectrum) {
    const SpectrumReport& s = *report.spectrum;
    out["spectrum"] = {
        {"jacobian", Eigenvalues(s.jacobian)},
        {"neg_bearing_laplacian", Eigenvalues(s.neg_bearing_laplacian)},
        {"jacobian_max_real", s.jacobian_max_real},
        {"laplacian_max_real", s.laplacian_max_real},
    };
  }
  if (report.rigidity) {
    const RigidityReport& r = *report.rigidity;
    json sv = json::array();
    for (Eigen::Index k = 0; k < r.singular_values.size(); ++k) {
      sv.push_back(r.singular_values[k]);
    }
    out["rigidity"] = {
        {"rigid", r.rigid},
        {"rank", r.rank},
        {"required_rank", r.required_rank},
        {"threshold", r.threshold},
        {"singular_values", std::move(sv)},
    };
  }
  if (report.persistence) {
    const PersistenceVerdict& p = *report.persistence;
    json verdict = {
        {"verdict", ToString(p.kind)},
        {"trials_run", p.trials_run},
        {"method", p.method},
    };
    if (p.kind == PersistenceKind::kNonPersistentWitness) {
      verdict["residual"] = p.residual;
      verdict["witness"] = FormationFragment(d, p.witness);
      verdict["target"] = FormationFragment(d, p.target);
    }
    out["persistence"] = std::move(verdict);
  }
  return out;
}

json SimulationSummary(const Trajectory& trajectory) {
  json out = {
      {"stop_reason", std::string(ToString(trajectory.stop_reason))},
      {"t_converge", trajectory.t_converge ? json(*trajectory.t_converge) : json(nullptr)},
      {"final_time", trajectory.times.empty() ? 0.0 : trajectory.times.back()},
      {"records", trajectory.times.size()},
      {"merge_events", trajectory.merge_events},
      {"split_events", trajectory.split_events},
      {"max_merge_centroid_shift", trajectory.max_merge_centroid_shift},
  };
  if (!trajectory.monitors.empty()) {
    const MonitorRecord& first = trajectory.monitors.front();
    const MonitorRecord& last = trajectory.monitors.back();
    out["initial"] = {{"phi_tilde", first.phi_tilde}, {"psi", first.psi}, {"V", first.v_max_dist}};
    out["final"] = {{"phi_tilde", last.phi_tilde}, {"psi", last.psi}, {"V", last.v_max_dist}};
    out["final_state"] = FormationFragment(trajectory.d, trajectory.states.back());
  }
  return out;
}

json TrajectoryJson(const Trajectory& trajectory) {
  json t = json::array(), x = json::array(), phi = json::array(), psi = json::array(),
       v = json::array(), grad = json::array(), centroid = json::array();
  for (std::size_t r = 0; r < trajectory.times.size(); ++r) {
    t.push_back(trajectory.times[r]);
    x.push_back(std::vector<double>(trajectory.states[r].data(),
                                    trajectory.states[r].data() + trajectory.states[r].size()));
    const MonitorRecord& m = trajectory.monitors[r];
    phi.push_back(m.phi_tilde);
    psi.push_back(m.psi);
    v.push_back(m.v_max_dist);
    grad.push_back(m.grad_norm);
    centroid.push_back(
        std::vector<double>(m.centroid.data(), m.centroid.data() + m.centroid.size()));
  }
  return json{{"d", trajectory.d}, {"t", t},     {"x", x},
              {"phi_tilde", phi},  {"psi", psi}, {"V", v},
              {"grad_norm", grad}, {"centroid", centroid}};
}

void WriteFilesAtomically(
    const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  std::vector<std::filesystem::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : temps) std::filesystem::remove(p, ec);
  };
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      std::filesystem::path tmp = path;
      tmp += ".tmp";
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
    }
    for (std::size_t k = 0; k < files.size(); ++k) {
      std::filesystem::rename(temps[k], files[k].first);
    }
  } catch (const std::filesystem::filesystem_error& e) {
    cleanup();
    throw Error(ErrorCode::kInvalidArgument, e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

namespace {

Scenario WithOverrides(Scenario scenario, const RunOptions& options) {
  if (options.dt) scenario.sim.dt = *options.dt;
  if (options.t_max) scenario.sim.t_max = *options.t_max;
  if (options.seed) scenario.seed = *options.seed;
  if (options.certs) scenario.analyses = *options.certs;
  scenario.sim.Validate();
  for (CertName c : scenario.analyses) {
    if (IsRandomized(c) && !scenario.seed) {
      throw Error(ErrorCode::kValidation,
                  std::string("'") + ToString(c) + "' is randomized and needs a seed");
    }
  }
  return scenario;
}

}  // namespace

RunResult RunScenario(const Scenario& input, const RunOptions& options) {
  RunResult result;
  try {
    const Scenario scenario = WithOverrides(input, options);
    const Trajectory trajectory =
        Simulate(scenario.initial(), scenario.controller, scenario.sim);
    const CertificateReport certs = ComputeCertificates(scenario, scenario.analyses);

    std::string trajectory_text;
    std::filesystem::path trajectory_path = options.out_dir;
    if (options.format == OutputFormat::kCsv) {
      std::ostringstream csv;
      WriteTrajectoryCsv(csv, trajectory);
      trajectory_text = csv.str();
      trajectory_path /= scenario.csv_name;
    } else {
      trajectory_text = TrajectoryJson(trajectory).dump() + "\n";
      trajectory_path /= scenario.name + ".trajectory.json";
    }
    json report = {
        {"scenario", scenario.name},
        {"controller", std::string(ToString(scenario.controller.kind))},
        {"n", scenario.graph.num_vertices()},
        {"d", scenario.d},
        {"simulation", SimulationSummary(trajectory)},
        {"certificates", ToJson(certs, scenario.d)},
    };
    if (scenario.seed) report["seed"] = *scenario.seed;
    const std::filesystem::path report_path = options.out_dir / scenario.report_name;
    WriteFilesAtomically({{trajectory_path, trajectory_text},
                          {report_path, report.dump(2) + "\n"}});
    result.written = {trajectory_path, report_path};
    switch (trajectory.stop_reason) {
      case StopReason::kConverged:
        result.exit_code = 0;
        break;
      case StopReason::kTimeLimit:
        result.exit_code = 2;
        break;
      case StopReason::kNumericalFailure:
        result.exit_code = 1;
        break;
    }
    result.message = scenario.name + ": " + std::string(ToString(trajectory.stop_reason));
    if (trajectory.t_converge) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), " at t=%.6g", *trajectory.t_converge);
      result.message += buf;
    }
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = e.what();
    result.written.clear();
  }
  return result;
}

RunResult RunScenarioFile(const std::filesystem::path& path, const RunOptions& options) {
  try {
    return RunScenario(LoadScenario(path, options.overrides), options);
  } catch (const std::exception& e) {
    RunResult result;
    result.exit_code = 1;
    result.message = e.what();
    return result;
  }
}

RunResult AnalyzeScenarioFile(const std::filesystem::path& path,
                              const RunOptions& options) {
  RunResult result;
  try {
    const Scenario scenario = WithOverrides(LoadScenario(path, options.overrides), options);
    const CertificateReport certs = ComputeCertificates(scenario, scenario.analyses);
    json report = {
        {"scenario", scenario.name},
        {"n", scenario.graph.num_vertices()},
        {"d", scenario.d},
        {"certificates", ToJson(certs, scenario.d)},
    };
    if (scenario.seed) report["seed"] = *scenario.seed;
    const std::string text = report.dump(2) + "\n";
    result.report = text;
    if (!options.out_dir.empty()) {
      const std::filesystem::path out = options.out_dir / scenario.report_name;
      WriteFilesAtomically({{out, text}});
      result.written = {out};
    }
    result.exit_code = 0;
    result.message = scenario.name + ": analysis complete";
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = e.what();
  }
  return result;
}

}  // namespace bearing_flows
