#include "bearing_flows/reproduce.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "bearing_flows/error.hpp"

namespace bearing_flows {

const std::vector<std::string>& ReproductionNames() {
  static const std::vector<std::string> kNames = {"counterexample", "fig3", "fig4",
                                                  "persistence-fig1"};
  return kNames;
}

namespace {

std::string Fmt(double value, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, value);
  return buf;
}

std::string Complex(const std::complex<double>& z) {
  return Fmt(z.real(), "%+.6f") + (z.imag() < 0 ? " - " : " + ") +
         Fmt(std::abs(z.imag()), "%.6f") + "i";
}

Scenario Bundled(const std::string& file) {
  return LoadScenario(DataDirectory() / "scenarios" / file);
}

Scenario ApplyOptions(Scenario s, const RunOptions& options) {
  if (options.dt) s.sim.dt = *options.dt;
  if (options.t_max) s.sim.t_max = *options.t_max;
  if (options.seed) s.seed = *options.seed;
  s.sim.Validate();
  return s;
}

// Value of a per-record series at row k, holding the last value after the
// run stopped.
double Held(const std::vector<double>& series, std::size_t k) {
  return series.empty() ? 0.0 : series[std::min(k, series.size() - 1)];
}

std::string SeriesCsv(const std::vector<std::string>& names,
                      const std::vector<const Trajectory*>& runs,
                      const std::vector<std::vector<double>>& series) {
  const Trajectory* longest = *std::max_element(
      runs.begin(), runs.end(),
      [](const Trajectory* a, const Trajectory* b) { return a->times.size() < b->times.size(); });
  std::ostringstream csv;
  csv << "t";
  for (const auto& n : names) csv << ',' << n;
  csv << '\n';
  for (std::size_t k = 0; k < longest->times.size(); ++k) {
    csv << Fmt(longest->times[k], "%.12g");
    for (const auto& s : series) csv << ',' << Fmt(Held(s, k), "%.12g");
    csv << '\n';
  }
  return csv.str();
}

std::vector<double> Column(const Trajectory& t, double MonitorRecord::*field) {
  std::vector<double> out;
  for (const auto& m : t.monitors) out.push_back(m.*field);
  return out;
}

int Counterexample(std::ostream& out) {
  const DirectedGraph graph(4, {{0, 1}, {1, 3}, {3, 2}, {2, 0}, {0, 3}});
  Eigen::VectorXd x(8);
  x << 0, 0, 2, 0, 3, -4, 2, -2;
  const SpectrumReport s = JacobianSpectrum(Formation(graph, 2, x));
  out << "target: x1=(0,0) x2=(2,0) x3=(3,-4) x4=(2,-2); edges 1->2 2->4 4->3 3->1 1->4\n";
  out << "eig(J_dir) = -H+ diag(P(u*)/d*) H^T:\n";
  for (const auto& z : s.jacobian) out << "  " << Complex(z) << '\n';
  out << "eig(-L_B) = -H+ diag(P(u*)) H^T:\n";
  for (const auto& z : s.neg_bearing_laplacian) out << "  " << Complex(z) << '\n';
  out << "max Re eig(J_dir) = " << Fmt(s.jacobian_max_real, "%.6e") << '\n';
  out << "max Re eig(-L_B)  = " << Fmt(s.laplacian_max_real, "%.6e") << '\n';
  const bool pass = s.jacobian_max_real > 1e-8 && s.laplacian_max_real > 1e-8;
  out << (pass ? "PASS" : "FAIL") << ": both spectra have an eigenvalue with positive real part\n";
  return pass ? 0 : 1;
}

int Fig3(const RunOptions& options, std::ostream& out) {
  const Scenario directed = ApplyOptions(Bundled("fig3_directed.json"), options);
  const Scenario undirected = ApplyOptions(Bundled("fig3_undirected.json"), options);
  const Trajectory td = Simulate(directed.initial(), directed.controller, directed.sim);
  const Trajectory tu = Simulate(undirected.initial(), undirected.controller, undirected.sim);

  // Agents 1-4 form the strongly connected component and sense nobody else.
  std::vector<double> v_scc;
  std::optional<double> t_scc;
  const double tol = directed.sim.stop_tol;
  for (std::size_t k = 0; k < td.states.size(); ++k) {
    const double v = Diameter(td.states[k].head(4 * directed.d), directed.d);
    v_scc.push_back(v);
    if (!t_scc && v < tol) t_scc = td.times[k];
  }
  const DirectedGraph cycle(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const Formation scc(cycle, directed.d, directed.x0.head(4 * directed.d));
  const ConjectureBound along_edges = ComputeConjectureBound(scc, HamiltonianMetric::kGraphEdges);
  const ConjectureBound complete = ComputeConjectureBound(scc);

  const std::string csv = SeriesCsv(
      {"V_directed", "V_undirected", "phi_tilde_directed", "phi_tilde_undirected", "V_scc"},
      {&td, &tu},
      {Column(td, &MonitorRecord::v_max_dist), Column(tu, &MonitorRecord::v_max_dist),
       Column(td, &MonitorRecord::phi_tilde), Column(tu, &MonitorRecord::phi_tilde), v_scc});
  const auto path = options.out_dir / "fig3_lyapunov.csv";
  WriteFilesAtomically({{path, csv}});

  auto when = [](const Trajectory& t) {
    return t.t_converge ? Fmt(*t.t_converge) : std::string("not reached");
  };
  out << "directed:   " << ToString(td.stop_reason) << ", t_converge = " << when(td) << '\n';
  out << "undirected: " << ToString(tu.stop_reason) << ", t_converge = " << when(tu) << '\n';
  out << "component 1-2-3-4: t_converge = "
      << (t_scc ? Fmt(*t_scc) : std::string("not reached")) << '\n';
  out << "  conjecture l/(2n) sec^2(pi/n), cycle along graph edges: l = "
      << Fmt(along_edges.cycle_length) << ", bound = " << Fmt(along_edges.bound) << '\n';
  out << "  conjecture l/(2n) sec^2(pi/n), complete geometric graph: l = "
      << Fmt(complete.cycle_length) << ", bound = " << Fmt(complete.bound) << '\n';
  out << "  caption variant (l/n) sec^2(pi/n), graph edges: " << Fmt(along_edges.caption_bound)
      << '\n';
  out << "wrote " << path.string() << '\n';
  const bool pass = td.stop_reason == StopReason::kConverged &&
                    tu.stop_reason == StopReason::kConverged && t_scc &&
                    *t_scc <= along_edges.bound * 1.02;
  out << (pass ? "PASS" : "FAIL")
      << ": both runs converge and the component meets the conjectured bound\n";
  return pass ? 0 : 1;
}

int Fig4(const RunOptions& options, std::ostream& out) {
  const char* files[] = {"fig4_undirected.json", "fig4_directed.json", "fig4_cycle.json"};
  std::vector<Trajectory> runs;
  for (const char* f : files) {
    const Scenario s = ApplyOptions(Bundled(f), options);
    runs.push_back(Simulate(s.initial(), s.controller, s.sim));
  }
  const std::string csv =
      SeriesCsv({"psi_undirected", "psi_directed", "psi_cycle"}, {&runs[0], &runs[1], &runs[2]},
                {Column(runs[0], &MonitorRecord::psi), Column(runs[1], &MonitorRecord::psi),
                 Column(runs[2], &MonitorRecord::psi)});
  const auto path = options.out_dir / "fig4_psi.csv";
  WriteFilesAtomically({{path, csv}});

  bool pass = true;
  const char* labels[] = {"undirected", "directed", "cycle"};
  for (std::size_t r = 0; r < runs.size(); ++r) {
    // psi at t = 5, or the final value when the run stopped earlier.
    double psi5 = runs[r].monitors.back().psi;
    for (std::size_t k = 0; k < runs[r].times.size(); ++k) {
      if (runs[r].times[k] >= 5.0 - 1e-9) {
        psi5 = runs[r].monitors[k].psi;
        break;
      }
    }
    out << labels[r] << ": psi(0) = " << Fmt(runs[r].monitors.front().psi)
        << ", psi(5) = " << Fmt(psi5) << ", " << ToString(runs[r].stop_reason) << '\n';
    pass = pass && psi5 < 0.05;
  }
  out << "wrote " << path.string() << '\n';
  out << (pass ? "PASS" : "FAIL") << ": all psi series end below 0.05 at t = 5\n";
  return pass ? 0 : 1;
}

int PersistenceFig1(const RunOptions& options, std::ostream& out) {
  const DirectedGraph graph(4, {{0, 1}, {0, 2}, {2, 3}, {1, 3}, {0, 3}});
  Eigen::VectorXd a(8), b(8);
  a << 0, 2, 2, 2, 0, 0, 2, 0;
  b << 0.1632, 2.25, 3, 2, 0, 0, 3, 0;
  const WitnessCheck pair = ValidateWitness(graph, 2, b, a, 1e-2);
  out << "stored pair: per-node residual = " << Fmt(pair.residual, "%.3e")
      << ", relation = " << ToString(pair.relation) << '\n';
  const PersistenceVerdict sampled =
      PersistenceCheck(graph, 2, 20, options.seed.value_or(1));
  out << "sampled search (" << sampled.method << "): " << ToString(sampled.kind) << " after "
      << sampled.trials_run << " trial(s)";
  if (sampled.kind == PersistenceKind::kNonPersistentWitness) {
    out << ", residual = " << Fmt(sampled.residual, "%.3e");
  }
  out << '\n';
  const bool pass =
      pair.valid && sampled.kind == PersistenceKind::kNonPersistentWitness;
  out << (pass ? "PASS" : "FAIL") << ": NonPersistentWitness confirmed at tolerance 1e-2\n";
  return pass ? 0 : 1;
}

}  // namespace

int Reproduce(const std::string& name, const RunOptions& options, std::ostream& out) {
  if (name == "counterexample") return Counterexample(out);
  if (name == "fig3") return Fig3(options, out);
  if (name == "fig4") return Fig4(options, out);
  if (name == "persistence-fig1") return PersistenceFig1(options, out);
  throw Error(ErrorCode::kUnknownName,
              "unknown reproduction '" + name +
                  "' (expected counterexample, fig3, fig4, persistence-fig1)");
}

unsigned BatchThreads() {
  if (const char* env = std::getenv("BEARING_FLOWS_THREADS"); env && *env) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value >= 1) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunResult> RunBatch(const std::vector<std::filesystem::path>& files,
                                const RunOptions& options, unsigned threads) {
  std::vector<RunResult> results(files.size());
  if (threads == 0) threads = BatchThreads();
  threads = std::min<unsigned>(threads, std::max<std::size_t>(files.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < files.size(); k = next++) {
      results[k] = RunScenarioFile(files[k], options);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace bearing_flows
