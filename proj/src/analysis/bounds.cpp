#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "bearing_flows/analysis.hpp"
#include "bearing_flows/controllers.hpp"

namespace bearing_flows {

double FiniteTimeBound(const Formation& initial, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw Error(ErrorCode::kNonPositiveNu, "nu must be positive and finite");
  }
  return PhiTilde(initial.graph(), initial.dim(), initial.x()) / (nu * nu);
}

ConjectureBound ComputeConjectureBound(const Formation& initial,
                                       HamiltonianMetric metric) {
  const DirectedGraph& graph = initial.graph();
  const int n = graph.num_vertices();
  if (n > 10) {
    throw Error(ErrorCode::kTooLarge, "Hamiltonian search is limited to n <= 10");
  }
  if (!ClassifyConnectivity(graph).strongly_connected) {
    throw Error(ErrorCode::kNotStronglyConnected, "graph is not strongly connected");
  }
  if (n < 3) {
    throw Error(ErrorCode::kNoHamiltonianCycle,
                "n < 3 has no simple Hamiltonian cycle and sec^2(pi/n) is singular");
  }

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dist(i, j) = (initial.position(i) - initial.position(j)).norm();
    }
  }

  // Vertex 0 is fixed first; every cycle is visited once per direction.
  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), 0);
  double best = -1.0;
  std::vector<Vertex> best_cycle;
  do {
    bool ok = true;
    double len = 0.0;
    for (int k = 0; k < n && ok; ++k) {
      const Vertex a = order[k];
      const Vertex b = order[(k + 1) % n];
      if (metric == HamiltonianMetric::kGraphEdges && !graph.has_edge(a, b)) ok = false;
      len += dist(a, b);
    }
    if (ok && len > best) {
      best = len;
      best_cycle = order;
    }
  } while (std::next_permutation(order.begin() + 1, order.end()));

  if (best < 0.0) {
    throw Error(ErrorCode::kNoHamiltonianCycle, "no directed Hamiltonian cycle");
  }
  ConjectureBound out;
  out.cycle_length = best;
  out.cycle = best_cycle;
  out.n = n;
  const double sec = 1.0 / std::cos(std::numbers::pi / n);
  out.bound = best / (2.0 * n) * sec * sec;
  out.caption_bound = best / n * sec * sec;
  return out;
}

namespace {

std::vector<std::complex<double>> SortedEigenvalues(const Eigen::MatrixXd& m) {
  std::vector<std::complex<double>> out;
  if (m.rows() == 0) return out;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "eigenvalue iteration did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  out.assign(values.data(), values.data() + values.size());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

}  // namespace

SpectrumReport JacobianSpectrum(const Formation& target) {
  const double eps = CoincidenceThreshold(target.x(), target.dim());
  const FormationMatrices mats = ComputeFormationMatrices(target, &target, eps);
  SpectrumReport report;
  report.jacobian = SortedEigenvalues(mats.directed_jacobian());
  report.neg_bearing_laplacian = SortedEigenvalues(-mats.bearing_laplacian());
  report.jacobian_max_real = report.jacobian.empty() ? 0.0 : report.jacobian.front().real();
  report.laplacian_max_real =
      report.neg_bearing_laplacian.empty() ? 0.0 : report.neg_bearing_laplacian.front().real();
  return report;
}

}  // namespace bearing_flows
