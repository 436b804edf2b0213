#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "bearing_flows/analysis.hpp"
#include "bearing_flows/controllers.hpp"

namespace bearing_flows {

const char* ToString(PersistenceKind kind) {
  switch (kind) {
    case PersistenceKind::kPersistentUpToSampling: return "PersistentUpToSampling";
    case PersistenceKind::kNonPersistentWitness: return "NonPersistentWitness";
  }
  return "Unknown";
}

namespace {

// r_i = sum_{j in N_i^+} (u_ij - u*_ij), stacked.
Eigen::VectorXd BearingSums(const DirectedGraph& graph, int d, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& x_star) {
  const double eps = CoincidenceThreshold(x, d);
  const double eps_star = CoincidenceThreshold(x_star, d);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(x.size());
  for (const Edge& e : graph.edges()) {
    r.segment(e.from * d, d) +=
        Bearing(x.segment(e.from * d, d), x.segment(e.to * d, d), eps) -
        Bearing(x_star.segment(e.from * d, d), x_star.segment(e.to * d, d), eps_star);
  }
  return r;
}

double MaxBlockNorm(const Eigen::VectorXd& r, int d) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < r.size() / d; ++i) {
    worst = std::max(worst, r.segment(i * d, d).norm());
  }
  return worst;
}

double MinEdgeLength(const DirectedGraph& graph, int d, const Eigen::VectorXd& x) {
  double shortest = std::numeric_limits<double>::infinity();
  for (const OrientedEdge& rep : graph.orientation()) {
    shortest = std::min(shortest,
                        (x.segment(rep.head * d, d) - x.segment(rep.tail * d, d)).norm());
  }
  return shortest;
}

Eigen::VectorXd SampleTarget(const DirectedGraph& graph, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd x(d * graph.num_vertices());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (Eigen::Index c = 0; c < x.size(); ++c) x[c] = unit(rng);
    if (MinEdgeLength(graph, d, x) >= 0.1) return x;
  }
  throw Error(ErrorCode::kNumericalFailure, "could not sample a target with edges >= 0.1");
}

// Followers are placed in reverse cascade order: sinks stay at their target
// positions, single-out-neighbor agents slide along their desired bearing by
// a random distance, and the rest sit at the generalized Fermat point of the
// agents they sense.
std::optional<Eigen::VectorXd> CascadeCandidate(const DirectedGraph& graph, int d,
                                                const Eigen::VectorXd& x_star,
                                                std::mt19937_64& rng) {
  const std::vector<int> degree = CascadeDegrees(graph);
  const int n = graph.num_vertices();
  std::vector<Vertex> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Vertex a, Vertex b) { return degree[a] < degree[b]; });
  std::uniform_real_distribution<double> stretch(0.2, 2.0);
  const double eps_star = CoincidenceThreshold(x_star, d);

  Eigen::VectorXd x = x_star;
  for (Vertex i : order) {
    const auto out = graph.out_neighbors(i);
    if (out.empty()) continue;
    Eigen::VectorXd v_star = Eigen::VectorXd::Zero(d);
    for (Vertex j : out) {
      v_star += Bearing(x_star.segment(i * d, d), x_star.segment(j * d, d), eps_star);
    }
    if (out.size() == 1) {
      x.segment(i * d, d) = x.segment(out[0] * d, d) - stretch(rng) * v_star;
      continue;
    }
    std::vector<Eigen::VectorXd> foci;
    for (Vertex j : out) foci.emplace_back(x.segment(j * d, d));
    try {
      const FermatResult res = FermatEquilibrium(foci, v_star);
      if (res.focus) return std::nullopt;
      x.segment(i * d, d) = res.point;
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  return x;
}

// Levenberg-Marquardt on the per-node bearing sums.
Eigen::VectorXd Polish(const DirectedGraph& graph, int d, Eigen::VectorXd x,
                       const Eigen::VectorXd& x_star) {
  const int n = graph.num_vertices();
  Eigen::VectorXd r = BearingSums(graph, d, x, x_star);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < 200 && MaxBlockNorm(r, d) > 1e-13; ++it) {
    const double eps = CoincidenceThreshold(x, d);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d * n, d * n);
    for (const Edge& e : graph.edges()) {
      const Eigen::VectorXd rel = x.segment(e.to * d, d) - x.segment(e.from * d, d);
      const double len = rel.norm();
      if (len <= eps) continue;
      const Eigen::MatrixXd block = ProjectionMatrix(rel) / len;
      jac.block(e.from * d, e.to * d, d, d) += block;
      jac.block(e.from * d, e.from * d, d, d) -= block;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
      const Eigen::VectorXd step = a.ldlt().solve(-jtr);
      const Eigen::VectorXd trial = x + step;
      if (step.allFinite()) {
        const Eigen::VectorXd r_trial = BearingSums(graph, d, trial, x_star);
        const double c = r_trial.squaredNorm();
        if (c < cost) {
          x = trial;
          r = r_trial;
          cost = c;
          lambda = std::max(lambda * 0.2, 1e-15);
          improved = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return x;
}

Eigen::VectorXd FlowCandidate(const DirectedGraph& graph, int d,
                              const Eigen::VectorXd& x_star, std::mt19937_64& rng) {
  const Formation target(graph, d, x_star);
  const Eigen::VectorXd u_star = BearingTarget::FromFormation(target).Stacked(graph);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd x(x_star.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) x[c] = unit(rng);
  const double eps = CoincidenceThreshold(x, d);
  const double dt = 2e-3;
  for (int step = 0; step < 5000; ++step) {
    const Eigen::VectorXd v =
        FieldVelocity(ControllerKind::kFormationDirected, graph, d, x, u_star, eps);
    if (v.lpNorm<Eigen::Infinity>() < 1e-6) break;
    x += dt * v;
  }
  return Polish(graph, d, std::move(x), x_star);
}

}  // namespace

double PerNodeBearingResidual(const DirectedGraph& graph, int d,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& x_star) {
  if (x.size() != d * graph.num_vertices() || x_star.size() != x.size()) {
    throw Error(ErrorCode::kGraphMismatch, "position vectors do not match the graph");
  }
  return MaxBlockNorm(BearingSums(graph, d, x, x_star), d);
}

WitnessCheck ValidateWitness(const DirectedGraph& graph, int d,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& x_star,
                             double tol) {
  WitnessCheck check;
  check.residual = PerNodeBearingResidual(graph, d, x, x_star);
  check.relation = ClassifyPair(Formation(graph, d, x), Formation(graph, d, x_star), tol);
  check.valid = check.residual < tol && check.relation == PairRelation::kNone;
  return check;
}

PersistenceVerdict PersistenceCheck(const DirectedGraph& graph, int d, int trials,
                                    std::uint64_t seed) {
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "dimension must be at least 2");
  PersistenceVerdict verdict;
  const bool dag = ClassifyConnectivity(graph).is_dag;
  verdict.method = dag ? "cascade" : "flow+lm";
  if (graph.num_edges() == 0) return verdict;

  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    ++verdict.trials_run;
    const Eigen::VectorXd x_star = SampleTarget(graph, d, rng);
    std::optional<Eigen::VectorXd> x =
        dag ? CascadeCandidate(graph, d, x_star, rng) : FlowCandidate(graph, d, x_star, rng);
    if (!x || !x->allFinite()) continue;
    const double scale = std::max(Diameter(*x, d), 1e-300);
    if (MinEdgeLength(graph, d, *x) <= 1e-3 * scale) continue;
    const WitnessCheck check = ValidateWitness(graph, d, *x, x_star, 1e-8);
    if (!check.valid) continue;
    // The equivalence test runs at a coarser tolerance so that near-equivalent
    // roots are not reported.
    if (ClassifyPair(Formation(graph, d, *x), Formation(graph, d, x_star), 1e-6) !=
        PairRelation::kNone) {
      continue;
    }
    verdict.kind = PersistenceKind::kNonPersistentWitness;
    verdict.witness = *x;
    verdict.target = x_star;
    verdict.residual = check.residual;
    return verdict;
  }
  return verdict;
}

}  // namespace bearing_flows
