#include "bearing_flows/controllers.hpp"

#include "bearing_flows/error.hpp"

namespace bearing_flows {

std::string_view ToString(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kConsensusUndirected: return "consensus/undirected";
    case ControllerKind::kConsensusDirected: return "consensus/directed";
    case ControllerKind::kFormationUndirected: return "formation/undirected";
    case ControllerKind::kFormationDirected: return "formation/directed";
  }
  return "unknown";
}

bool IsFormation(ControllerKind kind) {
  return kind == ControllerKind::kFormationUndirected ||
         kind == ControllerKind::kFormationDirected;
}

bool IsUndirected(ControllerKind kind) {
  return kind == ControllerKind::kConsensusUndirected ||
         kind == ControllerKind::kFormationUndirected;
}

Controller Controller::Consensus(bool directed) {
  return {directed ? ControllerKind::kConsensusDirected
                   : ControllerKind::kConsensusUndirected,
          std::nullopt};
}

Controller Controller::FormationControl(bool directed, BearingTarget target) {
  return {directed ? ControllerKind::kFormationDirected
                   : ControllerKind::kFormationUndirected,
          std::move(target)};
}

void Controller::Validate(const DirectedGraph& graph) const {
  if (!IsFormation(kind)) return;
  if (!target) {
    throw Error(ErrorCode::kMissingTarget, "formation control needs desired bearings");
  }
  target->RequireCovers(IsUndirected(kind) ? graph.Symmetrized() : graph);
}

std::span<const Vertex> SensedNeighbors(ControllerKind kind,
                                        const DirectedGraph& graph, Vertex v) {
  return IsUndirected(kind) ? graph.neighbors(v) : graph.out_neighbors(v);
}

namespace {

Eigen::VectorXd StackedTarget(const Controller& controller,
                              const DirectedGraph& graph, int d) {
  if (!IsFormation(controller.kind)) {
    return Eigen::VectorXd::Zero(d * graph.num_oriented());
  }
  controller.Validate(graph);
  return controller.target->Stacked(graph);
}

}  // namespace

Eigen::VectorXd StackedDesired(const Controller& controller,
                               const DirectedGraph& graph, int d) {
  return StackedTarget(controller, graph, d);
}

Eigen::VectorXd Velocity(const Controller& controller, const DirectedGraph& graph,
                         int d, const Eigen::VectorXd& x, double eps) {
  return FieldVelocity(controller.kind, graph, d, x,
                       StackedTarget(controller, graph, d), eps);
}

Eigen::VectorXd FieldVelocity(ControllerKind kind, const DirectedGraph& graph, int d,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u_star,
                              double eps) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
  for (Vertex i = 0; i < graph.num_vertices(); ++i) {
    auto vi = v.segment(i * d, d);
    for (Vertex j : SensedNeighbors(kind, graph, i)) {
      const int k = graph.oriented_index(i, j);
      const double sign = i < j ? 1.0 : -1.0;
      vi += Bearing(x.segment(i * d, d), x.segment(j * d, d), eps) -
            sign * u_star.segment(k * d, d);
    }
  }
  return v;
}

Eigen::VectorXd AggregateVelocity(const Controller& controller, const Formation& f,
                                  double eps) {
  const int d = f.dim();
  const IncidenceMatrices inc = Incidence(f.graph());
  const Eigen::MatrixXd h = IsUndirected(controller.kind) ? inc.InflatedH(d)
                                                          : inc.InflatedHPlus(d);
  const Eigen::VectorXd u_star = StackedTarget(controller, f.graph(), d);
  return h * (StackedBearings(f, eps) - u_star);
}

double PrivatePotential(const Controller& controller, const Formation& f, Vertex i,
                        double eps) {
  double total = 0.0;
  for (Vertex j : f.graph().out_neighbors(i)) {
    const Eigen::VectorXd r = f.position(j) - f.position(i);
    const double dist = r.norm();
    if (!IsFormation(controller.kind)) {
      total += dist;
      continue;
    }
    const Eigen::VectorXd u = Bearing(f.position(i), f.position(j), eps);
    total += 0.5 * dist * (u - controller.target->desired(i, j)).squaredNorm();
  }
  return total;
}

double PhiTilde(const DirectedGraph& graph, int d, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (const OrientedEdge& rep : graph.orientation()) {
    total += (x.segment(rep.head * d, d) - x.segment(rep.tail * d, d)).norm();
  }
  return total;
}

double Psi(const DirectedGraph& graph, int d, const Eigen::VectorXd& x,
           const Eigen::VectorXd& u_star, double eps) {
  double total = 0.0;
  int k = 0;
  for (const OrientedEdge& rep : graph.orientation()) {
    const auto a = x.segment(rep.tail * d, d);
    const auto b = x.segment(rep.head * d, d);
    const double dist = (b - a).norm();
    total += 0.5 * dist * (Bearing(a, b, eps) - u_star.segment(k * d, d)).squaredNorm();
    ++k;
  }
  return total;
}

}  // namespace bearing_flows
