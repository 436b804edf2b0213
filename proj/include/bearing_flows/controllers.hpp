#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>

#include "bearing_flows/geometry.hpp"

namespace bearing_flows {

enum class ControllerKind {
  kConsensusUndirected,
  kConsensusDirected,
  kFormationUndirected,
  kFormationDirected,
};

std::string_view ToString(ControllerKind kind);
bool IsFormation(ControllerKind kind);
bool IsUndirected(ControllerKind kind);

/// A control law and, for formation kinds, its desired bearings.
struct Controller {
  ControllerKind kind = ControllerKind::kConsensusUndirected;
  std::optional<BearingTarget> target;

  static Controller Consensus(bool directed);
  static Controller FormationControl(bool directed, BearingTarget target);

  /// Throws kMissingTarget / kTargetMissingEdge when a formation kind lacks
  /// bearings for an edge it senses.
  void Validate(const DirectedGraph& graph) const;
};

/// Agents sensed by `v` under the given kind: N_v^+ for directed kinds, the
/// undirected neighborhood otherwise.
std::span<const Vertex> SensedNeighbors(ControllerKind kind,
                                        const DirectedGraph& graph, Vertex v);

/// x_dot_i = sum over sensed j of (u_ij - u*_ij), with u* = 0 for consensus
/// and u_ij = 0 when d_ij <= eps.
Eigen::VectorXd Velocity(const Controller& controller, const DirectedGraph& graph,
                         int d, const Eigen::VectorXd& x, double eps);

/// Same field with u* already stacked per orientation column (see
/// StackedDesired); skips target validation.
Eigen::VectorXd FieldVelocity(ControllerKind kind, const DirectedGraph& graph, int d,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u_star,
                              double eps);

/// Validated u* stacked per orientation column; zeros for consensus kinds.
Eigen::VectorXd StackedDesired(const Controller& controller,
                               const DirectedGraph& graph, int d);

inline Eigen::VectorXd Velocity(const Controller& controller, const Formation& f,
                                double eps) {
  return Velocity(controller, f.graph(), f.dim(), f.x(), eps);
}

/// Aggregate form H(u - u*) for undirected kinds, H+(u - u*) otherwise,
/// assembled from incidence matrices. Used as an independent cross-check of
/// the per-agent sums.
Eigen::VectorXd AggregateVelocity(const Controller& controller, const Formation& f,
                                  double eps);

/// phi_i = sum_{j in N_i^+} d_ij for consensus kinds and
/// psi_i = sum_{j in N_i^+} 1/2 d_ij |u_ij - u*_ij|^2 for formation kinds.
double PrivatePotential(const Controller& controller, const Formation& f, Vertex i,
                        double eps);

/// Nonsmooth sum of edge lengths, every undirected pair once.
double PhiTilde(const DirectedGraph& graph, int d, const Eigen::VectorXd& x);

/// sum over undirected pairs of 1/2 d |u - u*|^2; `u_star` stacked as in
/// BearingTarget::Stacked (zero for consensus).
double Psi(const DirectedGraph& graph, int d, const Eigen::VectorXd& x,
           const Eigen::VectorXd& u_star, double eps);

}  // namespace bearing_flows
