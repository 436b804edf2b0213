#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>

#include "bearing_flows/graph.hpp"

namespace bearing_flows {

/// A graph paired with stacked positions x = (x_1, ..., x_n), x_i in R^d.
class Formation {
 public:
  /// Throws Error(kInvalidArgument) if d < 2, the length of x is not d*n, or
  /// an entry is not finite.
  Formation(DirectedGraph graph, int d, Eigen::VectorXd x);

  const DirectedGraph& graph() const { return graph_; }
  int dim() const { return d_; }
  int size() const { return graph_.num_vertices(); }
  const Eigen::VectorXd& x() const { return x_; }
  auto position(Vertex v) const { return x_.segment(v * d_, d_); }

  Formation WithPositions(Eigen::VectorXd x) const {
    return Formation(graph_, d_, std::move(x));
  }

 private:
  DirectedGraph graph_;
  int d_;
  Eigen::VectorXd x_;
};

/// Desired bearings u*_ij for every directed edge of a sensing graph.
/// Stored once per orientation column (tail -> head); the reverse direction
/// is the negation, so antisymmetry holds by construction.
class BearingTarget {
 public:
  /// Bearings of a reference shape. Throws kDegenerateFormation if any edge
  /// of its graph has coincident endpoints.
  static BearingTarget FromFormation(const Formation& shape);

  /// Explicit unit vectors keyed by directed edge. Throws kInvalidTarget if a
  /// vector is not unit within 1e-12, if opposite directions disagree, or if
  /// an edge is not in the graph.
  static BearingTarget FromBearings(const DirectedGraph& graph, int d,
                                    const std::map<Edge, Eigen::VectorXd>& bearings);

  int dim() const { return d_; }
  bool covers(Vertex from, Vertex to) const;
  /// Throws kTargetMissingEdge when the edge is not covered.
  Eigen::VectorXd desired(Vertex from, Vertex to) const;
  /// Throws kTargetMissingEdge unless every directed edge of `graph` is covered.
  void RequireCovers(const DirectedGraph& graph) const;
  /// u* stacked in the orientation order of `graph` (tail -> head), zero for
  /// columns not covered.
  Eigen::VectorXd Stacked(const DirectedGraph& graph) const;

  /// Reference shape the bearings came from, when known.
  const std::optional<Eigen::VectorXd>& shape() const { return shape_; }

 private:
  int d_ = 2;
  // keyed by (min, max) pair; vector points from min to max
  std::map<std::pair<Vertex, Vertex>, Eigen::VectorXd> columns_;
  std::set<Edge> covered_;
  std::optional<Eigen::VectorXd> shape_;
};

double Diameter(const Eigen::VectorXd& x, int d);
Eigen::VectorXd Centroid(const Eigen::VectorXd& x, int d);

/// Distance at or below which two agents count as coincident:
/// 1e-9 times the formation diameter, floored at 1e-12.
double CoincidenceThreshold(const Eigen::VectorXd& x, int d);

/// Unit vector from `from` towards `to`, or the zero vector when the points are
/// within `eps` of each other.
Eigen::VectorXd Bearing(const Eigen::Ref<const Eigen::VectorXd>& from,
                        const Eigen::Ref<const Eigen::VectorXd>& to, double eps);

/// I - v v^T / |v|^2. Throws kZeroVector if |v| <= eps.
Eigen::MatrixXd ProjectionMatrix(const Eigen::Ref<const Eigen::VectorXd>& v,
                                 double eps = 1e-12);

/// Bearings of the orientation columns (tail -> head), stacked into R^{dm}.
Eigen::VectorXd StackedBearings(const Formation& f, double eps);

/// Edge lengths of the orientation columns.
Eigen::VectorXd EdgeLengths(const Formation& f);

class FormationMatrices {
 public:
  Eigen::MatrixXd weighted_laplacian;           // n x n, weights 1/d_k or 0
  Eigen::MatrixXd inflated_weighted_laplacian;  // dn x dn
  Eigen::MatrixXd rigidity;           // du/dx = -diag(P(u_k)/d_k) (H ⊗ I)^T, dm x dn
  Eigen::MatrixXd rigidity_unscaled;  // -diag(P(u_k)) (H ⊗ I)^T

  /// H+ diag(P(u*_k)) H^T (inflated). Throws kMissingTarget without a target.
  const Eigen::MatrixXd& bearing_laplacian() const;
  /// -H+ diag(P(u*_k)/d*_k) H^T (inflated). Throws kMissingTarget.
  const Eigen::MatrixXd& directed_jacobian() const;
  bool has_target() const { return bearing_laplacian_.has_value(); }

 private:
  friend FormationMatrices ComputeFormationMatrices(const Formation&,
                                                    const Formation*, double);
  std::optional<Eigen::MatrixXd> bearing_laplacian_;
  std::optional<Eigen::MatrixXd> directed_jacobian_;
};

/// `target_shape`, when given, must share the graph and dimension of `f`; its
/// bearings and distances define L_B and the directed Jacobian. Throws
/// kGraphMismatch, or kDegenerateFormation if the target has a zero-length edge.
FormationMatrices ComputeFormationMatrices(const Formation& f,
                                           const Formation* target_shape,
                                           double eps);

enum class PairRelation { kIdentical, kCongruent, kSimilar, kEquivalent, kNone };

const char* ToString(PairRelation relation);

/// Strongest relation that holds between two formations on the same graph.
/// Positional tests use tol relative to max(1, diameter); the equivalence
/// test compares bearings of every directed edge with absolute tolerance tol.
/// Throws kGraphMismatch.
PairRelation ClassifyPair(const Formation& f, const Formation& g,
                          double tol = 1e-6);

struct RigidityReport {
  bool rigid = false;
  int rank = 0;
  int required_rank = 0;  // d n - d - 1
  double threshold = 0.0;
  Eigen::VectorXd singular_values;
};

/// Rank test on the bearing rigidity matrix over the undirected edge set.
/// Throws kDegenerateFormation if an edge is not longer than the coincidence
/// threshold.
RigidityReport IsBearingRigid(const Formation& f);

}  // namespace bearing_flows
