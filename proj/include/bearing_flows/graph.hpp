#pragma once

#include <Eigen/Dense>

#include <set>
#include <span>
#include <vector>

namespace bearing_flows {

// Vertices are 0-based inside the library. File formats and the CLI use
// 1-based labels and convert at the boundary.
using Vertex = int;

struct Edge {
  Vertex from = 0;
  Vertex to = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Representative of an undirected edge {i, j} with i < j, together with which
// of the two directions are present in the edge set.
struct OrientedEdge {
  Vertex tail = 0;  // i
  Vertex head = 0;  // j
  bool forward = false;   // (i, j) in E
  bool backward = false;  // (j, i) in E
};

/// Immutable directed graph on vertices 0..n-1 without self loops or
/// duplicate edges. An edge (i, j) means that agent i measures the bearing
/// towards agent j, so N_i^+ holds the agents that i senses.
///
/// The orientation lists every undirected pair once as (i, j) with i < j in
/// lexicographic order; incidence matrix columns follow this order.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Throws Error(kInvalidGraph) on self loops, duplicates, or labels out of
  /// range.
  DirectedGraph(int num_vertices, std::vector<Edge> edges);

  /// Both directions of every listed pair.
  static DirectedGraph Undirected(int num_vertices, std::span<const Edge> pairs);

  int num_vertices() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_oriented() const { return static_cast<int>(orientation_.size()); }

  std::span<const Edge> edges() const { return edges_; }
  std::span<const OrientedEdge> orientation() const { return orientation_; }
  std::span<const Vertex> out_neighbors(Vertex v) const { return out_[v]; }
  std::span<const Vertex> in_neighbors(Vertex v) const { return in_[v]; }
  /// N_i^+ union N_i^-.
  std::span<const Vertex> neighbors(Vertex v) const { return nbr_[v]; }

  bool has_edge(Vertex from, Vertex to) const;
  /// Column of the undirected pair {a, b} in the orientation, or -1.
  int oriented_index(Vertex a, Vertex b) const;
  /// True when every edge appears in both directions.
  bool is_undirected() const;
  /// Closure under edge reversal.
  DirectedGraph Symmetrized() const;

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.n_ == b.n_ && a.edge_set_ == b.edge_set_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::set<Edge> edge_set_;
  std::vector<OrientedEdge> orientation_;
  std::vector<std::vector<Vertex>> out_;
  std::vector<std::vector<Vertex>> in_;
  std::vector<std::vector<Vertex>> nbr_;
};

/// A ⊗ I_d.
Eigen::MatrixXd KroneckerIdentity(const Eigen::MatrixXd& a, int d);

struct IncidenceMatrices {
  Eigen::MatrixXi h;       // n x m oriented incidence
  Eigen::MatrixXi h_plus;  // n x m directed oriented incidence

  Eigen::MatrixXd InflatedH(int d) const;
  Eigen::MatrixXd InflatedHPlus(int d) const;
};

IncidenceMatrices Incidence(const DirectedGraph& graph);

struct ConnectivityReport {
  bool has_globally_reachable_node = false;
  std::vector<Vertex> globally_reachable;           // sorted
  std::vector<std::vector<Vertex>> strong_components;  // each sorted, ordered by smallest member
  bool strongly_connected = false;
  bool is_dag = false;
  bool is_single_cycle = false;
  bool weakly_connected = false;
  int weak_components = 0;
};

ConnectivityReport ClassifyConnectivity(const DirectedGraph& graph);

/// Longest path length from each vertex to a sink. Throws Error(kNotADag).
std::vector<int> CascadeDegrees(const DirectedGraph& graph);

}  // namespace bearing_flows
