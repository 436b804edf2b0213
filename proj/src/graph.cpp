#include "bearing_flows/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <string>

#include "bearing_flows/error.hpp"

namespace bearing_flows {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kNotADag: return "NotADAG";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kMissingTarget: return "MissingTarget";
    case ErrorCode::kGraphMismatch: return "GraphMismatch";
    case ErrorCode::kDegenerateFormation: return "DegenerateFormation";
    case ErrorCode::kTargetMissingEdge: return "TargetMissingEdge";
    case ErrorCode::kInvalidTarget: return "InvalidTarget";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kNonPositiveNu: return "NonPositiveNu";
    case ErrorCode::kNotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::kNoHamiltonianCycle: return "NoHamiltonianCycle";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kCollinearDegenerate: return "CollinearDegenerate";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kUnknownName: return "UnknownName";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

DirectedGraph::DirectedGraph(int num_vertices, std::vector<Edge> edges)
    : n_(num_vertices), edges_(std::move(edges)) {
  if (n_ <= 0) {
    throw Error(ErrorCode::kInvalidGraph, "vertex count must be positive");
  }
  for (const Edge& e : edges_) {
    if (e.from < 0 || e.from >= n_ || e.to < 0 || e.to >= n_) {
      throw Error(ErrorCode::kInvalidGraph,
                  "edge (" + std::to_string(e.from + 1) + "," +
                      std::to_string(e.to + 1) + ") references a missing vertex");
    }
    if (e.from == e.to) {
      throw Error(ErrorCode::kInvalidGraph,
                  "self loop at vertex " + std::to_string(e.from + 1));
    }
    if (!edge_set_.insert(e).second) {
      throw Error(ErrorCode::kInvalidGraph,
                  "duplicate edge (" + std::to_string(e.from + 1) + "," +
                      std::to_string(e.to + 1) + ")");
    }
  }

  std::map<std::pair<Vertex, Vertex>, OrientedEdge> reps;
  for (const Edge& e : edges_) {
    const Vertex a = std::min(e.from, e.to);
    const Vertex b = std::max(e.from, e.to);
    OrientedEdge& rep = reps[{a, b}];
    rep.tail = a;
    rep.head = b;
    if (e.from == a) {
      rep.forward = true;
    } else {
      rep.backward = true;
    }
  }
  orientation_.reserve(reps.size());
  for (const auto& [key, rep] : reps) orientation_.push_back(rep);

  out_.assign(n_, {});
  in_.assign(n_, {});
  nbr_.assign(n_, {});
  for (const Edge& e : edge_set_) {
    out_[e.from].push_back(e.to);
    in_[e.to].push_back(e.from);
  }
  for (const OrientedEdge& rep : orientation_) {
    nbr_[rep.tail].push_back(rep.head);
    nbr_[rep.head].push_back(rep.tail);
  }
  for (auto& list : nbr_) std::sort(list.begin(), list.end());
}

DirectedGraph DirectedGraph::Undirected(int num_vertices,
                                        std::span<const Edge> pairs) {
  std::set<Edge> all;
  for (const Edge& e : pairs) {
    all.insert(e);
    all.insert({e.to, e.from});
  }
  return DirectedGraph(num_vertices, {all.begin(), all.end()});
}

bool DirectedGraph::has_edge(Vertex from, Vertex to) const {
  return edge_set_.contains({from, to});
}

int DirectedGraph::oriented_index(Vertex a, Vertex b) const {
  const Vertex lo = std::min(a, b);
  const Vertex hi = std::max(a, b);
  auto it = std::lower_bound(
      orientation_.begin(), orientation_.end(), std::pair{lo, hi},
      [](const OrientedEdge& rep, const std::pair<Vertex, Vertex>& key) {
        return std::pair{rep.tail, rep.head} < key;
      });
  if (it == orientation_.end() || it->tail != lo || it->head != hi) return -1;
  return static_cast<int>(it - orientation_.begin());
}

bool DirectedGraph::is_undirected() const {
  return std::all_of(orientation_.begin(), orientation_.end(),
                     [](const OrientedEdge& r) { return r.forward && r.backward; });
}

DirectedGraph DirectedGraph::Symmetrized() const {
  return Undirected(n_, edges_);
}

Eigen::MatrixXd KroneckerIdentity(const Eigen::MatrixXd& a, int d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() * d, a.cols() * d);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (a(r, c) == 0.0) continue;
      out.block(r * d, c * d, d, d).diagonal().setConstant(a(r, c));
    }
  }
  return out;
}

Eigen::MatrixXd IncidenceMatrices::InflatedH(int d) const {
  return KroneckerIdentity(h.cast<double>(), d);
}

Eigen::MatrixXd IncidenceMatrices::InflatedHPlus(int d) const {
  return KroneckerIdentity(h_plus.cast<double>(), d);
}

IncidenceMatrices Incidence(const DirectedGraph& graph) {
  const int n = graph.num_vertices();
  const int m = graph.num_oriented();
  IncidenceMatrices out;
  out.h = Eigen::MatrixXi::Zero(n, m);
  out.h_plus = Eigen::MatrixXi::Zero(n, m);
  int k = 0;
  for (const OrientedEdge& rep : graph.orientation()) {
    out.h(rep.tail, k) = 1;
    out.h(rep.head, k) = -1;
    if (rep.forward) out.h_plus(rep.tail, k) = 1;
    if (rep.backward) out.h_plus(rep.head, k) = -1;
    ++k;
  }
  return out;
}

namespace {

// Tarjan's algorithm, recursive; graphs here are desk scale.
std::vector<std::vector<Vertex>> StrongComponents(const DirectedGraph& g) {
  const int n = g.num_vertices();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<Vertex> stack;
  std::vector<std::vector<Vertex>> comps;
  int counter = 0;

  std::function<void(Vertex)> visit = [&](Vertex v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (Vertex w : g.out_neighbors(v)) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<Vertex> comp;
      Vertex w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
  };
  for (Vertex v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  std::sort(comps.begin(), comps.end());
  return comps;
}

// Vertices from which `target` is reachable, via search on reversed edges.
std::vector<bool> ReachesTarget(const DirectedGraph& g, Vertex target) {
  std::vector<bool> seen(g.num_vertices(), false);
  std::vector<Vertex> frontier{target};
  seen[target] = true;
  while (!frontier.empty()) {
    Vertex v = frontier.back();
    frontier.pop_back();
    for (Vertex u : g.in_neighbors(v)) {
      if (!seen[u]) {
        seen[u] = true;
        frontier.push_back(u);
      }
    }
  }
  return seen;
}

}  // namespace

ConnectivityReport ClassifyConnectivity(const DirectedGraph& graph) {
  const int n = graph.num_vertices();
  ConnectivityReport report;
  for (Vertex v = 0; v < n; ++v) {
    auto reach = ReachesTarget(graph, v);
    if (std::all_of(reach.begin(), reach.end(), [](bool b) { return b; })) {
      report.globally_reachable.push_back(v);
    }
  }
  report.has_globally_reachable_node = !report.globally_reachable.empty();
  report.strong_components = StrongComponents(graph);
  report.strongly_connected = report.strong_components.size() == 1;
  report.is_dag = report.strong_components.size() == static_cast<std::size_t>(n);

  // Weak components by union-find over the orientation.
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (const OrientedEdge& rep : graph.orientation()) {
    parent[find(rep.tail)] = find(rep.head);
  }
  int roots = 0;
  for (int i = 0; i < n; ++i) roots += (find(i) == i);
  report.weak_components = roots;
  report.weakly_connected = roots == 1;

  bool unit_degrees = n >= 2 && graph.num_edges() == n;
  for (Vertex v = 0; v < n && unit_degrees; ++v) {
    unit_degrees = graph.out_neighbors(v).size() == 1 &&
                   graph.in_neighbors(v).size() == 1;
  }
  report.is_single_cycle = unit_degrees && report.strongly_connected;
  return report;
}

std::vector<int> CascadeDegrees(const DirectedGraph& graph) {
  const int n = graph.num_vertices();
  // 0 = unvisited, 1 = in progress, 2 = done
  std::vector<int> state(n, 0), degree(n, 0);
  std::function<void(Vertex)> visit = [&](Vertex v) {
    state[v] = 1;
    int best = -1;
    for (Vertex w : graph.out_neighbors(v)) {
      if (state[w] == 1) {
        throw Error(ErrorCode::kNotADag, "directed cycle through vertex " +
                                             std::to_string(w + 1));
      }
      if (state[w] == 0) visit(w);
      best = std::max(best, degree[w]);
    }
    degree[v] = best + 1;
    state[v] = 2;
  };
  for (Vertex v = 0; v < n; ++v) {
    if (state[v] == 0) visit(v);
  }
  return degree;
}

}  // namespace bearing_flows
