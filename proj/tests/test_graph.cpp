#include <doctest.h>

#include <functional>
#include <random>

#include "bearing_flows/error.hpp"
#include "bearing_flows/graph.hpp"
#include "support.hpp"

using namespace bearing_flows;

namespace {

// Reachability by repeated squaring of the adjacency relation.
std::vector<std::vector<bool>> TransitiveClosure(const DirectedGraph& g) {
  const int n = g.num_vertices();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) r[i][i] = true;
  for (const Edge& e : g.edges()) r[e.from][e.to] = true;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (r[i][k] && r[k][j]) r[i][j] = true;
      }
    }
  }
  return r;
}

// Longest path to a sink by trying every simple path.
int LongestPathBrute(const DirectedGraph& g, Vertex v, std::vector<bool>& on_path) {
  int best = 0;
  on_path[v] = true;
  for (Vertex w : g.out_neighbors(v)) {
    if (!on_path[w]) best = std::max(best, 1 + LongestPathBrute(g, w, on_path));
  }
  on_path[v] = false;
  return best;
}

}  // namespace

TEST_CASE("construction rejects invalid edge lists") {
  CHECK_THROWS_AS(DirectedGraph(3, {{0, 0}}), Error);
  CHECK_THROWS_AS(DirectedGraph(3, {{0, 1}, {0, 1}}), Error);
  CHECK_THROWS_AS(DirectedGraph(3, {{0, 3}}), Error);
  CHECK_THROWS_AS(DirectedGraph(0, {}), Error);
  try {
    DirectedGraph(2, {{1, 1}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidGraph);
  }
}

TEST_CASE("orientation lists each pair once, lexicographically") {
  const DirectedGraph g(4, {{3, 0}, {0, 1}, {1, 0}, {2, 1}});
  const auto o = g.orientation();
  REQUIRE(o.size() == 3);
  CHECK(o[0].tail == 0);
  CHECK(o[0].head == 1);
  CHECK(o[0].forward);
  CHECK(o[0].backward);
  CHECK(o[1].tail == 0);
  CHECK(o[1].head == 3);
  CHECK(!o[1].forward);
  CHECK(o[1].backward);
  CHECK(o[2].tail == 1);
  CHECK(o[2].head == 2);
  CHECK(g.oriented_index(3, 0) == 1);
  CHECK(g.oriented_index(2, 3) == -1);
}

TEST_CASE("incidence of a single undirected edge") {
  const Edge pair[] = {{0, 1}};
  const IncidenceMatrices m = Incidence(DirectedGraph::Undirected(2, pair));
  CHECK(m.h(0, 0) == 1);
  CHECK(m.h(1, 0) == -1);
  CHECK(m.h_plus == m.h);
}

TEST_CASE("incidence of a single directed edge") {
  const IncidenceMatrices m = Incidence(DirectedGraph(2, {{0, 1}}));
  CHECK(m.h(0, 0) == 1);
  CHECK(m.h(1, 0) == -1);
  CHECK(m.h_plus(0, 0) == 1);
  CHECK(m.h_plus(1, 0) == 0);
}

TEST_CASE("H+ row sums are out-degrees on the witness graph") {
  const DirectedGraph g(4, {{0, 1}, {0, 2}, {2, 3}, {1, 3}, {0, 3}});
  const IncidenceMatrices m = Incidence(g);
  const Eigen::VectorXi sums = m.h_plus.rowwise().sum();
  CHECK(sums(0) == 3);
  CHECK(sums(1) == 1);
  CHECK(sums(2) == 1);
  CHECK(sums(3) == 0);
}

TEST_CASE("incidence invariants on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 7;
    const DirectedGraph g = testing::RandomDigraph(n, 0.3, rng);
    const IncidenceMatrices m = Incidence(g);
    for (int k = 0; k < m.h.cols(); ++k) {
      CHECK(m.h.col(k).sum() == 0);
      CHECK(m.h.col(k).cwiseAbs().sum() == 2);
      // H+ column is H restricted to the endpoints owning a directed edge.
      const OrientedEdge& rep = g.orientation()[k];
      CHECK(m.h_plus(rep.tail, k) == (rep.forward ? 1 : 0));
      CHECK(m.h_plus(rep.head, k) == (rep.backward ? -1 : 0));
      CHECK(m.h_plus.col(k).cwiseAbs().sum() <= 2);
    }
    const ConnectivityReport c = ClassifyConnectivity(g);
    if (m.h.cols() > 0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(m.h.cast<double>());
      CHECK(lu.rank() == n - c.weak_components);
    } else {
      CHECK(c.weak_components == n);
    }
    const DirectedGraph sym = g.Symmetrized();
    CHECK(sym.is_undirected());
    const IncidenceMatrices ms = Incidence(sym);
    CHECK(ms.h_plus == ms.h);
    // Inflation is H ⊗ I_d.
    const Eigen::MatrixXd inflated = m.InflatedH(2);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < m.h.cols(); ++k) {
        CHECK(inflated(2 * i, 2 * k) == m.h(i, k));
        CHECK(inflated(2 * i + 1, 2 * k + 1) == m.h(i, k));
        CHECK(inflated(2 * i, 2 * k + 1) == 0.0);
      }
    }
  }
}

TEST_CASE("connectivity examples") {
  SUBCASE("directed path 3 -> 2 -> 1") {
    const ConnectivityReport c = ClassifyConnectivity(DirectedGraph(3, {{2, 1}, {1, 0}}));
    CHECK(c.has_globally_reachable_node);
    CHECK(c.globally_reachable == std::vector<Vertex>{0});
    CHECK(c.is_dag);
    CHECK(!c.strongly_connected);
  }
  SUBCASE("two isolated vertices") {
    const ConnectivityReport c = ClassifyConnectivity(DirectedGraph(2, {}));
    CHECK(!c.has_globally_reachable_node);
    CHECK(!c.weakly_connected);
    CHECK(c.weak_components == 2);
  }
  SUBCASE("directed cycle 1 -> 2 -> 4 -> 3 -> 1") {
    const ConnectivityReport c =
        ClassifyConnectivity(DirectedGraph(4, {{0, 1}, {1, 3}, {3, 2}, {2, 0}}));
    CHECK(c.strongly_connected);
    CHECK(c.is_single_cycle);
    CHECK(c.globally_reachable.size() == 4);
    CHECK(!c.is_dag);
  }
  SUBCASE("a cycle with a chord is not a single cycle") {
    const ConnectivityReport c =
        ClassifyConnectivity(DirectedGraph(4, {{0, 1}, {1, 3}, {3, 2}, {2, 0}, {0, 3}}));
    CHECK(c.strongly_connected);
    CHECK(!c.is_single_cycle);
  }
}

TEST_CASE("connectivity agrees with a transitive-closure oracle") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    const int n = 1 + trial % 6;
    const double p = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    const DirectedGraph g = testing::RandomDigraph(n, p, rng);
    const ConnectivityReport c = ClassifyConnectivity(g);
    const auto r = TransitiveClosure(g);

    std::vector<Vertex> global;
    for (int v = 0; v < n; ++v) {
      bool all = true;
      for (int u = 0; u < n; ++u) all = all && r[u][v];
      if (all) global.push_back(v);
    }
    CHECK(c.globally_reachable == global);
    CHECK(c.has_globally_reachable_node == !global.empty());

    bool strong = true;
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) strong = strong && r[u][v];
    }
    CHECK(c.strongly_connected == strong);

    // Strong components: u ~ v iff mutually reachable.
    std::vector<std::vector<Vertex>> comps;
    std::vector<bool> placed(n, false);
    for (int u = 0; u < n; ++u) {
      if (placed[u]) continue;
      std::vector<Vertex> comp;
      for (int v = 0; v < n; ++v) {
        if (r[u][v] && r[v][u]) {
          comp.push_back(v);
          placed[v] = true;
        }
      }
      comps.push_back(comp);
    }
    CHECK(c.strong_components == comps);

    bool acyclic = true;
    for (int u = 0; u < n; ++u) {
      for (Vertex w : g.out_neighbors(u)) acyclic = acyclic && !r[w][u];
    }
    CHECK(c.is_dag == acyclic);

    // Weak connectivity through the closure of the symmetrized graph.
    const auto rs = TransitiveClosure(g.Symmetrized());
    bool weak = true;
    for (int v = 0; v < n; ++v) weak = weak && rs[0][v];
    CHECK(c.weakly_connected == weak);
    ++checked;
  }
  CHECK(checked >= 1000);
}

TEST_CASE("cascade degrees") {
  SUBCASE("single edge 2 -> 1") {
    const auto deg = CascadeDegrees(DirectedGraph(2, {{1, 0}}));
    CHECK(deg == std::vector<int>{0, 1});
  }
  SUBCASE("3 -> 2 -> 1 plus 3 -> 1") {
    const auto deg = CascadeDegrees(DirectedGraph(3, {{2, 1}, {1, 0}, {2, 0}}));
    CHECK(deg == std::vector<int>{0, 1, 2});
  }
  SUBCASE("a directed cycle is rejected") {
    try {
      CascadeDegrees(DirectedGraph(3, {{0, 1}, {1, 2}, {2, 0}}));
      FAIL("expected NotADAG");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotADag);
    }
  }
}

TEST_CASE("cascade degrees match brute-force longest paths") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + trial % 8;
    const DirectedGraph g = testing::RandomDag(n, 0.4, rng);
    const auto deg = CascadeDegrees(g);
    std::vector<bool> on_path(n, false);
    for (int v = 0; v < n; ++v) {
      CHECK(deg[v] == LongestPathBrute(g, v, on_path));
      CHECK((deg[v] == 0) == g.out_neighbors(v).empty());
    }
  }
}

TEST_CASE("symmetrized graphs are undirected and equal to Undirected()") {
  const DirectedGraph g(3, {{0, 1}, {2, 1}});
  const Edge pairs[] = {{0, 1}, {1, 2}};
  CHECK(g.Symmetrized() == DirectedGraph::Undirected(3, pairs));
  CHECK(!g.is_undirected());
  CHECK(g.neighbors(1).size() == 2);
  CHECK(g.out_neighbors(1).empty());
  CHECK(g.in_neighbors(1).size() == 2);
}
