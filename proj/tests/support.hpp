#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bearing_flows/analysis.hpp"
#include "bearing_flows/controllers.hpp"
#include "bearing_flows/graph.hpp"

namespace bearing_flows::testing {

inline Eigen::VectorXd RandomPositions(int n, int d, std::mt19937_64& rng,
                                       double half_width = 1.0) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Eigen::VectorXd x(n * d);
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = u(rng);
  return x;
}

// Each ordered pair is an edge with probability p.
inline DirectedGraph RandomDigraph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && coin(rng)) edges.push_back({i, j});
    }
  }
  return DirectedGraph(n, edges);
}

// Random spanning tree plus extra pairs with probability p, both directions.
inline DirectedGraph RandomConnectedUndirected(int n, double p, std::mt19937_64& rng) {
  std::vector<Edge> pairs;
  std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
  for (int v = 1; v < n; ++v) {
    const int w = std::uniform_int_distribution<int>(0, v - 1)(rng);
    pairs.push_back({w, v});
    used[w][v] = used[v][w] = true;
  }
  std::bernoulli_distribution coin(p);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!used[i][j] && coin(rng)) pairs.push_back({i, j});
    }
  }
  return DirectedGraph::Undirected(n, pairs);
}

// Random DAG: edges only from higher to lower label, then labels shuffled.
inline DirectedGraph RandomDag(int n, double p, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (coin(rng)) edges.push_back({perm[i], perm[j]});
    }
  }
  return DirectedGraph(n, edges);
}

// Minimum distance over all vertex pairs.
inline double MinPairDistance(const Eigen::VectorXd& x, int d) {
  const int n = static_cast<int>(x.size()) / d;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      best = std::min(best, (x.segment(i * d, d) - x.segment(j * d, d)).norm());
    }
  }
  return best;
}

// Positions with every pair at least `min_dist` apart.
inline Eigen::VectorXd SpreadPositions(int n, int d, std::mt19937_64& rng,
                                       double min_dist = 0.05) {
  for (;;) {
    Eigen::VectorXd x = RandomPositions(n, d, rng);
    if (n < 2 || MinPairDistance(x, d) >= min_dist) return x;
  }
}

// Largest deviation between an undirected controller's field and the central
// difference of its potential (phi_tilde for consensus, psi for formation).
inline double GradientCheckError(const Controller& controller, const Formation& f,
                                 double h = 1e-6) {
  const int d = f.dim();
  const DirectedGraph& g = f.graph();
  const double eps = 1e-12;
  const Eigen::VectorXd u_star = StackedDesired(controller, g, d);
  auto potential = [&](const Eigen::VectorXd& y) {
    return IsFormation(controller.kind) ? Psi(g, d, y, u_star, eps) : PhiTilde(g, d, y);
  };
  const Eigen::VectorXd v = Velocity(controller, f, eps);
  double worst = 0.0;
  Eigen::VectorXd y = f.x();
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double keep = y[k];
    y[k] = keep + h;
    const double up = potential(y);
    y[k] = keep - h;
    const double down = potential(y);
    y[k] = keep;
    worst = std::max(worst, std::abs(-(up - down) / (2 * h) - v[k]));
  }
  return worst;
}

// Planar minimizer of FermatObjective by a grid scan followed by compass
// search; slow but independent of the solver.
inline Eigen::Vector2d FermatGridOracle(const std::vector<Eigen::VectorXd>& foci,
                                        const Eigen::VectorXd& v_star) {
  Eigen::Vector2d lo = foci.front(), hi = foci.front();
  for (const auto& p : foci) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  }
  const double span = std::max(1.0, (hi - lo).maxCoeff());
  lo.array() -= 3 * span;
  hi.array() += 3 * span;
  const int steps = 400;
  Eigen::Vector2d best = lo;
  double best_value = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; b <= steps; ++b) {
      const Eigen::Vector2d y = lo + Eigen::Vector2d((hi - lo).x() * a / steps,
                                                     (hi - lo).y() * b / steps);
      const double value = FermatObjective(foci, v_star, y);
      if (value < best_value) {
        best_value = value;
        best = y;
      }
    }
  }
  double h = (hi - lo).maxCoeff() / steps;
  const Eigen::Vector2d dirs[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                  {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  while (h > 1e-11) {
    bool moved = false;
    for (const auto& dir : dirs) {
      const Eigen::Vector2d y = best + h * dir;
      const double value = FermatObjective(foci, v_star, y);
      if (value < best_value) {
        best_value = value;
        best = y;
        moved = true;
      }
    }
    if (!moved) h *= 0.5;
  }
  return best;
}

}  // namespace bearing_flows::testing
