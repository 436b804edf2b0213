#include <doctest.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bearing_flows/analysis.hpp"
#include "bearing_flows/error.hpp"
#include "bearing_flows/simulation.hpp"
#include "support.hpp"

using namespace bearing_flows;

namespace {

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

const double kSqrt2 = std::sqrt(2.0);

// |H u| for the path 1-2-3 with relative vectors a = x2 - x1, b = x3 - x2.
double PathObjective(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  auto unit = [](const Eigen::Vector2d& v) -> Eigen::Vector2d {
    const double n = v.norm();
    return n > 1e-12 ? Eigen::Vector2d(v / n) : Eigen::Vector2d::Zero();
  };
  const Eigen::Vector2d v1 = unit(a);
  const Eigen::Vector2d v2 = unit(b) - unit(a);
  const Eigen::Vector2d v3 = -unit(b);
  return std::sqrt(v1.squaredNorm() + v2.squaredNorm() + v3.squaredNorm());
}

// Shapes of three points modulo translation, rotation and scale form a
// 2-sphere; sweep it with a = cos(phi) e1, b = sin(phi) (cos t, sin t).
double PathGridMinimum() {
  const int steps = 720;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps / 4; ++i) {
    const double phi = 0.5 * M_PI * i / (steps / 4);
    for (int j = 0; j < steps; ++j) {
      const double t = 2 * M_PI * j / steps;
      best = std::min(best, PathObjective(Eigen::Vector2d(std::cos(phi), 0),
                                          std::sin(phi) * Eigen::Vector2d(std::cos(t),
                                                                          std::sin(t))));
    }
  }
  return best;
}

// -H+ diag(P(u*)/d*) H^T assembled from coordinates without the library's
// matrix code.
Eigen::MatrixXd DirectedJacobianOracle(const DirectedGraph& g, const Eigen::VectorXd& x) {
  const int n = g.num_vertices();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (const Edge& e : g.edges()) {
    // Row block of agent e.from: d/dx of u_ij, i = from, j = to.
    const Eigen::Vector2d r = x.segment(2 * e.to, 2) - x.segment(2 * e.from, 2);
    const double len = r.norm();
    const Eigen::Vector2d u = r / len;
    const Eigen::Matrix2d p = Eigen::Matrix2d::Identity() - u * u.transpose();
    j.block(2 * e.from, 2 * e.to, 2, 2) += p / len;
    j.block(2 * e.from, 2 * e.from, 2, 2) -= p / len;
  }
  return j;
}

std::vector<std::complex<double>> LapackEigenvalues(Eigen::MatrixXd a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  std::vector<double> wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n,
                                        wr.data(), wi.data(), nullptr, 1, nullptr, 1);
  REQUIRE(info == 0);
  std::vector<std::complex<double>> out;
  for (lapack_int k = 0; k < n; ++k) out.emplace_back(wr[k], wi[k]);
  return out;
}

// Greedy nearest matching; returns the largest distance.
double SpectrumDistance(std::vector<std::complex<double>> a,
                        std::vector<std::complex<double>> b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (const auto& z : a) {
    auto it = std::min_element(b.begin(), b.end(), [&](const auto& p, const auto& q) {
      return std::abs(p - z) < std::abs(q - z);
    });
    worst = std::max(worst, std::abs(*it - z));
    b.erase(it);
  }
  return worst;
}

DirectedGraph WitnessGraph() {
  return DirectedGraph(4, {{0, 1}, {0, 2}, {2, 3}, {1, 3}, {0, 3}});
}

}  // namespace

TEST_CASE("disagreement projector") {
  const DisagreementProjector j(3, 2);
  const Eigen::MatrixXd m = j.Matrix();
  CHECK((m * m - m).norm() < 1e-14);
  const Eigen::VectorXd ones = Vec({1, -2, 1, -2, 1, -2});
  CHECK(j.Apply(ones).norm() < 1e-15);
  const Eigen::VectorXd x = Vec({1, 2, 3, 4, 5, 7});
  CHECK((j.Apply(x) - m * x).norm() < 1e-14);
}

TEST_CASE("nu of a single edge") {
  const Edge pair[] = {{0, 1}};
  const NuEstimate nu = EstimateNu(DirectedGraph::Undirected(2, pair), 2, 8, 1);
  CHECK(nu.value == doctest::Approx(kSqrt2).epsilon(1e-12));
  CHECK(std::abs(DisagreementProjector(2, 2).Apply(nu.best_minimizer).norm() - 1.0) < 1e-9);
}

TEST_CASE("nu of the edgeless pair is zero and the graph is rejected") {
  const DirectedGraph empty(2, {});
  CHECK(NuObjective(empty, 2, Vec({0, 0, 1, 0})) == 0.0);
  try {
    EstimateNu(empty, 2, 4, 1);
    FAIL("expected DisconnectedGraph");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDisconnectedGraph);
  }
}

TEST_CASE("nu of the 3-path agrees with a shape-sphere grid") {
  const Edge pairs[] = {{0, 1}, {1, 2}};
  const NuEstimate nu = EstimateNu(DirectedGraph::Undirected(3, pairs), 2, 64, 5);
  const double grid = PathGridMinimum();
  CHECK(std::abs(nu.value - grid) < 1e-3);
  CHECK(grid == doctest::Approx(kSqrt2).epsilon(1e-9));
}

TEST_CASE("nu of the triangle") {
  const Edge pairs[] = {{0, 1}, {1, 2}, {0, 2}};
  const NuEstimate nu = EstimateNu(DirectedGraph::Undirected(3, pairs), 2, 16, 2);
  CHECK(nu.value == doctest::Approx(std::sqrt(6.0)).epsilon(1e-8));
}

TEST_CASE("nu objective and local descent are scale and translation invariant") {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 30; ++t) {
    const int n = 3 + t % 3;
    const DirectedGraph g = testing::RandomConnectedUndirected(n, 0.4, rng);
    const Eigen::VectorXd x = testing::SpreadPositions(n, 2, rng);
    const Eigen::VectorXd shift = testing::RandomPositions(1, 2, rng, 5.0);
    const double beta = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    Eigen::VectorXd y = beta * x;
    for (int i = 0; i < n; ++i) y.segment(2 * i, 2) += shift;
    CHECK(std::abs(NuObjective(g, 2, x) - NuObjective(g, 2, y)) < 1e-12);
    CHECK(std::abs(LocalNuDescent(g, 2, x) - LocalNuDescent(g, 2, y)) < 1e-6);
    // |L x| equals |H u| at the normalized point.
    const Formation f(g, 2, x);
    const double eps = CoincidenceThreshold(x, 2);
    const Eigen::VectorXd lx =
        ComputeFormationMatrices(f, nullptr, eps).inflated_weighted_laplacian * x;
    CHECK(std::abs(lx.norm() - NuObjective(g, 2, x)) < 1e-12);
  }
}

TEST_CASE("nu estimates are seed-deterministic upper bounds of sampled values") {
  std::mt19937_64 rng(62);
  const DirectedGraph g = testing::RandomConnectedUndirected(5, 0.4, rng);
  const NuEstimate a = EstimateNu(g, 2, 16, 9);
  const NuEstimate b = EstimateNu(g, 2, 16, 9);
  CHECK(a.value == b.value);
  CHECK(a.value > 0.0);
  for (int t = 0; t < 500; ++t) {
    CHECK(a.value <= NuObjective(g, 2, testing::RandomPositions(5, 2, rng)) + 1e-9);
  }
}

TEST_CASE("finite-time bound examples") {
  const Edge pair[] = {{0, 1}};
  const DirectedGraph edge = DirectedGraph::Undirected(2, pair);
  CHECK(FiniteTimeBound(Formation(edge, 2, Vec({0, 0, 2, 0})), kSqrt2) ==
        doctest::Approx(1.0));
  CHECK(FiniteTimeBound(Formation(edge, 2, Vec({1, 1, 1, 1})), kSqrt2) == 0.0);
  try {
    FiniteTimeBound(Formation(edge, 2, Vec({0, 0, 2, 0})), 0.0);
    FAIL("expected NonPositiveNu");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonPositiveNu);
  }
}

TEST_CASE("triangle runs finish before the finite-time bound") {
  const Edge pairs[] = {{0, 1}, {1, 2}, {0, 2}};
  const DirectedGraph g = DirectedGraph::Undirected(3, pairs);
  const double nu = EstimateNu(g, 2, 16, 3).value;
  std::mt19937_64 rng(71);
  for (int t = 0; t < 100; ++t) {
    const Formation f(g, 2, testing::RandomPositions(3, 2, rng));
    SimConfig cfg;
    cfg.t_max = 10.0;
    const Trajectory traj = Simulate(f, Controller::Consensus(false), cfg);
    REQUIRE(traj.t_converge);
    CHECK(*traj.t_converge <= FiniteTimeBound(f, nu));
  }
}

TEST_CASE("conjecture bound examples") {
  const DirectedGraph cycle(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const Formation square(cycle, 2, Vec({0, 0, 1, 0, 1, 1, 0, 1}));
  const ConjectureBound edges = ComputeConjectureBound(square, HamiltonianMetric::kGraphEdges);
  CHECK(edges.cycle_length == doctest::Approx(4.0));
  CHECK(edges.bound == doctest::Approx(1.0));
  CHECK(edges.caption_bound == doctest::Approx(2.0));
  CHECK(edges.cycle.size() == 4);

  const ConjectureBound complete = ComputeConjectureBound(square);
  CHECK(complete.cycle_length == doctest::Approx(2 + 2 * kSqrt2));
  CHECK(complete.bound == doctest::Approx((1 + kSqrt2) / 2));

  const DirectedGraph pair(2, {{0, 1}, {1, 0}});
  try {
    ComputeConjectureBound(Formation(pair, 2, Vec({0, 0, 2, 0})));
    FAIL("expected NoHamiltonianCycle");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoHamiltonianCycle);
  }
  try {
    ComputeConjectureBound(Formation(DirectedGraph(3, {{0, 1}, {1, 2}}), 2,
                                     Vec({0, 0, 1, 0, 2, 1})));
    FAIL("expected NotStronglyConnected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotStronglyConnected);
  }
  // Strongly connected but no directed Hamiltonian cycle along edges.
  const DirectedGraph bowtie(5, {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {0, 3}, {3, 4}, {4, 0}});
  try {
    ComputeConjectureBound(Formation(bowtie, 2, Vec({0, 0, 1, 0, 0, 1, -1, 0, 0, -1})),
                           HamiltonianMetric::kGraphEdges);
    FAIL("expected NoHamiltonianCycle");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoHamiltonianCycle);
  }
}

TEST_CASE("conjecture bound beats brute force over all vertex orders") {
  std::mt19937_64 rng(73);
  for (int t = 0; t < 10; ++t) {
    const int n = 3 + t % 4;
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
    const Eigen::VectorXd x = testing::RandomPositions(n, 2, rng);
    const ConjectureBound c = ComputeConjectureBound(Formation(DirectedGraph(n, edges), 2, x));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    double best = 0.0;
    do {
      double len = 0.0;
      for (int i = 0; i < n; ++i) {
        len += (x.segment(2 * order[i], 2) - x.segment(2 * order[(i + 1) % n], 2)).norm();
      }
      best = std::max(best, len);
    } while (std::next_permutation(order.begin(), order.end()));
    CHECK(c.cycle_length == doctest::Approx(best).epsilon(1e-12));
  }
  const DirectedGraph big(11, {});
  try {
    ComputeConjectureBound(Formation(big, 2, Eigen::VectorXd::Zero(22)));
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooLarge);
  }
}

TEST_CASE("the counterexample target has unstable spectra") {
  const DirectedGraph g(4, {{0, 1}, {1, 3}, {3, 2}, {2, 0}, {0, 3}});
  const Formation target(g, 2, Vec({0, 0, 2, 0, 3, -4, 2, -2}));
  const SpectrumReport s = JacobianSpectrum(target);
  CHECK(s.jacobian_max_real > 1e-8);
  CHECK(s.laplacian_max_real > 1e-8);
  CHECK(s.jacobian.size() == 8);
  for (std::size_t k = 1; k < s.jacobian.size(); ++k) {
    CHECK(s.jacobian[k].real() <= s.jacobian[k - 1].real());
  }
  CHECK(SpectrumDistance(s.jacobian, LapackEigenvalues(DirectedJacobianOracle(g, target.x()))) <
        1e-8);
}

TEST_CASE("undirected spectra are real and non-positive") {
  std::mt19937_64 rng(79);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + t % 5;
    const DirectedGraph g = testing::RandomConnectedUndirected(n, 0.5, rng);
    const SpectrumReport s =
        JacobianSpectrum(Formation(g, 2, testing::SpreadPositions(n, 2, rng)));
    for (const auto& z : s.jacobian) {
      CHECK(std::abs(z.imag()) < 1e-10);
      CHECK(z.real() <= 1e-10);
    }
    for (const auto& z : s.neg_bearing_laplacian) {
      CHECK(std::abs(z.imag()) < 1e-10);
      CHECK(z.real() <= 1e-10);
    }
  }
}

TEST_CASE("directed 3-cycle spectrum agrees with LAPACK") {
  const DirectedGraph g(3, {{0, 1}, {1, 2}, {2, 0}});
  const Eigen::VectorXd x = Vec({0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2});
  const SpectrumReport s = JacobianSpectrum(Formation(g, 2, x));
  CHECK(SpectrumDistance(s.jacobian, LapackEigenvalues(DirectedJacobianOracle(g, x))) < 1e-8);
}

TEST_CASE("spectrum rejects coincident target edges") {
  const DirectedGraph g(2, {{0, 1}});
  try {
    JacobianSpectrum(Formation(g, 2, Vec({1, 1, 1, 1})));
    FAIL("expected DegenerateFormation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateFormation);
  }
}

TEST_CASE("fermat equilibrium examples") {
  const std::vector<Eigen::VectorXd> tri{Vec({0, 0}), Vec({1, 0}), Vec({0.5, std::sqrt(3.0) / 2})};
  const FermatResult r = FermatEquilibrium(tri, Vec({0, 0}));
  CHECK((r.point - Vec({0.5, std::sqrt(3.0) / 6})).norm() < 1e-10);
  CHECK(r.residual < 1e-8);

  try {
    FermatEquilibrium({Vec({1, 1})}, Vec({1, 0}));
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasible);
  }
  CHECK_THROWS_AS(FermatEquilibrium({}, Vec({0, 0})), Error);

  const std::vector<Eigen::VectorXd> foci{Vec({0, 0}), Vec({2, 0}), Vec({1, 2})};
  const Eigen::VectorXd v = Vec({0.3, 0.1});
  const FermatResult s = FermatEquilibrium(foci, v);
  CHECK(s.residual < 1e-8);
  CHECK((s.point - Eigen::VectorXd(testing::FermatGridOracle(foci, v))).norm() < 1e-4);
}

TEST_CASE("fermat equilibrium at a focus") {
  // The obtuse vertex is the geometric median.
  const std::vector<Eigen::VectorXd> foci{Vec({0, 0}), Vec({10, 0}), Vec({5, 0.5})};
  const FermatResult r = FermatEquilibrium(foci, Vec({0, 0}));
  REQUIRE(r.focus);
  CHECK(*r.focus == 2);
  CHECK(r.residual < 1e-8);
}

TEST_CASE("collinear foci with a segment of minimizers") {
  const std::vector<Eigen::VectorXd> foci{Vec({0, 0}), Vec({1, 0}), Vec({2, 0}), Vec({10, 0})};
  try {
    FermatEquilibrium(foci, Vec({0, 0}));
    FAIL("expected CollinearDegenerate");
  } catch (const CollinearDegenerateError& e) {
    CHECK(e.code() == ErrorCode::kCollinearDegenerate);
    CHECK((e.endpoint() - Vec({2, 0})).norm() < 1e-12);
  }
  // Three collinear foci have a unique minimizer, the middle one.
  const FermatResult r = FermatEquilibrium({Vec({0, 0}), Vec({1, 1}), Vec({3, 3})}, Vec({0, 0}));
  CHECK((r.point - Vec({1, 1})).norm() < 1e-10);
}

TEST_CASE("fermat solutions beat random probes") {
  std::mt19937_64 rng(83);
  for (int t = 0; t < 20; ++t) {
    const int k = 3 + t % 3;
    std::vector<Eigen::VectorXd> foci;
    for (int i = 0; i < k; ++i) foci.push_back(testing::RandomPositions(1, 2, rng, 2.0));
    Eigen::VectorXd v = testing::RandomPositions(1, 2, rng);
    v *= std::uniform_real_distribution<double>(0.0, 0.8 * k)(rng) / v.norm();
    const FermatResult r = FermatEquilibrium(foci, v);
    CHECK(r.residual < 1e-8);
    const double best = FermatObjective(foci, v, r.point);
    for (int p = 0; p < 1000; ++p) {
      const Eigen::VectorXd probe = r.point + testing::RandomPositions(1, 2, rng, 3.0) *
                                                  std::pow(10.0, -(p % 6));
      CHECK(best <= FermatObjective(foci, v, probe) + 1e-12);
    }
  }
}

TEST_CASE("fermat equilibrium in three dimensions") {
  const std::vector<Eigen::VectorXd> foci{Vec({1, 0, 0}), Vec({0, 1, 0}), Vec({0, 0, 1}),
                                          Vec({-1, -1, -1})};
  const FermatResult r = FermatEquilibrium(foci, Vec({0.2, -0.1, 0.3}));
  CHECK(r.residual < 1e-8);
}

TEST_CASE("the stored witness pair") {
  const Eigen::VectorXd a = Vec({0, 2, 2, 2, 0, 0, 2, 0});
  const Eigen::VectorXd b = Vec({0.1632, 2.25, 3, 2, 0, 0, 3, 0});
  const WitnessCheck w = ValidateWitness(WitnessGraph(), 2, b, a, 1e-2);
  CHECK(w.valid);
  CHECK(w.residual < 1e-2);
  CHECK(w.relation == PairRelation::kNone);
  CHECK(PerNodeBearingResidual(WitnessGraph(), 2, a, a) < 1e-15);
}

TEST_CASE("persistence verdicts") {
  const PersistenceVerdict witness = PersistenceCheck(WitnessGraph(), 2, 5, 1);
  REQUIRE(witness.kind == PersistenceKind::kNonPersistentWitness);
  const WitnessCheck check =
      ValidateWitness(WitnessGraph(), 2, witness.witness, witness.target, 1e-8);
  CHECK(check.valid);
  CHECK(witness.method == "cascade");

  const DirectedGraph cycle(4, {{0, 1}, {1, 3}, {3, 2}, {2, 0}});
  CHECK(PersistenceCheck(cycle, 2, 3, 2).kind == PersistenceKind::kPersistentUpToSampling);
  const Edge pairs[] = {{0, 1}, {1, 2}, {2, 3}, {0, 2}};
  CHECK(PersistenceCheck(DirectedGraph::Undirected(4, pairs), 2, 3, 3).kind ==
        PersistenceKind::kPersistentUpToSampling);
  CHECK(std::string(ToString(PersistenceKind::kNonPersistentWitness)) ==
        "NonPersistentWitness");
}
