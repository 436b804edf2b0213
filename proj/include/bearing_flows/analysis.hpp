#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bearing_flows/error.hpp"
#include "bearing_flows/geometry.hpp"

namespace bearing_flows {

/// J = (I_n - 11^T/n) ⊗ I_d, the projector onto the disagreement subspace.
class DisagreementProjector {
 public:
  DisagreementProjector(int n, int d) : n_(n), d_(d) {}

  Eigen::VectorXd Apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd Matrix() const;

 private:
  int n_;
  int d_;
};

/// |H u(x)| over the undirected closure of `graph`, with zero bearings for
/// pairs closer than 1e-12 times the diameter. Scale and translation
/// invariant, so it equals |L(x) x| on the unit disagreement sphere.
double NuObjective(const DirectedGraph& graph, int d, const Eigen::VectorXd& x);

struct NuEstimate {
  double value = 0.0;  // upper bound on the true constant
  int restarts = 0;    // per coincidence pattern
  int patterns = 0;    // coincidence patterns searched
  int local_runs = 0;
  Eigen::VectorXd best_minimizer;  // |J x| = 1
  std::vector<int> best_pattern;   // block label per vertex
};

/// min |H u(x)| subject to |J x| = 1. The zero-bearing convention makes the
/// objective jump at coincident neighbors, so every coincidence pattern (a
/// partition of the vertices into connected blocks, at least two blocks) is
/// searched separately with `restarts` starts of projected gradient descent
/// and backtracking. Patterns are exhaustive for n <= 7; larger graphs use the
/// all-distinct pattern and single-edge contractions.
///
/// Throws kDisconnectedGraph when the undirected closure is disconnected.
NuEstimate EstimateNu(const DirectedGraph& graph, int d, int restarts = 64,
                      std::uint64_t seed = 1);

/// One local descent started from x; coincident neighbors in x fix the
/// coincidence pattern of the run.
double LocalNuDescent(const DirectedGraph& graph, int d, const Eigen::VectorXd& x);

/// phi_tilde(x0) / nu^2. Throws kNonPositiveNu.
double FiniteTimeBound(const Formation& initial, double nu);

enum class HamiltonianMetric {
  kCompleteGeometric,  // any vertex order
  kGraphEdges,         // consecutive vertices joined by a directed edge
};

struct ConjectureBound {
  double cycle_length = 0.0;  // l, longest Hamiltonian cycle at t0
  std::vector<Vertex> cycle;
  int n = 0;
  double bound = 0.0;          // l/(2n) sec^2(pi/n)
  double caption_bound = 0.0;  // l/n sec^2(pi/n), i.e. l/4 sec^2(pi/4) at n = 4
};

/// Throws kNotStronglyConnected, kTooLarge (n > 10), kNoHamiltonianCycle
/// (n < 3, or no directed Hamiltonian cycle under kGraphEdges).
ConjectureBound ComputeConjectureBound(
    const Formation& initial,
    HamiltonianMetric metric = HamiltonianMetric::kCompleteGeometric);

struct SpectrumReport {
  std::vector<std::complex<double>> jacobian;            // of -H+ diag(P/d*) H^T
  std::vector<std::complex<double>> neg_bearing_laplacian;  // of -L_B
  double jacobian_max_real = 0.0;
  double laplacian_max_real = 0.0;
};

/// Eigenvalues sorted by decreasing real part, then imaginary part.
/// Throws kDegenerateFormation.
SpectrumReport JacobianSpectrum(const Formation& target);

struct FermatResult {
  Eigen::VectorXd point;
  double residual = 0.0;  // distance of 0 from the subdifferential
  std::optional<int> focus;  // set when the minimizer is a focus
  int iterations = 0;
};

/// Minimizer y of sum_i |y - p_i| + v_star^T y, i.e. the point where the sum of
/// unit vectors towards the foci equals v_star.
///
/// Throws kInfeasible when |v_star| >= k or there are no foci, and a
/// CollinearDegenerate error carrying the segment endpoint closest to the
/// centroid when the minimizers form a segment.
FermatResult FermatEquilibrium(const std::vector<Eigen::VectorXd>& foci,
                               const Eigen::VectorXd& v_star);

/// Objective of FermatEquilibrium.
double FermatObjective(const std::vector<Eigen::VectorXd>& foci,
                       const Eigen::VectorXd& v_star, const Eigen::VectorXd& y);

class CollinearDegenerateError : public Error {
 public:
  CollinearDegenerateError(Eigen::VectorXd endpoint)
      : Error(ErrorCode::kCollinearDegenerate,
              "collinear foci: the minimizers form a segment"),
        endpoint_(std::move(endpoint)) {}
  const Eigen::VectorXd& endpoint() const { return endpoint_; }

 private:
  Eigen::VectorXd endpoint_;
};

/// max_i | sum_{j in N_i^+} (u_ij - u*_ij) | with u* taken from x_star.
double PerNodeBearingResidual(const DirectedGraph& graph, int d,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& x_star);

struct WitnessCheck {
  double residual = 0.0;
  PairRelation relation = PairRelation::kNone;
  bool valid = false;  // residual < tol and not equivalent at tol
};

WitnessCheck ValidateWitness(const DirectedGraph& graph, int d,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& x_star,
                             double tol);

enum class PersistenceKind { kPersistentUpToSampling, kNonPersistentWitness };

const char* ToString(PersistenceKind kind);

struct PersistenceVerdict {
  PersistenceKind kind = PersistenceKind::kPersistentUpToSampling;
  int trials_run = 0;
  Eigen::VectorXd witness;  // x, empty unless a witness was found
  Eigen::VectorXd target;   // x*
  double residual = 0.0;
  std::string method;
};

/// Samples target formations and searches for a formation with equal per-node
/// bearing sums that is not equivalent to the target: cascade root-finding on
/// DAGs, simulated directed flow plus Levenberg-Marquardt polish otherwise.
PersistenceVerdict PersistenceCheck(const DirectedGraph& graph, int d, int trials,
                                    std::uint64_t seed);

struct CertificateReport {
  std::optional<NuEstimate> nu;
  std::optional<double> t_reach_bound;
  std::optional<ConjectureBound> conjecture;
  std::optional<SpectrumReport> spectrum;
  std::optional<RigidityReport> rigidity;
  std::optional<PersistenceVerdict> persistence;
};

}  // namespace bearing_flows
