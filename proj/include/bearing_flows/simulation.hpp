#pragma once

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "bearing_flows/controllers.hpp"
#include "bearing_flows/geometry.hpp"

namespace bearing_flows {

struct SimConfig {
  double dt = 1e-3;
  double t_max = 10.0;
  double stop_tol = 1e-6;
  /// Coincidence threshold; computed from the initial formation when unset.
  std::optional<double> coincidence_eps;
  bool merge_clusters = true;
  int record_every = 1;

  /// Throws kInvalidArgument when dt >= t_max or a tolerance is not positive.
  void Validate() const;
};

enum class StopReason { kConverged, kTimeLimit, kNumericalFailure };

std::string_view ToString(StopReason reason);

struct MonitorRecord {
  double phi_tilde = 0.0;
  double psi = 0.0;
  double v_max_dist = 0.0;
  double grad_norm = 0.0;  // |H+(u - u*)| of the raw field
  Eigen::VectorXd centroid;
};

/// phi_tilde, psi (u* = 0 for consensus), the all-pairs diameter V, the norm
/// of the controller field and the centroid.
MonitorRecord MonitorStep(const Formation& f, const Controller& controller,
                          double eps);

/// max over sensed edges of |u_ij - u*_ij| for formation kinds, the diameter
/// V for consensus kinds.
double StopMetric(const Formation& f, const Controller& controller, double eps);

struct Trajectory {
  int d = 2;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<MonitorRecord> monitors;
  StopReason stop_reason = StopReason::kTimeLimit;
  std::optional<double> t_converge;
  int merge_events = 0;
  int split_events = 0;
  /// Largest centroid displacement caused by a single merge.
  double max_merge_centroid_shift = 0.0;
};

/// Explicit Euler integration of the closed loop. With merge_clusters, an
/// adjacent pair whose next step would overshoot (the relative position turns
/// by 90 degrees or more, or lands within eps) is collapsed into one cluster.
/// A cluster advances with a common velocity: the mean over members that
/// sense no other member when such members exist, the mean over all members
/// otherwise. A member whose velocity cannot be matched by its in-cluster
/// bearing terms (each of norm at most one) leaves the cluster.
///
/// Merged positions are the size-weighted mean when both clusters sense each
/// other, and the sensed cluster's position when only one side senses.
Trajectory Simulate(const Formation& initial, const Controller& controller,
                    const SimConfig& config);

/// Header `t,x_1_1,...,x_n_d,phi_tilde,psi,V,grad_norm,cx_1,...,cx_d`.
void WriteTrajectoryCsv(std::ostream& out, const Trajectory& trajectory);

}  // namespace bearing_flows
