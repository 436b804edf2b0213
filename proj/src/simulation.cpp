#include "bearing_flows/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "bearing_flows/error.hpp"

namespace bearing_flows {

void SimConfig::Validate() const {
  if (!(dt > 0.0) || !(t_max > 0.0) || dt >= t_max) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < dt < t_max");
  }
  if (!(stop_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "stop_tol must be positive");
  }
  if (coincidence_eps && !(*coincidence_eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "coincidence threshold must be positive");
  }
  if (record_every < 1) {
    throw Error(ErrorCode::kInvalidArgument, "record_every must be >= 1");
  }
}

std::string_view ToString(StopReason reason) {
  switch (reason) {
    case StopReason::kConverged: return "Converged";
    case StopReason::kTimeLimit: return "TimeLimit";
    case StopReason::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

MonitorRecord MonitorStep(const Formation& f, const Controller& controller,
                          double eps) {
  const int d = f.dim();
  const Eigen::VectorXd u_star = StackedDesired(controller, f.graph(), d);
  MonitorRecord rec;
  rec.phi_tilde = PhiTilde(f.graph(), d, f.x());
  rec.psi = Psi(f.graph(), d, f.x(), u_star, eps);
  rec.v_max_dist = Diameter(f.x(), d);
  rec.grad_norm =
      FieldVelocity(controller.kind, f.graph(), d, f.x(), u_star, eps).norm();
  rec.centroid = Centroid(f.x(), d);
  return rec;
}

namespace {

double FormationResidual(ControllerKind kind, const DirectedGraph& graph, int d,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& u_star,
                         double eps) {
  double worst = 0.0;
  for (Vertex i = 0; i < graph.num_vertices(); ++i) {
    for (Vertex j : SensedNeighbors(kind, graph, i)) {
      const int k = graph.oriented_index(i, j);
      const double sign = i < j ? 1.0 : -1.0;
      const Eigen::VectorXd u = Bearing(x.segment(i * d, d), x.segment(j * d, d), eps);
      worst = std::max(worst, (u - sign * u_star.segment(k * d, d)).norm());
    }
  }
  return worst;
}

// Stepping state for one run. Cluster labels are arbitrary integers; members
// of one cluster always share bit-identical coordinates.
class Stepper {
 public:
  Stepper(const Formation& initial, const Controller& controller,
          const SimConfig& config, double eps, Trajectory& traj)
      : graph_(initial.graph()),
        kind_(controller.kind),
        d_(initial.dim()),
        n_(initial.size()),
        u_star_(StackedDesired(controller, initial.graph(), initial.dim())),
        config_(config),
        eps_(eps),
        traj_(traj),
        cluster_(n_) {
    for (int i = 0; i < n_; ++i) cluster_[i] = i;
    next_label_ = n_;
  }

  const Eigen::VectorXd& u_star() const { return u_star_; }

  Eigen::VectorXd RawVelocity(const Eigen::VectorXd& x) const {
    return FieldVelocity(kind_, graph_, d_, x, u_star_, eps_);
  }

  // Velocity to apply from state x at the current time; may merge and split
  // clusters, which moves merged agents onto a common point.
  Eigen::VectorXd Resolve(Eigen::VectorXd& x) {
    if (!config_.merge_clusters) return RawVelocity(x);
    std::vector<bool> just_split(n_, false);
    Eigen::VectorXd v;
    for (int iter = 0; iter < 4 * n_ + 4; ++iter) {
      v = ClusterVelocities(RawVelocity(x), just_split);
      const Eigen::VectorXd next = x + config_.dt * v;
      bool merged = false;
      for (const OrientedEdge& rep : graph_.orientation()) {
        const Vertex a = rep.tail;
        const Vertex b = rep.head;
        if (cluster_[a] == cluster_[b] || just_split[a] || just_split[b]) continue;
        const Eigen::VectorXd r = Pos(x, b) - Pos(x, a);
        const Eigen::VectorXd r_next = Pos(next, b) - Pos(next, a);
        const bool collide = r.norm() <= eps_ || r.dot(r_next) <= 0.0 ||
                             r_next.norm() <= eps_;
        if (collide) {
          Merge(x, cluster_[a], cluster_[b]);
          merged = true;
          break;
        }
      }
      if (!merged) break;
    }
    return v;
  }

 private:
  Eigen::VectorXd Pos(const Eigen::VectorXd& x, Vertex v) const { return x.segment(v * d_, d_); }

  std::vector<Vertex> Members(int label) const {
    std::vector<Vertex> out;
    for (Vertex i = 0; i < n_; ++i) {
      if (cluster_[i] == label) out.push_back(i);
    }
    return out;
  }

  bool Senses(const std::vector<Vertex>& from, int to_label) const {
    for (Vertex i : from) {
      for (Vertex j : SensedNeighbors(kind_, graph_, i)) {
        if (cluster_[j] == to_label) return true;
      }
    }
    return false;
  }

  void Merge(Eigen::VectorXd& x, int label_a, int label_b) {
    const std::vector<Vertex> a = Members(label_a);
    const std::vector<Vertex> b = Members(label_b);
    const bool a_senses_b = Senses(a, label_b);
    const bool b_senses_a = Senses(b, label_a);
    Eigen::VectorXd point;
    if (a_senses_b && !b_senses_a) {
      point = Pos(x, b.front());
    } else if (b_senses_a && !a_senses_b) {
      point = Pos(x, a.front());
    } else {
      const double na = static_cast<double>(a.size());
      const double nb = static_cast<double>(b.size());
      point = (na * Pos(x, a.front()) + nb * Pos(x, b.front())) / (na + nb);
    }
    const Eigen::VectorXd before = Centroid(x, d_);
    const int label = next_label_++;
    for (Vertex i : a) {
      x.segment(i * d_, d_) = point;
      cluster_[i] = label;
    }
    for (Vertex i : b) {
      x.segment(i * d_, d_) = point;
      cluster_[i] = label;
    }
    ++traj_.merge_events;
    traj_.max_merge_centroid_shift =
        std::max(traj_.max_merge_centroid_shift, (Centroid(x, d_) - before).norm());
  }

  Eigen::VectorXd ClusterVelocities(const Eigen::VectorXd& raw,
                                    std::vector<bool>& just_split) {
    Eigen::VectorXd v = raw;
    std::map<int, std::vector<Vertex>> groups;
    for (Vertex i = 0; i < n_; ++i) groups[cluster_[i]].push_back(i);
    for (auto& [label, members] : groups) {
      while (members.size() > 1) {
        std::vector<int> internal(members.size(), 0);
        for (std::size_t p = 0; p < members.size(); ++p) {
          for (Vertex j : SensedNeighbors(kind_, graph_, members[p])) {
            internal[p] += cluster_[j] == label;
          }
        }
        Eigen::VectorXd w = Eigen::VectorXd::Zero(d_);
        int pinned = 0;
        for (std::size_t p = 0; p < members.size(); ++p) {
          if (internal[p] == 0) {
            w += Pos(raw, members[p]);
            ++pinned;
          }
        }
        if (pinned > 0) {
          w /= pinned;
        } else {
          for (Vertex i : members) w += Pos(raw, i);
          w /= static_cast<double>(members.size());
        }
        // Each in-cluster bearing term can contribute a vector of norm <= 1.
        std::size_t worst = 0;
        double excess = -1.0;
        for (std::size_t p = 0; p < members.size(); ++p) {
          const double e = (w - Pos(raw, members[p])).norm() - internal[p];
          if (e > excess) {
            excess = e;
            worst = p;
          }
        }
        if (excess > 1e-9) {
          const Vertex leaving = members[worst];
          cluster_[leaving] = next_label_++;
          just_split[leaving] = true;
          ++traj_.split_events;
          members.erase(members.begin() + static_cast<std::ptrdiff_t>(worst));
          continue;
        }
        for (Vertex i : members) v.segment(i * d_, d_) = w;
        break;
      }
    }
    return v;
  }

  const DirectedGraph& graph_;
  ControllerKind kind_;
  int d_;
  int n_;
  Eigen::VectorXd u_star_;
  const SimConfig& config_;
  double eps_;
  Trajectory& traj_;
  std::vector<int> cluster_;
  int next_label_ = 0;
};

}  // namespace

double StopMetric(const Formation& f, const Controller& controller, double eps) {
  if (!IsFormation(controller.kind)) return Diameter(f.x(), f.dim());
  return FormationResidual(controller.kind, f.graph(), f.dim(), f.x(),
                           StackedDesired(controller, f.graph(), f.dim()), eps);
}

Trajectory Simulate(const Formation& initial, const Controller& controller,
                    const SimConfig& config) {
  config.Validate();
  controller.Validate(initial.graph());
  const int d = initial.dim();
  const double eps = config.coincidence_eps.value_or(CoincidenceThreshold(initial.x(), d));

  Trajectory traj;
  traj.d = d;
  Stepper stepper(initial, controller, config, eps, traj);
  const DirectedGraph& graph = initial.graph();
  const Eigen::VectorXd& u_star = stepper.u_star();

  auto record = [&](double t, const Eigen::VectorXd& x) {
    MonitorRecord rec;
    rec.phi_tilde = PhiTilde(graph, d, x);
    rec.psi = Psi(graph, d, x, u_star, eps);
    rec.v_max_dist = Diameter(x, d);
    rec.grad_norm = stepper.RawVelocity(x).norm();
    rec.centroid = Centroid(x, d);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.monitors.push_back(std::move(rec));
  };
  auto metric = [&](const Eigen::VectorXd& x) {
    return IsFormation(controller.kind)
               ? FormationResidual(controller.kind, graph, d, x, u_star, eps)
               : Diameter(x, d);
  };

  Eigen::VectorXd x = initial.x();
  const long long max_steps =
      static_cast<long long>(std::ceil(config.t_max / config.dt - 1e-9));
  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    const Eigen::VectorXd v = stepper.Resolve(x);
    const bool converged = metric(x) < config.stop_tol;
    const bool out_of_time = k >= max_steps;
    if (converged || out_of_time || k % config.record_every == 0) record(t, x);
    if (converged) {
      traj.stop_reason = StopReason::kConverged;
      traj.t_converge = t;
      break;
    }
    if (out_of_time) {
      traj.stop_reason = StopReason::kTimeLimit;
      break;
    }
    x += config.dt * v;
    if (!x.allFinite()) {
      traj.stop_reason = StopReason::kNumericalFailure;
      break;
    }
  }
  return traj;
}

void WriteTrajectoryCsv(std::ostream& out, const Trajectory& trajectory) {
  const int d = trajectory.d;
  const int n = trajectory.states.empty()
                    ? 0
                    : static_cast<int>(trajectory.states.front().size()) / d;
  out << "t";
  for (int i = 1; i <= n; ++i) {
    for (int c = 1; c <= d; ++c) out << ",x_" << i << '_' << c;
  }
  out << ",phi_tilde,psi,V,grad_norm";
  for (int c = 1; c <= d; ++c) out << ",cx_" << c;
  out << '\n';

  char buf[64];
  auto put = [&](double value) {
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    out << buf;
  };
  for (std::size_t r = 0; r < trajectory.times.size(); ++r) {
    put(trajectory.times[r]);
    for (Eigen::Index c = 0; c < trajectory.states[r].size(); ++c) {
      out << ',';
      put(trajectory.states[r][c]);
    }
    const MonitorRecord& m = trajectory.monitors[r];
    for (double value : {m.phi_tilde, m.psi, m.v_max_dist, m.grad_norm}) {
      out << ',';
      put(value);
    }
    for (Eigen::Index c = 0; c < m.centroid.size(); ++c) {
      out << ',';
      put(m.centroid[c]);
    }
    out << '\n';
  }
}

}  // namespace bearing_flows
