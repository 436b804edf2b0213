#include <algorithm>
#include <cmath>
#include <limits>

#include "bearing_flows/analysis.hpp"

namespace bearing_flows {

double FermatObjective(const std::vector<Eigen::VectorXd>& foci,
                       const Eigen::VectorXd& v_star, const Eigen::VectorXd& y) {
  double value = v_star.dot(y);
  for (const auto& p : foci) value += (y - p).norm();
  return value;
}

namespace {

constexpr double kFocusRadius = 1e-8;

struct Local {
  Eigen::VectorXd sum_units;  // sum of (p_i - y)/|p_i - y| over foci away from y
  Eigen::MatrixXd hessian;    // sum of P(v_i)/r_i over the same foci
  int at_y = 0;               // foci within kFocusRadius of y
  double min_r = std::numeric_limits<double>::infinity();
};

Local Evaluate(const std::vector<Eigen::VectorXd>& foci, const Eigen::VectorXd& y,
               double radius) {
  const int d = static_cast<int>(y.size());
  Local out;
  out.sum_units = Eigen::VectorXd::Zero(d);
  out.hessian = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : foci) {
    const Eigen::VectorXd diff = p - y;
    const double r = diff.norm();
    if (r <= radius) {
      ++out.at_y;
      continue;
    }
    out.min_r = std::min(out.min_r, r);
    const Eigen::VectorXd v = diff / r;
    out.sum_units += v;
    out.hessian += (Eigen::MatrixXd::Identity(d, d) - v * v.transpose()) / r;
  }
  return out;
}

// Distance of 0 from the subdifferential at y; foci closer than `radius`
// contribute the unit ball.
double Residual(const Local& loc, const Eigen::VectorXd& v_star) {
  const double gap = (loc.sum_units - v_star).norm();
  return std::max(0.0, gap - loc.at_y);
}

// Minimal-norm subgradient; zero means y is optimal.
Eigen::VectorXd MinimalSubgradient(const Local& loc, const Eigen::VectorXd& v_star) {
  const Eigen::VectorXd w = v_star - loc.sum_units;
  const double norm = w.norm();
  if (norm <= loc.at_y) return Eigen::VectorXd::Zero(w.size());
  return w * (1.0 - loc.at_y / norm);
}

// Segment of minimizers for collinear foci, if the 1D problem is flat
// between two consecutive foci.
void CheckCollinear(const std::vector<Eigen::VectorXd>& foci,
                    const Eigen::VectorXd& v_star) {
  const int k = static_cast<int>(foci.size());
  if (k < 2) return;
  const Eigen::VectorXd origin = foci.front();
  Eigen::VectorXd e;
  double scale = 0.0;
  for (const auto& p : foci) scale = std::max(scale, (p - origin).norm());
  if (scale == 0.0) return;
  for (const auto& p : foci) {
    if ((p - origin).norm() > 0.5 * scale) {
      e = (p - origin).normalized();
      break;
    }
  }
  const double tol = 1e-12;
  std::vector<double> t;
  for (const auto& p : foci) {
    const Eigen::VectorXd rel = p - origin;
    const double along = rel.dot(e);
    if ((rel - along * e).norm() > tol * scale) return;
    t.push_back(along);
  }
  const double s = v_star.dot(e);
  if ((v_star - s * e).norm() > tol) return;
  std::sort(t.begin(), t.end());
  // Slope on the open interval above the m lowest foci is m - (k - m) + s.
  for (int m = 1; m < k; ++m) {
    if (std::abs(2.0 * m - k + s) <= tol && t[m] - t[m - 1] > tol * scale) {
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(origin.size());
      for (const auto& p : foci) centroid += p;
      centroid /= k;
      const double c = (centroid - origin).dot(e);
      const double lo = t[m - 1];
      const double hi = t[m];
      const double pick = std::abs(lo - c) <= std::abs(hi - c) ? lo : hi;
      throw CollinearDegenerateError(origin + pick * e);
    }
  }
}

}  // namespace

FermatResult FermatEquilibrium(const std::vector<Eigen::VectorXd>& foci,
                               const Eigen::VectorXd& v_star) {
  const int k = static_cast<int>(foci.size());
  if (k == 0) throw Error(ErrorCode::kInfeasible, "no foci");
  const int d = static_cast<int>(v_star.size());
  for (const auto& p : foci) {
    if (p.size() != d) throw Error(ErrorCode::kInvalidArgument, "focus dimension mismatch");
  }
  if (!(v_star.norm() < k)) {
    throw Error(ErrorCode::kInfeasible, "|v_star| must be smaller than the number of foci");
  }
  CheckCollinear(foci, v_star);

  FermatResult result;
  for (int j = 0; j < k; ++j) {
    const Local loc = Evaluate(foci, foci[j], 0.0);
    if (Residual(loc, v_star) == 0.0) {
      result.point = foci[j];
      result.focus = j;
      result.residual = 0.0;
      return result;
    }
  }

  auto f = [&](const Eigen::VectorXd& y) { return FermatObjective(foci, v_star, y); };
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  for (const auto& p : foci) y += p;
  y /= k;
  double scale = 0.0;
  for (const auto& p : foci) scale = std::max(scale, (p - y).norm());
  scale = std::max(scale, 1e-300);
  for (const auto& p : foci) {
    if ((p - y).norm() <= kFocusRadius * scale) {
      y += Eigen::VectorXd::Constant(d, 1e-3 * scale);
      break;
    }
  }

  double fy = f(y);
  double lambda = 1e-12;
  for (int it = 0; it < 500; ++it) {
    result.iterations = it + 1;
    const Local loc = Evaluate(foci, y, kFocusRadius * scale);
    const Eigen::VectorXd grad = v_star - loc.sum_units;
    if (loc.at_y == 0 && grad.norm() < 1e-14) break;

    Eigen::VectorXd dir;
    if (loc.at_y > 0) {
      dir = -MinimalSubgradient(loc, v_star);
    } else {
      const Eigen::MatrixXd h =
          loc.hessian + lambda * Eigen::MatrixXd::Identity(d, d);
      dir = -h.ldlt().solve(grad);
      if (!dir.allFinite() || dir.dot(grad) >= 0.0) dir = -grad;
    }
    if (dir.norm() == 0.0) break;

    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-16) {
      const Eigen::VectorXd trial = y + alpha * dir;
      const double ft = f(trial);
      // Close to the optimum the objective stalls in floating point; the
      // residual still tells whether the step helped.
      const bool flat = ft <= fy + 1e-14 * std::max(1.0, std::abs(fy)) &&
                        Residual(Evaluate(foci, trial, 0.0), v_star) <
                            Residual(Evaluate(foci, y, 0.0), v_star);
      if (ft < fy || flat) {
        const double step = (trial - y).norm();
        y = trial;
        fy = ft;
        moved = step > 0.0;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) {
      lambda = std::max(lambda * 10.0, 1e-10);
      if (lambda > 1e6) break;
      continue;
    }
    lambda = std::max(lambda * 0.1, 1e-12);
    if (alpha * dir.norm() < 1e-15 * std::max(1.0, y.norm())) break;
  }

  result.point = y;
  result.residual = Residual(Evaluate(foci, y, 0.0), v_star);
  return result;
}

}  // namespace bearing_flows
