#include "bearing_flows/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bearing_flows/error.hpp"

namespace bearing_flows {

namespace {

std::string EdgeLabel(Vertex a, Vertex b) {
  return "(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
}

}  // namespace

Formation::Formation(DirectedGraph graph, int d, Eigen::VectorXd x)
    : graph_(std::move(graph)), d_(d), x_(std::move(x)) {
  if (d_ < 2) {
    throw Error(ErrorCode::kInvalidArgument, "workspace dimension must be >= 2");
  }
  if (x_.size() != static_cast<Eigen::Index>(d_) * graph_.num_vertices()) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(d_ * graph_.num_vertices()) +
                    " coordinates, got " + std::to_string(x_.size()));
  }
  if (!x_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "positions must be finite");
  }
}

BearingTarget BearingTarget::FromFormation(const Formation& shape) {
  BearingTarget target;
  target.d_ = shape.dim();
  for (const OrientedEdge& rep : shape.graph().orientation()) {
    Eigen::VectorXd r = shape.position(rep.head) - shape.position(rep.tail);
    const double len = r.norm();
    if (len <= CoincidenceThreshold(shape.x(), shape.dim())) {
      throw Error(ErrorCode::kDegenerateFormation,
                  "target edge " + EdgeLabel(rep.tail, rep.head) + " has zero length");
    }
    target.columns_[{rep.tail, rep.head}] = r / len;
  }
  for (const Edge& e : shape.graph().edges()) target.covered_.insert(e);
  target.shape_ = shape.x();
  return target;
}

BearingTarget BearingTarget::FromBearings(
    const DirectedGraph& graph, int d,
    const std::map<Edge, Eigen::VectorXd>& bearings) {
  BearingTarget target;
  target.d_ = d;
  for (const auto& [edge, u] : bearings) {
    if (!graph.has_edge(edge.from, edge.to)) {
      throw Error(ErrorCode::kInvalidTarget,
                  "bearing given for edge " + EdgeLabel(edge.from, edge.to) +
                      " which is not in the graph");
    }
    if (u.size() != d || std::abs(u.norm() - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidTarget,
                  "bearing of edge " + EdgeLabel(edge.from, edge.to) +
                      " is not a unit vector in R^" + std::to_string(d));
    }
    const bool forward = edge.from < edge.to;
    const std::pair key{std::min(edge.from, edge.to), std::max(edge.from, edge.to)};
    Eigen::VectorXd column = forward ? u : Eigen::VectorXd(-u);
    auto [it, inserted] = target.columns_.emplace(key, column);
    if (!inserted && (it->second - column).norm() > 1e-12) {
      throw Error(ErrorCode::kInvalidTarget,
                  "bearings of " + EdgeLabel(edge.from, edge.to) +
                      " and its reverse are not opposite");
    }
    target.covered_.insert(edge);
  }
  return target;
}

bool BearingTarget::covers(Vertex from, Vertex to) const {
  return covered_.contains({from, to});
}

Eigen::VectorXd BearingTarget::desired(Vertex from, Vertex to) const {
  if (!covers(from, to)) {
    throw Error(ErrorCode::kTargetMissingEdge,
                "no desired bearing for edge " + EdgeLabel(from, to));
  }
  const auto& column = columns_.at({std::min(from, to), std::max(from, to)});
  return from < to ? column : Eigen::VectorXd(-column);
}

void BearingTarget::RequireCovers(const DirectedGraph& graph) const {
  for (const Edge& e : graph.edges()) {
    if (!covers(e.from, e.to)) {
      throw Error(ErrorCode::kTargetMissingEdge,
                  "no desired bearing for edge " + EdgeLabel(e.from, e.to));
    }
  }
}

Eigen::VectorXd BearingTarget::Stacked(const DirectedGraph& graph) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d_ * graph.num_oriented());
  int k = 0;
  for (const OrientedEdge& rep : graph.orientation()) {
    auto it = columns_.find({rep.tail, rep.head});
    if (it != columns_.end()) out.segment(k * d_, d_) = it->second;
    ++k;
  }
  return out;
}

double Diameter(const Eigen::VectorXd& x, int d) {
  const Eigen::Index n = x.size() / d;
  double best = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      best = std::max(best, (x.segment(j * d, d) - x.segment(i * d, d)).norm());
    }
  }
  return best;
}

Eigen::VectorXd Centroid(const Eigen::VectorXd& x, int d) {
  const Eigen::Index n = x.size() / d;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) c += x.segment(i * d, d);
  return c / static_cast<double>(n);
}

double CoincidenceThreshold(const Eigen::VectorXd& x, int d) {
  return std::max(1e-9 * Diameter(x, d), 1e-12);
}

Eigen::VectorXd Bearing(const Eigen::Ref<const Eigen::VectorXd>& from,
                        const Eigen::Ref<const Eigen::VectorXd>& to, double eps) {
  Eigen::VectorXd r = to - from;
  const double len = r.norm();
  if (len <= eps) return Eigen::VectorXd::Zero(r.size());
  return r / len;
}

Eigen::MatrixXd ProjectionMatrix(const Eigen::Ref<const Eigen::VectorXd>& v,
                                 double eps) {
  const double len = v.norm();
  if (len <= eps) {
    throw Error(ErrorCode::kZeroVector, "projection onto the zero vector");
  }
  const Eigen::VectorXd u = v / len;
  return Eigen::MatrixXd::Identity(v.size(), v.size()) - u * u.transpose();
}

Eigen::VectorXd StackedBearings(const Formation& f, double eps) {
  const int d = f.dim();
  Eigen::VectorXd u(d * f.graph().num_oriented());
  int k = 0;
  for (const OrientedEdge& rep : f.graph().orientation()) {
    u.segment(k * d, d) = Bearing(f.position(rep.tail), f.position(rep.head), eps);
    ++k;
  }
  return u;
}

Eigen::VectorXd EdgeLengths(const Formation& f) {
  Eigen::VectorXd lengths(f.graph().num_oriented());
  int k = 0;
  for (const OrientedEdge& rep : f.graph().orientation()) {
    lengths[k++] = (f.position(rep.head) - f.position(rep.tail)).norm();
  }
  return lengths;
}

const Eigen::MatrixXd& FormationMatrices::bearing_laplacian() const {
  if (!bearing_laplacian_) {
    throw Error(ErrorCode::kMissingTarget, "bearing Laplacian needs a target");
  }
  return *bearing_laplacian_;
}

const Eigen::MatrixXd& FormationMatrices::directed_jacobian() const {
  if (!directed_jacobian_) {
    throw Error(ErrorCode::kMissingTarget, "directed Jacobian needs a target");
  }
  return *directed_jacobian_;
}

namespace {

// Block diagonal diag(scale_k * P(u_k)) over the orientation columns; columns
// with zero length contribute a zero block.
Eigen::MatrixXd ProjectorBlocks(const Formation& f, double eps, bool scaled) {
  const int d = f.dim();
  const int m = f.graph().num_oriented();
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(d * m, d * m);
  int k = 0;
  for (const OrientedEdge& rep : f.graph().orientation()) {
    Eigen::VectorXd r = f.position(rep.head) - f.position(rep.tail);
    const double len = r.norm();
    if (len > eps) {
      blocks.block(k * d, k * d, d, d) =
          ProjectionMatrix(r) * (scaled ? 1.0 / len : 1.0);
    }
    ++k;
  }
  return blocks;
}

}  // namespace

FormationMatrices ComputeFormationMatrices(const Formation& f,
                                           const Formation* target_shape,
                                           double eps) {
  const int d = f.dim();
  const int m = f.graph().num_oriented();
  const IncidenceMatrices inc = Incidence(f.graph());
  const Eigen::MatrixXd h = inc.h.cast<double>();
  const Eigen::MatrixXd h_big = inc.InflatedH(d);

  FormationMatrices out;
  const Eigen::VectorXd lengths = EdgeLengths(f);
  Eigen::VectorXd weights(m);
  for (int k = 0; k < m; ++k) weights[k] = lengths[k] > eps ? 1.0 / lengths[k] : 0.0;
  out.weighted_laplacian = h * weights.asDiagonal() * h.transpose();
  out.inflated_weighted_laplacian = KroneckerIdentity(out.weighted_laplacian, d);
  out.rigidity = -ProjectorBlocks(f, eps, true) * h_big.transpose();
  out.rigidity_unscaled = -ProjectorBlocks(f, eps, false) * h_big.transpose();

  if (target_shape != nullptr) {
    if (!(target_shape->graph() == f.graph()) || target_shape->dim() != d) {
      throw Error(ErrorCode::kGraphMismatch,
                  "target shape must share the graph and dimension");
    }
    const double target_eps = CoincidenceThreshold(target_shape->x(), d);
    if (EdgeLengths(*target_shape).minCoeff() <= target_eps) {
      throw Error(ErrorCode::kDegenerateFormation,
                  "target shape has a zero-length edge");
    }
    const Eigen::MatrixXd h_plus_big = inc.InflatedHPlus(d);
    out.bearing_laplacian_ = h_plus_big *
                             ProjectorBlocks(*target_shape, target_eps, false) *
                             h_big.transpose();
    out.directed_jacobian_ = -h_plus_big *
                             ProjectorBlocks(*target_shape, target_eps, true) *
                             h_big.transpose();
  }
  return out;
}

const char* ToString(PairRelation relation) {
  switch (relation) {
    case PairRelation::kIdentical: return "Identical";
    case PairRelation::kCongruent: return "Congruent";
    case PairRelation::kSimilar: return "Similar";
    case PairRelation::kEquivalent: return "Equivalent";
    case PairRelation::kNone: return "None";
  }
  return "None";
}

PairRelation ClassifyPair(const Formation& f, const Formation& g, double tol) {
  if (!(f.graph() == g.graph()) || f.dim() != g.dim()) {
    throw Error(ErrorCode::kGraphMismatch,
                "formations must share the graph and dimension");
  }
  const int d = f.dim();
  const int n = f.size();
  const double scale = std::max({1.0, Diameter(f.x(), d), Diameter(g.x(), d)});
  const double pos_tol = tol * scale;

  const Eigen::VectorXd diff = f.x() - g.x();
  if (diff.lpNorm<Eigen::Infinity>() <= pos_tol) return PairRelation::kIdentical;

  auto centered = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd c = x;
    const Eigen::VectorXd mean = Centroid(x, d);
    for (int i = 0; i < n; ++i) c.segment(i * d, d) -= mean;
    return c;
  };
  const Eigen::VectorXd a = centered(f.x());
  const Eigen::VectorXd b = centered(g.x());
  if ((a - b).lpNorm<Eigen::Infinity>() <= pos_tol) return PairRelation::kCongruent;

  const double bb = b.squaredNorm();
  if (bb > 0.0) {
    const double s = a.dot(b) / bb;
    if (s > 0.0 && (a - s * b).lpNorm<Eigen::Infinity>() <= pos_tol) {
      return PairRelation::kSimilar;
    }
  }

  const double eps_f = CoincidenceThreshold(f.x(), d);
  const double eps_g = CoincidenceThreshold(g.x(), d);
  for (const Edge& e : f.graph().edges()) {
    const Eigen::VectorXd uf = Bearing(f.position(e.from), f.position(e.to), eps_f);
    const Eigen::VectorXd ug = Bearing(g.position(e.from), g.position(e.to), eps_g);
    if ((uf - ug).norm() > tol) return PairRelation::kNone;
  }
  return PairRelation::kEquivalent;
}

RigidityReport IsBearingRigid(const Formation& f) {
  const int d = f.dim();
  const int n = f.size();
  const double eps = CoincidenceThreshold(f.x(), d);
  const Eigen::VectorXd lengths = EdgeLengths(f);
  for (int k = 0; k < lengths.size(); ++k) {
    if (lengths[k] <= eps) {
      const OrientedEdge& rep = f.graph().orientation()[k];
      throw Error(ErrorCode::kDegenerateFormation,
                  "edge " + EdgeLabel(rep.tail, rep.head) + " has coincident endpoints");
    }
  }
  RigidityReport report;
  report.required_rank = d * n - d - 1;
  if (lengths.size() == 0) {
    report.singular_values = Eigen::VectorXd();
    report.rigid = report.required_rank <= 0;
    return report;
  }
  const Eigen::MatrixXd rb = ComputeFormationMatrices(f, nullptr, eps).rigidity;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rb);
  report.singular_values = svd.singularValues();
  const double sigma_max = report.singular_values.size() ? report.singular_values[0] : 0.0;
  report.threshold = 1e-10 * sigma_max;
  for (Eigen::Index i = 0; i < report.singular_values.size(); ++i) {
    if (report.singular_values[i] > report.threshold) ++report.rank;
  }
  report.rigid = report.rank == report.required_rank;
  return report;
}

}  // namespace bearing_flows
