#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "bearing_flows/analysis.hpp"

namespace bearing_flows {

Eigen::VectorXd DisagreementProjector::Apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x;
  const Eigen::VectorXd mean = Centroid(x, d_);
  for (int i = 0; i < n_; ++i) out.segment(i * d_, d_) -= mean;
  return out;
}

Eigen::MatrixXd DisagreementProjector::Matrix() const {
  const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n_, n_) -
                            Eigen::MatrixXd::Constant(n_, n_, 1.0 / n_);
  return KroneckerIdentity(j, d_);
}

double NuObjective(const DirectedGraph& graph, int d, const Eigen::VectorXd& x) {
  const double eps = CoincidenceThreshold(x, d) * 1e-3;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(x.size());
  for (const OrientedEdge& rep : graph.orientation()) {
    const Eigen::VectorXd u =
        Bearing(x.segment(rep.tail * d, d), x.segment(rep.head * d, d), eps);
    s.segment(rep.tail * d, d) += u;
    s.segment(rep.head * d, d) -= u;
  }
  return s.norm();
}

namespace {

// Multiscale limit of a formation. Level 0 splits the vertices into blocks;
// each deeper level refines every block of the level above. A pair of
// vertices takes its bearing from the first level at which their blocks
// differ, and carries none when they share a block at every level. One level
// is a coincidence pattern; deeper levels describe clusters that shrink to a
// point while keeping their internal bearings.
class ScaleProblem {
 public:
  static constexpr int kMaxIterations = 2000;

  ScaleProblem(const DirectedGraph& graph, int d, const std::vector<int>& block)
      : d_(d), n_(graph.num_vertices()),
        edges_(graph.orientation().begin(), graph.orientation().end()) {
    levels_.push_back(block);
    Rebuild();
  }

  int dim() const { return offset_.back(); }

  // Per parent group: center with vertex counts as weights and scale to unit
  // second moment. Lone children sit at the origin.
  bool Normalize(Eigen::VectorXd& y) const {
    for (const Group& g : groups_) {
      if (g.children.size() == 1) {
        Block(y, g.level, g.children[0]).setZero();
        continue;
      }
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d_);
      int total = 0;
      for (int c : g.children) {
        mean += size_[g.level][c] * Block(y, g.level, c);
        total += size_[g.level][c];
      }
      mean /= total;
      double sq = 0.0;
      for (int c : g.children) {
        auto b = Block(y, g.level, c);
        b -= mean;
        sq += size_[g.level][c] * b.squaredNorm();
      }
      if (!(sq > 1e-300) || !std::isfinite(sq)) return false;
      for (int c : g.children) Block(y, g.level, c) /= std::sqrt(sq);
    }
    return true;
  }

  // F = |H u|^2 and its gradient.
  double Eval(const Eigen::VectorXd& y, Eigen::VectorXd* grad) const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(d_ * n_);
    std::vector<Eigen::VectorXd> u(links_.size());
    std::vector<double> len(links_.size());
    for (std::size_t e = 0; e < links_.size(); ++e) {
      const Link& l = links_[e];
      const Eigen::VectorXd r = Block(y, l.level, l.head) - Block(y, l.level, l.tail);
      len[e] = r.norm();
      u[e] = len[e] > 1e-14 ? Eigen::VectorXd(r / len[e]) : Eigen::VectorXd::Zero(d_);
      s.segment(l.i * d_, d_) += u[e];
      s.segment(l.j * d_, d_) -= u[e];
    }
    if (grad != nullptr) {
      grad->setZero(dim());
      for (std::size_t e = 0; e < links_.size(); ++e) {
        if (len[e] <= 1e-14) continue;
        const Link& l = links_[e];
        const Eigen::VectorXd diff = s.segment(l.i * d_, d_) - s.segment(l.j * d_, d_);
        // P(u)/len applied to diff
        const Eigen::VectorXd q = (diff - u[e] * u[e].dot(diff)) / len[e];
        grad->segment(offset_[l.level] + l.head * d_, d_) += 2.0 * q;
        grad->segment(offset_[l.level] + l.tail * d_, d_) -= 2.0 * q;
      }
    }
    return s.squaredNorm();
  }

  // A concrete formation: each level is shrunk by `ratio` against the one above.
  Eigen::VectorXd Expand(const Eigen::VectorXd& y, double ratio = 1e-3) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d_ * n_);
    double scale = 1.0;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      for (int i = 0; i < n_; ++i) {
        x.segment(i * d_, d_) += scale * Block(y, static_cast<int>(k), levels_[k][i]);
      }
      scale *= ratio;
    }
    return x;
  }

  // Projected descent with Barzilai-Borwein steps and Armijo backtracking.
  // When adjacent blocks approach each other the infimum is only reached in
  // the limit; those blocks are then merged into a cluster one level up and
  // the descent continues on the deeper problem.
  double Descend(Eigen::VectorXd& y) {
    if (!Normalize(y)) return std::numeric_limits<double>::infinity();
    bool converged = false;
    double f = Run(y, converged);
    for (int round = 0; round < 2 * n_; ++round) {
      Eigen::VectorXd deeper;
      ScaleProblem refined = *this;
      if (!refined.Refine(y, deeper, !converged)) break;
      bool deeper_converged = false;
      const double f_deeper = refined.Run(deeper, deeper_converged);
      if (!(f_deeper <= f)) break;
      *this = std::move(refined);
      y = std::move(deeper);
      f = f_deeper;
      converged = deeper_converged;
    }
    return f;
  }

 private:
  using Segment = Eigen::VectorBlock<Eigen::VectorXd>;
  using ConstSegment = Eigen::VectorBlock<const Eigen::VectorXd>;

  struct Link {
    int i, j;         // vertices, i < j
    int level;        // first level at which their blocks differ
    int tail, head;   // blocks of i and j at that level
  };
  struct Group {
    int level;
    std::vector<int> children;  // blocks at `level` sharing a parent
  };

  Segment Block(Eigen::VectorXd& y, int level, int b) const {
    return y.segment(offset_[level] + b * d_, d_);
  }
  ConstSegment Block(const Eigen::VectorXd& y, int level, int b) const {
    return y.segment(offset_[level] + b * d_, d_);
  }

  void Rebuild() {
    const int depth = static_cast<int>(levels_.size());
    offset_.assign(depth + 1, 0);
    size_.assign(depth, {});
    groups_.clear();
    for (int k = 0; k < depth; ++k) {
      const int count = *std::max_element(levels_[k].begin(), levels_[k].end()) + 1;
      offset_[k + 1] = offset_[k] + count * d_;
      size_[k].assign(count, 0);
      for (int b : levels_[k]) ++size_[k][b];
      std::vector<int> parent(count, 0);
      for (int i = 0; i < n_; ++i) parent[levels_[k][i]] = k == 0 ? 0 : levels_[k - 1][i];
      const int parents = k == 0 ? 1 : static_cast<int>(size_[k - 1].size());
      std::vector<Group> local(parents, Group{k, {}});
      for (int b = 0; b < count; ++b) local[parent[b]].children.push_back(b);
      for (auto& g : local) groups_.push_back(std::move(g));
    }
    links_.clear();
    for (const OrientedEdge& rep : edges_) {
      for (int k = 0; k < depth; ++k) {
        if (levels_[k][rep.tail] != levels_[k][rep.head]) {
          links_.push_back({rep.tail, rep.head, k, levels_[k][rep.tail], levels_[k][rep.head]});
          break;
        }
      }
    }
  }

  // Local descent; `converged` reports a vanishing gradient at the end.
  double Run(Eigen::VectorXd& y, bool& converged) const {
    converged = true;
    Eigen::VectorXd g;
    double f = Eval(y, &g);
    // A single pair of distinct positions is fixed up to rotation.
    int split = 0;
    bool wide = false;
    for (const Group& grp : groups_) {
      split += grp.children.size() > 1;
      wide = wide || grp.children.size() > 2;
    }
    if (!wide && split <= 1) return f;
    double step = 0.1;
    for (int it = 0; it < kMaxIterations; ++it) {
      const double gg = g.squaredNorm();
      if (gg < 1e-24) break;
      bool accepted = false;
      Eigen::VectorXd y_new, g_new;
      double f_new = f;
      while (step > 1e-14) {
        y_new = y - step * g;
        if (Normalize(y_new)) {
          f_new = Eval(y_new, &g_new);
          if (f_new <= f - 1e-4 * step * gg) {
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) break;
      const Eigen::VectorXd sy = y_new - y;
      const Eigen::VectorXd gy = g_new - g;
      const double moved = sy.norm();
      const double decrease = f - f_new;
      y = std::move(y_new);
      g = std::move(g_new);
      f = f_new;
      if (moved < 1e-10 || decrease < 1e-15 * std::max(1.0, f)) break;
      const double curv = sy.dot(gy);
      step = curv > 0.0 ? std::clamp(sy.squaredNorm() / curv, 1e-8, 10.0)
                        : std::min(10.0, step * 2.0);
    }
    converged = g.squaredNorm() < 1e-12;
    return f;
  }

  // Inserts a level that groups adjacent blocks closer than kMerge; with
  // `stalled`, falls back to the closest adjacent pair within kStalledMerge.
  // Returns false when there is nothing to group.
  bool Refine(const Eigen::VectorXd& y, Eigen::VectorXd& deeper, bool stalled) {
    constexpr double kMerge = 1e-2;
    constexpr double kStalledMerge = 0.2;
    const int depth = static_cast<int>(levels_.size());
    double threshold = kMerge;
    if (stalled) {
      double closest = std::numeric_limits<double>::infinity();
      for (const Link& l : links_) {
        closest = std::min(closest, (Block(y, l.level, l.head) - Block(y, l.level, l.tail)).norm());
      }
      if (closest >= kMerge && closest < kStalledMerge) threshold = closest * (1 + 1e-12);
    }
    for (int k = 0; k < depth; ++k) {
      const int count = static_cast<int>(size_[k].size());
      std::vector<int> root(count);
      for (int b = 0; b < count; ++b) root[b] = b;
      std::function<int(int)> find = [&](int b) {
        return root[b] == b ? b : root[b] = find(root[b]);
      };
      bool any = false;
      for (const Link& l : links_) {
        if (l.level != k) continue;
        if ((Block(y, k, l.head) - Block(y, k, l.tail)).norm() < threshold) {
          root[find(l.tail)] = find(l.head);
          any = true;
        }
      }
      if (!any) continue;

      // New level k: clusters of level-k blocks; old level k moves to k + 1.
      std::vector<int> label(count, -1), cluster_of(count);
      int clusters = 0;
      for (int b = 0; b < count; ++b) {
        const int r = find(b);
        if (label[r] < 0) label[r] = clusters++;
        cluster_of[b] = label[r];
      }
      std::vector<int> outer(n_);
      for (int i = 0; i < n_; ++i) outer[i] = cluster_of[levels_[k][i]];
      ScaleProblem next = *this;
      next.levels_.insert(next.levels_.begin() + k, outer);
      next.Rebuild();

      deeper = Eigen::VectorXd::Zero(next.dim());
      for (int j = 0; j < k; ++j) {  // levels above are unchanged
        deeper.segment(next.offset_[j], offset_[j + 1] - offset_[j]) =
            y.segment(offset_[j], offset_[j + 1] - offset_[j]);
      }
      std::vector<Eigen::VectorXd> center(clusters, Eigen::VectorXd::Zero(d_));
      std::vector<int> weight(clusters, 0);
      for (int b = 0; b < count; ++b) {
        center[cluster_of[b]] += size_[k][b] * Block(y, k, b);
        weight[cluster_of[b]] += size_[k][b];
      }
      for (int c = 0; c < clusters; ++c) next.Block(deeper, k, c) = center[c] / weight[c];
      for (int b = 0; b < count; ++b) {
        next.Block(deeper, k + 1, b) = Block(y, k, b) - next.Block(deeper, k, cluster_of[b]);
      }
      for (int j = k + 1; j < depth; ++j) {
        deeper.segment(next.offset_[j + 1], offset_[j + 1] - offset_[j]) =
            y.segment(offset_[j], offset_[j + 1] - offset_[j]);
      }
      if (!next.Normalize(deeper)) return false;
      *this = std::move(next);
      return true;
    }
    return false;
  }

  int d_;
  int n_;
  std::vector<OrientedEdge> edges_;
  std::vector<std::vector<int>> levels_;
  std::vector<std::vector<int>> size_;
  std::vector<int> offset_;
  std::vector<Group> groups_;
  std::vector<Link> links_;
};

bool BlocksConnected(const DirectedGraph& graph, const std::vector<int>& block,
                     int blocks) {
  const int n = graph.num_vertices();
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (const OrientedEdge& rep : graph.orientation()) {
    if (block[rep.tail] == block[rep.head]) parent[find(rep.tail)] = find(rep.head);
  }
  int roots = 0;
  for (int i = 0; i < n; ++i) roots += find(i) == i;
  return roots == blocks;
}

// Partitions into connected blocks with at least two blocks, as restricted
// growth strings; the all-distinct pattern comes first.
std::vector<std::vector<int>> CoincidencePatterns(const DirectedGraph& graph) {
  const int n = graph.num_vertices();
  std::vector<std::vector<int>> out;
  std::vector<int> identity(n);
  for (int i = 0; i < n; ++i) identity[i] = i;
  out.push_back(identity);
  if (n > 7) {
    for (const OrientedEdge& rep : graph.orientation()) {
      std::vector<int> block(n);
      int next = 0;
      for (int i = 0; i < n; ++i) block[i] = i == rep.head ? -1 : next++;
      block[rep.head] = block[rep.tail];
      if (next >= 2) out.push_back(block);
    }
    return out;
  }
  std::vector<int> block(n, 0);
  std::function<void(int, int)> grow = [&](int i, int used) {
    if (i == n) {
      if (used >= 2 && used < n && BlocksConnected(graph, block, used)) {
        out.push_back(block);
      }
      return;
    }
    for (int b = 0; b <= used && b < n; ++b) {
      block[i] = b;
      grow(i + 1, std::max(used, b + 1));
    }
  };
  grow(0, 0);
  return out;
}

}  // namespace

NuEstimate EstimateNu(const DirectedGraph& graph, int d, int restarts,
                      std::uint64_t seed) {
  const DirectedGraph undirected = graph.Symmetrized();
  const ConnectivityReport conn = ClassifyConnectivity(undirected);
  if (!conn.weakly_connected || graph.num_vertices() < 2) {
    throw Error(ErrorCode::kDisconnectedGraph,
                "nu is only positive on connected graphs with n >= 2");
  }
  if (restarts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "restarts must be positive");
  }

  NuEstimate est;
  est.restarts = restarts;
  double best = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto patterns = CoincidencePatterns(undirected);
  est.patterns = static_cast<int>(patterns.size());
  for (const auto& pattern : patterns) {
    const int blocks = *std::max_element(pattern.begin(), pattern.end()) + 1;
    const int runs = blocks == 2 ? 1 : restarts;
    for (int r = 0; r < runs; ++r) {
      ScaleProblem problem(undirected, d, pattern);
      Eigen::VectorXd y(problem.dim());
      for (Eigen::Index c = 0; c < y.size(); ++c) y[c] = normal(rng);
      const double f = problem.Descend(y);
      ++est.local_runs;
      if (f < best) {
        best = f;
        const DisagreementProjector j(graph.num_vertices(), d);
        est.best_minimizer = j.Apply(problem.Expand(y));
        est.best_minimizer /= est.best_minimizer.norm();
        est.best_pattern = pattern;
      }
    }
  }
  est.value = std::sqrt(best);
  return est;
}

double LocalNuDescent(const DirectedGraph& graph, int d, const Eigen::VectorXd& x) {
  const DirectedGraph undirected = graph.Symmetrized();
  const int n = graph.num_vertices();
  const double eps = CoincidenceThreshold(x, d);
  // Blocks: components of the coincident-neighbor relation.
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (const OrientedEdge& rep : undirected.orientation()) {
    if ((x.segment(rep.head * d, d) - x.segment(rep.tail * d, d)).norm() <= eps) {
      parent[find(rep.tail)] = find(rep.head);
    }
  }
  std::vector<int> label(n, -1), block(n);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (label[root] < 0) label[root] = next++;
    block[i] = label[root];
  }
  if (next < 2) {
    throw Error(ErrorCode::kInvalidArgument, "start point is already at consensus");
  }
  ScaleProblem problem(undirected, d, block);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(problem.dim());
  for (int i = 0; i < n; ++i) y.segment(block[i] * d, d) = x.segment(i * d, d);
  return std::sqrt(problem.Descend(y));
}

}  // namespace bearing_flows
