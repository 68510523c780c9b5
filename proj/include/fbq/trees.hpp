#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbq/codebook.hpp"
#include "fbq/corelin.hpp"

namespace fbq {

enum class Objective { kMaximize, kMinimize };

struct SearchReport {
  std::size_t index = 0;
  UnitVector vector;
  std::uint64_t macs = 0;
  std::uint64_t nodes_visited = 0;
};

namespace detail {

inline CVec unembed(std::span<const double> r) {
  const std::size_t n = r.size() / 2;
  CVec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = cplx(r[i], r[i + n]);
  return v;
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Binary search tree over the 2N-real embedding of a codebook, one split
// coordinate per level.  The pivot entry (the one whose coordinate is
// closest to the subset median) is routed into the left subtree and also
// recorded at the internal node for the modified search.
class KdTree {
 public:
  struct Node {
    bool leaf = false;
    std::uint16_t split_dim = 0;  // this node's dimension: depth mod 2N
    double pivot_value = 0.0;     // internal nodes
    std::uint32_t entry = 0;      // leaf: its entry; internal: the pivot entry
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t subtree_leaves = 1;
  };

  std::size_t complex_dim = 0;
  std::size_t dim2 = 0;  // 2N
  std::vector<Node> nodes;   // nodes[0] is the root
  std::vector<double> pts;   // 2^B x 2N embedded entries

  std::span<const double> point(std::size_t entry) const {
    return {pts.data() + entry * dim2, dim2};
  }
};

inline KdTree build_kd_tree(const Codebook& cb) {
  KdTree tree;
  tree.complex_dim = cb.dim();
  tree.dim2 = 2 * cb.dim();
  tree.pts.resize(cb.size() * tree.dim2);
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const RVec e = embed_real(cb.entry_vec(j));
    std::copy(e.begin(), e.end(), tree.pts.begin() + j * tree.dim2);
  }

  std::vector<std::uint32_t> all(cb.size());
  std::iota(all.begin(), all.end(), 0u);

  // returns the node index; subsets stay sorted ascending by entry index
  auto rec = [&](auto&& self, std::vector<std::uint32_t> idx, std::size_t depth) -> std::int32_t {
    const std::int32_t me = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::uint16_t d = static_cast<std::uint16_t>(depth % tree.dim2);
    tree.nodes[me].split_dim = d;
    if (idx.size() == 1) {
      tree.nodes[me].leaf = true;
      tree.nodes[me].entry = idx[0];
      return me;
    }
    auto coord = [&](std::uint32_t e) { return tree.pts[e * tree.dim2 + d]; };

    std::vector<std::uint32_t> order = idx;
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return coord(a) < coord(b) || (coord(a) == coord(b) && a < b);
              });
    const std::size_t n = order.size();
    const double median = (n % 2 == 1)
                              ? coord(order[n / 2])
                              : 0.5 * (coord(order[n / 2 - 1]) + coord(order[n / 2]));
    std::uint32_t pivot = order[0];
    for (std::uint32_t e : order) {
      const double de = std::abs(coord(e) - median);
      const double dp = std::abs(coord(pivot) - median);
      if (de < dp || (de == dp && (coord(e) < coord(pivot) ||
                                   (coord(e) == coord(pivot) && e < pivot))))
        pivot = e;
    }
    const double pv = coord(pivot);

    std::vector<std::uint32_t> lidx, ridx;
    for (std::uint32_t e : idx) (coord(e) <= pv ? lidx : ridx).push_back(e);
    if (ridx.empty()) {
      // duplicate coordinates collapsed onto the pivot; fall back to an
      // order split so the recursion still shrinks
      lidx.assign(order.begin(), order.begin() + (n + 1) / 2);
      ridx.assign(order.begin() + (n + 1) / 2, order.end());
      std::sort(lidx.begin(), lidx.end());
      std::sort(ridx.begin(), ridx.end());
      tree.nodes[me].pivot_value = coord(lidx.back());
      tree.nodes[me].entry = lidx.back();
    } else {
      tree.nodes[me].pivot_value = pv;
      tree.nodes[me].entry = pivot;
    }
    const std::int32_t l = self(self, std::move(lidx), depth + 1);
    const std::int32_t r = self(self, std::move(ridx), depth + 1);
    tree.nodes[me].left = l;
    tree.nodes[me].right = r;
    tree.nodes[me].subtree_leaves =
        tree.nodes[l].subtree_leaves + tree.nodes[r].subtree_leaves;
    return me;
  };
  rec(rec, std::move(all), 0);
  return tree;
}

// Exact nearest neighbor in the embedded space: descend, then backtrack into
// any sibling subtree whose splitting slab still intersects the current best
// ball.  Identical result to the exhaustive argmax Re(u^H v_j) scan, with
// ties resolved to the lowest entry index.
inline SearchReport tree_nearest_neighbor(const KdTree& tree, const UnitVector& u,
                                          OpCounter& counter) {
  if (u.dim() != tree.complex_dim)
    throw std::invalid_argument("tree_nearest_neighbor: dimension mismatch");
  const RVec q = embed_real(u.v);
  SearchReport rep;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;

  auto rec = [&](auto&& self, std::int32_t ni) -> void {
    const KdTree::Node& nd = tree.nodes[ni];
    ++rep.nodes_visited;
    if (nd.leaf) {
      rep.macs += tree.dim2;
      const double d2 = detail::dist2(tree.point(nd.entry), q);
      if (d2 < best || (d2 == best && nd.entry < best_idx)) {
        best = d2;
        best_idx = nd.entry;
      }
      return;
    }
    const double delta = q[nd.split_dim] - nd.pivot_value;
    const std::int32_t near = delta <= 0.0 ? nd.left : nd.right;
    const std::int32_t far = delta <= 0.0 ? nd.right : nd.left;
    self(self, near);
    rep.macs += 1;
    if (delta * delta <= best) self(self, far);
  };
  rec(rec, 0);

  rep.index = best_idx;
  rep.vector = UnitVector::normalized(detail::unembed(tree.point(best_idx)));
  counter.add(rep.macs);
  return rep;
}

// Binary tree built by recursive two-way generalized Lloyd splits of the
// embedded codebook.  Internal nodes carry the two child centroids used for
// routing; the tree is generally unbalanced.
class GlaTree {
 public:
  struct Node {
    bool leaf = false;
    std::uint32_t entry = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> centroid_left;
    std::vector<double> centroid_right;
    double centroid_dist2 = 0.0;
    std::uint32_t subtree_leaves = 1;
  };

  std::size_t complex_dim = 0;
  std::size_t dim2 = 0;
  std::vector<Node> nodes;
  std::vector<double> pts;

  std::span<const double> point(std::size_t entry) const {
    return {pts.data() + entry * dim2, dim2};
  }
};

namespace detail {

// Exhaustive farthest pair for small groups, two-pass approximation above.
inline std::pair<std::uint32_t, std::uint32_t> farthest_pair(
    const std::vector<double>& pts, std::size_t dim2, const std::vector<std::uint32_t>& idx) {
  constexpr std::size_t kExactLimit = 1024;
  auto at = [&](std::uint32_t e) {
    return std::span<const double>(pts.data() + e * dim2, dim2);
  };
  if (idx.size() <= kExactLimit) {
    std::uint32_t a = idx[0], b = idx[1];
    double best = -1.0;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        const double d = dist2(at(idx[i]), at(idx[j]));
        if (d > best) {
          best = d;
          a = idx[i];
          b = idx[j];
        }
      }
    return {a, b};
  }
  std::vector<double> mean(dim2, 0.0);
  for (std::uint32_t e : idx)
    for (std::size_t d = 0; d < dim2; ++d) mean[d] += pts[e * dim2 + d];
  for (double& v : mean) v /= static_cast<double>(idx.size());
  auto argmax_from = [&](std::span<const double> ref) {
    std::uint32_t best_e = idx[0];
    double best = -1.0;
    for (std::uint32_t e : idx) {
      const double d = dist2(at(e), ref);
      if (d > best) {
        best = d;
        best_e = e;
      }
    }
    return best_e;
  };
  const std::uint32_t a = argmax_from(mean);
  const std::uint32_t b = argmax_from(at(a));
  return {a, b};
}

struct GlaSplit {
  std::vector<std::uint32_t> left, right;
  std::vector<double> centroid_left, centroid_right;
};

inline GlaSplit gla_split(const std::vector<double>& pts, std::size_t dim2,
                          const std::vector<std::uint32_t>& idx) {
  auto at = [&](std::uint32_t e) {
    return std::span<const double>(pts.data() + e * dim2, dim2);
  };
  auto mean_of = [&](const std::vector<std::uint32_t>& group) {
    std::vector<double> m(dim2, 0.0);
    for (std::uint32_t e : group)
      for (std::size_t d = 0; d < dim2; ++d) m[d] += pts[e * dim2 + d];
    for (double& v : m) v /= static_cast<double>(group.size());
    return m;
  };

  const auto [ia, ib] = farthest_pair(pts, dim2, idx);
  std::vector<double> cl(at(ia).begin(), at(ia).end());
  std::vector<double> cr(at(ib).begin(), at(ib).end());

  GlaSplit split;
  std::vector<char> assign(idx.size(), 0), prev;
  constexpr int kMaxIters = 50;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      assign[i] = dist2(at(idx[i]), cl) <= dist2(at(idx[i]), cr) ? 1 : 0;
    const bool all_left = std::all_of(assign.begin(), assign.end(), [](char c) { return c; });
    const bool all_right = std::all_of(assign.begin(), assign.end(), [](char c) { return !c; });
    if (all_left || all_right) {
      // repair the empty cell: seed it with the point of the occupied cell
      // farthest from that cell's centroid
      const std::vector<double> big = mean_of(idx);
      std::uint32_t far_e = idx[0];
      double best = -1.0;
      for (std::uint32_t e : idx) {
        const double d = dist2(at(e), big);
        if (d > best) {
          best = d;
          far_e = e;
        }
      }
      if (all_left)
        cr.assign(at(far_e).begin(), at(far_e).end());
      else
        cl.assign(at(far_e).begin(), at(far_e).end());
      prev.clear();
      continue;
    }
    if (assign == prev) break;
    prev = assign;
    std::vector<std::uint32_t> gl, gr;
    for (std::size_t i = 0; i < idx.size(); ++i) (assign[i] ? gl : gr).push_back(idx[i]);
    cl = mean_of(gl);
    cr = mean_of(gr);
  }
  for (std::size_t i = 0; i < idx.size(); ++i)
    (assign[i] ? split.left : split.right).push_back(idx[i]);
  if (split.left.empty() || split.right.empty()) {
    // iteration cap hit in a degenerate configuration; fall back to an
    // order split
    split.left.assign(idx.begin(), idx.begin() + (idx.size() + 1) / 2);
    split.right.assign(idx.begin() + (idx.size() + 1) / 2, idx.end());
  }
  // final centroids are exact means of the final partition, summed in
  // ascending entry order so deserialization can rebuild them bit-exactly
  split.centroid_left = mean_of(split.left);
  split.centroid_right = mean_of(split.right);
  return split;
}

}  // namespace detail

inline GlaTree build_gla_tree(const Codebook& cb) {
  GlaTree tree;
  tree.complex_dim = cb.dim();
  tree.dim2 = 2 * cb.dim();
  tree.pts.resize(cb.size() * tree.dim2);
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const RVec e = embed_real(cb.entry_vec(j));
    std::copy(e.begin(), e.end(), tree.pts.begin() + j * tree.dim2);
  }

  std::vector<std::uint32_t> all(cb.size());
  std::iota(all.begin(), all.end(), 0u);

  auto rec = [&](auto&& self, std::vector<std::uint32_t> idx) -> std::int32_t {
    const std::int32_t me = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (idx.size() == 1) {
      tree.nodes[me].leaf = true;
      tree.nodes[me].entry = idx[0];
      return me;
    }
    detail::GlaSplit split = detail::gla_split(tree.pts, tree.dim2, idx);
    const std::int32_t l = self(self, std::move(split.left));
    const std::int32_t r = self(self, std::move(split.right));
    tree.nodes[me].left = l;
    tree.nodes[me].right = r;
    tree.nodes[me].centroid_left = std::move(split.centroid_left);
    tree.nodes[me].centroid_right = std::move(split.centroid_right);
    tree.nodes[me].centroid_dist2 =
        detail::dist2(tree.nodes[me].centroid_left, tree.nodes[me].centroid_right);
    tree.nodes[me].subtree_leaves =
        tree.nodes[l].subtree_leaves + tree.nodes[r].subtree_leaves;
    return me;
  };
  rec(rec, std::move(all));
  return tree;
}

// Greedy descent to the nearer child centroid plus hyperplane-bound
// backtracking: the far subtree is revisited only when the bisector of the
// two centroids is closer than the current best.  Exact whenever every
// split converged (each entry nearest its own group's centroid), which the
// build does not guarantee after a repair or an iteration-cap fallback.
inline SearchReport tree_nearest_neighbor(const GlaTree& tree, const UnitVector& u,
                                          OpCounter& counter) {
  if (u.dim() != tree.complex_dim)
    throw std::invalid_argument("tree_nearest_neighbor: dimension mismatch");
  const RVec q = embed_real(u.v);
  SearchReport rep;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;

  auto rec = [&](auto&& self, std::int32_t ni, double dist_hint) -> void {
    const GlaTree::Node& nd = tree.nodes[ni];
    ++rep.nodes_visited;
    if (nd.leaf) {
      if (dist_hint < 0.0) {
        rep.macs += tree.dim2;
        dist_hint = detail::dist2(tree.point(nd.entry), q);
      }
      if (dist_hint < best || (dist_hint == best && nd.entry < best_idx)) {
        best = dist_hint;
        best_idx = nd.entry;
      }
      return;
    }
    rep.macs += 2 * tree.dim2;
    const double dl = detail::dist2(nd.centroid_left, q);
    const double dr = detail::dist2(nd.centroid_right, q);
    const bool left_near = dl <= dr;
    self(self, left_near ? nd.left : nd.right, left_near ? dl : dr);
    rep.macs += 2;
    const double gap = left_near ? dr - dl : dl - dr;
    if (gap * gap < 4.0 * nd.centroid_dist2 * best)
      self(self, left_near ? nd.right : nd.left, left_near ? dr : dl);
  };
  rec(rec, 0, -1.0);

  rep.index = best_idx;
  rep.vector = UnitVector::normalized(detail::unembed(tree.point(best_idx)));
  counter.add(rep.macs);
  return rep;
}

namespace detail {

// Single-coordinate quadratic form of a node's vector in the node's own
// split dimension: |p_d|^2 Mhat[d][d].  2 real MACs.
inline double node_pivot_score(const KdTree& tree, std::int32_t ni, const RealEmbeddedMatrix& m) {
  const KdTree::Node& nd = tree.nodes[ni];
  const double x = nd.leaf ? tree.pts[nd.entry * tree.dim2 + nd.split_dim] : nd.pivot_value;
  return x * x * m.at(nd.split_dim, nd.split_dim);
}

}  // namespace detail

// Subtrees at or below this leaf count are swept exhaustively during the
// compare pass; larger ones are probed along the better-scoring child unless
// the pivot score already beats the incumbent.
inline constexpr std::uint32_t kCompareRefineWidth = 32;

// Covariance-driven kd-tree search.  Descends toward the child whose pivot
// scores better in its single coordinate, then re-walks the tree comparing
// the candidate against surrounding leaves.  Returns a good entry, not a
// guaranteed optimum; the result never beats the exhaustive selection, and
// the compare pass never returns a worse entry than the descent alone.
inline SearchReport modified_kd_search(const KdTree& tree, const CovarianceMatrix& m,
                                       Objective objective, OpCounter& counter) {
  if (m.dim() != tree.complex_dim)
    throw std::invalid_argument("modified_kd_search: dimension mismatch");
  const RealEmbeddedMatrix mhat = embed_covariance(m);
  const bool maximize = objective == Objective::kMaximize;
  SearchReport rep;

  auto better = [&](double a, double b) { return maximize ? a > b : a < b; };
  auto full_value = [&](std::uint32_t entry) {
    rep.macs += tree.dim2 * tree.dim2 + tree.dim2;
    OpCounter scratch;
    return real_quadratic_form(tree.point(entry), mhat, scratch);
  };

  // descent
  std::int32_t ni = 0;
  while (!tree.nodes[ni].leaf) {
    ++rep.nodes_visited;
    rep.macs += 4;
    const KdTree::Node& nd = tree.nodes[ni];
    const double sl = detail::node_pivot_score(tree, nd.left, mhat);
    const double sr = detail::node_pivot_score(tree, nd.right, mhat);
    ni = better(sr, sl) ? nd.right : nd.left;
  }
  ++rep.nodes_visited;
  std::size_t best_idx = tree.nodes[ni].entry;
  double best = full_value(tree.nodes[ni].entry);

  // compare pass from the root; pointless for a single-leaf tree
  auto rec = [&](auto&& self, std::int32_t i) -> void {
    const KdTree::Node& nd = tree.nodes[i];
    ++rep.nodes_visited;
    if (nd.leaf) {
      const double val = full_value(nd.entry);
      if (better(val, best) || (val == best && nd.entry < best_idx)) {
        best = val;
        best_idx = nd.entry;
      }
      return;
    }
    if (nd.subtree_leaves <= kCompareRefineWidth) {
      self(self, nd.left);
      self(self, nd.right);
      return;
    }
    // Pivot-score bound test, maximization only: a subtree whose pivot beats
    // the incumbent in a single coordinate is exceptional and gets both
    // children.  For minimization the analogous comparison pits two
    // near-zero quantities against each other and fires on most nodes,
    // collapsing the search into an exhaustive sweep, so the min variant
    // relies on the surrounding-leaf sweep alone.
    if (maximize) {
      rep.macs += 2;
      const double pivot_score = detail::node_pivot_score(tree, i, mhat);
      if (pivot_score > best) {
        self(self, nd.left);
        self(self, nd.right);
        return;
      }
    }
    rep.macs += 4;
    const double sl = detail::node_pivot_score(tree, nd.left, mhat);
    const double sr = detail::node_pivot_score(tree, nd.right, mhat);
    self(self, better(sr, sl) ? nd.right : nd.left);
  };
  if (!tree.nodes[0].leaf) rec(rec, 0);

  rep.index = best_idx;
  rep.vector = UnitVector::normalized(detail::unembed(tree.point(best_idx)));
  counter.add(rep.macs);
  return rep;
}

}  // namespace fbq
