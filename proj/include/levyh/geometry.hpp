#pragma once

#include <array>
#include <limits>
#include <memory>
#include <numeric>

#include "common.hpp"

namespace levyh {

using Point = std::array<double, 2>;

//
// d-dimensional point cloud (d = 1 or 2); 1D points keep p[1] = 0
//
class PointSet
{
public:
    PointSet() = default;

    PointSet(int dim, std::vector<Point> pts)
        : _dim(dim)
        , _pts(std::move(pts))
    {
        LEVYH_REQUIRE(dim == 1 || dim == 2, "point dimension must be 1 or 2");
        LEVYH_REQUIRE(!_pts.empty(), "empty point set");
        for (auto& p : _pts) {
            LEVYH_REQUIRE(std::isfinite(p[0]) && std::isfinite(p[1]), "non-finite coordinate");
            if (dim == 1)
                p[1] = 0.0;
        }
    }

    static PointSet line(const std::vector<double>& xs)
    {
        std::vector<Point> pts;
        pts.reserve(xs.size());
        for (double x : xs)
            pts.push_back({x, 0.0});
        return PointSet(1, std::move(pts));
    }

    int dim() const { return _dim; }
    Index size() const { return Index(_pts.size()); }
    const Point& operator[](Index i) const { return _pts[std::size_t(i)]; }
    const std::vector<Point>& points() const { return _pts; }

private:
    int                _dim = 1;
    std::vector<Point> _pts;
};

struct BoundingBox
{
    int   dim = 1;
    Point lo{0.0, 0.0};
    Point hi{0.0, 0.0};

    template <typename It>
    static BoundingBox of(const PointSet& ps, It first, It last)
    {
        BoundingBox b;
        b.dim = ps.dim();
        b.lo  = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        b.hi  = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (auto it = first; it != last; ++it) {
            const auto& p = ps[*it];
            for (int k = 0; k < b.dim; ++k) {
                b.lo[k] = std::min(b.lo[k], p[k]);
                b.hi[k] = std::max(b.hi[k], p[k]);
            }
        }
        if (b.dim == 1)
            b.lo[1] = b.hi[1] = 0.0;
        return b;
    }

    double extent(int k) const { return hi[k] - lo[k]; }

    double diameter() const
    {
        double s = 0.0;
        for (int k = 0; k < dim; ++k)
            s += extent(k) * extent(k);
        return std::sqrt(s);
    }

    double distance(const BoundingBox& o) const
    {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double gap = std::max({0.0, o.lo[k] - hi[k], lo[k] - o.hi[k]});
            s += gap * gap;
        }
        return std::sqrt(s);
    }

    Point center() const { return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])}; }

    bool contains(const Point& p) const
    {
        for (int k = 0; k < dim; ++k)
            if (p[k] < lo[k] || p[k] > hi[k])
                return false;
        return true;
    }

    BoundingBox merged(const BoundingBox& o) const
    {
        BoundingBox b = *this;
        for (int k = 0; k < 2; ++k) {
            b.lo[k] = std::min(lo[k], o.lo[k]);
            b.hi[k] = std::max(hi[k], o.hi[k]);
        }
        return b;
    }
};

struct ClusterNode
{
    Index                        begin = 0;
    Index                        end   = 0;
    BoundingBox                  box;
    std::unique_ptr<ClusterNode> left;
    std::unique_ptr<ClusterNode> right;

    Index size() const { return end - begin; }
    bool  is_leaf() const { return !left; }

    Index depth() const
    {
        if (is_leaf())
            return 0;
        return 1 + std::max(left->depth(), right->depth());
    }

    template <typename F>
    void visit_leaves(F&& f) const
    {
        if (is_leaf())
            f(*this);
        else {
            left->visit_leaves(f);
            right->visit_leaves(f);
        }
    }
};

//
// maps tree positions to original indices and back
//
class Permutation
{
public:
    Permutation() = default;

    explicit Permutation(std::vector<Index> tree_to_orig)
        : _fwd(std::move(tree_to_orig))
        , _inv(_fwd.size(), -1)
    {
        for (std::size_t p = 0; p < _fwd.size(); ++p) {
            const Index o = _fwd[p];
            LEVYH_REQUIRE(o >= 0 && o < Index(_fwd.size()) && _inv[std::size_t(o)] < 0,
                          "permutation is not a bijection");
            _inv[std::size_t(o)] = Index(p);
        }
    }

    static Permutation identity(Index n)
    {
        std::vector<Index> v(static_cast<std::size_t>(n));
        std::iota(v.begin(), v.end(), Index(0));
        return Permutation(std::move(v));
    }

    Index size() const { return Index(_fwd.size()); }
    Index original(Index tree_pos) const { return _fwd[std::size_t(tree_pos)]; }
    Index tree(Index orig) const { return _inv[std::size_t(orig)]; }

    Vector to_tree(const Vector& x) const
    {
        LEVYH_REQUIRE(x.size() == size(), "permutation size mismatch");
        Vector y(x.size());
        for (Index p = 0; p < size(); ++p)
            y[p] = x[original(p)];
        return y;
    }

    Vector to_original(const Vector& y) const
    {
        LEVYH_REQUIRE(y.size() == size(), "permutation size mismatch");
        Vector x(y.size());
        for (Index p = 0; p < size(); ++p)
            x[original(p)] = y[p];
        return x;
    }

    // rows and columns of an originally ordered square matrix into tree order
    Matrix to_tree(const Matrix& A) const
    {
        LEVYH_REQUIRE(A.rows() == size() && A.cols() == size(), "permutation size mismatch");
        Matrix B(A.rows(), A.cols());
        for (Index q = 0; q < size(); ++q)
            for (Index p = 0; p < size(); ++p)
                B(p, q) = A(original(p), original(q));
        return B;
    }

private:
    std::vector<Index> _fwd;
    std::vector<Index> _inv;
};

enum class SplitStrategy { bisection, kmeans2 };

struct ClusterTree
{
    PointSet                     points;   // original ordering
    std::unique_ptr<ClusterNode> root;
    Permutation                  perm;
    Index                        leaf_size = 64;

    Index size() const { return points.size(); }
    int   dim() const { return points.dim(); }

    const Point& point(Index tree_pos) const { return points[perm.original(tree_pos)]; }
};

namespace detail {

inline void split_bisection(const PointSet& ps, std::vector<Index>& idx, Index begin, Index end,
                            const BoundingBox& box)
{
    int axis = 0;
    for (int k = 1; k < ps.dim(); ++k)
        if (box.extent(k) > box.extent(axis))
            axis = k;

    std::stable_sort(idx.begin() + begin, idx.begin() + end,
                     [&](Index a, Index b) { return ps[a][axis] < ps[b][axis]; });
}

inline double dist2(const Point& a, const Point& b)
{
    return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
}

// returns the split position, or -1 if one side came out empty
inline Index split_kmeans2(const PointSet& ps, std::vector<Index>& idx, Index begin, Index end,
                           const BoundingBox& box)
{
    auto closest = [&](const Point& target) {
        Index  best  = begin;
        double bestd = std::numeric_limits<double>::infinity();
        for (Index k = begin; k < end; ++k) {
            const double d = dist2(ps[idx[std::size_t(k)]], target);
            if (d < bestd) {
                bestd = d;
                best  = k;
            }
        }
        return ps[idx[std::size_t(best)]];
    };

    std::array<Point, 2> cent = {closest(box.lo), closest(box.hi)};
    std::vector<int>     label(std::size_t(end - begin), 0);

    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (Index k = begin; k < end; ++k) {
            const auto& p   = ps[idx[std::size_t(k)]];
            const int   lab = dist2(p, cent[1]) < dist2(p, cent[0]) ? 1 : 0;
            if (lab != label[std::size_t(k - begin)]) {
                label[std::size_t(k - begin)] = lab;
                changed                       = true;
            }
        }
        if (iter > 0 && !changed)
            break;

        std::array<Point, 2> sum = {Point{0, 0}, Point{0, 0}};
        std::array<Index, 2> cnt = {0, 0};
        for (Index k = begin; k < end; ++k) {
            const int   lab = label[std::size_t(k - begin)];
            const auto& p   = ps[idx[std::size_t(k)]];
            sum[lab][0] += p[0];
            sum[lab][1] += p[1];
            ++cnt[lab];
        }
        if (cnt[0] == 0 || cnt[1] == 0)
            return -1;
        for (int c = 0; c < 2; ++c)
            cent[c] = {sum[c][0] / double(cnt[c]), sum[c][1] / double(cnt[c])};
    }

    std::vector<Index> left, right;
    for (Index k = begin; k < end; ++k)
        (label[std::size_t(k - begin)] == 0 ? left : right).push_back(idx[std::size_t(k)]);
    if (left.empty() || right.empty())
        return -1;
    std::copy(left.begin(), left.end(), idx.begin() + begin);
    std::copy(right.begin(), right.end(), idx.begin() + begin + Index(left.size()));
    return begin + Index(left.size());
}

inline std::unique_ptr<ClusterNode> build_node(const PointSet& ps, std::vector<Index>& idx, Index begin,
                                               Index end, Index leaf_size, SplitStrategy strategy)
{
    auto node   = std::make_unique<ClusterNode>();
    node->begin = begin;
    node->end   = end;
    node->box   = BoundingBox::of(ps, idx.begin() + begin, idx.begin() + end);

    if (end - begin <= leaf_size)
        return node;

    Index mid = -1;
    if (strategy == SplitStrategy::kmeans2)
        mid = split_kmeans2(ps, idx, begin, end, node->box);
    if (mid < 0) {
        if (strategy == SplitStrategy::bisection)
            split_bisection(ps, idx, begin, end, node->box);
        mid = begin + (end - begin) / 2;
    }

    node->left  = build_node(ps, idx, begin, mid, leaf_size, strategy);
    node->right = build_node(ps, idx, mid, end, leaf_size, strategy);
    return node;
}

}// namespace detail

inline std::shared_ptr<const ClusterTree> build_cluster_tree(PointSet pts, Index leaf_size = 64,
                                                             SplitStrategy strategy = SplitStrategy::bisection)
{
    LEVYH_REQUIRE(pts.size() > 0, "empty point set");
    LEVYH_REQUIRE(leaf_size >= 1, "leaf_size must be positive");

    std::vector<Index> idx(std::size_t(pts.size()));
    std::iota(idx.begin(), idx.end(), Index(0));

    auto tree       = std::make_shared<ClusterTree>();
    tree->root      = detail::build_node(pts, idx, 0, pts.size(), leaf_size, strategy);
    tree->perm      = Permutation(std::move(idx));
    tree->points    = std::move(pts);
    tree->leaf_size = leaf_size;
    return tree;
}

inline bool admissible(const ClusterNode& a, const ClusterNode& b, double eta)
{
    const double dist = a.box.distance(b.box);
    if (dist <= 0.0)
        return false;
    return std::min(a.box.diameter(), b.box.diameter()) <= eta * dist;
}

}// namespace levyh
