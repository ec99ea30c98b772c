#pragma once

#include <array>
#include <memory>
#include <optional>

#include "geometry.hpp"
#include "lowrank.hpp"

namespace levyh {

enum class BlockKind { dense, lowrank, hier };

//
// node of the H-matrix block tree; row/col offsets refer to tree ordering
//
struct Block
{
    BlockKind          kind = BlockKind::dense;
    Index              row_begin = 0;
    Index              col_begin = 0;
    Index              rows = 0;
    Index              cols = 0;
    const ClusterNode* row_cluster = nullptr;
    const ClusterNode* col_cluster = nullptr;

    // dense: D holds the matrix, or L\U after factorization with row pivots P
    Matrix                                                 D;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
    bool                                                   factored = false;

    // lowrank
    LowRank R;

    // hier: children in row-major order (00, 01, 10, 11)
    std::array<std::unique_ptr<Block>, 4> child;

    bool is_dense() const { return kind == BlockKind::dense; }
    bool is_lowrank() const { return kind == BlockKind::lowrank; }
    bool is_hier() const { return kind == BlockKind::hier; }

    Block&       sub(int i, int j) { return *child[std::size_t(2 * i + j)]; }
    const Block& sub(int i, int j) const { return *child[std::size_t(2 * i + j)]; }

    std::unique_ptr<Block> clone() const
    {
        auto b         = std::make_unique<Block>();
        b->kind        = kind;
        b->row_begin   = row_begin;
        b->col_begin   = col_begin;
        b->rows        = rows;
        b->cols        = cols;
        b->row_cluster = row_cluster;
        b->col_cluster = col_cluster;
        b->D           = D;
        b->P           = P;
        b->factored    = factored;
        b->R           = R;
        for (std::size_t k = 0; k < 4; ++k)
            if (child[k])
                b->child[k] = child[k]->clone();
        return b;
    }

    template <typename F>
    void visit_leaves(F&& f) const
    {
        if (is_hier())
            for (const auto& c : child)
                c->visit_leaves(f);
        else
            f(*this);
    }

    std::string path() const
    {
        return "rows " + range_str(row_begin, row_begin + rows) + " cols " + range_str(col_begin, col_begin + cols);
    }
};

struct HConfig
{
    Index  n_min          = 64;     // leaf size of the cluster trees
    Index  n_block        = 4;      // N_max = ceil(N / n_block)
    double eta            = 1.0;
    Index  fixed_rank     = 10;     // expansion order r (r+1 terms per dimension)
    double eps1           = 1e-4;   // dense-path truncation
    double recompress_eps = 0.0;    // optional recompression of expansion factors
};

class HMatrix
{
public:
    std::unique_ptr<Block>             root;
    std::shared_ptr<const ClusterTree> row_tree;
    std::shared_ptr<const ClusterTree> col_tree;
    double                             eta = 1.0;

    Index rows() const { return root ? root->rows : 0; }
    Index cols() const { return root ? root->cols : 0; }

    HMatrix clone() const
    {
        HMatrix h;
        h.root     = root->clone();
        h.row_tree = row_tree;
        h.col_tree = col_tree;
        h.eta      = eta;
        return h;
    }
};

struct MemoryReport
{
    Index  dense_blocks   = 0;
    Index  lowrank_blocks = 0;
    Index  stored_scalars = 0;
    double bytes_at_8B    = 0.0;
    Index  max_rank       = 0;
};

inline MemoryReport memory_report(const Block& b)
{
    MemoryReport r;
    b.visit_leaves([&](const Block& l) {
        if (l.is_dense()) {
            ++r.dense_blocks;
            r.stored_scalars += l.rows * l.cols;
        } else {
            ++r.lowrank_blocks;
            r.stored_scalars += l.R.rank() * (l.rows + l.cols);
            r.max_rank = std::max(r.max_rank, l.R.rank());
        }
    });
    r.bytes_at_8B = 8.0 * double(r.stored_scalars);
    return r;
}

inline MemoryReport memory_report(const HMatrix& H)
{
    return memory_report(*H.root);
}

//
// smallest r > max{log2(e^{2ε²D²}/δ) − 1, 12ε²D² − 1}, clamped at 0
//
inline Index rank_bound_gaussian(double eps, double D, double delta)
{
    LEVYH_REQUIRE(D > 0.0 && delta > 0.0, "rank bound needs D > 0 and delta > 0");
    const double e2D2  = eps * eps * D * D;
    const double b1    = 2.0 * e2D2 / std::log(2.0) - std::log2(delta) - 1.0;
    const double b2    = 12.0 * e2D2 - 1.0;
    const double bound = std::max(b1, b2);
    if (bound < 0.0)
        return 0;
    return Index(std::floor(bound)) + 1;
}

struct RankSelector
{
    enum class Mode { fixed, lemma };

    Mode   mode  = Mode::fixed;
    Index  order = 10;
    double delta = 1e-8;

    static RankSelector fixed(Index r) { return {Mode::fixed, r, 0.0}; }
    static RankSelector lemma(double delta) { return {Mode::lemma, 0, delta}; }
};

//
// separable approximation k(x,y) ≈ Σ α_n(x) β_n(y) on admissible cluster pairs
//
class KernelExpansion
{
public:
    virtual ~KernelExpansion() = default;

    virtual double kernel(const Point& x, const Point& y) const = 0;

    virtual LowRank factors(const std::vector<Point>& xs, const BoundingBox& xbox,
                            const std::vector<Point>& ys, const BoundingBox& ybox) const = 0;
};

enum class ExpansionCenter {
    row,        // x̄ = row-cluster center, t0 = x − x̄, t = y − x̄
    two_sided   // x̄, ȳ = row and column centers; expands exp(2ε²(x−x̄)(y−ȳ))
};

//
// k(x,y) = scale · exp(−ε²|x − y|²), tensorized per dimension in 2D
//
class GaussianExpansion : public KernelExpansion
{
public:
    GaussianExpansion(double eps2, int dim, RankSelector rank = RankSelector::fixed(10),
                      ExpansionCenter center = ExpansionCenter::two_sided, double scale = 1.0)
        : _eps2(eps2)
        , _dim(dim)
        , _rank(rank)
        , _center(center)
        , _scale(scale)
    {
        LEVYH_REQUIRE(eps2 >= 0.0, "Gaussian coefficient must be nonnegative");
        LEVYH_REQUIRE(dim == 1 || dim == 2, "dimension must be 1 or 2");
    }

    double eps2() const { return _eps2; }
    int    dim() const { return _dim; }

    double kernel(const Point& x, const Point& y) const override
    {
        double d2 = 0.0;
        for (int k = 0; k < _dim; ++k)
            d2 += (x[k] - y[k]) * (x[k] - y[k]);
        return _scale * std::exp(-_eps2 * d2);
    }

    Index order_for(const BoundingBox& xbox, const BoundingBox& ybox) const
    {
        if (_rank.mode == RankSelector::Mode::fixed)
            return _rank.order;
        const double D = std::max(xbox.merged(ybox).diameter(), 1e-300);
        return rank_bound_gaussian(std::sqrt(_eps2), D, _rank.delta / std::max(std::abs(_scale), 1e-300));
    }

    LowRank factors(const std::vector<Point>& xs, const BoundingBox& xbox, const std::vector<Point>& ys,
                    const BoundingBox& ybox) const override
    {
        const Index r     = order_for(xbox, ybox);
        const Index m     = Index(xs.size());
        const Index n     = Index(ys.size());
        const Point xc    = xbox.center();
        const Point yc    = _center == ExpansionCenter::row ? xc : ybox.center();

        std::array<Matrix, 2> U1, V1;
        for (int k = 0; k < _dim; ++k) {
            U1[std::size_t(k)].resize(m, r + 1);
            V1[std::size_t(k)].resize(n, r + 1);
            const double c = xc[k] - yc[k];
            for (Index i = 0; i < m; ++i) {
                const double a   = xs[std::size_t(i)][k] - xc[k];
                // row center: t0 = a, exp(−ε²t0²); two-sided: exp(−ε²(a + c)²)
                const double env = std::exp(-_eps2 * (a + c) * (a + c));
                double       p   = env;
                for (Index q = 0; q <= r; ++q) {
                    U1[std::size_t(k)](i, q) = p;
                    p *= 2.0 * _eps2 * a / double(q + 1);
                }
            }
            for (Index j = 0; j < n; ++j) {
                const double b   = ys[std::size_t(j)][k] - yc[k];
                const double env = std::exp(-_eps2 * (b * b - 2.0 * c * b));
                double       p   = env;
                for (Index q = 0; q <= r; ++q) {
                    V1[std::size_t(k)](j, q) = p;
                    p *= b;
                }
            }
        }

        if (_dim == 1)
            return LowRank(_scale * U1[0], std::move(V1[0]));

        const Index t = (r + 1) * (r + 1);
        Matrix      U(m, t), V(n, t);
        for (Index q1 = 0; q1 <= r; ++q1)
            for (Index q2 = 0; q2 <= r; ++q2) {
                const Index col = q1 * (r + 1) + q2;
                U.col(col)      = _scale * U1[0].col(q1).cwiseProduct(U1[1].col(q2));
                V.col(col)      = V1[0].col(q1).cwiseProduct(V1[1].col(q2));
            }
        return LowRank(std::move(U), std::move(V));
    }

private:
    double          _eps2;
    int             _dim;
    RankSelector    _rank;
    ExpansionCenter _center;
    double          _scale;
};

//
// source of block data for the generic builder; row/col nodes refer to tree ordering
//
class BlockGenerator
{
public:
    virtual ~BlockGenerator() = default;

    virtual Matrix dense(const ClusterNode& r, const ClusterNode& c) const = 0;

    // nullopt: no separable form available, treat block as inadmissible
    virtual std::optional<LowRank> lowrank(const ClusterNode& r, const ClusterNode& c) const = 0;
};

namespace detail {

inline std::vector<Point> cluster_points(const ClusterTree& t, const ClusterNode& n)
{
    std::vector<Point> pts;
    pts.reserve(std::size_t(n.size()));
    for (Index p = n.begin; p < n.end; ++p)
        pts.push_back(t.point(p));
    return pts;
}

struct BuildContext
{
    const BlockGenerator& gen;
    const HConfig&        cfg;
    Index                 n_max;
};

inline std::unique_ptr<Block> make_block(const ClusterNode& r, const ClusterNode& c)
{
    auto b         = std::make_unique<Block>();
    b->row_begin   = r.begin;
    b->col_begin   = c.begin;
    b->rows        = r.size();
    b->cols        = c.size();
    b->row_cluster = &r;
    b->col_cluster = &c;
    return b;
}

inline std::unique_ptr<Block> build_block(const BuildContext& ctx, const ClusterNode& r, const ClusterNode& c)
{
    auto       b         = make_block(r, c);
    const bool can_split = !r.is_leaf() && !c.is_leaf();

    if (admissible(r, c, ctx.cfg.eta) && std::max(r.size(), c.size()) <= ctx.n_max) {
        if (auto lr = ctx.gen.lowrank(r, c)) {
            LEVYH_REQUIRE(lr->rows() == r.size() && lr->cols() == c.size(), "low-rank factor shape mismatch");
            if (ctx.cfg.recompress_eps > 0.0 && 2 * lr->rank() > std::min(r.size(), c.size()))
                *lr = recompress(*lr, ctx.cfg.recompress_eps);
            if (2 * lr->rank() <= std::min(r.size(), c.size())) {
                b->kind = BlockKind::lowrank;
                b->R    = std::move(*lr);
                return b;
            }
        }
    }

    if (!can_split) {
        b->kind = BlockKind::dense;
        b->D    = ctx.gen.dense(r, c);
        return b;
    }

    b->kind     = BlockKind::hier;
    b->child[0] = build_block(ctx, *r.left, *c.left);
    b->child[1] = build_block(ctx, *r.left, *c.right);
    b->child[2] = build_block(ctx, *r.right, *c.left);
    b->child[3] = build_block(ctx, *r.right, *c.right);
    return b;
}

}// namespace detail

inline HMatrix build_hmatrix(std::shared_ptr<const ClusterTree> row_tree, std::shared_ptr<const ClusterTree> col_tree,
                             const BlockGenerator& gen, const HConfig& cfg)
{
    LEVYH_REQUIRE(row_tree && col_tree, "missing cluster tree");
    LEVYH_REQUIRE(cfg.n_block >= 2, "n_block must be at least 2");
    LEVYH_REQUIRE(cfg.eta > 0.0, "eta must be positive");

    const Index           n = std::max(row_tree->size(), col_tree->size());
    detail::BuildContext ctx{gen, cfg, (n + cfg.n_block - 1) / cfg.n_block};

    HMatrix H;
    H.root     = detail::build_block(ctx, *row_tree->root, *col_tree->root);
    H.row_tree = std::move(row_tree);
    H.col_tree = std::move(col_tree);
    H.eta      = cfg.eta;
    return H;
}

//
// kernel matrix K_ij = k(x_i, y_j), optionally plus a local correction on dense blocks
//
class KernelGenerator : public BlockGenerator
{
public:
    KernelGenerator(const ClusterTree& rt, const ClusterTree& ct, const KernelExpansion& exp)
        : _rt(rt)
        , _ct(ct)
        , _exp(exp)
    {}

    Matrix dense(const ClusterNode& r, const ClusterNode& c) const override
    {
        Matrix M(r.size(), c.size());
        for (Index j = 0; j < c.size(); ++j) {
            const Point& y = _ct.point(c.begin + j);
            for (Index i = 0; i < r.size(); ++i)
                M(i, j) = _exp.kernel(_rt.point(r.begin + i), y);
        }
        return M;
    }

    std::optional<LowRank> lowrank(const ClusterNode& r, const ClusterNode& c) const override
    {
        return _exp.factors(detail::cluster_points(_rt, r), r.box, detail::cluster_points(_ct, c), c.box);
    }

private:
    const ClusterTree&     _rt;
    const ClusterTree&     _ct;
    const KernelExpansion& _exp;
};

inline HMatrix build_from_expansion(std::shared_ptr<const ClusterTree> row_tree,
                                    std::shared_ptr<const ClusterTree> col_tree, const KernelExpansion& exp,
                                    const HConfig& cfg)
{
    KernelGenerator gen(*row_tree, *col_tree, exp);
    return build_hmatrix(std::move(row_tree), std::move(col_tree), gen, cfg);
}

//
// blocks of an explicitly assembled matrix (tree ordering), truncated SVD on admissible blocks
//
class DenseGenerator : public BlockGenerator
{
public:
    DenseGenerator(const Matrix& A, double eps1)
        : _A(A)
        , _eps1(eps1)
    {}

    Matrix dense(const ClusterNode& r, const ClusterNode& c) const override
    {
        return _A.block(r.begin, c.begin, r.size(), c.size());
    }

    std::optional<LowRank> lowrank(const ClusterNode& r, const ClusterNode& c) const override
    {
        return truncated_svd(_A.block(r.begin, c.begin, r.size(), c.size()), _eps1);
    }

private:
    const Matrix& _A;
    double        _eps1;
};

inline HMatrix build_from_dense(const Matrix& A, std::shared_ptr<const ClusterTree> row_tree,
                                std::shared_ptr<const ClusterTree> col_tree, const HConfig& cfg)
{
    LEVYH_REQUIRE(A.rows() == row_tree->size() && A.cols() == col_tree->size(), "matrix does not match trees");
    LEVYH_REQUIRE(A.allFinite(), "non-finite matrix entries");
    DenseGenerator gen(A, cfg.eps1);
    return build_hmatrix(std::move(row_tree), std::move(col_tree), gen, cfg);
}

}// namespace levyh
