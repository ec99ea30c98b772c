#pragma once

#include <complex>
#include <functional>
#include <optional>

#include "hops.hpp"

namespace levyh {

//
// uniform grid on [lo, lo + n·h) per axis; 2D points are row-major, idx = i·n + j ↦ (x_i, x_j)
//
struct UniformGrid
{
    int    dim = 1;
    Index  n   = 0;
    double lo  = -1.0;
    double h   = 0.0;

    // 2^k intervals of [−1, 1]: nodes −1 + i·h, i = 0..n−1
    static UniformGrid unit(int dim, Index n)
    {
        LEVYH_REQUIRE(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
        LEVYH_REQUIRE(n >= 2, "grid needs at least two nodes per axis");
        return UniformGrid{dim, n, -1.0, 2.0 / double(n)};
    }

    Index  size() const { return dim == 1 ? n : n * n; }
    double coord(Index k) const { return lo + double(k) * h; }

    Point point(Index idx) const
    {
        if (dim == 1)
            return {coord(idx), 0.0};
        return {coord(idx / n), coord(idx % n)};
    }

    PointSet points() const
    {
        std::vector<Point> pts;
        pts.reserve(std::size_t(size()));
        for (Index k = 0; k < size(); ++k)
            pts.push_back(point(k));
        return PointSet(dim, std::move(pts));
    }

    // trapezoid cell weight of an interior node
    double weight() const { return dim == 1 ? h : h * h; }
};

struct LevyMeasure
{
    enum class Class { smooth_semi_heavy, singular_heavy_tail };

    int                                 dim = 1;
    std::function<double(const Point&)> density;
    Class                               cls       = Class::smooth_semi_heavy;
    bool                                symmetric = true;
    // set when ν(y) = scale·exp(−eps2|y|²), enabling the analytic expansion
    std::optional<double> gaussian_eps2;
    double                gaussian_scale = 0.0;
    // set when ν(y) = power_c·|y|^{−d−2·power_s}
    std::optional<double> power_s;
    double                power_c = 0.0;

    double operator()(const Point& y) const
    {
        const double v = density(y);
        LEVYH_REQUIRE(std::isfinite(v) && v >= 0.0, "Levy density must be finite and nonnegative");
        return v;
    }

    double operator()(double y) const { return (*this)(Point{y, 0.0}); }

    static LevyMeasure gaussian(double eps2, int dim = 1, double scale = 1.0)
    {
        LEVYH_REQUIRE(eps2 > 0.0 && scale >= 0.0, "Gaussian measure needs eps2 > 0 and scale >= 0");
        LevyMeasure m;
        m.dim     = dim;
        m.density = [eps2, scale, dim](const Point& y) {
            const double r2 = dim == 1 ? y[0] * y[0] : y[0] * y[0] + y[1] * y[1];
            return scale * std::exp(-eps2 * r2);
        };
        m.gaussian_eps2  = eps2;
        m.gaussian_scale = scale;
        return m;
    }

    static LevyMeasure zero(int dim = 1)
    {
        LevyMeasure m;
        m.dim     = dim;
        m.density = [](const Point&) { return 0.0; };
        return m;
    }

    // ν(y) = scale·(p·λ₊e^{−λ₊y} for y > 0, (1−p)·λ₋e^{λ₋y} for y < 0), 1D only
    static LevyMeasure double_exponential(double p, double lp, double lm, double scale = 1.0)
    {
        LEVYH_REQUIRE(p >= 0.0 && p <= 1.0 && lp > 0.0 && lm > 0.0 && scale >= 0.0,
                      "double-exponential measure parameters out of range");
        LevyMeasure m;
        m.dim     = 1;
        m.density = [=](const Point& y) {
            if (y[0] > 0.0)
                return scale * p * lp * std::exp(-lp * y[0]);
            if (y[0] < 0.0)
                return scale * (1.0 - p) * lm * std::exp(lm * y[0]);
            return scale * 0.5 * (p * lp + (1.0 - p) * lm);
        };
        m.symmetric = p == 0.5 && lp == lm;
        return m;
    }
};

//
// Crank–Nicolson system for u_t = a·Δu + b·∇u + c·u + ∫(u(x+y) − u(x))ν(y)dy with u = 0 off the grid
//
struct CNSystem
{
    UniformGrid           grid;
    LevyMeasure           nu;
    double                a = 0.0;
    std::array<double, 2> b{0.0, 0.0};
    double                c      = 0.0;
    double                dt     = 0.0;
    double                lambda = 0.0;// Σ_{j≠0} ν_j over the offsets of the grid

    // A_ij in grid ordering
    double entry(Index i, Index j) const
    {
        const double w  = grid.weight();
        const double h2 = grid.h * grid.h;
        if (i == j)
            return 2.0 * grid.dim * a / h2 - c + lambda * w;

        const Point  xi  = grid.point(i);
        const Point  xj  = grid.point(j);
        double       val = -nu(Point{xj[0] - xi[0], xj[1] - xi[1]}) * w;
        const Index  n   = grid.n;
        // axis k and direction of a nearest-neighbour step from i to j
        auto neighbour = [&](int& axis, int& dir) {
            if (grid.dim == 1) {
                axis = 0;
                dir  = int(j - i);
                return std::abs(j - i) == 1;
            }
            const Index ri = i / n, ci = i % n, rj = j / n, cj = j % n;
            if (ci == cj && std::abs(rj - ri) == 1) {
                axis = 0;
                dir  = int(rj - ri);
                return true;
            }
            if (ri == rj && std::abs(cj - ci) == 1) {
                axis = 1;
                dir  = int(cj - ci);
                return true;
            }
            return false;
        };
        int axis = 0, dir = 0;
        if (neighbour(axis, dir))
            val += -a / h2 - double(dir) * b[std::size_t(axis)] / (2.0 * grid.h);
        return val;
    }

    double entry_plus(Index i, Index j) const { return double(i == j) + 0.5 * dt * entry(i, j); }
    double entry_minus(Index i, Index j) const { return double(i == j) - 0.5 * dt * entry(i, j); }

    Matrix dense_A() const { return dense_of([this](Index i, Index j) { return entry(i, j); }); }
    Matrix dense_plus() const { return dense_of([this](Index i, Index j) { return entry_plus(i, j); }); }
    Matrix dense_minus() const { return dense_of([this](Index i, Index j) { return entry_minus(i, j); }); }

    // (A·u)_i for one row, grid ordering
    double apply_row(Index i, const Vector& u) const
    {
        double s = 0.0;
        for (Index j = 0; j < grid.size(); ++j)
            s += entry(i, j) * u[j];
        return s;
    }

private:
    template <typename F>
    Matrix dense_of(F f) const
    {
        const Index N = grid.size();
        Matrix      M(N, N);
        for (Index j = 0; j < N; ++j)
            for (Index i = 0; i < N; ++i)
                M(i, j) = f(i, j);
        return M;
    }
};

namespace detail {

inline double levy_lambda(const LevyMeasure& nu, const UniformGrid& g)
{
    double      lam = 0.0;
    const Index J   = g.n;
    if (g.dim == 1) {
        for (Index j = 1; j <= J; ++j)
            lam += nu(double(j) * g.h) + nu(-double(j) * g.h);
        return lam;
    }
    for (Index j1 = -J; j1 <= J; ++j1)
        for (Index j2 = -J; j2 <= J; ++j2)
            if (j1 != 0 || j2 != 0)
                lam += nu(Point{double(j1) * g.h, double(j2) * g.h});
    return lam;
}

inline CNSystem make_cn(const LevyMeasure& nu, double a, std::array<double, 2> b, double c, const UniformGrid& g,
                        double dt)
{
    LEVYH_REQUIRE(a >= 0.0, "diffusion coefficient a must be nonnegative");
    LEVYH_REQUIRE(c <= 0.0, "reaction coefficient c must be nonpositive");
    LEVYH_REQUIRE(dt > 0.0, "time step must be positive");
    LEVYH_REQUIRE(nu.dim == g.dim, "measure and grid dimensions differ");
    LEVYH_REQUIRE(nu.cls == LevyMeasure::Class::smooth_semi_heavy,
                  "Crank-Nicolson assembly needs a measure finite on the truncation interval");
    CNSystem s;
    s.grid   = g;
    s.nu     = nu;
    s.a      = a;
    s.b      = b;
    s.c      = c;
    s.dt     = dt;
    s.lambda = levy_lambda(nu, g);
    return s;
}

}// namespace detail

inline CNSystem assemble_cn_1d(const LevyMeasure& nu, double a, double b, double c, const UniformGrid& g, double dt)
{
    LEVYH_REQUIRE(g.dim == 1, "assemble_cn_1d needs a 1D grid");
    return detail::make_cn(nu, a, {b, 0.0}, c, g, dt);
}

inline CNSystem assemble_cn_2d(const LevyMeasure& nu, double a, std::array<double, 2> b, double c,
                               const UniformGrid& g, double dt)
{
    LEVYH_REQUIRE(g.dim == 2, "assemble_cn_2d needs a 2D grid");
    return detail::make_cn(nu, a, b, c, g, dt);
}

//
// blocks of A_plus = I + Δt/2·A in tree ordering
//
class CNGenerator : public BlockGenerator
{
public:
    CNGenerator(const CNSystem& sys, const ClusterTree& tree, const HConfig& cfg,
                RankSelector rank = RankSelector::fixed(10))
        : _sys(sys)
        , _tree(tree)
        , _eps1(cfg.eps1)
    {
        if (sys.nu.gaussian_eps2)
            _exp.emplace(*sys.nu.gaussian_eps2, sys.grid.dim, rank, ExpansionCenter::two_sided,
                         -0.5 * sys.dt * sys.grid.weight() * sys.nu.gaussian_scale);
    }

    Matrix dense(const ClusterNode& r, const ClusterNode& c) const override
    {
        Matrix M(r.size(), c.size());
        for (Index j = 0; j < c.size(); ++j) {
            const Index oj = _tree.perm.original(c.begin + j);
            for (Index i = 0; i < r.size(); ++i)
                M(i, j) = _sys.entry_plus(_tree.perm.original(r.begin + i), oj);
        }
        return M;
    }

    std::optional<LowRank> lowrank(const ClusterNode& r, const ClusterNode& c) const override
    {
        // stencil neighbours sit at distance h and stay in dense blocks
        if (r.box.distance(c.box) <= _sys.grid.h * (1.0 + 1e-9))
            return std::nullopt;
        if (_exp)
            return _exp->factors(detail::cluster_points(_tree, r), r.box, detail::cluster_points(_tree, c), c.box);
        return truncated_svd(dense(r, c), _eps1);
    }

private:
    const CNSystem&                  _sys;
    const ClusterTree&               _tree;
    double                           _eps1;
    std::optional<GaussianExpansion> _exp;
};

inline HMatrix build_cn_plus(const CNSystem& sys, std::shared_ptr<const ClusterTree> tree, const HConfig& cfg)
{
    LEVYH_REQUIRE(tree->size() == sys.grid.size(), "cluster tree does not match the grid");
    CNGenerator gen(sys, *tree, cfg, RankSelector::fixed(cfg.fixed_rank));
    return build_hmatrix(tree, tree, gen, cfg);
}

//
// factorizes A_plus once; step: u ← A_plus⁻¹ (2u − A_plus u), vectors in grid ordering
//
class CNStepper
{
public:
    CNStepper(const CNSystem& sys, const HConfig& cfg, double eps2,
              SplitStrategy strategy = SplitStrategy::bisection)
    {
        _tree = build_cluster_tree(sys.grid.points(), cfg.n_min, strategy);
        _plus = build_cn_plus(sys, _tree, cfg);
        _lu   = hlu(_plus.clone(), eps2);
    }

    Vector step(const Vector& u) const
    {
        LEVYH_REQUIRE(u.size() == _tree->size(), "state vector does not match the grid");
        const Vector t   = _tree->perm.to_tree(u);
        const Vector rhs = 2.0 * t - matvec(_plus, t);
        return _tree->perm.to_original(solve(_lu, rhs));
    }

    Vector run(Vector u, Index steps) const
    {
        for (Index k = 0; k < steps; ++k)
            u = step(u);
        return u;
    }

    const HMatrix&        plus() const { return _plus; }
    const HFactorization& factors() const { return _lu; }
    const ClusterTree&    tree() const { return *_tree; }

private:
    std::shared_ptr<const ClusterTree> _tree;
    HMatrix                            _plus;
    HFactorization                     _lu;
};

class DenseCNStepper
{
public:
    explicit DenseCNStepper(const CNSystem& sys)
        : _minus(sys.dense_minus())
        , _lu(sys.dense_plus())
    {}

    Vector step(const Vector& u) const { return _lu.solve(_minus * u); }

    Vector run(Vector u, Index steps) const
    {
        for (Index k = 0; k < steps; ++k)
            u = step(u);
        return u;
    }

private:
    Matrix                       _minus;
    Eigen::PartialPivLU<Matrix> _lu;
};

//
// η_h(θ) = η_h^e + i·η_h^o with ν_j = ν(jh), |j| ≤ J
//
inline std::complex<double> symbol_eta(const LevyMeasure& nu, double h, double theta, Index J)
{
    LEVYH_REQUIRE(nu.dim == 1, "symbol is defined for 1D measures");
    double even = 0.0, odd = 0.0;
    for (Index j = 1; j <= J; ++j) {
        const double p  = nu(double(j) * h);
        const double m  = nu(-double(j) * h);
        const double s  = std::sin(0.5 * double(j) * theta * h);
        even += -2.0 * s * s * (p + m) * h;
        odd += std::sin(double(j) * h * theta) * (p - m) * h;
    }
    return {even, odd};
}

//
// von Neumann amplification factor of the CN scheme, 1D, with J = grid.n
//
inline std::complex<double> amplification(const CNSystem& sys, double theta)
{
    using C          = std::complex<double>;
    const double h   = sys.grid.h;
    const double dt  = sys.dt;
    const double s2  = std::sin(0.5 * theta) * std::sin(0.5 * theta);
    const C      eta = symbol_eta(sys.nu, h, theta, sys.grid.n);
    const C      i(0.0, 1.0);
    const C      drift = sys.b[0] * dt / (2.0 * h) * i * std::sin(theta);
    const C      num   = 1.0 - sys.a * dt / (h * h) * s2 + drift + sys.c * dt / 2.0 + dt * eta / 2.0;
    const C      den   = 1.0 + sys.a * dt / (h * h) * s2 - drift - sys.c * dt / 2.0 - dt * eta / 2.0;
    return num / den;
}

}// namespace levyh
