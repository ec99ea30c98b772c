#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "levy.hpp"

namespace levyh {

//
// c_{d,s} = 4^s Γ(d/2 + s) / (π^{d/2} |Γ(−s)|), with |Γ(−s)| = Γ(1−s)/s
//
inline double frac_kernel_constant(int d, double s)
{
    LEVYH_REQUIRE(d == 1 || d == 2, "dimension must be 1 or 2");
    LEVYH_REQUIRE(s > 1e-12 && s < 1.0 - 1e-12, "fractional order must lie in (0, 1)");
    const double pi      = 3.14159265358979323846;
    const double log_num = s * std::log(4.0) + std::lgamma(0.5 * d + s);
    const double log_den = 0.5 * d * std::log(pi) + std::lgamma(1.0 - s) - std::log(s);
    return std::exp(log_num - log_den);
}

// ν(y) = c_{d,s}|y|^{−d−2s}
inline LevyMeasure fractional_measure(int dim, double s)
{
    const double c = frac_kernel_constant(dim, s);
    LevyMeasure  m;
    m.dim     = dim;
    m.density = [c, s, dim](const Point& y) {
        const double r = dim == 1 ? std::abs(y[0]) : std::hypot(y[0], y[1]);
        return c * std::pow(r, -double(dim) - 2.0 * s);
    };
    m.cls     = LevyMeasure::Class::singular_heavy_tail;
    m.power_s = s;
    m.power_c = c;
    return m;
}

//
// ρ(y) = (1 − (|y|/r)⁴)² on |y| ≤ r
//
struct Window
{
    double radius = 0.2;

    double operator()(double y) const
    {
        const double t = std::abs(y) / radius;
        if (t >= 1.0)
            return 0.0;
        const double q = 1.0 - t * t * t * t;
        return q * q;
    }

    // 1 − ρ(y) without cancellation
    double complement(double y) const
    {
        const double t = std::abs(y) / radius;
        if (t >= 1.0)
            return 1.0;
        const double t4 = t * t * t * t;
        return t4 * (2.0 - t4);
    }
};

struct FracConfig
{
    double                                     rho_r = 0.2;
    double                                     L_W   = 5.0;
    double                                     L     = 1.0;
    std::function<double(const Point&)>        far_field;// f_x^{L_W}; empty means 0
    std::optional<double>                      tail_mass;

    void validate() const
    {
        LEVYH_REQUIRE(rho_r > 0.0, "window radius must be positive");
        LEVYH_REQUIRE(L_W > rho_r, "window radius must be smaller than L_W");
        LEVYH_REQUIRE(L > 0.0, "domain half-width must be positive");
    }
};

namespace detail {

inline void check_order(const LevyMeasure& nu)
{
    if (nu.power_s)
        LEVYH_REQUIRE(*nu.power_s > 0.0 && *nu.power_s < 1.0, "fractional order must lie in (0, 1)");
}

// radial profile ν(r) along the first axis
inline double radial(const LevyMeasure& nu, double r)
{
    return nu(Point{r, 0.0});
}

}// namespace detail

//
// ∫ ρ(y)ν(y)y₁² dy over |y| ≤ r: graded panels [r2^{−k−1}, r2^{−k}] with 16-point Gauss–Legendre;
// for power-law ν the unresolved core ∫_0^a is added in closed form
//
inline double window_second_moment(const LevyMeasure& nu, const Window& rho)
{
    using GL = boost::math::quadrature::gauss<double, 16>;
    detail::check_order(nu);
    const double pi = 3.14159265358979323846;

    // integrand on r > 0, both half-lines folded in for 1D
    auto f = [&](double r) {
        if (nu.dim == 1)
            return rho(r) * (nu(r) + nu(-r)) * r * r;
        return pi * rho(r) * detail::radial(nu, r) * r * r * r;
    };
    // closed form of the core with ρ ≈ 1
    auto core = [&](double a) {
        if (!nu.power_s)
            return 0.0;
        const double e = 2.0 - 2.0 * *nu.power_s;
        const double k = nu.dim == 1 ? 2.0 * nu.power_c : pi * nu.power_c;
        return k * std::pow(a, e) / e;
    };

    double sum = 0.0, last = 0.0;
    double hi  = rho.radius;
    for (int level = 0; level < 60; ++level) {
        const double lo    = 0.5 * hi;
        const double panel = GL::integrate(f, lo, hi);
        sum += panel;
        const double est = sum + core(lo);
        const double change = nu.power_s ? std::abs(est - last) : std::abs(panel);
        if (level > 0 && change <= 1e-12 * std::abs(est))
            return est;
        if (est == 0.0 && level > 0)
            return 0.0;
        last = est;
        hi   = lo;
    }
    throw Error("levyh: second-moment quadrature did not converge after 60 levels");
}

//
// ∫ ν over |y| > L_W in 1D, over the complement of [−L_W, L_W]² in 2D
//
inline double tail_mass(const LevyMeasure& nu, double L_W)
{
    detail::check_order(nu);
    if (nu.power_s) {
        const double s = *nu.power_s, c = nu.power_c;
        if (nu.dim == 1)
            return c / (s * std::pow(L_W, 2.0 * s));
        using GL = boost::math::quadrature::gauss<double, 16>;
        const double pi = 3.14159265358979323846;
        const double I  = GL::integrate([s](double t) { return std::pow(std::cos(t), 2.0 * s); }, 0.0, pi / 4.0);
        return 4.0 * c / (s * std::pow(L_W, 2.0 * s)) * I;
    }
    LEVYH_REQUIRE(nu.dim == 1, "2D tail mass must be supplied for non power-law measures");
    boost::math::quadrature::exp_sinh<double> q;
    auto f = [&](double y) { return nu(y) + nu(-y); };
    return q.integrate(f, L_W, std::numeric_limits<double>::infinity());
}

//
// (δ_L u)(x) = I₁ + I₂ + I₃ on the lattice x + jh, |j| ≤ N = L_W/h, as a stencil Σ c_j u(x + jh) + f_x
//
class FracOperator1D
{
public:
    FracOperator1D(LevyMeasure nu, FracConfig cfg, double h)
        : _nu(std::move(nu))
        , _cfg(std::move(cfg))
        , _h(h)
    {
        _cfg.validate();
        LEVYH_REQUIRE(_nu.dim == 1, "FracOperator1D needs a 1D measure");
        LEVYH_REQUIRE(h > 0.0, "grid spacing must be positive");
        detail::check_order(_nu);
        const double ratio = _cfg.L_W / h;
        _N                 = Index(std::llround(ratio));
        LEVYH_REQUIRE(std::abs(ratio - double(_N)) < 1e-9 * ratio, "L_W must be a multiple of h");
        LEVYH_REQUIRE(_N >= 2, "window must span at least two grid cells");

        const Window rho{_cfg.rho_r};
        _tail = _cfg.tail_mass ? *_cfg.tail_mass : tail_mass(_nu, _cfg.L_W);
        _M    = window_second_moment(_nu, rho);

        _c.assign(std::size_t(2 * _N + 1), 0.0);
        double S0 = 0.0;
        for (Index j = -_N; j <= _N; ++j) {
            if (j == 0)
                continue;
            const double y = double(j) * h;
            const double w = std::abs(j) == _N ? 0.5 * h : h;
            const double v = _nu(y);
            S0 += v * w;
            _S1 += rho(y) * v * y * w;
            _S2 += rho(y) * v * y * y * w;
            coef(j) = v * w;
        }
        const double h2 = h * h;
        coef(0) += -S0 - _tail + (_S2 - _M) / h2;
        coef(1) += -_S1 / (2.0 * h) + (_M - _S2) / (2.0 * h2);
        coef(-1) += _S1 / (2.0 * h) + (_M - _S2) / (2.0 * h2);
    }

    Index  half_width() const { return _N; }
    double h() const { return _h; }
    double second_moment() const { return _M; }
    double tail() const { return _tail; }
    const FracConfig& config() const { return _cfg; }

    // coefficient of u(x + jh)
    double stencil(Index j) const { return std::abs(j) > _N ? 0.0 : _c[std::size_t(j + _N)]; }

    template <typename U>
    double eval_I1(const U& u, double x) const
    {
        const Window rho{_cfg.rho_r};
        const double ux = u(x);
        double       s  = 0.0;
        for (Index j = -_N; j <= _N; ++j) {
            if (j == 0)
                continue;
            const double y = double(j) * _h;
            const double w = std::abs(j) == _N ? 0.5 * _h : _h;
            s += (u(x + y) - ux) * _nu(y) * w;
        }
        const double up = u(x + _h), um = u(x - _h);
        return s - (up - um) / (2.0 * _h) * _S1 - (up + um - 2.0 * ux) / (2.0 * _h * _h) * _S2;
    }

    template <typename U>
    double eval_I2(const U& u, double x) const
    {
        return far(x) - u(x) * _tail;
    }

    template <typename U>
    double eval_I3(const U& u, double x) const
    {
        return (u(x + _h) + u(x - _h) - 2.0 * u(x)) / (2.0 * _h * _h) * _M;
    }

    template <typename U>
    double apply_at(const U& u, double x) const
    {
        return eval_I1(u, x) + eval_I2(u, x) + eval_I3(u, x);
    }

    // rows at x_i = x0 + i·h, i = 0..n−1, from samples u_k = u(x0 + (k − pad)·h), pad ≥ N
    Vector apply(const Vector& u_padded, Index n, double x0) const
    {
        const Index pad = (u_padded.size() - n) / 2;
        LEVYH_REQUIRE(pad >= _N && u_padded.size() == n + 2 * pad, "padded samples must cover the window");
        Vector out(n);
        for (Index i = 0; i < n; ++i) {
            double s = far(x0 + double(i) * _h);
            for (Index j = -_N; j <= _N; ++j)
                s += stencil(j) * u_padded[pad + i + j];
            out[i] = s;
        }
        return out;
    }

    //
    // matrix of δ_L on nodes −L + k·h, k = 1..n−1, with u = 0 off (−L, L); needs 2L ≤ L_W
    //
    Matrix dirichlet_matrix() const
    {
        const Index n = Index(std::llround(2.0 * _cfg.L / _h));
        LEVYH_REQUIRE(std::abs(2.0 * _cfg.L / _h - double(n)) < 1e-9 * double(n), "2L must be a multiple of h");
        LEVYH_REQUIRE(n - 1 <= _N, "support of u must lie inside the near field");
        Matrix A(n - 1, n - 1);
        for (Index k = 0; k < n - 1; ++k)
            for (Index i = 0; i < n - 1; ++i)
                A(i, k) = stencil(k - i);
        return A;
    }

private:
    double& coef(Index j) { return _c[std::size_t(j + _N)]; }

    double far(double x) const { return _cfg.far_field ? _cfg.far_field(Point{x, 0.0}) : 0.0; }

    LevyMeasure         _nu;
    FracConfig          _cfg;
    double              _h;
    Index               _N    = 0;
    double              _tail = 0.0;
    double              _M    = 0.0;
    double              _S1   = 0.0;
    double              _S2   = 0.0;
    std::vector<double> _c;
};

//
// 2D radial ν on the square window [−L_W, L_W]², stencil over offsets (j₁, j₂)
//
class FracOperator2D
{
public:
    FracOperator2D(LevyMeasure nu, FracConfig cfg, double h)
        : _nu(std::move(nu))
        , _cfg(std::move(cfg))
        , _h(h)
    {
        _cfg.validate();
        LEVYH_REQUIRE(_nu.dim == 2, "FracOperator2D needs a 2D measure");
        LEVYH_REQUIRE(_nu.symmetric, "FracOperator2D needs a radial measure");
        LEVYH_REQUIRE(h > 0.0, "grid spacing must be positive");
        detail::check_order(_nu);
        const double ratio = _cfg.L_W / h;
        _N                 = Index(std::llround(ratio));
        LEVYH_REQUIRE(std::abs(ratio - double(_N)) < 1e-9 * ratio, "L_W must be a multiple of h");
        LEVYH_REQUIRE(_N >= 2, "window must span at least two grid cells");

        const Window rho{_cfg.rho_r};
        _tail = _cfg.tail_mass ? *_cfg.tail_mass : tail_mass(_nu, _cfg.L_W);
        _M    = window_second_moment(_nu, rho);

        const Index W = 2 * _N + 1;
        _c.assign(std::size_t(W * W), 0.0);
        // ν depends on |j|² only
        std::vector<double> by_r2(std::size_t(2 * _N * _N + 1), -1.0);
        double              S0 = 0.0, S2x = 0.0, S2y = 0.0;
        for (Index j1 = -_N; j1 <= _N; ++j1)
            for (Index j2 = -_N; j2 <= _N; ++j2) {
                if (j1 == 0 && j2 == 0)
                    continue;
                const std::size_t r2 = std::size_t(j1 * j1 + j2 * j2);
                if (by_r2[r2] < 0.0)
                    by_r2[r2] = detail::radial(_nu, h * std::sqrt(double(r2)));
                const double v  = by_r2[r2];
                const double w  = weight(j1) * weight(j2);
                const double y1 = double(j1) * h, y2 = double(j2) * h;
                const double rw = rho(std::sqrt(y1 * y1 + y2 * y2)) * v * w;
                S0 += v * w;
                S2x += rw * y1 * y1;
                S2y += rw * y2 * y2;
                coef(j1, j2) = v * w;
            }
        const double h2 = h * h;
        coef(0, 0) += -S0 - _tail + (S2x + S2y - 2.0 * _M) / h2;
        coef(1, 0) += (_M - S2x) / (2.0 * h2);
        coef(-1, 0) += (_M - S2x) / (2.0 * h2);
        coef(0, 1) += (_M - S2y) / (2.0 * h2);
        coef(0, -1) += (_M - S2y) / (2.0 * h2);
    }

    Index  half_width() const { return _N; }
    double h() const { return _h; }
    double second_moment() const { return _M; }
    double tail() const { return _tail; }

    double stencil(Index j1, Index j2) const
    {
        if (std::abs(j1) > _N || std::abs(j2) > _N)
            return 0.0;
        return _c[std::size_t((j1 + _N) * (2 * _N + 1) + (j2 + _N))];
    }

    template <typename U>
    double apply_at(const U& u, const Point& x) const
    {
        double s = _cfg.far_field ? _cfg.far_field(x) : 0.0;
        for (Index j1 = -_N; j1 <= _N; ++j1)
            for (Index j2 = -_N; j2 <= _N; ++j2) {
                const double c = stencil(j1, j2);
                if (c != 0.0)
                    s += c * u(Point{x[0] + double(j1) * _h, x[1] + double(j2) * _h});
            }
        return s;
    }

private:
    double  weight(Index j) const { return std::abs(j) == _N ? 0.5 * _h : _h; }
    double& coef(Index j1, Index j2) { return _c[std::size_t((j1 + _N) * (2 * _N + 1) + (j2 + _N))]; }

    LevyMeasure         _nu;
    FracConfig          _cfg;
    double              _h;
    Index               _N    = 0;
    double              _tail = 0.0;
    double              _M    = 0.0;
    std::vector<double> _c;
};

//
// 2D ball u = (1 − |x|²)₊^s / (2^{2s}Γ(1+s)²), for which (−Δ)^s u = 1 on |x| ≤ 1
//
inline double ball_function(const Point& x, double s)
{
    const double r2 = x[0] * x[0] + x[1] * x[1];
    if (r2 >= 1.0)
        return 0.0;
    const double g = std::tgamma(1.0 + s);
    return std::pow(1.0 - r2, s) / (std::pow(2.0, 2.0 * s) * g * g);
}

//
// variable-order problem on Ω = [−1,1]² ∖ [0,1]²
//
inline bool in_lshape(const Point& x)
{
    const bool in_square = x[0] >= -1.0 && x[0] <= 1.0 && x[1] >= -1.0 && x[1] <= 1.0;
    return in_square && !(x[0] > 0.0 && x[1] > 0.0);
}

// distance from x ∈ Ω to ∂Ω
inline double lshape_boundary_distance(const Point& x)
{
    auto seg = [&](double ax, double ay, double bx, double by) {
        const double dx = bx - ax, dy = by - ay;
        double       t  = ((x[0] - ax) * dx + (x[1] - ay) * dy) / (dx * dx + dy * dy);
        t               = std::clamp(t, 0.0, 1.0);
        return std::hypot(x[0] - ax - t * dx, x[1] - ay - t * dy);
    };
    return std::min({seg(-1, -1, 1, -1), seg(1, -1, 1, 0), seg(1, 0, 0, 0), seg(0, 0, 0, 1), seg(0, 1, -1, 1),
                     seg(-1, 1, -1, -1)});
}

inline double lshape_order(const Point& x)
{
    return 0.9 - 0.8 * lshape_boundary_distance(x);
}

inline double lshape_source(const Point& x)
{
    auto bump = [&](double cx, double cy) {
        const double dx = x[0] - cx, dy = x[1] - cy;
        return std::exp(-10.0 * (dx * dx + dy * dy));
    };
    return bump(-0.5, 0.5) + bump(0.5, -0.5) + bump(-0.5, -0.5);
}

struct VariableOrderSystem
{
    std::vector<Point> points;// cell centres inside Ω
    Vector             order;// s(x_i)
    Matrix             A;    // row i: δ_L with order s(x_i), u = 0 on Ω^c
    Vector             rhs;
};

//
// cell-centred grid with n cells per axis on [−1,1]², h = 2/n, L_W = 2
//
inline VariableOrderSystem
assemble_variable_order(Index n, const std::function<double(const Point&)>& s_field = lshape_order,
                        const std::function<double(const Point&)>& f_field = lshape_source, double rho_r = 0.2,
                        int threads = 0)
{
    LEVYH_REQUIRE(n >= 4 && n % 2 == 0, "cells per axis must be even and at least 4");
    const double h = 2.0 / double(n);

    VariableOrderSystem sys;
    std::vector<std::array<Index, 2>> cell;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const Point p{-1.0 + (double(i) + 0.5) * h, -1.0 + (double(j) + 0.5) * h};
            if (in_lshape(p)) {
                sys.points.push_back(p);
                cell.push_back({i, j});
            }
        }
    const Index N = Index(sys.points.size());
    sys.order.resize(N);
    sys.rhs.resize(N);
    for (Index k = 0; k < N; ++k) {
        const double s = s_field(sys.points[std::size_t(k)]);
        LEVYH_REQUIRE(s > 0.0 && s < 1.0, "fractional order must lie in (0, 1) at " + std::to_string(k));
        sys.order[k] = s;
        sys.rhs[k]   = f_field(sys.points[std::size_t(k)]);
    }

    FracConfig cfg;
    cfg.rho_r = rho_r;
    cfg.L_W   = 2.0;
    cfg.L     = 1.0;

    sys.A.resize(N, N);
    parallel_for(
        N,
        [&](Index r) {
            const FracOperator2D op(fractional_measure(2, sys.order[r]), cfg, h);
            for (Index k = 0; k < N; ++k)
                sys.A(r, k) = op.stencil(cell[std::size_t(k)][0] - cell[std::size_t(r)][0],
                                         cell[std::size_t(k)][1] - cell[std::size_t(r)][1]);
        },
        threads);
    return sys;
}

}// namespace levyh
