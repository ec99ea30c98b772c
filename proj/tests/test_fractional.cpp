#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levyh/fractional.hpp"
#include "support.hpp"

using namespace levyh;
using namespace testsupport;

namespace {

const double pi = 3.14159265358979323846;

// (−Δ)^s e^{−x²} at 0 from its Fourier integral (1/π)∫_0^∞ ξ^{2s}√π e^{−ξ²/4} dξ
double gaussian_reference(double s)
{
    boost::math::quadrature::exp_sinh<double> q;
    auto f = [s](double xi) { return std::pow(xi, 2.0 * s) * std::sqrt(pi) * std::exp(-0.25 * xi * xi); };
    return q.integrate(f, 0.0, std::numeric_limits<double>::infinity()) / pi;
}

double gauss(double x)
{
    return std::exp(-x * x);
}

FracConfig eval_config(double rho_r = 0.2)
{
    FracConfig cfg;
    cfg.rho_r = rho_r;
    cfg.L_W   = 5.0;
    return cfg;
}

}// namespace

TEST(KernelConstant, ClosedForms)
{
    EXPECT_NEAR(frac_kernel_constant(1, 0.5), 1.0 / pi, 1e-14);
    EXPECT_NEAR(frac_kernel_constant(2, 0.5), 1.0 / (2.0 * pi), 1e-14);
    for (double s : {0.25, 0.75}) {
        const double c = frac_kernel_constant(1, s);
        EXPECT_TRUE(std::isfinite(c));
        EXPECT_GT(c, 0.0);
    }
    // d = 1, s = 0.25 from tgamma directly
    const double s = 0.25;
    EXPECT_NEAR(frac_kernel_constant(1, s),
                std::pow(4.0, s) * std::tgamma(0.5 + s) / (std::sqrt(pi) * std::abs(std::tgamma(-s))), 1e-13);
}

TEST(KernelConstant, RejectsEndpoints)
{
    EXPECT_THROW(frac_kernel_constant(1, 0.0), Error);
    EXPECT_THROW(frac_kernel_constant(1, 1.0), Error);
    EXPECT_THROW(frac_kernel_constant(1, 1.0 - 1e-13), Error);
    EXPECT_THROW(frac_kernel_constant(3, 0.5), Error);
}

TEST(WindowFn, Shape)
{
    const Window rho{0.2};
    EXPECT_EQ(rho(0.0), 1.0);
    EXPECT_EQ(rho(0.2), 0.0);
    EXPECT_EQ(rho(0.5), 0.0);
    EXPECT_EQ(rho(0.07), rho(-0.07));
    for (double t = 1e-6; t <= 1e-2; t *= 10.0) {
        const double y = t * rho.radius;
        EXPECT_LE(rho.complement(y) / std::pow(y, 4), 2.0 / std::pow(rho.radius, 4) * (1.0 + 1e-12));
        EXPECT_NEAR(rho(y) + rho.complement(y), 1.0, 1e-15);
    }
    EXPECT_NEAR(rho.complement(0.1), 1.0 - rho(0.1), 1e-15);
}

TEST(WindowFn, CompensatedIntegrandIsCubic)
{
    // wide window so the y⁴ flatness term stays below y³ across the fit range
    const Window        rho{1.0};
    const double        x = 0.3;
    std::vector<double> ys, vals;
    for (double y = 1e-4; y <= 1e-1 * 1.0001; y *= std::sqrt(10.0)) {
        const double r = std::sin(x + y) - std::sin(x) - rho(y) * std::cos(x) * y + 0.5 * rho(y) * std::sin(x) * y * y;
        ys.push_back(y);
        vals.push_back(std::abs(r));
    }
    EXPECT_NEAR(loglog_slope(ys, vals), 3.0, 0.1);
}

TEST(TailMass, PowerLaw)
{
    const auto nu = fractional_measure(1, 0.5);
    EXPECT_NEAR(tail_mass(nu, 5.0), 2.0 / (5.0 * pi), 1e-14);

    // generic path agrees with the closed form
    LevyMeasure plain = nu;
    plain.power_s.reset();
    EXPECT_NEAR(tail_mass(plain, 5.0), 2.0 / (5.0 * pi), 1e-10);
}

TEST(TailMass, SquareComplementIn2D)
{
    const double s  = 0.5;
    const auto   nu = fractional_measure(2, s);
    // polar integral over r > L/cos θ on the eight octants, done here with nested adaptive quadrature
    boost::math::quadrature::exp_sinh<double> q;
    const double L     = 2.0;
    auto         inner = [&](double t) {
        const double r0 = L / std::cos(t);
        return q.integrate([&](double r) { return nu(Point{r, 0.0}) * r; }, r0, std::numeric_limits<double>::infinity());
    };
    const double ref = 8.0 * boost::math::quadrature::gauss<double, 30>::integrate(inner, 0.0, pi / 4.0);
    EXPECT_NEAR(tail_mass(nu, L), ref, 1e-9 * ref);
}

TEST(SecondMoment, BelowUnwindowedBound)
{
    const auto   nu = fractional_measure(1, 0.5);
    const double M  = window_second_moment(nu, Window{0.2});
    EXPECT_GT(M, 0.0);
    EXPECT_LT(M, 0.1273);

    // M against direct Gauss–Kronrod on y^{1−2s}ρ(y) for s = 0.25
    const auto   nu2 = fractional_measure(1, 0.25);
    const double c   = frac_kernel_constant(1, 0.25);
    const Window rho{0.2};
    auto         f   = [&](double y) { return 2.0 * c * rho(y) * std::sqrt(y); };
    const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 0.2, 20, 1e-14);
    EXPECT_NEAR(window_second_moment(nu2, rho), ref, 1e-11 * ref);
}

TEST(SecondMoment, TwoDimensionalMatchesAxisMoment)
{
    // ∫ρν y₁² dy = π∫ρ(r)ν(r) r³ dr for radial ν
    const auto   nu  = fractional_measure(2, 0.3);
    const Window rho{0.2};
    const double c   = frac_kernel_constant(2, 0.3);
    auto         f   = [&](double r) { return pi * rho(r) * c * std::pow(r, 3.0 - 2.0 - 0.6); };
    const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 0.2, 20, 1e-14);
    EXPECT_NEAR(window_second_moment(nu, rho), ref, 1e-10 * ref);
}

TEST(FracOperator1D, TrivialInputs)
{
    const FracOperator1D op(fractional_measure(1, 0.5), eval_config(), 1.0 / 64);
    auto                 one  = [](double) { return 3.0; };
    auto                 line = [](double x) { return 2.0 * x; };
    EXPECT_NEAR(op.eval_I1(one, 0.1), 0.0, 1e-12);
    EXPECT_NEAR(op.eval_I1(line, 0.0), 0.0, 1e-12);
    EXPECT_NEAR(op.eval_I3(line, 0.4), 0.0, 1e-12);
    EXPECT_EQ(op.apply_at([](double) { return 0.0; }, 0.3), 0.0);

    // constant u with consistent far field
    FracConfig cfg = eval_config();
    const double C = 3.0, tail = tail_mass(fractional_measure(1, 0.5), cfg.L_W);
    cfg.far_field  = [=](const Point&) { return C * tail; };
    const FracOperator1D opf(fractional_measure(1, 0.5), cfg, 1.0 / 64);
    EXPECT_NEAR(opf.eval_I2(one, 0.0), 0.0, 1e-14);
    EXPECT_NEAR(opf.apply_at(one, 0.0), 0.0, 1e-10);

    // no far field: I₂ = −u·tail
    EXPECT_NEAR(op.eval_I2(one, 0.0), -3.0 * tail, 1e-14);
}

TEST(FracOperator1D, StencilReproducesPointwiseSum)
{
    const double         h = 1.0 / 32;
    const FracOperator1D op(fractional_measure(1, 0.75), eval_config(), h);
    const Index          N = op.half_width();
    EXPECT_EQ(N, 160);

    double x0 = -0.5, total = 0.0;
    for (Index j = -N; j <= N; ++j)
        total += op.stencil(j) * gauss(x0 + double(j) * h);
    EXPECT_NEAR(total, op.apply_at(gauss, x0), 1e-11);

    // off-band weights are plain trapezoid values
    const auto nu = fractional_measure(1, 0.75);
    for (Index j : {Index(2), Index(7), Index(-40), Index(159)})
        EXPECT_DOUBLE_EQ(op.stencil(j), nu(double(j) * h) * h);
    EXPECT_DOUBLE_EQ(op.stencil(N), nu(double(N) * h) * h / 2.0);
    EXPECT_EQ(op.stencil(N + 1), 0.0);

    // padded sweep
    const Index n = 5;
    Vector      up(n + 2 * N);
    for (Index k = 0; k < up.size(); ++k)
        up[k] = gauss(x0 + double(k - N) * h);
    const Vector out = op.apply(up, n, x0);
    for (Index i = 0; i < n; ++i)
        EXPECT_NEAR(out[i], op.apply_at(gauss, x0 + double(i) * h), 1e-11);
}

TEST(FracOperator1D, GaussianValueAndRate)
{
    for (double s : {0.25, 0.5, 0.75}) {
        const double        ref = -gaussian_reference(s);
        std::vector<double> hs, errs;
        for (int p = 5; p <= 9; ++p) {
            const double         h = std::ldexp(1.0, -p);
            const FracOperator1D op(fractional_measure(1, s), eval_config(), h);
            hs.push_back(h);
            errs.push_back(std::abs(op.apply_at(gauss, 0.0) - ref));
        }
        EXPECT_LE(errs.back(), 1e-3) << "s = " << s;
        EXPECT_GE(loglog_slope(hs, errs), 2.0) << "s = " << s;
    }
    // closed form 2^{2s}Γ(s + ½)/√π
    EXPECT_NEAR(gaussian_reference(0.5), 2.0 / std::sqrt(pi), 1e-12);
}

TEST(FracOperator1D, WindowIndependence)
{
    std::vector<double> hs, diffs;
    for (int p = 5; p <= 8; ++p) {
        const double         h = std::ldexp(1.0, -p);
        const FracOperator1D a(fractional_measure(1, 0.5), eval_config(0.1), h);
        const FracOperator1D b(fractional_measure(1, 0.5), eval_config(0.3), h);
        hs.push_back(h);
        diffs.push_back(std::abs(a.apply_at(gauss, 0.2) - b.apply_at(gauss, 0.2)));
    }
    EXPECT_LT(diffs.back(), 1e-3);
    EXPECT_GE(loglog_slope(hs, diffs), 1.8);
}

TEST(FracOperator1D, ConfigErrors)
{
    FracConfig cfg = eval_config();
    cfg.rho_r      = 5.0;
    EXPECT_THROW(FracOperator1D(fractional_measure(1, 0.5), cfg, 1.0 / 8), Error);
    EXPECT_THROW(FracOperator1D(fractional_measure(1, 0.5), eval_config(), 0.3), Error);
    EXPECT_THROW(FracOperator1D(fractional_measure(2, 0.5), eval_config(), 1.0 / 8), Error);
}

TEST(FracPoisson1D, DirichletMatrix)
{
    FracConfig cfg;
    cfg.L_W                 = 2.0;
    cfg.L                   = 1.0;
    const FracOperator1D op(fractional_measure(1, 0.5), cfg, 1.0 / 32);
    const Matrix         A = op.dirichlet_matrix();
    ASSERT_EQ(A.rows(), 63);
    EXPECT_LE((A - A.transpose()).norm(), 1e-12 * A.norm());

    // −A is an M-matrix here: positive diagonal, nonpositive off-diagonal, positive solution
    const Vector u = (-A).partialPivLu().solve(Vector::Ones(63));
    EXPECT_GT(u.minCoeff(), 0.0);
    EXPECT_GT(u[31], u[0]);

    cfg.L_W = 1.5;
    const FracOperator1D narrow(fractional_measure(1, 0.5), cfg, 1.0 / 32);
    EXPECT_THROW(narrow.dirichlet_matrix(), Error);
}

TEST(FracOperator2D, TrivialAndSymmetry)
{
    FracConfig cfg;
    cfg.L_W = 2.0;
    const FracOperator2D op(fractional_measure(2, 0.5), cfg, 1.0 / 16);
    EXPECT_EQ(op.apply_at([](const Point&) { return 0.0; }, Point{0.0, 0.0}), 0.0);
    EXPECT_DOUBLE_EQ(op.stencil(3, 5), op.stencil(-5, 3));
    EXPECT_DOUBLE_EQ(op.stencil(1, 0), op.stencil(0, -1));
    const auto nu = fractional_measure(2, 0.5);
    EXPECT_DOUBLE_EQ(op.stencil(4, 1), nu(Point{4.0 / 16, 1.0 / 16}) / 256.0);

    // linear u: compensated terms vanish and the symmetric sum cancels
    auto lin = [](const Point& x) { return 1.0 + x[0] - 2.0 * x[1]; };
    const double tail = op.tail();
    EXPECT_NEAR(op.apply_at(lin, Point{0.0, 0.0}), -tail, 1e-9);
}

TEST(FracOperator2D, GaussianMatchesFourierValue)
{
    // (−Δ)^s e^{−|x|²} at 0 in 2D = (1/4π)∫|ξ|^{2s}π e^{−|ξ|²/4}dξ = 4^s Γ(1+s)
    const double s = 0.5, ref = -std::pow(4.0, s) * std::tgamma(1.0 + s);
    FracConfig   cfg;
    cfg.L_W = 4.0;
    // far field of e^{−|x|²} beyond L_W is below 1e-6
    auto g = [](const Point& x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); };
    std::vector<double> hs, errs;
    for (int p = 3; p <= 5; ++p) {
        const double         h = std::ldexp(1.0, -p);
        const FracOperator2D op(fractional_measure(2, s), cfg, h);
        hs.push_back(h);
        errs.push_back(std::abs(op.apply_at(g, Point{0.0, 0.0}) - ref));
    }
    EXPECT_LT(errs.back(), 5e-3);
    EXPECT_GE(loglog_slope(hs, errs), 1.8);
}

TEST(FracOperator2D, BallFunctionCenter)
{
    FracConfig cfg;
    cfg.L_W = 2.0;
    cfg.L   = 1.0;
    const FracOperator2D op(fractional_measure(2, 0.5), cfg, 1.0 / 64);
    auto                 u = [](const Point& x) { return ball_function(x, 0.5); };
    EXPECT_NEAR(-op.apply_at(u, Point{0.0, 0.0}), 1.0, 5e-2);
}

TEST(LShape, Geometry)
{
    EXPECT_NEAR(lshape_boundary_distance(Point{-0.5, -0.5}), 0.5, 1e-15);
    EXPECT_NEAR(lshape_order(Point{-0.5, -0.5}), 0.5, 1e-15);
    EXPECT_NEAR(lshape_boundary_distance(Point{0.5, -0.25}), 0.25, 1e-15);
    EXPECT_NEAR(lshape_boundary_distance(Point{-0.1, 0.5}), 0.1, 1e-15);
    EXPECT_NEAR(lshape_boundary_distance(Point{0.1, -0.1}), 0.1, 1e-15);
    EXPECT_EQ(lshape_order(Point{-1.0, 0.3}), 0.9);
    EXPECT_TRUE(in_lshape(Point{-0.5, 0.5}));
    EXPECT_FALSE(in_lshape(Point{0.5, 0.5}));
}

TEST(LShape, AssemblySizesAndRows)
{
    for (auto [n, N] : std::vector<std::pair<Index, Index>>{{30, 675}, {40, 1200}}) {
        const auto sys = assemble_variable_order(n, lshape_order, [](const Point&) { return 0.0; });
        EXPECT_EQ(Index(sys.points.size()), N);
        EXPECT_EQ(sys.rhs.norm(), 0.0);
        if (n == 30) {
            // constant order reproduces the FracOperator2D stencil
            const auto cst = assemble_variable_order(n, [](const Point&) { return 0.4; });
            FracConfig cfg;
            cfg.L_W = 2.0;
            const FracOperator2D op(fractional_measure(2, 0.4), cfg, 2.0 / 30);
            EXPECT_DOUBLE_EQ(cst.A(10, 10), op.stencil(0, 0));
            EXPECT_LE((cst.A - cst.A.transpose()).norm(), 1e-12 * cst.A.norm());
            EXPECT_GT(cst.rhs.minCoeff(), 0.0);
            // variable order breaks symmetry
            EXPECT_GT((sys.A - sys.A.transpose()).norm(), 1e-6 * sys.A.norm());
        }
    }
    EXPECT_THROW(assemble_variable_order(30, [](const Point&) { return 1.2; }), Error);
}
