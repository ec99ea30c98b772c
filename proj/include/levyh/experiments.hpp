#pragma once

#include "fractional.hpp"
#include "io.hpp"
#include "solvers.hpp"

#include <boost/math/tools/minima.hpp>

namespace levyh {

// least-squares slope of log y against log x
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    LEVYH_REQUIRE(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two points");
    const double n  = double(x.size());
    double       sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        LEVYH_REQUIRE(x[i] > 0.0 && y[i] > 0.0, "slope fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// p minimizing Σ (log e_i − log C − log(q_i^p − q_ref^p))² over C, with q_i > q_ref > 0
inline double order_against_reference(const std::vector<double>& q, const std::vector<double>& e, double q_ref)
{
    LEVYH_REQUIRE(q.size() == e.size() && q.size() >= 2, "order fit needs at least two points");
    for (std::size_t i = 0; i < q.size(); ++i)
        LEVYH_REQUIRE(q[i] > q_ref && q_ref > 0.0 && e[i] > 0.0, "order fit needs q > q_ref > 0 and positive errors");
    auto misfit = [&](double p) {
        std::vector<double> r(q.size());
        double              mean = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            r[i] = std::log(e[i]) - std::log(std::pow(q[i], p) - std::pow(q_ref, p));
            mean += r[i] / double(q.size());
        }
        double ss = 0.0;
        for (double v : r)
            ss += (v - mean) * (v - mean);
        return ss;
    };
    return boost::math::tools::brent_find_minima(misfit, 0.05, 8.0, 40).first;
}

struct Series
{
    std::vector<double>   param;
    std::vector<double>   error;
    std::optional<double> reference;// parameter of a same-scheme reference solution, if any

    // convergence order in the parameter: N-like counts or h-like steps
    // errors measured against a same-scheme reference are fitted as C·|q^p − q_ref^p|
    double order_in_count() const
    {
        if (!reference)
            return raw_order_in_count();
        std::vector<double> q;
        for (double x : param)
            q.push_back(1.0 / x);
        return order_against_reference(q, error, 1.0 / *reference);
    }
    double order_in_step() const
    {
        return reference ? order_against_reference(param, error, *reference) : raw_order_in_step();
    }
    double raw_order_in_count() const { return -loglog_slope(param, error); }
    double raw_order_in_step() const { return loglog_slope(param, error); }
};

//
// Gaussian-jump model u_t = ∫(u(x+y) − u(x))e^{−5|y|²}dy on [−1,1]^d, u(x,0) = e^{−50|x|²}, t ∈ (0,1]
//
struct LevyModel
{
    int    dim         = 1;
    double kernel_eps2 = 5.0;
    double T           = 1.0;
};

inline HConfig levy_hconfig(int dim)
{
    HConfig cfg;
    if (dim == 2)
        cfg.recompress_eps = 1e-10;
    return cfg;
}

inline CNSystem levy_system(const LevyModel& m, Index n, Index nt)
{
    LEVYH_REQUIRE(n >= 2 && nt >= 1, "levy model needs n >= 2 and nt >= 1");
    const auto   g  = UniformGrid::unit(m.dim, n);
    const auto   nu = LevyMeasure::gaussian(m.kernel_eps2, m.dim);
    const double dt = m.T / double(nt);
    return m.dim == 1 ? assemble_cn_1d(nu, 0.0, 0.0, 0.0, g, dt) : assemble_cn_2d(nu, 0.0, {0.0, 0.0}, 0.0, g, dt);
}

inline Vector levy_initial(const UniformGrid& g)
{
    Vector u(g.size());
    for (Index i = 0; i < g.size(); ++i) {
        const Point p = g.point(i);
        u[i]          = std::exp(-50.0 * (p[0] * p[0] + p[1] * p[1]));
    }
    return u;
}

inline Vector levy_solve(const LevyModel& m, Index n, Index nt, const HConfig& cfg, double eps2, bool dense = false)
{
    const CNSystem sys = levy_system(m, n, nt);
    const Vector   u0  = levy_initial(sys.grid);
    if (dense)
        return DenseCNStepper(sys).run(u0, nt);
    return CNStepper(sys, cfg, eps2).run(u0, nt);
}

// nodal injection from n_fine to n_coarse points per axis
inline Vector restrict_nodal(const Vector& fine, int dim, Index n_fine, Index n_coarse)
{
    LEVYH_REQUIRE(n_fine % n_coarse == 0, "fine grid must refine the coarse grid");
    const Index r = n_fine / n_coarse;
    if (dim == 1) {
        Vector c(n_coarse);
        for (Index i = 0; i < n_coarse; ++i)
            c[i] = fine[i * r];
        return c;
    }
    Vector c(n_coarse * n_coarse);
    for (Index i = 0; i < n_coarse; ++i)
        for (Index j = 0; j < n_coarse; ++j)
            c[i * n_coarse + j] = fine[(i * r) * n_fine + j * r];
    return c;
}

inline std::string levy_key(const LevyModel& m, Index n, Index nt, const HConfig& cfg, double eps2, bool dense)
{
    std::ostringstream os;
    os.precision(17);
    os << "levy dim=" << m.dim << " eps=" << m.kernel_eps2 << " T=" << m.T << " n=" << n << " nt=" << nt
       << " dense=" << dense;
    if (!dense)
        os << " nmin=" << cfg.n_min << " nblock=" << cfg.n_block << " eta=" << cfg.eta << " rank=" << cfg.fixed_rank
           << " rc=" << cfg.recompress_eps << " eps2=" << eps2;
    return os.str();
}

inline Vector levy_reference(const LevyModel& m, Index n, Index nt, const HConfig& cfg, double eps2, bool dense,
                             const VectorCache* cache)
{
    auto run = [&] { return levy_solve(m, n, nt, cfg, eps2, dense); };
    return cache ? cache->get_or_compute(levy_key(m, n, nt, cfg, eps2, dense), run) : run();
}

// max-norm error at t = T against a reference with nt_ref steps on the same grid
inline Series levy_temporal(const LevyModel& m, Index n, const std::vector<Index>& nts, Index nt_ref,
                            const HConfig& cfg, double eps2, bool dense_reference, const VectorCache* cache = nullptr)
{
    const Vector ref = levy_reference(m, n, nt_ref, cfg, eps2, dense_reference, cache);
    Series       s;
    s.reference = double(nt_ref);
    for (Index nt : nts) {
        s.param.push_back(double(nt));
        s.error.push_back((levy_solve(m, n, nt, cfg, eps2) - ref).lpNorm<Eigen::Infinity>());
    }
    return s;
}

// max-norm error at coarse nodes against a fine-grid reference with the same nt
inline Series levy_spatial(const LevyModel& m, const std::vector<Index>& ns, Index n_ref, Index nt, const HConfig& cfg,
                           double eps2, const VectorCache* cache = nullptr)
{
    const Vector ref = levy_reference(m, n_ref, nt, cfg, eps2, false, cache);
    Series       s;
    s.reference = double(n_ref);
    for (Index n : ns) {
        const Vector u = levy_solve(m, n, nt, cfg, eps2);
        s.param.push_back(double(n));
        s.error.push_back((u - restrict_nodal(ref, m.dim, n_ref, n)).lpNorm<Eigen::Infinity>());
    }
    return s;
}

//
// timing of H and dense operations on the 1D model's I + ½ΔtA
//
struct BenchRow
{
    Index  n = 0;
    bool   hmatrix = false, dense = false;
    double construct = 0, matvec = 0, lu = 0, solve = 0;
    Index  stored    = 0;
    double dense_construct = 0, dense_matvec = 0, dense_lu = 0, dense_solve = 0;
};

struct BenchOptions
{
    HConfig cfg;
    double  eps2             = 1e-10;
    Index   nt               = 100;
    bool    hmatrix          = true;
    bool    dense            = true;
    double  dense_cap_bytes  = 3.0 * 1024 * 1024 * 1024;
    int     runs             = 3;
    int     warmup           = 1;
    double  min_batch_second = 0.05;
};

namespace detail {

// median over runs of the per-call time; cheap calls are batched until a run lasts min_batch seconds
template <typename Setup, typename F>
double timed(Setup&& setup, F&& f, int runs, int warmup, double min_batch)
{
    using clock = std::chrono::steady_clock;
    double single = 0.0;
    for (int k = 0; k < std::max(warmup, 1); ++k) {
        setup();
        const auto t0 = clock::now();
        f();
        single = std::chrono::duration<double>(clock::now() - t0).count();
    }
    const int batch = single >= min_batch ? 1 : int(std::ceil(min_batch / std::max(single, 1e-7)));
    std::vector<double> t;
    for (int k = 0; k < runs; ++k) {
        double total = 0.0;
        for (int b = 0; b < batch; ++b) {
            setup();
            const auto t0 = clock::now();
            f();
            total += std::chrono::duration<double>(clock::now() - t0).count();
        }
        t.push_back(total / batch);
    }
    std::nth_element(t.begin(), t.begin() + runs / 2, t.end());
    return t[std::size_t(runs / 2)];
}

}// namespace detail

inline double dense_bytes(Index n)
{
    return 8.0 * double(n) * double(n);
}

inline BenchRow bench_size(Index n, const BenchOptions& opt)
{
    const LevyModel m;
    const CNSystem  sys = levy_system(m, n, opt.nt);
    const Vector    x   = Vector::LinSpaced(n, -1.0, 1.0).array().sin();
    auto            nop = [] {};

    BenchRow row;
    row.n = n;
    if (opt.hmatrix) {
        row.hmatrix = true;
        std::shared_ptr<const ClusterTree> tree;
        HMatrix                            H;
        row.construct = detail::timed(
            nop,
            [&] {
                tree = build_cluster_tree(sys.grid.points(), opt.cfg.n_min);
                H    = build_cn_plus(sys, tree, opt.cfg);
            },
            opt.runs, opt.warmup, opt.min_batch_second);
        row.stored = memory_report(H).stored_scalars;
        Vector y;
        row.matvec = detail::timed(nop, [&] { y = matvec(H, x); }, opt.runs, opt.warmup, opt.min_batch_second);
        HMatrix        work;
        HFactorization F;
        row.lu = detail::timed([&] { work = H.clone(); }, [&] { F = hlu(std::move(work), opt.eps2); }, opt.runs,
                               opt.warmup, opt.min_batch_second);
        row.solve = detail::timed(nop, [&] { y = solve(F, x); }, opt.runs, opt.warmup, opt.min_batch_second);
    }
    if (opt.dense) {
        LEVYH_REQUIRE(dense_bytes(n) <= opt.dense_cap_bytes,
                      "dense mode refuses n = " + std::to_string(n) + ": matrix needs " +
                          std::to_string(dense_bytes(n) / (1024.0 * 1024 * 1024)) + " GiB over the cap");
        row.dense = true;
        Matrix D;
        row.dense_construct =
            detail::timed(nop, [&] { D = sys.dense_plus(); }, opt.runs, opt.warmup, opt.min_batch_second);
        Vector y;
        row.dense_matvec = detail::timed(nop, [&] { y.noalias() = D * x; }, opt.runs, opt.warmup, opt.min_batch_second);
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
        row.dense_lu = detail::timed(
            [&] { D = sys.dense_plus(); },
            [&] {
                Eigen::PartialPivLU<Eigen::Ref<Matrix>> lu(D);
                P = lu.permutationP();
            },
            opt.runs, opt.warmup, opt.min_batch_second);
        // D now holds L\U
        row.dense_solve = detail::timed(
            nop,
            [&] {
                y = P * x;
                D.triangularView<Eigen::UnitLower>().solveInPlace(y);
                D.triangularView<Eigen::Upper>().solveInPlace(y);
            },
            opt.runs, opt.warmup, opt.min_batch_second);
    }
    return row;
}

// smallest n where H-LU beats dense LU
inline std::optional<Index> lu_crossover(const std::vector<BenchRow>& rows)
{
    for (const auto& r : rows)
        if (r.hmatrix && r.dense && r.lu < r.dense_lu)
            return r.n;
    return std::nullopt;
}

//
// fractional experiments
//
inline double frac_gaussian_exact(double s)
{
    return std::pow(4.0, s) * std::tgamma(0.5 + s) / std::sqrt(3.14159265358979323846);
}

// |δ_L e^{−x²}(0) + (−Δ)^s e^{−x²}(0)| for each h
inline Series frac_eval(double s, const std::vector<double>& hs, double rho_r = 0.2, double L_W = 5.0)
{
    FracConfig cfg;
    cfg.rho_r = rho_r;
    cfg.L_W   = L_W;
    Series out;
    for (double h : hs) {
        const FracOperator1D op(fractional_measure(1, s), cfg, h);
        out.param.push_back(h);
        out.error.push_back(
            std::abs(op.apply_at([](double x) { return std::exp(-x * x); }, 0.0) + frac_gaussian_exact(s)));
    }
    return out;
}

inline FracConfig poisson_config(double rho_r = 0.2)
{
    FracConfig cfg;
    cfg.rho_r = rho_r;
    cfg.L_W   = 2.0;
    cfg.L     = 1.0;
    return cfg;
}

// (−Δ)^s u = 1 on (−1,1), u = 0 outside; K = −δ_L
inline Matrix poisson1d_matrix(double s, double h, double rho_r = 0.2)
{
    return -FracOperator1D(fractional_measure(1, s), poisson_config(rho_r), h).dirichlet_matrix();
}

// max-norm error at the coarse nodes against a dense solve at h_min/refine
inline Series frac_poisson1d(double s, const std::vector<double>& hs, Index refine = 8, double cg_tol = 1e-12,
                             std::vector<Index>* cg_iterations = nullptr)
{
    const double h_ref = *std::min_element(hs.begin(), hs.end()) / double(refine);
    const Matrix Kref  = poisson1d_matrix(s, h_ref);
    const Vector uref  = Kref.partialPivLu().solve(Vector::Ones(Kref.rows()));

    Series out;
    out.reference = h_ref;
    for (double h : hs) {
        const Matrix K   = poisson1d_matrix(s, h);
        const auto   res = pcg(dense_operator(K), {}, Vector::Ones(K.rows()), cg_tol, 100 * K.rows());
        LEVYH_REQUIRE(res.log.converged, "poisson1d: CG did not converge at h = " + std::to_string(h));
        if (cg_iterations)
            cg_iterations->push_back(res.log.iterations);
        const Index r   = Index(std::llround(h / h_ref));
        double      err = 0.0;
        for (Index k = 0; k < K.rows(); ++k)
            err = std::max(err, std::abs(res.x[k] - uref[(k + 1) * r - 1]));
        out.param.push_back(h);
        out.error.push_back(err);
    }
    return out;
}

// |−δ_L u(0) − 1| for the ball function
inline Series frac_ball2d(double s, const std::vector<double>& hs, double rho_r = 0.2)
{
    Series out;
    for (double h : hs) {
        const FracOperator2D op(fractional_measure(2, s), poisson_config(rho_r), h);
        const double v = -op.apply_at([s](const Point& x) { return ball_function(x, s); }, Point{0.0, 0.0});
        out.param.push_back(h);
        out.error.push_back(std::abs(v - 1.0));
    }
    return out;
}

struct LShapeRow
{
    Index  cells = 0, n = 0;
    double relative_error = 0, direct_residual = 0;
    Index  iters_plain = 0, iters_prec = 0;
    bool   plain_converged = false, prec_converged = false;
    double assemble_s = 0, hlu_s = 0, dense_s = 0;
    Index  stored = 0;
    IterationLog plain_log, prec_log;
};

inline LShapeRow lshape_run(Index cells, double eps1 = 1e-4, double eps2 = 1e-10, double tol = 1e-8,
                            Index restart = 200, Index max_iter = 5000, double rho_r = 0.2, int threads = 0)
{
    using clock = std::chrono::steady_clock;
    auto secs   = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };

    LShapeRow row;
    row.cells = cells;
    auto t0   = clock::now();
    const auto sys = assemble_variable_order(cells, lshape_order, lshape_source, rho_r, threads);
    row.assemble_s = secs(t0);
    row.n          = Index(sys.points.size());

    t0             = clock::now();
    auto    tree   = build_cluster_tree(PointSet(2, sys.points), 64, SplitStrategy::kmeans2);
    HConfig cfg;
    cfg.eps1       = eps1;
    HMatrix H      = build_from_dense(tree->perm.to_tree(sys.A), tree, tree, cfg);
    row.stored     = memory_report(H).stored_scalars;
    const auto F   = hlu(std::move(H), eps2);
    row.hlu_s      = secs(t0);

    t0             = clock::now();
    const Vector x = sys.A.partialPivLu().solve(sys.rhs);
    row.dense_s    = secs(t0);

    const LinearOp A      = dense_operator(sys.A);
    const auto     direct = direct_solve(F, tree->perm, A, sys.rhs);
    row.relative_error    = (direct.x - x).norm() / x.norm();
    row.direct_residual   = direct.log.final_residual();

    const auto plain    = gmres_restarted(A, {}, sys.rhs, tol, restart, max_iter);
    const auto prec     = gmres_restarted(A, hlu_operator(F, tree->perm), sys.rhs, tol, restart, max_iter);
    row.iters_plain     = plain.log.iterations;
    row.iters_prec      = prec.log.iterations;
    row.plain_converged = plain.log.converged;
    row.prec_converged  = prec.log.converged;
    row.plain_log       = plain.log;
    row.prec_log        = prec.log;
    return row;
}

}// namespace levyh
