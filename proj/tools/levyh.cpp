#include <ctime>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "levyh/experiments.hpp"

#ifndef LEVYH_GIT_HASH
#define LEVYH_GIT_HASH "unknown"
#endif

using namespace levyh;

namespace {

struct Common
{
    double      eps1      = 1e-4;
    double      eps2      = 1e-10;
    double      eta       = 1.0;
    Index       rank      = 10;
    Index       leaf_size = 64;
    Index       nblock    = 4;
    double      recompress = -1.0;
    int         threads   = 0;
    std::string out;

    HConfig hconfig(int dim = 1) const
    {
        HConfig cfg        = levy_hconfig(dim);
        cfg.eps1           = eps1;
        cfg.eta            = eta;
        cfg.fixed_rank     = rank;
        cfg.n_min          = leaf_size;
        cfg.n_block        = nblock;
        if (recompress >= 0.0)
            cfg.recompress_eps = recompress;
        return cfg;
    }
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--eps1", c.eps1, "relative SVD truncation for dense-path compression")->check(CLI::PositiveNumber);
    app->add_option("--eps2", c.eps2, "truncation inside H-LU")->check(CLI::PositiveNumber);
    app->add_option("--eta", c.eta, "admissibility parameter")->check(CLI::PositiveNumber);
    app->add_option("--rank", c.rank, "fixed expansion order")->check(CLI::NonNegativeNumber);
    app->add_option("--leaf-size", c.leaf_size, "minimum block size")->check(CLI::PositiveNumber);
    app->add_option("--nblock", c.nblock, "low-rank blocks are at most N/nblock wide")->check(CLI::PositiveNumber);
    app->add_option("--recompress", c.recompress, "recompression tolerance for expansion factors (default: 0 in 1D, 1e-10 in 2D)");
    app->add_option("--threads", c.threads, "assembly worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app->add_option("--out", c.out, "CSV output path (default: stdout)");
}

std::string today()
{
    const std::time_t t = std::time(nullptr);
    char              buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d", std::gmtime(&t));
    return buf;
}

std::string num(double x)
{
    std::ostringstream os;
    os << x;
    return os.str();
}

template <typename T>
std::string join(const std::vector<T>& v)
{
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < v.size(); ++k)
        os << (k ? " " : "") << v[k];
    return os.str();
}

// CSV stream plus a side channel for human-readable summaries
class Output
{
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty()) {
            _file.open(path);
            if (!_file)
                throw Error("cannot open " + path + " for writing");
        }
    }

    std::ostream& csv() { return _file.is_open() ? static_cast<std::ostream&>(_file) : std::cout; }
    std::ostream& info() { return _file.is_open() ? std::cout : std::cerr; }

private:
    std::ofstream _file;
};

CsvWriter start_csv(Output& out, const std::string& command, const Common& c)
{
    CsvWriter w(out.csv());
    std::ostringstream cfg;
    cfg << "eps1=" << c.eps1 << " eps2=" << c.eps2 << " eta=" << c.eta << " rank=" << c.rank
        << " leaf_size=" << c.leaf_size << " nblock=" << c.nblock << " recompress=" << (c.recompress < 0.0 ? std::string("auto") : num(c.recompress));
    w.meta("command", command).meta("date", today()).meta("git", LEVYH_GIT_HASH).meta("config", cfg.str());
    return w;
}

void print_series(std::ostream& os, const std::string& label, const Series& s, bool count)
{
    os.precision(4);
    const double order = count ? s.order_in_count() : s.order_in_step();
    const double raw   = count ? s.raw_order_in_count() : s.raw_order_in_step();
    os << label << ": order " << order << " (raw log-log slope " << raw << ") over " << s.param.size()
       << " points\n";
}

//
// bench
//
struct BenchArgs
{
    std::vector<Index> sizes{1024, 2048, 4096, 8192, 16384};
    std::string        kind  = "all";
    std::string        mode  = "both";
    Index              nt    = 100;
    double             cap   = 3.0;
    int                runs  = 3;
    std::string        structure;
};

int run_bench(const Common& c, const BenchArgs& a)
{
    BenchOptions opt;
    opt.cfg             = c.hconfig(1);
    opt.eps2            = c.eps2;
    opt.nt              = a.nt;
    opt.hmatrix         = a.mode != "dense";
    opt.dense           = a.mode != "hmatrix";
    opt.dense_cap_bytes = a.cap * 1024.0 * 1024.0 * 1024.0;
    opt.runs            = a.runs;

    Output out(c.out);
    for (Index n : a.sizes)
        if (n < 256 || (n & (n - 1)) != 0)
            throw Error("bench sizes must be powers of two no smaller than 256, got " + std::to_string(n));
    if (opt.dense)
        for (Index n : a.sizes)
            if (dense_bytes(n) > opt.dense_cap_bytes)
                throw Error("dense mode refuses n = " + std::to_string(n) + " above the " + num(a.cap) +
                            " GiB cap; use --mode hmatrix or raise --dense-cap-gib");

    auto w = start_csv(out, "bench " + a.kind + " mode=" + a.mode, c);
    w.meta("model", "1D Gaussian-jump CN matrix I + dt/2 A, dt = 1/" + std::to_string(a.nt));
    w.meta("timing", "median of " + std::to_string(a.runs) + " runs after 1 warmup");

    const bool all = a.kind == "all";
    std::vector<std::string> cols{"n"};
    auto add = [&](const std::string& k, const std::string& h, const std::string& d) {
        if (all || a.kind == k) {
            if (opt.hmatrix)
                cols.push_back(h);
            if (opt.dense)
                cols.push_back(d);
        }
    };
    add("construct", "h_construct_s", "dense_construct_s");
    add("matvec", "h_matvec_s", "dense_matvec_s");
    add("lu", "h_lu_s", "dense_lu_s");
    add("solve", "h_solve_s", "dense_solve_s");
    if (opt.hmatrix)
        cols.push_back("h_stored_scalars");
    w.header(cols);

    std::vector<BenchRow> rows;
    for (Index n : a.sizes) {
        const BenchRow r = bench_size(n, opt);
        rows.push_back(r);
        std::vector<double> v{double(n)};
        auto put = [&](const std::string& k, double h, double d) {
            if (all || a.kind == k) {
                if (opt.hmatrix)
                    v.push_back(h);
                if (opt.dense)
                    v.push_back(d);
            }
        };
        put("construct", r.construct, r.dense_construct);
        put("matvec", r.matvec, r.dense_matvec);
        put("lu", r.lu, r.dense_lu);
        put("solve", r.solve, r.dense_solve);
        if (opt.hmatrix)
            v.push_back(double(r.stored));
        w.row(v);
        out.csv().flush();
    }

    if (rows.size() >= 2) {
        std::vector<double> ns;
        for (const auto& r : rows)
            ns.push_back(double(r.n));
        auto slope = [&](auto get) {
            std::vector<double> y;
            for (const auto& r : rows)
                y.push_back(get(r));
            return loglog_slope(ns, y);
        };
        auto& os = out.info();
        os.precision(3);
        if (opt.hmatrix)
            os << "H slopes: construct " << slope([](auto& r) { return r.construct; }) << ", matvec "
               << slope([](auto& r) { return r.matvec; }) << ", lu " << slope([](auto& r) { return r.lu; })
               << ", solve " << slope([](auto& r) { return r.solve; }) << ", stored "
               << slope([](auto& r) { return double(r.stored); }) << '\n';
        if (opt.dense)
            os << "dense slopes: construct " << slope([](auto& r) { return r.dense_construct; }) << ", matvec "
               << slope([](auto& r) { return r.dense_matvec; }) << ", lu "
               << slope([](auto& r) { return r.dense_lu; }) << ", solve "
               << slope([](auto& r) { return r.dense_solve; }) << '\n';
    }
    if (opt.hmatrix && opt.dense) {
        const auto x = lu_crossover(rows);
        out.info() << "LU crossover: " << (x ? std::to_string(*x) : std::string("none in range")) << '\n';
    }

    if (!a.structure.empty()) {
        const Index n    = a.sizes.back();
        const auto  sys  = levy_system(LevyModel{}, n, a.nt);
        const auto  tree = build_cluster_tree(sys.grid.points(), opt.cfg.n_min);
        std::ofstream js(a.structure);
        js << structure_json(build_cn_plus(sys, tree, opt.cfg)).dump(1) << '\n';
    }
    return 0;
}

//
// levy1d / levy2d
//
struct LevyArgs
{
    std::string        study = "time";
    std::string        mode  = "hmatrix";
    Index              n     = 0;
    Index              nt    = 100;
    std::vector<Index> nts{10, 20, 30, 40, 50};
    std::vector<Index> ns;
    Index              nref   = 0;
    Index              ntref  = 100;
    std::string        cache  = ".levyh-cache";
};

int run_levy(int dim, const Common& c, LevyArgs a)
{
    const LevyModel m{dim};
    const HConfig   cfg = c.hconfig(dim);
    Output          out(c.out);
    const VectorCache cache(a.cache);
    const VectorCache* cp = a.cache.empty() ? nullptr : &cache;
    const std::string  name = dim == 1 ? "levy1d" : "levy2d";

    if (a.study == "time") {
        if (a.n == 0)
            a.n = dim == 1 ? 1024 : 64;
        auto w = start_csv(out, name + " time n=" + std::to_string(a.n) + " ntref=" + std::to_string(a.ntref), c);
        w.meta("reference", "dense CN with nt=" + std::to_string(a.ntref));
        w.header({"nt", "max_abs_error"});
        const Series s = levy_temporal(m, a.n, a.nts, a.ntref, cfg, c.eps2, true, cp);
        for (std::size_t k = 0; k < s.param.size(); ++k)
            w.row(std::vector<double>{s.param[k], s.error[k]});
        print_series(out.info(), name + " temporal", s, true);
        return 0;
    }
    if (a.study == "space") {
        if (a.ns.empty())
            a.ns = dim == 1 ? std::vector<Index>{256, 512, 1024, 2048, 4096, 8192} : std::vector<Index>{16, 32, 64};
        if (a.nref == 0)
            a.nref = dim == 1 ? 32768 : 128;
        auto w = start_csv(out, name + " space nref=" + std::to_string(a.nref) + " nt=" + std::to_string(a.nt), c);
        w.meta("reference", "H-matrix CN on " + std::to_string(a.nref) + " points per axis");
        w.header({"n", "h", "max_abs_error"});
        const Series s = levy_spatial(m, a.ns, a.nref, a.nt, cfg, c.eps2, cp);
        for (std::size_t k = 0; k < s.param.size(); ++k)
            w.row(std::vector<double>{s.param[k], 2.0 / s.param[k], s.error[k]});
        print_series(out.info(), name + " spatial", s, true);
        return 0;
    }
    if (a.study == "single") {
        if (a.n == 0)
            a.n = dim == 1 ? 1024 : 64;
        const CNSystem sys = levy_system(m, a.n, a.nt);
        const Vector   u   = levy_solve(m, a.n, a.nt, cfg, c.eps2, a.mode == "dense");
        auto           w   = start_csv(out, name + " single n=" + std::to_string(a.n) + " nt=" + std::to_string(a.nt), c);
        if (dim == 1)
            w.header({"x", "u"});
        else
            w.header({"x", "y", "u"});
        for (Index i = 0; i < u.size(); ++i) {
            const Point p = sys.grid.point(i);
            if (dim == 1)
                w.row(std::vector<double>{p[0], u[i]});
            else
                w.row(std::vector<double>{p[0], p[1], u[i]});
        }
        return 0;
    }
    throw Error("unknown study '" + a.study + "', expected time, space or single");
}

//
// frac
//
struct FracArgs
{
    std::string        what;
    std::vector<double> orders{0.5};
    std::vector<int>   levels;
    Index              refine = 8;
    double             rho_r  = 0.2;
    std::vector<Index> cells{30, 40, 60, 80, 100};
    double             tol     = 1e-8;
    Index              restart = 200;
    std::string        log_dir;
};

std::vector<double> steps(const std::vector<int>& levels)
{
    std::vector<double> h;
    for (int p : levels)
        h.push_back(std::ldexp(1.0, -p));
    return h;
}

int run_frac(const Common& c, FracArgs a)
{
    Output out(c.out);
    if (a.what == "eval" || a.what == "poisson1d" || a.what == "ball2d") {
        if (a.levels.empty())
            a.levels = a.what == "eval" ? std::vector<int>{5, 6, 7, 8, 9}
                       : a.what == "poisson1d" ? std::vector<int>{4, 5, 6, 7}
                                               : std::vector<int>{4, 5, 6};
        const auto hs = steps(a.levels);
        auto       w  = start_csv(out, "frac " + a.what + " levels=" + join(a.levels), c);
        w.meta("window", "rho_r=" + num(a.rho_r));
        w.header({"s", "h", "abs_error"});
        for (double s : a.orders) {
            Series r;
            if (a.what == "eval")
                r = frac_eval(s, hs, a.rho_r);
            else if (a.what == "poisson1d")
                r = frac_poisson1d(s, hs, a.refine);
            else
                r = frac_ball2d(s, hs, a.rho_r);
            for (std::size_t k = 0; k < r.param.size(); ++k)
                w.row(std::vector<double>{s, r.param[k], r.error[k]});
            if (r.param.size() >= 2)
                print_series(out.info(), "frac " + a.what + " s=" + num(s), r, false);
        }
        return 0;
    }
    if (a.what == "lshape") {
        auto w = start_csv(out, "frac lshape cells=" + join(a.cells), c);
        w.meta("solver", "restarted GMRES(" + std::to_string(a.restart) + "), tol " + num(a.tol));
        w.header({"cells_per_axis", "n", "relative_error", "direct_residual", "iters_plain", "iters_hlu",
                  "assemble_s", "hlu_s", "dense_lu_s", "h_stored_scalars"});
        for (Index cells : a.cells) {
            const auto r = lshape_run(cells, c.eps1, c.eps2, a.tol, a.restart, 5000, a.rho_r, c.threads);
            w.row(std::vector<double>{double(cells), double(r.n), r.relative_error, r.direct_residual,
                                      double(r.iters_plain), double(r.iters_prec), r.assemble_s, r.hlu_s, r.dense_s,
                                      double(r.stored)});
            out.csv().flush();
            if (!a.log_dir.empty()) {
                std::filesystem::create_directories(a.log_dir);
                std::ofstream p(std::filesystem::path(a.log_dir) / ("lshape_" + std::to_string(r.n) + "_plain.csv"));
                r.plain_log.write_csv(p);
                std::ofstream q(std::filesystem::path(a.log_dir) / ("lshape_" + std::to_string(r.n) + "_hlu.csv"));
                r.prec_log.write_csv(q);
            }
        }
        return 0;
    }
    throw Error("unknown frac experiment '" + a.what + "', expected eval, poisson1d, ball2d or lshape");
}

}// namespace

int main(int argc, char** argv)
{
    CLI::App app{"levyh: hierarchical-matrix solvers for Lévy-driven integro-differential equations"};
    app.require_subcommand(1);

    Common    common;
    BenchArgs bench;
    LevyArgs  levy;
    FracArgs  frac;

    auto* b = app.add_subcommand("bench", "time construction, matvec, LU and solve for H and dense matrices");
    add_common(b, common);
    b->add_option("--n,--sizes", bench.sizes, "matrix sizes (powers of two)")->delimiter(',');
    b->add_option("--kind", bench.kind)->check(CLI::IsMember({"all", "construct", "matvec", "lu", "solve"}));
    b->add_option("--mode", bench.mode)->check(CLI::IsMember({"hmatrix", "dense", "both"}));
    b->add_option("--nt", bench.nt, "time steps defining dt = 1/nt")->check(CLI::PositiveNumber);
    b->add_option("--dense-cap-gib", bench.cap, "largest dense matrix allowed");
    b->add_option("--runs", bench.runs, "timed runs per measurement")->check(CLI::PositiveNumber);
    b->add_option("--structure", bench.structure, "write the block tree of the largest size as JSON");

    auto levy_opts = [&](CLI::App* s) {
        add_common(s, common);
        s->add_option("--study", levy.study)->check(CLI::IsMember({"time", "space", "single"}));
        s->add_option("--mode", levy.mode, "stepper for --study single")->check(CLI::IsMember({"hmatrix", "dense"}));
        s->add_option("--n", levy.n, "points per axis");
        s->add_option("--nt", levy.nt, "time steps")->check(CLI::PositiveNumber);
        s->add_option("--nts", levy.nts, "time-step counts for the temporal study")->delimiter(',');
        s->add_option("--ns", levy.ns, "points per axis for the spatial study")->delimiter(',');
        s->add_option("--nref", levy.nref, "reference points per axis");
        s->add_option("--ntref", levy.ntref, "reference time steps");
        s->add_option("--cache", levy.cache, "reference cache directory (empty disables)");
    };
    auto* l1 = app.add_subcommand("levy1d", "1D Gaussian-jump model convergence");
    levy_opts(l1);
    auto* l2 = app.add_subcommand("levy2d", "2D Gaussian-jump model convergence");
    levy_opts(l2);

    auto* f = app.add_subcommand("frac", "fractional Laplacian experiments");
    add_common(f, common);
    f->add_option("what", frac.what, "eval, poisson1d, ball2d or lshape")
        ->required()
        ->check(CLI::IsMember({"eval", "poisson1d", "ball2d", "lshape"}));
    f->add_option("--s", frac.orders, "fractional orders")->delimiter(',');
    f->add_option("--levels", frac.levels, "grid levels p with h = 2^-p")->delimiter(',');
    f->add_option("--refine", frac.refine, "reference refinement factor for poisson1d");
    f->add_option("--rho", frac.rho_r, "window radius")->check(CLI::PositiveNumber);
    f->add_option("--n,--cells", frac.cells, "cells per axis for lshape")->delimiter(',');
    f->add_option("--tol", frac.tol, "Krylov tolerance")->check(CLI::PositiveNumber);
    f->add_option("--restart", frac.restart, "GMRES restart length")->check(CLI::PositiveNumber);
    f->add_option("--log-dir", frac.log_dir, "directory for per-iteration residual CSVs");

    CLI11_PARSE(app, argc, argv);
    default_threads() = common.threads;

    try {
        if (b->parsed())
            return run_bench(common, bench);
        if (l1->parsed())
            return run_levy(1, common, levy);
        if (l2->parsed())
            return run_levy(2, common, levy);
        if (f->parsed())
            return run_frac(common, frac);
    } catch (const std::exception& e) {
        std::cerr << "levyh: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
