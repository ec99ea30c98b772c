#pragma once

#include <chrono>
#include <ostream>

#include "hops.hpp"

namespace levyh {

using LinearOp = std::function<Vector(const Vector&)>;

struct IterationLog
{
    std::vector<double> residuals;// e_k for k = 0, 1, ...
    std::vector<double> seconds;  // elapsed time at each e_k
    Index               iterations = 0;
    bool                converged  = false;
    double              wall       = 0.0;

    double final_residual() const { return residuals.empty() ? 0.0 : residuals.back(); }

    void write_csv(std::ostream& os) const
    {
        os << "iter,residual,seconds\n";
        os.precision(17);
        for (std::size_t k = 0; k < residuals.size(); ++k)
            os << k << ',' << residuals[k] << ',' << seconds[k] << '\n';
    }
};

struct SolveResult
{
    Vector       x;
    IterationLog log;
};

namespace detail {

class Stopwatch
{
public:
    double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - _t0).count(); }

private:
    std::chrono::steady_clock::time_point _t0 = std::chrono::steady_clock::now();
};

inline Vector apply_or_copy(const LinearOp& M, const Vector& r)
{
    return M ? M(r) : r;
}

}// namespace detail

//
// preconditioned conjugate gradients; an empty preconditioner means M = I
//
inline SolveResult pcg(const LinearOp& A, const LinearOp& Minv, const Vector& b, double tol, Index max_iter)
{
    LEVYH_REQUIRE(tol > 0.0 && max_iter >= 0, "pcg: tolerance must be positive");
    detail::Stopwatch clock;
    SolveResult       res;
    res.x = Vector::Zero(b.size());

    const double bnorm = b.norm();
    auto&        log   = res.log;
    if (bnorm == 0.0) {
        log.residuals = {0.0};
        log.seconds   = {clock.elapsed()};
        log.converged = true;
        return res;
    }

    Vector r  = b;
    Vector z  = detail::apply_or_copy(Minv, r);
    Vector p  = z;
    double rz = r.dot(z);
    log.residuals.push_back(1.0);
    log.seconds.push_back(clock.elapsed());

    for (Index k = 0; k < max_iter; ++k) {
        const Vector Ap  = A(p);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0))
            throw Error("pcg: breakdown at iteration " + std::to_string(k) + " (pᵀAp = " + std::to_string(pAp) +
                        "), operator is not SPD");
        const double alpha = rz / pAp;
        res.x += alpha * p;
        r -= alpha * Ap;

        const double e = r.norm() / bnorm;
        LEVYH_REQUIRE(std::isfinite(e), "pcg: non-finite residual");
        log.residuals.push_back(e);
        log.seconds.push_back(clock.elapsed());
        log.iterations = k + 1;
        if (e <= tol) {
            log.converged = true;
            break;
        }

        z                = detail::apply_or_copy(Minv, r);
        const double rz1 = r.dot(z);
        if (!(rz1 > 0.0))
            throw Error("pcg: preconditioner is not SPD at iteration " + std::to_string(k));
        p  = z + (rz1 / rz) * p;
        rz = rz1;
    }
    log.wall = clock.elapsed();
    return res;
}

//
// right-preconditioned restarted GMRES with modified Gram–Schmidt and Givens rotations
//
inline SolveResult gmres_restarted(const LinearOp& A, const LinearOp& Minv, const Vector& b, double tol, Index restart,
                                   Index max_iter)
{
    LEVYH_REQUIRE(tol > 0.0 && restart > 0 && max_iter >= 0, "gmres: invalid parameters");
    detail::Stopwatch clock;
    SolveResult       res;
    const Index       n = b.size();
    res.x               = Vector::Zero(n);

    const double bnorm = b.norm();
    auto&        log   = res.log;
    if (bnorm == 0.0) {
        log.residuals = {0.0};
        log.seconds   = {clock.elapsed()};
        log.converged = true;
        return res;
    }
    log.residuals.push_back(1.0);
    log.seconds.push_back(clock.elapsed());

    const Index m = std::min(restart, n);
    Matrix      V(n, m + 1), H = Matrix::Zero(m + 1, m);
    Vector      cs(m), sn(m), g(m + 1);

    while (log.iterations < max_iter) {
        const Vector r    = b - A(res.x);
        const double beta = r.norm();
        if (beta / bnorm <= tol) {
            log.converged = true;
            break;
        }
        V.col(0) = r / beta;
        g.setZero();
        g[0] = beta;
        H.setZero();

        Index j = 0;
        for (; j < m && log.iterations < max_iter; ++j) {
            Vector w = A(detail::apply_or_copy(Minv, V.col(j)));
            for (Index i = 0; i <= j; ++i) {
                H(i, j) = V.col(i).dot(w);
                w -= H(i, j) * V.col(i);
            }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 0.0)
                V.col(j + 1) = w / H(j + 1, j);

            for (Index i = 0; i < j; ++i) {
                const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j)    = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j)        = t;
            }
            const double d = std::hypot(H(j, j), H(j + 1, j));
            cs[j]          = d == 0.0 ? 1.0 : H(j, j) / d;
            sn[j]          = d == 0.0 ? 0.0 : H(j + 1, j) / d;
            H(j, j)        = d;
            H(j + 1, j)    = 0.0;
            g[j + 1]       = -sn[j] * g[j];
            g[j]           = cs[j] * g[j];

            const double e = std::abs(g[j + 1]) / bnorm;
            LEVYH_REQUIRE(std::isfinite(e), "gmres: non-finite residual");
            log.residuals.push_back(e);
            log.seconds.push_back(clock.elapsed());
            ++log.iterations;
            if (e <= tol || H(j, j) == 0.0) {
                ++j;
                break;
            }
        }

        const Vector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        res.x += detail::apply_or_copy(Minv, V.leftCols(j) * y);

        if (log.residuals.back() <= tol) {
            // confirm with the true residual
            const double e = (b - A(res.x)).norm() / bnorm;
            if (e <= tol) {
                log.residuals.back() = e;
                log.converged        = true;
                break;
            }
        }
    }
    log.wall = clock.elapsed();
    return res;
}

// H-LU solve as an operator in original ordering
inline LinearOp hlu_operator(const HFactorization& F, const Permutation& perm)
{
    return [&F, &perm](const Vector& x) { return perm.to_original(solve(F, perm.to_tree(x))); };
}

inline LinearOp dense_operator(const Matrix& A)
{
    return [&A](const Vector& x) -> Vector { return A * x; };
}

// single application of the H-LU factors as a direct solver
inline SolveResult direct_solve(const HFactorization& F, const Permutation& perm, const LinearOp& A, const Vector& b)
{
    detail::Stopwatch clock;
    SolveResult       res;
    res.x              = hlu_operator(F, perm)(b);
    const double e     = (b - A(res.x)).norm() / b.norm();
    res.log.residuals  = {1.0, e};
    res.log.seconds    = {0.0, clock.elapsed()};
    res.log.iterations = 1;
    res.log.converged  = std::isfinite(e);
    res.log.wall       = clock.elapsed();
    return res;
}

}// namespace levyh
