#pragma once

#include "hmatrix.hpp"

namespace levyh {

using MatRef  = Eigen::Ref<Matrix>;
using CMatRef = Eigen::Ref<const Matrix>;

//////////////////////////////////////////////////////////////////////
//
// products with dense operands
//
//////////////////////////////////////////////////////////////////////

// Y += alpha · A · X
inline void gemm(double alpha, const Block& A, CMatRef X, MatRef Y)
{
    switch (A.kind) {
    case BlockKind::dense:
        Y.noalias() += alpha * A.D * X;
        break;
    case BlockKind::lowrank:
        if (A.R.rank() > 0) {
            const Matrix T = A.R.V.transpose() * X;
            Y.noalias() += alpha * A.R.U * T;
        }
        break;
    case BlockKind::hier:
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Block& c = A.sub(i, j);
                gemm(alpha, c, X.middleRows(c.col_begin - A.col_begin, c.cols),
                     Y.middleRows(c.row_begin - A.row_begin, c.rows));
            }
        break;
    }
}

// Y += alpha · Aᵀ · X
inline void gemm_t(double alpha, const Block& A, CMatRef X, MatRef Y)
{
    switch (A.kind) {
    case BlockKind::dense:
        Y.noalias() += alpha * A.D.transpose() * X;
        break;
    case BlockKind::lowrank:
        if (A.R.rank() > 0) {
            const Matrix T = A.R.U.transpose() * X;
            Y.noalias() += alpha * A.R.V * T;
        }
        break;
    case BlockKind::hier:
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Block& c = A.sub(i, j);
                gemm_t(alpha, c, X.middleRows(c.row_begin - A.row_begin, c.rows),
                       Y.middleRows(c.col_begin - A.col_begin, c.cols));
            }
        break;
    }
}

// Y += alpha · X · A
inline void gemm_right(double alpha, CMatRef X, const Block& A, MatRef Y)
{
    switch (A.kind) {
    case BlockKind::dense:
        Y.noalias() += alpha * X * A.D;
        break;
    case BlockKind::lowrank:
        if (A.R.rank() > 0) {
            const Matrix T = X * A.R.U;
            Y.noalias() += alpha * T * A.R.V.transpose();
        }
        break;
    case BlockKind::hier:
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Block& c = A.sub(i, j);
                gemm_right(alpha, X.middleCols(c.row_begin - A.row_begin, c.rows), c,
                           Y.middleCols(c.col_begin - A.col_begin, c.cols));
            }
        break;
    }
}

inline Matrix to_dense(const Block& A)
{
    switch (A.kind) {
    case BlockKind::dense:
        return A.D;
    case BlockKind::lowrank:
        return A.R.dense();
    case BlockKind::hier:
    default: {
        Matrix M(A.rows, A.cols);
        for (const auto& c : A.child)
            M.block(c->row_begin - A.row_begin, c->col_begin - A.col_begin, c->rows, c->cols) = to_dense(*c);
        return M;
    }
    }
}

inline Matrix to_dense(const HMatrix& H)
{
    return to_dense(*H.root);
}

//////////////////////////////////////////////////////////////////////
//
// matvec
//
//////////////////////////////////////////////////////////////////////

inline void matvec_add(double alpha, const Block& A, const double* x, double* y)
{
    switch (A.kind) {
    case BlockKind::dense:
        Eigen::Map<Vector>(y, A.rows).noalias() += alpha * A.D * Eigen::Map<const Vector>(x, A.cols);
        break;
    case BlockKind::lowrank:
        if (A.R.rank() > 0) {
            const Vector t = A.R.V.transpose() * Eigen::Map<const Vector>(x, A.cols);
            Eigen::Map<Vector>(y, A.rows).noalias() += alpha * A.R.U * t;
        }
        break;
    case BlockKind::hier:
        for (const auto& c : A.child)
            matvec_add(alpha, *c, x + (c->col_begin - A.col_begin), y + (c->row_begin - A.row_begin));
        break;
    }
}

// y = H·x in tree ordering
inline Vector matvec(const HMatrix& H, const Vector& x)
{
    LEVYH_REQUIRE(x.size() == H.cols(), "matvec: vector length " + std::to_string(x.size()) +
                                            " does not match " + std::to_string(H.cols()) + " columns");
    Vector y = Vector::Zero(H.rows());
    matvec_add(1.0, *H.root, x.data(), y.data());
    return y;
}

//////////////////////////////////////////////////////////////////////
//
// triangular solves with dense right-hand sides
//
//////////////////////////////////////////////////////////////////////

// B ← L⁻¹B, L unit lower (row-pivoted in dense diagonal leaves)
inline void solve_lower(const Block& L, MatRef B)
{
    if (L.is_dense()) {
        LEVYH_REQUIRE(L.factored, "solve_lower: dense diagonal block not factorized at " + L.path());
        B = L.P * B;
        L.D.triangularView<Eigen::UnitLower>().solveInPlace(B);
        return;
    }
    LEVYH_REQUIRE(L.is_hier(), "solve_lower: low-rank diagonal block at " + L.path());
    const Block& L00 = L.sub(0, 0);
    const Block& L10 = L.sub(1, 0);
    const Block& L11 = L.sub(1, 1);
    auto         B0  = B.topRows(L00.rows);
    auto         B1  = B.bottomRows(L11.rows);
    solve_lower(L00, B0);
    gemm(-1.0, L10, B0, B1);
    solve_lower(L11, B1);
}

// B ← U⁻¹B, U upper
inline void solve_upper(const Block& U, MatRef B)
{
    if (U.is_dense()) {
        LEVYH_REQUIRE(U.factored, "solve_upper: dense diagonal block not factorized at " + U.path());
        U.D.triangularView<Eigen::Upper>().solveInPlace(B);
        return;
    }
    LEVYH_REQUIRE(U.is_hier(), "solve_upper: low-rank diagonal block at " + U.path());
    const Block& U00 = U.sub(0, 0);
    const Block& U01 = U.sub(0, 1);
    const Block& U11 = U.sub(1, 1);
    auto         B0  = B.topRows(U00.rows);
    auto         B1  = B.bottomRows(U11.rows);
    solve_upper(U11, B1);
    gemm(-1.0, U01, B1, B0);
    solve_upper(U00, B0);
}

// B ← B·U⁻¹, U upper
inline void solve_upper_right(const Block& U, MatRef B)
{
    if (U.is_dense()) {
        LEVYH_REQUIRE(U.factored, "solve_upper_right: dense diagonal block not factorized at " + U.path());
        U.D.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(B);
        return;
    }
    LEVYH_REQUIRE(U.is_hier(), "solve_upper_right: low-rank diagonal block at " + U.path());
    const Block& U00 = U.sub(0, 0);
    const Block& U01 = U.sub(0, 1);
    const Block& U11 = U.sub(1, 1);
    auto         B0  = B.leftCols(U00.cols);
    auto         B1  = B.rightCols(U11.cols);
    solve_upper_right(U00, B0);
    gemm_right(-1.0, B0, U01, B1);
    solve_upper_right(U11, B1);
}

//////////////////////////////////////////////////////////////////////
//
// H-arithmetic updates
//
//////////////////////////////////////////////////////////////////////

// C += X·Yᵀ, recompressing low-rank targets at eps
inline void add_lowrank(Block& C, CMatRef X, CMatRef Y, double eps)
{
    if (X.cols() == 0)
        return;
    switch (C.kind) {
    case BlockKind::dense:
        C.D.noalias() += X * Y.transpose();
        break;
    case BlockKind::lowrank:
        C.R = lowrank_add_recompress(C.R, LowRank(X, Y), eps);
        break;
    case BlockKind::hier:
        for (auto& c : C.child)
            add_lowrank(*c, X.middleRows(c->row_begin - C.row_begin, c->rows),
                        Y.middleRows(c->col_begin - C.col_begin, c->cols), eps);
        break;
    }
}

// A·B as factors X·Yᵀ when at least one operand is not hierarchical
inline LowRank product_factors(const Block& A, const Block& B)
{
    if (A.is_lowrank()) {
        Matrix Y = Matrix::Zero(B.cols, A.R.rank());
        gemm_t(1.0, B, A.R.V, Y);
        return LowRank(A.R.U, std::move(Y));
    }
    if (B.is_lowrank()) {
        Matrix X = Matrix::Zero(A.rows, B.R.rank());
        gemm(1.0, A, B.R.U, X);
        return LowRank(std::move(X), B.R.V);
    }
    if (A.is_dense())
        return LowRank(A.D, to_dense(B).transpose());
    LEVYH_REQUIRE(B.is_dense(), "product_factors: both operands hierarchical");
    return LowRank(to_dense(A), B.D.transpose());
}

// A·B compressed to a single low-rank block at eps
inline LowRank product_lowrank(const Block& A, const Block& B, double eps)
{
    if (!A.is_hier() || !B.is_hier())
        return recompress(product_factors(A, B), eps);

    std::vector<LowRank> parts;
    Index                total = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            LowRank q = lowrank_add_recompress(product_lowrank(A.sub(i, 0), B.sub(0, j), eps),
                                               product_lowrank(A.sub(i, 1), B.sub(1, j), eps), eps);
            total += q.rank();
            parts.push_back(std::move(q));
        }

    Matrix X = Matrix::Zero(A.rows, total);
    Matrix Y = Matrix::Zero(B.cols, total);
    Index  k = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const LowRank& q = parts[std::size_t(2 * i + j)];
            const Block&   a = A.sub(i, 0);
            const Block&   b = B.sub(0, j);
            X.block(a.row_begin - A.row_begin, k, a.rows, q.rank()) = q.U;
            Y.block(b.col_begin - B.col_begin, k, b.cols, q.rank()) = q.V;
            k += q.rank();
        }
    return recompress(X, Y, eps);
}

// C ← C − A·B
inline void mul_sub(Block& C, const Block& A, const Block& B, double eps)
{
    if (C.is_hier() && A.is_hier() && B.is_hier()) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int l = 0; l < 2; ++l)
                    mul_sub(C.sub(i, j), A.sub(i, l), B.sub(l, j), eps);
        return;
    }

    if (C.is_dense()) {
        if (A.is_dense())
            gemm_right(-1.0, A.D, B, C.D);
        else if (B.is_dense())
            gemm(-1.0, A, B.D, C.D);
        else if (!A.is_hier() || !B.is_hier()) {
            const LowRank p = product_factors(A, B);
            if (p.rank() > 0)
                C.D.noalias() -= p.U * p.V.transpose();
        } else
            gemm(-1.0, A, to_dense(B), C.D);
        return;
    }

    LowRank p = (!A.is_hier() || !B.is_hier()) ? product_factors(A, B) : product_lowrank(A, B, eps);
    add_lowrank(C, -p.U, p.V, eps);
}

//////////////////////////////////////////////////////////////////////
//
// block triangular solves
//
//////////////////////////////////////////////////////////////////////

// B ← L⁻¹B in place (L unit lower part of a factorized diagonal block)
inline void trisolve_lower(const Block& L, Block& B, double eps)
{
    switch (B.kind) {
    case BlockKind::dense:
        solve_lower(L, B.D);
        break;
    case BlockKind::lowrank:
        if (B.R.rank() > 0)
            solve_lower(L, B.R.U);
        break;
    case BlockKind::hier:
        LEVYH_REQUIRE(L.is_hier(), "trisolve_lower: hierarchical right-hand side with leaf L at " + L.path());
        trisolve_lower(L.sub(0, 0), B.sub(0, 0), eps);
        trisolve_lower(L.sub(0, 0), B.sub(0, 1), eps);
        mul_sub(B.sub(1, 0), L.sub(1, 0), B.sub(0, 0), eps);
        mul_sub(B.sub(1, 1), L.sub(1, 0), B.sub(0, 1), eps);
        trisolve_lower(L.sub(1, 1), B.sub(1, 0), eps);
        trisolve_lower(L.sub(1, 1), B.sub(1, 1), eps);
        break;
    }
}

// B ← B·U⁻¹ in place (U upper part of a factorized diagonal block)
inline void trisolve_upper_right(const Block& U, Block& B, double eps)
{
    switch (B.kind) {
    case BlockKind::dense:
        solve_upper_right(U, B.D);
        break;
    case BlockKind::lowrank:
        if (B.R.rank() > 0) {
            Matrix T = B.R.V.transpose();
            solve_upper_right(U, T);
            B.R.V = T.transpose();
        }
        break;
    case BlockKind::hier:
        LEVYH_REQUIRE(U.is_hier(), "trisolve_upper_right: hierarchical right-hand side with leaf U at " + U.path());
        trisolve_upper_right(U.sub(0, 0), B.sub(0, 0), eps);
        trisolve_upper_right(U.sub(0, 0), B.sub(1, 0), eps);
        mul_sub(B.sub(0, 1), B.sub(0, 0), U.sub(0, 1), eps);
        mul_sub(B.sub(1, 1), B.sub(1, 0), U.sub(0, 1), eps);
        trisolve_upper_right(U.sub(1, 1), B.sub(0, 1), eps);
        trisolve_upper_right(U.sub(1, 1), B.sub(1, 1), eps);
        break;
    }
}

//////////////////////////////////////////////////////////////////////
//
// H-LU
//
//////////////////////////////////////////////////////////////////////

struct HFactorization
{
    HMatrix LU;   // unit-lower L and upper U stored in place

    Index size() const { return LU.rows(); }
};

namespace detail {

inline void factorize_dense(Block& A)
{
    Eigen::PartialPivLU<Eigen::Ref<Matrix>> lu(A.D);
    A.P = lu.permutationP();
    for (Index k = 0; k < A.rows; ++k) {
        const double piv = A.D(k, k);
        LEVYH_REQUIRE(piv != 0.0 && std::isfinite(piv),
                      "zero pivot in dense leaf " + A.path() + " at local row " + std::to_string(k));
    }
    A.factored = true;
}

inline void hlu_block(Block& A, double eps)
{
    LEVYH_REQUIRE(A.rows == A.cols, "hlu: non-square diagonal block at " + A.path());
    if (A.is_dense()) {
        factorize_dense(A);
        return;
    }
    LEVYH_REQUIRE(A.is_hier(), "hlu: low-rank diagonal block at " + A.path());
    hlu_block(A.sub(0, 0), eps);
    trisolve_lower(A.sub(0, 0), A.sub(0, 1), eps);
    trisolve_upper_right(A.sub(0, 0), A.sub(1, 0), eps);
    mul_sub(A.sub(1, 1), A.sub(1, 0), A.sub(0, 1), eps);
    hlu_block(A.sub(1, 1), eps);
}

}// namespace detail

// in-place recursive LU; the input is consumed
inline HFactorization hlu(HMatrix H, double eps2)
{
    LEVYH_REQUIRE(H.rows() == H.cols(), "hlu: matrix must be square");
    detail::hlu_block(*H.root, eps2);
    return HFactorization{std::move(H)};
}

// forward then backward substitution, tree ordering
inline Vector solve(const HFactorization& F, const Vector& b)
{
    LEVYH_REQUIRE(b.size() == F.size(), "solve: right-hand side length mismatch");
    Vector x = b;
    Eigen::Map<Matrix> X(x.data(), x.size(), 1);
    solve_lower(*F.LU.root, X);
    solve_upper(*F.LU.root, X);
    return x;
}

inline Matrix solve(const HFactorization& F, const Matrix& B)
{
    LEVYH_REQUIRE(B.rows() == F.size(), "solve: right-hand side length mismatch");
    Matrix X = B;
    solve_lower(*F.LU.root, X);
    solve_upper(*F.LU.root, X);
    return X;
}

// the product L·U applied to x, tree ordering
inline Vector apply_lu(const HFactorization& F, const Vector& x)
{
    // U·x: upper part of every diagonal leaf, full off-diagonal blocks above the diagonal
    struct Walker
    {
        static void upper(const Block& A, const double* x, double* y)
        {
            if (A.is_dense()) {
                Eigen::Map<Vector>(y, A.rows).noalias() +=
                    A.D.triangularView<Eigen::Upper>() * Eigen::Map<const Vector>(x, A.cols);
                return;
            }
            upper(A.sub(0, 0), x, y);
            matvec_add(1.0, A.sub(0, 1), x + A.sub(0, 0).cols, y);
            upper(A.sub(1, 1), x + A.sub(0, 0).cols, y + A.sub(0, 0).rows);
        }
        static void lower(const Block& A, const double* x, double* y)
        {
            if (A.is_dense()) {
                const Vector t  = A.D.triangularView<Eigen::UnitLower>() * Eigen::Map<const Vector>(x, A.cols);
                const Vector pt = A.P.transpose() * t;
                Eigen::Map<Vector>(y, A.rows) += pt;
                return;
            }
            lower(A.sub(0, 0), x, y);
            matvec_add(1.0, A.sub(1, 0), x, y + A.sub(0, 0).rows);
            lower(A.sub(1, 1), x + A.sub(0, 0).cols, y + A.sub(0, 0).rows);
        }
    };
    Vector ux = Vector::Zero(x.size());
    Walker::upper(*F.LU.root, x.data(), ux.data());
    Vector y = Vector::Zero(x.size());
    Walker::lower(*F.LU.root, ux.data(), y.data());
    return y;
}

}// namespace levyh
