#pragma once

#include "common.hpp"

namespace levyh {

//
// m×n matrix stored as U·Vᵀ with U m×r and V n×r
//
struct LowRank
{
    Matrix U;
    Matrix V;

    LowRank() = default;
    LowRank(Matrix u, Matrix v)
        : U(std::move(u))
        , V(std::move(v))
    {
        LEVYH_REQUIRE(U.cols() == V.cols(), "low-rank factors of mismatched rank");
    }

    static LowRank zero(Index m, Index n) { return LowRank(Matrix(m, 0), Matrix(n, 0)); }

    Index rows() const { return U.rows(); }
    Index cols() const { return V.rows(); }
    Index rank() const { return U.cols(); }

    Matrix dense() const
    {
        if (rank() == 0)
            return Matrix::Zero(rows(), cols());
        return U * V.transpose();
    }
};

namespace detail {

// smallest k with sqrt(sum_{i>=k} s_i^2) <= max(eps * sqrt(sum s_i^2), floor)
inline Index frobenius_rank(const Vector& s, double eps, double floor = 0.0)
{
    const double total = s.squaredNorm();
    if (total == 0.0)
        return 0;
    const double allowed = std::max(eps * eps * total, floor * floor);
    double       tail    = 0.0;
    Index        k       = s.size();
    while (k > 0 && tail + s[k - 1] * s[k - 1] <= allowed) {
        tail += s[k - 1] * s[k - 1];
        --k;
    }
    return k;
}

// thin QR: A = Q·R with Q m×p orthonormal, R p×k, p = min(m,k)
inline void thin_qr(const Matrix& A, Matrix& Q, Matrix& R)
{
    const Index              p = std::min(A.rows(), A.cols());
    Eigen::HouseholderQR<Matrix> qr(A);
    Q = qr.householderQ() * Matrix::Identity(A.rows(), p);
    R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
}

struct ThinSVD
{
    Matrix U, V;
    Vector s;
};

// BDCSVD in Eigen 3.4.0 can return NaNs for finite input under some vectorized builds
inline ThinSVD thin_svd(const Matrix& A)
{
    Eigen::BDCSVD<Matrix> bdc(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (bdc.singularValues().allFinite() && bdc.matrixU().allFinite() && bdc.matrixV().allFinite())
        return {bdc.matrixU(), bdc.matrixV(), bdc.singularValues()};
    Eigen::JacobiSVD<Matrix> jac(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {jac.matrixU(), jac.matrixV(), jac.singularValues()};
}

inline LowRank factors_from_svd(const ThinSVD& svd, Index k)
{
    const Vector s = svd.s.head(k);
    return LowRank(svd.U.leftCols(k) * s.asDiagonal(), svd.V.leftCols(k));
}

}// namespace detail

//
// truncated SVD keeping singular values σ_k > eps·σ_1
//
inline LowRank truncated_svd(const Matrix& A, double eps)
{
    if (A.rows() == 0 || A.cols() == 0)
        return LowRank::zero(A.rows(), A.cols());

    const auto    svd = detail::thin_svd(A);
    const Vector& s   = svd.s;
    Index         k   = 0;
    if (s.size() > 0 && s[0] > 0.0)
        while (k < s.size() && s[k] > eps * s[0])
            ++k;
    return detail::factors_from_svd(svd, k);
}

//
// recompress U·Vᵀ to the smallest rank with relative Frobenius error ≤ eps
//
inline LowRank recompress(const Matrix& U, const Matrix& V, double eps)
{
    LEVYH_REQUIRE(U.cols() == V.cols(), "low-rank factors of mismatched rank");
    if (U.cols() == 0)
        return LowRank::zero(U.rows(), V.rows());

    Matrix QU, RU, QV, RV;
    detail::thin_qr(U, QU, RU);
    detail::thin_qr(V, QV, RV);

    const Matrix core = RU * RV.transpose();
    const auto   svd  = detail::thin_svd(core);
    // cancellation leaves singular values at round-off of the factor norms
    const double roundoff = 8.0 * std::numeric_limits<double>::epsilon() * RU.norm() * RV.norm();
    const Index  k        = detail::frobenius_rank(svd.s, eps, roundoff);

    const Vector s = svd.s.head(k);
    return LowRank(QU * (svd.U.leftCols(k) * s.asDiagonal()), QV * svd.V.leftCols(k));
}

inline LowRank recompress(const LowRank& A, double eps)
{
    return recompress(A.U, A.V, eps);
}

//
// A + B via concatenate, QR, SVD
//
inline LowRank lowrank_add_recompress(const LowRank& A, const LowRank& B, double eps2)
{
    LEVYH_REQUIRE(A.rows() == B.rows() && A.cols() == B.cols(), "low-rank shapes differ");

    Matrix U(A.rows(), A.rank() + B.rank());
    Matrix V(A.cols(), A.rank() + B.rank());
    U.leftCols(A.rank())  = A.U;
    U.rightCols(B.rank()) = B.U;
    V.leftCols(A.rank())  = A.V;
    V.rightCols(B.rank()) = B.V;
    return recompress(U, V, eps2);
}

}// namespace levyh
