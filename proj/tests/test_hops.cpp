#include <chrono>

#include <gtest/gtest.h>

#include "levyh/hops.hpp"
#include "support.hpp"

using namespace levyh;
using namespace testsupport;

namespace {

// I + c·K with K Gaussian kernel, diagonal shift keeps it well conditioned
HMatrix shifted_gaussian(std::shared_ptr<const ClusterTree> t, double eps2, double shift, Matrix* dense = nullptr)
{
    class Gen : public BlockGenerator
    {
    public:
        Gen(const ClusterTree& t, const GaussianExpansion& e, double shift)
            : kg(t, t, e)
            , sh(shift)
        {}
        Matrix dense(const ClusterNode& r, const ClusterNode& c) const override
        {
            Matrix M = -0.01 * kg.dense(r, c);
            for (Index p = std::max(r.begin, c.begin); p < std::min(r.end, c.end); ++p)
                M(p - r.begin, p - c.begin) += sh;
            return M;
        }
        std::optional<LowRank> lowrank(const ClusterNode& r, const ClusterNode& c) const override
        {
            auto lr = kg.lowrank(r, c);
            lr->U *= -0.01;
            return lr;
        }
        KernelGenerator kg;
        double          sh;
    };
    GaussianExpansion exp(eps2, t->dim(), RankSelector::fixed(10));
    Gen               gen(*t, exp, shift);
    if (dense) {
        *dense = -0.01 * gaussian_matrix(*t, eps2);
        dense->diagonal().array() += shift;
    }
    return build_hmatrix(t, t, gen, HConfig{});
}

Matrix lower_unit(const Matrix& M)
{
    Matrix L = M.triangularView<Eigen::StrictlyLower>();
    L.diagonal().setOnes();
    return L;
}

}// namespace

TEST(Matvec, IdentityAndZero)
{
    auto    t = build_cluster_tree(uniform_line(300), 32);
    HMatrix H = build_from_dense(Matrix::Identity(300, 300), t, t, HConfig{32, 4, 1.0, 10, 1e-4, 0.0});
    std::mt19937 rng(1);
    const Vector x = random_unit(300, rng);
    EXPECT_EQ((matvec(H, x) - x).norm(), 0.0);
    EXPECT_EQ(matvec(H, Vector::Zero(300)).norm(), 0.0);
    EXPECT_THROW(matvec(H, Vector::Zero(299)), Error);
}

TEST(Matvec, Linearity)
{
    auto              t = build_cluster_tree(uniform_line(1024), 64);
    GaussianExpansion exp(5.0, 1);
    HMatrix           H = build_from_expansion(t, t, exp, HConfig{});
    std::mt19937      rng(2);
    const Vector      x = random_unit(1024, rng), y = random_unit(1024, rng);
    const Vector      lhs = matvec(H, 2.5 * x - 0.75 * y);
    const Vector      rhs = 2.5 * matvec(H, x) - 0.75 * matvec(H, y);
    EXPECT_LE((lhs - rhs).norm(), 1e-13 * rhs.norm());
}

TEST(LowRankAdd, NegationGivesRankZero)
{
    std::mt19937  rng(3);
    const LowRank A(random_matrix(40, 5, rng), random_matrix(30, 5, rng));
    const LowRank B(-A.U, A.V);
    EXPECT_EQ(lowrank_add_recompress(A, B, 1e-12).rank(), 0);
}

TEST(LowRankAdd, DisjointColumnSpacesAddRanks)
{
    std::mt19937  rng(4);
    const LowRank A(random_matrix(50, 2, rng), random_matrix(60, 2, rng));
    const LowRank B(random_matrix(50, 2, rng), random_matrix(60, 2, rng));
    const LowRank C = lowrank_add_recompress(A, B, 1e-12);
    EXPECT_EQ(C.rank(), 4);

    const Matrix S = A.dense() + B.dense();
    const Vector s = Eigen::JacobiSVD<Matrix>(S).singularValues();
    EXPECT_GT(s[3], 1e-8 * s[0]);
    EXPECT_LT(s[4], 1e-12 * s[0]);
    EXPECT_LE((C.dense() - S).norm(), 1e-12 * S.norm());
}

TEST(LowRankAdd, SelfSumKeepsRank)
{
    std::mt19937  rng(5);
    const LowRank A(random_matrix(64, 5, rng), random_matrix(64, 5, rng));
    const LowRank C = lowrank_add_recompress(A, A, 1e-12);
    EXPECT_EQ(C.rank(), 5);
    EXPECT_LE((C.dense() - 2.0 * A.dense()).norm(), 1e-12 * (2.0 * A.dense()).norm());
}

TEST(LowRankAdd, ErrorWithinToleranceOnSmallBlocks)
{
    std::mt19937 rng(6);
    for (double eps : {1e-2, 1e-4, 1e-8}) {
        for (Index m : {16, 64, 256}) {
            // geometrically decaying spectrum so truncation actually happens
            Matrix U = random_matrix(m, 20, rng), V = random_matrix(m, 20, rng);
            for (Index k = 0; k < 20; ++k)
                U.col(k) *= std::pow(0.3, double(k));
            const LowRank A(U.leftCols(10), V.leftCols(10)), B(U.rightCols(10), V.rightCols(10));
            const LowRank C = lowrank_add_recompress(A, B, eps);
            const Matrix  S = A.dense() + B.dense();
            EXPECT_LE((C.dense() - S).norm(), eps * S.norm() * (1.0 + 1e-10));
            EXPECT_LT(C.rank(), 20);
        }
    }
}

TEST(Trisolve, DenseLowerAgainstDenseOracle)
{
    std::mt19937 rng(7);
    Matrix       M = random_matrix(128, 128, rng);
    M.diagonal().array() += 30.0;

    Block L;
    L.kind = BlockKind::dense;
    L.rows = L.cols = 128;
    L.D             = M;
    detail::factorize_dense(L);

    const Matrix Bm = random_matrix(128, 7, rng);
    Block        B;
    B.kind = BlockKind::dense;
    B.rows = 128;
    B.cols = 7;
    B.D    = Bm;
    trisolve_lower(L, B, 1e-12);

    // oracle: L̃ = Pᵀ·unit_lower(LU)
    const Matrix Lt = L.P.transpose() * lower_unit(L.D);
    const Matrix X  = Lt.fullPivLu().solve(Bm);
    EXPECT_LE((B.D - X).cwiseAbs().maxCoeff(), 1e-12 * X.cwiseAbs().maxCoeff() * 100);
}

TEST(Trisolve, IdentityLeavesRightHandSideUnchanged)
{
    auto    t  = build_cluster_tree(uniform_line(256), 32);
    HConfig cfg{32, 4, 1.0, 10, 1e-10, 0.0};
    auto    F  = hlu(build_from_dense(Matrix::Identity(256, 256), t, t, cfg), 1e-12);

    std::mt19937 rng(8);
    const Matrix K  = gaussian_matrix(*t, 5.0);
    HMatrix      Bh = build_from_dense(K, t, t, cfg);
    HMatrix      B0 = Bh.clone();
    trisolve_lower(*F.LU.root, *Bh.root, 1e-12);
    EXPECT_LE((to_dense(Bh) - to_dense(B0)).norm(), 1e-14 * K.norm());

    Block lr;
    lr.kind = BlockKind::lowrank;
    lr.rows = lr.cols = 256;
    lr.R              = LowRank(random_matrix(256, 3, rng), random_matrix(256, 3, rng));
    const Matrix before = lr.R.dense();
    trisolve_lower(*F.LU.root, lr, 1e-12);
    EXPECT_EQ(lr.R.rank(), 3);
    EXPECT_LE((lr.R.dense() - before).norm(), 1e-14 * before.norm());
}

TEST(Trisolve, LowRankThroughHierarchicalLowerKeepsRank)
{
    auto   t = build_cluster_tree(uniform_line(256), 64);
    Matrix A;
    auto   F = hlu(shifted_gaussian(t, 5.0, 1.0, &A), 1e-12);
    ASSERT_TRUE(F.LU.root->is_hier());

    std::mt19937 rng(9);
    Block        lr;
    lr.kind = BlockKind::lowrank;
    lr.rows = 256;
    lr.cols = 40;
    lr.R    = LowRank(random_matrix(256, 4, rng), random_matrix(40, 4, rng));
    const Matrix B = lr.R.dense();
    trisolve_lower(*F.LU.root, lr, 1e-12);
    EXPECT_EQ(lr.R.rank(), 4);

    // oracle: explicit L̃⁻¹ applied to the dense right-hand side
    Matrix Linv = Matrix::Identity(256, 256);
    solve_lower(*F.LU.root, Linv);
    EXPECT_LE((lr.R.dense() - Linv * B).norm(), 1e-12 * (Linv * B).norm());
}

TEST(Trisolve, ReconstructionOnHierarchicalBlocks)
{
    auto   t = build_cluster_tree(uniform_line(512), 64);
    Matrix A;
    auto   F = hlu(shifted_gaussian(t, 5.0, 1.0, &A), 1e-12);

    Matrix Linv = Matrix::Identity(512, 512);
    solve_lower(*F.LU.root, Linv);
    const Matrix L = Linv.inverse();
    ASSERT_LT(L.jacobiSvd().singularValues()[0] / L.jacobiSvd().singularValues().tail(1)[0], 1e6);

    HConfig      cfg{64, 4, 1.0, 10, 1e-12, 0.0};
    const Matrix Bd = gaussian_matrix(*t, 2.0);
    HMatrix      B  = build_from_dense(Bd, t, t, cfg);
    trisolve_lower(*F.LU.root, *B.root, 1e-12);
    EXPECT_LE((L * to_dense(B) - Bd).norm(), 1e-10 * Bd.norm());

    // X·U = B by transposition
    HMatrix B2 = build_from_dense(Bd, t, t, cfg);
    trisolve_upper_right(*F.LU.root, *B2.root, 1e-12);
    Matrix Uinv = Matrix::Identity(512, 512);
    solve_upper(*F.LU.root, Uinv);
    const Matrix U = Uinv.inverse();
    EXPECT_LE((to_dense(B2) * U - Bd).norm(), 1e-10 * Bd.norm());
}

TEST(Trisolve, SingularLeafReported)
{
    auto   t = build_cluster_tree(uniform_line(128), 64);
    Matrix A = Matrix::Identity(128, 128);
    A(70, 70) = 0.0;
    try {
        hlu(build_from_dense(A, t, t, HConfig{}), 1e-10);
        FAIL() << "expected zero-pivot error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("rows [64,128)"), std::string::npos) << e.what();
    }
}

TEST(HLU, IdentityFactorsToIdentity)
{
    auto t = build_cluster_tree(uniform_line(256), 32);
    auto F = hlu(build_from_dense(Matrix::Identity(256, 256), t, t, HConfig{32, 4, 1.0, 10, 1e-4, 0.0}), 1e-10);
    EXPECT_EQ((to_dense(F.LU) - Matrix::Identity(256, 256)).norm(), 0.0);
    std::mt19937 rng(10);
    const Vector b = random_unit(256, rng);
    EXPECT_EQ((solve(F, b) - b).norm(), 0.0);
}

TEST(HLU, OperatorReproducesInput)
{
    for (int dim : {1, 2}) {
        auto   t = dim == 1 ? build_cluster_tree(uniform_line(2048), 64) : build_cluster_tree(uniform_square(40), 64);
        Matrix A;
        HMatrix H = shifted_gaussian(t, 5.0, 1.0, &A);
        HMatrix H0 = H.clone();
        auto    F  = hlu(std::move(H), 1e-10);

        std::mt19937 rng(11);
        for (int k = 0; k < 20; ++k) {
            const Vector x  = random_unit(t->size(), rng);
            const Vector Hx = matvec(H0, x);
            EXPECT_LE(rel_err(apply_lu(F, x), Hx), 1e-8);
            EXPECT_LE(rel_err(solve(F, Hx), x), 1e-8);
        }
        // against the dense LU solution
        const Vector b = random_unit(t->size(), rng);
        EXPECT_LE(rel_err(solve(F, b), A.partialPivLu().solve(b)), 1e-7);
    }
}

TEST(HLU, MultipleRightHandSides)
{
    auto         t = build_cluster_tree(uniform_line(512), 64);
    Matrix       A;
    auto         F = hlu(shifted_gaussian(t, 5.0, 1.0, &A), 1e-10);
    std::mt19937 rng(12);
    const Matrix B = random_matrix(512, 5, rng);
    const Matrix X = solve(F, B);
    EXPECT_LE((A * X - B).norm(), 1e-8 * B.norm());
}
