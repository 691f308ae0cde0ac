#include "lnn/basis.hpp"

#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <set>

using namespace lnn;

TEST(MultiIndices, Examples)
{
    const auto s = multi_indices(2, 1);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], (MultiIndex{0, 0}));
    EXPECT_EQ(s[1], (MultiIndex{1, 0}));
    EXPECT_EQ(s[2], (MultiIndex{0, 1}));
    EXPECT_EQ(multi_indices(2, 3).size(), 10u);
    const auto one = multi_indices(1, 0);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], MultiIndex{0});
}

TEST(MultiIndices, RangeGuards)
{
    EXPECT_THROW(multi_indices(0, 2), ArgumentError);
    EXPECT_THROW(multi_indices(17, 1), ArgumentError);
    EXPECT_THROW(multi_indices(2, 13), ArgumentError);
    EXPECT_THROW(multi_indices(2, -1), ArgumentError);
}

TEST(MultiIndices, StructureAndRoundTrip)
{
    for (int d = 1; d <= 5; ++d)
        for (int q = 0; q <= 6; ++q) {
            const auto s = multi_indices(d, q);
            EXPECT_EQ(s.size(), static_cast<std::size_t>(binomial(d + q, d)));
            EXPECT_EQ(s[0], MultiIndex(static_cast<std::size_t>(d), 0));
            std::set<MultiIndex> seen;
            int prev_deg = 0;
            for (std::size_t j = 0; j < s.size(); ++j) {
                const int deg = MultiIndexSet::degree(s[j]);
                EXPECT_LE(deg, q);
                EXPECT_GE(deg, prev_deg);
                prev_deg = deg;
                EXPECT_TRUE(seen.insert(s[j]).second);
                EXPECT_EQ(s.position(s[j]), j);
            }
            EXPECT_EQ(s.position(MultiIndex(static_cast<std::size_t>(d), q + 1)), s.size());
        }
}

TEST(EvalMonomials, Examples)
{
    const auto s21 = multi_indices(2, 1);
    VectorXd x(2), x0 = VectorXd::Zero(2);
    x << 0.2, 0.3;
    const VectorXd m = eval_monomials(x, x0, s21);
    EXPECT_DOUBLE_EQ(m(0), 1.0);
    EXPECT_DOUBLE_EQ(m(1), 0.2);
    EXPECT_DOUBLE_EQ(m(2), 0.3);

    const auto s23 = multi_indices(2, 3);
    const VectorXd at0 = eval_monomials(x, x, s23);
    EXPECT_DOUBLE_EQ(at0(0), 1.0);
    EXPECT_EQ(at0.tail(at0.size() - 1).cwiseAbs().maxCoeff(), 0.0);

    VectorXd two(1), one(1);
    two << 2.0;
    one << 1.0;
    EXPECT_EQ(eval_monomials(two, one, multi_indices(1, 2)), VectorXd::Ones(3));
    EXPECT_THROW(eval_monomials(two, x0, s21), ArgumentError);
}

TEST(EvalMonomials, MatchesProductDefinition)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    const auto s = multi_indices(3, 4);
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd x(3), x0(3);
        for (int k = 0; k < 3; ++k) {
            x(k) = U(rng);
            x0(k) = U(rng);
        }
        const VectorXd m = eval_monomials(x, x0, s);
        for (std::size_t j = 0; j < s.size(); ++j) {
            double v = 1.0;
            for (int k = 0; k < 3; ++k)
                v *= std::pow(x(k) - x0(k), s[j][static_cast<std::size_t>(k)]);
            EXPECT_NEAR(m(static_cast<Eigen::Index>(j)), v, 1e-12 * std::max(1.0, std::abs(v)));
        }
    }
}

TEST(ScalingMatrix, Examples)
{
    EXPECT_EQ(VectorXd(scaling_matrix(0.5, multi_indices(2, 1)).diagonal()),
              (VectorXd(3) << 1, 2, 2).finished());
    EXPECT_EQ(VectorXd(scaling_matrix(1.0, multi_indices(3, 3)).diagonal()), VectorXd::Ones(20));
    EXPECT_EQ(VectorXd(scaling_matrix(0.5, multi_indices(1, 2)).diagonal()),
              (VectorXd(3) << 1, 2, 4).finished());
    EXPECT_THROW(scaling_matrix(0.0, multi_indices(1, 1)), ArgumentError);
}

TEST(ExpansionMatrix, Examples)
{
    const auto s11 = multi_indices(1, 1);
    const double c = 0.3, e = -1.7;
    const MatrixXd B = expansion_matrix({(VectorXd(2) << c, 0).finished(), (VectorXd(2) << 0, e).finished()}, 1, s11);
    EXPECT_EQ(B, (MatrixXd(2, 2) << c, 0, 0, e).finished());

    const auto s12 = multi_indices(1, 2);
    const double a0 = 0.7, a1 = -0.4;
    const VectorXd al = (VectorXd(2) << a0, a1).finished();
    const MatrixXd B2 = expansion_matrix({al, al, al}, 2, s12);
    EXPECT_NEAR(B2(0, 0), a0 * a0, 1e-15);
    EXPECT_NEAR(B2(0, 1), 2 * a0 * a1, 1e-15);
    EXPECT_NEAR(B2(0, 2), a1 * a1, 1e-15);

    const double r = std::sqrt(2.0) / 2;
    const MatrixXd B3 = expansion_matrix({(VectorXd(2) << r, 0).finished(), (VectorXd(2) << 0, r).finished()}, 1, s11);
    EXPECT_NEAR(B3(0, 0), 0.70711, 1e-5);
    EXPECT_NEAR(B3(1, 1), 0.70711, 1e-5);
    EXPECT_EQ(B3(0, 1), 0.0);

    EXPECT_THROW(expansion_matrix({al}, 2, s12), ArgumentError);
}

// A = B m checked against direct evaluation of [(1, z') alpha]^q.
TEST(ExpansionMatrix, PowerOfAffineIdentity)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (auto [d, q] : std::vector<std::pair<int, int>>{{1, 3}, {2, 2}, {2, 4}, {3, 3}}) {
        const auto s = multi_indices(d, q);
        std::vector<VectorXd> alphas;
        for (std::size_t j = 0; j < s.size(); ++j) {
            VectorXd a(d + 1);
            for (int k = 0; k <= d; ++k)
                a(k) = U(rng);
            alphas.push_back(a);
        }
        const MatrixXd B = expansion_matrix(alphas, q, s);
        for (int t = 0; t < 200; ++t) {
            VectorXd z(d);
            for (int k = 0; k < d; ++k)
                z(k) = U(rng);
            const VectorXd m = eval_monomials(z, VectorXd::Zero(d), s);
            const VectorXd Bm = B * m;
            for (std::size_t j = 0; j < s.size(); ++j) {
                const double lin = alphas[j](0) + alphas[j].tail(d).dot(z);
                EXPECT_NEAR(Bm(static_cast<Eigen::Index>(j)), std::pow(lin, q), 1e-10);
            }
        }
    }
}

TEST(RotationMatrix, Examples)
{
    const MatrixXd B = (MatrixXd(2, 2) << 0.70711, 0, 0, 0.70711).finished();
    const RotationPair rp = rotation_matrix(B);
    EXPECT_NEAR(rp.D(0, 0), 1.41421, 1e-5);
    EXPECT_NEAR(rp.D(1, 1), 1.41421, 1e-5);
    EXPECT_NEAR(rp.D(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(rp.cond, 1.0, 1e-12);

    const RotationPair id = rotation_matrix(MatrixXd::Identity(4, 4));
    EXPECT_EQ(id.D, MatrixXd::Identity(4, 4));

    MatrixXd dup(2, 2);
    dup << 0.5, 0.25, 0.5, 0.25;
    EXPECT_THROW(rotation_matrix(dup), NumericalError);
    EXPECT_THROW(rotation_matrix(MatrixXd::Ones(2, 3)), ArgumentError);
}

TEST(MomentMatrix, Examples)
{
    EXPECT_EQ(moment_matrix(multi_indices(1, 1)), (MatrixXd(2, 2) << 2, 0, 0, 2.0 / 3).finished());
    const MatrixXd S = moment_matrix(multi_indices(1, 2));
    const MatrixXd expect = (MatrixXd(3, 3) << 2, 0, 2.0 / 3, 0, 2.0 / 3, 0, 2.0 / 3, 0, 2.0 / 5).finished();
    EXPECT_NEAR((S - expect).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_EQ(moment_matrix(multi_indices(2, 0)), MatrixXd::Constant(1, 1, 4.0));
}

TEST(MomentMatrix, PositiveDefinite)
{
    for (int d = 1; d <= 4; ++d)
        for (int q = 0; q <= 6; ++q) {
            const MatrixXd S = moment_matrix(multi_indices(d, q));
            EXPECT_EQ(S, S.transpose());
            Eigen::LLT<MatrixXd> llt(S);
            EXPECT_EQ(llt.info(), Eigen::Success) << "d=" << d << " q=" << q;
        }
}

// Midpoint-rule quadrature oracle for one entry pattern in d = 2.
TEST(MomentMatrix, MatchesQuadrature)
{
    const auto s = multi_indices(2, 3);
    const MatrixXd S = moment_matrix(s);
    const int n = 400;
    MatrixXd Q = MatrixXd::Zero(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            VectorXd x(2);
            x << -1 + (2 * i + 1.0) / n, -1 + (2 * j + 1.0) / n;
            const VectorXd m = eval_monomials(x, VectorXd::Zero(2), s);
            Q += m * m.transpose() * (4.0 / (n * n));
        }
    EXPECT_LT((Q - S).cwiseAbs().maxCoeff(), 1e-4);
}
