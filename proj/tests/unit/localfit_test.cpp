#include "lnn/lnn.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lnn;

namespace {

LnnConfig config(int d, int q)
{
    LnnConfig c;
    c.d = d;
    c.q = q;
    return c;
}

} // namespace

TEST(FitLocal, AgreesWithGlobalAtCubeCenters)
{
    const SimData sim = gen_dataset(SimModel::reg, 1600, 2, 3.0, 31);
    const LnnConfig cfg = config(2, 3);
    const Architecture arch = build_architecture(cfg, 3);
    const FittedRegression fit = fit_regression(sim.data, arch);
    for (std::size_t c = 0; c < arch.num_cubes(); ++c) {
        const VectorXd x0 = arch.center(c);
        const LocalFit lf = fit_local(sim.data, x0, arch.partition.h, cfg);
        const Prediction p = predict(fit, x0);
        ASSERT_TRUE(p.ok());
        EXPECT_EQ(lf.count, fit.counts[c]);
        EXPECT_FALSE(lf.flagged);
        // identical design and target up to boundary ties, so agreement is to rounding
        EXPECT_NEAR(lf.ghat, p.value, 1e-10 * std::max(1.0, std::abs(p.value)));
        EXPECT_LT((lf.theta - fit.theta(c)).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, fit.theta(c).cwiseAbs().maxCoeff()));
    }
}

TEST(FitLocal, EmptyWindowAndBadArguments)
{
    const SimData sim = gen_dataset(SimModel::reg, 200, 1, 3.0, 32);
    const LnnConfig cfg = config(1, 2);
    EXPECT_THROW(fit_local(sim.data, VectorXd::Constant(1, 50.0), 0.5, cfg), DataError);
    EXPECT_THROW(fit_local(sim.data, VectorXd::Zero(1), 0.0, cfg), ArgumentError);
    EXPECT_THROW(fit_local(sim.data, VectorXd::Zero(2), 0.5, cfg), ArgumentError);
}

TEST(FitLocal, FewObservationsAreFlagged)
{
    Dataset data;
    data.X = (MatrixXd(3, 1) << 0.1, 0.2, 5.0).finished();
    data.y = (VectorXd(3) << 1.0, 2.0, 3.0).finished();
    const LocalFit lf = fit_local(data, VectorXd::Zero(1), 0.5, config(1, 3));
    EXPECT_EQ(lf.count, 2u);
    EXPECT_TRUE(lf.flagged);
    EXPECT_TRUE(std::isfinite(lf.ghat));
}

TEST(FitLocal, ConstantResponse)
{
    const SimData sim = gen_dataset(SimModel::reg, 2000, 1, 3.0, 33);
    Dataset data = sim.data;
    data.y.setConstant(2.5);
    for (double h : {0.25, 0.5, 1.0}) {
        const LocalFit lf = fit_local(data, VectorXd::Constant(1, 0.4), h, config(1, 3));
        EXPECT_NEAR(lf.ghat, 2.5, 10 * std::pow(h, 4)) << "h=" << h;
    }
}

// Works at points outside [-a, a]^d as long as the window holds data.
TEST(FitLocal, AnyEvaluationPoint)
{
    const SimData sim = gen_dataset(SimModel::reg, 3000, 1, 3.0, 34);
    const LocalFit lf = fit_local(sim.data, VectorXd::Constant(1, 3.2), 0.8, config(1, 1));
    EXPECT_GT(lf.count, 0u);
    EXPECT_TRUE(std::isfinite(lf.ghat));
}

TEST(FitLocal, WindowExactness)
{
    const SimData sim = gen_dataset(SimModel::reg, 1500, 2, 3.0, 35);
    const VectorXd x0 = (VectorXd(2) << 0.3, -0.7).finished();
    const double h = 0.9;
    const LnnConfig cfg = config(2, 2);
    const LocalFit full = fit_local(sim.data, x0, h, cfg);
    const auto rows = window_rows(sim.data.X, x0, h);
    Dataset inside;
    inside.X.resize(static_cast<Eigen::Index>(rows.size()), 2);
    inside.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        inside.X.row(static_cast<Eigen::Index>(r)) = sim.data.X.row(static_cast<Eigen::Index>(rows[r]));
        inside.y(static_cast<Eigen::Index>(r)) = sim.data.y(static_cast<Eigen::Index>(rows[r]));
    }
    const LocalFit trimmed = fit_local(inside, x0, h, cfg);
    EXPECT_EQ(full.theta, trimmed.theta);
    EXPECT_EQ(full.ghat, trimmed.ghat);
    for (std::size_t t = 0; t < sim.data.T(); ++t) {
        const bool in = std::find(rows.begin(), rows.end(), t) != rows.end();
        EXPECT_EQ(in, (sim.data.x(t) - x0).cwiseAbs().maxCoeff() <= h);
    }
}

TEST(FitLocal, ManyMatchesSingleAndThreads)
{
    const SimData sim = gen_dataset(SimModel::reg, 1200, 1, 3.0, 36);
    const MatrixXd pts = diagonal_points(1);
    const auto one = fit_local_many(sim.data, pts, 0.5, config(1, 3), 1);
    const auto three = fit_local_many(sim.data, pts, 0.5, config(1, 3), 3);
    ASSERT_EQ(one.size(), 26u);
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].ghat, three[i].ghat);
        EXPECT_EQ(one[i].ghat, fit_local(sim.data, pts.row(static_cast<Eigen::Index>(i)).transpose(), 0.5, config(1, 3)).ghat);
    }
}
