#include "lnn/activation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lnn;

namespace {

// Bell numbers from the Bell triangle, independent of the Stirling table.
std::vector<std::uint64_t> bell_numbers(int n_max)
{
    std::vector<std::uint64_t> bell{1};
    std::vector<std::uint64_t> row{1};
    for (int n = 1; n <= n_max; ++n) {
        std::vector<std::uint64_t> next{row.back()};
        for (std::uint64_t v : row)
            next.push_back(next.back() + v);
        bell.push_back(next.front());
        row = std::move(next);
    }
    return bell;
}

} // namespace

TEST(Stirling, SmallValues)
{
    EXPECT_EQ(stirling2(3, 1), 1);
    EXPECT_EQ(stirling2(3, 2), 3);
    EXPECT_EQ(stirling2(4, 2), 7);
    EXPECT_EQ(stirling2(0, 0), 1);
    EXPECT_EQ(stirling2(5, 0), 0);
    EXPECT_EQ(stirling2(2, 5), 0);
}

TEST(Stirling, RowSumsAreBellNumbers)
{
    const auto bell = bell_numbers(10);
    for (int n = 0; n <= 10; ++n) {
        BigUInt sum = 0;
        for (int k = 0; k <= n; ++k)
            sum += stirling2(n, k);
        EXPECT_EQ(sum, BigUInt(bell[static_cast<std::size_t>(n)])) << "n=" << n;
    }
}

TEST(Stirling, RangeGuard)
{
    EXPECT_THROW(stirling2(65, 2), ArgumentError);
    EXPECT_THROW(stirling2(-1, 0), ArgumentError);
    EXPECT_NO_THROW(stirling2(64, 32));
}

TEST(SigmoidDerivative, KnownValues)
{
    const ActivationSpec spec{ActivationKind::squasher, 0.5, 3};
    EXPECT_DOUBLE_EQ(sigmoid_derivative(0.0, 0, spec), 0.5);
    EXPECT_DOUBLE_EQ(sigmoid_derivative(0.0, 1, spec), 0.25);
    EXPECT_NEAR(sigmoid_derivative(0.0, 2, spec), 0.0, 1e-16);

    const double step = 1e-5;
    const double fd = (squasher(0.5 + step) - squasher(0.5 - step)) / (2 * step);
    EXPECT_NEAR(sigmoid_derivative(0.5, 1, spec), fd, 1e-9);
    EXPECT_NEAR(sigmoid_derivative(0.5, 1, spec), 0.235004, 1e-6);
}

TEST(SigmoidDerivative, OrderGuard)
{
    const ActivationSpec spec{ActivationKind::squasher, 0.5, 2};
    EXPECT_NO_THROW(sigmoid_derivative(0.1, 3, spec));
    EXPECT_THROW(sigmoid_derivative(0.1, 4, spec), ArgumentError);
}

// Each derivative matches a central difference of the previous one.
TEST(SigmoidDerivative, FiniteDifferenceChain)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (ActivationKind kind : {ActivationKind::squasher, ActivationKind::erf}) {
        const ActivationSpec spec{kind, 0.5, 5};
        for (int trial = 0; trial < 200; ++trial) {
            const double x = U(rng);
            for (int n = 1; n <= spec.q + 1; ++n) {
                const double step = 1e-5;
                const double fd = (sigmoid_derivative(x + step, n - 1, spec) -
                                   sigmoid_derivative(x - step, n - 1, spec)) /
                                  (2 * step);
                const double exact = sigmoid_derivative(x, n, spec);
                // relative error, with an absolute floor covering the cancellation in the
                // alternating Stirling sum, amplified by 1/(2 step)
                EXPECT_LE(std::abs(exact - fd), 1e-6 * std::max(std::abs(exact), 1e-2))
                    << to_string(kind) << " x=" << x << " n=" << n;
            }
        }
    }
}

TEST(Squasher, RangeAndSymmetry)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-40.0, 40.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = U(rng);
        const double s = squasher(x);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        EXPECT_NEAR(s + squasher(-x), 1.0, 1e-15);
    }
    EXPECT_GT(squasher(30.0), 0.0);
    EXPECT_LT(squasher(30.0), 1.0);
    EXPECT_TRUE(std::isfinite(squasher(-800.0)));
    EXPECT_TRUE(std::isfinite(squasher(800.0)));
}

TEST(ErfActivation, MapsIntoUnitInterval)
{
    const ActivationSpec spec{ActivationKind::erf, 0.5, 1};
    EXPECT_DOUBLE_EQ(sigmoid(spec, 0.0), 0.5);
    EXPECT_NEAR(sigmoid(spec, 6.0), 1.0, 1e-15);
    EXPECT_NEAR(sigmoid(spec, -6.0), 0.0, 1e-15);
    EXPECT_NEAR(sigmoid_derivative(0.0, 1, spec), 1.0 / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(ValidateUSigma, Examples)
{
    const auto bad = validate_u_sigma({ActivationKind::squasher, 0.0, 2});
    EXPECT_FALSE(bad.ok);
    ASSERT_EQ(bad.offending.size(), 1u);
    EXPECT_EQ(bad.offending[0], 2);
    ASSERT_EQ(bad.derivatives.size(), 2u);
    EXPECT_DOUBLE_EQ(bad.derivatives[0], 0.25);

    const auto five = validate_u_sigma({ActivationKind::squasher, 0.5, 5});
    EXPECT_TRUE(five.ok);
    EXPECT_EQ(five.derivatives.size(), 5u);
    for (double v : five.derivatives)
        EXPECT_GT(std::abs(v), 1e-10);

    EXPECT_TRUE(validate_u_sigma({ActivationKind::squasher, -0.5, 4}).ok);
    EXPECT_THROW(require_valid_u_sigma({ActivationKind::squasher, 0.0, 2}), ArgumentError);
    EXPECT_NO_THROW(require_valid_u_sigma({ActivationKind::squasher, 0.0, 1}));
}

TEST(ActivationNames, RoundTrip)
{
    for (ActivationKind k : {ActivationKind::squasher, ActivationKind::erf})
        EXPECT_EQ(activation_from_string(to_string(k)), k);
    EXPECT_THROW(activation_from_string("relu"), ArgumentError);
}
