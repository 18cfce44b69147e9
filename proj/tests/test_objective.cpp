#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tflr/objective.hpp"

using namespace tflr;

namespace {

CompositionMatrix comp(MatrixXd m) { return validate_composition(std::move(m)); }

MatrixXd row2(double a, double b) {
    MatrixXd m(1, 2);
    m << a, b;
    return m;
}

}  // namespace

TEST(Fitted, MatrixProduct) {
    MatrixXd b(2, 2);
    b << 0.3, 0.7, 0.9, 0.1;
    const auto B = CoefficientMatrix::from_values(b);
    EXPECT_TRUE(fitted(comp(row2(1, 0)), B).values.isApprox(row2(0.3, 0.7)));
    // 0.5 * (0.3, 0.7) + 0.5 * (0.9, 0.1)
    EXPECT_NEAR(fitted(comp(row2(0.5, 0.5)), B).values(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(fitted(comp(row2(0.5, 0.5)), B).values(0, 1), 0.4, 1e-15);
    EXPECT_EQ(fitted(comp(row2(0.5, 0.5)), uniform_coefficients(2, 2)).values, row2(0.5, 0.5));
}

TEST(Fitted, DimensionMismatch) {
    EXPECT_THROW(fitted(comp(row2(0.5, 0.5)), uniform_coefficients(3, 2)), Error);
}

TEST(Fitted, RowsStayOnSimplex) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        const Index p = 2 + t % 6, r = 2 + t % 5;
        const auto x = comp(oracle::random_simplex_rows(20, p, rng));
        const auto b = CoefficientMatrix::from_values(oracle::random_simplex_rows(p, r, rng));
        const auto m = fitted(x, b);
        EXPECT_LE((m.values.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
        EXPECT_GE(m.values.minCoeff(), 0.0);
    }
}

TEST(Kld, Examples) {
    const auto y = comp(row2(1, 0));
    EXPECT_NEAR(kld(y, FittedMatrix(row2(0.5, 0.5)), 1e-8), std::log(2.0), 1e-15);
    // fitted value 0 is floored at delta: log(1 / 1e-8)
    EXPECT_NEAR(kld(y, FittedMatrix(row2(0, 1)), 1e-8), 18.420680743952367, 1e-12);
    const auto z = comp(row2(0.3, 0.7));
    EXPECT_EQ(kld(z, FittedMatrix(z.values()), 1e-8), 0.0);
    EXPECT_THROW(kld(y, FittedMatrix(MatrixXd::Constant(2, 2, 0.5))), Error);
}

TEST(WorkingLoglik, Examples) {
    EXPECT_NEAR(working_loglik(comp(row2(1, 0)), FittedMatrix(row2(0.5, 0.5))), std::log(0.5), 1e-15);
    EXPECT_NEAR(working_loglik(comp(row2(0.5, 0.5)), FittedMatrix(row2(0.5, 0.5))), std::log(0.5), 1e-15);
    EXPECT_EQ(working_loglik(comp(row2(1, 0)), FittedMatrix(row2(1, 0))), 0.0);
}

TEST(Kld, NonNegativeAndMatchesEntropyIdentity) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        const Index n = 1 + t % 30, r = 2 + t % 6;
        const auto y = comp(oracle::random_simplex_rows(n, r, rng));
        const FittedMatrix m(oracle::random_simplex_rows(n, r, rng));
        if ((m.values.array() < 1e-8).any()) continue;
        const double d = kld(y, m);
        EXPECT_GE(d, 0.0);
        double entropy = 0.0;
        for (Index i = 0; i < y.values().size(); ++i) {
            const double v = y.values()(i);
            if (v > 0.0) entropy += v * std::log(v);
        }
        EXPECT_NEAR(d, entropy - working_loglik(y, m), 1e-12);
    }
}

TEST(Kld, ZeroResponsesContributeNothing) {
    MatrixXd y(2, 3);
    y << 0.0, 0.5, 0.5, 1.0, 0.0, 0.0;
    MatrixXd m(2, 3);
    m << 0.0, 0.5, 0.5, 1.0, 0.0, 0.0;
    EXPECT_EQ(kld(comp(y), FittedMatrix(m)), 0.0);
}
