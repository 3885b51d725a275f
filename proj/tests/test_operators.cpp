#include <random>

#include <gtest/gtest.h>

#include "levelcurv/operators.hpp"

using namespace levelcurv;

namespace {

Jet<2> jet2(const Vec<2>& g, const Mat<2>& h)
{
    Jet<2> j;
    j.gradient = g;
    j.hessian = h;
    return j;
}

} // namespace

TEST(Operators, Examples)
{
    auto heat = OperatorSpec<2>::heat();
    auto e = eval_operator(heat, jet2(Vec<2>::Zero(), Mat<2>(-2 * Mat<2>::Identity())), 0.0);
    EXPECT_EQ(e.F, -4.0);
    EXPECT_EQ(e.dF_dr, Mat<2>::Identity());

    Mat<2> m;
    m << 2, 0, 0, 3;
    e = eval_operator(OperatorSpec<2>::linear(m), jet2(Vec<2>::Zero(), Mat<2>::Identity()), 0.0);
    EXPECT_EQ(e.F, 5.0);
    EXPECT_EQ(e.dF_dr, m);

    e = eval_operator(OperatorSpec<2>::grad_augmented(Mat<2>::Identity(), 0.5), jet2(Vec<2>(3, 4), Mat<2>::Zero()), 0.0);
    EXPECT_EQ(e.F, 12.5);
    EXPECT_EQ(e.dF_dp, Vec<2>(3, 4));
    EXPECT_EQ(e.d2F_dpdp, Mat<2>::Identity());
}

TEST(Operators, InvalidMatricesAreRejected)
{
    Mat<2> m;
    m << 1, 0, 0, -1;
    EXPECT_THROW(OperatorSpec<2>::linear(m), ArgError);
    m << 1, 0.5, 0, 1;
    EXPECT_THROW(OperatorSpec<2>::linear(m), ArgError);
}

TEST(Operators, DerivativesMatchFiniteDifferences)
{
    std::mt19937_64 rng(31);
    std::normal_distribution<double> N(0.0, 1.0);
    Mat<3> b;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            b(i, j) = N(rng);
    const Mat<3> m = b * b.transpose() + Mat<3>::Identity();
    const auto spec = OperatorSpec<3>::grad_augmented(m, 0.7);
    const double d = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        Mat<3> r;
        Vec<3> p;
        for (int i = 0; i < 3; ++i) {
            p[i] = N(rng);
            for (int j = 0; j < 3; ++j)
                r(i, j) = N(rng);
        }
        r = (r + r.transpose()).eval();
        const double u = N(rng);
        const auto e = eval_operator(spec, r, p, u, 0.0);
        auto F = [&](const Mat<3>& rr, const Vec<3>& pp, double uu) { return operator_value(spec, rr, pp, uu, 0.0); };
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                Mat<3> dr = Mat<3>::Zero();
                dr(i, j) = d;
                const double fd = (F(r + dr, p, u) - F(r - dr, p, u)) / (2 * d);
                EXPECT_NEAR(fd, e.dF_dr(i, j), 1e-6 * (1 + std::abs(e.dF_dr(i, j))));
            }
            Vec<3> dp = Vec<3>::Zero();
            dp[i] = d;
            const double fd = (F(r, p + dp, u) - F(r, p - dp, u)) / (2 * d);
            EXPECT_NEAR(fd, e.dF_dp[i], 1e-6 * (1 + std::abs(e.dF_dp[i])));
            for (int k = 0; k < 3; ++k) {
                Vec<3> dq = Vec<3>::Zero();
                dq[k] = 1e-4;
                const double fdd = (F(r, p + dp * 10 + dq, u) - F(r, p + dp * 10 - dq, u) - F(r, p - dp * 10 + dq, u)
                                    + F(r, p - dp * 10 - dq, u))
                                   / (4 * 1e-4 * 1e-4);
                EXPECT_NEAR(fdd, e.d2F_dpdp(i, k), 1e-6 * (1 + std::abs(e.d2F_dpdp(i, k))) + 1e-4);
            }
        }
        const double fdu = (F(r, p, u + d) - F(r, p, u - d)) / (2 * d);
        EXPECT_NEAR(fdu, e.dF_du, 1e-6);
        EXPECT_EQ(asymmetry(e.dF_dr), 0.0);
    }
}

TEST(Ellipticity, CatalogValues)
{
    std::vector<Jet<2>> states(5);
    EXPECT_EQ(ellipticity_lambda(OperatorSpec<2>::heat(), states), 1.0);
    Mat<2> m;
    m << 2, 0, 0, 3;
    EXPECT_EQ(ellipticity_lambda(OperatorSpec<2>::linear(m), states), 2.0);
    m << 2, 1, 1, 2;
    EXPECT_NEAR(ellipticity_lambda(OperatorSpec<2>::linear(m), states), 1.0, 1e-15);
    EXPECT_THROW(ellipticity_lambda(OperatorSpec<2>::heat(), {}), ArgError);
    EXPECT_EQ(ellipticity_lambda(OperatorSpec<3>::heat(), std::vector<Jet<3>>(1)), 1.0);
}

TEST(Ellipticity, AddingPsdNeverDecreasesLambda)
{
    std::mt19937_64 rng(32);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<Jet<3>> states(1);
    for (int k = 0; k < 50; ++k) {
        Mat<3> b, c;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                b(i, j) = N(rng);
                c(i, j) = N(rng);
            }
        const Mat<3> m = b * b.transpose() + 0.1 * Mat<3>::Identity();
        const Mat<3> psd = c * c.transpose();
        EXPECT_GE(ellipticity_lambda(OperatorSpec<3>::linear(m + psd), states) + 1e-12,
                  ellipticity_lambda(OperatorSpec<3>::linear(m), states));
    }
}
