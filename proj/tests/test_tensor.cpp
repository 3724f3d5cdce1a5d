#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

using namespace gridtd;

TEST(DenseTensor, RowMajorLayout) {
    DenseTensor t({2, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) t(i, j) = 10.0 * i + j;
    // last index fastest
    EXPECT_EQ(t[0], 0.0);
    EXPECT_EQ(t[1], 1.0);
    EXPECT_EQ(t[2], 2.0);
    EXPECT_EQ(t[3], 10.0);
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_EQ(t.order(), 2u);
}

TEST(DenseTensor, ShapeValidation) {
    EXPECT_THROW(DenseTensor(std::vector<std::size_t>{}), std::invalid_argument);
    EXPECT_THROW(DenseTensor({2, 0}), std::invalid_argument);
    EXPECT_THROW(DenseTensor({2, 2}, std::vector<double>(3)), std::invalid_argument);
    DenseTensor t({2, 2});
    EXPECT_THROW(t(2, 0), std::out_of_range);
}

TEST(OuterProduct, TwoVectorsSymbolic) {
    const double x1 = 1.7, x2 = -0.3, y1 = 2.5, y2 = 0.125;
    DenseTensor t = outer_product({{x1, x2}, {y1, y2}});
    EXPECT_EQ(t(0, 0), x1 * y1);
    EXPECT_EQ(t(0, 1), x1 * y2);
    EXPECT_EQ(t(1, 0), x2 * y1);
    EXPECT_EQ(t(1, 1), x2 * y2);
}

TEST(OuterProduct, AllOnes) {
    DenseTensor t = outer_product({{1, 1}, {1, 1}});
    for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(t[i], 1.0);
}

TEST(OuterProduct, ThreeWayAgainstBruteForce) {
    const std::vector<std::vector<double>> vs = {{1, 2}, {3, 4}, {5}};
    DenseTensor t = outer_product(vs);
    ASSERT_EQ(t.shape(), (std::vector<std::size_t>{2, 2, 1}));
    // independent nested-loop oracle
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 1; ++k)
                EXPECT_EQ(t(i, j, k), vs[0][i] * vs[1][j] * vs[2][k]);
}

TEST(OuterProduct, Multilinearity) {
    Rng rng(11, "test/outer");
    std::vector<double> a(3), b(4);
    for (double& v : a) v = rng.uniform(-1, 1);
    for (double& v : b) v = rng.uniform(-1, 1);
    const double alpha = 3.7;
    std::vector<double> a_scaled = a;
    for (double& v : a_scaled) v *= alpha;
    DenseTensor base = outer_product({a, b});
    DenseTensor scaled = outer_product({a_scaled, b});
    for (std::size_t i = 0; i < base.numel(); ++i)
        EXPECT_NEAR(scaled[i], alpha * base[i], 1e-15 * std::abs(base[i]) + 1e-300);
}

TEST(OuterProduct, EmptyInputRejected) {
    EXPECT_THROW(outer_product({}), std::invalid_argument);
    EXPECT_THROW(outer_product({{1.0}, {}}), std::invalid_argument);
}

TEST(CpAssemble, RankOneEqualsOuterBitwise) {
    Rng rng(12, "test/cp1");
    std::vector<double> a(3), b(2), c(4);
    for (double& v : a) v = rng.uniform(-1, 1);
    for (double& v : b) v = rng.uniform(-1, 1);
    for (double& v : c) v = rng.uniform(-1, 1);
    DenseTensor viaCp = cp_assemble({{a, b, c}});
    DenseTensor viaOuter = outer_product({a, b, c});
    for (std::size_t i = 0; i < viaCp.numel(); ++i) EXPECT_EQ(viaCp[i], viaOuter[i]);
}

TEST(CpAssemble, RankTwoEqualsSumOfOuters) {
    Rng rng(13, "test/cp2");
    std::vector<std::vector<std::vector<double>>> f(2);
    for (auto& term : f) {
        term.resize(2);
        term[0].resize(3);
        term[1].resize(3);
        for (auto& ax : term)
            for (double& v : ax) v = rng.uniform(-1, 1);
    }
    DenseTensor got = cp_assemble(f);
    DenseTensor o1 = outer_product({f[0][0], f[0][1]});
    DenseTensor o2 = outer_product({f[1][0], f[1][1]});
    for (std::size_t i = 0; i < got.numel(); ++i)
        EXPECT_DOUBLE_EQ(got[i], o1[i] + o2[i]);
}

TEST(CpAssemble, ZeroFactorPerTermGivesZero) {
    const std::vector<double> z = {0, 0, 0};
    const std::vector<double> a = {1, -2, 3};
    DenseTensor t = cp_assemble({{z, a}, {a, z}});
    for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(t[i], 0.0);
}

TEST(CpAssemble, MismatchedLengthsRejected) {
    EXPECT_THROW(cp_assemble({{{1, 2}, {1}}, {{1, 2, 3}, {1}}}),
                 std::invalid_argument);
}

TEST(UniformCoordinates, SingleEntryAxis) {
    CoordinateGrid g = uniform_coordinates({1});
    ASSERT_EQ(g.axes[0].size(), 1u);
    EXPECT_EQ(g.axes[0][0], 0.0);
}

TEST(UniformCoordinates, FourEntries) {
    CoordinateGrid g = uniform_coordinates({4});
    EXPECT_EQ(g.axes[0], (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
}

TEST(UniformCoordinates, ThreeEntriesBelowOne) {
    CoordinateGrid g = uniform_coordinates({3});
    EXPECT_DOUBLE_EQ(g.axes[0][1], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(g.axes[0][2], 2.0 / 3.0);
    EXPECT_LT(g.axes[0].back(), 1.0);
}

TEST(UniformCoordinates, StrictlyIncreasingInUnitInterval) {
    CoordinateGrid g = uniform_coordinates({7, 5, 12});
    g.validate();  // checks increase and [0,1) membership
    for (const auto& ax : g.axes) {
        EXPECT_GE(ax.front(), 0.0);
        EXPECT_LT(ax.back(), 1.0);
    }
}

TEST(VectorOps, HadamardAndConcat) {
    EXPECT_EQ(hadamard({1, 1}, {3.5, -2}), (std::vector<double>{3.5, -2}));
    EXPECT_EQ(hadamard({2, 3}, {4, 5}), (std::vector<double>{8, 15}));
    EXPECT_EQ(concat({1, 2}, {3, 4}), (std::vector<double>{1, 2, 3, 4}));
    EXPECT_THROW(hadamard({1, 2}, {1}), std::invalid_argument);
}

TEST(TensorHelpers, NormsAndAxpy) {
    DenseTensor a({2, 2}, std::vector<double>{3, 0, 0, 4});
    EXPECT_DOUBLE_EQ(fro_norm(a), 5.0);
    DenseTensor b({2, 2}, std::vector<double>{1, 1, 1, 1});
    EXPECT_DOUBLE_EQ(dot(a, b), 7.0);
    axpy(b, 2.0, a);
    EXPECT_EQ(b(0, 0), 7.0);
    EXPECT_EQ(b(1, 1), 9.0);
    DenseTensor c({3});
    EXPECT_THROW(dot(a, c), std::invalid_argument);
}
