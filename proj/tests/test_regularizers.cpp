#include <gtest/gtest.h>

#include <cmath>

#include "gridtd/regularizers.hpp"
#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

using namespace gridtd;

namespace {

DenseTensor random_tensor(const std::vector<std::size_t>& shape, std::uint64_t seed) {
    DenseTensor x(shape);
    Rng rng(seed, "test/reg");
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    return x;
}

}  // namespace

TEST(SmoothAbs, BasicProperties) {
    EXPECT_EQ(smooth_abs(0.0), 0.0);
    EXPECT_NEAR(smooth_abs(3.0), 3.0, 1.1e-8);
    EXPECT_NEAR(smooth_abs(-3.0), 3.0, 1.1e-8);
    EXPECT_EQ(smooth_abs(2.0), smooth_abs(-2.0));
    // always below |x|, within eps of it
    for (double x : {1e-9, 1e-6, 0.1, 7.0}) {
        EXPECT_LE(smooth_abs(x), std::abs(x));
        EXPECT_GE(smooth_abs(x), std::abs(x) - kSmoothEps);
    }
    EXPECT_EQ(smooth_abs_grad(0.0), 0.0);
    EXPECT_NEAR(smooth_abs_grad(5.0), 1.0, 1e-15);
    EXPECT_NEAR(smooth_abs_grad(-5.0), -1.0, 1e-15);
    for (double x : {-2.0, -1e-8, 3e-9, 0.4})
        EXPECT_LE(std::abs(smooth_abs_grad(x)), 1.0);
}

TEST(Tv, HandOracle2x2) {
    DenseTensor x({2, 2, 1});
    x(0, 0, 0) = 0.0;
    x(0, 1, 0) = 1.0;
    x(1, 0, 0) = 2.0;
    x(1, 1, 0) = 5.0;
    // down differences: |2-0| + |5-1|; right differences: |1-0| + |5-2|
    EXPECT_NEAR(tv(x), 2.0 + 4.0 + 1.0 + 3.0, 1e-7);
}

TEST(Tv, ConstantTensorIsZero) {
    DenseTensor x({3, 4, 2}, 0.7);
    EXPECT_EQ(tv(x), 0.0);
    EXPECT_EQ(sstv(x), 0.0);
}

TEST(Tv, IgnoresPurelyTemporalVariation) {
    // frames are each constant, only the temporal axis varies
    DenseTensor x({3, 3, 4});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t t = 0; t < 4; ++t) x(i, j, t) = 2.0 * t;
    EXPECT_EQ(tv(x), 0.0);
}

TEST(Tv, GlobalShiftInvariant) {
    DenseTensor x = random_tensor({4, 5, 3}, 1);
    DenseTensor shifted = x;
    for (std::size_t i = 0; i < shifted.numel(); ++i) shifted[i] += 0.37;
    EXPECT_NEAR(tv(shifted), tv(x), 1e-12);
    EXPECT_NEAR(sstv(shifted), sstv(x), 1e-12);
}

TEST(Tv, GradMatchesFiniteDifferences) {
    DenseTensor x = random_tensor({4, 3, 3}, 2);
    DenseTensor g(x.shape());
    tv_add_grad(x, 1.0, g);
    const double step = 1e-6;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double up = tv(x);
        x[i] = keep - step;
        const double dn = tv(x);
        x[i] = keep;
        EXPECT_NEAR(g[i], (up - dn) / (2 * step), 1e-5) << "entry " << i;
    }
}

TEST(Sstv, HandOracle2x2x2) {
    DenseTensor x({2, 2, 2});
    // frame 0: [[0,1],[2,3]]; frame 1: [[1,3],[2,7]]
    x(0, 0, 0) = 0.0;
    x(0, 1, 0) = 1.0;
    x(1, 0, 0) = 2.0;
    x(1, 1, 0) = 3.0;
    x(0, 0, 1) = 1.0;
    x(0, 1, 1) = 3.0;
    x(1, 0, 1) = 2.0;
    x(1, 1, 1) = 7.0;
    // frame difference D = [[1,2],[0,4]]
    // down diffs of D: |0-1| + |4-2| = 3; right diffs: |2-1| + |4-0| = 5
    EXPECT_NEAR(sstv(x), 8.0, 1e-7);
}

TEST(Sstv, StaticSceneIsZero) {
    // identical frames: frame differences vanish, so SSTV must too
    DenseTensor x({4, 4, 3});
    Rng rng(3, "test/reg");
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            for (std::size_t t = 0; t < 3; ++t) x(i, j, t) = v;
        }
    EXPECT_EQ(sstv(x), 0.0);
    EXPECT_GT(tv(x), 0.0);
}

TEST(Sstv, PerFrameBrightnessInvariant) {
    // adding a per-frame constant changes frame differences by constants,
    // whose spatial differences vanish
    DenseTensor x = random_tensor({4, 5, 3}, 4);
    DenseTensor shifted = x;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t t = 0; t < 3; ++t) shifted(i, j, t) += 0.1 * t * t;
    EXPECT_NEAR(sstv(shifted), sstv(x), 1e-12);
}

TEST(Sstv, GradMatchesFiniteDifferences) {
    DenseTensor x = random_tensor({3, 4, 3}, 5);
    DenseTensor g(x.shape());
    sstv_add_grad(x, 1.0, g);
    const double step = 1e-6;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double up = sstv(x);
        x[i] = keep - step;
        const double dn = sstv(x);
        x[i] = keep;
        EXPECT_NEAR(g[i], (up - dn) / (2 * step), 1e-5) << "entry " << i;
    }
}

TEST(RegLoss, CombinesWeightedTerms) {
    DenseTensor x = random_tensor({3, 3, 3}, 6);
    const double l1 = 0.3, l2 = 0.7;
    EXPECT_NEAR(reg_loss(x, l1, l2), l1 * tv(x) + l2 * sstv(x), 1e-12);
    EXPECT_EQ(reg_loss(x, 0.0, 0.0), 0.0);
    // grads accumulate both weighted terms
    DenseTensor g(x.shape()), want(x.shape());
    reg_add_grad(x, l1, l2, g);
    tv_add_grad(x, l1, want);
    sstv_add_grad(x, l2, want);
    EXPECT_LT(max_abs_diff(g, want), 1e-15);
}

TEST(RegLoss, ZeroWeightSkipsShapeRequirement) {
    // a single-frame tensor is invalid for SSTV but fine when lambda2 == 0
    DenseTensor x = random_tensor({3, 3, 1}, 7);
    EXPECT_NO_THROW(reg_loss(x, 0.5, 0.0));
    EXPECT_THROW(reg_loss(x, 0.5, 0.5), std::invalid_argument);
    EXPECT_THROW(reg_loss(x, -0.1, 0.0), std::invalid_argument);
}

TEST(RegLoss, ShapeValidation) {
    DenseTensor flat({4, 4});
    EXPECT_THROW(tv(flat), std::invalid_argument);
    DenseTensor thin({1, 4, 2});
    EXPECT_THROW(tv(thin), std::invalid_argument);
    DenseTensor single({4, 4, 1});
    EXPECT_NO_THROW(tv(single));
    EXPECT_THROW(sstv(single), std::invalid_argument);
}

TEST(RegLoss, WeightScalesGradExactly) {
    DenseTensor x = random_tensor({3, 3, 2}, 8);
    DenseTensor g1(x.shape()), g2(x.shape());
    tv_add_grad(x, 1.0, g1);
    tv_add_grad(x, 2.0, g2);
    for (std::size_t i = 0; i < g1.numel(); ++i)
        EXPECT_DOUBLE_EQ(g2[i], 2.0 * g1[i]);
}
