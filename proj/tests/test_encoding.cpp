#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridtd/encoding.hpp"
#include "gridtd/params.hpp"
#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

using namespace gridtd;

namespace {

EncoderConfig make_cfg(EncoderMode mode, std::size_t dims, std::size_t levels,
                       std::size_t features, std::size_t n_min, std::size_t n_max,
                       std::size_t table_len = std::size_t(1) << 20) {
    EncoderConfig c;
    c.mode = mode;
    c.dims = dims;
    c.levels = levels;
    c.features = features;
    c.n_min = n_min;
    c.n_max = n_max;
    c.table_len = table_len;
    return c;
}

void randomize_grids(const Encoder& enc, ParamStore& store, std::uint64_t seed,
                     double scale = 1.0) {
    Rng rng(seed, "test/grids");
    for (std::size_t a = 0; a < enc.axis_count(); ++a)
        for (std::size_t l = 0; l < enc.config().levels; ++l)
            for (double& v : store.value(enc.level(a, l).block))
                v = scale * rng.uniform(-1.0, 1.0);
}

}  // namespace

TEST(EncoderConfig, GeometricLevelSchedule) {
    EXPECT_EQ(make_cfg(EncoderMode::Decomposed, 1, 1, 1, 10, 99).level_resolutions(),
              (std::vector<std::size_t>{10}));
    EXPECT_EQ(make_cfg(EncoderMode::Decomposed, 1, 4, 1, 4, 32).level_resolutions(),
              (std::vector<std::size_t>{4, 8, 16, 32}));
    // endpoints always land on n_min and n_max
    const auto res = make_cfg(EncoderMode::Decomposed, 1, 5, 1, 3, 47).level_resolutions();
    EXPECT_EQ(res.front(), 3u);
    EXPECT_EQ(res.back(), 47u);
    for (std::size_t l = 1; l < res.size(); ++l) EXPECT_GE(res[l], res[l - 1]);
}

TEST(EncoderConfig, Validation) {
    EXPECT_THROW(make_cfg(EncoderMode::Dense, 0, 1, 1, 4, 8).validate(),
                 std::invalid_argument);
    EXPECT_THROW(make_cfg(EncoderMode::Dense, 1, 0, 1, 4, 8).validate(),
                 std::invalid_argument);
    EXPECT_THROW(make_cfg(EncoderMode::Dense, 1, 1, 0, 4, 8).validate(),
                 std::invalid_argument);
    EXPECT_THROW(make_cfg(EncoderMode::Dense, 1, 1, 1, 1, 8).validate(),
                 std::invalid_argument);
    EXPECT_THROW(make_cfg(EncoderMode::Dense, 1, 1, 1, 8, 4).validate(),
                 std::invalid_argument);
}

TEST(VertexToTableIndex, DirectAndHashed) {
    GridLevel direct{/*resolution=*/9, /*grid_dims=*/1, /*rows=*/10,
                     /*hashed=*/false, /*block=*/0};
    const std::size_t v5[1] = {5};
    EXPECT_EQ(vertex_to_table_index(direct, std::span<const std::size_t>(v5, 1)), 5u);

    GridLevel hashed{/*resolution=*/9, /*grid_dims=*/3, /*rows=*/16,
                     /*hashed=*/true, /*block=*/0};
    const std::size_t v[3] = {1, 2, 3};
    const std::size_t r1 =
        vertex_to_table_index(hashed, std::span<const std::size_t>(v, 3));
    const std::size_t r2 =
        vertex_to_table_index(hashed, std::span<const std::size_t>(v, 3));
    EXPECT_EQ(r1, r2);
    // standalone scalar oracle with the pinned multipliers
    const std::uint64_t expect =
        (1ull * 1ull ^ 2ull * 2654435761ull ^ 3ull * 805459861ull) % 16ull;
    EXPECT_EQ(r1, static_cast<std::size_t>(expect));

    EXPECT_THROW(vertex_to_table_index(direct, std::span<const std::size_t>(v, 3)),
                 std::logic_error);
    const std::size_t big[1] = {10};
    EXPECT_THROW(vertex_to_table_index(direct, std::span<const std::size_t>(big, 1)),
                 std::logic_error);
}

TEST(EncodeAxis, VertexHitReturnsExactRow) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 1, 1, 2, 5, 5),
                                 store, 1);
    auto& tab = store.value(enc.level(0, 0).block);
    for (std::size_t i = 0; i < tab.size(); ++i) tab[i] = 0.25 * (i + 1);
    // t = 2/(N-1) = 0.5 lands on vertex 2 with zero fractional part
    std::vector<double> out(2);
    enc.encode_axis(store, 0, 0.5, std::span<double>(out));
    EXPECT_EQ(out[0], tab[2 * 2 + 0]);
    EXPECT_EQ(out[1], tab[2 * 2 + 1]);
}

TEST(EncodeAxis, HandInterpolationOracle) {
    // F=1, N=3, grid rows (g0,g1,g2,g3); v=0.25 -> x=0.5 -> 0.5*g0 + 0.5*g1
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 1, 1, 1, 3, 3),
                                 store, 1);
    auto& tab = store.value(enc.level(0, 0).block);
    ASSERT_EQ(tab.size(), 4u);  // N+1 vertex rows
    tab = {0.8, -0.4, 0.6, 9.9};
    std::vector<double> out(1);
    enc.encode_axis(store, 0, 0.25, std::span<double>(out));
    EXPECT_DOUBLE_EQ(out[0], 0.5 * 0.8 + 0.5 * (-0.4));
}

TEST(EncodeAxis, LevelOrderPreservedInConcat) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 1, 2, 2, 3, 6),
                                 store, 1);
    for (double& v : store.value(enc.level(0, 0).block)) v = 1.0;
    for (double& v : store.value(enc.level(0, 1).block)) v = 2.0;
    std::vector<double> out(enc.rank());
    enc.encode_axis(store, 0, 0.37, std::span<double>(out));
    ASSERT_EQ(out.size(), 4u);
    EXPECT_NEAR(out[0], 1.0, 1e-15);
    EXPECT_NEAR(out[1], 1.0, 1e-15);
    EXPECT_NEAR(out[2], 2.0, 1e-15);
    EXPECT_NEAR(out[3], 2.0, 1e-15);
}

TEST(EncodeDense, ConstantGridsGiveConstantField) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Dense, 2, 2, 2, 3, 7),
                                 store, 1);
    for (std::size_t l = 0; l < 2; ++l)
        for (double& v : store.value(enc.level(0, l).block)) v = 0.625;
    Rng rng(4, "test/points");
    std::vector<double> out(enc.rank());
    for (int k = 0; k < 50; ++k) {
        const double v[2] = {rng.uniform(), rng.uniform()};
        enc.encode_point(store, std::span<const double>(v, 2),
                         std::span<double>(out));
        // interpolation weights sum to 1, so a constant grid stays constant
        for (const double o : out) EXPECT_NEAR(o, 0.625, 1e-15);
    }
}

TEST(EncodeDense, HandOracle1D) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Dense, 1, 1, 1, 3, 3),
                                 store, 1);
    auto& tab = store.value(enc.level(0, 0).block);
    tab = {0.8, -0.4, 0.6, 9.9};
    std::vector<double> out(1);
    const double v[1] = {0.25};
    enc.encode_point(store, std::span<const double>(v, 1), std::span<double>(out));
    EXPECT_DOUBLE_EQ(out[0], 0.5 * 0.8 + 0.5 * (-0.4));
}

TEST(EncodeGridTd, D1MatchesEncodeAxisExactly) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 1, 3, 2, 4, 16),
                                 store, 7);
    randomize_grids(enc, store, 21);
    std::vector<double> a(enc.rank()), b(enc.rank());
    for (double t : {0.0, 0.123, 0.5, 0.999}) {
        enc.encode_axis(store, 0, t, std::span<double>(a));
        const double v[1] = {t};
        enc.encode_point(store, std::span<const double>(v, 1), std::span<double>(b));
        for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r], b[r]);
    }
}

TEST(EncodeGridTd, AllOnesAxesGiveOnes) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 3, 2, 1, 3, 6),
                                 store, 7);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t l = 0; l < 2; ++l)
            for (double& v : store.value(enc.level(a, l).block)) v = 1.0;
    std::vector<double> out(enc.rank());
    const double v[3] = {0.2, 0.71, 0.44};
    enc.encode_point(store, std::span<const double>(v, 3), std::span<double>(out));
    for (const double o : out) EXPECT_NEAR(o, 1.0, 1e-15);
}

TEST(EncodeGridTd, MatchesPerElementProductOracle) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 3, 2, 2, 4, 9),
                                 store, 7);
    randomize_grids(enc, store, 22);
    const std::size_t R = enc.rank();
    std::vector<double> h0(R), h1(R), h2(R), got(R);
    Rng rng(5, "test/points");
    for (int k = 0; k < 25; ++k) {
        const double v[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        enc.encode_axis(store, 0, v[0], std::span<double>(h0));
        enc.encode_axis(store, 1, v[1], std::span<double>(h1));
        enc.encode_axis(store, 2, v[2], std::span<double>(h2));
        enc.encode_point(store, std::span<const double>(v, 3), std::span<double>(got));
        for (std::size_t r = 0; r < R; ++r) {
            const double expect = h0[r] * h1[r] * h2[r];
            EXPECT_NEAR(got[r], expect, 1e-15 * std::abs(expect) + 1e-18);
        }
    }
}

TEST(Encoding, PiecewiseLinearInsideOneCell) {
    ParamStore store;
    const EncoderConfig cfg = make_cfg(EncoderMode::Decomposed, 1, 3, 2, 4, 16);
    Encoder enc = Encoder::build(cfg, store, 7);
    randomize_grids(enc, store, 23);
    // the finest level has N=16: cell width 1/15; pick points inside one cell
    // at every level
    const double v1 = 0.20, v2 = 0.23, vm = 0.5 * (v1 + v2);
    for (const std::size_t N : cfg.level_resolutions()) {
        ASSERT_EQ(static_cast<std::size_t>((N - 1) * v1),
                  static_cast<std::size_t>((N - 1) * v2));
    }
    std::vector<double> a(enc.rank()), b(enc.rank()), m(enc.rank());
    enc.encode_axis(store, 0, v1, std::span<double>(a));
    enc.encode_axis(store, 0, v2, std::span<double>(b));
    enc.encode_axis(store, 0, vm, std::span<double>(m));
    for (std::size_t r = 0; r < a.size(); ++r)
        EXPECT_NEAR(m[r], 0.5 * (a[r] + b[r]), 1e-12);
}

TEST(Encoding, ContinuousAtInteriorVertices) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 1, 2, 2, 4, 8),
                                 store, 7);
    // init-scale grids (1e-4) keep slope*delta far below the tolerance
    const double t = 2.0 / 7.0;  // vertex of the finest level (N=8)
    const double d = 1e-10;
    std::vector<double> lo(enc.rank()), hi(enc.rank());
    enc.encode_axis(store, 0, t - d, std::span<double>(lo));
    enc.encode_axis(store, 0, t + d, std::span<double>(hi));
    for (std::size_t r = 0; r < lo.size(); ++r) EXPECT_NEAR(lo[r], hi[r], 1e-12);
}

TEST(EncodeBatch, MatchesPointwiseOn5x4x3) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 3, 2, 2, 4, 9),
                                 store, 11);
    randomize_grids(enc, store, 24);
    const CoordinateGrid coords = uniform_coordinates({5, 4, 3});
    const DenseTensor batch = enc.encode_batch(store, coords);
    ASSERT_EQ(batch.shape(), (std::vector<std::size_t>{5, 4, 3, 4}));
    std::vector<double> pt(enc.rank());
    double max_diff = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 3; ++k) {
                const double v[3] = {coords.axes[0][i], coords.axes[1][j],
                                     coords.axes[2][k]};
                enc.encode_point(store, std::span<const double>(v, 3),
                                 std::span<double>(pt));
                for (std::size_t r = 0; r < pt.size(); ++r)
                    max_diff = std::max(max_diff,
                                        std::abs(batch(i, j, k, r) - pt[r]));
            }
    EXPECT_LT(max_diff, 1e-12);
}

TEST(EncodeBatch, SinglePointGrid) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 2, 2, 1, 3, 6),
                                 store, 11);
    randomize_grids(enc, store, 25);
    const CoordinateGrid coords = uniform_coordinates({1, 1});
    const DenseTensor batch = enc.encode_batch(store, coords);
    std::vector<double> pt(enc.rank());
    const double v[2] = {0.0, 0.0};
    enc.encode_point(store, std::span<const double>(v, 2), std::span<double>(pt));
    for (std::size_t r = 0; r < pt.size(); ++r) EXPECT_EQ(batch[r], pt[r]);
}

TEST(EncodeBatch, QueryCountersMatchComplexityFormulas) {
    const std::size_t L = 3;
    {
        ParamStore store;
        Encoder enc = Encoder::build(
            make_cfg(EncoderMode::Decomposed, 3, L, 1, 4, 16), store, 11);
        EncodeStats st;
        enc.encode_batch(store, uniform_coordinates({5, 4, 3}), &st);
        EXPECT_EQ(st.axis_queries, (5u + 4u + 3u) * L);  // sum, not product
        EXPECT_EQ(st.dense_queries, 0u);
        EXPECT_EQ(st.corner_fetches, (5u + 4u + 3u) * L * 2u);
    }
    {
        ParamStore store;
        Encoder enc = Encoder::build(make_cfg(EncoderMode::Dense, 3, L, 1, 4, 16),
                                     store, 11);
        EncodeStats st;
        enc.encode_batch(store, uniform_coordinates({5, 4, 3}), &st);
        EXPECT_EQ(st.dense_queries, 5u * 4u * 3u * L);
        EXPECT_EQ(st.axis_queries, 0u);
        EXPECT_EQ(st.corner_fetches, 5u * 4u * 3u * L * 8u);
    }
}

TEST(ParamCount, FormulaCases) {
    // decomposed, D=3, L=1, F=1, N=10, T large -> 3 * 11
    EXPECT_EQ(Encoder::param_count(make_cfg(EncoderMode::Decomposed, 3, 1, 1, 10, 10)),
              33u);
    // dense vs decomposed coincide at D=1
    const EncoderConfig d1a = make_cfg(EncoderMode::Dense, 1, 3, 2, 4, 16);
    EncoderConfig d1b = d1a;
    d1b.mode = EncoderMode::Decomposed;
    EXPECT_EQ(Encoder::param_count(d1a), Encoder::param_count(d1b));
    // n=100-scale configs separate by far more than 100x
    const EncoderConfig big_dense = make_cfg(EncoderMode::Dense, 3, 4, 2, 8, 64,
                                             std::size_t(1) << 22);
    EncoderConfig big_dec = big_dense;
    big_dec.mode = EncoderMode::Decomposed;
    EXPECT_GT(Encoder::param_count(big_dense),
              100 * Encoder::param_count(big_dec));
}

TEST(ParamCount, TableLenCapsRows) {
    // N=100 -> 101^3 vertices, capped by T
    const EncoderConfig cfg =
        make_cfg(EncoderMode::Dense, 3, 1, 2, 100, 100, 4096);
    EXPECT_EQ(Encoder::param_count(cfg), 2u * 4096u);
    ParamStore store;
    Encoder enc = Encoder::build(cfg, store, 1);
    EXPECT_TRUE(enc.level(0, 0).hashed);
    EXPECT_EQ(enc.level(0, 0).rows, 4096u);
}

TEST(Encoding, OutOfDomainCoordinatesAreErrors) {
    ParamStore store;
    Encoder enc = Encoder::build(make_cfg(EncoderMode::Decomposed, 2, 2, 1, 3, 6),
                                 store, 11);
    std::vector<double> out(enc.rank());
    const double bad1[2] = {1.0, 0.5};
    const double bad2[2] = {0.5, -0.1};
    EXPECT_THROW(enc.encode_point(store, std::span<const double>(bad1, 2),
                                  std::span<double>(out)),
                 std::domain_error);
    EXPECT_THROW(enc.encode_point(store, std::span<const double>(bad2, 2),
                                  std::span<double>(out)),
                 std::domain_error);
    EXPECT_THROW(enc.encode_axis(store, 0, 1.0, std::span<double>(out)),
                 std::domain_error);
}

TEST(Encoding, D1DenseAndDecomposedShareInitAndOutputs) {
    const EncoderConfig base = make_cfg(EncoderMode::Decomposed, 1, 3, 2, 4, 16);
    EncoderConfig dense_cfg = base;
    dense_cfg.mode = EncoderMode::Dense;
    ParamStore s1, s2;
    Encoder e1 = Encoder::build(base, s1, 99);
    Encoder e2 = Encoder::build(dense_cfg, s2, 99);
    // identical init draws
    for (std::size_t l = 0; l < base.levels; ++l)
        EXPECT_EQ(s1.value(e1.level(0, l).block), s2.value(e2.level(0, l).block));
    std::vector<double> a(e1.rank()), b(e2.rank());
    for (double t : {0.0, 0.37, 0.91}) {
        const double v[1] = {t};
        e1.encode_point(s1, std::span<const double>(v, 1), std::span<double>(a));
        e2.encode_point(s2, std::span<const double>(v, 1), std::span<double>(b));
        for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r], b[r]);
    }
}

TEST(Encoding, GridInitSmallAndDeterministic) {
    ParamStore s1, s2;
    const EncoderConfig cfg = make_cfg(EncoderMode::Decomposed, 2, 2, 2, 4, 8);
    Encoder e1 = Encoder::build(cfg, s1, 123);
    Encoder e2 = Encoder::build(cfg, s2, 123);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t l = 0; l < 2; ++l) {
            const auto& v1 = s1.value(e1.level(a, l).block);
            EXPECT_EQ(v1, s2.value(e2.level(a, l).block));
            for (const double v : v1) EXPECT_LE(std::abs(v), 1e-4);
        }
}

TEST(Encoding, CheckpointRoundTripBitExact) {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "gridtd_enc.ckpt").string();
    ParamStore store;
    const EncoderConfig cfg = make_cfg(EncoderMode::Decomposed, 2, 2, 2, 4, 8);
    Encoder enc = Encoder::build(cfg, store, 5);
    randomize_grids(enc, store, 26);
    ParamStore saved = store;
    save_encoder(path, enc, store);
    randomize_grids(enc, store, 27);
    load_encoder(path, enc, store);
    for (std::size_t a = 0; a < enc.axis_count(); ++a)
        for (std::size_t l = 0; l < cfg.levels; ++l)
            EXPECT_EQ(store.value(enc.level(a, l).block),
                      saved.value(enc.level(a, l).block));
    // mismatched config is rejected
    ParamStore other_store;
    Encoder other = Encoder::build(make_cfg(EncoderMode::Decomposed, 2, 3, 2, 4, 8),
                                   other_store, 5);
    EXPECT_THROW(load_encoder(path, other, other_store), std::runtime_error);
    std::remove(path.c_str());
}
