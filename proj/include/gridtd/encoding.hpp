#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "gridtd/io.hpp"
#include "gridtd/params.hpp"
#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

enum class EncoderMode { Dense, Decomposed };

inline const char* mode_name(EncoderMode m) {
    return m == EncoderMode::Dense ? "dense" : "decomposed";
}

// Multi-resolution encoder configuration.  Dense mode stores one D-dim grid
// per level (the InstantNGP-style baseline); decomposed mode stores D
// independent 1D grids per level and fuses per-axis encodings by elementwise
// product.  Output width is R = L*F in both modes.
struct EncoderConfig {
    EncoderMode mode = EncoderMode::Decomposed;
    std::size_t dims = 3;      // D
    std::size_t levels = 4;    // L
    std::size_t features = 2;  // F
    std::size_t n_min = 4;
    std::size_t n_max = 32;
    std::size_t table_len = std::size_t(1) << 19;  // T

    std::size_t rank() const { return levels * features; }

    void validate() const {
        require(dims >= 1 && dims <= 8, "encoder dims must be in [1,8]");
        require(levels >= 1 && levels <= 99, "encoder levels must be in [1,99]");
        require(features >= 1, "encoder features must be >= 1");
        require(n_min >= 2, "encoder n_min must be >= 2");
        require(n_max >= n_min, "encoder n_max must be >= n_min");
        require(table_len >= 1, "encoder table_len must be >= 1");
    }

    // Geometric schedule N_l = round(n_min * b^(l-1)), b = (n_max/n_min)^(1/(L-1)).
    std::vector<std::size_t> level_resolutions() const {
        std::vector<std::size_t> res(levels);
        if (levels == 1) {
            res[0] = n_min;
            return res;
        }
        const double b = std::pow(static_cast<double>(n_max) / static_cast<double>(n_min),
                                  1.0 / static_cast<double>(levels - 1));
        for (std::size_t l = 0; l < levels; ++l)
            res[l] = static_cast<std::size_t>(
                std::llround(static_cast<double>(n_min) * std::pow(b, static_cast<double>(l))));
        return res;
    }

    bool operator==(const EncoderConfig&) const = default;
};

// One stored feature table: level l of either a 1D axis grid (decomposed) or
// the full D-dim grid (dense).  A grid of resolution N keeps N+1 vertex rows
// per axis; when the vertex count exceeds the table length the rows are
// shared through a fixed spatial hash.
struct GridLevel {
    std::size_t resolution = 0;  // N_l
    std::size_t grid_dims = 0;   // 1 (decomposed) or D (dense)
    std::size_t rows = 0;        // min((N_l+1)^grid_dims, T)
    bool hashed = false;
    std::size_t block = 0;       // ParamStore block id, shape rows x F
};

// Fixed odd multipliers for the vertex hash; the first three follow the
// InstantNGP convention, the rest extend it for higher input orders.
inline constexpr std::uint64_t kHashMultipliers[8] = {
    1ull,          2654435761ull, 805459861ull,  3674653429ull,
    2097192037ull, 1434869437ull, 2165219737ull, 2654435789ull};

// Deterministic vertex -> table row map: row-major when the level is stored
// directly, XOR-of-products hash modulo T otherwise.
inline std::size_t vertex_to_table_index(const GridLevel& level,
                                         std::span<const std::size_t> vertex) {
    if (vertex.size() != level.grid_dims)
        throw std::logic_error("vertex order does not match grid level");
    if (!level.hashed) {
        std::size_t off = 0;
        for (std::size_t d = 0; d < vertex.size(); ++d) {
            if (vertex[d] > level.resolution)
                throw std::logic_error("grid vertex out of bounds");
            off = off * (level.resolution + 1) + vertex[d];
        }
        return off;
    }
    std::uint64_t h = 0;
    for (std::size_t d = 0; d < vertex.size(); ++d) {
        if (vertex[d] > level.resolution)
            throw std::logic_error("grid vertex out of bounds");
        h ^= static_cast<std::uint64_t>(vertex[d]) * kHashMultipliers[d];
    }
    return static_cast<std::size_t>(h % level.rows);
}

// Operation counters for the complexity comparisons: an axis query is one 1D
// interpolation (2 corner fetches), a dense query one D-dim interpolation
// (2^D corner fetches).
struct EncodeStats {
    std::uint64_t axis_queries = 0;
    std::uint64_t dense_queries = 0;
    std::uint64_t corner_fetches = 0;
};

class Encoder {
public:
    // Registers all grid tables in `store` and initializes them U[-1e-4,1e-4]
    // from per-(level,axis) substreams of `seed`.  Dense mode draws from the
    // axis-0 streams so a 1D dense encoder is bit-identical to decomposed.
    static Encoder build(const EncoderConfig& cfg, ParamStore& store,
                         std::uint64_t seed) {
        cfg.validate();
        Encoder enc;
        enc.cfg_ = cfg;
        const std::vector<std::size_t> res = cfg.level_resolutions();
        const std::size_t axes = cfg.mode == EncoderMode::Decomposed ? cfg.dims : 1;
        enc.levels_.resize(axes);
        for (std::size_t a = 0; a < axes; ++a) {
            enc.levels_[a].resize(cfg.levels);
            for (std::size_t l = 0; l < cfg.levels; ++l) {
                GridLevel& gl = enc.levels_[a][l];
                gl.resolution = res[l];
                gl.grid_dims = cfg.mode == EncoderMode::Decomposed ? 1 : cfg.dims;
                double vertices = 1.0;
                for (std::size_t d = 0; d < gl.grid_dims; ++d)
                    vertices *= static_cast<double>(res[l] + 1);
                gl.hashed = vertices > static_cast<double>(cfg.table_len);
                gl.rows = gl.hashed ? cfg.table_len
                                    : static_cast<std::size_t>(vertices);
                char name[64];
                if (cfg.mode == EncoderMode::Decomposed)
                    std::snprintf(name, sizeof name, "grid/a%zu/l%02zu", a, l);
                else
                    std::snprintf(name, sizeof name, "grid/dense/l%02zu", l);
                gl.block = store.add(name, {gl.rows, cfg.features}, ParamKind::Grid);
                char stream[64];
                std::snprintf(stream, sizeof stream, "init/grid/l%02zu/a%zu", l, a);
                Rng rng(seed, stream);
                for (double& v : store.value(gl.block)) v = rng.uniform(-1e-4, 1e-4);
            }
        }
        return enc;
    }

    const EncoderConfig& config() const { return cfg_; }
    std::size_t rank() const { return cfg_.rank(); }
    std::size_t axis_count() const { return levels_.size(); }
    const GridLevel& level(std::size_t axis, std::size_t l) const {
        return levels_.at(axis).at(l);
    }

    // ---- 1D per-axis encoding (decomposed mode) ---------------------------

    // H_d(t): two-point linear interpolation per level, levels concatenated.
    void encode_axis(const ParamStore& store, std::size_t axis, double t,
                     std::span<double> out, EncodeStats* stats = nullptr) const {
        check_decomposed("encode_axis");
        check_coord(t);
        const std::size_t F = cfg_.features;
        for (std::size_t l = 0; l < cfg_.levels; ++l) {
            const GridLevel& gl = levels_.at(axis)[l];
            const double x = static_cast<double>(gl.resolution - 1) * t;
            const std::size_t base = static_cast<std::size_t>(x);
            const double u = x - static_cast<double>(base);
            const std::size_t r0 = row_1d(gl, base);
            const std::size_t r1 = row_1d(gl, base + 1);
            const double* tab = store.value(gl.block).data();
            for (std::size_t f = 0; f < F; ++f)
                out[l * F + f] = (1.0 - u) * tab[r0 * F + f] + u * tab[r1 * F + f];
            if (stats) {
                stats->axis_queries += 1;
                stats->corner_fetches += 2;
            }
        }
    }

    // Scatters d(loss)/d(encode_axis output) back into the grid tables.
    void encode_axis_backward(ParamStore& store, std::size_t axis, double t,
                              std::span<const double> dout) const {
        check_decomposed("encode_axis_backward");
        check_coord(t);
        const std::size_t F = cfg_.features;
        for (std::size_t l = 0; l < cfg_.levels; ++l) {
            const GridLevel& gl = levels_.at(axis)[l];
            const double x = static_cast<double>(gl.resolution - 1) * t;
            const std::size_t base = static_cast<std::size_t>(x);
            const double u = x - static_cast<double>(base);
            const std::size_t r0 = row_1d(gl, base);
            const std::size_t r1 = row_1d(gl, base + 1);
            double* g = store.grad(gl.block).data();
            for (std::size_t f = 0; f < F; ++f) {
                g[r0 * F + f] += (1.0 - u) * dout[l * F + f];
                g[r1 * F + f] += u * dout[l * F + f];
            }
        }
    }

    // n x R matrix of axis encodings at each coordinate (rows follow coords).
    DenseTensor encode_axis_table(const ParamStore& store, std::size_t axis,
                                  const std::vector<double>& coords,
                                  EncodeStats* stats = nullptr) const {
        DenseTensor out({coords.size(), rank()});
        for (std::size_t i = 0; i < coords.size(); ++i)
            encode_axis(store, axis, coords[i],
                        std::span<double>(out.data() + i * rank(), rank()), stats);
        return out;
    }

    // ---- pointwise encoding (both modes) ----------------------------------

    // Dense: per level, 2^D-corner multilinear interpolation, levels
    // concatenated.  Decomposed: elementwise product of the D per-axis
    // encodings.
    void encode_point(const ParamStore& store, std::span<const double> v,
                      std::span<double> out, EncodeStats* stats = nullptr) const {
        if (v.size() != cfg_.dims)
            throw std::invalid_argument("encode_point: coordinate order mismatch");
        if (cfg_.mode == EncoderMode::Decomposed) {
            std::vector<double> axis_out(rank());
            encode_axis(store, 0, v[0], out, stats);
            for (std::size_t d = 1; d < cfg_.dims; ++d) {
                encode_axis(store, d, v[d], axis_out, stats);
                for (std::size_t r = 0; r < rank(); ++r) out[r] *= axis_out[r];
            }
            return;
        }
        for (const double c : v) check_coord(c);
        const std::size_t D = cfg_.dims;
        const std::size_t F = cfg_.features;
        std::size_t base[8];
        double u[8];
        std::size_t vertex[8];
        for (std::size_t l = 0; l < cfg_.levels; ++l) {
            const GridLevel& gl = levels_[0][l];
            for (std::size_t d = 0; d < D; ++d) {
                const double x = static_cast<double>(gl.resolution - 1) * v[d];
                base[d] = static_cast<std::size_t>(x);
                u[d] = x - static_cast<double>(base[d]);
            }
            for (std::size_t f = 0; f < F; ++f) out[l * F + f] = 0.0;
            const double* tab = store.value(gl.block).data();
            for (std::size_t corner = 0; corner < (std::size_t(1) << D); ++corner) {
                double w = 1.0;
                for (std::size_t d = 0; d < D; ++d) {
                    const bool hi = (corner >> d) & 1;
                    w *= hi ? u[d] : (1.0 - u[d]);
                    vertex[d] = base[d] + (hi ? 1 : 0);
                }
                const std::size_t row =
                    vertex_to_table_index(gl, std::span<const std::size_t>(vertex, D));
                for (std::size_t f = 0; f < F; ++f)
                    out[l * F + f] += w * tab[row * F + f];
            }
            if (stats) {
                stats->dense_queries += 1;
                stats->corner_fetches += std::size_t(1) << D;
            }
        }
    }

    // Dense-mode scatter of d(loss)/d(encoding) into the level tables.
    void encode_point_backward(ParamStore& store, std::span<const double> v,
                               std::span<const double> dout) const {
        if (cfg_.mode != EncoderMode::Dense)
            throw std::logic_error("encode_point_backward: dense mode only");
        const std::size_t D = cfg_.dims;
        const std::size_t F = cfg_.features;
        std::size_t base[8];
        double u[8];
        std::size_t vertex[8];
        for (std::size_t l = 0; l < cfg_.levels; ++l) {
            const GridLevel& gl = levels_[0][l];
            for (std::size_t d = 0; d < D; ++d) {
                const double x = static_cast<double>(gl.resolution - 1) * v[d];
                base[d] = static_cast<std::size_t>(x);
                u[d] = x - static_cast<double>(base[d]);
            }
            double* g = store.grad(gl.block).data();
            for (std::size_t corner = 0; corner < (std::size_t(1) << D); ++corner) {
                double w = 1.0;
                for (std::size_t d = 0; d < D; ++d) {
                    const bool hi = (corner >> d) & 1;
                    w *= hi ? u[d] : (1.0 - u[d]);
                    vertex[d] = base[d] + (hi ? 1 : 0);
                }
                const std::size_t row =
                    vertex_to_table_index(gl, std::span<const std::size_t>(vertex, D));
                for (std::size_t f = 0; f < F; ++f)
                    g[row * F + f] += w * dout[l * F + f];
            }
        }
    }

    std::vector<double> encode_point(const ParamStore& store,
                                     std::span<const double> v,
                                     EncodeStats* stats = nullptr) const {
        std::vector<double> out(rank());
        encode_point(store, v, std::span<double>(out), stats);
        return out;
    }

    // ---- batch encoding over a coordinate grid ----------------------------

    // Output shape (n_1,...,n_D,R).  Decomposed mode evaluates only sum(n_d)
    // 1D encodings and fuses them by broadcasted products; dense mode pays the
    // full prod(n_d) D-dim interpolations.
    DenseTensor encode_batch(const ParamStore& store, const CoordinateGrid& coords,
                             EncodeStats* stats = nullptr) const {
        coords.validate();
        if (coords.order() != cfg_.dims)
            throw std::invalid_argument("encode_batch: coordinate order mismatch");
        std::vector<std::size_t> shape = coords.shape();
        const std::size_t R = rank();
        shape.push_back(R);
        DenseTensor out(shape);
        if (cfg_.mode == EncoderMode::Decomposed) {
            std::vector<DenseTensor> tables;
            tables.reserve(cfg_.dims);
            for (std::size_t d = 0; d < cfg_.dims; ++d)
                tables.push_back(encode_axis_table(store, d, coords.axes[d], stats));
            fuse_tables(tables, coords.shape(), out);
            return out;
        }
        std::vector<std::size_t> idx(cfg_.dims, 0);
        std::vector<double> v(cfg_.dims);
        std::size_t flat = 0;
        const std::vector<std::size_t> point_shape = coords.shape();
        do {
            for (std::size_t d = 0; d < cfg_.dims; ++d) v[d] = coords.axes[d][idx[d]];
            encode_point(store, v, std::span<double>(out.data() + flat * R, R), stats);
            ++flat;
        } while (next_index(idx, point_shape));
        return out;
    }

    // Fused rank vectors H[i_1..i_D,:] = hadamard_d tables[d].row(i_d).
    static void fuse_tables(const std::vector<DenseTensor>& tables,
                            const std::vector<std::size_t>& point_shape,
                            DenseTensor& out) {
        const std::size_t D = tables.size();
        const std::size_t R = tables[0].dim(1);
        std::vector<std::size_t> idx(D, 0);
        std::size_t flat = 0;
        do {
            double* o = out.data() + flat * R;
            const double* t0 = tables[0].data() + idx[0] * R;
            for (std::size_t r = 0; r < R; ++r) o[r] = t0[r];
            for (std::size_t d = 1; d < D; ++d) {
                const double* td = tables[d].data() + idx[d] * R;
                for (std::size_t r = 0; r < R; ++r) o[r] *= td[r];
            }
            ++flat;
        } while (next_index(idx, point_shape));
    }

    // Learnable grid entries: dense sum_l F*min((N_l+1)^D,T), decomposed
    // D * sum_l F*min(N_l+1,T).
    static std::size_t param_count(const EncoderConfig& cfg) {
        cfg.validate();
        const std::vector<std::size_t> res = cfg.level_resolutions();
        std::size_t n = 0;
        for (const std::size_t N : res) {
            double vertices = 1.0;
            const std::size_t gd = cfg.mode == EncoderMode::Decomposed ? 1 : cfg.dims;
            for (std::size_t d = 0; d < gd; ++d)
                vertices *= static_cast<double>(N + 1);
            const double rows = std::min(vertices, static_cast<double>(cfg.table_len));
            n += cfg.features * static_cast<std::size_t>(rows);
        }
        return cfg.mode == EncoderMode::Decomposed ? cfg.dims * n : n;
    }

private:
    static void check_coord(double t) {
        if (!(t >= 0.0 && t < 1.0))
            throw std::domain_error("encoder coordinate outside [0,1)");
    }

    void check_decomposed(const char* op) const {
        if (cfg_.mode != EncoderMode::Decomposed)
            throw std::logic_error(std::string(op) + ": decomposed mode only");
    }

    static std::size_t row_1d(const GridLevel& gl, std::size_t vertex) {
        const std::size_t v[1] = {vertex};
        return vertex_to_table_index(gl, std::span<const std::size_t>(v, 1));
    }

    EncoderConfig cfg_;
    std::vector<std::vector<GridLevel>> levels_;  // [axis][level]; dense uses axis 0
};

// ---- encoder checkpoints ----------------------------------------------------
// Fixed-width little-endian config header followed by each level table's raw
// row-major float64 payload (axis-major, then level order).

inline void save_encoder(const std::string& path, const Encoder& enc,
                         const ParamStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const EncoderConfig& cfg = enc.config();
    put_u32(os, cfg.mode == EncoderMode::Dense ? 0u : 1u);
    put_u32(os, static_cast<std::uint32_t>(cfg.dims));
    put_u32(os, static_cast<std::uint32_t>(cfg.levels));
    put_u32(os, static_cast<std::uint32_t>(cfg.features));
    put_u64(os, cfg.n_min);
    put_u64(os, cfg.n_max);
    put_u64(os, cfg.table_len);
    for (std::size_t a = 0; a < enc.axis_count(); ++a)
        for (std::size_t l = 0; l < cfg.levels; ++l)
            for (const double v : store.value(enc.level(a, l).block)) put_f64(os, v);
    if (!os) throw std::runtime_error("encoder checkpoint write failed");
}

inline EncoderConfig read_encoder_config(std::istream& is) {
    EncoderConfig cfg;
    cfg.mode = get_u32(is) == 0 ? EncoderMode::Dense : EncoderMode::Decomposed;
    cfg.dims = get_u32(is);
    cfg.levels = get_u32(is);
    cfg.features = get_u32(is);
    cfg.n_min = static_cast<std::size_t>(get_u64(is));
    cfg.n_max = static_cast<std::size_t>(get_u64(is));
    cfg.table_len = static_cast<std::size_t>(get_u64(is));
    cfg.validate();
    return cfg;
}

// Restores table values into an encoder built from the same config.
inline void load_encoder(const std::string& path, const Encoder& enc,
                         ParamStore& store) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    const EncoderConfig cfg = read_encoder_config(is);
    if (!(cfg == enc.config()))
        throw std::runtime_error("encoder checkpoint config mismatch");
    for (std::size_t a = 0; a < enc.axis_count(); ++a)
        for (std::size_t l = 0; l < cfg.levels; ++l)
            for (double& v : store.value(enc.level(a, l).block)) v = get_f64(is);
}

}  // namespace gridtd
