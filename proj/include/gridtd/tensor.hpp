#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridtd {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Dense D-dimensional array of doubles, row-major (last index fastest).
// The universal value carrier for signals, masks, measurements and encodings.
class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    DenseTensor(std::vector<std::size_t> shape, double fill)
        : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

    DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        require(data_.size() == checked_numel(shape_),
                "tensor data length does not match shape");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t order() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t d) const { return shape_.at(d); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::size_t flat_index(std::span<const std::size_t> idx) const {
        if (idx.size() != shape_.size())
            throw std::invalid_argument("index order does not match tensor order");
        std::size_t off = 0;
        for (std::size_t d = 0; d < shape_.size(); ++d) {
            if (idx[d] >= shape_[d]) throw std::out_of_range("tensor index out of range");
            off = off * shape_[d] + idx[d];
        }
        return off;
    }

    double& at(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }
    double at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }

    template <typename... Ix>
    double& operator()(Ix... ix) {
        const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
        return data_[flat_index(std::span<const std::size_t>(idx, sizeof...(ix)))];
    }

    template <typename... Ix>
    double operator()(Ix... ix) const {
        const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
        return data_[flat_index(std::span<const std::size_t>(idx, sizeof...(ix)))];
    }

    bool same_shape(const DenseTensor& o) const { return shape_ == o.shape_; }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        require(!shape.empty(), "tensor order must be >= 1");
        std::size_t n = 1;
        for (const std::size_t s : shape) {
            require(s >= 1, "tensor dimensions must be >= 1");
            n *= s;
        }
        return n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline void check_same_shape(const DenseTensor& a, const DenseTensor& b,
                             const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

inline double dot(const DenseTensor& a, const DenseTensor& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
    return s;
}

inline double fro_norm(const DenseTensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// y += alpha * x
inline void axpy(DenseTensor& y, double alpha, const DenseTensor& x) {
    check_same_shape(y, x, "axpy");
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] += alpha * x[i];
}

inline double norm_of_diff(const DenseTensor& a, const DenseTensor& b) {
    check_same_shape(a, b, "norm_of_diff");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Multi-index iteration helper: advances idx through a row-major scan of
// `shape`; returns false after the last index.
inline bool next_index(std::vector<std::size_t>& idx,
                       const std::vector<std::size_t>& shape) {
    for (std::size_t d = shape.size(); d-- > 0;) {
        if (++idx[d] < shape[d]) return true;
        idx[d] = 0;
    }
    return false;
}

// Per-axis sampling positions, axis d holding n_d strictly increasing reals
// in [0,1).  The Cartesian product of the axes addresses a full tensor.
struct CoordinateGrid {
    std::vector<std::vector<double>> axes;

    std::size_t order() const { return axes.size(); }

    std::vector<std::size_t> shape() const {
        std::vector<std::size_t> s(axes.size());
        for (std::size_t d = 0; d < axes.size(); ++d) s[d] = axes[d].size();
        return s;
    }

    void validate() const {
        require(!axes.empty(), "coordinate grid needs at least one axis");
        for (const auto& ax : axes) {
            require(!ax.empty(), "coordinate axis must be nonempty");
            for (std::size_t i = 0; i < ax.size(); ++i) {
                if (!(ax[i] >= 0.0 && ax[i] < 1.0))
                    throw std::domain_error("coordinate outside [0,1)");
                if (i > 0 && !(ax[i] > ax[i - 1]))
                    throw std::invalid_argument("coordinate axis must be strictly increasing");
            }
        }
    }
};

// Axis d = (0, 1/n_d, ..., (n_d-1)/n_d): the canonical sampling lattice of a
// tensor with the given shape.
inline CoordinateGrid uniform_coordinates(const std::vector<std::size_t>& shape) {
    require(!shape.empty(), "shape must have at least one axis");
    CoordinateGrid g;
    g.axes.resize(shape.size());
    for (std::size_t d = 0; d < shape.size(); ++d) {
        require(shape[d] >= 1, "shape entries must be >= 1");
        g.axes[d].resize(shape[d]);
        for (std::size_t i = 0; i < shape[d]; ++i)
            g.axes[d][i] = static_cast<double>(i) / static_cast<double>(shape[d]);
    }
    return g;
}

// entry [i_1,...,i_D] = prod_d vs[d][i_d]
inline DenseTensor outer_product(const std::vector<std::vector<double>>& vs) {
    require(!vs.empty(), "outer_product needs at least one vector");
    std::vector<std::size_t> shape(vs.size());
    for (std::size_t d = 0; d < vs.size(); ++d) {
        require(!vs[d].empty(), "outer_product vectors must be nonempty");
        shape[d] = vs[d].size();
    }
    DenseTensor out(shape);
    std::vector<std::size_t> idx(shape.size(), 0);
    std::size_t flat = 0;
    do {
        double p = 1.0;
        for (std::size_t d = 0; d < vs.size(); ++d) p *= vs[d][idx[d]];
        out[flat++] = p;
    } while (next_index(idx, shape));
    return out;
}

// sum_{r} outer_product(factors[r]); factors[r][d] is the d-th factor vector
// of the r-th rank-1 term.
inline DenseTensor cp_assemble(
    const std::vector<std::vector<std::vector<double>>>& factors) {
    require(!factors.empty(), "cp_assemble needs at least one rank term");
    const std::size_t d_count = factors[0].size();
    require(d_count >= 1, "cp_assemble factors must span at least one axis");
    std::vector<std::size_t> shape(d_count);
    for (std::size_t d = 0; d < d_count; ++d) {
        require(!factors[0][d].empty(), "cp_assemble factor vectors must be nonempty");
        shape[d] = factors[0][d].size();
    }
    for (const auto& term : factors) {
        require(term.size() == d_count, "cp_assemble rank terms must share axis count");
        for (std::size_t d = 0; d < d_count; ++d)
            require(term[d].size() == shape[d],
                    "cp_assemble factor lengths must agree across rank terms");
    }
    DenseTensor out(shape);
    for (const auto& term : factors) {
        std::vector<std::size_t> idx(shape.size(), 0);
        std::size_t flat = 0;
        do {
            double p = 1.0;
            for (std::size_t d = 0; d < d_count; ++d) p *= term[d][idx[d]];
            out[flat++] += p;
        } while (next_index(idx, shape));
    }
    return out;
}

inline std::vector<double> hadamard(const std::vector<double>& a,
                                    const std::vector<double>& b) {
    require(a.size() == b.size(), "hadamard: length mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

inline std::vector<double> concat(const std::vector<double>& a,
                                  const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace gridtd
