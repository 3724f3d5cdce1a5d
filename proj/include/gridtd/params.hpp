#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridtd {

// Block categories; the optimizer keys per-block step sizes off this.
enum class ParamKind { Grid, Mlp, Affine };

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    ParamKind kind = ParamKind::Mlp;
    std::vector<double> value;
    std::vector<double> grad;  // same length as value, zeroed between steps

    std::size_t size() const { return value.size(); }
};

// Flat registry of every learnable block (grid tables, MLP weights, affine
// scalars, translation-INR weights) with paired gradient buffers.  Blocks are
// added once at model build time; ids are stable insertion indices.
class ParamStore {
public:
    std::size_t add(std::string name, std::vector<std::size_t> shape, ParamKind kind) {
        if (name.empty()) throw std::invalid_argument("parameter block needs a name");
        for (const auto& b : blocks_)
            if (b.name == name)
                throw std::invalid_argument("duplicate parameter block: " + name);
        std::size_t n = 1;
        for (const std::size_t s : shape) {
            if (s == 0) throw std::invalid_argument("parameter block dims must be >= 1");
            n *= s;
        }
        if (shape.empty() || n == 0)
            throw std::invalid_argument("parameter block must hold at least one value");
        ParamBlock b;
        b.name = std::move(name);
        b.shape = std::move(shape);
        b.kind = kind;
        b.value.assign(n, 0.0);
        b.grad.assign(n, 0.0);
        blocks_.push_back(std::move(b));
        return blocks_.size() - 1;
    }

    std::size_t block_count() const { return blocks_.size(); }

    ParamBlock& block(std::size_t id) { return blocks_.at(id); }
    const ParamBlock& block(std::size_t id) const { return blocks_.at(id); }

    std::vector<double>& value(std::size_t id) { return blocks_.at(id).value; }
    const std::vector<double>& value(std::size_t id) const { return blocks_.at(id).value; }
    std::vector<double>& grad(std::size_t id) { return blocks_.at(id).grad; }
    const std::vector<double>& grad(std::size_t id) const { return blocks_.at(id).grad; }

    bool has(std::string_view name) const {
        for (const auto& b : blocks_)
            if (b.name == name) return true;
        return false;
    }

    std::size_t find(std::string_view name) const {
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            if (blocks_[i].name == name) return i;
        throw std::invalid_argument("no parameter block named " + std::string(name));
    }

    void zero_grads() {
        for (auto& b : blocks_)
            for (double& g : b.grad) g = 0.0;
    }

    std::size_t total_params() const {
        std::size_t n = 0;
        for (const auto& b : blocks_) n += b.size();
        return n;
    }

    std::size_t total_params(ParamKind kind) const {
        std::size_t n = 0;
        for (const auto& b : blocks_)
            if (b.kind == kind) n += b.size();
        return n;
    }

private:
    std::vector<ParamBlock> blocks_;
};

}  // namespace gridtd
