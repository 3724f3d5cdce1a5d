#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gridtd/params.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

// Bias-corrected Adam with per-block-kind step sizes (grid tables train an
// order of magnitude faster than the MLP/affine blocks, the usual convention
// for hash-grid models).
struct AdamConfig {
    double lr_grid = 1e-2;
    double lr_mlp = 1e-3;
    double lr_affine = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    double lr_for(ParamKind k) const {
        switch (k) {
            case ParamKind::Grid: return lr_grid;
            case ParamKind::Mlp: return lr_mlp;
            case ParamKind::Affine: return lr_affine;
        }
        return lr_mlp;
    }

    void validate() const {
        require(lr_grid > 0.0 && lr_mlp > 0.0 && lr_affine > 0.0,
                "Adam step sizes must be positive");
        require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0,1)");
        require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0,1)");
        require(eps > 0.0, "Adam eps must be positive");
    }
};

class AdamState {
public:
    AdamState(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        m_.resize(store.block_count());
        v_.resize(store.block_count());
        for (std::size_t b = 0; b < store.block_count(); ++b) {
            m_[b].assign(store.block(b).size(), 0.0);
            v_[b].assign(store.block(b).size(), 0.0);
        }
    }

    std::size_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // One update over every block; gradients are zeroed afterwards.  A step
    // where every gradient is exactly zero decays the moments but leaves the
    // parameters untouched.
    void step(ParamStore& store) {
        if (store.block_count() != m_.size())
            throw std::logic_error("Adam state shaped for a different store");
        ++t_;
        bool any_grad = false;
        for (std::size_t b = 0; b < store.block_count() && !any_grad; ++b)
            for (const double g : store.grad(b))
                if (g != 0.0) {
                    any_grad = true;
                    break;
                }
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t b = 0; b < store.block_count(); ++b) {
            ParamBlock& blk = store.block(b);
            const double lr = cfg_.lr_for(blk.kind);
            double* m = m_[b].data();
            double* v = v_[b].data();
            for (std::size_t i = 0; i < blk.size(); ++i) {
                const double g = blk.grad[i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
                if (!any_grad) continue;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                blk.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            for (double& g : blk.grad) g = 0.0;
        }
    }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace gridtd
