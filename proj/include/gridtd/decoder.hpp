#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridtd/encoding.hpp"
#include "gridtd/params.hpp"
#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

inline double ramp(double x) { return x > 0.0 ? x : 0.0; }

// Two-layer scalar-output MLP applied over the rank dimension:
// y = W2 * ramp(W1 h + b).  The ramp is 1-Lipschitz, which the smoothness
// bound below relies on.
struct MlpDecoder {
    std::size_t in_width = 0;      // R
    std::size_t hidden_width = 0;  // n1
    std::size_t w1 = 0, b1 = 0, w2 = 0;  // block ids: (n1 x R), (n1), (1 x n1)

    static MlpDecoder build(ParamStore& store, const std::string& prefix,
                            std::size_t in, std::size_t hidden, std::uint64_t seed) {
        require(in >= 1 && hidden >= 1, "mlp widths must be >= 1");
        MlpDecoder m;
        m.in_width = in;
        m.hidden_width = hidden;
        m.w1 = store.add(prefix + "/w1", {hidden, in}, ParamKind::Mlp);
        m.b1 = store.add(prefix + "/b1", {hidden}, ParamKind::Mlp);
        m.w2 = store.add(prefix + "/w2", {1, hidden}, ParamKind::Mlp);
        init_block(store, m.w1, in, seed, "init/" + prefix + "/w1");
        init_block(store, m.b1, in, seed, "init/" + prefix + "/b1");
        init_block(store, m.w2, hidden, seed, "init/" + prefix + "/w2");
        return m;
    }

    // hidden_out receives the post-activation hidden vector (the reverse pass
    // needs it; activity > 0 doubles as the ramp derivative mask).
    double forward(const ParamStore& store, std::span<const double> h,
                   std::span<double> hidden_out) const {
        const double* w1v = store.value(w1).data();
        const double* b1v = store.value(b1).data();
        const double* w2v = store.value(w2).data();
        double y = 0.0;
        for (std::size_t k = 0; k < hidden_width; ++k) {
            double a = b1v[k];
            const double* row = w1v + k * in_width;
            for (std::size_t r = 0; r < in_width; ++r) a += row[r] * h[r];
            const double act = ramp(a);
            hidden_out[k] = act;
            y += w2v[k] * act;
        }
        return y;
    }

    // Accumulates parameter gradients for one sample and adds dL/dh into
    // dh_accum (caller zeroes it when accumulation is not wanted).
    void backward(ParamStore& store, std::span<const double> h,
                  std::span<const double> hidden, double dy,
                  std::span<double> dh_accum) const {
        const double* w1v = store.value(w1).data();
        const double* w2v = store.value(w2).data();
        double* gw1 = store.grad(w1).data();
        double* gb1 = store.grad(b1).data();
        double* gw2 = store.grad(w2).data();
        for (std::size_t k = 0; k < hidden_width; ++k) {
            gw2[k] += dy * hidden[k];
            if (hidden[k] <= 0.0) continue;  // ramp derivative 0 (also at the kink)
            const double da = dy * w2v[k];
            gb1[k] += da;
            const double* row = w1v + k * in_width;
            double* grow = gw1 + k * in_width;
            for (std::size_t r = 0; r < in_width; ++r) {
                grow[r] += da * h[r];
                dh_accum[r] += da * row[r];
            }
        }
    }

    static void init_block(ParamStore& store, std::size_t id, std::size_t fan_in,
                           std::uint64_t seed, const std::string& stream) {
        Rng rng(seed, stream);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : store.value(id)) v = rng.uniform(-s, s);
    }
};

// Applies the MLP independently at every leading multi-index of H (shape
// (n_1,...,n_D,R)), producing an (n_1,...,n_D) tensor.
inline DenseTensor decode(const MlpDecoder& mlp, const ParamStore& store,
                          const DenseTensor& H) {
    require(H.order() >= 2, "decode expects an encoding tensor with a rank axis");
    const std::size_t R = H.shape().back();
    require(R == mlp.in_width, "decode: encoding width does not match MLP input");
    std::vector<std::size_t> shape(H.shape().begin(), H.shape().end() - 1);
    DenseTensor out(shape);
    std::vector<double> hidden(mlp.hidden_width);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out[i] = mlp.forward(store, std::span<const double>(H.data() + i * R, R),
                             std::span<double>(hidden));
    return out;
}

// ---- bilinear sampling with zero padding -----------------------------------
// Pixel centers sit at integer (x,y); samples outside [0,n-1] read 0.  The
// coordinate gradient uses the same zero-extended corner values, i.e. the
// interior-side linear piece at boundaries.

inline double pad_at(const double* img, std::size_t n1, std::size_t n2,
                     long i, long j) {
    if (i < 0 || j < 0 || i >= static_cast<long>(n1) || j >= static_cast<long>(n2))
        return 0.0;
    return img[static_cast<std::size_t>(i) * n2 + static_cast<std::size_t>(j)];
}

inline double bilinear_sample(const double* img, std::size_t n1, std::size_t n2,
                              double x, double y) {
    const long x0 = static_cast<long>(std::floor(x));
    const long y0 = static_cast<long>(std::floor(y));
    const double ax = x - static_cast<double>(x0);
    const double ay = y - static_cast<double>(y0);
    const double v00 = pad_at(img, n1, n2, x0, y0);
    const double v01 = pad_at(img, n1, n2, x0, y0 + 1);
    const double v10 = pad_at(img, n1, n2, x0 + 1, y0);
    const double v11 = pad_at(img, n1, n2, x0 + 1, y0 + 1);
    return (1.0 - ax) * ((1.0 - ay) * v00 + ay * v01) +
           ax * ((1.0 - ay) * v10 + ay * v11);
}

// d(sample)/d(x), d(sample)/d(y)
inline void bilinear_coord_grad(const double* img, std::size_t n1, std::size_t n2,
                                double x, double y, double& dx, double& dy) {
    const long x0 = static_cast<long>(std::floor(x));
    const long y0 = static_cast<long>(std::floor(y));
    const double ax = x - static_cast<double>(x0);
    const double ay = y - static_cast<double>(y0);
    const double v00 = pad_at(img, n1, n2, x0, y0);
    const double v01 = pad_at(img, n1, n2, x0, y0 + 1);
    const double v10 = pad_at(img, n1, n2, x0 + 1, y0);
    const double v11 = pad_at(img, n1, n2, x0 + 1, y0 + 1);
    dx = (1.0 - ay) * (v10 - v00) + ay * (v11 - v01);
    dy = (1.0 - ax) * (v01 - v00) + ax * (v11 - v10);
}

// Scatters d(loss)/d(sample) back onto the in-bounds source pixels.
inline void bilinear_scatter(double* gimg, std::size_t n1, std::size_t n2,
                             double x, double y, double g) {
    const long x0 = static_cast<long>(std::floor(x));
    const long y0 = static_cast<long>(std::floor(y));
    const double ax = x - static_cast<double>(x0);
    const double ay = y - static_cast<double>(y0);
    const auto add = [&](long i, long j, double w) {
        if (i < 0 || j < 0 || i >= static_cast<long>(n1) || j >= static_cast<long>(n2))
            return;
        gimg[static_cast<std::size_t>(i) * n2 + static_cast<std::size_t>(j)] += w * g;
    };
    add(x0, y0, (1.0 - ax) * (1.0 - ay));
    add(x0, y0 + 1, (1.0 - ax) * ay);
    add(x0 + 1, y0, ax * (1.0 - ay));
    add(x0 + 1, y0 + 1, ax * ay);
}

// ---- temporal affine adapter ------------------------------------------------

// Small tanh-hidden MLP (R -> hidden -> 1) driving one translation component.
struct TranslationInr {
    std::size_t hidden = 0;
    std::size_t w1 = 0, b1 = 0, w2 = 0;

    static TranslationInr build(ParamStore& store, const std::string& prefix,
                                std::size_t in, std::size_t hidden,
                                std::uint64_t seed) {
        TranslationInr t;
        t.hidden = hidden;
        t.w1 = store.add(prefix + "/w1", {hidden, in}, ParamKind::Affine);
        t.b1 = store.add(prefix + "/b1", {hidden}, ParamKind::Affine);
        t.w2 = store.add(prefix + "/w2", {1, hidden}, ParamKind::Affine);
        MlpDecoder::init_block(store, t.w1, in, seed, "init/" + prefix + "/w1");
        MlpDecoder::init_block(store, t.b1, in, seed, "init/" + prefix + "/b1");
        MlpDecoder::init_block(store, t.w2, hidden, seed, "init/" + prefix + "/w2");
        return t;
    }

    double forward(const ParamStore& store, std::span<const double> h,
                   std::span<double> hidden_out) const {
        const std::size_t in = store.block(w1).shape[1];
        const double* w1v = store.value(w1).data();
        const double* b1v = store.value(b1).data();
        const double* w2v = store.value(w2).data();
        double y = 0.0;
        for (std::size_t k = 0; k < hidden; ++k) {
            double a = b1v[k];
            const double* row = w1v + k * in;
            for (std::size_t r = 0; r < in; ++r) a += row[r] * h[r];
            const double act = std::tanh(a);
            hidden_out[k] = act;
            y += w2v[k] * act;
        }
        return y;
    }

    void backward(ParamStore& store, std::span<const double> h,
                  std::span<const double> hidden, double dy,
                  std::span<double> dh_accum) const {
        const std::size_t in = store.block(w1).shape[1];
        const double* w1v = store.value(w1).data();
        const double* w2v = store.value(w2).data();
        double* gw1 = store.grad(w1).data();
        double* gb1 = store.grad(b1).data();
        double* gw2 = store.grad(w2).data();
        for (std::size_t k = 0; k < hidden.size(); ++k) {
            gw2[k] += dy * hidden[k];
            const double da = dy * w2v[k] * (1.0 - hidden[k] * hidden[k]);
            gb1[k] += da;
            const double* row = w1v + k * in;
            double* grow = gw1 + k * in;
            for (std::size_t r = 0; r < in; ++r) {
                grow[r] += da * h[r];
                dh_accum[r] += da * row[r];
            }
        }
    }
};

// Per-frame similarity transform: scale s^(t) = exp(raw), rotation angle
// theta^(t), plus translations driven by two INRs fed with the temporal axis
// encoding H_3((t-1)/n_3).  Translations are squashed to +-(extent)/4.
struct AffineAdapter {
    std::size_t frames = 0;             // n3
    std::size_t log_scale = 0, angle = 0;  // blocks of length n3
    TranslationInr fx, fy;

    static AffineAdapter build(ParamStore& store, std::size_t frames,
                               std::size_t rank, std::size_t inr_hidden,
                               std::uint64_t seed) {
        require(frames >= 1, "affine adapter needs at least one frame");
        require(inr_hidden >= 1, "translation INR hidden width must be >= 1");
        AffineAdapter a;
        a.frames = frames;
        a.log_scale = store.add("affine/log_scale", {frames}, ParamKind::Affine);
        a.angle = store.add("affine/angle", {frames}, ParamKind::Affine);
        // raw values 0 give s = 1, theta = 0 (identity warp at start)
        a.fx = TranslationInr::build(store, "affine/fx", rank, inr_hidden, seed);
        a.fy = TranslationInr::build(store, "affine/fy", rank, inr_hidden, seed);
        return a;
    }
};

struct FrameTransform {
    double scale = 1.0, angle = 0.0, bx = 0.0, by = 0.0;
    double raw_bx = 0.0, raw_by = 0.0;  // INR outputs before the tanh squash
};

// Evaluates the frame-t transform given the temporal encoding h3 of that
// frame.  extent_x/extent_y bound the translations to a quarter frame.
inline FrameTransform affine_frame_transform(const AffineAdapter& a,
                                             const ParamStore& store,
                                             std::size_t t,
                                             std::span<const double> h3,
                                             double extent_x, double extent_y) {
    FrameTransform ft;
    ft.scale = std::exp(store.value(a.log_scale)[t]);
    ft.angle = store.value(a.angle)[t];
    std::vector<double> hx(a.fx.hidden), hy(a.fy.hidden);
    ft.raw_bx = a.fx.forward(store, h3, std::span<double>(hx));
    ft.raw_by = a.fy.forward(store, h3, std::span<double>(hy));
    ft.bx = 0.25 * extent_x * std::tanh(ft.raw_bx);
    ft.by = 0.25 * extent_y * std::tanh(ft.raw_by);
    return ft;
}

// Source position sampled for output pixel (i,j): rotation/scale about the
// frame center plus the translation.
inline void affine_source_pos(const FrameTransform& ft, double cx, double cy,
                              double i, double j, double& x, double& y) {
    const double c = std::cos(ft.angle), s = std::sin(ft.angle);
    const double qx = i - cx, qy = j - cy;
    x = cx + ft.scale * (c * qx - s * qy) + ft.bx;
    y = cy + ft.scale * (s * qx + c * qy) + ft.by;
}

// Warps each frame L[:,:,t] by its transform (bilinear, zero padding).
// Requires a decomposed D=3 encoder for the temporal encodings.
inline DenseTensor affine_apply(const AffineAdapter& a, const ParamStore& store,
                                const Encoder& enc, const DenseTensor& L) {
    require(L.order() == 3, "affine_apply expects a 3rd-order tensor");
    const std::size_t n1 = L.dim(0), n2 = L.dim(1), n3 = L.dim(2);
    require(n3 == a.frames, "affine_apply: adapter sized for a different frame count");
    const double cx = 0.5 * static_cast<double>(n1 - 1);
    const double cy = 0.5 * static_cast<double>(n2 - 1);
    DenseTensor out(L.shape());
    std::vector<double> frame(n1 * n2), h3(enc.rank());
    for (std::size_t t = 0; t < n3; ++t) {
        const double tau = static_cast<double>(t) / static_cast<double>(n3);
        enc.encode_axis(store, 2, tau, std::span<double>(h3));
        const FrameTransform ft = affine_frame_transform(
            a, store, t, h3, static_cast<double>(n1), static_cast<double>(n2));
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                frame[i * n2 + j] = L(i, j, t);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                double x, y;
                affine_source_pos(ft, cx, cy, static_cast<double>(i),
                                  static_cast<double>(j), x, y);
                out(i, j, t) = bilinear_sample(frame.data(), n1, n2, x, y);
            }
    }
    return out;
}

// ---- smoothness bound --------------------------------------------------------

// Worst-case |f(v1)-f(v2)| / ||v1-v2||_1 for grids with row-wise L1 norm <= 1:
// dense mode 2^D * eta * D * N, decomposed 2 * eta * D * N, where
// eta = ||W1||_l1 * ||W2||_l1 (entrywise) and N = sum_l (N_l - 1).  The ramp
// activation contributes Lipschitz factor 1.
inline double lipschitz_bound(const MlpDecoder& mlp, const ParamStore& store,
                              const EncoderConfig& cfg) {
    const double gamma = 1.0;  // ramp
    double l1_w1 = 0.0, l1_w2 = 0.0;
    for (const double v : store.value(mlp.w1)) l1_w1 += std::abs(v);
    for (const double v : store.value(mlp.w2)) l1_w2 += std::abs(v);
    const double eta = l1_w1 * l1_w2;
    double N = 0.0;
    for (const std::size_t r : cfg.level_resolutions())
        N += static_cast<double>(r - 1);
    const double D = static_cast<double>(cfg.dims);
    const double lead = cfg.mode == EncoderMode::Dense
                            ? std::pow(2.0, D)
                            : 2.0;
    return lead * gamma * eta * D * N;
}

// ---- assembled model ----------------------------------------------------------

struct ModelConfig {
    EncoderConfig encoder;
    std::size_t mlp_hidden = 64;
    std::size_t inr_hidden = 32;
    std::size_t affine_frames = 0;  // > 0 builds the temporal adapter
    std::uint64_t seed = 0;

    void validate() const {
        encoder.validate();
        require(mlp_hidden >= 1, "mlp hidden width must be >= 1");
        if (affine_frames > 0) {
            require(encoder.mode == EncoderMode::Decomposed,
                    "affine adapter requires the decomposed encoder (it reads the temporal axis encoding)");
            require(encoder.dims == 3, "affine adapter requires a 3rd-order signal");
            require(inr_hidden >= 1, "translation INR hidden width must be >= 1");
        }
    }
};

// Owns the parameter store and the component handles.
class Model {
public:
    static Model build(const ModelConfig& cfg) {
        cfg.validate();
        Model m;
        m.cfg_ = cfg;
        m.encoder_ = Encoder::build(cfg.encoder, m.store_, cfg.seed);
        m.mlp_ = MlpDecoder::build(m.store_, "mlp", cfg.encoder.rank(),
                                   cfg.mlp_hidden, cfg.seed);
        if (cfg.affine_frames > 0) {
            m.adapter_ = AffineAdapter::build(m.store_, cfg.affine_frames,
                                              cfg.encoder.rank(), cfg.inr_hidden,
                                              cfg.seed);
            m.has_adapter_ = true;
        }
        return m;
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const Encoder& encoder() const { return encoder_; }
    const MlpDecoder& mlp() const { return mlp_; }
    bool has_adapter() const { return has_adapter_; }
    const AffineAdapter& adapter() const {
        if (!has_adapter_) throw std::logic_error("model has no affine adapter");
        return adapter_;
    }

    double lipschitz_bound() const {
        return gridtd::lipschitz_bound(mlp_, store_, cfg_.encoder);
    }

    // Single-point evaluation (no affine, no gradients).
    double eval_point(std::span<const double> v) const {
        std::vector<double> h(encoder_.rank()), hidden(mlp_.hidden_width);
        encoder_.encode_point(store_, v, std::span<double>(h));
        return mlp_.forward(store_, h, std::span<double>(hidden));
    }

private:
    ModelConfig cfg_;
    ParamStore store_;
    Encoder encoder_;
    MlpDecoder mlp_;
    AffineAdapter adapter_;
    bool has_adapter_ = false;
};

}  // namespace gridtd
