#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "gridtd/tensor.hpp"

namespace gridtd {

// Minimal 8-bit grayscale PNG export for previews.  Values are mapped
// linearly from [lo, hi] (the data range unless stated otherwise) to 0..255;
// the range actually used is returned so run manifests can record it and the
// original scale stays recoverable.
struct PngScale {
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail {

inline void png_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& payload) {
    png_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc =
        crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size()));
    png_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

// Encodes one grayscale image (row-major, `height` rows of `width` pixels).
inline std::vector<unsigned char> encode_png_gray(
    const std::vector<unsigned char>& pixels, std::size_t width,
    std::size_t height) {
    if (width == 0 || height == 0)
        throw std::invalid_argument("png: empty image");
    if (pixels.size() != width * height)
        throw std::invalid_argument("png: pixel buffer size mismatch");

    // filter byte 0 in front of every scanline
    std::vector<unsigned char> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t r = 0; r < height; ++r) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + r * width,
                   pixels.begin() + (r + 1) * width);
    }

    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("png: zlib compression failed");
    comp.resize(comp_len);

    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<unsigned char> out(sig, sig + 8);

    std::vector<unsigned char> ihdr;
    detail::png_u32_be(ihdr, static_cast<std::uint32_t>(width));
    detail::png_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // color type: grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", comp);
    detail::png_chunk(out, "IEND", {});
    return out;
}

// Quantizes to 8 bits with the linear map lo -> 0, hi -> 255.  A constant
// image (hi == lo) renders as black and the degenerate range is still
// reported back to the caller.
inline std::vector<unsigned char> quantize_gray(const double* data,
                                                std::size_t count,
                                                const PngScale& scale) {
    std::vector<unsigned char> px(count);
    const double span = scale.hi - scale.lo;
    for (std::size_t i = 0; i < count; ++i) {
        double v = span > 0.0 ? (data[i] - scale.lo) / span : 0.0;
        v = std::min(1.0, std::max(0.0, v));
        px[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    return px;
}

// Writes a 2D tensor (shape {rows, cols}) as a grayscale PNG using the data's
// own min/max as the scale; returns that scale.
inline PngScale write_png_gray(const std::string& path, const DenseTensor& img) {
    if (img.order() != 2)
        throw std::invalid_argument("write_png_gray: expected a 2D tensor");
    PngScale scale;
    scale.lo = img.data()[0];
    scale.hi = img.data()[0];
    for (std::size_t i = 0; i < img.numel(); ++i) {
        scale.lo = std::min(scale.lo, img.data()[i]);
        scale.hi = std::max(scale.hi, img.data()[i]);
    }
    const std::vector<unsigned char> px =
        quantize_gray(img.data(), img.numel(), scale);
    const std::vector<unsigned char> bytes =
        encode_png_gray(px, img.shape()[1], img.shape()[0]);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_png_gray: cannot open " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write_png_gray: write failed for " + path);
    return scale;
}

// Extracts frame t of a {n1, n2, n3} tensor as a 2D image.
inline DenseTensor frame_of(const DenseTensor& vol, std::size_t t) {
    if (vol.order() != 3)
        throw std::invalid_argument("frame_of: expected a 3D tensor");
    const std::size_t n1 = vol.shape()[0], n2 = vol.shape()[1],
                      n3 = vol.shape()[2];
    if (t >= n3) throw std::invalid_argument("frame_of: frame index out of range");
    DenseTensor img({n1, n2});
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) img(i, j) = vol(i, j, t);
    return img;
}

}  // namespace gridtd
