#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridtd/params.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

// ---- little-endian primitives -------------------------------------------
// Byte order is pinned explicitly so files are identical across platforms.

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(os, v);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline double get_f64(std::istream& is) {
    const std::uint64_t v = get_u64(is);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

// ---- GTD1 tensor files ----------------------------------------------------
// Layout: magic "GTD1" | uint32 order D | D x uint64 dims | row-major f64.

inline void write_tensor(std::ostream& os, const DenseTensor& t) {
    os.write("GTD1", 4);
    put_u32(os, static_cast<std::uint32_t>(t.order()));
    for (const std::size_t d : t.shape()) put_u64(os, d);
    for (std::size_t i = 0; i < t.numel(); ++i) put_f64(os, t[i]);
}

inline void write_tensor(const std::string& path, const DenseTensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_tensor(os, t);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline DenseTensor read_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GTD1", 4) != 0)
        throw std::runtime_error("not a GTD1 tensor stream");
    const std::uint32_t order = get_u32(is);
    if (order == 0 || order > 16) throw std::runtime_error("bad GTD1 order");
    std::vector<std::size_t> shape(order);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < order; ++d) {
        shape[d] = static_cast<std::size_t>(get_u64(is));
        if (shape[d] == 0) throw std::runtime_error("bad GTD1 dimension");
        n *= shape[d];
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = get_f64(is);
    return DenseTensor(std::move(shape), std::move(data));
}

inline DenseTensor read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_tensor(is);
}

// ---- ParamStore checkpoints ------------------------------------------------
// One binary file of GTD1 records (blocks sorted by name) plus a text
// manifest "name  dims  byte-offset" so the binary stays self-describing.

inline std::vector<std::size_t> blocks_by_name(const ParamStore& store) {
    std::vector<std::size_t> ids(store.block_count());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        return store.block(a).name < store.block(b).name;
    });
    return ids;
}

inline void save_params(const std::string& bin_path, const std::string& manifest_path,
                        const ParamStore& store) {
    std::ofstream os(bin_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + bin_path);
    std::ofstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open for writing: " + manifest_path);
    for (const std::size_t id : blocks_by_name(store)) {
        const ParamBlock& b = store.block(id);
        mf << b.name << ' ';
        for (std::size_t d = 0; d < b.shape.size(); ++d)
            mf << (d ? "x" : "") << b.shape[d];
        mf << ' ' << os.tellp() << '\n';
        DenseTensor t(b.shape, b.value);
        write_tensor(os, t);
    }
    if (!os || !mf) throw std::runtime_error("checkpoint write failed");
}

// Loads block values back into an already-built store (names and shapes must
// match the checkpoint exactly).
inline void load_params(const std::string& bin_path, const std::string& manifest_path,
                        ParamStore& store) {
    std::ifstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open: " + manifest_path);
    std::ifstream is(bin_path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + bin_path);
    std::string line;
    std::size_t seen = 0;
    while (std::getline(mf, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string name, dims;
        std::uint64_t offset = 0;
        if (!(ls >> name >> dims >> offset))
            throw std::runtime_error("malformed manifest line: " + line);
        is.seekg(static_cast<std::streamoff>(offset));
        DenseTensor t = read_tensor(is);
        ParamBlock& b = store.block(store.find(name));
        if (t.shape() != b.shape)
            throw std::runtime_error("checkpoint shape mismatch for block " + name);
        b.value = t.raw();
        ++seen;
    }
    if (seen != store.block_count())
        throw std::runtime_error("checkpoint block count mismatch");
}

}  // namespace gridtd
