#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "types.hpp"

namespace hjreg {

/// Periodic grid function on [0, L)^dim with n points per axis, row-major.
struct GridField {
    int dim = 1;
    int n = 0;
    double L = 1.0;
    double time = 0.0;
    std::vector<double> values;

    static GridField zeros(int dim, int n, double L, double time = 0.0) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("GridField: dim must be 1 or 2");
        if (n < 16) throw std::invalid_argument("GridField: need at least 16 points per axis");
        if (!(L > 0.0)) throw std::invalid_argument("GridField: period must be positive");
        GridField g;
        g.dim = dim;
        g.n = n;
        g.L = L;
        g.time = time;
        g.values.assign(dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n, 0.0);
        return g;
    }

    /// Field sampled from f(x) at the grid nodes x_i = i dx.
    template <class Fn>
    static GridField from_function(int dim, int n, double L, Fn&& f, double time = 0.0) {
        auto g = zeros(dim, n, L, time);
        for (std::size_t k = 0; k < g.size(); ++k) g.values[k] = f(g.node(k));
        return g;
    }

    double dx() const { return L / n; }
    std::size_t size() const { return values.size(); }

    static int wrap(int i, int n) { return ((i % n) + n) % n; }
    std::size_t index(int i, int j = 0) const {
        return dim == 1 ? static_cast<std::size_t>(wrap(i, n))
                        : static_cast<std::size_t>(wrap(i, n)) * n + static_cast<std::size_t>(wrap(j, n));
    }
    double operator()(int i, int j = 0) const { return values[index(i, j)]; }
    double& operator()(int i, int j = 0) { return values[index(i, j)]; }

    /// Axis indices of flat index k.
    std::pair<int, int> ij(std::size_t k) const {
        if (dim == 1) return {static_cast<int>(k), 0};
        return {static_cast<int>(k / n), static_cast<int>(k % n)};
    }
    Vec node(std::size_t k) const {
        const auto [i, j] = ij(k);
        return make_vec(dim, i * dx(), j * dx());
    }

    double min() const { return *std::min_element(values.begin(), values.end()); }
    double max() const { return *std::max_element(values.begin(), values.end()); }

    void validate() const {
        const std::size_t expected = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
        if (n < 16 || values.size() != expected) throw std::invalid_argument("GridField: inconsistent shape");
        for (std::size_t k = 0; k < values.size(); ++k)
            if (!std::isfinite(values[k]))
                throw NonFinite("GridField: non-finite value at index " + std::to_string(k));
    }
};

inline nlohmann::ordered_json field_header(const GridField& f) {
    return {{"dim", f.dim}, {"n", f.n}, {"L", f.L}, {"time_stamp", f.time}};
}

/// Raw little-endian doubles, row-major.
inline void write_values(const std::filesystem::path& path, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::vector<unsigned char> buf(values.size() * 8);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto bits = std::bit_cast<std::uint64_t>(values[k]);
        for (int b = 0; b < 8; ++b) buf[8 * k + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<double> read_values(const std::filesystem::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<unsigned char> buf(count * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw std::runtime_error(path.string() + ": truncated field data");
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[8 * k + b]) << (8 * b);
        values[k] = std::bit_cast<double>(bits);
    }
    return values;
}

/// Writes `path` (binary) and `path`.json (sidecar).
inline void write_field(const std::filesystem::path& path, const GridField& f) {
    write_values(path, f.values);
    std::ofstream side(path.string() + ".json");
    side << field_header(f).dump(2) << '\n';
}

inline GridField read_field(const std::filesystem::path& path) {
    std::ifstream side(path.string() + ".json");
    if (!side) throw std::runtime_error("missing sidecar for " + path.string());
    const auto h = nlohmann::json::parse(side);
    auto f = GridField::zeros(h.at("dim").get<int>(), h.at("n").get<int>(), h.at("L").get<double>(),
                              h.at("time_stamp").get<double>());
    f.values = read_values(path, f.size());
    return f;
}

}  // namespace hjreg
