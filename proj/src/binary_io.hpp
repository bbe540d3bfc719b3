#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace inrshape::detail {

inline std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline bool read_u64(std::istream& in, std::uint64_t& v) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) return false;
    v = to_little(v);
    return true;
}

inline void write_f64(std::ostream& out, std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), std::streamsize(values.size() * sizeof(double)));
    } else {
        for (double v : values) write_u64(out, std::bit_cast<std::uint64_t>(v));
    }
}

inline bool read_f64(std::istream& in, std::span<double> values) {
    if (!in.read(reinterpret_cast<char*>(values.data()), std::streamsize(values.size() * sizeof(double))))
        return false;
    if constexpr (std::endian::native != std::endian::little)
        for (double& v : values) v = std::bit_cast<double>(to_little(std::bit_cast<std::uint64_t>(v)));
    return true;
}

}  // namespace inrshape::detail
