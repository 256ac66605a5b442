#pragma once

// Little-endian binary helpers shared by the checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>

#include "rogo/errors.hpp"

namespace rogo::io {

static_assert(std::endian::native == std::endian::little,
              "checkpoint formats assume a little-endian host");

inline void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_doubles(std::ostream& os, std::span<const double> v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size_bytes()));
}

inline std::uint8_t read_u8(std::istream& is) {
    const auto pos = static_cast<std::size_t>(is.tellg());
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of stream", pos);
    return static_cast<std::uint8_t>(c);
}

inline std::uint64_t read_u64(std::istream& is) {
    const auto pos = static_cast<std::size_t>(is.tellg());
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
        throw FormatError("truncated u64", pos);
    return v;
}

inline void read_doubles(std::istream& is, std::span<double> out) {
    const auto pos = static_cast<std::size_t>(is.tellg());
    if (!is.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(out.size_bytes())))
        throw FormatError("truncated payload", pos);
}

}  // namespace rogo::io
