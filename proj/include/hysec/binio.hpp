// Little-endian binary stream helpers shared by the on-disk file formats.
#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hysec::binio {

inline void put_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    auto v = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    put_bytes(out, buf, sizeof(T));
}

inline void get_bytes(std::istream& in, void* data, std::size_t n, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw std::runtime_error(std::string("truncated input while reading ") + what);
    }
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    get_bytes(in, buf, sizeof(T), what);
    std::make_unsigned_t<T> v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

inline void put_magic(std::ostream& out, std::string_view magic) {
    put_bytes(out, magic.data(), magic.size());
}

inline bool check_magic(std::istream& in, std::string_view magic) {
    std::string buf(magic.size(), '\0');
    in.read(buf.data(), static_cast<std::streamsize>(magic.size()));
    return static_cast<std::size_t>(in.gcount()) == magic.size() && buf == magic;
}

}  // namespace hysec::binio
