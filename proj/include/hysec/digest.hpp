// SHA-256 digests used for filter fingerprints, key policies and key ids.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace hysec {

using Digest32 = std::array<std::uint8_t, 32>;

// Incremental SHA-256 (OpenSSL EVP under the hood).
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(const void* data, std::size_t n);
    Sha256& update(std::string_view s) { return update(s.data(), s.size()); }
    template <typename T>
    Sha256& update_le(T value) {
        static_assert(std::is_integral_v<T>);
        unsigned char buf[sizeof(T)];
        auto v = static_cast<std::make_unsigned_t<T>>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        return update(buf, sizeof(T));
    }
    Digest32 finish();

private:
    void* ctx_;
};

Digest32 sha256(std::string_view data);
std::string hex(const Digest32& d);

}  // namespace hysec
