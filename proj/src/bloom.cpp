#include "hysec/bloom.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "hysec/binio.hpp"

namespace hysec::bloom {

namespace {

constexpr std::uint16_t kFormatVersion = 1;
constexpr std::string_view kMagic = "HSBF";

// MurmurHash64A, by Austin Appleby (public domain).
std::uint64_t murmur64a(const void* key, std::size_t len, std::uint64_t seed) {
    const std::uint64_t m = 0xc6a4a7935bd1e995ULL;
    const int r = 47;
    std::uint64_t h = seed ^ (len * m);

    const auto* data = static_cast<const unsigned char*>(key);
    const unsigned char* end = data + (len / 8) * 8;
    while (data != end) {
        std::uint64_t k;
        std::memcpy(&k, data, 8);
        data += 8;
        k *= m;
        k ^= k >> r;
        k *= m;
        h ^= k;
        h *= m;
    }

    switch (len & 7) {
        case 7: h ^= std::uint64_t(data[6]) << 48; [[fallthrough]];
        case 6: h ^= std::uint64_t(data[5]) << 40; [[fallthrough]];
        case 5: h ^= std::uint64_t(data[4]) << 32; [[fallthrough]];
        case 4: h ^= std::uint64_t(data[3]) << 24; [[fallthrough]];
        case 3: h ^= std::uint64_t(data[2]) << 16; [[fallthrough]];
        case 2: h ^= std::uint64_t(data[1]) << 8; [[fallthrough]];
        case 1: h ^= std::uint64_t(data[0]); h *= m;
    }

    h ^= h >> r;
    h *= m;
    h ^= h >> r;
    return h;
}

struct HashPair {
    std::uint64_t h1;
    std::uint64_t h2;  // forced odd so it steps through the whole power-of-two table
};

HashPair hash_element(std::string_view element, std::uint64_t seed) {
    std::uint64_t h1 = murmur64a(element.data(), element.size(), seed);
    std::uint64_t h2 = murmur64a(element.data(), element.size(), seed ^ 0x9e3779b97f4a7c15ULL) | 1ULL;
    return {h1, h2};
}

}  // namespace

std::uint64_t round_up_pow2(std::uint64_t m) {
    if (m <= 1) return 1;
    return std::bit_ceil(m);
}

double fpr_estimate(std::uint64_t m, std::uint32_t k, std::uint64_t n) {
    assert(m >= 1 && k >= 1);
    if (n == 0) return 0.0;
    // (1-1/m)^{kn} via exp(kn*log1p(-1/m)) to stay accurate for large kn.
    double exponent = static_cast<double>(k) * static_cast<double>(n);
    double p_bit_zero = std::exp(exponent * std::log1p(-1.0 / static_cast<double>(m)));
    return std::pow(1.0 - p_bit_zero, static_cast<double>(k));
}

BloomFilter::BloomFilter(std::uint64_t m_bits, std::uint32_t k, std::uint64_t seed, std::uint32_t partition_id,
                         const Digest32& params_fingerprint)
    : m_(round_up_pow2(m_bits)),
      k_(k),
      seed_(seed),
      partition_id_(partition_id),
      fingerprint_(params_fingerprint),
      words_((m_ + 63) / 64, 0) {
    if (k_ < 1) throw std::invalid_argument("bloom filter needs k >= 1");
}

void BloomFilter::insert(std::string_view element) {
    assert(!element.empty());
    const auto [h1, h2] = hash_element(element, seed_);
    const std::uint64_t mask = m_ - 1;
    for (std::uint32_t i = 0; i < k_; ++i) {
        std::uint64_t pos = (h1 + i * h2) & mask;
        words_[pos >> 6] |= 1ULL << (pos & 63);
    }
    ++n_inserted_;
}

bool BloomFilter::contains(std::string_view element) const {
    const auto [h1, h2] = hash_element(element, seed_);
    const std::uint64_t mask = m_ - 1;
    for (std::uint32_t i = 0; i < k_; ++i) {
        std::uint64_t pos = (h1 + i * h2) & mask;
        if (!(words_[pos >> 6] & (1ULL << (pos & 63)))) return false;
    }
    return true;
}

std::uint64_t BloomFilter::popcount() const {
    std::uint64_t total = 0;
    for (auto w : words_) total += static_cast<std::uint64_t>(std::popcount(w));
    return total;
}

void BloomFilter::save(std::ostream& out) const {
    binio::put_magic(out, kMagic);
    binio::put_le<std::uint16_t>(out, kFormatVersion);
    binio::put_le<std::uint32_t>(out, partition_id_);
    binio::put_le<std::uint64_t>(out, m_);
    binio::put_le<std::uint32_t>(out, k_);
    binio::put_le<std::uint64_t>(out, seed_);
    binio::put_bytes(out, fingerprint_.data(), fingerprint_.size());
    binio::put_le<std::uint64_t>(out, n_inserted_);
    const std::uint64_t n_bytes = (m_ + 7) / 8;
    std::uint64_t written = 0;
    for (std::size_t w = 0; w < words_.size() && written < n_bytes; ++w) {
        unsigned char buf[8];
        for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(words_[w] >> (8 * b));
        std::uint64_t take = std::min<std::uint64_t>(8, n_bytes - written);
        binio::put_bytes(out, buf, take);
        written += take;
    }
    if (!out) throw BadFilterFile("write failed");
}

BloomFilter BloomFilter::load(std::istream& in) {
    if (!binio::check_magic(in, kMagic)) throw BadFilterFile("missing HSBF magic");
    auto version = binio::get_le<std::uint16_t>(in, "version");
    if (version != kFormatVersion) throw BadFilterFile("unsupported version " + std::to_string(version));
    BloomFilter f;
    f.partition_id_ = binio::get_le<std::uint32_t>(in, "partition id");
    f.m_ = binio::get_le<std::uint64_t>(in, "bit count");
    if (f.m_ == 0 || (f.m_ & (f.m_ - 1)) != 0) throw BadFilterFile("bit count is not a power of two");
    f.k_ = binio::get_le<std::uint32_t>(in, "hash count");
    if (f.k_ < 1) throw BadFilterFile("hash count < 1");
    f.seed_ = binio::get_le<std::uint64_t>(in, "seed");
    binio::get_bytes(in, f.fingerprint_.data(), f.fingerprint_.size(), "fingerprint");
    f.n_inserted_ = binio::get_le<std::uint64_t>(in, "insert count");
    const std::uint64_t n_bytes = (f.m_ + 7) / 8;
    f.words_.assign((f.m_ + 63) / 64, 0);
    std::uint64_t read = 0;
    for (std::size_t w = 0; w < f.words_.size(); ++w) {
        unsigned char buf[8] = {0};
        std::uint64_t take = std::min<std::uint64_t>(8, n_bytes - read);
        binio::get_bytes(in, buf, take, "bit data");
        read += take;
        std::uint64_t word = 0;
        for (int b = 0; b < 8; ++b) word |= std::uint64_t(buf[b]) << (8 * b);
        f.words_[w] = word;
    }
    return f;
}

}  // namespace hysec::bloom
