// Bloom filter used for read dispatch: m-bit array (m a power of two so the
// modulo is a mask; any requested m is rounded up), k positions per element
// derived by double hashing from two 64-bit hashes with a recorded seed.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "hysec/digest.hpp"

namespace hysec::bloom {

struct BadFilterFile : std::runtime_error {
    explicit BadFilterFile(const std::string& what) : std::runtime_error("bad bloom filter file: " + what) {}
};

inline constexpr std::uint64_t kDefaultSeed = 0x4879536563466c6fULL;

std::uint64_t round_up_pow2(std::uint64_t m);

// Closed-form false-positive estimate, exact form (1-(1-1/m)^{kn})^k.
double fpr_estimate(std::uint64_t m, std::uint32_t k, std::uint64_t n);

class BloomFilter {
public:
    // `m_bits` is rounded up to a power of two.
    BloomFilter(std::uint64_t m_bits, std::uint32_t k, std::uint64_t seed, std::uint32_t partition_id,
                const Digest32& params_fingerprint);

    void insert(std::string_view element);
    bool contains(std::string_view element) const;

    std::uint64_t bit_count() const { return m_; }
    std::uint32_t hash_count() const { return k_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t inserted_count() const { return n_inserted_; }
    std::uint32_t partition_id() const { return partition_id_; }
    const Digest32& params_fingerprint() const { return fingerprint_; }
    std::uint64_t popcount() const;
    double fpr() const { return fpr_estimate(m_, k_, n_inserted_); }

    bool operator==(const BloomFilter& other) const = default;

    void save(std::ostream& out) const;
    static BloomFilter load(std::istream& in);

private:
    BloomFilter() = default;

    std::uint64_t m_ = 0;
    std::uint32_t k_ = 0;
    std::uint64_t seed_ = 0;
    std::uint32_t partition_id_ = 0;
    Digest32 fingerprint_{};
    std::uint64_t n_inserted_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace hysec::bloom
