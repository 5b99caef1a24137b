// One-time non-secure reference preparation: balanced overlapping partitions,
// per-segment k-mer postings index, per-segment Bloom filters over b-mers.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hysec/bloom.hpp"
#include "hysec/digest.hpp"
#include "hysec/seqio.hpp"

namespace hysec::refprep {

struct InvalidPartitioning : std::runtime_error {
    explicit InvalidPartitioning(const std::string& what) : std::runtime_error("invalid partitioning: " + what) {}
};
struct BadIndexFile : std::runtime_error {
    explicit BadIndexFile(const std::string& what) : std::runtime_error("bad index file: " + what) {}
};

// One partition of the reference. `sequence` is the core plus a right
// extension of `overlap` bases shared with the next segment (0 for the last).
struct ReferenceSegment {
    std::uint32_t partition_id = 0;
    std::string sequence;
    std::uint64_t global_offset = 0;
    std::uint64_t core_length = 0;
    std::uint64_t overlap = 0;

    std::uint64_t length() const { return sequence.size(); }
    std::string name() const { return "part_" + std::to_string(partition_id); }
};

// b-mer extraction parameters shared by filter construction and dispatch.
struct DispatchParams {
    std::uint32_t bmer = 25;
    std::uint32_t bmer_overlap = 15;
    std::uint32_t partitions = 1;

    std::uint32_t stride() const { return bmer - bmer_overlap; }
    void validate() const {
        if (bmer == 0 || bmer_overlap >= bmer) {
            throw std::invalid_argument("require 0 <= bmer_overlap < bmer");
        }
        if (partitions < 1) throw std::invalid_argument("require partitions >= 1");
    }
};

// Visits every b-mer start position of a sequence of length `len`: the
// stride-aligned grid plus one final window flush against the right end.
template <typename Fn>
void for_each_bmer_start(std::uint64_t len, std::uint32_t b, std::uint32_t stride, Fn&& fn) {
    if (len < b) return;
    std::uint64_t last = 0;
    for (std::uint64_t pos = 0; pos + b <= len; pos += stride) {
        fn(pos);
        last = pos;
    }
    if (last != len - b) fn(len - b);
}

std::vector<ReferenceSegment> partition_reference(const seqio::ReferenceGenome& genome, std::uint32_t p,
                                                  std::uint64_t overlap);

// Postings index over the 2-bit packed s-mers of one segment (s <= 32).
// s-mers containing 'N' are not indexed.
class KmerIndex {
public:
    static KmerIndex build(const ReferenceSegment& segment, std::uint32_t seed_length);

    std::uint32_t partition_id() const { return partition_id_; }
    std::uint32_t seed_length() const { return seed_length_; }
    std::uint64_t key_count() const { return postings_.size(); }

    static std::optional<std::uint64_t> pack(std::string_view smer);
    const std::vector<std::uint32_t>* lookup_packed(std::uint64_t key) const;
    const std::vector<std::uint32_t>* lookup(std::string_view smer) const;

    // Key-sorted (smer, positions) view, mainly for tests and serialization.
    std::vector<std::pair<std::string, std::vector<std::uint32_t>>> export_postings() const;

    void save(std::ostream& out) const;
    static KmerIndex load(std::istream& in);

private:
    std::uint32_t partition_id_ = 0;
    std::uint32_t seed_length_ = 0;
    // packed key -> ascending segment-local positions
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> postings_;
};

// Identity of a reference for fingerprinting (name + content digest).
Digest32 reference_id(const seqio::ReferenceGenome& genome);

// Fingerprint binding a filter set to the partitioned reference and the
// b-mer/bloom parameters; stale filters are detected by comparing it.
Digest32 params_fingerprint(const Digest32& reference_id, std::uint32_t partitions, std::uint64_t partition_overlap,
                            std::uint32_t bmer, std::uint32_t bmer_overlap, std::uint64_t m_bits, std::uint32_t k,
                            std::uint64_t seed);

// Builds one filter per segment over its b-mers (stride b-l plus the final
// flush-right b-mer; windows containing 'N' are skipped).
std::vector<bloom::BloomFilter> generate_bloom_filters(std::span<const ReferenceSegment> segments,
                                                       const DispatchParams& params, std::uint64_t m_bits,
                                                       std::uint32_t k, std::uint64_t seed,
                                                       const Digest32& fingerprint);

// Suggested power-of-two filter size for ~12 bits per inserted element.
std::uint64_t auto_bloom_bits(std::span<const ReferenceSegment> segments, const DispatchParams& params);

}  // namespace hysec::refprep
