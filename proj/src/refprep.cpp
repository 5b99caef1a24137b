#include "hysec/refprep.hpp"

#include <algorithm>
#include <cassert>
#include <istream>
#include <ostream>

#include "hysec/binio.hpp"

namespace hysec::refprep {

namespace {

constexpr std::string_view kIndexMagic = "HSIX";
constexpr std::uint16_t kIndexVersion = 1;

int base_code(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
        default: return -1;
    }
}

char code_base(int code) { return "ACGT"[code & 3]; }

}  // namespace

std::vector<ReferenceSegment> partition_reference(const seqio::ReferenceGenome& genome, std::uint32_t p,
                                                  std::uint64_t overlap) {
    const std::uint64_t length = genome.length();
    if (p < 1) throw InvalidPartitioning("partition count must be >= 1");
    if (p > length) {
        throw InvalidPartitioning("cannot split " + std::to_string(length) + " bases into " + std::to_string(p) +
                                  " partitions");
    }
    const std::uint64_t max_core = (length + p - 1) / p;
    if (p > 1 && overlap >= max_core) {
        throw InvalidPartitioning("overlap " + std::to_string(overlap) + " must be smaller than the core size " +
                                  std::to_string(max_core));
    }

    std::vector<ReferenceSegment> segments;
    segments.reserve(p);
    const std::uint64_t base = length / p;
    const std::uint64_t remainder = length % p;
    std::uint64_t offset = 0;
    for (std::uint32_t i = 0; i < p; ++i) {
        ReferenceSegment seg;
        seg.partition_id = i;
        seg.global_offset = offset;
        seg.core_length = base + (i < remainder ? 1 : 0);
        seg.overlap = std::min<std::uint64_t>(overlap, length - (offset + seg.core_length));
        seg.sequence = genome.sequence.substr(offset, seg.core_length + seg.overlap);
        offset += seg.core_length;
        segments.push_back(std::move(seg));
    }
    assert(offset == length);
    return segments;
}

std::optional<std::uint64_t> KmerIndex::pack(std::string_view smer) {
    assert(smer.size() <= 32);
    std::uint64_t key = 0;
    for (char c : smer) {
        int code = base_code(c);
        if (code < 0) return std::nullopt;
        key = (key << 2) | static_cast<std::uint64_t>(code);
    }
    return key;
}

KmerIndex KmerIndex::build(const ReferenceSegment& segment, std::uint32_t seed_length) {
    if (seed_length < 1 || seed_length > 32) throw std::invalid_argument("seed length must be in [1,32]");
    if (seed_length > segment.length()) {
        throw std::invalid_argument("seed length exceeds segment length");
    }
    KmerIndex index;
    index.partition_id_ = segment.partition_id;
    index.seed_length_ = seed_length;

    const std::string& seq = segment.sequence;
    const std::uint64_t s = seed_length;
    const std::uint64_t mask = s == 32 ? ~0ULL : (1ULL << (2 * s)) - 1;
    std::uint64_t key = 0;
    std::uint64_t valid = 0;  // bases accumulated since the last 'N'
    for (std::uint64_t i = 0; i < seq.size(); ++i) {
        int code = base_code(seq[i]);
        if (code < 0) {
            valid = 0;
            key = 0;
            continue;
        }
        key = ((key << 2) | static_cast<std::uint64_t>(code)) & mask;
        if (++valid >= s) {
            index.postings_[key].push_back(static_cast<std::uint32_t>(i + 1 - s));
        }
    }
    // Rolling construction yields ascending positions already.
    return index;
}

const std::vector<std::uint32_t>* KmerIndex::lookup_packed(std::uint64_t key) const {
    auto it = postings_.find(key);
    return it == postings_.end() ? nullptr : &it->second;
}

const std::vector<std::uint32_t>* KmerIndex::lookup(std::string_view smer) const {
    if (smer.size() != seed_length_) return nullptr;
    auto key = pack(smer);
    return key ? lookup_packed(*key) : nullptr;
}

std::vector<std::pair<std::string, std::vector<std::uint32_t>>> KmerIndex::export_postings() const {
    std::vector<std::pair<std::uint64_t, const std::vector<std::uint32_t>*>> keys;
    keys.reserve(postings_.size());
    for (const auto& [key, positions] : postings_) keys.emplace_back(key, &positions);
    std::sort(keys.begin(), keys.end());

    std::vector<std::pair<std::string, std::vector<std::uint32_t>>> out;
    out.reserve(keys.size());
    for (const auto& [key, positions] : keys) {
        std::string smer(seed_length_, 'A');
        for (std::uint32_t i = 0; i < seed_length_; ++i) {
            smer[seed_length_ - 1 - i] = code_base(static_cast<int>(key >> (2 * i)));
        }
        out.emplace_back(std::move(smer), *positions);
    }
    return out;
}

void KmerIndex::save(std::ostream& out) const {
    binio::put_magic(out, kIndexMagic);
    binio::put_le<std::uint16_t>(out, kIndexVersion);
    binio::put_le<std::uint32_t>(out, partition_id_);
    binio::put_le<std::uint32_t>(out, seed_length_);
    binio::put_le<std::uint64_t>(out, postings_.size());

    std::vector<std::uint64_t> keys;
    keys.reserve(postings_.size());
    for (const auto& [key, _] : postings_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    for (std::uint64_t key : keys) {
        const auto& positions = postings_.at(key);
        binio::put_le<std::uint64_t>(out, key);
        binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(positions.size()));
        for (auto pos : positions) binio::put_le<std::uint32_t>(out, pos);
    }
    if (!out) throw BadIndexFile("write failed");
}

KmerIndex KmerIndex::load(std::istream& in) {
    if (!binio::check_magic(in, kIndexMagic)) throw BadIndexFile("missing HSIX magic");
    auto version = binio::get_le<std::uint16_t>(in, "version");
    if (version != kIndexVersion) throw BadIndexFile("unsupported version " + std::to_string(version));
    KmerIndex index;
    index.partition_id_ = binio::get_le<std::uint32_t>(in, "partition id");
    index.seed_length_ = binio::get_le<std::uint32_t>(in, "seed length");
    auto n_keys = binio::get_le<std::uint64_t>(in, "key count");
    index.postings_.reserve(n_keys);
    for (std::uint64_t i = 0; i < n_keys; ++i) {
        auto key = binio::get_le<std::uint64_t>(in, "key");
        auto count = binio::get_le<std::uint32_t>(in, "posting count");
        std::vector<std::uint32_t> positions(count);
        for (auto& pos : positions) pos = binio::get_le<std::uint32_t>(in, "position");
        index.postings_.emplace(key, std::move(positions));
    }
    return index;
}

Digest32 reference_id(const seqio::ReferenceGenome& genome) {
    Sha256 h;
    h.update("hysec-reference\0", 16);
    h.update(genome.name);
    h.update("\0", 1);
    h.update(genome.sequence);
    return h.finish();
}

Digest32 params_fingerprint(const Digest32& reference_id, std::uint32_t partitions, std::uint64_t partition_overlap,
                            std::uint32_t bmer, std::uint32_t bmer_overlap, std::uint64_t m_bits, std::uint32_t k,
                            std::uint64_t seed) {
    Sha256 h;
    h.update("hysec-bloom-params\0", 19);
    h.update(reference_id.data(), reference_id.size());
    h.update_le(partitions);
    h.update_le(partition_overlap);
    h.update_le(bmer);
    h.update_le(bmer_overlap);
    h.update_le(m_bits);
    h.update_le(k);
    h.update_le(seed);
    return h.finish();
}

std::vector<bloom::BloomFilter> generate_bloom_filters(std::span<const ReferenceSegment> segments,
                                                       const DispatchParams& params, std::uint64_t m_bits,
                                                       std::uint32_t k, std::uint64_t seed,
                                                       const Digest32& fingerprint) {
    params.validate();
    for (const auto& seg : segments) {
        if (params.bmer > seg.length()) {
            throw std::invalid_argument("b-mer length " + std::to_string(params.bmer) +
                                        " exceeds segment " + seg.name());
        }
    }
    std::vector<bloom::BloomFilter> filters;
    filters.reserve(segments.size());
    for (const auto& seg : segments) {
        bloom::BloomFilter filter(m_bits, k, seed, seg.partition_id, fingerprint);
        const std::string& seq = seg.sequence;
        for_each_bmer_start(seq.size(), params.bmer, params.stride(), [&](std::uint64_t pos) {
            std::string_view window(seq.data() + pos, params.bmer);
            if (window.find('N') != std::string_view::npos) return;
            filter.insert(window);
        });
        filters.push_back(std::move(filter));
    }
    return filters;
}

std::uint64_t auto_bloom_bits(std::span<const ReferenceSegment> segments, const DispatchParams& params) {
    std::uint64_t max_inserts = 1;
    for (const auto& seg : segments) {
        std::uint64_t count = 0;
        for_each_bmer_start(seg.length(), params.bmer, params.stride(), [&](std::uint64_t) { ++count; });
        max_inserts = std::max(max_inserts, count);
    }
    return bloom::round_up_pow2(max_inserts * 12);
}

}  // namespace hysec::refprep
