// FASTA / FASTQ / SAM (subset) readers and writers.
//
// The SAM writer emits the 11 mandatory columns plus an optional AS:i: score
// tag; parsers reject malformed input instead of repairing it.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hysec::seqio {

struct MalformedFasta : std::runtime_error {
    explicit MalformedFasta(const std::string& what) : std::runtime_error("malformed FASTA: " + what) {}
};
struct MalformedFastq : std::runtime_error {
    explicit MalformedFastq(const std::string& what) : std::runtime_error("malformed FASTQ: " + what) {}
};
struct MalformedSam : std::runtime_error {
    explicit MalformedSam(const std::string& what) : std::runtime_error("malformed SAM: " + what) {}
};

// Single-contig reference over {A,C,G,T,N}, uppercase after parsing.
struct ReferenceGenome {
    std::string name;
    std::string sequence;

    std::uint64_t length() const { return sequence.size(); }
};

enum class Mate : std::uint8_t { none, first, second };

struct ReadRecord {
    std::string id;
    std::string sequence;
    std::string quality;  // same length as sequence, carried verbatim
    Mate mate = Mate::none;
};

// SAM flag bits used by the pipeline.
inline constexpr int kSamFlagPaired = 0x1;
inline constexpr int kSamFlagUnmapped = 0x4;
inline constexpr int kSamFlagFirstMate = 0x40;
inline constexpr int kSamFlagSecondMate = 0x80;

struct SamRecord {
    std::string qname;
    int flag = 0;
    std::string rname = "*";
    std::int64_t pos = 0;  // 1-based, 0 if unmapped
    int mapq = 0;
    std::string cigar = "*";
    std::string seq = "*";
    std::string qual = "*";
    std::optional<int> score;  // AS:i: tag

    bool unmapped() const { return (flag & kSamFlagUnmapped) != 0; }
};

// Parses a single-record FASTA stream. Multi-record input is rejected: the
// pipeline treats the reference as one partitionable sequence.
ReferenceGenome parse_fasta(std::istream& in);

// Streaming 4-line FASTQ reader.
class FastqReader {
public:
    explicit FastqReader(std::istream& in) : in_(in) {}

    // Fills `out` with the next record; false at end of stream.
    bool next(ReadRecord& out);

private:
    std::istream& in_;
    std::uint64_t record_index_ = 0;
};

std::vector<ReadRecord> parse_fastq(std::istream& in);

void write_fasta(std::ostream& out, const std::string& name, const std::string& sequence);
void write_fastq(std::ostream& out, std::span<const ReadRecord> reads);

// Header pair for @SQ lines: (segment name, length).
using SamHeaderSegments = std::vector<std::pair<std::string, std::uint64_t>>;

void write_sam(std::ostream& out, std::span<const SamRecord> records, const SamHeaderSegments& header_segments);
std::string write_sam(std::span<const SamRecord> records, const SamHeaderSegments& header_segments);

// Parses the records of a SAM stream (header lines are skipped).
std::vector<SamRecord> parse_sam(std::istream& in);

}  // namespace hysec::seqio
