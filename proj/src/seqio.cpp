#include "hysec/seqio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace hysec::seqio {

namespace {

// getline that tolerates CRLF line endings.
bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

bool valid_base(char c) {
    switch (c) {
        case 'A': case 'C': case 'G': case 'T': case 'N':
            return true;
        default:
            return false;
    }
}

void fold_and_check(std::string& seq, const char* format) {
    for (char& c : seq) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (!valid_base(c)) {
            throw MalformedFasta(std::string(format) + " contains illegal character '" + c + "'");
        }
    }
}

}  // namespace

ReferenceGenome parse_fasta(std::istream& in) {
    std::string line;
    if (!read_line(in, line) || line.empty() || line[0] != '>') {
        throw MalformedFasta("input does not begin with a '>' header line");
    }
    ReferenceGenome genome;
    genome.name = line.substr(1, line.find_first_of(" \t") == std::string::npos
                                     ? std::string::npos
                                     : line.find_first_of(" \t") - 1);
    if (genome.name.empty()) throw MalformedFasta("empty record name");

    while (read_line(in, line)) {
        if (!line.empty() && line[0] == '>') {
            throw MalformedFasta("multi-record FASTA is not supported; the reference must be a single sequence");
        }
        genome.sequence += line;
    }
    if (genome.sequence.empty()) throw MalformedFasta("record '" + genome.name + "' has an empty sequence");
    fold_and_check(genome.sequence, "FASTA sequence");
    return genome;
}

bool FastqReader::next(ReadRecord& out) {
    std::string head, seq, plus, qual;
    if (!read_line(in_, head)) return false;
    const std::string at = " (record " + std::to_string(record_index_) + ")";
    if (head.empty() || head[0] != '@') throw MalformedFastq("expected '@' header" + at);
    if (!read_line(in_, seq)) throw MalformedFastq("truncated record, missing sequence line" + at);
    if (!read_line(in_, plus) || plus.empty() || plus[0] != '+') {
        throw MalformedFastq("truncated record, missing '+' line" + at);
    }
    if (!read_line(in_, qual)) throw MalformedFastq("truncated record, missing quality line" + at);
    if (seq.size() != qual.size()) {
        throw MalformedFastq("sequence/quality length mismatch" + at);
    }

    out.id = head.substr(1, head.find_first_of(" \t") == std::string::npos
                                ? std::string::npos
                                : head.find_first_of(" \t") - 1);
    if (out.id.empty()) throw MalformedFastq("empty read id" + at);
    for (char& c : seq) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (!valid_base(c)) throw MalformedFastq(std::string("illegal base '") + c + "'" + at);
    }
    out.sequence = std::move(seq);
    out.quality = std::move(qual);
    out.mate = Mate::none;
    ++record_index_;
    return true;
}

std::vector<ReadRecord> parse_fastq(std::istream& in) {
    FastqReader reader(in);
    std::vector<ReadRecord> reads;
    ReadRecord rec;
    while (reader.next(rec)) reads.push_back(std::move(rec));
    return reads;
}

void write_fasta(std::ostream& out, const std::string& name, const std::string& sequence) {
    constexpr std::size_t kWrap = 80;
    out << '>' << name << '\n';
    for (std::size_t i = 0; i < sequence.size(); i += kWrap) {
        out.write(sequence.data() + i, static_cast<std::streamsize>(std::min(kWrap, sequence.size() - i)));
        out.put('\n');
    }
}

void write_fastq(std::ostream& out, std::span<const ReadRecord> reads) {
    for (const auto& r : reads) {
        out << '@' << r.id << '\n' << r.sequence << "\n+\n" << r.quality << '\n';
    }
}

void write_sam(std::ostream& out, std::span<const SamRecord> records, const SamHeaderSegments& header_segments) {
    out << "@HD\tVN:1.6\n";
    for (const auto& [name, len] : header_segments) {
        out << "@SQ\tSN:" << name << "\tLN:" << len << '\n';
    }
    for (const auto& r : records) {
        out << r.qname << '\t' << r.flag << '\t' << r.rname << '\t' << r.pos << '\t' << r.mapq << '\t'
            << r.cigar << "\t*\t0\t0\t" << r.seq << '\t' << r.qual;
        if (r.score) out << "\tAS:i:" << *r.score;
        out << '\n';
    }
}

std::string write_sam(std::span<const SamRecord> records, const SamHeaderSegments& header_segments) {
    std::ostringstream out;
    write_sam(out, records, header_segments);
    return out.str();
}

std::vector<SamRecord> parse_sam(std::istream& in) {
    std::vector<SamRecord> records;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '@') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() < 11) {
            throw MalformedSam("line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                               " fields, expected >= 11");
        }
        SamRecord rec;
        rec.qname = fields[0];
        auto parse_int = [&](const std::string& s, const char* what) -> std::int64_t {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) {
                throw MalformedSam("line " + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
            }
            return v;
        };
        rec.flag = static_cast<int>(parse_int(fields[1], "flag"));
        rec.rname = fields[2];
        rec.pos = parse_int(fields[3], "pos");
        rec.mapq = static_cast<int>(parse_int(fields[4], "mapq"));
        rec.cigar = fields[5];
        rec.seq = fields[9];
        rec.qual = fields[10];
        for (std::size_t i = 11; i < fields.size(); ++i) {
            if (fields[i].rfind("AS:i:", 0) == 0) {
                rec.score = static_cast<int>(parse_int(fields[i].substr(5), "AS tag"));
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace hysec::seqio
