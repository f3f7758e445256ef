#pragma once

#include <chrono>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "affrank/errors.hpp"
#include "affrank/records.hpp"
#include "affrank/strings.hpp"

namespace affrank {

/// Reads a whole file into memory, transparently inflating gzip content
/// (detected by the 1f 8b magic, not the extension).
inline std::string read_file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < 2 || static_cast<unsigned char>(raw[0]) != 0x1f ||
        static_cast<unsigned char>(raw[1]) != 0x8b) {
        return raw;
    }
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw data_error("zlib init failed for: " + path);
    std::string out;
    std::vector<char> buf(1 << 16);
    zs.next_in = reinterpret_cast<Bytef*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf.data());
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw data_error("gzip decompression failed for: " + path);
        }
        out.append(buf.data(), buf.size() - zs.avail_out);
    }
    inflateEnd(&zs);
    return out;
}

/// Calls `fn` for every line of `path` (plain or gzip). Handles LF and CRLF;
/// a trailing newline does not produce an empty final line.
inline void for_each_line(const std::string& path, const std::function<void(std::string_view)>& fn) {
    std::string text = read_file_text(path);
    size_t start = 0;
    while (start < text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        size_t len = end - start;
        if (len > 0 && text[start + len - 1] == '\r') --len;
        fn(std::string_view(text).substr(start, len));
        start = end + 1;
    }
}

inline int current_calendar_year() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return tm.tm_year + 1900;
}

/// Column positions inside a tab-separated dump. -1 marks an absent optional
/// column. Defaults follow the MAG file layouts; dumps that differ supply
/// their own mapping (never hard-code positions downstream).
struct TableSchema {
    char delimiter = '\t';
    bool has_header = false;

    struct Papers {
        int paper_id = 0;
        int year = 3;
        int conference_series_id = 9;
        int is_full_research = -1; // usually supplied by a flag file instead
    } papers;
    struct Authorships {
        int paper_id = 0;
        int author_id = 1;
        int affiliation_id = 2;
        int author_sequence = 5;
    } authorships;
    struct Citations {
        int citing_paper_id = 0;
        int cited_paper_id = 1;
    } citations;
    struct Keywords {
        int paper_id = 0;
        int keyword = 1;
    } keywords;
};

namespace detail {

inline std::string_view field(const std::vector<std::string_view>& cols, int idx, const char* table) {
    if (idx < 0 || static_cast<size_t>(idx) >= cols.size())
        throw config_error(std::string("schema column index ") + std::to_string(idx) +
                           " out of range for " + table + " row with " + std::to_string(cols.size()) +
                           " columns");
    return cols[idx];
}

inline bool truthy_flag(std::string_view s) {
    return s == "1" || s == "true" || s == "True" || s == "TRUE";
}

} // namespace detail

template <typename T>
struct ParseResult {
    std::vector<T> records;
    SkipCounters skips;
};

/// Papers table. Rows with an unparseable or out-of-range year are skipped and
/// counted, never fatal. A missing conference column leaves the series id empty.
inline ParseResult<PaperRecord> parse_papers(const std::string& path, const TableSchema& schema) {
    ParseResult<PaperRecord> result;
    const int max_year = current_calendar_year() + 1;
    bool first = true;
    for_each_line(path, [&](std::string_view line) {
        if (first && schema.has_header) { first = false; return; }
        first = false;
        if (line.empty()) return;
        auto cols = split(line, schema.delimiter);
        PaperRecord rec;
        rec.paper_id = std::string(detail::field(cols, schema.papers.paper_id, "papers"));
        auto year = parse_int(detail::field(cols, schema.papers.year, "papers"));
        if (!year || *year < 1800 || *year > max_year) {
            result.skips.bad_values += 1;
            return;
        }
        rec.year = static_cast<int>(*year);
        if (schema.papers.conference_series_id >= 0 &&
            static_cast<size_t>(schema.papers.conference_series_id) < cols.size())
            rec.conference_series_id = std::string(trim(cols[schema.papers.conference_series_id]));
        if (schema.papers.is_full_research >= 0 &&
            static_cast<size_t>(schema.papers.is_full_research) < cols.size())
            rec.is_full_research = detail::truthy_flag(trim(cols[schema.papers.is_full_research]));
        if (rec.paper_id.empty()) {
            result.skips.malformed_lines += 1;
            return;
        }
        result.records.push_back(std::move(rec));
    });
    return result;
}

inline ParseResult<AuthorshipLink> parse_authorships(const std::string& path, const TableSchema& schema) {
    ParseResult<AuthorshipLink> result;
    bool first = true;
    for_each_line(path, [&](std::string_view line) {
        if (first && schema.has_header) { first = false; return; }
        first = false;
        if (line.empty()) return;
        auto cols = split(line, schema.delimiter);
        AuthorshipLink rec;
        rec.paper_id = std::string(detail::field(cols, schema.authorships.paper_id, "authorships"));
        rec.author_id = std::string(detail::field(cols, schema.authorships.author_id, "authorships"));
        if (schema.authorships.affiliation_id >= 0 &&
            static_cast<size_t>(schema.authorships.affiliation_id) < cols.size())
            rec.affiliation_id = std::string(trim(cols[schema.authorships.affiliation_id]));
        if (schema.authorships.author_sequence >= 0 &&
            static_cast<size_t>(schema.authorships.author_sequence) < cols.size()) {
            auto seq = parse_int(cols[schema.authorships.author_sequence]);
            if (!seq || *seq < 1) {
                result.skips.bad_values += 1;
                return;
            }
            rec.author_sequence = static_cast<int>(*seq);
        }
        if (rec.paper_id.empty() || rec.author_id.empty()) {
            result.skips.malformed_lines += 1;
            return;
        }
        result.records.push_back(std::move(rec));
    });
    return result;
}

inline ParseResult<CitationEdge> parse_citations(const std::string& path, const TableSchema& schema) {
    ParseResult<CitationEdge> result;
    bool first = true;
    for_each_line(path, [&](std::string_view line) {
        if (first && schema.has_header) { first = false; return; }
        first = false;
        if (line.empty()) return;
        auto cols = split(line, schema.delimiter);
        CitationEdge rec;
        rec.citing_paper_id = std::string(detail::field(cols, schema.citations.citing_paper_id, "citations"));
        rec.cited_paper_id = std::string(detail::field(cols, schema.citations.cited_paper_id, "citations"));
        if (rec.citing_paper_id.empty() || rec.cited_paper_id.empty()) {
            result.skips.malformed_lines += 1;
            return;
        }
        if (rec.citing_paper_id == rec.cited_paper_id) {
            result.skips.bad_values += 1; // self-citation
            return;
        }
        result.records.push_back(std::move(rec));
    });
    return result;
}

inline ParseResult<KeywordRecord> parse_keywords(const std::string& path, const TableSchema& schema) {
    ParseResult<KeywordRecord> result;
    bool first = true;
    for_each_line(path, [&](std::string_view line) {
        if (first && schema.has_header) { first = false; return; }
        first = false;
        if (line.empty()) return;
        auto cols = split(line, schema.delimiter);
        KeywordRecord rec;
        rec.paper_id = std::string(detail::field(cols, schema.keywords.paper_id, "keywords"));
        rec.keyword = normalize_keyword(detail::field(cols, schema.keywords.keyword, "keywords"));
        if (rec.paper_id.empty() || rec.keyword.empty()) {
            result.skips.malformed_lines += 1;
            return;
        }
        result.records.push_back(std::move(rec));
    });
    return result;
}

/// Flag file: one paper id per line, UTF-8, LF terminated.
inline std::set<std::string> parse_flag_file(const std::string& path) {
    std::set<std::string> ids;
    for_each_line(path, [&](std::string_view line) {
        auto id = trim(line);
        if (!id.empty()) ids.insert(std::string(id));
    });
    return ids;
}

} // namespace affrank
