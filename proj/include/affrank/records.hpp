#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "affrank/errors.hpp"

namespace affrank {

struct PaperRecord {
    std::string paper_id;
    int year = 0;
    std::string conference_series_id; // empty = not a conference paper
    bool is_full_research = false;

    friend bool operator==(const PaperRecord&, const PaperRecord&) = default;
    friend auto operator<=>(const PaperRecord& a, const PaperRecord& b) {
        return std::tie(a.paper_id, a.year, a.conference_series_id, a.is_full_research) <=>
               std::tie(b.paper_id, b.year, b.conference_series_id, b.is_full_research);
    }
};

struct AuthorshipLink {
    std::string paper_id;
    std::string author_id;
    std::string affiliation_id; // empty = author listed without affiliation
    int author_sequence = 1;

    friend bool operator==(const AuthorshipLink&, const AuthorshipLink&) = default;
    friend auto operator<=>(const AuthorshipLink& a, const AuthorshipLink& b) {
        return std::tie(a.paper_id, a.author_id, a.affiliation_id, a.author_sequence) <=>
               std::tie(b.paper_id, b.author_id, b.affiliation_id, b.author_sequence);
    }
};

struct CitationEdge {
    std::string citing_paper_id;
    std::string cited_paper_id;

    friend bool operator==(const CitationEdge&, const CitationEdge&) = default;
    friend auto operator<=>(const CitationEdge& a, const CitationEdge& b) {
        return std::tie(a.citing_paper_id, a.cited_paper_id) <=>
               std::tie(b.citing_paper_id, b.cited_paper_id);
    }
};

struct KeywordRecord {
    std::string paper_id;
    std::string keyword; // normalized lowercase

    friend bool operator==(const KeywordRecord&, const KeywordRecord&) = default;
    friend auto operator<=>(const KeywordRecord& a, const KeywordRecord& b) {
        return std::tie(a.paper_id, a.keyword) <=> std::tie(b.paper_id, b.keyword);
    }
};

struct Degree {
    int in = 0;
    int out = 0;
    friend bool operator==(const Degree&, const Degree&) = default;
};

/// In/out degrees over the edge set restricted to `members`: an edge counts
/// only when both endpoints are member papers. Members with no edges get (0,0).
/// Duplicate edges in the input are counted once.
inline std::map<std::string, Degree> compute_degrees(std::span<const CitationEdge> citations,
                                                     const std::set<std::string>& members) {
    std::map<std::string, Degree> degrees;
    for (const auto& id : members) degrees[id]; // zero-init every member
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& e : citations) {
        if (!members.count(e.citing_paper_id) || !members.count(e.cited_paper_id)) continue;
        if (!seen.emplace(e.citing_paper_id, e.cited_paper_id).second) continue;
        degrees[e.citing_paper_id].out += 1;
        degrees[e.cited_paper_id].in += 1;
    }
    return degrees;
}

/// Parameters echoed into a snapshot so the manifest records how it was built.
struct SampleParams {
    std::vector<std::string> target_conferences;
    int seed_year_lo = 0;
    int seed_year_hi = 0;
    int author_floor_year = 0;
    int bfs_depth = 0;
    std::string direction = "out"; // out | in | both
};

struct SkipCounters {
    long long malformed_lines = 0;
    long long bad_values = 0;      // unparseable year/sequence, out-of-range year
    long long duplicate_records = 0;

    long long total() const { return malformed_lines + bad_values + duplicate_records; }
    friend bool operator==(const SkipCounters&, const SkipCounters&) = default;
};

/// An immutable sampled slice of the academic graph. Record vectors are kept
/// sorted and deduplicated, so two snapshots with the same content compare equal.
/// Citation edges whose cited paper is outside the snapshot are kept (they
/// record the reference list) but never contribute to degrees.
struct CorpusSnapshot {
    std::vector<PaperRecord> papers;
    std::vector<AuthorshipLink> authorships;
    std::vector<CitationEdge> citations;
    std::vector<KeywordRecord> keywords;
    std::map<std::string, Degree> degrees;
    SampleParams params;
    SkipCounters skips;

    bool contains(const std::string& paper_id) const {
        auto it = std::lower_bound(papers.begin(), papers.end(), paper_id,
                                   [](const PaperRecord& p, const std::string& id) { return p.paper_id < id; });
        return it != papers.end() && it->paper_id == paper_id;
    }

    const PaperRecord* find_paper(const std::string& paper_id) const {
        auto it = std::lower_bound(papers.begin(), papers.end(), paper_id,
                                   [](const PaperRecord& p, const std::string& id) { return p.paper_id < id; });
        if (it != papers.end() && it->paper_id == paper_id) return &*it;
        return nullptr;
    }

    std::set<std::string> member_ids() const {
        std::set<std::string> ids;
        for (const auto& p : papers) ids.insert(p.paper_id);
        return ids;
    }

    long long dangling_citations() const {
        long long n = 0;
        for (const auto& e : citations)
            if (!contains(e.cited_paper_id) || !contains(e.citing_paper_id)) ++n;
        return n;
    }

    /// Sort, deduplicate, and recompute degrees. Call after mutating the record
    /// vectors; every constructor path in the library already does.
    void canonicalize() {
        // Stable sorts keyed on the dedup key: the first input occurrence of a
        // duplicated record wins, matching the ingest-time dedup rule.
        std::stable_sort(papers.begin(), papers.end(),
                         [](const PaperRecord& a, const PaperRecord& b) { return a.paper_id < b.paper_id; });
        papers.erase(std::unique(papers.begin(), papers.end(),
                                 [](const PaperRecord& a, const PaperRecord& b) { return a.paper_id == b.paper_id; }),
                     papers.end());
        auto authorship_key = [](const AuthorshipLink& a) {
            return std::tie(a.paper_id, a.author_id, a.affiliation_id);
        };
        std::stable_sort(authorships.begin(), authorships.end(),
                         [&](const AuthorshipLink& a, const AuthorshipLink& b) {
                             return authorship_key(a) < authorship_key(b);
                         });
        authorships.erase(std::unique(authorships.begin(), authorships.end(),
                                      [&](const AuthorshipLink& a, const AuthorshipLink& b) {
                                          return authorship_key(a) == authorship_key(b);
                                      }),
                          authorships.end());
        std::erase_if(citations, [](const CitationEdge& e) { return e.citing_paper_id == e.cited_paper_id; });
        std::sort(citations.begin(), citations.end());
        citations.erase(std::unique(citations.begin(), citations.end()), citations.end());
        std::sort(keywords.begin(), keywords.end());
        keywords.erase(std::unique(keywords.begin(), keywords.end()), keywords.end());
        degrees = compute_degrees(citations, member_ids());
    }

    /// Content equality: records and degrees, ignoring the parameter echo.
    bool same_content(const CorpusSnapshot& other) const {
        return papers == other.papers && authorships == other.authorships &&
               citations == other.citations && keywords == other.keywords && degrees == other.degrees;
    }
};

} // namespace affrank
