#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affrank/errors.hpp"
#include "affrank/records.hpp"
#include "affrank/relevance.hpp"
#include "affrank/strings.hpp"

namespace affrank {

/// Author and keyword fingerprints of one conference series, built from the
/// in-corpus papers of that series inside a year range.
struct ConferenceProfile {
    std::string conference;
    std::set<std::string> authors;
    std::set<std::string> keywords;
};

enum class SimilarityBasis { authors, keywords, rank_fusion };

inline SimilarityBasis similarity_basis_from_string(const std::string& s) {
    if (s == "authors") return SimilarityBasis::authors;
    if (s == "keywords") return SimilarityBasis::keywords;
    if (s == "rank-fusion" || s == "rank_fusion") return SimilarityBasis::rank_fusion;
    throw config_error("unknown similarity basis: " + s);
}

inline std::string to_string(SimilarityBasis b) {
    switch (b) {
        case SimilarityBasis::authors: return "authors";
        case SimilarityBasis::keywords: return "keywords";
        case SimilarityBasis::rank_fusion: return "rank-fusion";
    }
    return "authors";
}

/// |a ∩ b| / |a ∪ b|; two empty sets score 0 by convention.
inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else { ++inter; ++ia; ++ib; }
    }
    const size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline size_t jaccard_union_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    return a.size() + b.size() - inter;
}

struct ProfileOptions {
    int year_lo = std::numeric_limits<int>::min();
    int year_hi = std::numeric_limits<int>::max();
    PaperFilter filter = PaperFilter::all_papers;
    size_t min_profile_size = 0; // drop conferences with fewer authors (0 = keep all)
};

/// One profile per conference series present in the snapshot; papers outside
/// the year range or excluded by the filter contribute nothing.
inline std::map<std::string, ConferenceProfile> build_profiles(const CorpusSnapshot& snapshot,
                                                               const ProfileOptions& opts = {}) {
    std::map<std::string, ConferenceProfile> profiles;
    std::map<std::string, const PaperRecord*> paper_by_id;
    for (const auto& p : snapshot.papers) paper_by_id.emplace(p.paper_id, &p);

    auto series_of = [&](const std::string& paper_id) -> const PaperRecord* {
        auto it = paper_by_id.find(paper_id);
        if (it == paper_by_id.end()) return nullptr;
        const PaperRecord* p = it->second;
        if (p->conference_series_id.empty()) return nullptr;
        if (p->year < opts.year_lo || p->year > opts.year_hi) return nullptr;
        if (opts.filter == PaperFilter::full_research_only && !p->is_full_research) return nullptr;
        return p;
    };

    for (const auto& link : snapshot.authorships) {
        if (const PaperRecord* p = series_of(link.paper_id)) {
            auto& prof = profiles[p->conference_series_id];
            prof.conference = p->conference_series_id;
            prof.authors.insert(link.author_id);
        }
    }
    for (const auto& kw : snapshot.keywords) {
        if (const PaperRecord* p = series_of(kw.paper_id)) {
            auto& prof = profiles[p->conference_series_id];
            prof.conference = p->conference_series_id;
            prof.keywords.insert(kw.keyword);
        }
    }
    if (opts.min_profile_size > 0) {
        std::erase_if(profiles,
                      [&](const auto& kv) { return kv.second.authors.size() < opts.min_profile_size; });
    }
    return profiles;
}

struct RelatedConference {
    std::string conference;
    double score = 0.0;
    size_t rank = 0; // 1-based
};

namespace detail {

inline std::vector<RelatedConference> rank_by_basis(
    const std::string& target, const std::map<std::string, ConferenceProfile>& profiles,
    bool by_keywords) {
    const ConferenceProfile& t = profiles.at(target);
    const auto& target_set = by_keywords ? t.keywords : t.authors;

    struct Candidate {
        double score;
        size_t union_size;
        const std::string* id;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(profiles.size());
    for (const auto& [id, prof] : profiles) {
        if (id == target) continue;
        const auto& set = by_keywords ? prof.keywords : prof.authors;
        candidates.push_back({jaccard(target_set, set), jaccard_union_size(target_set, set), &id});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.union_size != b.union_size) return a.union_size > b.union_size;
        return *a.id < *b.id;
    });

    std::vector<RelatedConference> out;
    out.reserve(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i)
        out.push_back({*candidates[i].id, candidates[i].score, i + 1});
    return out;
}

} // namespace detail

/// Top-k most similar conferences to `target`, never including the target.
/// Per-basis ties break by descending union size then lexicographic id; the
/// rank-fusion basis averages reciprocal ranks of the two per-basis orderings
/// (which are already unique), remaining ties by id.
inline std::vector<RelatedConference> related_conferences(
    const std::string& target, const std::map<std::string, ConferenceProfile>& profiles, size_t k,
    SimilarityBasis basis = SimilarityBasis::authors) {
    if (!profiles.count(target)) throw data_error("no profile for conference: " + target);
    if (k == 0) return {};

    std::vector<RelatedConference> ranked;
    if (basis == SimilarityBasis::rank_fusion) {
        const auto by_authors = detail::rank_by_basis(target, profiles, false);
        const auto by_keywords = detail::rank_by_basis(target, profiles, true);
        std::map<std::string, double> fused;
        for (const auto& r : by_authors) fused[r.conference] += 0.5 / static_cast<double>(r.rank);
        for (const auto& r : by_keywords) fused[r.conference] += 0.5 / static_cast<double>(r.rank);
        for (const auto& [id, score] : fused) ranked.push_back({id, score, 0});
        std::sort(ranked.begin(), ranked.end(), [](const RelatedConference& a, const RelatedConference& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.conference < b.conference;
        });
        for (size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
    } else {
        ranked = detail::rank_by_basis(target, profiles, basis == SimilarityBasis::keywords);
    }

    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

/// Report rows: target, neighbor, basis, score, rank.
inline void write_related_report(const std::string& path, const std::string& target,
                                 SimilarityBasis basis, const std::vector<RelatedConference>& related) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write similarity report: " + path);
    out << "target\tneighbor\tbasis\tscore\trank\n";
    for (const auto& r : related)
        out << target << '\t' << r.conference << '\t' << to_string(basis) << '\t'
            << format_double(r.score) << '\t' << r.rank << '\n';
}

} // namespace affrank
