#pragma once

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affrank/errors.hpp"
#include "affrank/records.hpp"

namespace affrank {

/// Which way the citation BFS walks: a paper's reference list (out), the
/// papers citing it (in), or both.
enum class BfsDirection { out, in, both };

inline BfsDirection bfs_direction_from_string(const std::string& s) {
    if (s == "out") return BfsDirection::out;
    if (s == "in") return BfsDirection::in;
    if (s == "both") return BfsDirection::both;
    throw config_error("unknown BFS direction '" + s + "' (expected out, in, or both)");
}

inline const char* to_string(BfsDirection d) {
    switch (d) {
        case BfsDirection::out: return "out";
        case BfsDirection::in: return "in";
        default: return "both";
    }
}

/// Raw record streams before sampling, as parsed from a dump.
struct RawTables {
    std::vector<PaperRecord> papers;
    std::vector<AuthorshipLink> authorships;
    std::vector<CitationEdge> citations;
    std::vector<KeywordRecord> keywords;
    SkipCounters skips;
};

/// Builds the working corpus:
///   1. seed papers: papers at `target_conferences` within [seed_year_lo, seed_year_hi];
///   2. every other paper written since `author_floor_year` by an author of a seed paper;
///   3. papers reachable from (1)+(2) within `bfs_depth` citation hops, following
///      `direction` edges; frontier order is deterministic (sorted ids per level).
/// Keywords, authorships, and reference edges of all sampled papers come along;
/// degrees are computed over the sampled set.
inline CorpusSnapshot sample_corpus(const RawTables& raw,
                                    const std::set<std::string>& target_conferences,
                                    int seed_year_lo, int seed_year_hi,
                                    int author_floor_year, int bfs_depth,
                                    BfsDirection direction = BfsDirection::out) {
    if (bfs_depth < 0) throw config_error("bfs_depth must be >= 0");
    if (seed_year_lo > seed_year_hi)
        throw config_error("seed year range is empty");
    if (seed_year_lo < author_floor_year)
        throw config_error("seed year range must lie within [author_floor_year, hi]");

    SkipCounters skips = raw.skips;

    // First occurrence wins for duplicated paper ids.
    std::map<std::string, const PaperRecord*> by_id;
    for (const auto& p : raw.papers) {
        if (!by_id.emplace(p.paper_id, &p).second) skips.duplicate_records += 1;
    }

    std::set<std::string> members;
    for (const auto& [id, p] : by_id) {
        if (p->year >= seed_year_lo && p->year <= seed_year_hi &&
            !p->conference_series_id.empty() && target_conferences.count(p->conference_series_id))
            members.insert(id);
    }
    if (members.empty()) throw data_error("no seed papers: check conference ids and seed year range");

    // Author expansion: all other papers by seed authors since the floor year.
    std::set<std::string> seed_authors;
    for (const auto& link : raw.authorships)
        if (members.count(link.paper_id)) seed_authors.insert(link.author_id);
    std::map<std::string, std::vector<std::string>> papers_of_author;
    for (const auto& link : raw.authorships)
        if (seed_authors.count(link.author_id)) papers_of_author[link.author_id].push_back(link.paper_id);
    for (const auto& [author, papers] : papers_of_author) {
        for (const auto& pid : papers) {
            auto it = by_id.find(pid);
            if (it != by_id.end() && it->second->year >= author_floor_year) members.insert(pid);
        }
    }

    // Citation BFS from the current member set.
    std::map<std::string, std::vector<std::string>> forward, backward;
    for (const auto& e : raw.citations) {
        if (e.citing_paper_id == e.cited_paper_id) continue;
        if (direction == BfsDirection::out || direction == BfsDirection::both)
            forward[e.citing_paper_id].push_back(e.cited_paper_id);
        if (direction == BfsDirection::in || direction == BfsDirection::both)
            backward[e.cited_paper_id].push_back(e.citing_paper_id);
    }
    std::set<std::string> frontier = members;
    for (int hop = 0; hop < bfs_depth && !frontier.empty(); ++hop) {
        std::set<std::string> next;
        for (const auto& id : frontier) {
            auto visit = [&](const std::map<std::string, std::vector<std::string>>& adj) {
                auto it = adj.find(id);
                if (it == adj.end()) return;
                for (const auto& nb : it->second) {
                    if (members.count(nb) || !by_id.count(nb)) continue; // unknown ids stay dangling
                    next.insert(nb);
                }
            };
            visit(forward);
            visit(backward);
        }
        for (const auto& id : next) members.insert(id);
        frontier = std::move(next);
    }

    CorpusSnapshot snap;
    for (const auto& id : members) snap.papers.push_back(*by_id.at(id));
    for (const auto& link : raw.authorships)
        if (members.count(link.paper_id)) snap.authorships.push_back(link);
    for (const auto& e : raw.citations)
        if (members.count(e.citing_paper_id)) snap.citations.push_back(e);
    for (const auto& kw : raw.keywords)
        if (members.count(kw.paper_id)) snap.keywords.push_back(kw);

    snap.params.target_conferences.assign(target_conferences.begin(), target_conferences.end());
    snap.params.seed_year_lo = seed_year_lo;
    snap.params.seed_year_hi = seed_year_hi;
    snap.params.author_floor_year = author_floor_year;
    snap.params.bfs_depth = bfs_depth;
    snap.params.direction = to_string(direction);
    snap.skips = skips;
    snap.canonicalize();
    return snap;
}

} // namespace affrank
