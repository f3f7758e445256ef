#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "affrank/forecast.hpp"
#include "affrank/records.hpp"

namespace affrank {

/// Citation and authorship lookups backing the author-impact-factor features.
/// Built once per snapshot; immutable afterwards.
class AifContext {
public:
    /// Publication window length in years; AIF(t) looks at papers from
    /// [t - window, t - 1]. Two years mirrors the journal impact-factor
    /// convention the measure mimics.
    explicit AifContext(const CorpusSnapshot& snapshot, int publication_window = 2)
        : window_(publication_window) {
        if (publication_window < 1) throw config_error("AIF publication window must be >= 1");
        for (const auto& p : snapshot.papers) year_of_paper_[p.paper_id] = p.year;
        for (const auto& link : snapshot.authorships) {
            auto it = year_of_paper_.find(link.paper_id);
            if (it == year_of_paper_.end()) continue;
            papers_of_author_[link.author_id].emplace(link.paper_id, it->second);
            if (!link.affiliation_id.empty()) {
                const auto* paper = snapshot.find_paper(link.paper_id);
                if (paper && !paper->conference_series_id.empty())
                    authors_of_pair_[{paper->conference_series_id, link.affiliation_id}]
                        .emplace(link.author_id, paper->year);
            }
        }
        for (const auto& e : snapshot.citations) {
            auto citing = year_of_paper_.find(e.citing_paper_id);
            if (citing == year_of_paper_.end()) continue;
            if (!year_of_paper_.count(e.cited_paper_id)) continue;
            citations_into_[e.cited_paper_id].push_back(citing->second);
        }
        if (!snapshot.papers.empty()) {
            min_year_ = snapshot.papers.front().year;
            max_year_ = min_year_;
            for (const auto& p : snapshot.papers) {
                min_year_ = std::min(min_year_, p.year);
                max_year_ = std::max(max_year_, p.year);
            }
        }
    }

    int publication_window() const { return window_; }
    int min_year() const { return min_year_; }

    /// AIF of one author in year t: citations received in year t by the
    /// author's papers published inside the window, divided by the number of
    /// such papers. No papers in the window means the value is undefined.
    std::optional<double> author_aif(const std::string& author, int year) const {
        auto it = papers_of_author_.find(author);
        if (it == papers_of_author_.end()) return std::nullopt;
        long long papers_in_window = 0;
        long long citations_in_year = 0;
        for (const auto& [paper_id, pub_year] : it->second) {
            if (pub_year < year - window_ || pub_year > year - 1) continue;
            papers_in_window += 1;
            auto cit = citations_into_.find(paper_id);
            if (cit == citations_into_.end()) continue;
            for (int citing_year : cit->second)
                if (citing_year == year) citations_in_year += 1;
        }
        if (papers_in_window == 0) return std::nullopt;
        return static_cast<double>(citations_in_year) / static_cast<double>(papers_in_window);
    }

    /// Authors who published for `affiliation` at `conference` strictly before
    /// `before_year` (in-corpus papers only).
    std::set<std::string> pair_authors(const std::string& conference, const std::string& affiliation,
                                       int before_year) const {
        std::set<std::string> out;
        auto it = authors_of_pair_.find({conference, affiliation});
        if (it == authors_of_pair_.end()) return out;
        for (const auto& [author, year] : it->second)
            if (year < before_year) out.insert(author);
        return out;
    }

private:
    int window_;
    int min_year_ = 0;
    int max_year_ = 0;
    std::map<std::string, int> year_of_paper_;
    std::map<std::string, std::set<std::pair<std::string, int>>> papers_of_author_;
    std::map<std::pair<std::string, std::string>, std::set<std::pair<std::string, int>>> authors_of_pair_;
    std::map<std::string, std::vector<int>> citations_into_;
};

struct AifStats {
    SeriesStats stats;
    bool any_defined = false; // false means the stats are the imputed zeros
};

/// Pooled AIF statistics for one (conference, affiliation) pair at a target
/// year: every defined AIF value of the pair's past authors, across all years
/// from the corpus start up to the year before the target.
inline AifStats aif_stats(const AifContext& ctx, const std::string& conference,
                          const std::string& affiliation, int target_year) {
    std::vector<double> values;
    for (const auto& author : ctx.pair_authors(conference, affiliation, target_year)) {
        for (int year = ctx.min_year() + 1; year < target_year; ++year) {
            auto aif = ctx.author_aif(author, year);
            if (aif) values.push_back(*aif);
        }
    }
    AifStats out;
    if (values.empty()) return out; // zeros with the flag down
    out.stats = series_stats(values);
    out.any_defined = true;
    return out;
}

} // namespace affrank
