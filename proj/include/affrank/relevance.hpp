#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "affrank/errors.hpp"
#include "affrank/records.hpp"
#include "affrank/strings.hpp"

namespace affrank {

enum class PaperFilter { full_research_only, all_papers };

inline PaperFilter paper_filter_from_string(const std::string& s) {
    if (s == "full" || s == "full_research_only") return PaperFilter::full_research_only;
    if (s == "all" || s == "all_papers") return PaperFilter::all_papers;
    throw config_error("unknown paper filter '" + s + "' (expected full or all)");
}

inline const char* to_string(PaperFilter f) {
    return f == PaperFilter::full_research_only ? "full_research_only" : "all_papers";
}

/// How one paper's unit score splits across affiliations: each distinct author
/// gets 1/|authors|, and each author's mass splits equally over that author's
/// distinct affiliations on the paper. Mass of authors listed without any
/// affiliation is dropped and reported as the deficit.
struct PaperShares {
    std::map<std::string, double> shares; // affiliation -> fraction
    double deficit = 0.0;                 // unaffiliated mass, shares sum to 1 - deficit
};

inline PaperShares paper_affiliation_shares(std::span<const AuthorshipLink> links) {
    if (links.empty()) throw data_error("unattributable paper: no authorship links");
    // author -> distinct affiliations (duplicates collapse before splitting)
    std::map<std::string, std::set<std::string>> affils_of_author;
    for (const auto& link : links) {
        auto& affils = affils_of_author[link.author_id];
        if (!link.affiliation_id.empty()) affils.insert(link.affiliation_id);
    }
    PaperShares result;
    const double author_mass = 1.0 / static_cast<double>(affils_of_author.size());
    for (const auto& [author, affils] : affils_of_author) {
        if (affils.empty()) {
            result.deficit += author_mass;
            continue;
        }
        const double per_affiliation = author_mass / static_cast<double>(affils.size());
        for (const auto& a : affils) result.shares[a] += per_affiliation;
    }
    return result;
}

/// Dense (conference x affiliation x year) grid of fractional relevance scores
/// and whole-paper counts. Every combination is present; absent ones are zero.
class RelevancePanel {
public:
    RelevancePanel() = default;
    RelevancePanel(std::vector<std::string> conferences, std::vector<std::string> affiliations,
                   int first_year, int last_year, PaperFilter filter)
        : conferences_(std::move(conferences)),
          affiliations_(std::move(affiliations)),
          first_year_(first_year),
          last_year_(last_year),
          filter_(filter) {
        if (conferences_.empty()) throw config_error("panel needs at least one conference");
        if (first_year_ > last_year_) throw config_error("panel year range is empty");
        std::sort(affiliations_.begin(), affiliations_.end());
        affiliations_.erase(std::unique(affiliations_.begin(), affiliations_.end()), affiliations_.end());
        for (size_t i = 0; i < conferences_.size(); ++i) {
            if (!conference_index_.emplace(conferences_[i], i).second)
                throw config_error("duplicate conference in panel: " + conferences_[i]);
        }
        for (size_t i = 0; i < affiliations_.size(); ++i) affiliation_index_.emplace(affiliations_[i], i);
        relevance_.assign(cell_count(), 0.0);
        paper_count_.assign(cell_count(), 0);
        deficit_.assign(conferences_.size() * static_cast<size_t>(year_count()), 0.0);
    }

    const std::vector<std::string>& conferences() const { return conferences_; }
    const std::vector<std::string>& affiliations() const { return affiliations_; }
    int first_year() const { return first_year_; }
    int last_year() const { return last_year_; }
    int year_count() const { return last_year_ - first_year_ + 1; }
    PaperFilter filter() const { return filter_; }

    bool has_conference(const std::string& c) const { return conference_index_.count(c) > 0; }
    bool has_affiliation(const std::string& a) const { return affiliation_index_.count(a) > 0; }
    bool has_year(int y) const { return y >= first_year_ && y <= last_year_; }

    size_t conference_index(const std::string& c) const {
        auto it = conference_index_.find(c);
        if (it == conference_index_.end()) throw data_error("conference not in panel: " + c);
        return it->second;
    }
    size_t affiliation_index(const std::string& a) const {
        auto it = affiliation_index_.find(a);
        if (it == affiliation_index_.end()) throw data_error("affiliation not in panel: " + a);
        return it->second;
    }

    double relevance(size_t c, size_t a, int year) const { return relevance_[index(c, a, year)]; }
    int paper_count(size_t c, size_t a, int year) const { return paper_count_[index(c, a, year)]; }
    double relevance(const std::string& c, const std::string& a, int year) const {
        return relevance(conference_index(c), affiliation_index(a), year);
    }

    void add_relevance(size_t c, size_t a, int year, double value) { relevance_[index(c, a, year)] += value; }
    void add_paper_count(size_t c, size_t a, int year, int n) { paper_count_[index(c, a, year)] += n; }
    void add_deficit(size_t c, int year, double value) {
        deficit_[c * static_cast<size_t>(year_count()) + year_offset(year)] += value;
    }
    double deficit(size_t c, int year) const {
        return deficit_[c * static_cast<size_t>(year_count()) + year_offset(year)];
    }

    /// Relevance history for (conference, affiliation) over [from_year, to_year],
    /// oldest first. Years are clamped to the panel range by the caller.
    std::vector<double> series(size_t c, size_t a, int from_year, int to_year) const {
        std::vector<double> out;
        for (int y = from_year; y <= to_year; ++y) out.push_back(relevance(c, a, y));
        return out;
    }

private:
    size_t year_offset(int year) const {
        if (!has_year(year)) throw data_error("year " + std::to_string(year) + " outside panel range");
        return static_cast<size_t>(year - first_year_);
    }
    size_t index(size_t c, size_t a, int year) const {
        return (c * affiliations_.size() + a) * static_cast<size_t>(year_count()) + year_offset(year);
    }
    size_t cell_count() const {
        return conferences_.size() * affiliations_.size() * static_cast<size_t>(year_count());
    }

    std::vector<std::string> conferences_;
    std::vector<std::string> affiliations_;
    std::map<std::string, size_t> conference_index_;
    std::map<std::string, size_t> affiliation_index_;
    int first_year_ = 0;
    int last_year_ = 0;
    PaperFilter filter_ = PaperFilter::full_research_only;
    std::vector<double> relevance_;
    std::vector<int> paper_count_;
    std::vector<double> deficit_; // unaffiliated mass per (conference, year)
};

struct PanelOptions {
    PaperFilter filter = PaperFilter::full_research_only;
    /// Keep only the top-N affiliations by total relevance (0 = keep all).
    /// Capping trades the conservation property for a bounded grid.
    size_t affiliation_cap = 0;
};

/// Aggregates fractional paper shares into the dense panel. Unknown conferences
/// yield all-zero slices; `warnings` collects one note per such conference.
inline RelevancePanel build_panel(const CorpusSnapshot& snapshot,
                                  const std::vector<std::string>& conferences,
                                  int first_year, int last_year,
                                  const PanelOptions& options = {},
                                  std::vector<std::string>* warnings = nullptr) {
    if (conferences.empty()) throw config_error("build_panel: no conferences given");
    if (first_year > last_year) throw config_error("build_panel: empty year range");

    std::set<std::string> wanted(conferences.begin(), conferences.end());
    std::set<std::string> seen_conferences;

    // Authorship links grouped per paper; snapshot order is canonical (sorted).
    std::map<std::string, std::vector<AuthorshipLink>> links_of_paper;
    for (const auto& link : snapshot.authorships) links_of_paper[link.paper_id].push_back(link);

    struct ScoredPaper {
        const PaperRecord* paper;
        PaperShares shares;
    };
    std::vector<ScoredPaper> scored;
    for (const auto& p : snapshot.papers) {
        if (p.conference_series_id.empty() || !wanted.count(p.conference_series_id)) continue;
        seen_conferences.insert(p.conference_series_id);
        if (p.year < first_year || p.year > last_year) continue;
        if (options.filter == PaperFilter::full_research_only && !p.is_full_research) continue;
        auto it = links_of_paper.find(p.paper_id);
        if (it == links_of_paper.end()) continue; // nothing to attribute
        scored.push_back({&p, paper_affiliation_shares(it->second)});
    }

    if (warnings) {
        for (const auto& c : conferences)
            if (!seen_conferences.count(c))
                warnings->push_back("conference " + c + " has no papers in the snapshot; slice is all zero");
    }

    std::map<std::string, double> total_relevance;
    for (const auto& sp : scored)
        for (const auto& [affil, share] : sp.shares.shares) total_relevance[affil] += share;

    std::vector<std::string> universe;
    for (const auto& [affil, total] : total_relevance)
        if (total > 0.0) universe.push_back(affil);
    if (options.affiliation_cap > 0 && universe.size() > options.affiliation_cap) {
        std::stable_sort(universe.begin(), universe.end(), [&](const std::string& a, const std::string& b) {
            double ta = total_relevance[a], tb = total_relevance[b];
            if (ta != tb) return ta > tb;
            return a < b;
        });
        universe.resize(options.affiliation_cap);
    }

    RelevancePanel panel(conferences, universe, first_year, last_year, options.filter);
    for (const auto& sp : scored) {
        size_t c = panel.conference_index(sp.paper->conference_series_id);
        panel.add_deficit(c, sp.paper->year, sp.shares.deficit);
        for (const auto& [affil, share] : sp.shares.shares) {
            if (!panel.has_affiliation(affil)) continue; // dropped by the cap
            size_t a = panel.affiliation_index(affil);
            panel.add_relevance(c, a, sp.paper->year, share);
            panel.add_paper_count(c, a, sp.paper->year, 1);
        }
    }
    return panel;
}

/// Whole-paper counts per affiliation: a paper counts once per affiliation no
/// matter how many of its authors sit there.
inline std::map<std::string, long long> affiliation_paper_counts(const CorpusSnapshot& snapshot,
                                                                 const std::string& conference,
                                                                 int first_year, int last_year,
                                                                 PaperFilter filter) {
    if (first_year > last_year) return {};
    std::map<std::string, std::set<std::string>> affils_of_paper;
    for (const auto& link : snapshot.authorships)
        if (!link.affiliation_id.empty()) affils_of_paper[link.paper_id].insert(link.affiliation_id);

    std::map<std::string, long long> counts;
    for (const auto& p : snapshot.papers) {
        if (p.conference_series_id != conference) continue;
        if (p.year < first_year || p.year > last_year) continue;
        if (filter == PaperFilter::full_research_only && !p.is_full_research) continue;
        auto it = affils_of_paper.find(p.paper_id);
        if (it == affils_of_paper.end()) continue;
        for (const auto& a : it->second) counts[a] += 1;
    }
    return counts;
}

/// Panel interchange: TSV (conference, affiliation, year, relevance, paper_count)
/// for the nonzero cells, plus a <path>.manifest.json carrying the axes, filter,
/// and per-conference deficit totals needed to rebuild the dense grid.
inline void write_panel(const RelevancePanel& panel, const std::string& tsv_path) {
    std::ofstream out(tsv_path, std::ios::binary);
    if (!out) throw data_error("cannot write panel file: " + tsv_path);
    out << "conference\taffiliation\tyear\trelevance\tpaper_count\n";
    for (size_t c = 0; c < panel.conferences().size(); ++c)
        for (size_t a = 0; a < panel.affiliations().size(); ++a)
            for (int y = panel.first_year(); y <= panel.last_year(); ++y) {
                double rel = panel.relevance(c, a, y);
                int n = panel.paper_count(c, a, y);
                if (rel == 0.0 && n == 0) continue;
                out << panel.conferences()[c] << '\t' << panel.affiliations()[a] << '\t' << y << '\t'
                    << format_double(rel) << '\t' << n << '\n';
            }

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["filter"] = to_string(panel.filter());
    manifest["first_year"] = panel.first_year();
    manifest["last_year"] = panel.last_year();
    manifest["conferences"] = panel.conferences();
    manifest["affiliations"] = panel.affiliations();
    nlohmann::json deficits = nlohmann::json::array();
    for (size_t c = 0; c < panel.conferences().size(); ++c) {
        double total = 0;
        for (int y = panel.first_year(); y <= panel.last_year(); ++y) total += panel.deficit(c, y);
        deficits.push_back({{"conference", panel.conferences()[c]}, {"total_deficit", total}});
    }
    manifest["deficits"] = deficits;
    std::ofstream mout(tsv_path + ".manifest.json", std::ios::binary);
    if (!mout) throw data_error("cannot write panel manifest for: " + tsv_path);
    mout << manifest.dump(2) << '\n';
}

inline RelevancePanel read_panel(const std::string& tsv_path) {
    std::ifstream min(tsv_path + ".manifest.json");
    if (!min) throw data_error("missing panel manifest: " + tsv_path + ".manifest.json");
    nlohmann::json manifest = nlohmann::json::parse(min, nullptr, true, true);
    RelevancePanel panel(manifest.at("conferences").get<std::vector<std::string>>(),
                         manifest.at("affiliations").get<std::vector<std::string>>(),
                         manifest.at("first_year").get<int>(), manifest.at("last_year").get<int>(),
                         paper_filter_from_string(manifest.at("filter").get<std::string>()));

    std::ifstream in(tsv_path, std::ios::binary);
    if (!in) throw data_error("cannot open panel file: " + tsv_path);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) { header = false; continue; }
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 5) throw data_error("panel row needs 5 columns: " + line);
        size_t c = panel.conference_index(std::string(cols[0]));
        size_t a = panel.affiliation_index(std::string(cols[1]));
        int year = static_cast<int>(require_int(cols[2], "panel year"));
        panel.add_relevance(c, a, year, require_double(cols[3], "relevance"));
        panel.add_paper_count(c, a, year, static_cast<int>(require_int(cols[4], "paper_count")));
    }
    return panel;
}

} // namespace affrank
