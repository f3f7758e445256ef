#pragma once

// Deterministic synthetic academic world: a handful of conferences with
// community structure, affiliations with persistent strengths plus linear
// trends, multi-author papers, keywords, and citations aimed at the recent
// past. Everything derives from one seeded generator so a fixed seed yields a
// byte-identical corpus.

#include <affrank/records.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace synth {

struct WorldConfig {
    int conferences = 6;
    int affiliations = 200;
    int first_year = 2000;
    int years = 15;
    std::uint64_t seed = 12345;
    int authors_per_affiliation = 3;
    double unaffiliated_fraction = 0.0; // chance an authorship row loses its affiliation
    double base_strength_lo = 1.2;
    double base_strength_hi = 12.0;
    double slope_lo = -0.9;
    double slope_hi = 1.1;
};

struct World {
    affrank::CorpusSnapshot snapshot;
    std::vector<std::string> conferences;
    std::vector<std::string> affiliations;
    int first_year = 0;
    int last_year = 0;
};

inline std::string zero_pad(int v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

inline World make_world(const WorldConfig& cfg) {
    World world;
    world.first_year = cfg.first_year;
    world.last_year = cfg.first_year + cfg.years - 1;
    for (int c = 0; c < cfg.conferences; ++c) world.conferences.push_back("C" + std::to_string(c));
    for (int a = 0; a < cfg.affiliations; ++a)
        world.affiliations.push_back("A" + zero_pad(a, 3));

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Persistent per-affiliation strength with a two-phase trend: an initial
    // slope, then a fresh slope after a per-affiliation change year. Rising
    // stars and fading giants near the end of the panel are what separate a
    // trailing-average ranking from a forecasting one.
    std::vector<double> base(cfg.affiliations), slope1(cfg.affiliations), slope2(cfg.affiliations);
    std::vector<int> change(cfg.affiliations);
    for (int a = 0; a < cfg.affiliations; ++a) {
        base[a] = cfg.base_strength_lo + (cfg.base_strength_hi - cfg.base_strength_lo) * unit(rng);
        slope1[a] = cfg.slope_lo + (cfg.slope_hi - cfg.slope_lo) * unit(rng);
        slope2[a] = cfg.slope_lo + (cfg.slope_hi - cfg.slope_lo) * unit(rng);
        change[a] = static_cast<int>(cfg.years * (0.4 + 0.4 * unit(rng)));
    }
    auto strength = [&](int a, int y) {
        const int dy = y - cfg.first_year;
        return std::max(0.0, base[a] + slope1[a] * std::min(dy, change[a]) +
                                 slope2[a] * std::max(0, dy - change[a]));
    };
    std::vector<std::vector<double>> affinity(cfg.conferences,
                                              std::vector<double>(cfg.affiliations));
    for (int c = 0; c < cfg.conferences; ++c)
        for (int a = 0; a < cfg.affiliations; ++a) {
            const int gap = ((c % 3) - (a % 3) + 3) % 3;
            const double community = gap == 0 ? 1.0 : (gap == 1 ? 0.3 : 0.1);
            affinity[c][a] = community * (0.7 + 0.6 * unit(rng));
        }

    auto author_name = [&](int a, int u) { return world.affiliations[a] + "_u" + std::to_string(u); };

    auto& snap = world.snapshot;
    // Published paper ids by (year offset, community); citations aim at the
    // two preceding years so author-impact windows stay populated.
    std::vector<std::array<std::vector<std::string>, 3>> published(
        static_cast<size_t>(cfg.years));

    for (int y = world.first_year; y <= world.last_year; ++y) {
        const size_t yo = static_cast<size_t>(y - world.first_year);
        for (int c = 0; c < cfg.conferences; ++c) {
            for (int a = 0; a < cfg.affiliations; ++a) {
                const double lambda = affinity[c][a] * strength(a, y);
                int count = static_cast<int>(lambda);
                if (unit(rng) < lambda - count) ++count;
                for (int j = 0; j < count; ++j) {
                    affrank::PaperRecord paper;
                    paper.paper_id = "P_" + world.conferences[c] + "_" + world.affiliations[a] +
                                     "_" + std::to_string(y) + "_" + std::to_string(j);
                    paper.year = y;
                    paper.conference_series_id = world.conferences[c];
                    paper.is_full_research = true;
                    snap.papers.push_back(paper);
                    published[yo][static_cast<size_t>(c % 3)].push_back(paper.paper_id);

                    // 1-3 authors, all from this affiliation's pool, so the
                    // paper's full credit stays with the affiliation.
                    const int n_authors =
                        1 + static_cast<int>(unit(rng) * std::min(2, cfg.authors_per_affiliation - 1) + 0.5);
                    std::vector<int> pool(static_cast<size_t>(cfg.authors_per_affiliation));
                    for (size_t u = 0; u < pool.size(); ++u) pool[u] = static_cast<int>(u);
                    for (int u = 0; u < n_authors; ++u) {
                        const int pick = u + static_cast<int>(unit(rng) * (pool.size() - u));
                        std::swap(pool[u], pool[std::min<size_t>(pick, pool.size() - 1)]);
                        affrank::AuthorshipLink link;
                        link.paper_id = paper.paper_id;
                        link.author_id = author_name(a, pool[u]);
                        link.affiliation_id = unit(rng) < cfg.unaffiliated_fraction
                                                  ? std::string()
                                                  : world.affiliations[a];
                        link.author_sequence = u + 1;
                        snap.authorships.push_back(link);
                    }

                    affrank::KeywordRecord kw1{paper.paper_id,
                                               "community " + std::to_string(c % 3) + " topic " +
                                                   std::to_string(a % 12)};
                    affrank::KeywordRecord kw2{paper.paper_id,
                                               "shared topic " + std::to_string((a + y) % 5)};
                    snap.keywords.push_back(kw1);
                    snap.keywords.push_back(kw2);

                    // Cite a few same-community papers from the two
                    // preceding years.
                    const size_t g = static_cast<size_t>(c % 3);
                    for (int e = 0; e < 3; ++e) {
                        const size_t back = e == 0 ? 2 : 1;
                        if (yo < back) continue;
                        const auto& from = published[yo - back][g];
                        if (from.empty()) continue;
                        const auto& cited = from[std::min(
                            static_cast<size_t>(unit(rng) * static_cast<double>(from.size())),
                            from.size() - 1)];
                        snap.citations.push_back({paper.paper_id, cited});
                    }
                }
            }
        }
    }

    snap.params.target_conferences = {world.conferences.begin(), world.conferences.end()};
    snap.params.seed_year_lo = world.first_year;
    snap.params.seed_year_hi = world.last_year;
    snap.params.author_floor_year = world.first_year;
    snap.params.bfs_depth = 0;
    snap.canonicalize();
    return world;
}

} // namespace synth
