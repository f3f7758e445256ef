#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "affrank/relevance.hpp"
#include "support/tempdir.hpp"

using namespace affrank;
using testsupport::TempDir;

namespace {

// C1 2010: P1 splits 0.75 / 0.25 over F1 / F2, P2 is a non-research paper.
// C1 2011: P3 drops half its mass to an unaffiliated author.
// C2 2010: P4 goes wholly to F3. P5 is not a conference paper. P6 has no authors.
CorpusSnapshot panel_fixture() {
    CorpusSnapshot snap;
    snap.papers = {
        {"P1", 2010, "C1", true}, {"P2", 2010, "C1", false}, {"P3", 2011, "C1", true},
        {"P4", 2010, "C2", true}, {"P5", 2012, "", true},    {"P6", 2010, "C1", true},
    };
    snap.authorships = {
        {"P1", "A1", "F1", 1}, {"P1", "A2", "F1", 2}, {"P1", "A2", "F2", 2},
        {"P2", "A3", "F2", 1}, {"P3", "A4", "", 1},   {"P3", "A5", "F1", 2},
        {"P4", "A1", "F3", 1}, {"P5", "A1", "F3", 1},
    };
    snap.canonicalize();
    return snap;
}

} // namespace

TEST_CASE("paper shares split per author then per affiliation", "[relevance]") {
    std::vector<AuthorshipLink> links = {
        {"P", "A1", "F1", 1}, {"P", "A2", "F1", 2}, {"P", "A2", "F2", 2}};
    auto shares = paper_affiliation_shares(links);
    CHECK(shares.shares.at("F1") == Catch::Approx(0.75).margin(1e-15));
    CHECK(shares.shares.at("F2") == Catch::Approx(0.25).margin(1e-15));
    CHECK(shares.deficit == 0.0);
}

TEST_CASE("unaffiliated authors feed the deficit", "[relevance]") {
    std::vector<AuthorshipLink> links = {{"P", "A1", "", 1}, {"P", "A2", "F1", 2}};
    auto shares = paper_affiliation_shares(links);
    CHECK(shares.shares.at("F1") == Catch::Approx(0.5).margin(1e-15));
    CHECK(shares.deficit == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("duplicate authorship rows collapse before splitting", "[relevance]") {
    std::vector<AuthorshipLink> links = {
        {"P", "A1", "F1", 1}, {"P", "A1", "F1", 1}, {"P", "A1", "F1", 2}};
    auto shares = paper_affiliation_shares(links);
    CHECK(shares.shares.at("F1") == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("a paper with no authorship links cannot be attributed", "[relevance]") {
    CHECK_THROWS_AS(paper_affiliation_shares({}), data_error);
}

TEST_CASE("shares plus deficit always sum to one", "[relevance]") {
    std::mt19937_64 rng(20260819);
    std::uniform_int_distribution<int> n_authors(1, 6), n_affils(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<AuthorshipLink> links;
        int authors = n_authors(rng);
        for (int a = 0; a < authors; ++a) {
            int affils = n_affils(rng);
            if (affils == 0) {
                links.push_back({"P", "A" + std::to_string(a), "", 1});
                continue;
            }
            for (int f = 0; f < affils; ++f)
                links.push_back({"P", "A" + std::to_string(a),
                                 "F" + std::to_string((a * 7 + f) % 5), 1});
        }
        auto shares = paper_affiliation_shares(links);
        double total = shares.deficit;
        for (const auto& [affil, s] : shares.shares) total += s;
        REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("build_panel aggregates fractional scores per cell", "[relevance]") {
    auto snap = panel_fixture();
    auto panel = build_panel(snap, {"C1", "C2"}, 2010, 2011);

    CHECK(panel.conferences() == std::vector<std::string>{"C1", "C2"});
    CHECK(panel.affiliations() == std::vector<std::string>{"F1", "F2", "F3"});
    CHECK(panel.relevance("C1", "F1", 2010) == Catch::Approx(0.75).margin(1e-15));
    CHECK(panel.relevance("C1", "F2", 2010) == Catch::Approx(0.25).margin(1e-15));
    CHECK(panel.relevance("C1", "F1", 2011) == Catch::Approx(0.5).margin(1e-15));
    CHECK(panel.relevance("C2", "F3", 2010) == Catch::Approx(1.0).margin(1e-15));
    CHECK(panel.deficit(panel.conference_index("C1"), 2011) == Catch::Approx(0.5).margin(1e-15));
    CHECK(panel.paper_count(panel.conference_index("C1"), panel.affiliation_index("F1"), 2010) == 1);
    // The non-research paper P2 is invisible under the default filter.
    CHECK(panel.relevance("C1", "F2", 2010) < 0.5);
}

TEST_CASE("the all-papers filter dominates the research-only filter", "[relevance]") {
    auto snap = panel_fixture();
    auto full = build_panel(snap, {"C1", "C2"}, 2010, 2011);
    PanelOptions all_opts;
    all_opts.filter = PaperFilter::all_papers;
    auto all = build_panel(snap, {"C1", "C2"}, 2010, 2011, all_opts);

    CHECK(all.relevance("C1", "F2", 2010) == Catch::Approx(1.25).margin(1e-15));
    for (const auto& c : full.conferences())
        for (const auto& a : full.affiliations())
            for (int y = full.first_year(); y <= full.last_year(); ++y)
                CHECK(all.relevance(c, a, y) >= full.relevance(c, a, y) - 1e-15);
}

TEST_CASE("input record order does not change the panel", "[relevance]") {
    auto snap = panel_fixture();
    CorpusSnapshot shuffled = snap;
    std::reverse(shuffled.papers.begin(), shuffled.papers.end());
    std::reverse(shuffled.authorships.begin(), shuffled.authorships.end());
    shuffled.canonicalize();

    auto a = build_panel(snap, {"C1", "C2"}, 2010, 2011);
    auto b = build_panel(shuffled, {"C1", "C2"}, 2010, 2011);
    REQUIRE(a.affiliations() == b.affiliations());
    for (const auto& c : a.conferences())
        for (const auto& f : a.affiliations())
            for (int y = a.first_year(); y <= a.last_year(); ++y)
                REQUIRE(a.relevance(c, f, y) == b.relevance(c, f, y));
}

TEST_CASE("per conference-year mass is conserved", "[relevance]") {
    // Random corpus: total relevance + deficit equals the attributed paper count.
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> year_d(2005, 2008), conf_d(0, 2), author_d(1, 4), affil_d(0, 3);
    CorpusSnapshot snap;
    for (int i = 0; i < 120; ++i) {
        std::string pid = "P" + std::to_string(i);
        snap.papers.push_back({pid, year_d(rng), "C" + std::to_string(conf_d(rng)), true});
        int authors = author_d(rng);
        for (int a = 0; a < authors; ++a) {
            int affils = affil_d(rng);
            if (affils == 0) {
                snap.authorships.push_back({pid, pid + "A" + std::to_string(a), "", 1});
                continue;
            }
            for (int f = 0; f < affils; ++f)
                snap.authorships.push_back(
                    {pid, pid + "A" + std::to_string(a), "F" + std::to_string((i + a + f) % 7), 1});
        }
    }
    snap.canonicalize();

    std::vector<std::string> confs = {"C0", "C1", "C2"};
    auto panel = build_panel(snap, confs, 2005, 2008);
    std::map<std::pair<std::string, int>, long long> attributed;
    for (const auto& p : snap.papers) attributed[{p.conference_series_id, p.year}] += 1;

    for (const auto& c : confs) {
        size_t ci = panel.conference_index(c);
        for (int y = 2005; y <= 2008; ++y) {
            double mass = panel.deficit(ci, y);
            for (size_t a = 0; a < panel.affiliations().size(); ++a) mass += panel.relevance(ci, a, y);
            REQUIRE(mass == Catch::Approx(static_cast<double>(attributed[{c, y}])).margin(1e-12));
        }
    }
}

TEST_CASE("unknown conferences warn and stay all-zero", "[relevance]") {
    auto snap = panel_fixture();
    std::vector<std::string> warnings;
    auto panel = build_panel(snap, {"C1", "C_ghost"}, 2010, 2011, {}, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK_THAT(warnings[0], Catch::Matchers::ContainsSubstring("C_ghost"));
    size_t ci = panel.conference_index("C_ghost");
    for (size_t a = 0; a < panel.affiliations().size(); ++a)
        for (int y = 2010; y <= 2011; ++y) CHECK(panel.relevance(ci, a, y) == 0.0);
}

TEST_CASE("affiliation cap keeps the top totals", "[relevance]") {
    auto snap = panel_fixture();
    PanelOptions opts;
    opts.affiliation_cap = 1;
    auto panel = build_panel(snap, {"C1", "C2"}, 2010, 2011, opts);
    // Totals under the research filter: F1 1.25, F3 1.0, F2 0.25.
    CHECK(panel.affiliations() == std::vector<std::string>{"F1"});
    CHECK(panel.relevance("C1", "F1", 2010) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("panel accessors validate their arguments", "[relevance]") {
    auto snap = panel_fixture();
    auto panel = build_panel(snap, {"C1"}, 2010, 2011);
    CHECK_THROWS_AS(panel.conference_index("C9"), data_error);
    CHECK_THROWS_AS(panel.affiliation_index("F9"), data_error);
    CHECK_THROWS_AS(panel.relevance("C1", "F1", 2009), data_error);
    CHECK(panel.has_year(2010));
    CHECK_FALSE(panel.has_year(2012));
    CHECK(panel.series(0, panel.affiliation_index("F1"), 2010, 2011) ==
          std::vector<double>{0.75, 0.5});
}

TEST_CASE("panel constructor validation", "[relevance]") {
    CHECK_THROWS_AS(RelevancePanel({}, {"F1"}, 2010, 2011, PaperFilter::all_papers), config_error);
    CHECK_THROWS_AS(RelevancePanel({"C1"}, {"F1"}, 2011, 2010, PaperFilter::all_papers), config_error);
    CHECK_THROWS_AS(RelevancePanel({"C1", "C1"}, {"F1"}, 2010, 2011, PaperFilter::all_papers),
                    config_error);
    CHECK_THROWS_AS(build_panel(panel_fixture(), {}, 2010, 2011), config_error);
}

TEST_CASE("whole-paper counts ignore how many authors share an affiliation", "[relevance]") {
    auto snap = panel_fixture();
    auto counts = affiliation_paper_counts(snap, "C1", 2010, 2011, PaperFilter::full_research_only);
    CHECK(counts.at("F1") == 2); // P1 (two authors there) and P3
    CHECK(counts.at("F2") == 1);
    auto all = affiliation_paper_counts(snap, "C1", 2010, 2011, PaperFilter::all_papers);
    CHECK(all.at("F2") == 2); // P2 joins under the broad filter
    CHECK(affiliation_paper_counts(snap, "C1", 2011, 2010, PaperFilter::all_papers).empty());
}

TEST_CASE("panel files round-trip", "[relevance]") {
    TempDir dir;
    auto snap = panel_fixture();
    auto panel = build_panel(snap, {"C1", "C2"}, 2010, 2011);
    auto path = (dir.path() / "panel.tsv").string();
    write_panel(panel, path);
    auto back = read_panel(path);

    CHECK(back.conferences() == panel.conferences());
    CHECK(back.affiliations() == panel.affiliations());
    CHECK(back.first_year() == panel.first_year());
    CHECK(back.last_year() == panel.last_year());
    CHECK(back.filter() == panel.filter());
    for (const auto& c : panel.conferences())
        for (const auto& a : panel.affiliations())
            for (int y = panel.first_year(); y <= panel.last_year(); ++y) {
                REQUIRE(back.relevance(c, a, y) == panel.relevance(c, a, y));
                REQUIRE(back.paper_count(back.conference_index(c), back.affiliation_index(a), y) ==
                        panel.paper_count(panel.conference_index(c), panel.affiliation_index(a), y));
            }
    CHECK_THROWS_AS(read_panel((dir.path() / "nothere.tsv").string()), data_error);
}

TEST_CASE("paper filter strings", "[relevance]") {
    CHECK(paper_filter_from_string("full") == PaperFilter::full_research_only);
    CHECK(paper_filter_from_string("all_papers") == PaperFilter::all_papers);
    CHECK_THROWS_AS(paper_filter_from_string("some"), config_error);
    CHECK(std::string(to_string(PaperFilter::all_papers)) == "all_papers");
}
