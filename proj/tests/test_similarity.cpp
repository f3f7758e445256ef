#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "affrank/similarity.hpp"
#include "support/tempdir.hpp"

using namespace affrank;
using testsupport::TempDir;

namespace {

std::map<std::string, ConferenceProfile> hand_profiles() {
    std::map<std::string, ConferenceProfile> p;
    p["T"] = {"T", {"a1", "a2", "a3", "a4"}, {"k1", "k2"}};
    p["X"] = {"X", {"a1", "a2", "a3"}, {"k9"}};          // author overlap 3/4
    p["Y"] = {"Y", {"a1", "a2"}, {"k1", "k2"}};          // author overlap 2/4, keywords identical
    p["Z"] = {"Z", {"z1"}, {"k1"}};                      // no author overlap
    return p;
}

} // namespace

TEST_CASE("jaccard on small sets", "[similarity]") {
    std::set<std::string> abc = {"a", "b", "c"}, bcd = {"b", "c", "d"};
    CHECK(jaccard(abc, abc) == 1.0);
    CHECK(jaccard(abc, bcd) == 0.5);
    CHECK(jaccard(abc, {"x"}) == 0.0);
    CHECK(jaccard({}, {}) == 0.0); // empty-vs-empty convention
    CHECK(jaccard({}, abc) == 0.0);
    CHECK(jaccard_union_size(abc, bcd) == 4);
}

TEST_CASE("jaccard is symmetric and grows with shared elements", "[similarity]") {
    std::set<std::string> base = {"p", "q", "r", "s"};
    std::set<std::string> other = {"p", "x", "y"};
    CHECK(jaccard(base, other) == jaccard(other, base));
    std::set<std::string> closer = {"p", "q", "y"};
    CHECK(jaccard(base, closer) > jaccard(base, other) - 1e-15);
    CHECK(jaccard(base, closer) >= 0.0);
    CHECK(jaccard(base, closer) <= 1.0);
}

TEST_CASE("profiles collect authors and keywords per series", "[similarity]") {
    CorpusSnapshot snap;
    snap.papers = {{"P1", 2010, "C1", true},
                   {"P2", 2011, "C1", false},
                   {"P3", 2010, "C2", true},
                   {"P4", 2010, "", true}};
    snap.authorships = {{"P1", "A1", "F1", 1}, {"P2", "A2", "", 1}, {"P3", "A1", "F1", 1},
                        {"P4", "A9", "", 1}};
    snap.keywords = {{"P1", "mining"}, {"P2", "streams"}, {"P3", "mining"}, {"P4", "void"}};
    snap.canonicalize();

    auto profiles = build_profiles(snap);
    REQUIRE(profiles.size() == 2); // the non-conference paper contributes nothing
    CHECK(profiles.at("C1").authors == std::set<std::string>{"A1", "A2"});
    CHECK(profiles.at("C1").keywords == std::set<std::string>{"mining", "streams"});
    CHECK(profiles.at("C2").authors == std::set<std::string>{"A1"});

    ProfileOptions research_only;
    research_only.filter = PaperFilter::full_research_only;
    auto strict = build_profiles(snap, research_only);
    CHECK(strict.at("C1").authors == std::set<std::string>{"A1"}); // P2 filtered out

    ProfileOptions ranged;
    ranged.year_lo = 2011;
    auto late = build_profiles(snap, ranged);
    CHECK_FALSE(late.count("C2"));
    CHECK(late.at("C1").authors == std::set<std::string>{"A2"});

    ProfileOptions sized;
    sized.min_profile_size = 2;
    auto big = build_profiles(snap, sized);
    CHECK(big.count("C1"));
    CHECK_FALSE(big.count("C2"));
}

TEST_CASE("related conferences rank by similarity", "[similarity]") {
    auto profiles = hand_profiles();
    auto related = related_conferences("T", profiles, 10);
    REQUIRE(related.size() == 3);
    CHECK(related[0].conference == "X"); // jaccard 3/4
    CHECK(related[0].score == 0.75);
    CHECK(related[0].rank == 1);
    CHECK(related[1].conference == "Y"); // jaccard 2/4
    CHECK(related[1].score == 0.5);
    CHECK(related[2].conference == "Z");
    CHECK(related[2].score == 0.0);

    CHECK(related_conferences("T", profiles, 0).empty());
    auto top1 = related_conferences("T", profiles, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].conference == "X");
    CHECK_THROWS_AS(related_conferences("missing", profiles, 3), data_error);
    // The target never appears among its own neighbors.
    for (const auto& r : related) CHECK(r.conference != "T");
}

TEST_CASE("keyword basis ranks independently of authors", "[similarity]") {
    auto profiles = hand_profiles();
    auto related = related_conferences("T", profiles, 10, SimilarityBasis::keywords);
    REQUIRE(related.size() == 3);
    CHECK(related[0].conference == "Y"); // identical keyword sets
    CHECK(related[0].score == 1.0);
    CHECK(related[1].conference == "Z"); // {k1} vs {k1,k2}
    CHECK(related[1].score == 0.5);
    CHECK(related[2].conference == "X");
}

TEST_CASE("score ties break by union size then id", "[similarity]") {
    std::map<std::string, ConferenceProfile> p;
    p["T"] = {"T", {"a", "b"}, {}};
    // Both score 0; bigger profile (larger union) wins the earlier rank.
    p["small"] = {"small", {"x"}, {}};
    p["wide"] = {"wide", {"u", "v", "w"}, {}};
    // Equal unions and equal scores: lexicographic id decides.
    p["mirror1"] = {"mirror1", {"m1"}, {}};
    p["mirror0"] = {"mirror0", {"m0"}, {}};
    auto related = related_conferences("T", p, 10);
    REQUIRE(related.size() == 4);
    CHECK(related[0].conference == "wide");
    CHECK(related[1].conference == "mirror0");
    CHECK(related[2].conference == "mirror1");
    CHECK(related[3].conference == "small");
}

TEST_CASE("rank fusion averages reciprocal ranks", "[similarity]") {
    auto profiles = hand_profiles();
    // Author ranks: X=1, Y=2, Z=3. Keyword ranks: Y=1, Z=2, X=3.
    // Fused: X = .5(1/1+1/3) = 2/3, Y = .5(1/2+1/1) = 3/4, Z = .5(1/3+1/2) = 5/12.
    auto related = related_conferences("T", profiles, 10, SimilarityBasis::rank_fusion);
    REQUIRE(related.size() == 3);
    CHECK(related[0].conference == "Y");
    CHECK(related[0].score == Catch::Approx(0.75).margin(1e-15));
    CHECK(related[1].conference == "X");
    CHECK(related[1].score == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(related[2].conference == "Z");
    CHECK(related[2].score == Catch::Approx(5.0 / 12.0).margin(1e-15));
    CHECK(related[0].rank == 1);
    CHECK(related[2].rank == 3);
}

TEST_CASE("basis strings round-trip", "[similarity]") {
    CHECK(similarity_basis_from_string("authors") == SimilarityBasis::authors);
    CHECK(similarity_basis_from_string("keywords") == SimilarityBasis::keywords);
    CHECK(similarity_basis_from_string("rank-fusion") == SimilarityBasis::rank_fusion);
    CHECK(similarity_basis_from_string("rank_fusion") == SimilarityBasis::rank_fusion);
    CHECK_THROWS_AS(similarity_basis_from_string("vibes"), config_error);
    CHECK(to_string(SimilarityBasis::rank_fusion) == "rank-fusion");
}

TEST_CASE("similarity report file", "[similarity]") {
    TempDir dir;
    auto profiles = hand_profiles();
    auto related = related_conferences("T", profiles, 2);
    auto path = (dir.path() / "related.tsv").string();
    write_related_report(path, "T", SimilarityBasis::authors, related);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "target\tneighbor\tbasis\tscore\trank");
    std::getline(in, line);
    CHECK(line == "T\tX\tauthors\t0.75\t1");
    std::getline(in, line);
    CHECK(line == "T\tY\tauthors\t0.5\t2");
    CHECK_FALSE(std::getline(in, line));
}
