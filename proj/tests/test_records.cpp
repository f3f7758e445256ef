#include <catch2/catch_amalgamated.hpp>

#include "affrank/records.hpp"

using namespace affrank;

namespace {

CorpusSnapshot tiny_snapshot() {
    CorpusSnapshot snap;
    snap.papers = {{"P1", 2010, "C1", true}, {"P2", 2011, "C1", false}, {"P3", 2012, "", false}};
    snap.citations = {{"P2", "P1"}, {"P3", "P1"}, {"P3", "P_outside"}};
    snap.canonicalize();
    return snap;
}

} // namespace

TEST_CASE("compute_degrees counts member-to-member edges once", "[records]") {
    std::vector<CitationEdge> edges = {{"A", "B"}, {"A", "B"}, {"B", "C"}, {"A", "X"}, {"X", "A"}};
    std::set<std::string> members = {"A", "B", "C"};
    auto deg = compute_degrees(edges, members);
    REQUIRE(deg.size() == 3); // every member present, outsiders absent
    CHECK(deg["A"].out == 1); // duplicate A->B collapsed, A->X ignored
    CHECK(deg["A"].in == 0);  // X->A ignored: X is not a member
    CHECK(deg["B"].in == 1);
    CHECK(deg["B"].out == 1);
    CHECK(deg["C"].in == 1);
    CHECK(deg["C"].out == 0);
    CHECK_FALSE(deg.count("X"));
}

TEST_CASE("degree totals balance", "[records]") {
    // Sum of in-degrees equals sum of out-degrees equals the distinct edge count.
    std::vector<CitationEdge> edges;
    std::set<std::string> members;
    for (int i = 0; i < 8; ++i) members.insert("N" + std::to_string(i));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            if ((i * 3 + j) % 4 == 0 && i != j)
                edges.push_back({"N" + std::to_string(i), "N" + std::to_string(j)});
    auto deg = compute_degrees(edges, members);
    long long total_in = 0, total_out = 0;
    for (const auto& [id, d] : deg) {
        total_in += d.in;
        total_out += d.out;
    }
    std::set<std::pair<std::string, std::string>> distinct;
    for (const auto& e : edges) distinct.emplace(e.citing_paper_id, e.cited_paper_id);
    CHECK(total_in == total_out);
    CHECK(total_in == static_cast<long long>(distinct.size()));
}

TEST_CASE("canonicalize sorts, dedups, and drops self-citations", "[records]") {
    CorpusSnapshot snap;
    snap.papers = {{"P2", 2011, "C1", false}, {"P1", 2010, "C1", true}, {"P1", 1999, "other", false}};
    snap.authorships = {{"P2", "A1", "F1", 1}, {"P1", "A1", "F1", 1}, {"P1", "A1", "F1", 1}};
    snap.citations = {{"P2", "P1"}, {"P2", "P2"}, {"P2", "P1"}};
    snap.keywords = {{"P2", "b"}, {"P1", "a"}, {"P1", "a"}};
    snap.canonicalize();

    REQUIRE(snap.papers.size() == 2); // first occurrence of P1 wins
    CHECK(snap.papers[0].paper_id == "P1");
    CHECK(snap.papers[0].year == 2010);
    CHECK(snap.papers[1].paper_id == "P2");

    REQUIRE(snap.authorships.size() == 2);
    CHECK(snap.authorships[0].paper_id == "P1");

    REQUIRE(snap.citations.size() == 1); // self-citation and duplicate gone
    CHECK(snap.citations[0] == CitationEdge{"P2", "P1"});

    REQUIRE(snap.keywords.size() == 2);
    CHECK(snap.degrees.at("P1").in == 1);
    CHECK(snap.degrees.at("P2").out == 1);
}

TEST_CASE("snapshot lookups and dangling citation count", "[records]") {
    auto snap = tiny_snapshot();
    CHECK(snap.contains("P1"));
    CHECK_FALSE(snap.contains("P_outside"));
    REQUIRE(snap.find_paper("P2") != nullptr);
    CHECK(snap.find_paper("P2")->year == 2011);
    CHECK(snap.find_paper("nope") == nullptr);
    CHECK(snap.member_ids() == std::set<std::string>{"P1", "P2", "P3"});
    CHECK(snap.dangling_citations() == 1); // P3 -> P_outside
    // Dangling edges never contribute to degrees.
    CHECK(snap.degrees.at("P3").out == 1);
    CHECK(snap.degrees.at("P1").in == 2);
}

TEST_CASE("same_content ignores parameters and skip counters", "[records]") {
    auto a = tiny_snapshot();
    auto b = tiny_snapshot();
    b.params.bfs_depth = 99;
    b.skips.malformed_lines = 5;
    CHECK(a.same_content(b));
    b.papers.push_back({"P9", 2013, "C1", false});
    b.canonicalize();
    CHECK_FALSE(a.same_content(b));
}

TEST_CASE("skip counters total", "[records]") {
    SkipCounters s;
    s.malformed_lines = 2;
    s.bad_values = 3;
    s.duplicate_records = 1;
    CHECK(s.total() == 6);
}
