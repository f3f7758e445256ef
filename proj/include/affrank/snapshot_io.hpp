#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "affrank/records.hpp"
#include "affrank/strings.hpp"
#include "affrank/table_reader.hpp"

namespace affrank {

/// Snapshot interchange: one TSV per record kind plus a JSON manifest with
/// record counts, the sampling parameters, and skip counters. Layout inside
/// `dir`: papers.tsv, authorships.tsv, citations.tsv, keywords.tsv, manifest.json.
inline void write_snapshot(const CorpusSnapshot& snap, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw data_error(std::string("cannot write ") + name + " under " + dir);
        return out;
    };
    {
        auto out = open("papers.tsv");
        for (const auto& p : snap.papers)
            out << p.paper_id << '\t' << p.year << '\t' << p.conference_series_id << '\t'
                << (p.is_full_research ? '1' : '0') << '\n';
    }
    {
        auto out = open("authorships.tsv");
        for (const auto& a : snap.authorships)
            out << a.paper_id << '\t' << a.author_id << '\t' << a.affiliation_id << '\t'
                << a.author_sequence << '\n';
    }
    {
        auto out = open("citations.tsv");
        for (const auto& e : snap.citations)
            out << e.citing_paper_id << '\t' << e.cited_paper_id << '\n';
    }
    {
        auto out = open("keywords.tsv");
        for (const auto& k : snap.keywords)
            out << k.paper_id << '\t' << k.keyword << '\n';
    }

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["counts"] = {{"papers", snap.papers.size()},
                          {"authorships", snap.authorships.size()},
                          {"citations", snap.citations.size()},
                          {"keywords", snap.keywords.size()}};
    manifest["dangling_citations"] = snap.dangling_citations();
    manifest["parameters"] = {{"target_conferences", snap.params.target_conferences},
                              {"seed_year_lo", snap.params.seed_year_lo},
                              {"seed_year_hi", snap.params.seed_year_hi},
                              {"author_floor_year", snap.params.author_floor_year},
                              {"bfs_depth", snap.params.bfs_depth},
                              {"direction", snap.params.direction}};
    manifest["skip_counters"] = {{"malformed_lines", snap.skips.malformed_lines},
                                 {"bad_values", snap.skips.bad_values},
                                 {"duplicate_records", snap.skips.duplicate_records}};
    auto out = open("manifest.json");
    out << manifest.dump(2) << '\n';
}

inline CorpusSnapshot read_snapshot(const std::string& dir) {
    namespace fs = std::filesystem;
    auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

    TableSchema schema; // interchange column order is fixed
    schema.papers = {0, 1, 2, 3};
    schema.authorships = {0, 1, 2, 3};
    schema.citations = {0, 1};
    schema.keywords = {0, 1};

    CorpusSnapshot snap;
    snap.papers = parse_papers(path("papers.tsv"), schema).records;
    snap.authorships = parse_authorships(path("authorships.tsv"), schema).records;
    snap.citations = parse_citations(path("citations.tsv"), schema).records;
    snap.keywords = parse_keywords(path("keywords.tsv"), schema).records;

    std::ifstream min(fs::path(dir) / "manifest.json");
    if (!min) throw data_error("missing manifest.json under " + dir);
    nlohmann::json manifest = nlohmann::json::parse(min, nullptr, true, true);
    const auto& params = manifest.at("parameters");
    snap.params.target_conferences = params.at("target_conferences").get<std::vector<std::string>>();
    snap.params.seed_year_lo = params.at("seed_year_lo").get<int>();
    snap.params.seed_year_hi = params.at("seed_year_hi").get<int>();
    snap.params.author_floor_year = params.at("author_floor_year").get<int>();
    snap.params.bfs_depth = params.at("bfs_depth").get<int>();
    snap.params.direction = params.at("direction").get<std::string>();
    const auto& skips = manifest.at("skip_counters");
    snap.skips.malformed_lines = skips.at("malformed_lines").get<long long>();
    snap.skips.bad_values = skips.at("bad_values").get<long long>();
    snap.skips.duplicate_records = skips.at("duplicate_records").get<long long>();

    snap.canonicalize();
    return snap;
}

/// Column-map JSON: {"delimiter": "\t", "has_header": false,
///   "papers": {"paper_id": 0, "year": 3, "conference_series_id": 9, "is_full_research": -1}, ...}
/// Omitted tables and fields keep the MAG defaults.
inline TableSchema table_schema_from_json(const nlohmann::json& j) {
    TableSchema s;
    if (j.contains("delimiter")) {
        auto d = j.at("delimiter").get<std::string>();
        if (d.size() != 1) throw config_error("schema delimiter must be a single character");
        s.delimiter = d[0];
    }
    if (j.contains("has_header")) s.has_header = j.at("has_header").get<bool>();
    auto get = [](const nlohmann::json& obj, const char* key, int fallback) {
        return obj.contains(key) ? obj.at(key).get<int>() : fallback;
    };
    if (j.contains("papers")) {
        const auto& p = j.at("papers");
        s.papers.paper_id = get(p, "paper_id", s.papers.paper_id);
        s.papers.year = get(p, "year", s.papers.year);
        s.papers.conference_series_id = get(p, "conference_series_id", s.papers.conference_series_id);
        s.papers.is_full_research = get(p, "is_full_research", s.papers.is_full_research);
    }
    if (j.contains("authorships")) {
        const auto& a = j.at("authorships");
        s.authorships.paper_id = get(a, "paper_id", s.authorships.paper_id);
        s.authorships.author_id = get(a, "author_id", s.authorships.author_id);
        s.authorships.affiliation_id = get(a, "affiliation_id", s.authorships.affiliation_id);
        s.authorships.author_sequence = get(a, "author_sequence", s.authorships.author_sequence);
    }
    if (j.contains("citations")) {
        const auto& c = j.at("citations");
        s.citations.citing_paper_id = get(c, "citing_paper_id", s.citations.citing_paper_id);
        s.citations.cited_paper_id = get(c, "cited_paper_id", s.citations.cited_paper_id);
    }
    if (j.contains("keywords")) {
        const auto& k = j.at("keywords");
        s.keywords.paper_id = get(k, "paper_id", s.keywords.paper_id);
        s.keywords.keyword = get(k, "keyword", s.keywords.keyword);
    }
    return s;
}

inline TableSchema load_table_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open schema file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);
    return table_schema_from_json(j);
}

} // namespace affrank
