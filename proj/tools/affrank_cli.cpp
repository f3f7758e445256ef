// affrank: forecast-driven ranking of research affiliations at conferences.
//
// Subcommands cover the full pipeline: ingest raw dump tables into a corpus
// snapshot, aggregate the relevance panel, find related conferences, assemble
// feature matrices, train/predict/evaluate individual models, and run the
// backtest grid that picks a configuration. Exit codes: 0 success, 1 usage or
// configuration error, 2 data error, 3 infeasible everywhere.

#include <affrank/affrank.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace affrank;

namespace {

nlohmann::json parse_json_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in, nullptr, true, true); // comments allowed
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad JSON in " + path + ": " + e.what());
    }
}

nlohmann::json parse_json_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad JSON in " + path + ": " + e.what());
    }
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write: " + path);
    out << j.dump(2) << '\n';
}

std::pair<int, int> parse_year_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw config_error("year range must look like LO:HI, got '" + text + "'");
    const auto lo = parse_int(text.substr(0, colon));
    const auto hi = parse_int(text.substr(colon + 1));
    if (!lo || !hi) throw config_error("year range must look like LO:HI, got '" + text + "'");
    return {static_cast<int>(*lo), static_cast<int>(*hi)};
}

/// Group label shared with training: random intercepts are per
/// conference-affiliation pair.
std::vector<std::string> group_labels(const FeatureMatrix& m) {
    std::vector<std::string> groups;
    groups.reserve(m.row_count());
    for (const auto& key : m.keys()) groups.push_back(key.conference + "|" + key.affiliation);
    return groups;
}

// ---------------------------------------------------------------- ingest ---

struct IngestArgs {
    std::string papers, links, refs, keywords, flags, schema, out;
    std::vector<std::string> conferences;
    std::string seed_years;
    int author_floor = 0;
    bool author_floor_set = false;
    int depth = 0;
    std::string direction = "out";
};

int run_ingest(const IngestArgs& a) {
    TableSchema schema;
    if (!a.schema.empty()) schema = load_table_schema(a.schema);

    RawTables raw;
    auto papers = parse_papers(a.papers, schema);
    raw.papers = std::move(papers.records);
    raw.skips = papers.skips;
    auto links = parse_authorships(a.links, schema);
    raw.authorships = std::move(links.records);
    raw.skips.malformed_lines += links.skips.malformed_lines;
    raw.skips.bad_values += links.skips.bad_values;
    if (!a.refs.empty()) {
        auto refs = parse_citations(a.refs, schema);
        raw.citations = std::move(refs.records);
        raw.skips.malformed_lines += refs.skips.malformed_lines;
        raw.skips.bad_values += refs.skips.bad_values;
    }
    if (!a.keywords.empty()) {
        auto kw = parse_keywords(a.keywords, schema);
        raw.keywords = std::move(kw.records);
        raw.skips.malformed_lines += kw.skips.malformed_lines;
    }
    if (!a.flags.empty()) {
        const auto full = parse_flag_file(a.flags);
        for (auto& p : raw.papers) p.is_full_research = full.count(p.paper_id) > 0;
    }

    const auto [lo, hi] = parse_year_range(a.seed_years);
    const int floor = a.author_floor_set ? a.author_floor : lo;
    const CorpusSnapshot snap = sample_corpus(
        raw, {a.conferences.begin(), a.conferences.end()}, lo, hi, floor, a.depth,
        bfs_direction_from_string(a.direction));
    write_snapshot(snap, a.out);
    std::printf("snapshot: %zu papers, %zu authorships, %zu citations, %zu keywords -> %s\n",
                snap.papers.size(), snap.authorships.size(), snap.citations.size(),
                snap.keywords.size(), a.out.c_str());
    std::printf("skipped while parsing: %lld malformed, %lld bad values, %lld duplicates\n",
                snap.skips.malformed_lines, snap.skips.bad_values, snap.skips.duplicate_records);
    return 0;
}

// ----------------------------------------------------------------- panel ---

struct PanelArgs {
    std::string snapshot, years, filter = "full", out;
    std::vector<std::string> conferences;
    size_t cap = 0;
};

int run_panel(const PanelArgs& a) {
    const CorpusSnapshot snap = read_snapshot(a.snapshot);
    const auto [lo, hi] = parse_year_range(a.years);
    PanelOptions options;
    options.filter = paper_filter_from_string(a.filter);
    options.affiliation_cap = a.cap;
    std::vector<std::string> warnings;
    const RelevancePanel panel = build_panel(snap, a.conferences, lo, hi, options, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    write_panel(panel, a.out);
    std::printf("panel: %zu conferences x %zu affiliations x %d years -> %s\n",
                panel.conferences().size(), panel.affiliations().size(), panel.year_count(),
                a.out.c_str());
    return 0;
}

// --------------------------------------------------------------- similar ---

struct SimilarArgs {
    std::string corpus, target, basis = "authors", years, filter = "all", out;
    size_t k = 5;
    size_t min_profile = 0;
};

int run_similar(const SimilarArgs& a) {
    const CorpusSnapshot snap = read_snapshot(a.corpus);
    ProfileOptions options;
    if (!a.years.empty()) {
        const auto [lo, hi] = parse_year_range(a.years);
        options.year_lo = lo;
        options.year_hi = hi;
    }
    options.filter = paper_filter_from_string(a.filter);
    options.min_profile_size = a.min_profile;
    const auto profiles = build_profiles(snap, options);
    const auto basis = similarity_basis_from_string(a.basis);
    const auto related = related_conferences(a.target, profiles, a.k, basis);
    if (!a.out.empty()) {
        write_related_report(a.out, a.target, basis, related);
    } else {
        std::printf("target\tneighbor\tbasis\tscore\trank\n");
        for (const auto& r : related)
            std::printf("%s\t%s\t%s\t%s\t%zu\n", a.target.c_str(), r.conference.c_str(),
                        to_string(basis).c_str(), format_double(r.score).c_str(), r.rank);
    }
    return 0;
}

// -------------------------------------------------------------- features ---

struct FeaturesArgs {
    std::string panel, spec, conference, snapshot, out;
    std::vector<std::string> related;
    int target_year = 0;
    int aif_window = 2;
};

int run_features(const FeaturesArgs& a) {
    const RelevancePanel panel = read_panel(a.panel);
    FeatureSetSpec spec = FeatureSetSpec::from_json(parse_json_config(a.spec));
    spec.validate();

    std::vector<std::string> conferences{a.conference};
    for (const auto& r : a.related)
        if (r != a.conference) conferences.push_back(r);

    std::optional<AifContext> aif;
    if (!a.snapshot.empty()) aif.emplace(read_snapshot(a.snapshot), a.aif_window);
    else if (spec.aif)
        std::fprintf(stderr,
                     "warning: author-impact features requested without --snapshot; "
                     "they will be imputed as absent\n");

    const FeatureMatrix matrix =
        assemble(panel, spec, a.target_year, conferences, aif ? &*aif : nullptr);
    write_feature_matrix(matrix, spec, a.out);
    std::printf("features: %zu rows x %zu columns (%lld zero-extended cells, %lld imputed rows) -> %s\n",
                matrix.row_count(), matrix.column_count(), matrix.zero_extended_cells,
                matrix.aif_imputed_rows, a.out.c_str());
    return 0;
}

// ----------------------------------------------------------------- train ---

struct TrainArgs {
    std::string family, features, config, panel, conference, model_out;
    int target_year = 0;
    int window = 5;
};

int run_train(const TrainArgs& a) {
    const ModelFamily family = model_family_from_string(a.family);
    nlohmann::json out;
    if (family == ModelFamily::probabilities) {
        if (a.panel.empty() || a.conference.empty() || a.target_year == 0)
            throw config_error("probabilities training needs --panel, --conference, and --target-year");
        const RelevancePanel panel = read_panel(a.panel);
        const auto counts = prob_counts(panel, a.conference, a.target_year, a.window);
        const ProbModel model =
            prob_fit(counts, std::max(panel.first_year(), a.target_year - a.window),
                     std::min(panel.last_year(), a.target_year - 1));
        out = model.to_json();
    } else {
        if (a.features.empty())
            throw config_error(a.family + " training needs --features");
        const FeatureMatrix m = read_feature_matrix(a.features);
        if (!m.has_target())
            throw data_error("feature matrix has no realized targets; assemble it at a target "
                             "year inside the panel");
        if (family == ModelFamily::gbdt) {
            GbdtConfig cfg;
            if (!a.config.empty()) cfg = GbdtConfig::from_json(parse_json_config(a.config));
            out = gbdt_fit(m, m.targets(), cfg).to_json();
        } else {
            MixedFitOptions options;
            if (!a.config.empty()) {
                const auto j = parse_json_config(a.config);
                options.tolerance = j.value("tolerance", options.tolerance);
                options.max_iterations = j.value("max_iterations", options.max_iterations);
                options.force_zero_group_variance =
                    j.value("force_zero_group_variance", options.force_zero_group_variance);
            }
            out = mixed_fit(m, m.targets(), group_labels(m), options).to_json();
        }
    }
    write_json(a.model_out, out);
    std::printf("model (%s) -> %s\n", a.family.c_str(), a.model_out.c_str());
    return 0;
}

// --------------------------------------------------------------- predict ---

struct PredictArgs {
    std::string model_in, features, conference, out;
    int target_year = 0;
};

int run_predict(const PredictArgs& a) {
    const nlohmann::json j = parse_json_data(a.model_in);
    const std::string family = j.value("family", "");

    RankedList ranked;
    if (family == "probabilities") {
        const ProbModel model = ProbModel::from_json(j);
        if (a.conference.empty())
            throw config_error("probabilities prediction needs --conference for the ranking label");
        const int year = a.target_year != 0 ? a.target_year : model.window_last_year + 1;
        ranked = prob_rank(model, a.conference, year);
    } else if (family == "gbdt" || family == "mixed") {
        if (a.features.empty()) throw config_error(family + " prediction needs --features");
        const FeatureMatrix rows = read_feature_matrix(a.features);
        if (rows.row_count() == 0) throw data_error("feature matrix has no rows");
        std::vector<double> predictions;
        if (family == "gbdt") {
            predictions = gbdt_predict(GbdtModel::from_json(j), rows);
        } else {
            predictions = mixed_predict(MixedModel::from_json(j), rows, group_labels(rows));
        }
        std::map<std::string, double> scores;
        const std::string conference =
            a.conference.empty() ? rows.keys().front().conference : a.conference;
        for (size_t r = 0; r < rows.row_count(); ++r) {
            const auto& key = rows.keys()[r];
            if (key.conference != conference) continue;
            scores[key.affiliation] = predictions[r];
        }
        if (scores.empty())
            throw data_error("no feature rows for conference: " + conference);
        const int year = a.target_year != 0 ? a.target_year : rows.keys().front().target_year;
        ranked = make_ranked_list(conference, year, scores);
    } else {
        throw data_error("unrecognized model family in " + a.model_in + ": '" + family + "'");
    }
    write_ranking(a.out, ranked);
    std::printf("ranking: %zu affiliations for %s %d -> %s\n", ranked.entries.size(),
                ranked.conference.c_str(), ranked.target_year, a.out.c_str());
    return 0;
}

// -------------------------------------------------------------- evaluate ---

struct EvaluateArgs {
    std::string predicted, truth, out;
    size_t k = 20;
};

int run_evaluate(const EvaluateArgs& a) {
    const RankedList ranked = read_ranking(a.predicted);
    const auto truth = read_truth(a.truth);
    const NdcgReport report = ndcg_at_k(ranked, truth, a.k);
    const nlohmann::json j = {{"k", a.k},
                              {"dcg", report.dcg},
                              {"idcg", report.idcg},
                              {"ndcg", report.ndcg},
                              {"all_zero_truth", report.all_zero_truth}};
    if (!a.out.empty()) write_json(a.out, j);
    else std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

// --------------------------------------------------------- backtest/grid ---

struct GridArgs {
    std::string panel, grid_config, snapshot, report_out, spec_name;
    int jobs = 0;
    int aif_window = 2;
    int related_count = -1;
    bool single = false; // backtest: one configuration instead of the grid
};

int run_grid(const GridArgs& a) {
    const RelevancePanel panel = read_panel(a.panel);
    GridConfig grid = GridConfig::from_json(parse_json_config(a.grid_config));
    if (a.jobs > 0) grid.jobs = a.jobs;

    if (a.single) {
        if (!a.spec_name.empty()) {
            std::vector<FeatureSetSpec> picked;
            for (const auto& s : grid.feature_sets)
                if (s.name == a.spec_name) picked.push_back(s);
            if (picked.empty())
                throw config_error("no feature set named '" + a.spec_name + "' in " + a.grid_config);
            grid.feature_sets = std::move(picked);
        } else {
            grid.feature_sets.resize(1);
        }
        grid.related_counts = {a.related_count >= 0 ? a.related_count : grid.related_counts.front()};
    }

    std::optional<AifContext> aif;
    if (!a.snapshot.empty()) aif.emplace(read_snapshot(a.snapshot), a.aif_window);
    const BacktestReport report = grid_search(panel, grid, aif ? &*aif : nullptr);
    write_json(a.report_out, report.to_json());

    size_t feasible = 0;
    for (const auto& c : report.cells) feasible += c.feasible ? 1 : 0;
    std::printf("report: %zu cells (%zu feasible), %zu baseline years -> %s\n",
                report.cells.size(), feasible, report.baseline.size(), a.report_out.c_str());
    return 0;
}

// ---------------------------------------------------------------- select ---

struct SelectArgs {
    std::string report, out;
};

int run_select(const SelectArgs& a) {
    const BacktestReport report = BacktestReport::from_json(parse_json_data(a.report));
    const Selection selection = select_config(report);
    const nlohmann::json j = selection.to_json();
    if (!a.out.empty()) write_json(a.out, j);
    else std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"affrank: rank research affiliations by predicted conference relevance"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* cmd_ingest =
        app.add_subcommand("ingest", "Parse dump tables and sample a corpus snapshot");
    cmd_ingest->add_option("--papers", ingest.papers, "papers table (TSV, .gz accepted)")->required();
    cmd_ingest->add_option("--links", ingest.links, "paper-author-affiliation table")->required();
    cmd_ingest->add_option("--refs", ingest.refs, "citation table");
    cmd_ingest->add_option("--keywords", ingest.keywords, "paper-keyword table");
    cmd_ingest->add_option("--flags", ingest.flags, "full-research paper ids, one per line");
    cmd_ingest->add_option("--schema", ingest.schema, "column map JSON (defaults to the MAG layout)");
    cmd_ingest->add_option("--conferences", ingest.conferences, "target conference series ids")
        ->required()
        ->delimiter(',');
    cmd_ingest->add_option("--seed-years", ingest.seed_years, "seed paper year range LO:HI")->required();
    cmd_ingest->add_option("--author-floor", ingest.author_floor,
                           "keep authors' other papers from this year on (default: range start)");
    cmd_ingest->add_option("--depth", ingest.depth, "citation BFS depth (default 0)");
    cmd_ingest->add_option("--direction", ingest.direction, "BFS edge direction: out, in, or both");
    cmd_ingest->add_option("--out", ingest.out, "snapshot output directory")->required();

    PanelArgs panel;
    auto* cmd_panel = app.add_subcommand("panel", "Aggregate a snapshot into a relevance panel");
    cmd_panel->add_option("--snapshot", panel.snapshot, "snapshot directory")->required();
    cmd_panel->add_option("--conferences", panel.conferences, "conferences to include")
        ->required()
        ->delimiter(',');
    cmd_panel->add_option("--years", panel.years, "panel year range LO:HI")->required();
    cmd_panel->add_option("--filter", panel.filter, "paper filter: full (default) or all");
    cmd_panel->add_option("--cap", panel.cap, "keep only the top-N affiliations (0 = all)");
    cmd_panel->add_option("--out", panel.out, "panel TSV path (manifest written alongside)")->required();

    SimilarArgs similar;
    auto* cmd_similar = app.add_subcommand("similar", "Rank conferences related to a target");
    cmd_similar->add_option("--panel-corpus", similar.corpus, "snapshot directory to profile")->required();
    cmd_similar->add_option("--target", similar.target, "target conference")->required();
    cmd_similar->add_option("--k", similar.k, "neighbors to keep (default 5)");
    cmd_similar->add_option("--basis", similar.basis, "authors (default), keywords, or rank-fusion");
    cmd_similar->add_option("--years", similar.years, "profile year range LO:HI (default: all)");
    cmd_similar->add_option("--filter", similar.filter, "paper filter: full or all (default)");
    cmd_similar->add_option("--min-profile", similar.min_profile,
                            "drop conferences with fewer distinct authors");
    cmd_similar->add_option("--out", similar.out, "report TSV path (default: stdout)");

    FeaturesArgs features;
    auto* cmd_features = app.add_subcommand("features", "Assemble a feature matrix from a panel");
    cmd_features->add_option("--panel", features.panel, "panel TSV path")->required();
    cmd_features->add_option("--spec", features.spec, "feature set spec JSON")->required();
    cmd_features->add_option("--target-year", features.target_year, "target year of the rows")->required();
    cmd_features->add_option("--conference", features.conference, "main conference")->required();
    cmd_features->add_option("--related", features.related, "extra conferences pooled into the rows")
        ->delimiter(',');
    cmd_features->add_option("--snapshot", features.snapshot,
                             "snapshot directory (needed for author-impact features)");
    cmd_features->add_option("--aif-window", features.aif_window,
                             "author-impact citation window in years (default 2)");
    cmd_features->add_option("--out", features.out, "feature matrix TSV path")->required();

    TrainArgs train;
    auto* cmd_train = app.add_subcommand("train", "Fit a model and write it as JSON");
    cmd_train->add_option("--model-family", train.family, "probabilities, gbdt, or mixed")->required();
    cmd_train->add_option("--features", train.features, "training feature matrix (gbdt, mixed)");
    cmd_train->add_option("--config", train.config, "hyperparameter JSON");
    cmd_train->add_option("--panel", train.panel, "panel TSV (probabilities)");
    cmd_train->add_option("--conference", train.conference, "conference to count (probabilities)");
    cmd_train->add_option("--target-year", train.target_year, "year the counts lead up to (probabilities)");
    cmd_train->add_option("--window", train.window, "counting window in years (default 5)");
    cmd_train->add_option("--model-out", train.model_out, "model JSON path")->required();

    PredictArgs predict;
    auto* cmd_predict = app.add_subcommand("predict", "Rank affiliations with a trained model");
    cmd_predict->add_option("--model-in", predict.model_in, "model JSON path")->required();
    cmd_predict->add_option("--features", predict.features, "feature matrix to score (gbdt, mixed)");
    cmd_predict->add_option("--conference", predict.conference,
                            "conference to rank (default: taken from the features)");
    cmd_predict->add_option("--target-year", predict.target_year,
                            "year label for the ranking (default: inferred)");
    cmd_predict->add_option("--out", predict.out, "ranking TSV path")->required();

    EvaluateArgs evaluate;
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Score a ranking against true relevances");
    cmd_evaluate->add_option("--predicted", evaluate.predicted, "ranking TSV")->required();
    cmd_evaluate->add_option("--truth", evaluate.truth, "truth TSV (affiliation, relevance)")->required();
    cmd_evaluate->add_option("--k", evaluate.k, "cutoff (default 20)");
    cmd_evaluate->add_option("--out", evaluate.out, "write the NDCG report JSON here instead of stdout");

    GridArgs backtest;
    backtest.single = true;
    auto* cmd_backtest =
        app.add_subcommand("backtest", "Evaluate one configuration across validation years");
    cmd_backtest->add_option("--panel", backtest.panel, "panel TSV path")->required();
    cmd_backtest->add_option("--grid-config", backtest.grid_config, "grid config JSON")->required();
    cmd_backtest->add_option("--spec-name", backtest.spec_name,
                             "feature set to use (default: first in the config)");
    cmd_backtest->add_option("--related-count", backtest.related_count,
                             "related conferences to pool (default: first in the config)");
    cmd_backtest->add_option("--snapshot", backtest.snapshot,
                             "snapshot directory (needed for author-impact features)");
    cmd_backtest->add_option("--aif-window", backtest.aif_window, "author-impact window (default 2)");
    cmd_backtest->add_option("--jobs", backtest.jobs, "worker threads (default: from the config)");
    cmd_backtest->add_option("--report-out", backtest.report_out, "report JSON path")->required();

    GridArgs grid;
    auto* cmd_grid = app.add_subcommand("grid", "Evaluate the full configuration grid");
    cmd_grid->add_option("--panel", grid.panel, "panel TSV path")->required();
    cmd_grid->add_option("--grid-config", grid.grid_config, "grid config JSON")->required();
    cmd_grid->add_option("--snapshot", grid.snapshot,
                         "snapshot directory (needed for author-impact features)");
    cmd_grid->add_option("--aif-window", grid.aif_window, "author-impact window (default 2)");
    cmd_grid->add_option("--jobs", grid.jobs, "worker threads (default: from the config)");
    cmd_grid->add_option("--report-out", grid.report_out, "report JSON path")->required();

    SelectArgs select;
    auto* cmd_select = app.add_subcommand("select", "Pick the winning configuration from a report");
    cmd_select->add_option("--report", select.report, "grid report JSON")->required();
    cmd_select->add_option("--out", select.out, "write the selection JSON here instead of stdout");

    try {
        app.parse(argc, argv);
        ingest.author_floor_set = cmd_ingest->count("--author-floor") > 0;
        if (*cmd_ingest) return run_ingest(ingest);
        if (*cmd_panel) return run_panel(panel);
        if (*cmd_similar) return run_similar(similar);
        if (*cmd_features) return run_features(features);
        if (*cmd_train) return run_train(train);
        if (*cmd_predict) return run_predict(predict);
        if (*cmd_evaluate) return run_evaluate(evaluate);
        if (*cmd_backtest) return run_grid(backtest);
        if (*cmd_grid) return run_grid(grid);
        if (*cmd_select) return run_select(select);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const infeasible_error& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 3;
    } catch (const data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
