#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "affrank/aif.hpp"
#include "affrank/errors.hpp"
#include "affrank/features.hpp"
#include "affrank/gbdt.hpp"
#include "affrank/mixed_model.hpp"
#include "affrank/ndcg.hpp"
#include "affrank/prob_model.hpp"
#include "affrank/relevance.hpp"
#include "affrank/strings.hpp"

namespace affrank {

enum class ModelFamily { probabilities, gbdt, mixed };

inline ModelFamily model_family_from_string(const std::string& s) {
    if (s == "probabilities") return ModelFamily::probabilities;
    if (s == "gbdt") return ModelFamily::gbdt;
    if (s == "mixed") return ModelFamily::mixed;
    throw config_error("unknown model family: " + s);
}

inline std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::probabilities: return "probabilities";
        case ModelFamily::gbdt: return "gbdt";
        case ModelFamily::mixed: return "mixed";
    }
    return "probabilities";
}

/// Everything one backtest cell needs besides the panel and the feature set.
struct BacktestParams {
    std::string main_conference;
    std::vector<std::string> related; // pooled into training rows only
    std::vector<int> train_years;     // candidate target years for training rows
    int validation_year = 0;
    ModelFamily family = ModelFamily::gbdt;
    GbdtConfig gbdt;
    MixedFitOptions mixed;
    int prob_window = 5;
    size_t k = 20;
    const AifContext* aif = nullptr;
};

struct BacktestOutcome {
    bool feasible = false;
    std::string infeasible_reason;
    NdcgReport ndcg;
    RankedList ranking;
    size_t related_used = 0;
    size_t training_rows = 0;
};

namespace detail {

inline std::string group_label(const std::string& conference, const std::string& affiliation) {
    return conference + "|" + affiliation;
}

/// True relevance of the main conference's panel slice at one year.
inline std::map<std::string, double> panel_truth(const RelevancePanel& panel,
                                                 const std::string& conference, int year) {
    const size_t c = panel.conference_index(conference);
    std::map<std::string, double> truth;
    for (size_t a = 0; a < panel.affiliations().size(); ++a)
        truth[panel.affiliations()[a]] = panel.relevance(c, a, year);
    return truth;
}

} // namespace detail

/// Trains on feature rows whose targets precede the validation year (related
/// conferences pooled in), predicts the main conference's validation-year
/// relevances, and scores the resulting ranking against the true panel slice.
/// Years without enough history come back marked infeasible instead of
/// throwing.
inline BacktestOutcome backtest_cell(const RelevancePanel& panel, const FeatureSetSpec& spec,
                                     const BacktestParams& params) {
    BacktestOutcome out;
    panel.conference_index(params.main_conference); // unknown main conference is an error

    if (params.validation_year > panel.last_year()) {
        out.infeasible_reason = "validation year past panel coverage";
        return out;
    }
    if (params.validation_year < panel.first_year() + 1) {
        out.infeasible_reason = "no panel history before validation year";
        return out;
    }

    // Per-prediction tie-break data: last known true relevance before the
    // validation year.
    const auto recent = detail::panel_truth(panel, params.main_conference, params.validation_year - 1);
    const auto truth = detail::panel_truth(panel, params.main_conference, params.validation_year);

    std::map<std::string, double> scores;
    if (params.family == ModelFamily::probabilities) {
        auto counts = prob_counts(panel, params.main_conference, params.validation_year,
                                  params.prob_window);
        long long total = 0;
        for (const auto& [_, n] : counts) total += n;
        if (total <= 0) {
            out.infeasible_reason = "no papers in the probability window";
            return out;
        }
        const ProbModel model =
            prob_fit(counts, std::max(panel.first_year(), params.validation_year - params.prob_window),
                     params.validation_year - 1);
        scores = model.scores;
    } else {
        std::vector<int> train_years;
        for (int t : params.train_years)
            if (t >= panel.first_year() + 1 && t <= panel.last_year() && t < params.validation_year)
                train_years.push_back(t);
        std::sort(train_years.begin(), train_years.end());
        train_years.erase(std::unique(train_years.begin(), train_years.end()), train_years.end());
        if (train_years.empty()) {
            out.infeasible_reason = "no feasible training target years";
            return out;
        }

        std::vector<std::string> train_confs{params.main_conference};
        for (const auto& r : params.related)
            if (panel.has_conference(r) && r != params.main_conference) train_confs.push_back(r);
        out.related_used = train_confs.size() - 1;

        FeatureMatrix train;
        for (size_t i = 0; i < train_years.size(); ++i) {
            FeatureMatrix part = assemble(panel, spec, train_years[i], train_confs, params.aif);
            if (i == 0) train = std::move(part);
            else train.vstack(part);
        }
        out.training_rows = train.row_count();

        const FeatureMatrix predict_rows =
            assemble(panel, spec, params.validation_year, {params.main_conference}, params.aif);

        std::vector<double> predictions;
        if (params.family == ModelFamily::gbdt) {
            const GbdtModel model = gbdt_fit(train, train.targets(), params.gbdt);
            predictions = gbdt_predict(model, predict_rows);
        } else {
            std::vector<std::string> train_groups, predict_groups;
            train_groups.reserve(train.row_count());
            for (const auto& key : train.keys())
                train_groups.push_back(detail::group_label(key.conference, key.affiliation));
            predict_groups.reserve(predict_rows.row_count());
            for (const auto& key : predict_rows.keys())
                predict_groups.push_back(detail::group_label(key.conference, key.affiliation));
            const MixedModel model = mixed_fit(train, train.targets(), train_groups, params.mixed);
            predictions = mixed_predict(model, predict_rows, predict_groups);
        }
        for (size_t r = 0; r < predict_rows.row_count(); ++r)
            scores[predict_rows.keys()[r].affiliation] = predictions[r];
    }

    out.ranking = make_ranked_list(params.main_conference, params.validation_year, scores, recent);
    out.ndcg = ndcg_at_k(out.ranking, truth, params.k);
    out.feasible = true;
    return out;
}

/// The tuning grid: feature sets x related-conference counts x validation
/// years, all evaluated with one model family against the probabilities
/// baseline.
struct GridConfig {
    std::string main_conference;
    std::vector<FeatureSetSpec> feature_sets;
    std::vector<int> related_counts;
    std::vector<std::string> related_ranking; // best-first; counts take prefixes
    std::vector<int> validation_years;
    ModelFamily family = ModelFamily::gbdt;
    GbdtConfig gbdt;
    MixedFitOptions mixed;
    int prob_window = 5;
    size_t k = 20;
    int jobs = 1;

    void validate() const {
        if (main_conference.empty()) throw config_error("grid: main_conference is required");
        if (feature_sets.empty()) throw config_error("grid: no feature sets");
        if (related_counts.empty()) throw config_error("grid: no related-conference counts");
        if (validation_years.empty()) throw config_error("grid: no validation years");
        for (int c : related_counts)
            if (c < 0) throw config_error("grid: related count must be >= 0");
        std::vector<std::string> names;
        for (const auto& s : feature_sets) {
            s.validate();
            if (s.name.empty()) throw config_error("grid: every feature set needs a name");
            names.push_back(s.name);
        }
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end())
            throw config_error("grid: duplicate feature set name");
        if (jobs < 1) throw config_error("grid: jobs must be >= 1");
    }

    nlohmann::json to_json() const {
        nlohmann::json sets = nlohmann::json::array();
        for (const auto& s : feature_sets) sets.push_back(s.to_json());
        return {{"main_conference", main_conference},
                {"feature_sets", std::move(sets)},
                {"related_counts", related_counts},
                {"related_ranking", related_ranking},
                {"validation_years", validation_years},
                {"model_family", to_string(family)},
                {"gbdt", gbdt.to_json()},
                {"mixed",
                 {{"tolerance", mixed.tolerance},
                  {"max_iterations", mixed.max_iterations},
                  {"force_zero_group_variance", mixed.force_zero_group_variance}}},
                {"prob_window", prob_window},
                {"k", k},
                {"jobs", jobs}};
    }

    static GridConfig from_json(const nlohmann::json& j) {
        GridConfig g;
        g.main_conference = j.value("main_conference", "");
        if (j.contains("feature_sets"))
            for (const auto& js : j.at("feature_sets"))
                g.feature_sets.push_back(FeatureSetSpec::from_json(js));
        if (j.contains("related_counts"))
            g.related_counts = j.at("related_counts").get<std::vector<int>>();
        if (j.contains("related_ranking"))
            g.related_ranking = j.at("related_ranking").get<std::vector<std::string>>();
        if (j.contains("validation_years"))
            g.validation_years = j.at("validation_years").get<std::vector<int>>();
        if (j.contains("model_family"))
            g.family = model_family_from_string(j.at("model_family").get<std::string>());
        if (j.contains("gbdt")) g.gbdt = GbdtConfig::from_json(j.at("gbdt"));
        if (j.contains("mixed")) {
            const auto& jm = j.at("mixed");
            g.mixed.tolerance = jm.value("tolerance", g.mixed.tolerance);
            g.mixed.max_iterations = jm.value("max_iterations", g.mixed.max_iterations);
            g.mixed.force_zero_group_variance =
                jm.value("force_zero_group_variance", g.mixed.force_zero_group_variance);
        }
        g.prob_window = j.value("prob_window", g.prob_window);
        g.k = j.value("k", g.k);
        g.jobs = j.value("jobs", g.jobs);
        g.validate();
        return g;
    }
};

/// Grid results: one cell per (feature set, related count, year) plus the
/// baseline row per year; infeasible cells stay in the report with a reason.
struct BacktestReport {
    struct Cell {
        std::string spec_name;
        int related_count = 0;
        int year = 0;
        bool feasible = false;
        std::string infeasible_reason;
        double ndcg = 0.0;
        double dcg = 0.0;
        double idcg = 0.0;
        bool all_zero_truth = false;
        size_t related_used = 0;
        size_t training_rows = 0;
    };
    struct BaselineCell {
        int year = 0;
        bool feasible = false;
        std::string infeasible_reason;
        double ndcg = 0.0;
    };
    struct ConfigInfo {
        std::string spec_name;
        size_t feature_count = 0;
    };

    std::string main_conference;
    ModelFamily family = ModelFamily::gbdt;
    size_t k = 20;
    std::vector<Cell> cells;
    std::vector<BaselineCell> baseline;
    std::vector<ConfigInfo> configs;

    nlohmann::json to_json() const {
        nlohmann::json jcells = nlohmann::json::array();
        for (const auto& c : cells) {
            jcells.push_back({{"spec_name", c.spec_name},
                              {"related_count", c.related_count},
                              {"year", c.year},
                              {"feasible", c.feasible},
                              {"infeasible_reason", c.infeasible_reason},
                              {"ndcg", c.ndcg},
                              {"dcg", c.dcg},
                              {"idcg", c.idcg},
                              {"all_zero_truth", c.all_zero_truth},
                              {"related_used", c.related_used},
                              {"training_rows", c.training_rows}});
        }
        nlohmann::json jbase = nlohmann::json::array();
        for (const auto& b : baseline)
            jbase.push_back({{"year", b.year},
                             {"feasible", b.feasible},
                             {"infeasible_reason", b.infeasible_reason},
                             {"ndcg", b.ndcg}});
        nlohmann::json jconfigs = nlohmann::json::array();
        for (const auto& c : configs)
            jconfigs.push_back({{"spec_name", c.spec_name}, {"feature_count", c.feature_count}});
        return {{"format_version", 1},
                {"main_conference", main_conference},
                {"model_family", to_string(family)},
                {"k", k},
                {"cells", std::move(jcells)},
                {"baseline", std::move(jbase)},
                {"configs", std::move(jconfigs)}};
    }

    static BacktestReport from_json(const nlohmann::json& j) {
        BacktestReport r;
        r.main_conference = j.value("main_conference", "");
        r.family = model_family_from_string(j.value("model_family", "gbdt"));
        r.k = j.value("k", size_t{20});
        for (const auto& jc : j.at("cells")) {
            Cell c;
            c.spec_name = jc.at("spec_name").get<std::string>();
            c.related_count = jc.at("related_count").get<int>();
            c.year = jc.at("year").get<int>();
            c.feasible = jc.at("feasible").get<bool>();
            c.infeasible_reason = jc.value("infeasible_reason", "");
            c.ndcg = jc.value("ndcg", 0.0);
            c.dcg = jc.value("dcg", 0.0);
            c.idcg = jc.value("idcg", 0.0);
            c.all_zero_truth = jc.value("all_zero_truth", false);
            c.related_used = jc.value("related_used", size_t{0});
            c.training_rows = jc.value("training_rows", size_t{0});
            r.cells.push_back(std::move(c));
        }
        for (const auto& jb : j.at("baseline")) {
            BaselineCell b;
            b.year = jb.at("year").get<int>();
            b.feasible = jb.at("feasible").get<bool>();
            b.infeasible_reason = jb.value("infeasible_reason", "");
            b.ndcg = jb.value("ndcg", 0.0);
            r.baseline.push_back(b);
        }
        if (j.contains("configs"))
            for (const auto& jc : j.at("configs"))
                r.configs.push_back(
                    {jc.at("spec_name").get<std::string>(), jc.at("feature_count").get<size_t>()});
        return r;
    }
};

/// Evaluates the full Cartesian grid. Cells are independent; up to
/// `grid.jobs` worker threads process them, and the report order never
/// depends on scheduling.
inline BacktestReport grid_search(const RelevancePanel& panel, const GridConfig& grid,
                                  const AifContext* aif = nullptr) {
    grid.validate();
    BacktestReport report;
    report.main_conference = grid.main_conference;
    report.family = grid.family;
    report.k = grid.k;
    for (const auto& s : grid.feature_sets) report.configs.push_back({s.name, s.feature_count()});

    std::vector<int> train_year_pool;
    for (int y = panel.first_year(); y <= panel.last_year(); ++y) train_year_pool.push_back(y);

    struct Job {
        const FeatureSetSpec* spec;
        int related_count;
        int year;
        bool is_baseline;
    };
    std::vector<Job> jobs;
    for (const auto& s : grid.feature_sets)
        for (int rc : grid.related_counts)
            for (int year : grid.validation_years) jobs.push_back({&s, rc, year, false});
    for (int year : grid.validation_years) jobs.push_back({nullptr, 0, year, true});

    std::vector<BacktestOutcome> outcomes(jobs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            const Job& job = jobs[i];
            BacktestParams params;
            params.main_conference = grid.main_conference;
            params.validation_year = job.year;
            params.train_years = train_year_pool;
            params.prob_window = grid.prob_window;
            params.k = grid.k;
            params.aif = aif;
            if (job.is_baseline) {
                params.family = ModelFamily::probabilities;
                outcomes[i] = backtest_cell(panel, FeatureSetSpec{}, params);
            } else {
                params.family = grid.family;
                params.gbdt = grid.gbdt;
                params.mixed = grid.mixed;
                const size_t rc = std::min<size_t>(static_cast<size_t>(job.related_count),
                                                   grid.related_ranking.size());
                params.related.assign(grid.related_ranking.begin(),
                                      grid.related_ranking.begin() + static_cast<long>(rc));
                outcomes[i] = backtest_cell(panel, *job.spec, params);
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(grid.jobs, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (size_t i = 0; i < jobs.size(); ++i) {
        const Job& job = jobs[i];
        const BacktestOutcome& o = outcomes[i];
        if (job.is_baseline) {
            report.baseline.push_back({job.year, o.feasible, o.infeasible_reason, o.ndcg.ndcg});
        } else {
            BacktestReport::Cell c;
            c.spec_name = job.spec->name;
            c.related_count = job.related_count;
            c.year = job.year;
            c.feasible = o.feasible;
            c.infeasible_reason = o.infeasible_reason;
            c.ndcg = o.ndcg.ndcg;
            c.dcg = o.ndcg.dcg;
            c.idcg = o.ndcg.idcg;
            c.all_zero_truth = o.ndcg.all_zero_truth;
            c.related_used = o.related_used;
            c.training_rows = o.training_rows;
            report.cells.push_back(std::move(c));
        }
    }
    auto cell_key = [](const BacktestReport::Cell& c) {
        return std::tuple(c.spec_name, c.related_count, c.year);
    };
    std::sort(report.cells.begin(), report.cells.end(),
              [&](const auto& a, const auto& b) { return cell_key(a) < cell_key(b); });
    std::sort(report.baseline.begin(), report.baseline.end(),
              [](const auto& a, const auto& b) { return a.year < b.year; });
    std::sort(report.configs.begin(), report.configs.end(),
              [](const auto& a, const auto& b) { return a.spec_name < b.spec_name; });
    return report;
}

/// The winning configuration of a grid report, or the baseline as a flagged
/// fallback when nothing dominates it.
struct Selection {
    bool baseline_fallback = false;
    std::string spec_name; // empty for the fallback
    int related_count = 0;
    double mean_ndcg = 0.0;
    std::vector<int> years; // the baseline-feasible years the mean covers

    nlohmann::json to_json() const {
        return {{"baseline_fallback", baseline_fallback},
                {"spec_name", spec_name},
                {"related_count", related_count},
                {"mean_ndcg", mean_ndcg},
                {"years", years}};
    }
};

/// Picks, among configurations that match or beat the baseline NDCG in every
/// baseline-feasible year, the one with the highest mean NDCG; ties prefer
/// fewer features, then fewer related conferences. With no dominator the
/// baseline itself is returned, flagged.
inline Selection select_config(const BacktestReport& report) {
    if (report.cells.empty()) throw data_error("select_config: report has no cells");

    std::map<int, double> baseline_ndcg;
    for (const auto& b : report.baseline)
        if (b.feasible) baseline_ndcg.emplace(b.year, b.ndcg);
    if (baseline_ndcg.empty())
        throw infeasible_error("select_config: the baseline is infeasible in every year");

    std::map<std::string, size_t> feature_count_of;
    for (const auto& c : report.configs) feature_count_of.emplace(c.spec_name, c.feature_count);

    struct Candidate {
        std::string spec_name;
        int related_count;
        std::map<int, double> ndcg_by_year;
    };
    std::map<std::pair<std::string, int>, Candidate> candidates;
    for (const auto& c : report.cells) {
        auto& cand = candidates[{c.spec_name, c.related_count}];
        cand.spec_name = c.spec_name;
        cand.related_count = c.related_count;
        if (c.feasible) cand.ndcg_by_year.emplace(c.year, c.ndcg);
    }

    bool any_fully_feasible = false;
    std::optional<Selection> best;
    size_t best_features = 0;
    for (const auto& [_, cand] : candidates) {
        bool fully_feasible = true;
        bool dominates = true;
        double sum = 0.0;
        for (const auto& [year, base] : baseline_ndcg) {
            auto it = cand.ndcg_by_year.find(year);
            if (it == cand.ndcg_by_year.end()) {
                fully_feasible = false;
                break;
            }
            if (it->second < base) dominates = false;
            sum += it->second;
        }
        if (!fully_feasible) continue;
        any_fully_feasible = true;
        if (!dominates) continue;

        const double mean = sum / static_cast<double>(baseline_ndcg.size());
        auto fit = feature_count_of.find(cand.spec_name);
        const size_t n_features =
            fit == feature_count_of.end() ? std::numeric_limits<size_t>::max() : fit->second;
        bool better = false;
        if (!best) {
            better = true;
        } else if (mean != best->mean_ndcg) {
            better = mean > best->mean_ndcg;
        } else if (n_features != best_features) {
            better = n_features < best_features;
        } else if (cand.related_count != best->related_count) {
            better = cand.related_count < best->related_count;
        } else {
            better = cand.spec_name < best->spec_name;
        }
        if (better) {
            Selection s;
            s.spec_name = cand.spec_name;
            s.related_count = cand.related_count;
            s.mean_ndcg = mean;
            for (const auto& [year, _2] : baseline_ndcg) s.years.push_back(year);
            best = std::move(s);
            best_features = n_features;
        }
    }

    if (best) return *best;
    if (!any_fully_feasible)
        throw infeasible_error("select_config: no configuration is feasible in every baseline year");

    Selection fallback;
    fallback.baseline_fallback = true;
    double sum = 0.0;
    for (const auto& [year, ndcg] : baseline_ndcg) {
        sum += ndcg;
        fallback.years.push_back(year);
    }
    fallback.mean_ndcg = sum / static_cast<double>(baseline_ndcg.size());
    return fallback;
}

/// Ranking interchange: TSV with rank, affiliation, score.
inline void write_ranking(const std::string& path, const RankedList& list) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write ranking: " + path);
    out << "rank\taffiliation\tscore\n";
    for (size_t i = 0; i < list.entries.size(); ++i)
        out << (i + 1) << '\t' << list.entries[i].affiliation << '\t'
            << format_double(list.entries[i].score) << '\n';
}

inline RankedList read_ranking(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open ranking: " + path);
    std::string line;
    if (!std::getline(in, line) || split(line, '\t') != std::vector<std::string_view>{"rank", "affiliation", "score"})
        throw data_error("unexpected ranking header in " + path);
    RankedList list;
    size_t expected = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw data_error("bad ranking row in " + path);
        if (require_int(cols[0], "rank") != static_cast<long long>(expected))
            throw data_error("ranking rows out of order in " + path);
        list.entries.push_back({std::string(cols[1]), require_double(cols[2], "score")});
        ++expected;
    }
    return list;
}

/// Truth interchange: TSV mapping affiliation to true relevance.
inline void write_truth(const std::string& path, const std::map<std::string, double>& truth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write truth: " + path);
    out << "affiliation\trelevance\n";
    for (const auto& [affil, rel] : truth) out << affil << '\t' << format_double(rel) << '\n';
}

inline std::map<std::string, double> read_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open truth: " + path);
    std::string line;
    if (!std::getline(in, line) || split(line, '\t') != std::vector<std::string_view>{"affiliation", "relevance"})
        throw data_error("unexpected truth header in " + path);
    std::map<std::string, double> truth;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) throw data_error("bad truth row in " + path);
        truth[std::string(cols[0])] = require_double(cols[1], "relevance");
    }
    return truth;
}

} // namespace affrank
