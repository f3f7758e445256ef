#pragma once

#include <algorithm>
#include <map>
#include <string>

#include <json.hpp>

#include "affrank/errors.hpp"
#include "affrank/ndcg.hpp"
#include "affrank/relevance.hpp"

namespace affrank {

/// Count-proportion baseline: an affiliation's score is its share of accepted
/// papers over a trailing year window.
struct ProbModel {
    std::map<std::string, double> scores; // sum to 1 over a nonempty input
    int window_first_year = 0;
    int window_last_year = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format_version"] = 1;
        j["family"] = "probabilities";
        j["window"] = {{"first_year", window_first_year}, {"last_year", window_last_year}};
        j["scores"] = scores;
        return j;
    }

    static ProbModel from_json(const nlohmann::json& j) {
        ProbModel m;
        if (j.value("family", "") != std::string("probabilities"))
            throw config_error("model file is not a probabilities model");
        m.window_first_year = j.at("window").at("first_year").get<int>();
        m.window_last_year = j.at("window").at("last_year").get<int>();
        m.scores = j.at("scores").get<std::map<std::string, double>>();
        return m;
    }
};

/// Normalizes paper counts into probabilities. All-zero counts are an error.
inline ProbModel prob_fit(const std::map<std::string, long long>& counts, int window_first_year,
                          int window_last_year) {
    long long total = 0;
    for (const auto& [_, n] : counts) {
        if (n < 0) throw data_error("prob_fit: negative count");
        total += n;
    }
    if (total <= 0) throw data_error("prob_fit: no papers in the counting window");
    ProbModel model;
    model.window_first_year = window_first_year;
    model.window_last_year = window_last_year;
    for (const auto& [affil, n] : counts)
        model.scores[affil] = static_cast<double>(n) / static_cast<double>(total);
    return model;
}

/// Paper counts for one conference over the window [target_year - window,
/// target_year - 1], clamped to the panel's year coverage.
inline std::map<std::string, long long> prob_counts(const RelevancePanel& panel,
                                                    const std::string& conference, int target_year,
                                                    int window = 5) {
    if (window < 1) throw config_error("prob_counts: window must be >= 1");
    const size_t c = panel.conference_index(conference);
    const int lo = std::max(panel.first_year(), target_year - window);
    const int hi = std::min(panel.last_year(), target_year - 1);
    if (lo > hi) throw data_error("prob_counts: no panel years precede the target year");
    std::map<std::string, long long> counts;
    for (size_t a = 0; a < panel.affiliations().size(); ++a) {
        long long n = 0;
        for (int y = lo; y <= hi; ++y) n += panel.paper_count(c, a, y);
        counts[panel.affiliations()[a]] = n;
    }
    return counts;
}

/// Ranking = descending probability, ties by affiliation id.
inline RankedList prob_rank(const ProbModel& model, const std::string& conference, int target_year) {
    return make_ranked_list(conference, target_year, model.scores);
}

} // namespace affrank
