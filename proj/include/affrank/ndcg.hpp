#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "affrank/errors.hpp"

namespace affrank {

/// One scored ranking entry; lists are ordered best-first.
struct RankedEntry {
    std::string affiliation;
    double score = 0.0;
};

/// A prediction for one conference and target year, strictly ordered by the
/// documented tie-break chain.
struct RankedList {
    std::string conference;
    int target_year = 0;
    std::vector<RankedEntry> entries;
};

/// Builds a ranking from predicted scores. Ties break by descending
/// most-recent true relevance (pass an empty map when unavailable), then by
/// ascending affiliation id, so equal scores still order deterministically.
inline RankedList make_ranked_list(std::string conference, int target_year,
                                   const std::map<std::string, double>& scores,
                                   const std::map<std::string, double>& recent_relevance = {}) {
    RankedList list{std::move(conference), target_year, {}};
    list.entries.reserve(scores.size());
    for (const auto& [affil, score] : scores) list.entries.push_back({affil, score});
    auto recent = [&](const std::string& a) {
        auto it = recent_relevance.find(a);
        return it == recent_relevance.end() ? 0.0 : it->second;
    };
    std::sort(list.entries.begin(), list.entries.end(),
              [&](const RankedEntry& a, const RankedEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  const double ra = recent(a.affiliation), rb = recent(b.affiliation);
                  if (ra != rb) return ra > rb;
                  return a.affiliation < b.affiliation;
              });
    return list;
}

/// Discounted cumulative gain of relevances already in predicted order:
/// Σ_{i=1..min(k,n)} rel_i / log₂(i+1).
inline double dcg(std::span<const double> relevances_in_predicted_order, size_t k) {
    if (k < 1) throw config_error("dcg: k must be >= 1");
    double sum = 0.0;
    const size_t n = std::min(k, relevances_in_predicted_order.size());
    for (size_t i = 0; i < n; ++i) {
        const double rel = relevances_in_predicted_order[i];
        if (rel < 0.0) throw data_error("dcg: negative relevance");
        sum += rel / std::log2(static_cast<double>(i) + 2.0);
    }
    return sum;
}

struct NdcgReport {
    std::string conference;
    int year = 0;
    size_t k = 20;
    double dcg = 0.0;
    double idcg = 0.0;
    double ndcg = 0.0;
    bool all_zero_truth = false;
};

/// NDCG@k of a predicted ranking against true relevances. Affiliations absent
/// from the truth contribute zero gain; the ideal ordering is the truth sorted
/// descending. A truth with no positive relevance yields ndcg 0 with the
/// all_zero_truth flag raised.
inline NdcgReport ndcg_at_k(const RankedList& predicted,
                            const std::map<std::string, double>& truth, size_t k = 20) {
    if (truth.empty()) throw data_error("ndcg: empty truth");
    if (k < 1) throw config_error("ndcg: k must be >= 1");

    std::set<std::string> seen;
    std::vector<double> gains;
    gains.reserve(predicted.entries.size());
    for (const auto& e : predicted.entries) {
        if (!seen.insert(e.affiliation).second)
            throw data_error("ndcg: duplicate affiliation in prediction: " + e.affiliation);
        auto it = truth.find(e.affiliation);
        gains.push_back(it == truth.end() ? 0.0 : it->second);
    }

    std::vector<double> ideal;
    ideal.reserve(truth.size());
    for (const auto& [_, rel] : truth) {
        if (rel < 0.0) throw data_error("ndcg: negative relevance in truth");
        ideal.push_back(rel);
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    NdcgReport report;
    report.conference = predicted.conference;
    report.year = predicted.target_year;
    report.k = k;
    report.dcg = dcg(gains, k);
    report.idcg = dcg(ideal, k);
    if (report.idcg > 0.0) {
        report.ndcg = report.dcg / report.idcg;
    } else {
        report.ndcg = 0.0;
        report.all_zero_truth = true;
    }
    return report;
}

} // namespace affrank
