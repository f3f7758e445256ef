#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "affrank/aif.hpp"
#include "affrank/errors.hpp"
#include "affrank/forecast.hpp"
#include "affrank/relevance.hpp"
#include "affrank/strings.hpp"

namespace affrank {

/// Declarative selection of feature families. Window lists hold the y of the
/// corresponding family: a raw-lag window y contributes lags 1..y, a stats
/// window y contributes the six statistics over the last y years, a weighted
/// moving average window y contributes one column.
struct FeatureSetSpec {
    std::string name;
    std::vector<int> w_windows;   // raw lagged relevance
    std::vector<int> sw_windows;  // windowed statistics
    bool s_all = false;           // statistics over the full history
    std::vector<int> wt_windows;  // weighted moving averages
    bool drift = false;
    std::vector<double> ses_alphas; // fixed smoothing parameters
    bool ses_fitted = false;
    bool aif = false;
    int max_window = 4;

    bool empty() const {
        return w_windows.empty() && sw_windows.empty() && !s_all && wt_windows.empty() && !drift &&
               ses_alphas.empty() && !ses_fitted && !aif;
    }

    void validate() const {
        auto check_windows = [&](const std::vector<int>& ws, const char* what, int lo) {
            for (int w : ws) {
                if (w < lo || w > max_window)
                    throw config_error(std::string(what) + " window " + std::to_string(w) +
                                       " outside [" + std::to_string(lo) + ", " +
                                       std::to_string(max_window) + "]");
            }
        };
        check_windows(w_windows, "lag", 1);
        check_windows(sw_windows, "stats", 1);
        check_windows(wt_windows, "weighted moving average", 2);
        for (double a : ses_alphas)
            if (!(a > 0.0) || a > 1.0) throw config_error("SES alpha must be in (0, 1]");
    }

    /// Deterministic column list; also the realized feature count used as the
    /// model-selection tie-break.
    std::vector<std::string> column_names() const {
        static const char* kStatNames[] = {"std", "sum", "min", "max", "median", "mean"};
        std::vector<std::string> cols;
        for (int k = 1; k <= max_lag(); ++k) cols.push_back("rel_lag_" + std::to_string(k));
        for (int w : sorted_unique(sw_windows))
            for (const char* stat : kStatNames)
                cols.push_back("rel_w" + std::to_string(w) + "_" + stat);
        if (s_all)
            for (const char* stat : kStatNames) cols.push_back(std::string("rel_all_") + stat);
        for (int w : sorted_unique(wt_windows)) cols.push_back("rel_wma_" + std::to_string(w));
        if (drift) cols.push_back("rel_drift");
        for (double a : sorted_alphas()) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "rel_ses_%.2f", a);
            cols.push_back(buf);
        }
        if (ses_fitted) cols.push_back("rel_ses_fit");
        if (aif) {
            for (const char* stat : kStatNames) cols.push_back(std::string("aif_") + stat);
            cols.push_back("aif_present");
        }
        if (!empty()) cols.push_back("hist_years");
        return cols;
    }

    size_t feature_count() const { return column_names().size(); }

    int max_lag() const {
        int m = 0;
        for (int w : w_windows) m = std::max(m, w);
        return m;
    }
    static std::vector<int> sorted_unique(std::vector<int> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
    std::vector<double> sorted_alphas() const {
        auto v = ses_alphas;
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

    nlohmann::json to_json() const {
        return {{"name", name},          {"w_windows", w_windows}, {"sw_windows", sw_windows},
                {"s_all", s_all},        {"wt_windows", wt_windows}, {"drift", drift},
                {"ses_alphas", ses_alphas}, {"ses_fitted", ses_fitted}, {"aif", aif},
                {"max_window", max_window}};
    }

    static FeatureSetSpec from_json(const nlohmann::json& j) {
        FeatureSetSpec s;
        if (j.contains("name")) s.name = j.at("name").get<std::string>();
        if (j.contains("w_windows")) s.w_windows = j.at("w_windows").get<std::vector<int>>();
        if (j.contains("sw_windows")) s.sw_windows = j.at("sw_windows").get<std::vector<int>>();
        if (j.contains("s_all")) s.s_all = j.at("s_all").get<bool>();
        if (j.contains("wt_windows")) s.wt_windows = j.at("wt_windows").get<std::vector<int>>();
        if (j.contains("drift")) s.drift = j.at("drift").get<bool>();
        if (j.contains("ses_alphas")) s.ses_alphas = j.at("ses_alphas").get<std::vector<double>>();
        if (j.contains("ses_fitted")) s.ses_fitted = j.at("ses_fitted").get<bool>();
        if (j.contains("aif")) s.aif = j.at("aif").get<bool>();
        if (j.contains("max_window")) s.max_window = j.at("max_window").get<int>();
        s.validate();
        return s;
    }

    /// The five conventional fixed smoothing parameters, overridable in config.
    static std::vector<double> default_ses_alphas() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }
};

struct RowKey {
    std::string conference;
    std::string affiliation;
    int target_year = 0;
    friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Realized numeric matrix: one row per (conference, affiliation, target year),
/// a named column layout shared by every row, and the relevance target.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }
    size_t column_count() const { return columns_.size(); }
    size_t row_count() const { return keys_.size(); }
    const std::vector<RowKey>& keys() const { return keys_; }
    const std::vector<double>& targets() const { return target_; }
    const std::vector<double>& values() const { return values_; }
    bool has_target() const { return has_target_; }
    void set_has_target(bool v) { has_target_ = v; }

    long long zero_extended_cells = 0;
    long long aif_imputed_rows = 0;

    double at(size_t row, size_t col) const { return values_[row * columns_.size() + col]; }
    std::span<const double> row(size_t r) const {
        return std::span<const double>(values_).subspan(r * columns_.size(), columns_.size());
    }

    std::optional<size_t> column_index(const std::string& name) const {
        for (size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i] == name) return i;
        return std::nullopt;
    }

    void append_row(RowKey key, std::span<const double> row_values, double target) {
        if (row_values.size() != columns_.size())
            throw error("feature row width mismatch");
        keys_.push_back(std::move(key));
        values_.insert(values_.end(), row_values.begin(), row_values.end());
        target_.push_back(target);
    }

    /// Appends another matrix with the identical column layout.
    void vstack(const FeatureMatrix& other) {
        if (columns_ != other.columns_) throw error("vstack: column layouts differ");
        keys_.insert(keys_.end(), other.keys_.begin(), other.keys_.end());
        values_.insert(values_.end(), other.values_.begin(), other.values_.end());
        target_.insert(target_.end(), other.target_.begin(), other.target_.end());
        zero_extended_cells += other.zero_extended_cells;
        aif_imputed_rows += other.aif_imputed_rows;
        has_target_ = has_target_ && other.has_target_;
    }

private:
    std::vector<std::string> columns_;
    std::vector<RowKey> keys_;
    std::vector<double> values_;
    std::vector<double> target_;
    bool has_target_ = true;
};

namespace detail {

/// Fitted-alpha SES value used inside feature assembly. Histories shorter than
/// three observations cannot discriminate between alphas (the one-step SSE is
/// constant in alpha), so the grid's tie-break toward the smallest alpha is
/// applied directly.
inline double ses_fit_feature(std::span<const double> history) {
    if (history.size() >= 3) return ses_fit_alpha(history).forecast;
    return ses_forecast(history, 0.01);
}

} // namespace detail

/// Builds one row per (conference, affiliation) with features derived from the
/// panel years strictly before `target_year`. `conferences` selects which
/// panel slices produce rows (empty means all, main plus pooled related). The
/// target column is the relevance at `target_year` when the panel covers it;
/// one year past the panel end is allowed for true forecasting and leaves the
/// target zero with has_target() false.
inline FeatureMatrix assemble(const RelevancePanel& panel, const FeatureSetSpec& spec, int target_year,
                              const std::vector<std::string>& conferences = {},
                              const AifContext* aif_context = nullptr) {
    spec.validate();
    if (target_year < panel.first_year() + 1)
        throw config_error("assemble: target year " + std::to_string(target_year) +
                           " has no preceding history in the panel");
    if (target_year > panel.last_year() + 1)
        throw config_error("assemble: target year " + std::to_string(target_year) +
                           " is past the panel end");
    if (spec.aif && aif_context == nullptr)
        throw config_error("assemble: AIF features need a corpus context");

    std::vector<std::string> confs = conferences.empty() ? panel.conferences() : conferences;
    for (const auto& c : confs) panel.conference_index(c); // fail fast on unknown names

    FeatureMatrix matrix(spec.column_names());
    const bool in_panel = target_year <= panel.last_year();
    matrix.set_has_target(in_panel);

    const auto sw = FeatureSetSpec::sorted_unique(spec.sw_windows);
    const auto wt = FeatureSetSpec::sorted_unique(spec.wt_windows);
    const auto alphas = spec.sorted_alphas();
    const int max_lag = spec.max_lag();

    std::vector<double> row;
    std::vector<double> lag_buf;     // most recent first
    std::vector<double> window_buf;  // scratch for windowed stats
    const int hist_len = target_year - panel.first_year();

    for (const auto& conf : confs) {
        const size_t c = panel.conference_index(conf);
        for (size_t a = 0; a < panel.affiliations().size(); ++a) {
            row.clear();

            const int deepest = std::max({max_lag, sw.empty() ? 0 : sw.back(), wt.empty() ? 0 : wt.back()});
            lag_buf.clear();
            for (int k = 1; k <= deepest; ++k) {
                const int y = target_year - k;
                if (y >= panel.first_year()) {
                    lag_buf.push_back(panel.relevance(c, a, y));
                } else {
                    lag_buf.push_back(0.0);
                    matrix.zero_extended_cells += 1;
                }
            }

            for (int k = 1; k <= max_lag; ++k) row.push_back(lag_buf[k - 1]);

            for (int w : sw) {
                window_buf.assign(lag_buf.begin(), lag_buf.begin() + w);
                const SeriesStats s = series_stats(window_buf);
                row.insert(row.end(), {s.std, s.sum, s.min, s.max, s.median, s.mean});
            }

            std::vector<double> history; // oldest first, always inside the panel
            if (spec.s_all || spec.drift || !alphas.empty() || spec.ses_fitted)
                history = panel.series(c, a, panel.first_year(), target_year - 1);

            if (spec.s_all) {
                const SeriesStats s = series_stats(history);
                row.insert(row.end(), {s.std, s.sum, s.min, s.max, s.median, s.mean});
            }
            for (int w : wt)
                row.push_back(weighted_moving_average(std::span<const double>(lag_buf).first(w), w));
            if (spec.drift) row.push_back(drift_forecast(history));
            for (double alpha : alphas) row.push_back(ses_forecast(history, alpha));
            if (spec.ses_fitted) row.push_back(detail::ses_fit_feature(history));

            if (spec.aif) {
                const AifStats s =
                    aif_stats(*aif_context, conf, panel.affiliations()[a], target_year);
                row.insert(row.end(), {s.stats.std, s.stats.sum, s.stats.min, s.stats.max,
                                       s.stats.median, s.stats.mean});
                row.push_back(s.any_defined ? 1.0 : 0.0);
                if (!s.any_defined) matrix.aif_imputed_rows += 1;
            }

            if (!spec.empty()) row.push_back(static_cast<double>(hist_len));

            const double target = in_panel ? panel.relevance(c, a, target_year) : 0.0;
            matrix.append_row({conf, panel.affiliations()[a], target_year}, row, target);
        }
    }
    return matrix;
}

/// Matrix interchange: TSV with a header row (keys, features, target) plus a
/// <path>.manifest.json sidecar echoing the spec and the imputation counters.
inline void write_feature_matrix(const FeatureMatrix& m, const FeatureSetSpec& spec,
                                 const std::string& tsv_path) {
    std::ofstream out(tsv_path, std::ios::binary);
    if (!out) throw data_error("cannot write feature matrix: " + tsv_path);
    out << "conference\taffiliation\ttarget_year";
    for (const auto& c : m.columns()) out << '\t' << c;
    out << "\ttarget\n";
    for (size_t r = 0; r < m.row_count(); ++r) {
        const auto& key = m.keys()[r];
        out << key.conference << '\t' << key.affiliation << '\t' << key.target_year;
        for (double v : m.row(r)) out << '\t' << format_double(v);
        out << '\t' << format_double(m.targets()[r]) << '\n';
    }

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["spec"] = spec.to_json();
    manifest["columns"] = m.columns();
    manifest["rows"] = m.row_count();
    manifest["has_target"] = m.has_target();
    manifest["zero_extended_cells"] = m.zero_extended_cells;
    manifest["aif_imputed_rows"] = m.aif_imputed_rows;
    std::ofstream mout(tsv_path + ".manifest.json", std::ios::binary);
    if (!mout) throw data_error("cannot write feature manifest for: " + tsv_path);
    mout << manifest.dump(2) << '\n';
}

inline FeatureMatrix read_feature_matrix(const std::string& tsv_path) {
    std::ifstream in(tsv_path, std::ios::binary);
    if (!in) throw data_error("cannot open feature matrix: " + tsv_path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty feature matrix file: " + tsv_path);
    auto header = split(line, '\t');
    if (header.size() < 4 || header[0] != "conference" || header[1] != "affiliation" ||
        header[2] != "target_year" || header.back() != "target")
        throw data_error("unexpected feature matrix header in " + tsv_path);
    std::vector<std::string> columns(header.begin() + 3, header.end() - 1);
    FeatureMatrix m(columns);
    std::vector<double> row(columns.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != header.size())
            throw data_error("feature matrix row width mismatch in " + tsv_path);
        RowKey key{std::string(cols[0]), std::string(cols[1]),
                   static_cast<int>(require_int(cols[2], "target_year"))};
        for (size_t i = 0; i < columns.size(); ++i)
            row[i] = require_double(cols[3 + i], columns[i]);
        m.append_row(std::move(key), row, require_double(cols.back(), "target"));
    }
    return m;
}

} // namespace affrank
