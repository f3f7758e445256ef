#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "affrank/errors.hpp"

namespace affrank {

struct SeriesStats {
    double std = 0;
    double sum = 0;
    double min = 0;
    double max = 0;
    double median = 0;
    double mean = 0;
};

/// Standard deviation (population, so a length-1 series has std 0), sum, min,
/// max, median, mean. Median of an even-length series is the mean of the two
/// central order statistics.
inline SeriesStats series_stats(std::span<const double> values) {
    if (values.empty()) throw data_error("series_stats: empty series (impute before calling)");
    SeriesStats s;
    s.min = values[0];
    s.max = values[0];
    for (double v : values) {
        s.sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    const double n = static_cast<double>(values.size());
    s.mean = s.sum / n;
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / n);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const size_t mid = sorted.size() / 2;
    s.median = (sorted.size() % 2 == 1) ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return s;
}

/// Weighted moving average over the last `window` values, most recent first.
/// Weights (window, window-1, ..., 1) normalized to sum 1, so the most recent
/// lag carries the largest weight and they decrease linearly.
inline double weighted_moving_average(std::span<const double> lags_recent_first, int window) {
    if (window < 2 || window > 4)
        throw config_error("weighted_moving_average: window must be 2, 3, or 4");
    if (static_cast<int>(lags_recent_first.size()) != window)
        throw config_error("weighted_moving_average: need exactly " + std::to_string(window) + " lags");
    double weight_sum = 0;
    double acc = 0;
    for (int i = 0; i < window; ++i) {
        const double w = static_cast<double>(window - i);
        acc += w * lags_recent_first[i];
        weight_sum += w;
    }
    return acc / weight_sum;
}

/// Drift forecast: last value plus the average historical step,
/// y_T + (y_T - y_1) / (T - 1). A single observation forecasts itself.
inline double drift_forecast(std::span<const double> history_oldest_first) {
    if (history_oldest_first.empty()) throw data_error("drift_forecast: empty history");
    const size_t t = history_oldest_first.size();
    if (t == 1) return history_oldest_first[0];
    const double last = history_oldest_first[t - 1];
    const double first = history_oldest_first[0];
    return last + (last - first) / static_cast<double>(t - 1);
}

/// Simple exponential smoothing one-step-ahead forecast: s_1 = y_1,
/// s_t = alpha*y_t + (1-alpha)*s_{t-1}; the forecast is s_T.
inline double ses_forecast(std::span<const double> history_oldest_first, double alpha) {
    if (history_oldest_first.empty()) throw data_error("ses_forecast: empty history");
    if (!(alpha > 0.0) || alpha > 1.0)
        throw config_error("ses_forecast: alpha must be in (0, 1]");
    double s = history_oldest_first[0];
    for (size_t t = 1; t < history_oldest_first.size(); ++t)
        s = alpha * history_oldest_first[t] + (1.0 - alpha) * s;
    return s;
}

struct SesFit {
    double alpha = 0;
    double forecast = 0;
    double sse = 0;
};

namespace detail {

/// One-step-ahead in-sample SSE of SES at a fixed alpha:
/// sum over t = 2..T of (y_t - s_{t-1})^2.
inline double ses_sse(std::span<const double> history, double alpha) {
    double s = history[0];
    double sse = 0;
    for (size_t t = 1; t < history.size(); ++t) {
        const double err = history[t] - s;
        sse += err * err;
        s = alpha * history[t] + (1.0 - alpha) * s;
    }
    return sse;
}

/// Grid search without the length precondition. Ties (including the flat SSE
/// of constant or very short series) break toward the smallest alpha.
inline SesFit ses_fit_alpha_unchecked(std::span<const double> history) {
    SesFit best;
    bool have = false;
    for (int i = 1; i <= 100; ++i) {
        const double alpha = static_cast<double>(i) / 100.0;
        const double sse = ses_sse(history, alpha);
        if (!have || sse < best.sse) {
            best.alpha = alpha;
            best.sse = sse;
            have = true;
        }
    }
    best.forecast = ses_forecast(history, best.alpha);
    return best;
}

} // namespace detail

/// Fits the smoothing parameter on the deterministic grid alpha in
/// {0.01, 0.02, ..., 1.00} by minimizing the one-step-ahead SSE.
inline SesFit ses_fit_alpha(std::span<const double> history_oldest_first) {
    if (history_oldest_first.size() < 3)
        throw data_error("ses_fit_alpha: need at least 3 observations (use fixed-alpha features instead)");
    return detail::ses_fit_alpha_unchecked(history_oldest_first);
}

} // namespace affrank
