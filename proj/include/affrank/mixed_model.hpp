#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "affrank/errors.hpp"
#include "affrank/features.hpp"
#include "affrank/strings.hpp"

namespace affrank {

namespace detail {

/// LDL^T factorization of a symmetric positive-definite matrix with pivot
/// screening: columns whose pivot collapses are reported instead of factored,
/// which is how collinear design columns are named in errors.
struct Ldlt {
    size_t p = 0;
    std::vector<double> l; // unit lower triangle, row-major p x p
    std::vector<double> d;
    std::vector<size_t> failed;

    static Ldlt factor(const std::vector<double>& a, size_t p) {
        Ldlt f;
        f.p = p;
        f.l.assign(p * p, 0.0);
        f.d.assign(p, 0.0);
        double max_diag = 0.0;
        for (size_t k = 0; k < p; ++k) max_diag = std::max(max_diag, std::abs(a[k * p + k]));
        const double tol = std::max(1e-10 * max_diag, 1e-300);
        for (size_t k = 0; k < p; ++k) {
            double dk = a[k * p + k];
            for (size_t j = 0; j < k; ++j) dk -= f.l[k * p + j] * f.l[k * p + j] * f.d[j];
            if (dk <= tol) {
                f.failed.push_back(k);
                continue;
            }
            f.d[k] = dk;
            f.l[k * p + k] = 1.0;
            for (size_t i = k + 1; i < p; ++i) {
                double v = a[i * p + k];
                for (size_t j = 0; j < k; ++j) v -= f.l[i * p + j] * f.l[k * p + j] * f.d[j];
                f.l[i * p + k] = v / dk;
            }
        }
        return f;
    }

    std::vector<double> solve(std::vector<double> b) const {
        for (size_t i = 0; i < p; ++i) {
            double v = b[i];
            for (size_t j = 0; j < i; ++j) v -= l[i * p + j] * b[j];
            b[i] = v;
        }
        for (size_t i = 0; i < p; ++i) b[i] = d[i] > 0.0 ? b[i] / d[i] : 0.0;
        for (size_t ii = p; ii > 0; --ii) {
            const size_t i = ii - 1;
            double v = b[i];
            for (size_t j = i + 1; j < p; ++j) v -= l[j * p + i] * b[j];
            b[i] = v;
        }
        return b;
    }

    /// Inverse of the factored matrix (valid only with no failed pivots).
    std::vector<double> inverse() const {
        std::vector<double> inv(p * p, 0.0);
        std::vector<double> e(p, 0.0);
        for (size_t c = 0; c < p; ++c) {
            std::fill(e.begin(), e.end(), 0.0);
            e[c] = 1.0;
            auto x = solve(e);
            for (size_t r = 0; r < p; ++r) inv[r * p + c] = x[r];
        }
        return inv;
    }
};

} // namespace detail

struct MixedFitOptions {
    double tolerance = 1e-8;
    // EM slows to a linear crawl when the group variance sits near zero, so
    // the ceiling is generous; iterations are cheap at panel sizes.
    int max_iterations = 5000;
    bool force_zero_group_variance = false; // pins sigma2_group at 0: plain least squares
};

/// Random-intercept linear model: y = X beta + u_group + noise, one intercept
/// per group label. Coefficient names include "(intercept)".
struct MixedModel {
    std::map<std::string, double> fixed_coefficients;
    std::map<std::string, double> standard_errors;
    std::map<std::string, double> p_values; // two-sided Wald normal
    std::map<std::string, double> random_intercepts;
    double sigma2_residual = 0.0;
    double sigma2_group = 0.0;
    bool fitted = false;
    int iterations = 0;
    std::vector<std::string> dropped_constant; // absorbed by the intercept

    double predict_row(std::span<const double> row, std::span<const size_t> column_of_feature,
                       const std::string& group) const {
        double v = 0.0;
        size_t k = 0;
        for (const auto& [name, beta] : fixed_coefficients) {
            if (name == "(intercept)") v += beta;
            else v += beta * row[column_of_feature[k++]];
        }
        auto it = random_intercepts.find(group);
        if (it != random_intercepts.end()) v += it->second;
        return v;
    }

    /// Feature names in the order predict_row consumes resolved columns
    /// (coefficient map order minus the intercept).
    std::vector<std::string> feature_names() const {
        std::vector<std::string> names;
        for (const auto& [name, _] : fixed_coefficients)
            if (name != "(intercept)") names.push_back(name);
        return names;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format_version"] = 1;
        j["family"] = "mixed";
        j["fixed_coefficients"] = fixed_coefficients;
        j["standard_errors"] = standard_errors;
        j["p_values"] = p_values;
        j["random_intercepts"] = random_intercepts;
        j["sigma2_residual"] = sigma2_residual;
        j["sigma2_group"] = sigma2_group;
        j["iterations"] = iterations;
        j["dropped_constant"] = dropped_constant;
        return j;
    }

    static MixedModel from_json(const nlohmann::json& j) {
        if (j.value("family", "") != std::string("mixed"))
            throw config_error("model file is not a mixed model");
        MixedModel m;
        m.fixed_coefficients = j.at("fixed_coefficients").get<std::map<std::string, double>>();
        m.standard_errors = j.value("standard_errors", std::map<std::string, double>{});
        m.p_values = j.value("p_values", std::map<std::string, double>{});
        m.random_intercepts = j.at("random_intercepts").get<std::map<std::string, double>>();
        m.sigma2_residual = j.at("sigma2_residual").get<double>();
        m.sigma2_group = j.at("sigma2_group").get<double>();
        m.iterations = j.value("iterations", 0);
        m.dropped_constant = j.value("dropped_constant", std::vector<std::string>{});
        m.fitted = true;
        return m;
    }
};

namespace detail {

struct GroupIndex {
    std::vector<std::string> labels;      // sorted unique
    std::vector<size_t> group_of_row;
    std::vector<size_t> rows_per_group;
};

inline GroupIndex index_groups(const std::vector<std::string>& groups) {
    GroupIndex gi;
    gi.labels = groups;
    std::sort(gi.labels.begin(), gi.labels.end());
    gi.labels.erase(std::unique(gi.labels.begin(), gi.labels.end()), gi.labels.end());
    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < gi.labels.size(); ++i) pos.emplace(gi.labels[i], i);
    gi.group_of_row.reserve(groups.size());
    gi.rows_per_group.assign(gi.labels.size(), 0);
    for (const auto& g : groups) {
        const size_t j = pos.at(g);
        gi.group_of_row.push_back(j);
        gi.rows_per_group[j] += 1;
    }
    return gi;
}

} // namespace detail

/// Fits the random-intercept model by expectation-maximization on the
/// Gaussian likelihood: each iteration solves generalized least squares for
/// the fixed effects at the current variance components, then refreshes the
/// group intercepts and the variances from the residuals. Stops when no
/// parameter moves more than the tolerance.
inline MixedModel mixed_fit(const FeatureMatrix& X, std::span<const double> y,
                            const std::vector<std::string>& groups,
                            const MixedFitOptions& options = {}) {
    const size_t n = X.row_count();
    if (n == 0) throw data_error("mixed_fit: no training rows");
    if (y.size() != n || groups.size() != n)
        throw data_error("mixed_fit: target/group length mismatch");
    for (double v : X.values())
        if (!std::isfinite(v)) throw data_error("mixed_fit: non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw data_error("mixed_fit: non-finite target value");

    const auto gi = detail::index_groups(groups);
    const size_t q = gi.labels.size();
    if (q < 2) throw data_error("mixed_fit: need at least 2 groups, got " + std::to_string(q));

    // Constant columns carry no contrast once the intercept is in; drop them.
    MixedModel model;
    std::vector<size_t> active;
    for (size_t f = 0; f < X.column_count(); ++f) {
        bool constant = true;
        const double first = n > 0 ? X.at(0, f) : 0.0;
        for (size_t r = 1; r < n && constant; ++r) constant = X.at(r, f) == first;
        if (constant) model.dropped_constant.push_back(X.columns()[f]);
        else active.push_back(f);
    }
    const size_t p = active.size() + 1; // leading intercept column

    auto design = [&](size_t row, size_t col) -> double {
        return col == 0 ? 1.0 : X.at(row, active[col - 1]);
    };

    // Gram pieces reused every iteration: XtX, Xty, and per-group sums.
    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
    std::vector<double> group_x_sum(q * p, 0.0), group_y_sum(q, 0.0);
    for (size_t r = 0; r < n; ++r) {
        const size_t g = gi.group_of_row[r];
        group_y_sum[g] += y[r];
        for (size_t i = 0; i < p; ++i) {
            const double xi = design(r, i);
            group_x_sum[g * p + i] += xi;
            xty[i] += xi * y[r];
            for (size_t j = i; j < p; ++j) xtx[i * p + j] += xi * design(r, j);
        }
    }
    for (size_t i = 0; i < p; ++i)
        for (size_t j = 0; j < i; ++j) xtx[i * p + j] = xtx[j * p + i];

    auto check_rank = [&](const detail::Ldlt& f) {
        if (f.failed.empty()) return;
        std::string names;
        for (size_t k : f.failed) {
            if (!names.empty()) names += ", ";
            names += k == 0 ? std::string("(intercept)") : X.columns()[active[k - 1]];
        }
        throw data_error("mixed_fit: collinear design columns: " + names);
    };

    // GLS normal equations at the current variance ratio. c_j weights the
    // group-mean outer products subtracted from the plain Gram matrix.
    std::vector<double> a(p * p), b(p), beta(p, 0.0), beta_prev(p, 0.0);
    auto gls_step = [&](double sigma2_e, double sigma2_g) {
        a = xtx;
        b = xty;
        for (size_t g = 0; g < q; ++g) {
            const double nj = static_cast<double>(gi.rows_per_group[g]);
            const double cj = sigma2_g / (sigma2_e + nj * sigma2_g);
            if (cj == 0.0) continue;
            const double* xs = &group_x_sum[g * p];
            for (size_t i = 0; i < p; ++i) {
                b[i] -= cj * xs[i] * group_y_sum[g];
                for (size_t j = 0; j < p; ++j) a[i * p + j] -= cj * xs[i] * xs[j];
            }
        }
        auto f = detail::Ldlt::factor(a, p);
        check_rank(f);
        beta = f.solve(b);
    };

    // Plain least-squares start; also the entire fit when the group variance
    // is pinned at zero.
    gls_step(1.0, 0.0);

    std::vector<double> residual(n), u(q, 0.0), group_resid_mean(q, 0.0);
    auto refresh_residuals = [&] {
        for (size_t r = 0; r < n; ++r) {
            double fit = 0.0;
            for (size_t i = 0; i < p; ++i) fit += design(r, i) * beta[i];
            residual[r] = y[r] - fit;
        }
        std::fill(group_resid_mean.begin(), group_resid_mean.end(), 0.0);
        for (size_t r = 0; r < n; ++r) group_resid_mean[gi.group_of_row[r]] += residual[r];
        for (size_t g = 0; g < q; ++g)
            group_resid_mean[g] /= static_cast<double>(gi.rows_per_group[g]);
    };
    refresh_residuals();

    double sigma2_e = 0.0, sigma2_g = 0.0;
    for (size_t r = 0; r < n; ++r) {
        const double d = residual[r] - group_resid_mean[gi.group_of_row[r]];
        sigma2_e += d * d;
    }
    sigma2_e = std::max(sigma2_e / static_cast<double>(n), 1e-30);
    for (size_t g = 0; g < q; ++g) sigma2_g += group_resid_mean[g] * group_resid_mean[g];
    sigma2_g /= static_cast<double>(q);

    int iterations = 0;
    if (!options.force_zero_group_variance && sigma2_g > 0.0) {
        std::vector<double> trace;
        bool converged = false;
        for (; iterations < options.max_iterations; ++iterations) {
            beta_prev = beta;
            const double e_prev = sigma2_e, g_prev = sigma2_g;

            gls_step(sigma2_e, sigma2_g);
            refresh_residuals();

            // Posterior intercepts and their conditional variances.
            double new_e = 0.0, new_g = 0.0;
            for (size_t g = 0; g < q; ++g) {
                const double nj = static_cast<double>(gi.rows_per_group[g]);
                const double denom = sigma2_e + nj * sigma2_g;
                u[g] = nj * sigma2_g / denom * group_resid_mean[g];
                const double var_j = sigma2_g * sigma2_e / denom;
                new_g += u[g] * u[g] + var_j;
                new_e += nj * var_j;
            }
            for (size_t r = 0; r < n; ++r) {
                const double d = residual[r] - u[gi.group_of_row[r]];
                new_e += d * d;
            }
            sigma2_e = std::max(new_e / static_cast<double>(n), 1e-30);
            sigma2_g = new_g / static_cast<double>(q);

            double change = std::max(std::abs(sigma2_e - e_prev), std::abs(sigma2_g - g_prev));
            for (size_t i = 0; i < p; ++i)
                change = std::max(change, std::abs(beta[i] - beta_prev[i]));
            trace.push_back(change);
            if (change < options.tolerance) {
                converged = true;
                ++iterations;
                break;
            }
        }
        if (!converged) {
            std::string msg = "mixed_fit: no convergence after " +
                              std::to_string(options.max_iterations) + " iterations; last changes:";
            const size_t start = trace.size() > 5 ? trace.size() - 5 : 0;
            for (size_t i = start; i < trace.size(); ++i) msg += " " + format_double(trace[i]);
            throw data_error(msg);
        }
        // Final intercepts at the converged parameters.
        gls_step(sigma2_e, sigma2_g);
        refresh_residuals();
        for (size_t g = 0; g < q; ++g) {
            const double nj = static_cast<double>(gi.rows_per_group[g]);
            u[g] = nj * sigma2_g / (sigma2_e + nj * sigma2_g) * group_resid_mean[g];
        }
    } else {
        sigma2_g = 0.0;
        std::fill(u.begin(), u.end(), 0.0);
        double sse = 0.0;
        for (size_t r = 0; r < n; ++r) sse += residual[r] * residual[r];
        sigma2_e = std::max(sse / static_cast<double>(n), 1e-30);
    }

    // Wald machinery: cov(beta) = (X^T V^-1 X)^-1 at the fitted variances.
    a = xtx;
    for (size_t g = 0; g < q; ++g) {
        const double nj = static_cast<double>(gi.rows_per_group[g]);
        const double cj = sigma2_g / (sigma2_e + nj * sigma2_g);
        const double* xs = &group_x_sum[g * p];
        for (size_t i = 0; i < p; ++i)
            for (size_t j = 0; j < p; ++j) a[i * p + j] -= cj * xs[i] * xs[j];
    }
    for (auto& v : a) v /= sigma2_e;
    auto cov_factor = detail::Ldlt::factor(a, p);
    check_rank(cov_factor);
    const auto cov = cov_factor.inverse();

    auto coef_name = [&](size_t i) {
        return i == 0 ? std::string("(intercept)") : X.columns()[active[i - 1]];
    };
    for (size_t i = 0; i < p; ++i) {
        const std::string name = coef_name(i);
        model.fixed_coefficients[name] = beta[i];
        const double se = std::sqrt(std::max(cov[i * p + i], 0.0));
        model.standard_errors[name] = se;
        const double z = se > 0.0 ? beta[i] / se : 0.0;
        model.p_values[name] = std::erfc(std::abs(z) / std::sqrt(2.0));
    }
    for (size_t g = 0; g < q; ++g) model.random_intercepts[gi.labels[g]] = u[g];
    model.sigma2_residual = sigma2_e;
    model.sigma2_group = sigma2_g;
    model.iterations = iterations;
    model.fitted = true;
    return model;
}

/// Fixed part plus the group's intercept when the group was seen in training;
/// unseen groups fall back to the fixed part alone.
inline std::vector<double> mixed_predict(const MixedModel& model, const FeatureMatrix& rows,
                                         const std::vector<std::string>& groups) {
    if (groups.size() != rows.row_count())
        throw data_error("mixed_predict: group label count mismatch");
    const auto names = model.feature_names();
    std::vector<size_t> column_of(names.size());
    for (size_t i = 0; i < names.size(); ++i) {
        auto idx = rows.column_index(names[i]);
        if (!idx) throw data_error("prediction input lacks feature column: " + names[i]);
        column_of[i] = *idx;
    }
    std::vector<double> out(rows.row_count());
    for (size_t r = 0; r < rows.row_count(); ++r)
        out[r] = model.predict_row(rows.row(r), column_of, groups[r]);
    return out;
}

/// Repeatedly drops the least significant fixed effect (largest Wald p-value
/// above the level) and refits, keeping the intercept throughout. Stops when
/// every remaining effect clears the level or only one effect is left.
inline MixedModel backward_eliminate(const FeatureMatrix& X, std::span<const double> y,
                                     const std::vector<std::string>& groups,
                                     double significance_level,
                                     const MixedFitOptions& options = {}) {
    if (X.column_count() < 1) throw config_error("backward_eliminate: no fixed effects to screen");

    std::vector<std::string> kept = X.columns();
    while (true) {
        FeatureMatrix sub(kept);
        std::vector<size_t> cols;
        cols.reserve(kept.size());
        for (const auto& name : kept) cols.push_back(*X.column_index(name));
        std::vector<double> row(kept.size());
        for (size_t r = 0; r < X.row_count(); ++r) {
            for (size_t i = 0; i < cols.size(); ++i) row[i] = X.at(r, cols[i]);
            sub.append_row(X.keys()[r], row, X.targets()[r]);
        }

        MixedModel model = mixed_fit(sub, y, groups, options);
        if (kept.size() <= 1) return model;

        std::string worst;
        double worst_p = significance_level;
        for (const auto& name : kept) {
            // Constant columns have no p-value; they are dead weight, drop first.
            auto it = model.p_values.find(name);
            const double pv = it == model.p_values.end() ? 1.1 : it->second;
            if (pv > worst_p || (pv == worst_p && pv > significance_level && name < worst)) {
                worst = name;
                worst_p = pv;
            }
        }
        if (worst.empty()) return model;
        kept.erase(std::remove(kept.begin(), kept.end(), worst), kept.end());
    }
}

} // namespace affrank
