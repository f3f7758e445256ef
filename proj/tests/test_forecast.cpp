#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "affrank/forecast.hpp"

using namespace affrank;

TEST_CASE("series_stats on a small series", "[forecast]") {
    std::vector<double> v = {1, 2, 3, 4};
    auto s = series_stats(v);
    CHECK(s.sum == 10.0);
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    CHECK(s.mean == 2.5);
    CHECK(s.median == 2.5);
    CHECK(s.std == Catch::Approx(1.118033988749895).margin(1e-15)); // population std

    std::vector<double> odd = {5, 1, 3};
    CHECK(series_stats(odd).median == 3.0);

    std::vector<double> one = {7};
    auto s1 = series_stats(one);
    CHECK(s1.std == 0.0);
    CHECK(s1.median == 7.0);

    CHECK_THROWS_AS(series_stats({}), data_error);
}

TEST_CASE("weighted moving average favors recent lags", "[forecast]") {
    std::vector<double> lags3 = {3, 2, 1}; // most recent first
    CHECK(weighted_moving_average(lags3, 3) == Catch::Approx(14.0 / 6.0).margin(1e-15));
    std::vector<double> lags2 = {4, 2};
    CHECK(weighted_moving_average(lags2, 2) == Catch::Approx(10.0 / 3.0).margin(1e-15));
    std::vector<double> flat = {5, 5, 5, 5};
    CHECK(weighted_moving_average(flat, 4) == Catch::Approx(5.0).margin(1e-15));

    CHECK_THROWS_AS(weighted_moving_average(lags2, 1), config_error);
    CHECK_THROWS_AS(weighted_moving_average(lags2, 5), config_error);
    CHECK_THROWS_AS(weighted_moving_average(lags2, 3), config_error); // length mismatch
}

TEST_CASE("drift forecast extends the average step", "[forecast]") {
    std::vector<double> ramp = {1, 3, 5, 7};
    CHECK(drift_forecast(ramp) == 9.0); // exact on a linear series
    std::vector<double> down = {10, 4};
    CHECK(drift_forecast(down) == -2.0); // may extrapolate below zero
    std::vector<double> single = {2.5};
    CHECK(drift_forecast(single) == 2.5);
    CHECK_THROWS_AS(drift_forecast({}), data_error);
}

TEST_CASE("ses matches the recursion", "[forecast]") {
    std::vector<double> h = {0, 1, 0, 1, 0};
    CHECK(ses_forecast(h, 0.3) == Catch::Approx(0.3129).margin(1e-15));
    CHECK(ses_forecast(h, 1.0) == 0.0); // alpha 1 tracks the last value
    std::vector<double> c = {4, 4, 4};
    CHECK(ses_forecast(c, 0.42) == 4.0);

    // Direct recursion oracle across the alpha range.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0, 1);
    std::vector<double> series(8);
    for (auto& v : series) v = unit(rng) * 10;
    for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        double s = series[0];
        for (size_t t = 1; t < series.size(); ++t) s = alpha * series[t] + (1 - alpha) * s;
        CHECK(ses_forecast(series, alpha) == Catch::Approx(s).margin(1e-12));
    }

    CHECK_THROWS_AS(ses_forecast({}, 0.5), data_error);
    CHECK_THROWS_AS(ses_forecast(h, 0.0), config_error);
    CHECK_THROWS_AS(ses_forecast(h, 1.5), config_error);
}

TEST_CASE("fitted alpha minimizes one-step SSE on the grid", "[forecast]") {
    std::vector<double> ramp = {1, 2, 3, 4};
    auto fit = ses_fit_alpha(ramp);
    CHECK(fit.alpha == 1.0); // a rising ramp wants full tracking
    CHECK(fit.forecast == 4.0);

    std::vector<double> zigzag = {0, 1, 0, 1, 0};
    auto fz = ses_fit_alpha(zigzag);
    CHECK(fz.alpha == Catch::Approx(0.17).margin(1e-12));
    CHECK(fz.forecast == Catch::Approx(0.23830379).margin(1e-7));

    std::vector<double> constant = {2, 2, 2};
    CHECK(ses_fit_alpha(constant).alpha == 0.01); // flat SSE ties break low

    std::vector<double> two = {1, 2};
    CHECK_THROWS_AS(ses_fit_alpha(two), data_error);
}

TEST_CASE("fitted alpha agrees with a brute-force scan", "[forecast]") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unit(0, 1);
    std::uniform_int_distribution<int> len_d(3, 12);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> series(len_d(rng));
        for (auto& v : series) v = unit(rng) * 5;

        double best_alpha = 0, best_sse = 0;
        bool have = false;
        for (int i = 1; i <= 100; ++i) {
            double alpha = i / 100.0;
            double s = series[0], sse = 0;
            for (size_t t = 1; t < series.size(); ++t) {
                sse += (series[t] - s) * (series[t] - s);
                s = alpha * series[t] + (1 - alpha) * s;
            }
            if (!have || sse < best_sse) {
                best_alpha = alpha;
                best_sse = sse;
                have = true;
            }
        }
        auto fit = ses_fit_alpha(series);
        REQUIRE(fit.alpha == best_alpha);
        REQUIRE(fit.sse == Catch::Approx(best_sse).margin(1e-12));
        REQUIRE(fit.forecast == Catch::Approx(ses_forecast(series, best_alpha)).margin(1e-12));
    }
}

TEST_CASE("forecasts commute with constant shifts", "[forecast]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> series(6), shifted(6);
        const double c = 3.75;
        for (size_t i = 0; i < series.size(); ++i) {
            series[i] = unit(rng) * 4;
            shifted[i] = series[i] + c;
        }
        CHECK(drift_forecast(shifted) == Catch::Approx(drift_forecast(series) + c).margin(1e-12));
        CHECK(ses_forecast(shifted, 0.4) ==
              Catch::Approx(ses_forecast(series, 0.4) + c).margin(1e-12));
        std::vector<double> lags(series.begin(), series.begin() + 3);
        std::vector<double> lags_shifted(shifted.begin(), shifted.begin() + 3);
        CHECK(weighted_moving_average(lags_shifted, 3) ==
              Catch::Approx(weighted_moving_average(lags, 3) + c).margin(1e-12));
        // The SSE landscape is shift-invariant, so the fitted alpha is too.
        CHECK(ses_fit_alpha(shifted).alpha == ses_fit_alpha(series).alpha);
    }
}
