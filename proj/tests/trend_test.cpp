#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "catbif/rng.hpp"
#include "catbif/trend.hpp"

using namespace catbif;

namespace {

// Independent oracle: direct series summation in extended precision,
// usable while the terms stay resolvable (u^(1/alpha) not too large).
long double ml_series_oracle(double alpha, double u, int terms = 400) {
    long double sum = 0.0L, term = 1.0L;
    for (int n = 0; n < terms; ++n) {
        sum += term;
        term *= -static_cast<long double>(u);
        term *= std::exp(std::lgamma(1.0L + alpha * n) -
                         std::lgamma(1.0L + alpha * (n + 1)));
        if (std::fabs(term) < 1e-25L * std::fabs(sum) && n > 5) break;
    }
    return sum;
}

}  // namespace

TEST_CASE("mittag-leffler at zero and domain checks") {
    for (double a : {0.3, 0.57, 1.0, 1.5, 1.99}) CHECK(mittag_leffler(a, 0.0) == 1.0);
    CHECK_THROWS_AS(mittag_leffler(-0.5, 1.0), domain_error);
    CHECK_THROWS_AS(mittag_leffler(0.0, 1.0), domain_error);
    CHECK_THROWS_AS(mittag_leffler(0.5, std::nan("")), domain_error);
}

TEST_CASE("alpha = 1 reduces to the exponential") {
    for (double u = 0.0; u <= 10.0; u += 0.25)
        CHECK(mittag_leffler(1.0, u) == doctest::Approx(std::exp(-u)).epsilon(1e-10));
}

TEST_CASE("alpha = 1/2 closed form e^{u^2} erfc(u)") {
    for (double u = 0.0; u <= 5.0; u += 0.125) {
        const double ref = std::exp(u * u) * std::erfc(u);
        CHECK(mittag_leffler(0.5, u) == doctest::Approx(ref).epsilon(1e-8));
    }
    CHECK(mittag_leffler(0.5, 1.0) == doctest::Approx(0.4275836).epsilon(1e-6));
}

TEST_CASE("series oracle agreement across alpha") {
    for (double a : {0.4, 0.57, 0.8, 1.3, 1.7}) {
        for (double u : {0.1, 0.5, 1.0, 2.0, 4.0}) {
            // the long-double oracle itself loses accuracy to cancellation
            // once u^(1/alpha) grows past ~15
            if (std::pow(u, 1.0 / a) > 15.0) continue;
            const double ref = static_cast<double>(ml_series_oracle(a, u));
            CHECK(mittag_leffler(a, u) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("monotone decreasing for alpha <= 1") {
    for (double a : {0.3, 0.57, 1.0}) {
        double prev = 1.0;
        for (double u = 0.1; u <= 10.0; u += 0.1) {
            const double v = mittag_leffler(a, u);
            CHECK(v < prev);
            CHECK(v > 0.0);
            prev = v;
        }
    }
}

TEST_CASE("large-argument accuracy vs asymptotic-at-quad oracle") {
    // For u <= 50 the contract is 1e-8 relative; the long-double series
    // still resolves r = u^(1/alpha) up to ~15.
    for (double a : {0.7, 1.0, 1.3}) {
        for (double u : {12.0, 20.0, 40.0, 50.0}) {
            if (std::pow(u, 1.0 / a) > 15.0) continue;
            const double ref = static_cast<double>(ml_series_oracle(a, u, 2000));
            CHECK(mittag_leffler(a, u) ==
                  doctest::Approx(ref).epsilon(1e-8 / std::max(1.0, std::fabs(ref))));
        }
    }
}

TEST_CASE("trend value identities") {
    TrendParams p;
    p.t_c = 892;
    p.tau = 105;
    p.alpha = 0.57;
    p.omega = 0.0041;
    p.delta_omega = 0.0;
    p.x0_plus_x1 = 60081;
    p.x1 = -8659;
    // At t = t_c: (X0 - X1) - X1 = X0+X1 - 3 X1... directly X0 - 2 X1.
    const double x0 = p.x0();
    CHECK(trend_value(p, p.t_c) == doctest::Approx(x0 - 2 * p.x1).epsilon(1e-12));

    TrendParams e;
    e.t_c = 100;
    e.tau = 50;
    e.alpha = 1.0;
    e.x0_plus_x1 = 1000;
    e.x1 = 0;
    for (double t : {0.0, 40.0, 100.0, 180.0})
        CHECK(trend_value(e, t) ==
              doctest::Approx(1000.0 * std::exp(-std::fabs(t - 100.0) / 50.0))
                  .epsilon(1e-10));
}

TEST_CASE("trend curve matches pointwise evaluation") {
    TrendParams p;
    p.t_c = 300;
    p.tau = 120;
    p.alpha = 0.8;
    p.omega = 0.01;
    p.delta_omega = 0.002;
    p.x0_plus_x1 = 5000;
    p.x1 = -700;
    const auto curve = trend_curve(p, 0, 600);
    REQUIRE(curve.size() == 600);
    for (long t : {0L, 150L, 299L, 300L, 450L, 599L})
        CHECK(curve[static_cast<std::size_t>(t)] ==
              doctest::Approx(trend_value(p, static_cast<double>(t))).epsilon(1e-12));
}

TEST_CASE("noiseless parameter recovery") {
    TrendParams p;  // DAX-like bull profile
    p.t_c = 969;
    p.tau = 426;
    p.alpha = 0.52;
    p.omega = 0.00362;
    p.delta_omega = 0.0065;
    p.x0_plus_x1 = 4698;
    p.x1 = -763;
    const auto values = trend_curve(p, 0, 970);
    const auto fit = fit_trend_values(values, p);  // init at truth: pure polish
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.params.t_c == doctest::Approx(p.t_c).epsilon(1e-4));
    CHECK(fit.params.tau == doctest::Approx(p.tau).epsilon(1e-4));
    CHECK(fit.params.alpha == doctest::Approx(p.alpha).epsilon(1e-4));
}

TEST_CASE("noisy recovery from the multi-start grid") {
    TrendParams p;
    p.t_c = 500;
    p.tau = 200;
    p.alpha = 0.7;
    p.omega = 0.0;
    p.delta_omega = 0.0;
    p.x0_plus_x1 = 2000;
    p.x1 = 0;
    auto clean = trend_curve(p, 0, 520);
    auto gen = make_stream(99);
    std::normal_distribution<double> noise(0.0, 10.0);
    for (double& v : clean) v += noise(gen);
    const auto fit = fit_trend_values(clean);
    CHECK(fit.r_squared > 0.99);
    CHECK(fit.params.tau == doctest::Approx(p.tau).epsilon(0.15));
    CHECK(fit.params.alpha == doctest::Approx(p.alpha).epsilon(0.15));
}

TEST_CASE("date-offset invariance of the fit") {
    TrendParams p;
    p.t_c = 400;
    p.tau = 150;
    p.alpha = 0.9;
    p.x0_plus_x1 = 1000;
    p.x1 = 0;
    const auto fit0 = fit_trend_values(trend_curve(p, 0, 420), p);
    // Same curve sampled 50 days earlier: in the fitter's positional frame
    // the turning point appears 50 days later.
    TrendParams init = p;
    init.t_c = 450;
    const auto fit1 = fit_trend_values(trend_curve(p, -50, 420), init);
    CHECK(fit1.params.t_c - fit0.params.t_c == doctest::Approx(50.0).epsilon(1e-4));
}

TEST_CASE("fit report JSON carries the table fields") {
    TrendParams p;
    p.t_c = 100;
    p.tau = 40;
    p.alpha = 1.0;
    p.x0_plus_x1 = 500;
    p.x1 = 0;
    const auto fit = fit_trend_values(trend_curve(p, 0, 120), p);
    const auto j = fit.to_json();
    for (const char* key :
         {"t_c", "tau", "alpha", "omega", "delta_omega", "X0_plus_X1", "X1", "R2"})
        CHECK(j.find(key) != std::string::npos);
}

TEST_CASE("too-short series rejected") {
    CHECK_THROWS_AS(fit_trend_values(std::vector<double>(10, 1.0)),
                    insufficient_data_error);
}
