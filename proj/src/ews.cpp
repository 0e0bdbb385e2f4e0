#include "catbif/ews.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace catbif {

namespace {

struct Moments {
    double mean = 0, m2 = 0, m3 = 0;  // central sums / n
};

Moments central_moments(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    Moments m;
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    for (double v : x) {
        const double d = v - m.mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
    }
    m.m2 /= n;
    m.m3 /= n;
    return m;
}

double skewness_impl(std::span<const double> x, const char* what) {
    if (x.size() < 3) throw insufficient_data_error(std::string(what) + ": needs n >= 3");
    const Moments m = central_moments(x);
    if (m.m2 <= 0.0) throw domain_error(std::string(what) + ": zero variance");
    const double n = static_cast<double>(x.size());
    const double g1 = m.m3 / std::pow(m.m2, 1.5);
    return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

std::span<const double> prefix(const Signal& signal, std::size_t up_to, const char* what) {
    if (up_to < 1) throw insufficient_data_error(std::string(what) + ": up_to must be >= 1");
    if (up_to >= signal.size())
        throw range_error(std::string(what) + ": up_to beyond signal end");
    return std::span<const double>(signal.x.data(), up_to + 1);
}

}  // namespace

double window_variance(std::span<const double> slice) {
    if (slice.size() < 2) throw insufficient_data_error("window_variance: needs n >= 2");
    const Moments m = central_moments(slice);
    const double n = static_cast<double>(slice.size());
    return m.m2 * n / (n - 1.0);
}

double accumulative_variance(const Signal& signal, std::size_t up_to) {
    return window_variance(prefix(signal, up_to, "accumulative_variance"));
}

double window_skewness(std::span<const double> slice) {
    return skewness_impl(slice, "window_skewness");
}

double accumulative_skewness(const Signal& signal, std::size_t up_to) {
    return skewness_impl(prefix(signal, up_to, "accumulative_skewness"),
                         "accumulative_skewness");
}

Ar1Fit ar1_fit(std::span<const double> slice) {
    if (slice.size() < 3) throw insufficient_data_error("ar1_fit: needs >= 3 points");
    const std::size_t n = slice.size() - 1;  // lag pairs
    double mx = 0, my = 0;
    for (std::size_t t = 0; t < n; ++t) {
        mx += slice[t];
        my += slice[t + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t t = 0; t < n; ++t) {
        sxx += (slice[t] - mx) * (slice[t] - mx);
        sxy += (slice[t] - mx) * (slice[t + 1] - my);
    }
    if (sxx <= 0.0) throw singular_error("ar1_fit: zero regressor variance");

    Ar1Fit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double r = slice[t + 1] - fit.slope * slice[t] - fit.intercept;
        sse += r * r;
    }
    if (n > 2) {
        const double s2 = sse / (static_cast<double>(n) - 2.0);
        fit.se_slope = std::sqrt(s2 / sxx);
        fit.se_intercept = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
        fit.cov_slope_intercept = -s2 * mx / sxx;
    }
    return fit;
}

double acf1_estimator(std::span<const double> slice) {
    if (slice.size() < 3)
        throw insufficient_data_error("acf1_estimator: needs >= 3 points");
    const std::size_t W = slice.size() - 1;
    double s0 = 0, s1 = 0, s01 = 0;
    for (std::size_t t = 0; t < W; ++t) {
        s0 += slice[t];
        s1 += slice[t + 1];
        s01 += slice[t] * slice[t + 1];
    }
    // Population variance (divisor W) of the first W points.
    const double mean = s0 / static_cast<double>(W);
    double var = 0;
    for (std::size_t t = 0; t < W; ++t) var += (slice[t] - mean) * (slice[t] - mean);
    var /= static_cast<double>(W);
    if (var <= 0.0) throw domain_error("acf1_estimator: zero variance");
    return (s01 - s0 * s1 / static_cast<double>(W)) / (static_cast<double>(W) * var);
}

std::vector<WindowReport> ews_scan(const Signal& signal, const WindowSpec& spec) {
    const auto wins = windows(signal, spec);
    std::vector<WindowReport> reports;
    reports.reserve(wins.size());
    for (const auto& w : wins) {
        WindowReport r;
        r.center_t = w.center_t;
        try {
            r.variance = window_variance(w.values);
        } catch (const error&) {
        }
        try {
            r.skewness = window_skewness(w.values);
        } catch (const error&) {
        }
        // Expanding-window moments from the signal start up to the window end.
        const std::size_t last =
            static_cast<std::size_t>(w.start_t - signal.start_t) + w.values.size() - 1;
        try {
            r.acv = accumulative_variance(signal, last);
        } catch (const error&) {
        }
        try {
            r.acc_skewness = accumulative_skewness(signal, last);
        } catch (const error&) {
        }
        try {
            const Ar1Fit fit = ar1_fit(w.values);
            r.ar1 = fit.slope;
            r.ar1_intercept = fit.intercept;
            r.ar1_se_slope = fit.se_slope;
            r.ar1_se_intercept = fit.se_intercept;
            const double lambda = fit.slope - 1.0;
            r.lambda = lambda;
            r.recovery_rate = -lambda;
            if (std::fabs(lambda) >= kLambdaMin) {
                r.x_star = -fit.intercept / lambda;
                // Delta method with the full OLS covariance: the slope and
                // intercept estimates are strongly correlated off-center.
                const double ga = fit.intercept / (lambda * lambda);  // d x*/d slope
                const double gb = -1.0 / lambda;                      // d x*/d b
                const double var = ga * ga * fit.se_slope * fit.se_slope +
                                   gb * gb * fit.se_intercept * fit.se_intercept +
                                   2.0 * ga * gb * fit.cov_slope_intercept;
                r.x_star_se = var > 0.0 ? std::sqrt(var) : 0.0;
            }
        } catch (const error&) {
        }
        // ACF(1) needs the point following the window.
        if (last + 1 < signal.size()) {
            try {
                r.acf1 = acf1_estimator(std::span<const double>(
                    signal.x.data() + (w.start_t - signal.start_t), w.values.size() + 1));
            } catch (const error&) {
            }
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

std::vector<FixedPoint> fixed_point_trajectory(const std::vector<WindowReport>& reports) {
    std::vector<FixedPoint> traj;
    for (const auto& r : reports)
        if (r.x_star)
            traj.push_back({r.center_t, *r.x_star, r.x_star_se.value_or(0.0)});
    return traj;
}

FlickerReport flicker_detect(const std::vector<FixedPoint>& trajectory) {
    if (trajectory.size() < 4)
        throw insufficient_data_error("flicker_detect: needs >= 4 fixed points");
    std::vector<double> xs;
    xs.reserve(trajectory.size());
    for (const auto& p : trajectory) xs.push_back(p.x_star);

    // Two-means split in one dimension, seeded at the extremes; the
    // threshold (midpoint of the two cluster means) is iterated to a fixpoint.
    double lo = *std::min_element(xs.begin(), xs.end());
    double hi = *std::max_element(xs.begin(), xs.end());
    double threshold = 0.5 * (lo + hi);
    for (int iter = 0; iter < 64; ++iter) {
        double sum_lo = 0, sum_hi = 0;
        std::size_t n_lo = 0, n_hi = 0;
        for (double v : xs) {
            if (v <= threshold) {
                sum_lo += v;
                ++n_lo;
            } else {
                sum_hi += v;
                ++n_hi;
            }
        }
        if (n_lo == 0 || n_hi == 0) break;
        const double next = 0.5 * (sum_lo / n_lo + sum_hi / n_hi);
        if (next == threshold) break;
        threshold = next;
    }

    FlickerReport rep;
    rep.branch_labels.reserve(xs.size());
    double mean_lo = 0, mean_hi = 0, var_lo = 0, var_hi = 0;
    std::size_t n_lo = 0, n_hi = 0;
    for (double v : xs)
        if (v <= threshold) {
            mean_lo += v;
            ++n_lo;
        } else {
            mean_hi += v;
            ++n_hi;
        }
    if (n_lo == 0 || n_hi == 0) {
        rep.single_branch = true;
        rep.branch_labels.assign(xs.size(), n_lo ? Branch::lower : Branch::upper);
        return rep;
    }
    mean_lo /= n_lo;
    mean_hi /= n_hi;
    for (double v : xs)
        if (v <= threshold)
            var_lo += (v - mean_lo) * (v - mean_lo);
        else
            var_hi += (v - mean_hi) * (v - mean_hi);
    const double pooled = std::sqrt((var_lo + var_hi) /
                                    static_cast<double>(n_lo + n_hi));
    if (mean_hi - mean_lo <= pooled) {
        rep.single_branch = true;
        rep.branch_labels.assign(xs.size(),
                                 n_lo >= n_hi ? Branch::lower : Branch::upper);
        return rep;
    }

    for (double v : xs)
        rep.branch_labels.push_back(v <= threshold ? Branch::lower : Branch::upper);
    for (std::size_t i = 1; i < rep.branch_labels.size(); ++i)
        if (rep.branch_labels[i] != rep.branch_labels[i - 1]) ++rep.alternations;

    // Bistable span: union of rolling 5-point spans containing both branches.
    const std::size_t n = rep.branch_labels.size();
    const std::size_t span = std::min<std::size_t>(5, n);
    std::size_t first = n, last = 0;
    bool any = false;
    for (std::size_t s = 0; s + span <= n; ++s) {
        bool has_lo = false, has_hi = false;
        for (std::size_t i = s; i < s + span; ++i) {
            has_lo |= rep.branch_labels[i] == Branch::lower;
            has_hi |= rep.branch_labels[i] == Branch::upper;
        }
        if (has_lo && has_hi) {
            any = true;
            first = std::min(first, s);
            last = std::max(last, s + span - 1);
        }
    }
    if (any) rep.bistable_span = {trajectory[first].t, trajectory[last].t};
    return rep;
}

void write_ews_csv(std::ostream& os, const std::vector<WindowReport>& reports) {
    os << "center_t,variance,acv,skewness,acc_skewness,ar1,acf1,lambda,"
          "recovery_rate,b,x_star,x_star_se\n";
    auto cell = [&os](const std::optional<double>& v) {
        os << ',';
        if (v) os << *v;
    };
    const auto prec = os.precision(12);
    for (const auto& r : reports) {
        os << r.center_t;
        cell(r.variance);
        cell(r.acv);
        cell(r.skewness);
        cell(r.acc_skewness);
        cell(r.ar1);
        cell(r.acf1);
        cell(r.lambda);
        cell(r.recovery_rate);
        cell(r.ar1_intercept);
        cell(r.x_star);
        cell(r.x_star_se);
        os << '\n';
    }
    os.precision(prec);
}

}  // namespace catbif
