#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "catbif/errors.hpp"
#include "catbif/timeseries.hpp"

namespace catbif {

/// Per-window early-warning indicators. The linearized relaxation model
/// x_{t+1} = (1+lambda) x_t + b + noise gives the fixed point x* = -b/lambda
/// and recovery rate -lambda. Fields that cannot be estimated on a given
/// window stay nullopt; a scan never aborts on a bad window.
struct WindowReport {
    long center_t = 0;
    std::optional<double> variance;          // points^2, divisor n-1
    std::optional<double> acv;               // accumulative (expanding) variance
    std::optional<double> skewness;          // adjusted Fisher-Pearson
    std::optional<double> acc_skewness;      // expanding-window skewness
    std::optional<double> ar1;               // slope 1 + lambda
    std::optional<double> ar1_intercept;     // b
    std::optional<double> ar1_se_slope;
    std::optional<double> ar1_se_intercept;
    std::optional<double> acf1;
    std::optional<double> lambda;            // ar1 - 1
    std::optional<double> recovery_rate;     // -lambda
    std::optional<double> x_star;            // -b/lambda when |lambda| >= kLambdaMin
    std::optional<double> x_star_se;
};

enum class Branch { upper, lower, undefined };

struct FlickerReport {
    std::vector<Branch> branch_labels;
    std::size_t alternations = 0;
    std::optional<std::pair<long, long>> bistable_span;  // (t_down, t_up)
    bool single_branch = false;
};

struct Ar1Fit {
    double slope = 0;          // 1 + lambda
    double intercept = 0;      // b
    double se_slope = 0;
    double se_intercept = 0;
    double cov_slope_intercept = 0;
};

struct FixedPoint {
    long t = 0;
    double x_star = 0;
    double se = 0;
};

/// Below this the fixed point -b/lambda is numerically meaningless.
inline constexpr double kLambdaMin = 1e-3;

double window_variance(std::span<const double> slice);
double accumulative_variance(const Signal& signal, std::size_t up_to);
double window_skewness(std::span<const double> slice);
double accumulative_skewness(const Signal& signal, std::size_t up_to);

/// OLS of x_{t+1} on x_t over the lag pairs within the window.
Ar1Fit ar1_fit(std::span<const double> slice);

/// ACF_EST(1) over a window of W lag pairs (needs W+1 values):
///   [sum x_t x_{t+1} - (1/W)(sum x_t)(sum x_{t+1})] / (W Var(x_t)),
/// Var with divisor n over the first W points.
double acf1_estimator(std::span<const double> slice);

std::vector<WindowReport> ews_scan(const Signal& signal, const WindowSpec& spec);

std::vector<FixedPoint> fixed_point_trajectory(const std::vector<WindowReport>& reports);

FlickerReport flicker_detect(const std::vector<FixedPoint>& trajectory);

/// One row per window; undefined fields serialized as empty cells.
void write_ews_csv(std::ostream& os, const std::vector<WindowReport>& reports);

}  // namespace catbif
