#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "catbif/errors.hpp"
#include "catbif/timeseries.hpp"

namespace catbif {

/// Which side of the peak a trend fit or detrend covers.
enum class Side { bull, bear };

/// Parameters of the oscillation-decorated relaxation trend
///   X(|t-t_c|) = (X0-X1) E_a(-(|t-t_c|/tau)^a) - X1 cos(w|t-t_c|) cos(dw|t-t_c|)
/// with X0 = x0_plus_x1 - x1.
struct TrendParams {
    double t_c = 0;           // turning-point location [td]
    double tau = 1;           // relaxation time [td], > 0
    double alpha = 1;         // shape exponent, > 0
    double omega = 0;         // angular frequency [1/td], in [0, 0.5)
    double delta_omega = 0;   // beat frequency [1/td], in [0, 0.5)
    double x0_plus_x1 = 0;    // X0 + X1 [points]
    double x1 = 0;            // X1 [points]

    double x0() const { return x0_plus_x1 - x1; }
    void validate() const;
};

/// Result of a nonlinear trend fit.
struct FitReport {
    TrendParams params;
    std::array<double, 7> std_devs{};  // order: t_c, tau, alpha, omega, dw, X0+X1, X1
    double r_squared = 0;
    double residual_norm = 0;  // RMS residual [points]
    int iterations = 0;

    std::string to_json() const;
};

/// Non-convergence after the iteration budget; carries the best report seen.
struct convergence_error : error {
    convergence_error(const std::string& msg, FitReport best)
        : error(msg), best_so_far(std::move(best)) {}
    FitReport best_so_far;
};

/// E_alpha(-u) = sum_n (-u)^n / Gamma(1 + alpha n) for u >= 0, alpha > 0.
/// Power series in extended precision for small u^(1/alpha), algebraic
/// asymptotic expansion (with the oscillatory branch terms for alpha > 1)
/// otherwise.
double mittag_leffler(double alpha, double u);

/// Evaluates the trend at trading day t.
double trend_value(const TrendParams& params, double t);

/// Evaluates the trend over t = t0 .. t0+n-1 sharing the per-alpha series
/// tables; much faster than n calls to trend_value.
std::vector<double> trend_curve(const TrendParams& params, long t0, std::size_t n);

/// Subtracts the trend from the bull (t <= t_c) or bear (t >= t_c) side of
/// the series. Trading-day index = position in the series.
Signal detrend(const PriceSeries& series, const TrendParams& trend, Side side);

/// Nonlinear least squares by damped Gauss-Newton with central-difference
/// Jacobian; multi-start over a coarse (alpha, tau, t_c) grid when no
/// initial guess is given. Amplitudes are re-solved linearly at each start.
FitReport fit_trend(const PriceSeries& series, Side side,
                    std::optional<TrendParams> init = std::nullopt);

/// Same fit on a bare value vector indexed t = 0..n-1 (the series side
/// selection already applied). Exposed for simulation-driven tests.
FitReport fit_trend_values(const std::vector<double>& values,
                           std::optional<TrendParams> init = std::nullopt);

}  // namespace catbif
