#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "catbif/errors.hpp"
#include "catbif/spectral.hpp"
#include "catbif/timeseries.hpp"

namespace catbif {

enum class RightTailModel { gaussian, exponential };

/// Increment-histogram decomposition: Gaussian core fitted on the
/// quartile-trimmed body, left power-law tail on log-spaced bins beyond
/// 2 sigma. Tail fields stay empty when fewer than 5 populated tail bins
/// exist.
struct HistogramFit {
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    double gauss_mu = 0;
    double gauss_sigma = 0;
    std::optional<double> tail_exponent_left;          // log-log density slope
    std::optional<std::pair<double, double>> tail_range;  // fitted |dx - mu| range
    RightTailModel right_model = RightTailModel::gaussian;
    double right_rate = 0;  // decay rate of the winning right-side model
};

/// Scaling family P(dx, dt) = B dt^{-eta/2} F(xi), xi = |dx|/dt^{eta/2},
/// F(xi) = xi^nu_bar exp(-xi^nu / (4 D_bar)). The normalization B and the
/// positive branch of D_bar are fixed numerically at construction; below
/// xi_min = 1e-8 the scaling function is frozen at its xi_min value (the
/// family is an asymptotic form for large xi).
class ScalingLaw {
public:
    ScalingLaw(double eta, double D_coef);

    double eta() const { return eta_; }
    double D_coef() const { return D_; }
    double nu() const { return nu_; }
    double nu_bar() const { return nu_bar_; }
    double B() const { return B_; }
    double D_bar() const { return D_bar_; }
    double tail() const { return 1.0 - 2.0 / eta_; }
    double hurst() const { return eta_ / 2.0; }
    double signal_slope() const { return -(1.0 + eta_); }
    double noise_slope() const { return -(eta_ - 1.0); }

    /// Scaling function F at xi (capped below xi_min).
    double scaling_function(double xi) const;

    static constexpr double kXiMin = 1e-8;

private:
    double eta_, D_, nu_, nu_bar_, D_bar_, B_;
};

struct BorderDensity {
    double value = 0;      // density up to the quadrature constant
    double exponent = 0;   // P ~ |dx|^(-exponent), exponent = 1 - 2/eta
    bool heavy_tail = false;  // exponent > 0; eta = 1 gives growth instead
};

struct ExponentWeb {
    double eta = 0;
    double hurst = 0;                    // eta/2
    std::optional<double> tail;          // 1 - 2/eta, undefined at eta = 0
    double signal_slope = 0;             // -(1 + eta)
    double noise_slope = 0;              // -(eta - 1)
    double acf_decay = 0;                // 2 - eta
    bool correlation_negative = false;   // iff eta > 1

    std::string to_json() const;
};

HistogramFit histogram_fit(const Increments& dx, std::size_t bins);

double scaling_pdf(const ScalingLaw& law, double dx, double dt);

BorderDensity border_distribution(const ScalingLaw& law, double dx);

ExponentWeb exponent_web(double eta);

/// Log-log OLS of periodogram power against frequency over bins
/// [j_range.first, j_range.second]; nonpositive-power bins are dropped.
double spectrum_slope_fit(const Periodogram& pg,
                          std::pair<std::size_t, std::size_t> j_range);

}  // namespace catbif
