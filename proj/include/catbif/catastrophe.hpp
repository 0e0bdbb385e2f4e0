#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "catbif/errors.hpp"
#include "catbif/timeseries.hpp"

namespace catbif {

/// Cubic force f(x;P) = a0 x^3 + a1 x^2 + a2 x + a3 with a0 < 0. The
/// invariant content is the coefficient ratios a_k/a0.
struct CubicForce {
    double a0, a1, a2, a3;

    CubicForce(double a0_, double a1_, double a2_, double a3_);

    double a1_rel() const { return a1 / a0; }
    double a2_rel() const { return a2 / a0; }
    double a3_rel() const { return a3 / a0; }
};

/// Relative coefficients (a1/a0, a2/a0, a3/a0) of the monic cubic.
struct RelCoeffs {
    double a1, a2, a3;

    /// Full force with the given leading coefficient (a0 < 0).
    CubicForce with_a0(double a0) const { return CubicForce(a0, a0 * a1, a0 * a2, a0 * a3); }
};

/// Quartic potential U(x;P) = A0 x^4 + A1 x^3 + A2 x^2 + A3 x + A4 with
/// f = -dU/dx; the additive constant A4 is conventionally 0.
struct PotentialQuartic {
    double A0, A1, A2, A3, A4 = 0;

    double value(double x) const;
};

enum class RootKind { three_real, tipping, one_real };

struct Root {
    double x = 0;
    double lambda = 0;          // f'(x*)
    bool stable = false;        // lambda < 0
    bool discrete_stable = false;  // lambda in (-2, 0)
};

struct RootSet {
    RootKind kind = RootKind::one_real;
    std::vector<Root> roots;  // real roots, ascending; tipping keeps the pair
    std::optional<std::pair<double, double>> complex_pair;  // (re, im), one_real only
};

struct TippingDiagnostics {
    double D = 0;           // (a1/a0)^2 - 3 a2/a0, > 0 for two real extrema
    double x_ip = 0;        // inflection point -(1/3)(a1/a0)
    double jump = 0;        // catastrophic jump  Delta x = -sqrt(D)
    double alpha_coef = 0;  // alpha = -sqrt(D)
    double beta_coef = 0;   // df/dP at the tipping point under the declared ramp
};

struct TippingInverse {
    RelCoeffs coeffs;
    TippingDiagnostics diag;
};

/// Fold-normal-form displacement y* = +-sqrt(-beta p / alpha) and the
/// associated relaxation rate lambda = 2 alpha y* on the stable branch.
struct ScalingPoint {
    double y_star = 0;        // stable (+) branch
    double y_star_other = 0;  // unstable (-) branch
    double lambda = 0;
};

struct DensityGrid {
    double x_min, x_max;
    std::size_t n = 512;
};

struct DensityTable {
    std::vector<double> x, p;
    bool truncated = false;  // boundary carries more than 1e-3 of the mass
};

/// Piecewise-linear coefficient ramp; clamped outside [rows.front.t,
/// rows.back.t]. Rows must be strictly increasing in t.
struct SchedulePoint {
    double t, a1, a2, a3, sigma;  // relative coefficients a_k/a0
};
struct Schedule {
    double a0 = -1.0;
    std::vector<SchedulePoint> rows;

    std::pair<CubicForce, double> at(double t) const;  // (force, sigma)
};

double force_eval(const CubicForce& cf, double x);
double force_derivative(const CubicForce& cf, double x);

PotentialQuartic potential_from_force(const CubicForce& cf);
CubicForce force_from_potential(const PotentialQuartic& pot, double a4_check = 0);

RootSet cubic_roots(const CubicForce& cf);

RelCoeffs coeffs_from_three_roots(double x1, double x1p, double x1pp);

/// Inverse problem at the tipping point: x1pp is the twofold root.
/// `da3_dP` is the slope of the declared linear ramp a3/a0 = (a3/a0)_c + P,
/// fixing beta = df/dP in relative-force units.
TippingInverse coeffs_from_tipping(double x1, double x1pp, double da3_dP = 1.0);

/// One-real-root regime: the single relation a1/a0 = -(x1^2 + (a2/a0) +
/// (a3/a0)/x1) / x1 making x1 a root.
double constraint_one_root(double x1, double a2_over_a0, double a3_over_a0);

ScalingPoint scaling_displacement(double alpha_coef, double beta_coef, double p);

DensityTable stationary_density(const PotentialQuartic& pot, double sigma,
                                const DensityGrid& grid);

Signal langevin_simulate(const CubicForce& cf, double sigma, double x0,
                         std::size_t T, std::uint64_t seed);
Signal langevin_simulate(const Schedule& schedule, double x0, std::size_t T,
                         std::uint64_t seed);

double ar1_variance(double lambda, double sigma, double var_y0, long t);
double ar1_acf(double lambda, long h);

Schedule read_schedule_csv(std::istream& in, double a0 = -1.0);
void write_trajectory_csv(std::ostream& os, const Signal& signal);

}  // namespace catbif
