#include "catbif/catastrophe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "catbif/rng.hpp"

namespace catbif {

namespace {

constexpr double kOverflowGuard = 1e12;

// Monic cubic value and derivative, coefficients (p, q, r) of
// x^3 + p x^2 + q x + r.
double monic_eval(double p, double q, double r, double x) {
    return ((x + p) * x + q) * x + r;
}
double monic_deriv(double p, double q, double x) {
    return (3.0 * x + 2.0 * p) * x + q;
}

double newton_polish(double p, double q, double r, double x) {
    for (int i = 0; i < 4; ++i) {
        const double f = monic_eval(p, q, r, x);
        const double d = monic_deriv(p, q, x);
        if (d == 0.0) break;
        const double step = f / d;
        if (!std::isfinite(step)) break;
        x -= step;
    }
    return x;
}

// One guaranteed real root of the depressed cubic y^3 + P y + Q = 0.
double depressed_real_root(double P, double Q) {
    if (P == 0.0) return std::cbrt(-Q);
    if (P < 0.0) {
        const double m = 2.0 * std::sqrt(-P / 3.0);
        const double arg = 3.0 * Q / (P * m);  // = -3|Q|/(2P) sqrt(-3/P) up to sign
        if (std::fabs(arg) <= 1.0)
            return m * std::cos(std::acos(arg) / 3.0 - 2.0 * std::numbers::pi / 3.0);
        // outside the three-real region: hyperbolic branch
        const double s = Q >= 0.0 ? 1.0 : -1.0;
        return -s * m * std::cosh(std::acosh(std::fabs(arg)) / 3.0);
    }
    const double m = 2.0 * std::sqrt(P / 3.0);
    return -m * std::sinh(std::asinh(3.0 * Q / (P * m)) / 3.0);
}

Root classify_root(const CubicForce& cf, double x) {
    Root r;
    r.x = x;
    r.lambda = force_derivative(cf, x);
    r.stable = r.lambda < 0.0;
    r.discrete_stable = r.lambda > -2.0 && r.lambda < 0.0;
    return r;
}

}  // namespace

CubicForce::CubicForce(double a0_, double a1_, double a2_, double a3_)
    : a0(a0_), a1(a1_), a2(a2_), a3(a3_) {
    if (!(a0 < 0.0)) throw domain_error("CubicForce: leading coefficient must be negative");
    if (!std::isfinite(a0) || !std::isfinite(a1) || !std::isfinite(a2) ||
        !std::isfinite(a3))
        throw domain_error("CubicForce: non-finite coefficient");
}

double PotentialQuartic::value(double x) const {
    return (((A0 * x + A1) * x + A2) * x + A3) * x + A4;
}

double force_eval(const CubicForce& cf, double x) {
    return ((cf.a0 * x + cf.a1) * x + cf.a2) * x + cf.a3;
}

double force_derivative(const CubicForce& cf, double x) {
    return (3.0 * cf.a0 * x + 2.0 * cf.a1) * x + cf.a2;
}

PotentialQuartic potential_from_force(const CubicForce& cf) {
    // A_{4-j} = -a_{4-j}/j: f = -dU/dx coefficient-wise.
    return PotentialQuartic{-cf.a0 / 4.0, -cf.a1 / 3.0, -cf.a2 / 2.0, -cf.a3, 0.0};
}

CubicForce force_from_potential(const PotentialQuartic& pot, double) {
    return CubicForce(-4.0 * pot.A0, -3.0 * pot.A1, -2.0 * pot.A2, -pot.A3);
}

RootSet cubic_roots(const CubicForce& cf) {
    const double p = cf.a1_rel(), q = cf.a2_rel(), r = cf.a3_rel();
    double x1 = newton_polish(p, q, r, depressed_real_root(q - p * p / 3.0,
                                                           2.0 * p * p * p / 27.0 -
                                                               p * q / 3.0 + r) -
                                             p / 3.0);
    // Deflate: x^2 + b x + c with b = p + x1, c = q + x1 (p + x1).
    const double b = p + x1;
    const double c = q + x1 * b;
    const double disc = b * b - 4.0 * c;
    const double re = -b / 2.0;
    const double spacing = std::sqrt(std::fabs(disc));
    const double tol = 1e-6 * std::max(1.0, std::fabs(re));

    RootSet rs;
    if (disc < 0.0 && spacing > tol) {
        rs.kind = RootKind::one_real;
        rs.roots = {classify_root(cf, x1)};
        rs.complex_pair = {re, spacing / 2.0};
        return rs;
    }
    double xa = re, xb = re;
    if (disc > 0.0) {
        xa = newton_polish(p, q, r, re - spacing / 2.0);
        xb = newton_polish(p, q, r, re + spacing / 2.0);
    }
    std::vector<double> xs = {x1, xa, xb};
    std::sort(xs.begin(), xs.end());
    const double tol01 = 1e-6 * std::max(1.0, std::fabs(xs[1]));
    const double tol12 = 1e-6 * std::max(1.0, std::fabs(xs[2]));
    rs.kind = (xs[1] - xs[0] <= tol01 || xs[2] - xs[1] <= tol12)
                  ? RootKind::tipping
                  : RootKind::three_real;
    for (double x : xs) rs.roots.push_back(classify_root(cf, x));
    return rs;
}

RelCoeffs coeffs_from_three_roots(double x1, double x1p, double x1pp) {
    if (!std::isfinite(x1) || !std::isfinite(x1p) || !std::isfinite(x1pp))
        throw domain_error("coeffs_from_three_roots: non-finite root");
    return {-(x1 + x1p + x1pp), x1p * x1pp + x1 * x1pp + x1 * x1p, -x1 * x1p * x1pp};
}

TippingInverse coeffs_from_tipping(double x1, double x1pp, double da3_dP) {
    if (x1 == x1pp)
        throw degenerate_error("coeffs_from_tipping: threefold root not modeled");
    TippingInverse inv;
    inv.coeffs = {-(2.0 * x1pp + x1), x1pp * (x1pp + 2.0 * x1), -x1 * x1pp * x1pp};
    inv.diag.D = inv.coeffs.a1 * inv.coeffs.a1 - 3.0 * inv.coeffs.a2;
    inv.diag.x_ip = -inv.coeffs.a1 / 3.0;
    inv.diag.jump = -std::sqrt(inv.diag.D);
    inv.diag.alpha_coef = inv.diag.jump;
    // Under the linear ramp a3/a0 = (a3/a0)_c + (da3/dP) P the control
    // parameter enters the relative force additively.
    inv.diag.beta_coef = da3_dP;
    return inv;
}

double constraint_one_root(double x1, double a2_over_a0, double a3_over_a0) {
    if (x1 == 0.0) {
        if (a3_over_a0 != 0.0)
            throw domain_error("constraint_one_root: x1 = 0 requires a3/a0 = 0");
        return 0.0;  // relation degenerates; any a1/a0 keeps 0 a root
    }
    return -(x1 * x1 * x1 + a2_over_a0 * x1 + a3_over_a0) / (x1 * x1);
}

ScalingPoint scaling_displacement(double alpha_coef, double beta_coef, double p) {
    const double radicand = -beta_coef * p / alpha_coef;
    if (radicand < 0.0)
        throw range_error("scaling_displacement: parameter outside the fold");
    ScalingPoint pt;
    pt.y_star = std::sqrt(radicand);
    pt.y_star_other = -pt.y_star;
    pt.lambda = 2.0 * alpha_coef * pt.y_star;
    return pt;
}

DensityTable stationary_density(const PotentialQuartic& pot, double sigma,
                                const DensityGrid& grid) {
    if (!(sigma > 0.0)) throw domain_error("stationary_density: sigma must be > 0");
    if (grid.n < 3 || !(grid.x_max > grid.x_min))
        throw domain_error("stationary_density: invalid grid");
    DensityTable tbl;
    tbl.x.resize(grid.n);
    tbl.p.resize(grid.n);
    const double dx = (grid.x_max - grid.x_min) / static_cast<double>(grid.n - 1);
    double emax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.n; ++i) {
        tbl.x[i] = grid.x_min + dx * static_cast<double>(i);
        tbl.p[i] = -2.0 * pot.value(tbl.x[i]) / (sigma * sigma);
        emax = std::max(emax, tbl.p[i]);
    }
    double mass = 0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        tbl.p[i] = std::exp(tbl.p[i] - emax);
        mass += tbl.p[i] * ((i == 0 || i + 1 == grid.n) ? 0.5 : 1.0);
    }
    mass *= dx;
    if (!(mass > 0.0)) throw domain_error("stationary_density: zero mass on grid");
    for (double& v : tbl.p) v /= mass;
    tbl.truncated = 0.5 * dx * (tbl.p.front() + tbl.p.back()) > 1e-3;
    return tbl;
}

namespace {

Signal simulate_impl(const std::function<std::pair<CubicForce, double>(double)>& at,
                     double x0, std::size_t T, std::uint64_t seed) {
    if (T < 1) throw insufficient_data_error("langevin_simulate: T must be >= 1");
    Signal s;
    s.x.reserve(T + 1);
    s.x.push_back(x0);
    auto gen = make_stream(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    double x = x0;
    for (std::size_t t = 0; t < T; ++t) {
        const auto [cf, sigma] = at(static_cast<double>(t));
        x = x + force_eval(cf, x) + (sigma > 0.0 ? sigma * noise(gen) : 0.0);
        if (!std::isfinite(x) || std::fabs(x) > kOverflowGuard)
            throw divergence_error("langevin_simulate: trajectory diverged",
                                   static_cast<long>(t + 1));
        s.x.push_back(x);
    }
    return s;
}

}  // namespace

Signal langevin_simulate(const CubicForce& cf, double sigma, double x0,
                         std::size_t T, std::uint64_t seed) {
    if (sigma < 0.0) throw domain_error("langevin_simulate: sigma must be >= 0");
    return simulate_impl([&](double) { return std::make_pair(cf, sigma); }, x0, T, seed);
}

Signal langevin_simulate(const Schedule& schedule, double x0, std::size_t T,
                         std::uint64_t seed) {
    if (schedule.rows.empty())
        throw insufficient_data_error("langevin_simulate: empty schedule");
    return simulate_impl([&](double t) { return schedule.at(t); }, x0, T, seed);
}

std::pair<CubicForce, double> Schedule::at(double t) const {
    if (rows.empty()) throw insufficient_data_error("Schedule::at: no rows");
    const SchedulePoint* lo = &rows.front();
    const SchedulePoint* hi = &rows.back();
    if (t <= lo->t) hi = lo;
    if (t >= hi->t) lo = hi;
    if (lo != hi) {
        auto it = std::upper_bound(rows.begin(), rows.end(), t,
                                   [](double v, const SchedulePoint& sp) { return v < sp.t; });
        hi = &*it;
        lo = &*(it - 1);
    }
    double a1 = lo->a1, a2 = lo->a2, a3 = lo->a3, sigma = lo->sigma;
    if (hi != lo) {
        const double w = (t - lo->t) / (hi->t - lo->t);
        a1 += w * (hi->a1 - lo->a1);
        a2 += w * (hi->a2 - lo->a2);
        a3 += w * (hi->a3 - lo->a3);
        sigma += w * (hi->sigma - lo->sigma);
    }
    return {RelCoeffs{a1, a2, a3}.with_a0(a0), sigma};
}

double ar1_variance(double lambda, double sigma, double var_y0, long t) {
    if (!(lambda > -2.0 && lambda < 0.0))
        throw domain_error("ar1_variance: lambda must lie in (-2, 0)");
    if (t < 0) throw domain_error("ar1_variance: t must be >= 0");
    const double g = std::pow((1.0 + lambda) * (1.0 + lambda), static_cast<double>(t));
    return var_y0 * g - (1.0 - g) * sigma * sigma / (lambda * (2.0 + lambda));
}

double ar1_acf(double lambda, long h) {
    if (!(lambda > -2.0 && lambda < 0.0))
        throw domain_error("ar1_acf: lambda must lie in (-2, 0)");
    return std::pow(std::fabs(1.0 + lambda), static_cast<double>(std::labs(h))) *
           ((1.0 + lambda) < 0.0 && (std::labs(h) % 2) ? -1.0 : 1.0);
}

Schedule read_schedule_csv(std::istream& in, double a0) {
    Schedule sched;
    sched.a0 = a0;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        SchedulePoint sp{};
        char comma;
        if (!(ls >> sp.t)) {
            if (lineno == 1) continue;  // header
            throw parse_error("schedule: unreadable t field", lineno);
        }
        if (!(ls >> comma >> sp.a1 >> comma >> sp.a2 >> comma >> sp.a3 >> comma >>
              sp.sigma))
            throw parse_error("schedule: expected t,a1_over_a0,a2_over_a0,a3_over_a0,sigma",
                              lineno);
        if (!sched.rows.empty() && sp.t <= sched.rows.back().t)
            throw parse_error("schedule: t must be strictly increasing", lineno);
        sched.rows.push_back(sp);
    }
    if (sched.rows.empty()) throw parse_error("schedule: no rows");
    return sched;
}

void write_trajectory_csv(std::ostream& os, const Signal& signal) {
    os << "t,x\n";
    const auto prec = os.precision(15);
    for (std::size_t i = 0; i < signal.x.size(); ++i)
        os << (signal.start_t + static_cast<long>(i)) << ',' << signal.x[i] << '\n';
    os.precision(prec);
}

}  // namespace catbif
