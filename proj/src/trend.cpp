#include "catbif/trend.hpp"

#include <quadmath.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <json.hpp>

namespace catbif {

namespace {

constexpr double kPi = std::numbers::pi;

// The power series loses roughly r/ln(10) decimal digits to cancellation,
// where r = u^(1/alpha). Double precision carries it to r <= 12, quad
// precision to r <= 30; beyond that the asymptotic expansion's optimal
// truncation error ~exp(-r) is far below the accuracy contract.
constexpr double kSeriesDoubleLimit = 12.0;
constexpr double kSeriesQuadLimit = 30.0;

// 1/Gamma(x) for any real x, via reflection when x <= 0.
double inv_gamma(double x) {
    if (x > 0.5) {
        if (x > 170.0) return 0.0;
        return 1.0 / std::tgamma(x);
    }
    // 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
    double s = std::sin(kPi * x);
    double lg = std::lgamma(1.0 - x);
    if (lg > 700.0) {
        // magnitude overflows double: combine in logs
        double ln = std::log(std::abs(s)) + lg - std::log(kPi);
        double v = std::exp(std::min(ln, 709.0));
        return std::copysign(v, s);
    }
    return s * std::exp(lg) / kPi;
}

// Term-ratio table for the power series at fixed alpha:
// ratio[n] = Gamma(1 + alpha n) / Gamma(1 + alpha (n+1)), so that
// term_{n+1} = term_n * (-u) * ratio[n].
struct SeriesTable {
    double alpha = 0;
    std::vector<double> ratio_d;
    std::vector<__float128> ratio_q;

    void ensure_double(std::size_t n) {
        while (ratio_d.size() < n) {
            double k = static_cast<double>(ratio_d.size());
            ratio_d.push_back(std::exp(std::lgamma(1.0 + alpha * k) -
                                       std::lgamma(1.0 + alpha * (k + 1.0))));
        }
    }
    void ensure_quad(std::size_t n) {
        while (ratio_q.size() < n) {
            __float128 a = alpha;
            __float128 k = static_cast<double>(ratio_q.size());
            const __float128 one = 1;
            ratio_q.push_back(expq(lgammaq(one + a * k) - lgammaq(one + a * (k + one))));
        }
    }
};

std::size_t series_length(double r, double alpha) {
    // terms peak near n = r/alpha and then decay super-exponentially
    double peak = r / alpha;
    return static_cast<std::size_t>(std::max(32.0, 3.0 * peak + 48.0));
}

double ml_series_double(SeriesTable& tab, double u, double r) {
    const std::size_t nmax = series_length(r, tab.alpha);
    tab.ensure_double(nmax);
    double sum = 1.0, term = 1.0;
    const double peak = r / tab.alpha;
    for (std::size_t n = 0; n + 1 < nmax; ++n) {
        term *= -u * tab.ratio_d[n];
        sum += term;
        if (static_cast<double>(n) > peak && std::abs(term) < 1e-20 * (std::abs(sum) + 1e-30))
            break;
    }
    return sum;
}

double ml_series_quad(SeriesTable& tab, double u, double r) {
    const std::size_t nmax = series_length(r, tab.alpha);
    tab.ensure_quad(nmax);
    __float128 sum = 1, term = 1;
    const __float128 mu = -static_cast<__float128>(u);
    const double peak = r / tab.alpha;
    for (std::size_t n = 0; n + 1 < nmax; ++n) {
        term *= mu * tab.ratio_q[n];
        sum += term;
        if (static_cast<double>(n) > peak &&
            fabsq(term) < __float128(1e-36) * (fabsq(sum) + __float128(1e-60)))
            break;
    }
    return static_cast<double>(sum);
}

// Large-argument expansion: algebraic series plus the decaying oscillatory
// branch pair that appears for alpha > 1.
double ml_asymptotic(double alpha, double u, double r) {
    // Optimal truncation: the reflection sine makes |term| jitter (and hit
    // exact zeros at Gamma poles), so sum through the global minimum term
    // instead of stopping at the first local rise.
    std::vector<double> terms;
    double min_mag = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 120; ++k) {
        double x = 1.0 - alpha * k;
        double term = ((k % 2) ? 1.0 : -1.0) * std::pow(u, -k) * inv_gamma(x);
        terms.push_back(term);
        const double mag = std::abs(term);
        if (term != 0.0 && mag < min_mag) min_mag = mag;
        if (mag > 1e6 * min_mag && k > 4) break;  // clearly in the divergent tail
    }
    std::size_t cut = terms.size();
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (std::abs(terms[i]) == min_mag) {
            cut = i + 1;
            break;
        }
    double sum = 0.0;
    for (std::size_t i = 0; i < cut; ++i) sum += terms[i];
    for (int n = 0;; ++n) {
        double theta = (2.0 * n + 1.0) * kPi / alpha;
        if (theta >= kPi) break;
        sum += (2.0 / alpha) * std::exp(r * std::cos(theta)) * std::cos(r * std::sin(theta));
    }
    return sum;
}

// fast=true trades the quad-precision band for the asymptotic expansion
// (error ~1e-3 of an already-small value there); used only inside the
// fitter's search loop, where that is far below the noise floor, because
// the quad series costs ~50x a double series.
double ml_eval(SeriesTable& tab, double u, bool fast = false) {
    const double alpha = tab.alpha;
    if (u == 0.0) return 1.0;
    if (alpha == 1.0) return std::exp(-u);
    const double r = std::pow(u, 1.0 / alpha);
    if (r <= kSeriesDoubleLimit) return ml_series_double(tab, u, r);
    if (!fast && r <= kSeriesQuadLimit) return ml_series_quad(tab, u, r);
    return ml_asymptotic(alpha, u, r);
}

}  // namespace

double mittag_leffler(double alpha, double u) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw domain_error("mittag_leffler: alpha must be positive and finite");
    if (!(u >= 0.0) || !std::isfinite(u))
        throw domain_error("mittag_leffler: argument must be finite and >= 0");
    SeriesTable tab;
    tab.alpha = alpha;
    return ml_eval(tab, u);
}

void TrendParams::validate() const {
    if (!(tau > 0.0)) throw domain_error("trend: tau must be > 0");
    if (!(alpha > 0.0)) throw domain_error("trend: alpha must be > 0");
    if (!(t_c > 0.0)) throw domain_error("trend: t_c must be > 0");
    if (!(omega >= 0.0 && omega < 0.5))
        throw domain_error("trend: omega must lie in [0, 0.5)");
    if (!(delta_omega >= 0.0 && delta_omega < 0.5))
        throw domain_error("trend: delta_omega must lie in [0, 0.5)");
}

double trend_value(const TrendParams& p, double t) {
    p.validate();
    const double dt = std::abs(t - p.t_c);
    const double u = std::pow(dt / p.tau, p.alpha);
    const double ml = mittag_leffler(p.alpha, u);
    return (p.x0() - p.x1) * ml -
           p.x1 * std::cos(p.omega * dt) * std::cos(p.delta_omega * dt);
}

namespace {

std::vector<double> eval_curve(const TrendParams& p, long t0, std::size_t n, bool fast) {
    p.validate();
    SeriesTable tab;
    tab.alpha = p.alpha;
    std::vector<double> out(n);
    const double amp = p.x0() - p.x1;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = std::abs(static_cast<double>(t0 + static_cast<long>(i)) - p.t_c);
        const double u = std::pow(dt / p.tau, p.alpha);
        out[i] = amp * ml_eval(tab, u, fast) -
                 p.x1 * std::cos(p.omega * dt) * std::cos(p.delta_omega * dt);
    }
    return out;
}

}  // namespace

std::vector<double> trend_curve(const TrendParams& p, long t0, std::size_t n) {
    return eval_curve(p, t0, n, /*fast=*/false);
}

Signal detrend(const PriceSeries& series, const TrendParams& trend, Side side) {
    trend.validate();
    const long n = static_cast<long>(series.size());
    long lo = 0, hi = n - 1;  // inclusive trading-day range
    if (side == Side::bull) {
        hi = std::min<long>(hi, static_cast<long>(std::floor(trend.t_c)));
        if (hi < 0) throw range_error("detrend: series lies entirely after t_c");
    } else {
        lo = std::max<long>(0, static_cast<long>(std::ceil(trend.t_c)));
        if (lo > n - 1) throw range_error("detrend: series ends before t_c");
    }
    Signal out;
    out.start_t = lo;
    const auto curve = trend_curve(trend, lo, static_cast<std::size_t>(hi - lo + 1));
    out.x.resize(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i)
        out.x[i] = series.values()[static_cast<std::size_t>(lo) + i] - curve[i];
    return out;
}

// ---------------------------------------------------------------------------
// Nonlinear fit
// ---------------------------------------------------------------------------

namespace {

constexpr int kNumParams = 7;
constexpr double kAlphaMin = 0.05;
constexpr double kAlphaMax = 1.99;

using Vec7 = Eigen::Matrix<double, kNumParams, 1>;

Vec7 pack(const TrendParams& p) {
    Vec7 v;
    v << p.t_c, p.tau, p.alpha, p.omega, p.delta_omega, p.x0_plus_x1, p.x1;
    return v;
}

TrendParams unpack(const Vec7& v) {
    return TrendParams{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

void clamp(Vec7& v, double t_span) {
    v[0] = std::clamp(v[0], 1e-6, 10.0 * t_span);       // t_c
    v[1] = std::clamp(v[1], 1e-3, 100.0 * t_span);      // tau
    v[2] = std::clamp(v[2], kAlphaMin, kAlphaMax);      // alpha
    v[3] = std::clamp(v[3], 0.0, 0.499);                // omega
    v[4] = std::clamp(v[4], 0.0, 0.499);                // delta_omega
}

struct FitProblem {
    long t0 = 0;
    const std::vector<double>* y = nullptr;

    Eigen::VectorXd residuals(const Vec7& v) const {
        const auto curve = eval_curve(unpack(v), t0, y->size(), /*fast=*/true);
        Eigen::VectorXd r(static_cast<long>(y->size()));
        for (std::size_t i = 0; i < y->size(); ++i) r[static_cast<long>(i)] = (*y)[i] - curve[i];
        return r;
    }

    double sse(const Vec7& v) const { return residuals(v).squaredNorm(); }

    double exact_sse(const Vec7& v) const {
        const auto curve = eval_curve(unpack(v), t0, y->size(), /*fast=*/false);
        double s = 0;
        for (std::size_t i = 0; i < y->size(); ++i) {
            const double d = (*y)[i] - curve[i];
            s += d * d;
        }
        return s;
    }
};

// Solves the two amplitudes (linear in the model) for fixed shape params.
void solve_amplitudes(const FitProblem& prob, Vec7& v) {
    TrendParams p = unpack(v);
    p.x0_plus_x1 = 1.0;  // placeholders, amplitudes ignored below
    p.x1 = 0.0;
    SeriesTable tab;
    tab.alpha = p.alpha;
    const std::size_t n = prob.y->size();
    Eigen::MatrixXd A(static_cast<long>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double dt =
            std::abs(static_cast<double>(prob.t0 + static_cast<long>(i)) - p.t_c);
        A(static_cast<long>(i), 0) = ml_eval(tab, std::pow(dt / p.tau, p.alpha), /*fast=*/true);
        A(static_cast<long>(i), 1) =
            -std::cos(p.omega * dt) * std::cos(p.delta_omega * dt);
    }
    Eigen::Map<const Eigen::VectorXd> b(prob.y->data(), static_cast<long>(n));
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    const double x1 = c[1];           // model term is -x1 * cos cos
    const double x0 = c[0] + x1;      // c[0] = X0 - X1
    v[5] = x0 + x1;
    v[6] = x1;
}

// Perturbations must stay inside the model's validity region (tau, alpha,
// t_c positive; omega, delta_omega in [0, 0.5)), otherwise evaluation throws.
void clamp_valid(Vec7& v) {
    v[0] = std::max(v[0], 1e-9);
    v[1] = std::max(v[1], 1e-9);
    v[2] = std::max(v[2], 1e-9);
    v[3] = std::clamp(v[3], 0.0, 0.4999999);
    v[4] = std::clamp(v[4], 0.0, 0.4999999);
}

Eigen::MatrixXd numeric_jacobian(const FitProblem& prob, const Vec7& v,
                                 bool central = true) {
    const long m = static_cast<long>(prob.y->size());
    Eigen::MatrixXd J(m, kNumParams);
    Eigen::VectorXd base;
    if (!central) base = prob.residuals(v);
    for (int j = 0; j < kNumParams; ++j) {
        const double scale = std::max(std::abs(v[j]), 1.0);
        const double h = 1e-6 * scale;
        Vec7 up = v, dn = v;
        up[j] += h;
        if (central) dn[j] -= h;
        clamp_valid(up);
        clamp_valid(dn);
        // one-sided at a boundary: divide by the realized spread
        J.col(j) = (prob.residuals(up) - (central ? prob.residuals(dn) : base)) /
                   (up[j] - dn[j]);
    }
    return J;
}

struct GnResult {
    Vec7 params;
    double sse = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

GnResult gauss_newton(const FitProblem& prob, Vec7 v, double t_span, int max_iter = 120) {
    GnResult res;
    clamp(v, t_span);
    double sse = prob.sse(v);
    double mu = 1e-3;
    int it = 0;
    int stalled = 0;  // consecutive accepted steps with negligible improvement
    for (; it < max_iter; ++it) {
        Eigen::MatrixXd J = numeric_jacobian(prob, v, /*central=*/false);
        Eigen::VectorXd r = prob.residuals(v);
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = -J.transpose() * r;
        bool stepped = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = JtJ;
            for (int k = 0; k < kNumParams; ++k)
                damped(k, k) += mu * std::max(JtJ(k, k), 1e-12);
            Vec7 delta = damped.ldlt().solve(g);
            Vec7 trial = v + delta;
            clamp(trial, t_span);
            // the amplitudes enter linearly: project them out exactly so the
            // search effectively runs over the five shape parameters
            solve_amplitudes(prob, trial);
            const double trial_sse = prob.sse(trial);
            if (trial_sse < sse) {
                const double rel = (sse - trial_sse) / std::max(sse, 1e-300);
                v = trial;
                sse = trial_sse;
                mu = std::max(mu / 3.0, 1e-12);
                stepped = true;
                // a sustained sub-1e-6 crawl means the fit is inching along a
                // flat ridge (tau and alpha trade off almost freely); treat
                // it as converged rather than burning the whole budget
                stalled = rel < 1e-6 ? stalled + 1 : 0;
                if (rel < 1e-9 || stalled >= 5 ||
                    delta.norm() < 1e-10 * (v.norm() + 1.0)) {
                    res.converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if (res.converged) break;
        if (!stepped) {  // no descent direction at any damping: local minimum
            res.converged = true;
            break;
        }
    }
    res.params = v;
    res.sse = sse;
    res.iterations = it + 1;
    return res;
}

FitReport finalize(const FitProblem& prob, const GnResult& gn) {
    FitReport rep;
    rep.params = unpack(gn.params);
    rep.iterations = gn.iterations;
    const std::size_t m = prob.y->size();

    double mean = 0;
    for (double v : *prob.y) mean += v;
    mean /= static_cast<double>(m);
    double sstot = 0;
    for (double v : *prob.y) sstot += (v - mean) * (v - mean);
    rep.r_squared = sstot > 0 ? 1.0 - gn.sse / sstot : 1.0;
    rep.residual_norm = std::sqrt(gn.sse / static_cast<double>(m));

    // covariance from the undamped normal matrix; rank-deficient directions
    // are reported with a huge standard deviation instead of aborting
    Eigen::MatrixXd J = numeric_jacobian(prob, gn.params);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigma2 =
        m > kNumParams ? gn.sse / static_cast<double>(m - kNumParams) : gn.sse;
    const auto& sv = svd.singularValues();
    const double tol = sv[0] * 1e-10;
    if (sv[0] <= 0.0) throw singular_error("fit_trend: normal matrix is degenerate");
    for (int i = 0; i < kNumParams; ++i) {
        double var = 0;
        for (int k = 0; k < kNumParams; ++k) {
            if (sv[k] > tol) {
                const double c = svd.matrixV()(i, k) / sv[k];
                var += c * c;
            } else {
                var = std::numeric_limits<double>::infinity();
                break;
            }
        }
        rep.std_devs[static_cast<std::size_t>(i)] =
            std::isinf(var) ? std::numeric_limits<double>::infinity()
                            : std::sqrt(sigma2 * var);
    }
    return rep;
}

FitReport fit_core(long t0, const std::vector<double>& values,
                   std::optional<TrendParams> init) {
    if (values.size() < 30)
        throw insufficient_data_error("fit_trend needs at least 30 points");
    FitProblem prob{t0, &values};
    const double n = static_cast<double>(values.size());
    const double t_span = static_cast<double>(t0) + n;

    GnResult best;
    bool any_converged = false;
    if (init) {
        init->validate();
        best = gauss_newton(prob, pack(*init), t_span);
        any_converged = best.converged;
    } else {
        // Global search over a coarse (t_c, tau, alpha) shape grid crossed
        // with a dense (omega, delta_omega) scan. For a fixed shape the two
        // amplitudes are linear, so every grid cell is solved in closed form;
        // the Mittag-Leffler column is computed once per shape and the cosine
        // factors once per frequency. The frequency step has to resolve the
        // ~pi/n attraction basin of a sampled sinusoid; the shape grid only
        // has to land inside the (much wider) Gauss-Newton basin.
        const double tref = static_cast<double>(t0);
        const std::size_t m = values.size();
        const double step = 1.2 / n;
        const double freq_max = std::min(0.03, 0.499 - step);
        std::vector<double> freqs;
        for (double w = 0.0; w <= freq_max; w += step) freqs.push_back(w);
        // cos(w * dt) tables are shared across shapes through the dt offset
        // only when t_c is fixed, so they are rebuilt per t_c below.
        struct ScanHit {
            double sse, tc, tau, alpha, w, dw, c0, c1;
        };
        std::vector<ScanHit> hits;
        double yty = 0;
        for (double v : values) yty += v * v;
        for (double tc : {tref + 0.9 * n, tref + 1.0 * n, tref + 1.1 * n, tref + 1.25 * n}) {
            std::vector<double> dts(m);
            for (std::size_t i = 0; i < m; ++i)
                dts[i] = std::abs(static_cast<double>(t0 + static_cast<long>(i)) - tc);
            std::vector<std::vector<double>> costab(freqs.size(), std::vector<double>(m));
            for (std::size_t f = 0; f < freqs.size(); ++f)
                for (std::size_t i = 0; i < m; ++i) costab[f][i] = std::cos(freqs[f] * dts[i]);
            for (double alpha : {0.3, 0.55, 0.8, 1.05, 1.3, 1.55, 1.8})
                for (double tau : {n / 8.0, n / 4.0, n / 2.0, n}) {
                    SeriesTable tab;
                    tab.alpha = alpha;
                    std::vector<double> mlcol(m);
                    double a00 = 0, b0 = 0;
                    for (std::size_t i = 0; i < m; ++i) {
                        mlcol[i] = ml_eval(tab, std::pow(dts[i] / tau, alpha), /*fast=*/true);
                        a00 += mlcol[i] * mlcol[i];
                        b0 += mlcol[i] * values[i];
                    }
                    ScanHit local{std::numeric_limits<double>::infinity(), tc, tau,
                                  alpha, 0,   0,   0,  0};
                    for (std::size_t f = 0; f < freqs.size(); ++f)
                        for (std::size_t g = 0; g <= f; ++g) {  // symmetric in w <-> dw
                            const double* cw = costab[f].data();
                            const double* cg = costab[g].data();
                            double a01 = 0, a11 = 0, b1 = 0;
                            for (std::size_t i = 0; i < m; ++i) {
                                const double c = -cw[i] * cg[i];
                                a01 += mlcol[i] * c;
                                a11 += c * c;
                                b1 += c * values[i];
                            }
                            const double det = a00 * a11 - a01 * a01;
                            if (!(det > 1e-12 * a00 * a11)) continue;  // collinear columns
                            const double c0 = (a11 * b0 - a01 * b1) / det;
                            const double c1 = (a00 * b1 - a01 * b0) / det;
                            const double sse = yty - c0 * b0 - c1 * b1;
                            if (sse < local.sse)
                                local = {sse, tc, tau, alpha, freqs[f], freqs[g], c0, c1};
                        }
                    if (std::isfinite(local.sse)) hits.push_back(local);
                }
        }
        std::sort(hits.begin(), hits.end(),
                  [](const ScanHit& a, const ScanHit& b) { return a.sse < b.sse; });
        if (hits.size() > 4) hits.resize(4);
        for (const ScanHit& h : hits) {
            Vec7 v;
            v << h.tc, h.tau, h.alpha, h.w, h.dw, h.c0 + 2.0 * h.c1, h.c1;
            GnResult r = gauss_newton(prob, v, t_span);
            any_converged = any_converged || r.converged;
            if (r.sse < best.sse) best = r;
        }
    }
    best.sse = prob.exact_sse(best.params);
    FitReport rep = finalize(prob, best);
    if (!any_converged)
        throw convergence_error("fit_trend did not converge within the iteration budget",
                                rep);
    return rep;
}

}  // namespace

FitReport fit_trend_values(const std::vector<double>& values,
                           std::optional<TrendParams> init) {
    return fit_core(0, values, std::move(init));
}

FitReport fit_trend(const PriceSeries& series, Side side,
                    std::optional<TrendParams> init) {
    const auto& v = series.values();
    const std::size_t peak = static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
    if (side == Side::bull) {
        std::vector<double> seg(v.begin(), v.begin() + static_cast<long>(peak) + 1);
        return fit_core(0, seg, std::move(init));
    }
    std::vector<double> seg(v.begin() + static_cast<long>(peak), v.end());
    return fit_core(static_cast<long>(peak), seg, std::move(init));
}

std::string FitReport::to_json() const {
    nlohmann::json j;
    j["t_c"] = params.t_c;
    j["tau"] = params.tau;
    j["alpha"] = params.alpha;
    j["omega"] = params.omega;
    j["delta_omega"] = params.delta_omega;
    j["X0_plus_X1"] = params.x0_plus_x1;
    j["X1"] = params.x1;
    j["R2"] = r_squared;
    j["residual_norm"] = residual_norm;
    j["iterations"] = iterations;
    const char* names[kNumParams] = {"t_c",   "tau",        "alpha", "omega",
                                     "delta_omega", "X0_plus_X1", "X1"};
    for (int i = 0; i < kNumParams; ++i) {
        double sd = std_devs[static_cast<std::size_t>(i)];
        j["std_dev"][names[i]] = std::isfinite(sd) ? nlohmann::json(sd) : nlohmann::json();
    }
    return j.dump(2);
}

}  // namespace catbif
