#include "catbif/scalingdist.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <json.hpp>

namespace catbif {

namespace {

struct OlsLine {
    double slope = 0, intercept = 0, sse = 0;
    std::size_t n = 0;
};

OlsLine ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    OlsLine line;
    line.n = xs.size();
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw singular_error("degenerate abscissa in log-log fit");
    line.slope = sxy / sxx;
    line.intercept = my - line.slope * mx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - line.intercept - line.slope * xs[i];
        line.sse += r * r;
    }
    return line;
}

double integrate_half_line(const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> quad;
    return quad.integrate(f, 1e-9);
}

}  // namespace

ScalingLaw::ScalingLaw(double eta, double D_coef) : eta_(eta), D_(D_coef) {
    if (!(eta < 2.0)) throw domain_error("ScalingLaw: eta must be < 2");
    if (eta == 0.0) throw domain_error("ScalingLaw: eta = 0 degenerates the family");
    if (!(D_coef > 0.0)) throw domain_error("ScalingLaw: D must be > 0");
    nu_ = 2.0 / (2.0 - eta);
    nu_bar_ = (eta - 1.0) / (eta - 2.0);
    // The closed-form prefactor uses eta inside fractional powers; the
    // positive branch |eta| keeps D_bar > 0 for every eta < 2 and matches
    // the stated formula on 0 < eta < 2.
    D_bar_ = 0.25 * std::pow(2.0 * std::sqrt(D_) / std::fabs(eta), nu_) *
             std::fabs(eta) / (2.0 - eta);
    if (!(D_bar_ > 0.0) || !std::isfinite(D_bar_))
        throw domain_error("ScalingLaw: nonpositive effective diffusion scale");
    // Normalization fixed numerically: the closed-form prefactor does not
    // normalize the capped family, so B = 1 / (2 integral of F over xi > 0)
    // with the sub-xi_min region contributing a frozen rectangle.
    auto F = [this](double xi) {
        return std::pow(xi, nu_bar_) * std::exp(-std::pow(xi, nu_) / (4.0 * D_bar_));
    };
    boost::math::quadrature::exp_sinh<double> quad;
    const double body = quad.integrate([&F](double u) { return F(kXiMin + u); });
    const double cap = F(kXiMin) * kXiMin;
    const double total = body + cap;
    if (!(total > 0.0) || !std::isfinite(total))
        throw domain_error("ScalingLaw: scaling function not integrable");
    B_ = 1.0 / (2.0 * total);
}

double ScalingLaw::scaling_function(double xi) const {
    const double z = std::max(xi, kXiMin);
    return std::pow(z, nu_bar_) * std::exp(-std::pow(z, nu_) / (4.0 * D_bar_));
}

double scaling_pdf(const ScalingLaw& law, double dx, double dt) {
    if (!(dt > 0.0)) throw domain_error("scaling_pdf: dt must be > 0");
    const double scale = std::pow(dt, law.eta() / 2.0);
    const double xi = std::fabs(dx) / scale;
    return law.B() / scale * law.scaling_function(xi);
}

BorderDensity border_distribution(const ScalingLaw& law, double dx) {
    if (dx == 0.0) throw domain_error("border_distribution: dx must be nonzero");
    BorderDensity bd;
    bd.exponent = law.tail();
    bd.heavy_tail = bd.exponent > 0.0;
    const double power = -2.0 / law.eta();
    const double c = 2.0 * law.B() / std::fabs(law.eta()) *
                     integrate_half_line([&law, power](double u) {
                         const double xi = ScalingLaw::kXiMin + u;
                         return std::pow(xi, power) * law.scaling_function(xi);
                     });
    bd.value = c * std::pow(std::fabs(dx), -bd.exponent);
    return bd;
}

ExponentWeb exponent_web(double eta) {
    if (!(eta < 2.0)) throw domain_error("exponent_web: eta must be < 2");
    ExponentWeb w;
    w.eta = eta;
    w.hurst = eta / 2.0;
    if (eta != 0.0) w.tail = 1.0 - 2.0 / eta;
    w.signal_slope = -(1.0 + eta);
    w.noise_slope = -(eta - 1.0);
    w.acf_decay = 2.0 - eta;
    w.correlation_negative = eta > 1.0;
    return w;
}

std::string ExponentWeb::to_json() const {
    nlohmann::json j;
    j["eta"] = eta;
    j["H"] = hurst;
    if (tail)
        j["tail"] = *tail;
    else
        j["tail"] = nullptr;
    j["signal_slope"] = signal_slope;
    j["noise_slope"] = noise_slope;
    j["acf_decay"] = acf_decay;
    j["correlation_sign"] = correlation_negative ? "negative" : "non-negative";
    return j.dump(2);
}

double spectrum_slope_fit(const Periodogram& pg,
                          std::pair<std::size_t, std::size_t> j_range) {
    std::vector<double> xs, ys;
    const std::size_t lo = std::max<std::size_t>(j_range.first, 1);
    const std::size_t hi = std::min(j_range.second, pg.half_size() - 1);
    for (std::size_t j = lo; j <= hi; ++j) {
        if (pg.power[j] <= 0.0) continue;
        xs.push_back(std::log(pg.freqs[j]));
        ys.push_back(std::log(pg.power[j]));
    }
    if (xs.size() < 3)
        throw insufficient_data_error("spectrum_slope_fit: fewer than 3 usable bins");
    return ols(xs, ys).slope;
}

HistogramFit histogram_fit(const Increments& dx, std::size_t bins) {
    const auto& v = dx.dx;
    if (v.size() < 100)
        throw insufficient_data_error("histogram_fit: needs >= 100 samples");
    if (bins < 4) throw domain_error("histogram_fit: needs >= 4 bins");

    HistogramFit fit;
    const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    double lo = *mn_it, hi = *mx_it;
    if (lo == hi) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    fit.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        fit.bin_edges[i] = lo + width * static_cast<double>(i);
    fit.counts.assign(bins, 0);
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        if (b >= bins) b = bins - 1;
        ++fit.counts[b];
    }

    // Gaussian core: moments of the interquartile body, variance re-inflated
    // by the truncated-normal factor (sd of the middle half of a normal is
    // 0.37772 sigma).
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t q1 = sorted.size() / 4;
    const std::size_t q3 = (3 * sorted.size()) / 4;
    double mu = 0;
    for (std::size_t i = q1; i < q3; ++i) mu += sorted[i];
    mu /= static_cast<double>(q3 - q1);
    double var = 0;
    for (std::size_t i = q1; i < q3; ++i) var += (sorted[i] - mu) * (sorted[i] - mu);
    var /= static_cast<double>(q3 - q1);
    fit.gauss_mu = mu;
    fit.gauss_sigma = std::sqrt(var) / 0.37772;

    // Left tail: log-spaced bins in u = mu - x beyond 2 sigma.
    const double u_lo = 2.0 * fit.gauss_sigma;
    const double u_hi = mu - sorted.front();
    if (fit.gauss_sigma > 0.0 && u_hi > u_lo * 1.2) {
        const std::size_t nb = 12;
        const double ratio = std::pow(u_hi / u_lo, 1.0 / static_cast<double>(nb));
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < nb; ++i) {
            const double a = u_lo * std::pow(ratio, static_cast<double>(i));
            const double b = a * ratio;
            std::size_t count = 0;
            for (double x : v)
                if (mu - x > a && mu - x <= b) ++count;
            if (count == 0) continue;
            const double density =
                static_cast<double>(count) / (static_cast<double>(v.size()) * (b - a));
            xs.push_back(std::log(std::sqrt(a * b)));
            ys.push_back(std::log(density));
        }
        if (xs.size() >= 5) {
            fit.tail_exponent_left = ols(xs, ys).slope;
            fit.tail_range = {u_lo, u_hi};
        }
    }

    // Right side: Gaussian vs exponential decay of the binned density in
    // u = x - mu, decided by residual comparison of the two log-linear fits.
    {
        const double u_max = sorted.back() - mu;
        const std::size_t nb = 16;
        std::vector<double> us, lds;
        if (u_max > 0.0) {
            const double w = u_max / static_cast<double>(nb);
            for (std::size_t i = 0; i < nb; ++i) {
                const double a = w * static_cast<double>(i), b = a + w;
                std::size_t count = 0;
                for (double x : v)
                    if (x - mu > a && x - mu <= b) ++count;
                if (count == 0) continue;
                us.push_back(0.5 * (a + b));
                lds.push_back(std::log(static_cast<double>(count) /
                                       (static_cast<double>(v.size()) * w)));
            }
        }
        fit.right_model = RightTailModel::gaussian;
        fit.right_rate = fit.gauss_sigma;
        if (us.size() >= 3) {
            std::vector<double> us2(us.size());
            for (std::size_t i = 0; i < us.size(); ++i) us2[i] = us[i] * us[i];
            const OlsLine g = ols(us2, lds);
            const OlsLine e = ols(us, lds);
            if (e.sse < g.sse && e.slope < 0.0) {
                fit.right_model = RightTailModel::exponential;
                fit.right_rate = -e.slope;
            } else if (g.slope < 0.0) {
                fit.right_rate = std::sqrt(-1.0 / (2.0 * g.slope));
            }
        }
    }
    return fit;
}

}  // namespace catbif
