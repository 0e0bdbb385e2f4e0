#include "catbif/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <json.hpp>

namespace catbif {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread safe.
std::mutex fftw_plan_mutex;

void check_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) throw domain_error("periodogram: non-finite input");
}

Periodogram make_frame(std::size_t T) {
    Periodogram pg;
    pg.T = T;
    pg.freqs.resize(T);
    pg.power.resize(T);
    for (std::size_t j = 0; j < T; ++j)
        pg.freqs[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(T);
    return pg;
}

Periodogram periodogram_fft(std::span<const double> x) {
    const std::size_t T = x.size();
    Periodogram pg = make_frame(T);
    std::vector<std::complex<double>> in(T), out(T);
    for (std::size_t t = 0; t < T; ++t) in[t] = x[t];
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_plan plan = fftw_plan_dft_1d(
            static_cast<int>(T), reinterpret_cast<fftw_complex*>(in.data()),
            reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    for (std::size_t j = 0; j < T; ++j)
        pg.power[j] = std::norm(out[j]) / static_cast<double>(T);
    return pg;
}

}  // namespace

Periodogram periodogram_direct(std::span<const double> x) {
    const std::size_t T = x.size();
    if (T < 2) throw insufficient_data_error("periodogram needs T >= 2");
    check_finite(x);
    Periodogram pg = make_frame(T);
    for (std::size_t j = 0; j < T; ++j) {
        const double w = pg.freqs[j];
        double re = 0, im = 0;
        for (std::size_t t = 0; t < T; ++t) {
            const double phase = w * static_cast<double>(t + 1);
            re += x[t] * std::cos(phase);
            im -= x[t] * std::sin(phase);
        }
        pg.power[j] = (re * re + im * im) / static_cast<double>(T);
    }
    return pg;
}

Periodogram periodogram(std::span<const double> x) {
    const std::size_t T = x.size();
    if (T < 2) throw insufficient_data_error("periodogram needs T >= 2");
    check_finite(x);
    if (T <= 64) return periodogram_direct(x);
    return periodogram_fft(x);
}

Periodogram noise_periodogram(const Increments& dx) {
    return periodogram(std::span<const double>(dx.dx.data(), dx.dx.size()));
}

double ar1_power_spectrum(double lambda, double omega) {
    if (!(lambda > -2.0 && lambda < 0.0))
        throw domain_error("ar1_power_spectrum: lambda must lie in (-2, 0)");
    const double num = -lambda * (2.0 + lambda);
    const double den = 2.0 + lambda * (2.0 + lambda) - 2.0 * (1.0 + lambda) * std::cos(omega);
    return num / den;
}

std::vector<std::optional<double>> reddening_index(const std::vector<Periodogram>& pgs) {
    if (pgs.size() < 2)
        throw insufficient_data_error("reddening_index needs at least 2 periodograms");
    std::vector<std::optional<double>> out;
    out.reserve(pgs.size());
    for (const auto& pg : pgs) {
        std::vector<double> rest(pg.power.begin() + 1, pg.power.begin() +
                                     static_cast<long>(pg.half_size()));
        if (rest.empty()) {
            out.push_back(std::nullopt);
            continue;
        }
        std::sort(rest.begin(), rest.end());
        const std::size_t n = rest.size();
        const double med = (n % 2) ? rest[n / 2] : 0.5 * (rest[n / 2 - 1] + rest[n / 2]);
        if (med <= 0.0)
            out.push_back(std::nullopt);
        else
            out.push_back(pg.power[0] / med);
    }
    return out;
}

GphRange gph_k_range(std::size_t length) {
    const double L = static_cast<double>(length);
    GphRange r;
    // nearest-integer so L = 400 lands on the canonical (3, 20, 14)
    r.k_min = static_cast<std::size_t>(std::llround(std::pow(L, 0.2)));
    r.k_max = static_cast<std::size_t>(std::llround(std::pow(L, 0.5)));
    r.k_default = static_cast<std::size_t>(std::llround(std::pow(L, 0.44)));
    return r;
}

GphEstimate gph_estimate(std::span<const double> x, std::optional<std::size_t> k) {
    const std::size_t L = x.size();
    if (L < 32) throw insufficient_data_error("gph_estimate needs length >= 32");
    const GphRange range = gph_k_range(L);
    const std::size_t K = k.value_or(range.k_default);
    if (K < range.k_min || K > range.k_max)
        throw domain_error("gph_estimate: k outside admissible [Int(L^0.2), Int(L^0.5)]");

    const Periodogram pg = periodogram(x);
    GphEstimate est;
    std::vector<double> xs, ys;
    for (std::size_t j = 1; j <= K && j < pg.half_size(); ++j) {
        if (pg.power[j] <= 0.0) {
            est.dropped.push_back(j);
            continue;
        }
        const double s = std::sin(pg.freqs[j] / 2.0);
        xs.push_back(std::log(4.0 * s * s));
        ys.push_back(std::log(pg.power[j]));
    }
    if (xs.size() < 3)
        throw insufficient_data_error("gph_estimate: fewer than 3 usable frequencies");

    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw singular_error("gph_estimate: degenerate frequency grid");
    est.slope = sxy / sxx;
    est.k_used = n;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - my - est.slope * (xs[i] - mx);
        sse += r * r;
    }
    est.se = n > 2 ? std::sqrt(sse / (static_cast<double>(n) - 2.0) / sxx) : 0.0;
    est.hurst = 0.5 - est.slope;
    est.decay_exponent = 2.0 * (1.0 - est.hurst);
    return est;
}

std::string GphEstimate::to_json() const {
    nlohmann::json j;
    j["H"] = hurst;
    j["slope"] = slope;
    j["k_used"] = k_used;
    j["se"] = se;
    j["decay_exponent"] = decay_exponent;
    return j.dump(2);
}

}  // namespace catbif
