#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "catbif/errors.hpp"
#include "catbif/timeseries.hpp"

namespace catbif {

/// Finite-sample power-spectrum estimator
///   I(w_j) = T^-1 | sum_{t=1..T} x_t exp(-i t w_j) |^2,  w_j = 2 pi (j-1)/T.
/// All T bins are stored; reporting typically uses j = 1..T/2+1 (symmetry).
struct Periodogram {
    std::vector<double> freqs;
    std::vector<double> power;
    std::size_t T = 0;

    /// Number of non-redundant bins (T/2 + 1).
    std::size_t half_size() const { return T / 2 + 1; }
};

/// Log-periodogram regression result.
struct GphEstimate {
    double hurst = 0;    // H = 0.5 - slope
    double slope = 0;    // raw regression slope
    std::size_t k_used = 0;
    double se = 0;       // standard error of the slope
    double decay_exponent = 0;  // 2 (1 - H), increment-ACF power-law decay
    std::vector<std::size_t> dropped;  // zero-power bins skipped

    std::string to_json() const;
};

Periodogram periodogram(std::span<const double> x);
Periodogram noise_periodogram(const Increments& dx);

/// Direct O(T^2) evaluation; the reference the fast path must match.
/// Exposed so tests can cross-check the transform paths.
Periodogram periodogram_direct(std::span<const double> x);

/// Stationary AR(1) spectrum PS(w) = -l(2+l) / (2 + l(2+l) - 2(1+l) cos w)
/// for l in (-2, 0).
double ar1_power_spectrum(double lambda, double omega);

/// Zero-frequency power over the median of the remaining (non-redundant)
/// bins, one entry per input periodogram. Undefined (nullopt) when the
/// median vanishes.
std::vector<std::optional<double>> reddening_index(const std::vector<Periodogram>& pgs);

/// Log-periodogram (GPH) regression over the k lowest nonzero frequencies.
/// Default k = Int[L^0.44]; admissible range Int[L^0.2] .. Int[L^0.5].
GphEstimate gph_estimate(std::span<const double> x,
                         std::optional<std::size_t> k = std::nullopt);

/// Admissible (k_min, k_max) and default k for a series of length L.
struct GphRange {
    std::size_t k_min, k_max, k_default;
};
GphRange gph_k_range(std::size_t length);

}  // namespace catbif
