#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "catbif/errors.hpp"
#include "catbif/timeseries.hpp"

namespace catbif {

/// Multi-asset price panel: one date column, one price column per asset.
/// Rows are strictly increasing in date; prices are finite and positive.
struct Panel {
    std::vector<std::string> labels;
    std::vector<Date> dates;
    std::vector<std::vector<double>> prices;  // prices[asset][row]

    std::size_t assets() const { return labels.size(); }
    std::size_t rows() const { return dates.size(); }
};

struct CorrelationWindow {
    std::vector<std::string> labels;          // assets kept
    std::vector<std::vector<double>> rho;     // symmetric, unit diagonal
    std::pair<Date, Date> span;
    std::vector<std::string> excluded;        // zero-variance assets dropped

    std::size_t size() const { return labels.size(); }
};

enum class MstAlgorithm { prim, kruskal };

struct MstEdge {
    std::size_t u, v;  // u < v
    double weight;
};

struct MstSnapshot {
    std::vector<std::string> labels;
    std::vector<MstEdge> edges;           // N - 1 entries
    std::vector<std::size_t> degrees;
    std::size_t center_static = 0;
    std::size_t center_dynamic = 0;       // max-degree vertex (smallest label on tie)
    double normalized_length = 0;
    double mol_static = 0;
    double mol_dynamic = 0;

    std::size_t size() const { return labels.size(); }
    std::string metrics_json() const;
};

struct DegreeFit {
    double exponent = 0;
    double se = 0;
    std::vector<std::size_t> outliers;  // candidate superhubs
};

struct TimelineEntry {
    std::pair<Date, Date> span;
    std::optional<double> normalized_length;
    std::optional<double> mol_static;
    std::optional<double> mol_dynamic;
    std::optional<std::size_t> max_degree;
    std::optional<double> exponent;
    std::string failure;  // nonempty when the window could not be processed
};

/// Pearson correlation of log-returns over panel rows [start_row, end_row).
CorrelationWindow correlation_window(const Panel& panel, std::size_t start_row,
                                     std::size_t end_row);

/// Minimum spanning tree of the complete graph under d = sqrt(2 (1 - rho)).
/// Ties broken lexicographically on (weight, smaller label, larger label) so
/// both algorithms are deterministic.
MstSnapshot mst_build(const CorrelationWindow& cw,
                      MstAlgorithm algorithm = MstAlgorithm::prim,
                      std::size_t center_static = 0);

/// Mean hop distance to `center` over all vertices (center counts at 0).
double mean_occupation_layer(const MstSnapshot& tree, std::size_t center);

/// Log-log OLS on the integer degree histogram (zero-count bins dropped).
/// Outliers are vertices whose degree bin sits >= 5x above the fitted law;
/// the detection line is refitted without count-1 bins so a lone superhub
/// cannot flatten its own detection threshold.
DegreeFit degree_fit(const MstSnapshot& tree);

std::vector<TimelineEntry> structure_timeline(const Panel& panel,
                                              const WindowSpec& spec);

Panel read_panel_csv(std::istream& in);
void write_edges_csv(std::ostream& os, const MstSnapshot& tree);

}  // namespace catbif
