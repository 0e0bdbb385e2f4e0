#include "catbif/mst.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace catbif {

namespace {

double edge_distance(double rho) { return std::sqrt(2.0 * (1.0 - rho)); }

// (weight, min label, max label) lexicographic order.
bool edge_less(const MstEdge& a, const MstEdge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
}

std::vector<MstEdge> mst_prim(const std::vector<std::vector<double>>& d) {
    const std::size_t n = d.size();
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::vector<MstEdge> edges;
    in_tree[0] = true;
    for (std::size_t v = 1; v < n; ++v) {
        best[v] = d[0][v];
        from[v] = 0;
    }
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t pick = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            if (pick == n) {
                pick = v;
                continue;
            }
            const MstEdge ev{std::min(v, from[v]), std::max(v, from[v]), best[v]};
            const MstEdge ep{std::min(pick, from[pick]), std::max(pick, from[pick]),
                             best[pick]};
            if (edge_less(ev, ep)) pick = v;
        }
        edges.push_back({std::min(pick, from[pick]), std::max(pick, from[pick]),
                         best[pick]});
        in_tree[pick] = true;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const MstEdge cand{std::min(v, pick), std::max(v, pick), d[pick][v]};
            const MstEdge cur{std::min(v, from[v]), std::max(v, from[v]), best[v]};
            if (edge_less(cand, cur)) {
                best[v] = d[pick][v];
                from[v] = pick;
            }
        }
    }
    return edges;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

std::vector<MstEdge> mst_kruskal(const std::vector<std::vector<double>>& d) {
    const std::size_t n = d.size();
    std::vector<MstEdge> all;
    all.reserve(n * (n - 1) / 2);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) all.push_back({u, v, d[u][v]});
    std::sort(all.begin(), all.end(), edge_less);
    UnionFind uf(n);
    std::vector<MstEdge> edges;
    for (const auto& e : all)
        if (uf.unite(e.u, e.v)) {
            edges.push_back(e);
            if (edges.size() == n - 1) break;
        }
    return edges;
}

std::vector<std::vector<std::size_t>> adjacency(const MstSnapshot& tree) {
    std::vector<std::vector<std::size_t>> adj(tree.size());
    for (const auto& e : tree.edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    return adj;
}

}  // namespace

CorrelationWindow correlation_window(const Panel& panel, std::size_t start_row,
                                     std::size_t end_row) {
    if (panel.assets() < 2)
        throw insufficient_data_error("correlation_window: needs >= 2 assets");
    if (end_row > panel.rows() || start_row >= end_row)
        throw range_error("correlation_window: invalid row span");
    if (end_row - start_row < 4)
        throw insufficient_data_error("correlation_window: needs >= 3 returns per asset");

    const std::size_t nret = end_row - start_row - 1;
    std::vector<std::vector<double>> returns;
    CorrelationWindow cw;
    cw.span = {panel.dates[start_row], panel.dates[end_row - 1]};
    for (std::size_t a = 0; a < panel.assets(); ++a) {
        std::vector<double> r(nret);
        for (std::size_t t = 0; t < nret; ++t)
            r[t] = std::log(panel.prices[a][start_row + t + 1] /
                            panel.prices[a][start_row + t]);
        const double mean = std::accumulate(r.begin(), r.end(), 0.0) /
                            static_cast<double>(nret);
        double var = 0;
        for (double x : r) var += (x - mean) * (x - mean);
        if (var <= 0.0) {
            cw.excluded.push_back(panel.labels[a]);
            continue;
        }
        for (double& x : r) x -= mean;
        cw.labels.push_back(panel.labels[a]);
        returns.push_back(std::move(r));
    }
    const std::size_t n = cw.labels.size();
    if (n < 2)
        throw insufficient_data_error(
            "correlation_window: fewer than 2 assets with nonzero variance");
    cw.rho.assign(n, std::vector<double>(n, 1.0));
    std::vector<double> norms(n);
    for (std::size_t a = 0; a < n; ++a) {
        double s = 0;
        for (double x : returns[a]) s += x * x;
        norms[a] = std::sqrt(s);
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double dot = 0;
            for (std::size_t t = 0; t < nret; ++t) dot += returns[a][t] * returns[b][t];
            const double r = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
            cw.rho[a][b] = cw.rho[b][a] = r;
        }
    return cw;
}

MstSnapshot mst_build(const CorrelationWindow& cw, MstAlgorithm algorithm,
                      std::size_t center_static) {
    const std::size_t n = cw.size();
    if (n < 2) throw insufficient_data_error("mst_build: needs >= 2 vertices");
    if (center_static >= n) throw range_error("mst_build: static center out of range");
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) {
            const double w = edge_distance(cw.rho[u][v]);
            if (!std::isfinite(w))
                throw domain_error("mst_build: non-finite distance between " +
                                   cw.labels[u] + " and " + cw.labels[v]);
            d[u][v] = d[v][u] = w;
        }

    MstSnapshot tree;
    tree.labels = cw.labels;
    tree.edges = algorithm == MstAlgorithm::prim ? mst_prim(d) : mst_kruskal(d);
    std::sort(tree.edges.begin(), tree.edges.end(), edge_less);
    tree.degrees.assign(n, 0);
    for (const auto& e : tree.edges) {
        ++tree.degrees[e.u];
        ++tree.degrees[e.v];
    }
    tree.center_static = center_static;
    tree.center_dynamic = static_cast<std::size_t>(
        std::max_element(tree.degrees.begin(), tree.degrees.end()) -
        tree.degrees.begin());

    double total = 0, center_total = 0;
    std::size_t center_count = 0;
    for (const auto& e : tree.edges) {
        total += e.weight;
        if (e.u == tree.center_dynamic || e.v == tree.center_dynamic) {
            center_total += e.weight;
            ++center_count;
        }
    }
    // Mean tree edge over mean hub edge: exactly 1 for a pure star, > 1 as
    // the tree stretches away from its dominant hub.
    const double mean_edge = total / static_cast<double>(tree.edges.size());
    const double mean_hub = center_total / static_cast<double>(center_count);
    tree.normalized_length = mean_hub > 0.0 ? mean_edge / mean_hub : 1.0;
    tree.mol_static = mean_occupation_layer(tree, tree.center_static);
    tree.mol_dynamic = mean_occupation_layer(tree, tree.center_dynamic);
    return tree;
}

double mean_occupation_layer(const MstSnapshot& tree, std::size_t center) {
    const std::size_t n = tree.size();
    if (center >= n) throw range_error("mean_occupation_layer: center out of range");
    const auto adj = adjacency(tree);
    std::vector<long> level(n, -1);
    std::queue<std::size_t> q;
    level[center] = 0;
    q.push(center);
    double sum = 0;
    std::size_t seen = 0;
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        sum += static_cast<double>(level[u]);
        ++seen;
        for (std::size_t v : adj[u])
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
    }
    if (seen != n) throw degenerate_error("mean_occupation_layer: tree not connected");
    return sum / static_cast<double>(n);
}

DegreeFit degree_fit(const MstSnapshot& tree) {
    const std::size_t n = tree.size();
    std::size_t kmax = 0;
    for (std::size_t d : tree.degrees) kmax = std::max(kmax, d);
    std::vector<std::size_t> hist(kmax + 1, 0);
    for (std::size_t d : tree.degrees) ++hist[d];
    std::vector<double> xs, ys;
    for (std::size_t k = 1; k <= kmax; ++k)
        if (hist[k] > 0) {
            xs.push_back(std::log(static_cast<double>(k)));
            ys.push_back(std::log(static_cast<double>(hist[k])));
        }
    if (xs.size() < 4)
        throw insufficient_data_error("degree_fit: fewer than 4 distinct degrees");

    const double m = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    DegreeFit fit;
    fit.exponent = sxy / sxx;
    double sse = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - my - fit.exponent * (xs[i] - mx);
        sse += r * r;
    }
    fit.se = xs.size() > 2 ? std::sqrt(sse / (m - 2.0) / sxx) : 0.0;

    // Superhub candidates: vertices whose degree bin sits far above the
    // fitted law. A lone superhub contributes a count-1 bin at large k that
    // flattens the overall fit, so the detection line is refitted on the
    // bins with count >= 2 (keeping the full fit when too few remain).
    double gd = fit.exponent, bd = my - fit.exponent * mx;
    {
        std::vector<double> bx, by;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (ys[i] > 0.0) {
                bx.push_back(xs[i]);
                by.push_back(ys[i]);
            }
        if (bx.size() >= 4) {
            const double mb = static_cast<double>(bx.size());
            double bmx = 0, bmy = 0;
            for (std::size_t i = 0; i < bx.size(); ++i) {
                bmx += bx[i];
                bmy += by[i];
            }
            bmx /= mb;
            bmy /= mb;
            double bsxx = 0, bsxy = 0;
            for (std::size_t i = 0; i < bx.size(); ++i) {
                bsxx += (bx[i] - bmx) * (bx[i] - bmx);
                bsxy += (bx[i] - bmx) * (by[i] - bmy);
            }
            if (bsxx > 0.0) {
                gd = bsxy / bsxx;
                bd = bmy - gd * bmx;
            }
        }
    }
    if (gd < -1.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = tree.degrees[i];
            if (k < 1) continue;
            const double predicted =
                std::exp(bd + gd * std::log(static_cast<double>(k)));
            if (static_cast<double>(hist[k]) >= 5.0 * predicted)
                fit.outliers.push_back(i);
        }
    }
    return fit;
}

std::vector<TimelineEntry> structure_timeline(const Panel& panel,
                                              const WindowSpec& spec) {
    if (spec.width < 4 || spec.step < 1)
        throw domain_error("structure_timeline: invalid window spec");
    if (panel.rows() < spec.width)
        throw insufficient_data_error("structure_timeline: panel shorter than window");
    std::vector<TimelineEntry> out;
    for (std::size_t start = 0; start + spec.width <= panel.rows();
         start += spec.step) {
        TimelineEntry entry;
        entry.span = {panel.dates[start], panel.dates[start + spec.width - 1]};
        try {
            const auto cw = correlation_window(panel, start, start + spec.width);
            const auto tree = mst_build(cw);
            entry.normalized_length = tree.normalized_length;
            entry.mol_static = tree.mol_static;
            entry.mol_dynamic = tree.mol_dynamic;
            entry.max_degree = tree.degrees[tree.center_dynamic];
            try {
                entry.exponent = degree_fit(tree).exponent;
            } catch (const error&) {
            }
        } catch (const error& e) {
            entry.failure = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

Panel read_panel_csv(std::istream& in) {
    Panel panel;
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw parse_error("panel: empty input");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::istringstream hs(line);
        std::string cell;
        bool first = true;
        while (std::getline(hs, cell, ',')) {
            if (first) {
                first = false;  // date column
                continue;
            }
            if (cell.empty()) throw parse_error("panel: empty asset label", lineno);
            panel.labels.push_back(cell);
        }
    }
    if (panel.labels.empty()) throw parse_error("panel: no asset columns", lineno);
    panel.prices.resize(panel.labels.size());
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ','))
            throw parse_error("panel: missing date", lineno);
        Date date;
        try {
            date = Date::parse_iso(cell);
        } catch (const error&) {
            throw parse_error("panel: bad date '" + cell + "'", lineno);
        }
        if (!panel.dates.empty() && !(panel.dates.back() < date))
            throw parse_error("panel: dates must be strictly increasing", lineno);
        panel.dates.push_back(date);
        for (std::size_t a = 0; a < panel.labels.size(); ++a) {
            if (!std::getline(ls, cell, ','))
                throw parse_error("panel: missing value for " + panel.labels[a],
                                  lineno);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v) || v <= 0.0)
                throw parse_error("panel: bad price '" + cell + "'", lineno);
            panel.prices[a].push_back(v);
        }
    }
    if (panel.rows() < 2) throw parse_error("panel: needs >= 2 rows");
    return panel;
}

void write_edges_csv(std::ostream& os, const MstSnapshot& tree) {
    os << "u,v,weight\n";
    const auto prec = os.precision(12);
    for (const auto& e : tree.edges)
        os << tree.labels[e.u] << ',' << tree.labels[e.v] << ',' << e.weight << '\n';
    os.precision(prec);
}

std::string MstSnapshot::metrics_json() const {
    nlohmann::json j;
    j["vertices"] = labels.size();
    j["edges"] = edges.size();
    j["center_static"] = labels[center_static];
    j["center_dynamic"] = labels[center_dynamic];
    j["max_degree"] = degrees[center_dynamic];
    j["normalized_length"] = normalized_length;
    j["mol_static"] = mol_static;
    j["mol_dynamic"] = mol_dynamic;
    return j.dump(2);
}

}  // namespace catbif
