#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "catbif/mst.hpp"
#include "catbif/rng.hpp"

using namespace catbif;

namespace {

// Correlation window straight from a matrix, no panel plumbing.
CorrelationWindow cw_from_rho(std::vector<std::vector<double>> rho) {
    CorrelationWindow cw;
    for (std::size_t i = 0; i < rho.size(); ++i)
        cw.labels.push_back("A" + std::to_string(i));
    cw.rho = std::move(rho);
    cw.span = {Date{2020, 1, 1}, Date{2020, 2, 1}};
    return cw;
}

// Factor-model panel: asset 0 is the common factor, the others are the
// factor plus idiosyncratic noise of increasing strength.
Panel factor_panel(std::size_t assets, std::size_t rows, std::uint64_t seed) {
    Panel p;
    auto gen = make_stream(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    p.labels.resize(assets);
    p.prices.assign(assets, std::vector<double>(rows));
    std::vector<double> factor(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        factor[r] = 0.01 * d(gen);
        p.dates.push_back(Date{2020, 1 + static_cast<int>(r / 28), 1 + static_cast<int>(r % 28)});
    }
    for (std::size_t a = 0; a < assets; ++a) {
        p.labels[a] = std::string(1, static_cast<char>('A' + a));
        double logp = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double idio = (a == 0) ? 0.0 : 0.002 * static_cast<double>(a) * d(gen);
            logp += factor[r] + idio;
            p.prices[a][r] = 100.0 * std::exp(logp);
        }
    }
    return p;
}

}  // namespace

TEST_CASE("metric distance and hand-built 3-asset tree") {
    // rho(A,B) = 1 -> d = 0; rho = 0 -> sqrt(2); rho = -1 -> 2
    auto cw = cw_from_rho({{1.0, 0.5, 0.1},
                           {0.5, 1.0, 0.3},
                           {0.1, 0.3, 1.0}});
    const auto t = mst_build(cw);
    REQUIRE(t.edges.size() == 2);
    // d(0,1) = 1, d(1,2) = sqrt(1.4), d(0,2) = sqrt(1.8): keep (0,1) and (1,2)
    CHECK(t.edges[0].u == 0);
    CHECK(t.edges[0].v == 1);
    CHECK(t.edges[0].weight == doctest::Approx(1.0));
    CHECK(t.edges[1].u == 1);
    CHECK(t.edges[1].v == 2);
    CHECK(t.edges[1].weight == doctest::Approx(std::sqrt(1.4)));
    CHECK(t.center_dynamic == 1);  // degree 2
    CHECK(t.degrees == std::vector<std::size_t>{1, 2, 1});
}

TEST_CASE("prim and kruskal agree edge for edge") {
    auto gen = make_stream(3);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 8;
        std::vector<std::vector<double>> rho(n, std::vector<double>(n, 1.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                rho[i][j] = rho[j][i] = u(gen);
        const auto cw = cw_from_rho(rho);
        const auto a = mst_build(cw, MstAlgorithm::prim);
        const auto b = mst_build(cw, MstAlgorithm::kruskal);
        REQUIRE(a.edges.size() == b.edges.size());
        for (std::size_t e = 0; e < a.edges.size(); ++e) {
            CHECK(a.edges[e].u == b.edges[e].u);
            CHECK(a.edges[e].v == b.edges[e].v);
        }
    }
}

TEST_CASE("tie-break makes equal-weight forests deterministic") {
    // all pairwise correlations equal: every spanning tree has the same cost,
    // so the lexicographic rule must pick the star on vertex 0
    const std::size_t n = 6;
    std::vector<std::vector<double>> rho(n, std::vector<double>(n, 0.4));
    for (std::size_t i = 0; i < n; ++i) rho[i][i] = 1.0;
    const auto a = mst_build(cw_from_rho(rho), MstAlgorithm::prim);
    const auto b = mst_build(cw_from_rho(rho), MstAlgorithm::kruskal);
    for (std::size_t e = 0; e < n - 1; ++e) {
        CHECK(a.edges[e].u == 0);
        CHECK(a.edges[e].v == e + 1);
        CHECK(b.edges[e].u == 0);
        CHECK(b.edges[e].v == e + 1);
    }
}

TEST_CASE("star topology metrics") {
    // vertex 0 strongly coupled to everyone, leaves mutually weaker
    const std::size_t n = 5;
    std::vector<std::vector<double>> rho(n, std::vector<double>(n, 0.1));
    for (std::size_t i = 0; i < n; ++i) {
        rho[i][i] = 1.0;
        if (i > 0) rho[0][i] = rho[i][0] = 0.9;
    }
    const auto t = mst_build(cw_from_rho(rho));
    CHECK(t.center_dynamic == 0);
    CHECK(t.degrees[0] == n - 1);
    // every tree edge touches the hub: normalized length exactly 1
    CHECK(t.normalized_length == doctest::Approx(1.0));
    // all leaves one hop from the hub
    CHECK(t.mol_dynamic == doctest::Approx((0.0 + 4.0) / 5.0));
    CHECK(mean_occupation_layer(t, 0) == doctest::Approx(0.8));
    // from a leaf: hub at 1, three others at 2
    CHECK(mean_occupation_layer(t, 1) == doctest::Approx((0 + 1 + 2 + 2 + 2) / 5.0));
}

TEST_CASE("chain topology metrics") {
    // Markov correlations with uneven links: MST is the path 0-1-2-3-4 and
    // the edges grow more expensive down the chain
    const std::size_t n = 5;
    const double link[] = {0.9, 0.75, 0.6, 0.45};
    std::vector<std::vector<double>> rho(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = 1.0;
            for (std::size_t k = i; k < j; ++k) r *= link[k];
            rho[i][j] = rho[j][i] = r;
        }
    const auto t = mst_build(cw_from_rho(rho));
    REQUIRE(t.edges.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
        CHECK(t.edges[e].u == e);
        CHECK(t.edges[e].v == e + 1);
    }
    // interior vertex wins the degree tie with the smallest label
    CHECK(t.center_dynamic == 1);
    CHECK(t.normalized_length > 1.0);
    CHECK(mean_occupation_layer(t, 0) == doctest::Approx((0 + 1 + 2 + 3 + 4) / 5.0));
    CHECK(mean_occupation_layer(t, 2) == doctest::Approx((2 + 1 + 0 + 1 + 2) / 5.0));
}

TEST_CASE("correlation window on a deterministic panel") {
    // two assets with identical log-returns: rho = 1; a third anti-moving
    Panel p;
    p.labels = {"X", "Y", "Z"};
    for (int r = 0; r < 10; ++r) p.dates.push_back(Date{2020, 1, r + 1});
    std::vector<double> base;
    auto gen = make_stream(11);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    double lx = 0;
    std::vector<double> rets;
    for (int r = 0; r < 10; ++r) rets.push_back(u(gen));
    p.prices.assign(3, std::vector<double>(10));
    double a = 0, b = 0, c = 0;
    for (int r = 0; r < 10; ++r) {
        a += rets[r];
        b += 2.0 * rets[r];   // scaled, still perfectly correlated
        c -= rets[r];
        p.prices[0][r] = 100 * std::exp(a);
        p.prices[1][r] = 50 * std::exp(b);
        p.prices[2][r] = 80 * std::exp(c);
    }
    (void)lx;
    const auto cw = correlation_window(p, 0, 10);
    REQUIRE(cw.size() == 3);
    CHECK(cw.rho[0][0] == 1.0);
    CHECK(cw.rho[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cw.rho[0][2] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cw.rho[1][2] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cw.span.first == Date{2020, 1, 1});
    CHECK(cw.span.second == Date{2020, 1, 10});
}

TEST_CASE("zero-variance assets are excluded, not fatal") {
    auto p = factor_panel(4, 30, 17);
    for (auto& px : p.prices[2]) px = 42.0;  // flat price -> zero returns
    const auto cw = correlation_window(p, 0, 30);
    CHECK(cw.size() == 3);
    REQUIRE(cw.excluded.size() == 1);
    CHECK(cw.excluded[0] == "C");

    // all-flat panel: nothing left to correlate
    Panel flat = factor_panel(3, 30, 18);
    for (auto& asset : flat.prices)
        for (auto& px : asset) px = 10.0;
    CHECK_THROWS_AS(correlation_window(flat, 0, 30), insufficient_data_error);
    // degenerate row ranges
    CHECK_THROWS_AS(correlation_window(p, 0, 3), insufficient_data_error);
}

TEST_CASE("factor panel: hub recovery and timeline") {
    const auto p = factor_panel(10, 120, 23);
    const auto cw = correlation_window(p, 0, 60);
    const auto t = mst_build(cw);
    CHECK(t.center_dynamic == 0);  // the pure-factor asset is the hub
    CHECK(t.degrees[0] >= 5);
    CHECK(t.normalized_length >= 1.0);

    const auto timeline = structure_timeline(p, {60, 60});
    REQUIRE(timeline.size() == 2);
    for (const auto& e : timeline) {
        CHECK(e.failure.empty());
        REQUIRE(e.normalized_length.has_value());
        CHECK(*e.normalized_length >= 1.0);
        REQUIRE(e.max_degree.has_value());
        CHECK(*e.max_degree >= 5);
        CHECK(e.mol_dynamic.has_value());
    }
}

TEST_CASE("timeline entries record failures instead of aborting") {
    auto p = factor_panel(3, 80, 29);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t r = 40; r < 80; ++r) p.prices[a][r] = 7.0;  // flat half
    const auto timeline = structure_timeline(p, {40, 40});
    REQUIRE(timeline.size() == 2);
    CHECK(timeline[0].failure.empty());
    CHECK(!timeline[1].failure.empty());
    CHECK(!timeline[1].normalized_length.has_value());
}

TEST_CASE("degree fit flags a planted superhub") {
    // random recursive tree of ~300 vertices with vertex 0 force-fed to
    // degree 50: the bulk follows a steep decaying histogram, the hub is a
    // count-1 bin far above the law
    auto gen = make_stream(2024);
    MstSnapshot t;
    std::vector<std::size_t> parent{0};
    for (std::size_t v = 1; v < 250; ++v) {
        std::uniform_int_distribution<std::size_t> pick(0, v - 1);
        parent.push_back(pick(gen));
    }
    t.degrees.assign(250, 0);
    for (std::size_t v = 1; v < 250; ++v) {
        t.edges.push_back({std::min(parent[v], v), std::max(parent[v], v), 1.0});
        ++t.degrees[parent[v]];
        ++t.degrees[v];
    }
    while (t.degrees[0] < 50) {  // plant the superhub
        const std::size_t v = t.degrees.size();
        t.degrees.push_back(1);
        t.edges.push_back({0, v, 1.0});
        ++t.degrees[0];
    }
    for (std::size_t i = 0; i < t.degrees.size(); ++i)
        t.labels.push_back("V" + std::to_string(i));

    const auto fit = degree_fit(t);
    CHECK(fit.exponent < -1.0);
    REQUIRE(fit.outliers.size() == 1);
    CHECK(fit.outliers[0] == 0);

    // the same tree without the planted hub raises no flags
    MstSnapshot base;
    base.degrees.assign(250, 0);
    for (std::size_t v = 1; v < 250; ++v) {
        base.edges.push_back({std::min(parent[v], v), std::max(parent[v], v), 1.0});
        ++base.degrees[parent[v]];
        ++base.degrees[v];
    }
    for (std::size_t i = 0; i < 250; ++i)
        base.labels.push_back("V" + std::to_string(i));
    CHECK(degree_fit(base).outliers.empty());

    // a pure star has only two distinct degrees: no power law to fit
    std::vector<std::vector<double>> rho(5, std::vector<double>(5, 0.2));
    for (std::size_t i = 0; i < 5; ++i) {
        rho[i][i] = 1.0;
        if (i > 0) rho[0][i] = rho[i][0] = 0.9;
    }
    CHECK_THROWS_AS(degree_fit(mst_build(cw_from_rho(rho))),
                    insufficient_data_error);
}

TEST_CASE("panel csv round trip and validation") {
    std::istringstream in(
        "date,AAA,BBB\n"
        "2020-01-02,100.0,50.5\n"
        "2020-01-03,101.5,49.0\n"
        "2020-01-06,99.25,48.75\n");
    const auto p = read_panel_csv(in);
    REQUIRE(p.assets() == 2);
    REQUIRE(p.rows() == 3);
    CHECK(p.labels[0] == "AAA");
    CHECK(p.prices[1][2] == doctest::Approx(48.75));
    CHECK(p.dates[2] == Date{2020, 1, 6});

    std::istringstream out_of_order(
        "date,AAA\n2020-01-03,1.0\n2020-01-02,2.0\n");
    CHECK_THROWS_AS(read_panel_csv(out_of_order), parse_error);

    std::istringstream negative("date,AAA\n2020-01-02,-3.0\n2020-01-03,1.0\n");
    CHECK_THROWS_AS(read_panel_csv(negative), parse_error);

    std::istringstream ragged("date,AAA,BBB\n2020-01-02,1.0\n");
    CHECK_THROWS_AS(read_panel_csv(ragged), parse_error);
}

TEST_CASE("edge csv uses labels") {
    auto cw = cw_from_rho({{1.0, 0.5}, {0.5, 1.0}});
    cw.labels = {"FOO", "BAR"};
    std::ostringstream os;
    write_edges_csv(os, mst_build(cw));
    const auto text = os.str();
    CHECK(text.find("u,v,weight") == 0);
    CHECK(text.find("FOO,BAR,1") != std::string::npos);
}

TEST_CASE("nan correlation is a hard error naming the pair") {
    auto cw = cw_from_rho({{1.0, 0.5}, {0.5, 1.0}});
    cw.rho[0][1] = cw.rho[1][0] = std::nan("");
    try {
        mst_build(cw);
        FAIL("expected domain_error");
    } catch (const domain_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("A0") != std::string::npos);
        CHECK(msg.find("A1") != std::string::npos);
    }
}
