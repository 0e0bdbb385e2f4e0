// Command-line front end: every subcommand reads CSV/JSON, runs one library
// pipeline stage and writes plot-ready CSV/JSON into --output-dir.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "catbif/catastrophe.hpp"
#include "catbif/ews.hpp"
#include "catbif/mst.hpp"
#include "catbif/scalingdist.hpp"
#include "catbif/spectral.hpp"
#include "catbif/timeseries.hpp"
#include "catbif/trend.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string input;
    std::string output_dir = ".";
    std::uint64_t seed = 12345;
    std::size_t window = 20;
    std::size_t step = 20;
};

void require_input(const Globals& g) {
    if (g.input.empty()) throw CLI::ValidationError("--input is required");
    if (!fs::exists(g.input))
        throw CLI::ValidationError("input not found: " + g.input);
}

std::ofstream open_out(const Globals& g, const std::string& name) {
    fs::create_directories(g.output_dir);
    std::ofstream out(fs::path(g.output_dir) / name);
    if (!out) throw catbif::range_error("cannot write " + name + " in " + g.output_dir);
    out.precision(15);
    return out;
}

catbif::Signal read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw catbif::parse_error("cannot open " + path);
    catbif::Signal s;
    std::string line;
    long lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        double t, x;
        char comma;
        if (!(ls >> t >> comma >> x)) {
            if (lineno == 1) continue;  // header
            throw catbif::parse_error("signal: expected t,x", lineno);
        }
        if (first) {
            s.start_t = static_cast<long>(t);
            first = false;
        }
        s.x.push_back(x);
    }
    if (s.x.size() < 2) throw catbif::parse_error("signal: needs >= 2 rows");
    return s;
}

void write_signal_csv(std::ostream& os, const catbif::Signal& s) {
    os << "t,x\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
        os << (s.start_t + static_cast<long>(i)) << ',' << s.x[i] << '\n';
}

catbif::TrendParams trend_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw catbif::parse_error("cannot open " + path);
    json j = json::parse(in);
    catbif::TrendParams p;
    p.t_c = j.at("t_c");
    p.tau = j.at("tau");
    p.alpha = j.at("alpha");
    p.omega = j.at("omega");
    p.delta_omega = j.at("delta_omega");
    p.x0_plus_x1 = j.at("X0_plus_X1");
    p.x1 = j.at("X1");
    p.validate();
    return p;
}

std::vector<double> parse_triple(const std::string& text, const char* what) {
    std::vector<double> vals;
    std::istringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 3)
        throw CLI::ValidationError(std::string(what) + " expects three comma-separated values");
    return vals;
}

int cmd_fit_trend(const Globals& g, const std::string& column, catbif::Side side) {
    require_input(g);
    const auto series = catbif::ingest_csv(g.input, column);
    const auto report = catbif::fit_trend(series, side);
    open_out(g, "trend.json") << report.to_json() << '\n';
    auto out = open_out(g, "detrended.csv");
    write_signal_csv(out, catbif::detrend(series, report.params, side));
    return 0;
}

int cmd_detrend(const Globals& g, const std::string& column, catbif::Side side,
                const std::string& trend_path) {
    require_input(g);
    if (!fs::exists(trend_path))
        throw CLI::ValidationError("trend file not found: " + trend_path);
    const auto series = catbif::ingest_csv(g.input, column);
    const auto params = trend_from_json(trend_path);
    auto out = open_out(g, "detrended.csv");
    write_signal_csv(out, catbif::detrend(series, params, side));
    return 0;
}

int cmd_ews(const Globals& g) {
    require_input(g);
    const auto signal = read_signal_csv(g.input);
    const catbif::WindowSpec spec{g.window, g.step};
    const auto reports = catbif::ews_scan(signal, spec);
    {
        auto out = open_out(g, "ews.csv");
        catbif::write_ews_csv(out, reports);
    }
    const auto wins = catbif::windows(signal, spec);
    std::vector<catbif::Periodogram> pgs;
    auto pg_out = open_out(g, "periodograms.csv");
    pg_out << "center_t,j,freq,power\n";
    for (const auto& w : wins) {
        pgs.push_back(catbif::periodogram(w.values));
        const auto& pg = pgs.back();
        for (std::size_t j = 0; j < pg.half_size(); ++j)
            pg_out << w.center_t << ',' << j << ',' << pg.freqs[j] << ','
                   << pg.power[j] << '\n';
    }
    const auto red = catbif::reddening_index(pgs);
    auto red_out = open_out(g, "reddening.csv");
    red_out << "center_t,reddening\n";
    for (std::size_t i = 0; i < red.size(); ++i) {
        red_out << wins[i].center_t << ',';
        if (red[i]) red_out << *red[i];
        red_out << '\n';
    }
    return 0;
}

int cmd_spectrum(const Globals& g, std::size_t j_lo, std::size_t j_hi) {
    require_input(g);
    const auto signal = read_signal_csv(g.input);
    const auto pg = catbif::periodogram(signal.x);
    auto out = open_out(g, "spectrum.csv");
    out << "j,freq,power\n";
    for (std::size_t j = 0; j < pg.half_size(); ++j)
        out << j << ',' << pg.freqs[j] << ',' << pg.power[j] << '\n';
    if (j_hi > 0) {
        json j;
        j["slope"] = catbif::spectrum_slope_fit(pg, {j_lo, j_hi});
        j["j_lo"] = j_lo;
        j["j_hi"] = j_hi;
        open_out(g, "spectrum.json") << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_gph(const Globals& g, long k) {
    require_input(g);
    const auto signal = read_signal_csv(g.input);
    const auto est = catbif::gph_estimate(
        signal.x, k > 0 ? std::optional<std::size_t>(static_cast<std::size_t>(k))
                        : std::nullopt);
    open_out(g, "gph.json") << est.to_json() << '\n';
    return 0;
}

int cmd_catastrophe(const Globals& g, const std::string& roots_arg, double x1,
                    double x1pp, bool have_pair, const std::string& coeffs_arg,
                    double cx1, bool have_constraint) {
    json out;
    if (!roots_arg.empty()) {
        const auto r = parse_triple(roots_arg, "--roots");
        const auto c = catbif::coeffs_from_three_roots(r[0], r[1], r[2]);
        out["a1_over_a0"] = c.a1;
        out["a2_over_a0"] = c.a2;
        out["a3_over_a0"] = c.a3;
    } else if (have_pair) {
        const auto inv = catbif::coeffs_from_tipping(x1, x1pp);
        out["a1_over_a0"] = inv.coeffs.a1;
        out["a2_over_a0"] = inv.coeffs.a2;
        out["a3_over_a0"] = inv.coeffs.a3;
        out["D"] = inv.diag.D;
        out["x_ip"] = inv.diag.x_ip;
        out["jump"] = inv.diag.jump;
        out["alpha"] = inv.diag.alpha_coef;
        out["beta"] = inv.diag.beta_coef;
    } else if (!coeffs_arg.empty() && have_constraint) {
        const auto c = parse_triple(coeffs_arg, "--coeffs");
        out["a1_over_a0"] = catbif::constraint_one_root(cx1, c[1], c[2]);
        out["a2_over_a0"] = c[1];
        out["a3_over_a0"] = c[2];
    } else if (!coeffs_arg.empty()) {
        const auto c = parse_triple(coeffs_arg, "--coeffs");
        const auto cf = catbif::RelCoeffs{c[0], c[1], c[2]}.with_a0(-1.0);
        const auto rs = catbif::cubic_roots(cf);
        out["kind"] = rs.kind == catbif::RootKind::three_real ? "three_real"
                      : rs.kind == catbif::RootKind::tipping  ? "tipping"
                                                              : "one_real";
        for (const auto& root : rs.roots)
            out["roots"].push_back({{"x", root.x},
                                    {"lambda", root.lambda},
                                    {"stable", root.stable}});
        if (rs.complex_pair)
            out["complex_pair"] = {rs.complex_pair->first, rs.complex_pair->second};
    } else {
        throw CLI::ValidationError(
            "catastrophe: supply --roots, --x1/--x1pp, or --coeffs");
    }
    open_out(g, "catastrophe.json") << out.dump(2) << '\n';
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& schedule_path,
                 const std::string& coeffs_arg, double a0, double sigma, double x0,
                 std::size_t steps) {
    catbif::Signal traj;
    if (!schedule_path.empty()) {
        if (!fs::exists(schedule_path))
            throw CLI::ValidationError("schedule not found: " + schedule_path);
        std::ifstream in(schedule_path);
        const auto sched = catbif::read_schedule_csv(in, a0);
        traj = catbif::langevin_simulate(sched, x0, steps, g.seed);
    } else if (!coeffs_arg.empty()) {
        const auto c = parse_triple(coeffs_arg, "--coeffs");
        traj = catbif::langevin_simulate(catbif::RelCoeffs{c[0], c[1], c[2]}.with_a0(a0),
                                         sigma, x0, steps, g.seed);
    } else {
        throw CLI::ValidationError("simulate: supply --schedule or --coeffs");
    }
    auto out = open_out(g, "trajectory.csv");
    catbif::write_trajectory_csv(out, traj);
    return 0;
}

int cmd_mst(const Globals& g) {
    require_input(g);
    std::ifstream in(g.input);
    if (!in) throw catbif::parse_error("cannot open " + g.input);
    const auto panel = catbif::read_panel_csv(in);
    const catbif::WindowSpec spec{g.window, g.step};
    const auto timeline = catbif::structure_timeline(panel, spec);
    auto tl = open_out(g, "timeline.csv");
    tl << "start,end,normalized_length,mol_static,mol_dynamic,max_degree,exponent,"
          "failure\n";
    std::size_t idx = 0;
    for (std::size_t start = 0; start + spec.width <= panel.rows();
         start += spec.step, ++idx) {
        const auto& e = timeline[idx];
        tl << e.span.first.to_string() << ',' << e.span.second.to_string() << ',';
        if (e.normalized_length) tl << *e.normalized_length;
        tl << ',';
        if (e.mol_static) tl << *e.mol_static;
        tl << ',';
        if (e.mol_dynamic) tl << *e.mol_dynamic;
        tl << ',';
        if (e.max_degree) tl << *e.max_degree;
        tl << ',';
        if (e.exponent) tl << *e.exponent;
        tl << ',' << e.failure << '\n';
        if (e.failure.empty()) {
            const auto cw = catbif::correlation_window(panel, start, start + spec.width);
            const auto tree = catbif::mst_build(cw);
            char name[32];
            std::snprintf(name, sizeof(name), "edges_%04zu.csv", idx);
            auto eout = open_out(g, name);
            catbif::write_edges_csv(eout, tree);
            std::snprintf(name, sizeof(name), "metrics_%04zu.json", idx);
            open_out(g, name) << tree.metrics_json() << '\n';
        }
    }
    return 0;
}

int cmd_scaling(const Globals& g, double eta, double D, double dt, double x_max,
                std::size_t n) {
    json out = json::parse(catbif::exponent_web(eta).to_json());
    if (D > 0.0) {
        const catbif::ScalingLaw law(eta, D);
        out["nu"] = law.nu();
        out["nu_bar"] = law.nu_bar();
        out["B"] = law.B();
        out["D_bar"] = law.D_bar();
        if (dt > 0.0 && x_max > 0.0 && n >= 2) {
            auto tbl = open_out(g, "scaling_pdf.csv");
            tbl << "dx,density\n";
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = x_max * static_cast<double>(i) /
                                  static_cast<double>(n - 1);
                tbl << dx << ',' << catbif::scaling_pdf(law, dx, dt) << '\n';
            }
        }
    }
    open_out(g, "scaling.json") << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Catastrophic-bifurcation early-warning analysis toolkit"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--input", g.input, "input CSV path")->configurable(true);
    app.add_option("--output-dir", g.output_dir, "output directory");
    app.add_option("--seed", g.seed, "master RNG seed");
    app.add_option("--window", g.window, "scan window width");
    app.add_option("--step", g.step, "scan window step");
    app.set_config("--config", "", "flat key=value configuration file");

    std::string column = "value";
    std::string side_name = "bull";
    auto side = [&side_name]() {
        if (side_name == "bull") return catbif::Side::bull;
        if (side_name == "bear") return catbif::Side::bear;
        throw CLI::ValidationError("--side must be bull or bear");
    };

    auto* sc_fit = app.add_subcommand("fit-trend", "fit the relaxation trend");
    sc_fit->add_option("--column", column, "value column name");
    sc_fit->add_option("--side", side_name, "bull or bear");

    std::string trend_path = "trend.json";
    auto* sc_detrend = app.add_subcommand("detrend", "subtract a fitted trend");
    sc_detrend->add_option("--column", column, "value column name");
    sc_detrend->add_option("--side", side_name, "bull or bear");
    sc_detrend->add_option("--trend", trend_path, "trend parameter JSON");

    app.add_subcommand("ews", "windowed early-warning indicators");
    app.add_subcommand("mst", "correlation-network timeline");

    std::size_t j_lo = 1, j_hi = 0;
    auto* sc_spectrum = app.add_subcommand("spectrum", "periodogram of a signal");
    sc_spectrum->add_option("--j-lo", j_lo, "low bin of the slope fit");
    sc_spectrum->add_option("--j-hi", j_hi, "high bin of the slope fit (0 = no fit)");

    long k = -1;
    auto* sc_gph = app.add_subcommand("gph", "log-periodogram Hurst estimate");
    sc_gph->add_option("--k", k, "number of low frequencies (default Int[L^0.44])");

    std::string roots_arg, coeffs_arg;
    double x1 = 0, x1pp = 0, cx1 = 0;
    auto* sc_cat = app.add_subcommand("catastrophe", "cubic force inverse problems");
    sc_cat->add_option("--roots", roots_arg, "three roots x1,x1p,x1pp");
    auto* opt_x1 = sc_cat->add_option("--x1", x1, "simple root");
    auto* opt_x1pp = sc_cat->add_option("--x1pp", x1pp, "twofold root");
    sc_cat->add_option("--coeffs", coeffs_arg, "a1/a0,a2/a0,a3/a0");
    auto* opt_cx1 =
        sc_cat->add_option("--constrain-x1", cx1, "solve a1/a0 from a known root");

    std::string schedule_path;
    double a0 = -1.0, sigma = 0.0, sim_x0 = 0.0;
    std::size_t steps = 1000;
    auto* sc_sim = app.add_subcommand("simulate", "Langevin trajectory");
    sc_sim->add_option("--schedule", schedule_path, "coefficient schedule CSV");
    sc_sim->add_option("--coeffs", coeffs_arg, "a1/a0,a2/a0,a3/a0");
    sc_sim->add_option("--a0", a0, "leading coefficient (< 0)");
    sc_sim->add_option("--sigma", sigma, "noise scale");
    sc_sim->add_option("--x0", sim_x0, "initial state");
    sc_sim->add_option("--steps", steps, "number of steps");

    double eta = 1.0, D = 0.0, dt = 0.0, x_max = 0.0;
    std::size_t table_n = 0;
    auto* sc_scaling = app.add_subcommand("scaling", "scaling-distribution report");
    sc_scaling->add_option("--eta", eta, "basic scaling exponent (< 2)")->required();
    sc_scaling->add_option("--D", D, "diffusion coefficient (> 0 enables the law)");
    sc_scaling->add_option("--dt", dt, "time lag for the pdf table");
    sc_scaling->add_option("--x-max", x_max, "pdf table upper increment");
    sc_scaling->add_option("--n", table_n, "pdf table size");

    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "fit-trend") return cmd_fit_trend(g, column, side());
        if (sub == "detrend") return cmd_detrend(g, column, side(), trend_path);
        if (sub == "ews") return cmd_ews(g);
        if (sub == "spectrum") return cmd_spectrum(g, j_lo, j_hi);
        if (sub == "gph") return cmd_gph(g, k);
        if (sub == "catastrophe")
            return cmd_catastrophe(g, roots_arg, x1, x1pp,
                                   opt_x1->count() && opt_x1pp->count(), coeffs_arg,
                                   cx1, opt_cx1->count() > 0);
        if (sub == "simulate")
            return cmd_simulate(g, schedule_path, coeffs_arg, a0, sigma, sim_x0, steps);
        if (sub == "mst") return cmd_mst(g);
        if (sub == "scaling") return cmd_scaling(g, eta, D, dt, x_max, table_n);
        std::cerr << "unknown subcommand\n";
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const catbif::parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const catbif::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
