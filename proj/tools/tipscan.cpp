// tipscan: command-line front end for pullback / tipping computations.
//
//   tipscan simulate --scenario rtip1d --r 0.5 --out run/
//   tipscan scan     --scenario fbs1d --r-min 0.5 --r-max 2 --r-step 0.5
//   tipscan basin    --scenario ikeda --region -2,6,-3,7 --resolution 200,200
//   tipscan compare  --scenario cubicflow --r 3
//   tipscan check    large-rate --scenario fbs1d

#include <CLI11.hpp>

#include <tipscan/tipscan.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tipscan;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Args {
    std::string scenario, config, out = ".";
    std::optional<double> r, r_min, r_max, r_step, tol_track, escape, s_frozen;
    std::optional<long> n_max;
    std::string region, resolution, lambda;
    std::string which;
    int jobs = 1;
};

std::vector<double> parse_list(const std::string& text, std::size_t n, const char* flag) {
    std::vector<double> out;
    try {
        out = config::detail::numbers(text, flag);
    } catch (const ScenarioError&) {
        throw UsageError(std::string(flag) + ": expected comma-separated numbers");
    }
    if (n && out.size() != n) throw UsageError(std::string(flag) + ": expected " + std::to_string(n) + " values");
    return out;
}

struct Context {
    Args a;
    Scenario sc;
    Prepared pr;
    PullbackOptions popt;
    TrackingOptions topt;
    BasinOptions bopt;
    io::RunManifest m;

    std::string out_file(const std::string& name) {
        const fs::path p = fs::path(a.out) / name;
        m.outputs[name] = p.string();
        return p.string();
    }
};

void load(Context& c, const std::string& sub) {
    auto& a = c.a;
    if (a.scenario.empty() == a.config.empty()) throw UsageError("give exactly one of --scenario or --config");
    if (a.jobs < 1) throw UsageError("--jobs must be >= 1");
    if (a.r && !(*a.r > 0.0)) throw UsageError("--r must be positive");
    if (a.tol_track && !(*a.tol_track > 0.0)) throw UsageError("--tol-track must be positive");
    if (a.escape && !(*a.escape > 0.0)) throw UsageError("--escape must be positive");
    if (a.n_max && *a.n_max <= 0) throw UsageError("--n-max must be positive");

    if (const char* env = std::getenv("TIPSCAN_SEED_PROTOCOL"); env && *env) {
        const auto p = parse_seed_protocol(env);
        if (!p) throw UsageError(std::string("TIPSCAN_SEED_PROTOCOL: unknown protocol '") + env + "'");
        c.popt.protocol = *p;
    }
    if (a.tol_track) c.topt.eps_track = *a.tol_track;
    if (a.escape) c.popt.escape_radius = c.topt.escape_radius = c.bopt.escape_radius = *a.escape;

    c.sc = a.scenario.empty() ? config::load(a.config) : builtin(a.scenario);
    c.pr = prepare(c.sc);

    c.m.subcommand = sub + (a.which.empty() ? "" : " " + a.which);
    c.m.scenario = a.scenario;
    c.m.config = a.config;
    auto put = [&](const char* k, const std::optional<double>& v) {
        if (v) c.m.overrides[k] = io::fmt(*v);
    };
    put("r", a.r);
    put("r_min", a.r_min);
    put("r_max", a.r_max);
    put("r_step", a.r_step);
    put("s", a.s_frozen);
    if (a.n_max) c.m.overrides["n_max"] = std::to_string(*a.n_max);
    if (!a.region.empty()) c.m.overrides["region"] = a.region;
    if (!a.resolution.empty()) c.m.overrides["resolution"] = a.resolution;
    if (!a.lambda.empty()) c.m.overrides["lambda"] = a.lambda;
    io::record_options(c.m, c.popt, c.topt);
    c.m.tolerances["basin_eps"] = c.bopt.eps;
    c.m.protocol["basin_budget"] = std::to_string(c.bopt.budget);
    c.m.protocol["basin_hold_window"] = std::to_string(c.bopt.hold_window);
    c.m.protocol["integrator_h"] = io::fmt(c.sc.integrator.h);
    fs::create_directories(a.out);
}

std::string fmt_g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// --r, or --r-min/--r-max/--r-step, or the scenario's grid.
std::vector<double> rate_grid(const Context& c) {
    const auto& a = c.a;
    if (a.r) return {*a.r};
    if (a.r_min || a.r_max || a.r_step) {
        if (!(a.r_min && a.r_max && a.r_step)) throw UsageError("--r-min, --r-max and --r-step go together");
        if (!(*a.r_step > 0.0) || !(*a.r_min > 0.0)) throw UsageError("--r-min and --r-step must be positive");
        std::vector<double> g;
        for (long k = 0;; ++k) {
            // snap away accumulation noise so 0.1 + 1 * 0.05 prints as 0.15
            const double r = std::stod(fmt_g12(*a.r_min + static_cast<double>(k) * *a.r_step));
            if (r > *a.r_max * (1.0 + 1e-12)) break;
            g.push_back(r);
        }
        return g;
    }
    return c.sc.r_grid;
}

int cmd_simulate(Context& c) {
    if (!c.a.r) throw UsageError("simulate needs --r");
    const double r = *c.a.r;
    const auto orbit = compute_pullback(c.sc.map, c.sc.shift, c.pr.tracked, r, c.a.n_max, c.popt);
    const auto v = classify_tracking(orbit, c.pr.tracked, c.pr.attractors, c.topt);

    const auto orbit_file = c.out_file("orbit.csv");
    const auto path_file = c.out_file("path.csv");
    const auto verdict_file = c.out_file("verdict.json");
    std::optional<FlowOrbit> flow;
    if (c.sc.flow) {
        FlowOptions fopt{c.sc.integrator, true};
        flow = flow_pullback(*c.sc.flow, c.sc.shift, *c.pr.flow_path, r, c.a.n_max, c.popt, fopt);
        c.out_file("flow_orbit.csv");
    }

    io::write_file(orbit_file, io::csv_document(c.m, [&](std::ostream& os) { io::write_orbit_csv(os, orbit); }));
    io::write_file(path_file, io::csv_document(c.m, [&](std::ostream& os) { io::write_path_csv(os, c.pr.tracked); }));
    auto data = io::to_json(v, r);
    data["diagnostics"] = io::to_json(orbit.diagnostics);
    if (flow) {
        const auto fv = classify_flow(*flow, *c.pr.flow_path, c.pr.attractors, c.topt);
        data["flow"] = io::to_json(fv, r);
        data["flow"]["step_halving_error"] = flow->step_halving_error;
        io::write_file(c.m.outputs["flow_orbit.csv"],
                       io::csv_document(c.m, [&](std::ostream& os) { io::write_flow_csv(os, *flow); }));
    }
    io::write_file(verdict_file, io::json_document(c.m, data));
    std::cout << to_string(v.kind) << (v.attractor_id.empty() ? "" : " " + v.attractor_id) << '\n';
    return 0;
}

int cmd_scan(Context& c) {
    const auto grid = rate_grid(c);
    const auto rows = rate_scan(c.sc.map, c.sc.shift, c.pr.tracked, grid, c.pr.attractors, c.popt, c.topt, c.a.jobs);
    io::write_file(c.out_file("scan.csv"), io::csv_document(c.m, [&](std::ostream& os) { io::write_scan_csv(os, rows); }));
    for (const auto& row : rows)
        std::cout << io::fmt(row.r) << ' '
                  << (row.verdict ? std::string(to_string(row.verdict->kind)) + " " + row.verdict->attractor_id
                                  : "ERROR " + row.error)
                  << '\n';
    return 0;
}

// Stable fixed points at lambda, named after the scenario's lambda_+ seeds when they coincide.
std::vector<Attractor> frozen_attractors(const Context& c, const Vec& lambda, double lo, double hi) {
    std::vector<Attractor> out;
    int unnamed = 0;
    for (const auto& fp : find_fixed_points(c.sc.map, lambda, lo, hi, c.sc.map.dimension == 1 ? 201 : 41)) {
        if (!fp.stable()) continue;
        std::string id;
        if ((lambda - c.sc.shift.limit_plus()).norm() == 0.0)
            for (const auto& [pid, p] : c.pr.plus_points)
                if ((p.x - fp.x).norm() < 1e-6) id = pid;
        out.push_back({id.empty() ? "A" + std::to_string(++unnamed) : id, fp.x});
    }
    return out;
}

int cmd_basin(Context& c) {
    const auto& a = c.a;
    const int dim = c.sc.map.dimension;
    if (dim > 2) throw UsageError("basin supports 1-D and 2-D systems");
    if (a.s_frozen && !a.lambda.empty()) throw UsageError("give at most one of --s and --lambda");
    Vec lambda = c.sc.shift.limit_plus();
    if (a.s_frozen) lambda = c.sc.shift.value(*a.s_frozen);
    if (!a.lambda.empty()) {
        const auto l = parse_list(a.lambda, static_cast<std::size_t>(c.sc.shift.dimension()), "--lambda");
        lambda = config::detail::to_vec(l, "--lambda");
    }
    std::vector<double> reg = a.region.empty() ? std::vector<double>{-5, 5, -5, 5} : parse_list(a.region, 0, "--region");
    if (reg.size() != 4 && !(dim == 1 && reg.size() == 2)) throw UsageError("--region expects x0,x1,y0,y1");
    if (reg.size() == 2) reg.insert(reg.end(), {0.0, 0.0});
    if (!(reg[0] < reg[1]) || (dim == 2 && !(reg[2] < reg[3]))) throw UsageError("--region bounds must increase");
    std::vector<double> res = a.resolution.empty() ? std::vector<double>{100, 100} : parse_list(a.resolution, 0, "--resolution");
    if (res.size() == 1) res.push_back(1);
    if (res.size() != 2 || res[0] < 1 || res[1] < 1 || res[0] != std::floor(res[0]) || res[1] != std::floor(res[1]))
        throw UsageError("--resolution expects positive integers NX,NY");
    const int nx = static_cast<int>(res[0]), ny = dim == 1 ? 1 : static_cast<int>(res[1]);

    const double lo = std::min(reg[0], reg[2]), hi = std::max(reg[1], reg[3]);
    const double pad = 0.5 * (hi - lo);
    const auto atts = frozen_attractors(c, lambda, lo - pad, hi + pad);
    c.m.overrides["lambda_used"] = io::fmt(lambda(0));

    BasinGrid g;
    if (dim == 2) {
        g = basin_grid_2d(c.sc.map, lambda, {reg[0], reg[1], reg[2], reg[3]}, nx, ny, atts, c.bopt, a.jobs);
    } else {
        g.region = {reg[0], reg[1], 0.0, 0.0};
        g.nx = nx;
        g.ny = 1;
        g.lambda = lambda;
        for (const auto& at : atts) g.attractor_ids.push_back(at.id);
        g.labels.resize(static_cast<std::size_t>(nx));
        tipscan::detail::parallel_for(g.labels.size(), a.jobs, [&](std::size_t i) {
            g.labels[i] = membership(c.sc.map, lambda, scalar_vec(g.cell_x(static_cast<int>(i))), atts, c.bopt);
        });
    }
    const auto csv = c.out_file("basin.csv");
    const auto pgm = c.out_file("basin.pgm");
    io::write_file(csv, io::csv_document(c.m, [&](std::ostream& os) { io::write_basin_csv(os, g); }));
    std::ostringstream raster;
    io::write_basin_pgm(raster, g, &c.m);
    io::write_file(pgm, raster.str());
    std::cout << nx << 'x' << ny << " cells, " << atts.size() << " attractors\n";
    return 0;
}

int cmd_compare(Context& c) {
    if (!c.sc.flow) throw UsageError("compare needs a scenario with a vector field");
    FlowOptions fopt{c.sc.integrator, true};
    const auto rows = compare_flow_map(*c.sc.flow, c.sc.shift, c.sc.map, c.pr.tracked, *c.pr.flow_path,
                                       c.pr.attractors, rate_grid(c), c.popt, c.topt, fopt, c.a.jobs);
    io::write_file(c.out_file("compare.csv"),
                   io::csv_document(c.m, [&](std::ostream& os) { io::write_compare_csv(os, rows); }));
    auto name = [](const std::optional<TrackingVerdict>& v) {
        return v ? std::string(to_string(v->kind)) + (v->attractor_id.empty() ? "" : " " + v->attractor_id)
                 : std::string("ERROR");
    };
    for (const auto& row : rows)
        std::cout << io::fmt(row.r) << " flow=" << name(row.flow) << " map=" << name(row.map) << '\n';
    return 0;
}

int cmd_check(Context& c) {
    const auto& w = c.a.which;
    io::json data;
    if (w == "fbs") {
        const double sat = c.sc.shift.saturation();
        std::vector<double> grid;
        for (double s = -sat; s <= sat + 1e-12; s += 0.25) grid.push_back(s);
        const auto rep = check_forward_basin_stability(c.sc.map, c.sc.shift, c.pr.tracked, grid, 1e-3, c.pr.others, c.bopt);
        data = io::to_json(rep);
        std::cout << (rep.holds ? "holds" : "violated") << '\n';
    } else if (w == "inflowing") {
        if (!c.sc.inflowing) throw ScenarioError("scenario " + c.sc.id + " ships no inflowing family");
        const auto rep = check_inflowing(c.sc.map, c.sc.shift, *c.sc.inflowing, *c.pr.tracked.x_minus,
                                         *c.pr.tracked.x_plus, 64, c.bopt);
        data = io::to_json(rep);
        std::cout << (rep.all_pass() ? "all conditions pass" : "some condition fails") << '\n';
    } else if (w == "large-rate") {
        auto grid = c.a.r || c.a.r_min ? rate_grid(c) : std::vector<double>{5.0, 10.0, 20.0};
        const auto rep = verify_large_rate(c.sc.map, c.sc.shift, c.pr.tracked, grid, c.popt);
        data = io::to_json(rep);
        const auto fate = membership(c.sc.map, c.sc.shift.limit_plus(), rep.limit.z2, c.pr.attractors, c.bopt);
        data["z2_fate"] = fate.kind == BasinLabel::Kind::Diverged ? "DIVERGED" : fate.name();
        std::cout << "Z1=" << io::fmt(rep.limit.z1(0)) << " Z2=" << io::fmt(rep.limit.z2(0))
                  << " fate=" << data["z2_fate"].get<std::string>() << '\n';
    } else {
        throw UsageError("check expects one of fbs, inflowing, large-rate");
    }
    io::write_file(c.out_file("check_" + w + ".json"), io::json_document(c.m, data));
    return 0;
}

void common_flags(CLI::App* sub, Args& a) {
    sub->add_option("--scenario", a.scenario, "builtin scenario id");
    sub->add_option("--config", a.config, "scenario INI file");
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--jobs", a.jobs, "worker threads");
    sub->add_option("--tol-track", a.tol_track, "tracking tolerance");
    sub->add_option("--escape", a.escape, "escape radius");
}

void rate_flags(CLI::App* sub, Args& a) {
    sub->add_option("--r", a.r, "rate");
    sub->add_option("--r-min", a.r_min, "first rate of the grid");
    sub->add_option("--r-max", a.r_max, "last rate of the grid");
    sub->add_option("--r-step", a.r_step, "grid spacing");
    sub->add_option("--n-max", a.n_max, "last index of the pullback run");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pullback attractors and rate-induced tipping of nonautonomous maps"};
    app.require_subcommand(1);
    Args a;

    auto* sim = app.add_subcommand("simulate", "pullback orbit, path and verdict for one rate");
    auto* scan = app.add_subcommand("scan", "verdicts over a rate grid");
    auto* basin = app.add_subcommand("basin", "basin labels of the frozen map");
    auto* cmp = app.add_subcommand("compare", "flow versus time-1 map verdicts");
    auto* chk = app.add_subcommand("check", "fbs, inflowing or large-rate report");
    for (auto* s : {sim, scan, basin, cmp, chk}) common_flags(s, a);
    for (auto* s : {sim, scan, cmp, chk}) rate_flags(s, a);
    basin->add_option("--region", a.region, "x0,x1,y0,y1");
    basin->add_option("--resolution", a.resolution, "NX,NY");
    basin->add_option("--s", a.s_frozen, "freeze lambda at Lambda(s)");
    basin->add_option("--lambda", a.lambda, "frozen parameter value");
    chk->add_option("which", a.which, "fbs | inflowing | large-rate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    Context c;
    c.a = a;
    try {
        CLI::App* chosen = app.get_subcommands().front();
        load(c, chosen->get_name());
        if (chosen == sim) return cmd_simulate(c);
        if (chosen == scan) return cmd_scan(c);
        if (chosen == basin) return cmd_basin(c);
        if (chosen == cmp) return cmd_compare(c);
        return cmd_check(c);
    } catch (const UsageError& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return 1;
    } catch (const ScenarioError& e) {
        std::cerr << "scenario: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
