#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "basins.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "linalg.hpp"
#include "paths.hpp"
#include "pullback.hpp"

namespace tipscan::io {

using json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline json to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// Everything needed to rerun a command; echoed at the top of each output file.
struct RunManifest {
    std::string subcommand;
    std::string scenario;  // builtin id, or empty when a config file is used
    std::string config;
    std::map<std::string, std::string> overrides;
    std::map<std::string, std::string> outputs;
    std::map<std::string, double> tolerances;
    std::map<std::string, std::string> protocol;

    json to_json() const {
        json j;
        j["subcommand"] = subcommand;
        if (!scenario.empty()) j["scenario"] = scenario;
        if (!config.empty()) j["config"] = config;
        j["overrides"] = overrides;
        j["outputs"] = outputs;
        j["tolerances"] = tolerances;
        j["protocol"] = protocol;
        return j;
    }
};

inline void record_options(RunManifest& m, const PullbackOptions& p, const TrackingOptions& t) {
    m.tolerances["pullback_tol"] = p.pullback_tol;
    m.tolerances["eps_track"] = t.eps_track;
    m.tolerances["escape_radius"] = p.escape_radius;
    m.protocol["seed_protocol"] = to_string(p.protocol);
    m.protocol["perturbation"] = fmt(p.perturbation);
    m.protocol["max_doublings"] = std::to_string(p.max_doublings);
    m.protocol["min_start_steps"] = std::to_string(p.min_start_steps);
    m.protocol["settle_steps"] = std::to_string(p.settle_steps);
    m.protocol["tail_window"] = std::to_string(t.tail_window);
    m.protocol["scale_by_amplitude"] = t.scale_by_amplitude ? "true" : "false";
}

inline void csv_header(std::ostream& os, const RunManifest& m) { os << "# manifest " << m.to_json().dump() << '\n'; }

// ---- CSV bodies -----------------------------------------------------------

inline void write_path_csv(std::ostream& os, const Path& p) {
    os << "s";
    for (int i = 1; i <= p.dimension(); ++i) os << ",X_" << i;
    os << ",rho\n";
    for (const auto& smp : p.samples) {
        os << fmt(smp.s);
        for (Eigen::Index i = 0; i < smp.x.size(); ++i) os << ',' << fmt(smp.x(i));
        os << ',' << fmt(smp.rho) << '\n';
    }
}

inline void write_orbit_csv(std::ostream& os, const PullbackOrbit& o) {
    const auto dim = o.states.empty() ? 0 : o.states.front().size();
    os << "n,s";
    for (Eigen::Index i = 1; i <= dim; ++i) os << ",x_" << i;
    os << '\n';
    for (std::size_t k = 0; k < o.states.size(); ++k) {
        const long n = o.n_start + static_cast<long>(k);
        os << n << ',' << fmt(o.r * static_cast<double>(n));
        for (Eigen::Index i = 0; i < dim; ++i) os << ',' << fmt(o.states[k](i));
        os << '\n';
    }
}

inline void write_flow_csv(std::ostream& os, const FlowOrbit& o) {
    const auto dim = o.states.empty() ? 0 : o.states.front().size();
    os << "t,s";
    for (Eigen::Index i = 1; i <= dim; ++i) os << ",x_" << i;
    os << '\n';
    for (std::size_t k = 0; k < o.states.size(); ++k) {
        os << fmt(o.t(k)) << ',' << fmt(o.r * o.t(k));
        for (Eigen::Index i = 0; i < dim; ++i) os << ',' << fmt(o.states[k](i));
        os << '\n';
    }
}

inline void write_scan_csv(std::ostream& os, const std::vector<RateRow>& rows) {
    os << "r,kind,attractor,sup_track_error,error\n";
    for (const auto& row : rows) {
        os << fmt(row.r) << ',';
        if (row.verdict)
            os << to_string(row.verdict->kind) << ',' << row.verdict->attractor_id << ','
               << fmt(row.verdict->sup_track_error) << ",\n";
        else
            os << "ERROR,,," << '"' << row.error << '"' << '\n';
    }
}

inline void write_compare_csv(std::ostream& os, const std::vector<FlowMapRow>& rows) {
    os << "r,flow_kind,flow_attractor,map_kind,map_attractor,disagree\n";
    auto cell = [&](const std::optional<TrackingVerdict>& v) {
        if (v)
            os << to_string(v->kind) << ',' << v->attractor_id;
        else
            os << "ERROR,";
    };
    for (const auto& row : rows) {
        os << fmt(row.r) << ',';
        cell(row.flow);
        os << ',';
        cell(row.map);
        os << ',' << (row.disagree() ? 1 : 0) << '\n';
    }
}

inline void write_basin_csv(std::ostream& os, const BasinGrid& g) {
    os << "x,y,label,code\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto& l = g.label(i, j);
            os << fmt(g.cell_x(i)) << ',' << fmt(g.cell_y(j)) << ',' << l.name() << ',' << l.code() << '\n';
        }
}

/// Plain PGM (P2): one gray level per attractor, 0 diverged, 255 undecided; top row is y1.
inline void write_basin_pgm(std::ostream& os, const BasinGrid& g, const RunManifest* m = nullptr) {
    const int n_att = static_cast<int>(g.attractor_ids.size());
    auto gray = [&](const BasinLabel& l) {
        switch (l.kind) {
            case BasinLabel::Kind::Diverged: return 0;
            case BasinLabel::Kind::Undecided: return 255;
            default: return 40 + (l.index * 160) / std::max(1, n_att - 1);
        }
    };
    os << "P2\n";
    if (m) os << "# manifest " << m->to_json().dump() << '\n';
    os << g.nx << ' ' << g.ny << "\n255\n";
    for (int j = g.ny - 1; j >= 0; --j) {
        for (int i = 0; i < g.nx; ++i) os << (i ? " " : "") << gray(g.label(i, j));
        os << '\n';
    }
}

// ---- JSON -----------------------------------------------------------------

inline json to_json(const TrackingVerdict& v, double r) {
    json j;
    j["r"] = r;
    j["kind"] = to_string(v.kind);
    j["attractor_id"] = v.attractor_id;
    j["sup_track_error"] = v.sup_track_error;
    j["final_state"] = to_json(v.final_state);
    return j;
}

inline json to_json(const PullbackOrbit::Diagnostics& d) {
    json j;
    j["n_start_used"] = d.n_start_used;
    j["n_conv"] = d.n_conv;
    j["washout_error"] = d.washout_error;
    j["doublings"] = d.doublings;
    j["escaped"] = d.escaped;
    return j;
}

inline json to_json(const FbsReport& rep) {
    json j;
    j["holds"] = rep.holds;
    j["pairs_checked"] = rep.pairs_checked;
    auto viol = [](const FbsReport::Violation& v) {
        json o;
        o["s1"] = v.s1;
        o["s2"] = v.s2;
        o["witness"] = to_json(v.witness);
        o["label"] = v.label.name();
        o["center"] = v.center;
        return o;
    };
    j["violation"] = rep.violation ? viol(*rep.violation) : json(nullptr);
    j["center_violation"] = rep.center_violation ? viol(*rep.center_violation) : json(nullptr);
    return j;
}

inline json to_json(const InflowReport& rep) {
    static const char* names[4] = {"nested", "forward_invariant", "limits_interior", "end_set_in_basin"};
    json j;
    j["all_pass"] = rep.all_pass();
    json c = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        json o;
        o["condition"] = names[i];
        o["pass"] = rep.conditions[i].pass;
        o["witness"] = rep.conditions[i].witness;
        c.push_back(o);
    }
    j["conditions"] = c;
    return j;
}

inline json to_json(const LargeRateReport& rep) {
    json j;
    j["z1"] = to_json(rep.limit.z1);
    j["z2"] = to_json(rep.limit.z2);
    json rows = json::array();
    for (const auto& row : rep.rows) {
        json o;
        o["r"] = row.r;
        o["errors"] = std::vector<double>(row.errors.begin(), row.errors.end());
        o["error"] = row.error;
        rows.push_back(o);
    }
    j["rows"] = rows;
    j["non_increasing"] = std::vector<bool>(rep.non_increasing.begin(), rep.non_increasing.end());
    j["converging"] = rep.converging();
    return j;
}

/// {"manifest": ..., "data": ...} pretty-printed with a trailing newline.
inline std::string json_document(const RunManifest& m, const json& data) {
    json doc;
    doc["manifest"] = m.to_json();
    doc["data"] = data;
    return doc.dump(2) + "\n";
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed for " + path);
}

template <class Body>
std::string csv_document(const RunManifest& m, Body&& body) {
    std::ostringstream os;
    csv_header(os, m);
    body(os);
    return os.str();
}

/// Data section of an output file: CSV lines not starting with '#', or the "data" member of a JSON document.
inline std::string data_section(const std::string& content) {
    if (!content.empty() && content.front() == '{') return json::parse(content).at("data").dump();
    std::istringstream in(content);
    std::string out;
    for (std::string line; std::getline(in, line);)
        if (line.empty() || line.front() != '#') out += line + '\n';
    return out;
}

}  // namespace tipscan::io
