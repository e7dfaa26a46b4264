#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "flow.hpp"
#include "linalg.hpp"
#include "paths.hpp"
#include "pullback.hpp"
#include "scenarios.hpp"
#include "system.hpp"

namespace tipscan {

// INI scenario files; the key reference lives in the README.
namespace config {

namespace pt = boost::property_tree;

namespace detail {

inline std::string trim(std::string s) {
    auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ScenarioError(where + ": not a number: '" + s + "'");
    }
}

inline std::vector<double> numbers(const std::string& s, const std::string& where) {
    std::vector<double> out;
    for (const auto& item : split(s)) out.push_back(to_double(item, where));
    return out;
}

inline Vec to_vec(const std::vector<double>& v, const std::string& where) {
    if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) throw ScenarioError(where + ": bad vector size");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

inline std::vector<double> coefficients(const pt::ptree& sec, const std::string& where, std::size_t n,
                                        const std::vector<double>& defaults) {
    const auto raw = sec.get_optional<std::string>("coefficients");
    if (!raw) return defaults;
    auto c = numbers(*raw, where + ".coefficients");
    if (c.size() != n) throw ScenarioError(where + ": expected " + std::to_string(n) + " coefficients");
    return c;
}

inline Stability parse_stability(const std::string& s, const std::string& where) {
    if (s == "stable") return Stability::Stable;
    if (s == "unstable") return Stability::Unstable;
    if (s == "mixed") return Stability::Mixed;
    throw ScenarioError(where + ": unknown stability '" + s + "'");
}

inline VerdictKind parse_verdict(const std::string& s, const std::string& where) {
    if (s == "TRACKS") return VerdictKind::Tracks;
    if (s == "TIPS_TO") return VerdictKind::TipsTo;
    if (s == "DIVERGED") return VerdictKind::Diverged;
    if (s == "UNDECIDED") return VerdictKind::Undecided;
    throw ScenarioError(where + ": unknown verdict '" + s + "'");
}

inline const pt::ptree& section(const pt::ptree& root, const std::string& name) {
    const auto it = root.find(name);
    if (it == root.not_found()) throw ScenarioError("missing section [" + name + "]");
    return it->second;
}

inline std::string required(const pt::ptree& sec, const std::string& key, const std::string& where) {
    const auto v = sec.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) throw ScenarioError(where + ": missing key '" + key + "'");
    return trim(*v);
}

}  // namespace detail

inline void apply_system(Scenario& sc, const pt::ptree& sec) {
    const std::string fam = detail::required(sec, "family", "[system]");
    if (fam == "logistic") {
        sc.map = systems::logistic();
    } else if (fam == "rtip") {
        sc.map = systems::rtip(detail::coefficients(sec, "[system]", 1, {2.0})[0]);
    } else if (fam == "fbs") {
        sc.map = systems::fbs(detail::coefficients(sec, "[system]", 1, {0.25})[0]);
    } else if (fam == "ikeda") {
        const auto c = detail::coefficients(sec, "[system]", 3, {0.9, 1.0, 6.0});
        sc.map = systems::ikeda(c[0], c[1], c[2]);
    } else if (fam == "cubicflow") {
        const auto c = detail::coefficients(sec, "[system]", 3, {0.0, 1.0, 2.0});
        sc.flow = flows::cubic(c[0], c[1], c[2]);
        if (const auto h = sec.get_optional<std::string>("h"))
            sc.integrator.h = detail::to_double(detail::trim(*h), "[system].h");
        sc.map = time_one_map(*sc.flow, sc.integrator.h);
    } else {
        throw ScenarioError("[system]: unknown family '" + fam + "'");
    }
}

inline void apply_shift(Scenario& sc, const pt::ptree& sec) {
    const std::string fam = detail::required(sec, "family", "[shift]");
    double sat = 20.0;
    if (const auto s = sec.get_optional<std::string>("saturation"))
        sat = detail::to_double(detail::trim(*s), "[shift].saturation");
    if (fam == "tanh") {
        const auto c = detail::coefficients(sec, "[shift]", 2, {0.0, 1.0});
        sc.shift = ParameterShift::tanh_shift(c[0], c[1], sat);
    } else if (fam == "sech_power") {
        const auto c = detail::coefficients(sec, "[shift]", 2, {1.0, 2.0});
        if (c[1] != std::floor(c[1])) throw ScenarioError("[shift]: sech_power exponent must be an integer");
        sc.shift = ParameterShift::sech_power(c[0], static_cast<int>(c[1]), sat);
    } else if (fam == "sech_tanh") {
        const auto c = detail::coefficients(sec, "[shift]", 2, {1.0, 0.0});
        sc.shift = ParameterShift::sech_tanh(c[0], c[1], sat);
    } else if (fam == "constant") {
        const auto c = detail::coefficients(sec, "[shift]", 1, {0.0});
        sc.shift = ParameterShift::constant(scalar_vec(c[0]), sat);
    } else {
        throw ScenarioError("[shift]: unknown family '" + fam + "'");
    }
}

/// Parses a scenario from INI text. Errors surface as ScenarioError.
inline Scenario parse(std::istream& in, const std::string& origin = "<config>") {
    pt::ptree root;
    try {
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ScenarioError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    Scenario sc;
    try {
        const auto& head = detail::section(root, "scenario");
        sc.id = detail::required(head, "id", "[scenario]");
        sc.description = head.get<std::string>("description", "");

        apply_system(sc, detail::section(root, "system"));
        apply_shift(sc, detail::section(root, "shift"));

        if (const auto it = root.find("continuation"); it != root.not_found())
            if (const auto ds = it->second.get_optional<std::string>("ds"))
                sc.ds = detail::to_double(detail::trim(*ds), "[continuation].ds");

        // "path <id>" sections, in file order; the first one is tracked.
        for (const auto& [name, sec] : root) {
            if (name.rfind("path ", 0) != 0) continue;
            const std::string where = "[" + name + "]";
            PathSeed seed;
            seed.id = detail::trim(name.substr(5));
            seed.s = detail::to_double(detail::required(sec, "seed_s", where), where + ".seed_s");
            seed.x = detail::to_vec(detail::numbers(detail::required(sec, "seed_x", where), where), where);
            seed.expected = detail::parse_stability(sec.get<std::string>("stability", "stable"), where);
            if (const auto range = sec.get_optional<std::string>("range")) {
                const auto r = detail::numbers(*range, where + ".range");
                if (r.size() != 2 || !(r[0] < r[1])) throw ScenarioError(where + ": range needs lo < hi");
                seed.s_lo = r[0];
                seed.s_hi = r[1];
            }
            if (seed.x.size() != sc.map.dimension) throw ScenarioError(where + ": seed_x dimension mismatch");
            sc.paths.push_back(std::move(seed));
        }
        if (sc.paths.empty()) throw ScenarioError("no [path <id>] section");

        if (const auto it = root.find("attractors"); it != root.not_found()) {
            for (const auto& [id, v] : it->second) {
                const std::string where = "[attractors]." + id;
                Vec x = detail::to_vec(detail::numbers(v.data(), where), where);
                if (x.size() != sc.map.dimension) throw ScenarioError(where + ": dimension mismatch");
                sc.plus_points.push_back({id, x});
            }
        }

        if (const auto it = root.find("rates"); it != root.not_found())
            if (const auto g = it->second.get_optional<std::string>("grid"))
                sc.r_grid = detail::numbers(*g, "[rates].grid");

        // [expect] r = VERDICT[:attractor]
        if (const auto it = root.find("expect"); it != root.not_found()) {
            for (const auto& [key, v] : it->second) {
                const std::string where = "[expect]." + key;
                const double r = detail::to_double(detail::trim(key), where);
                const auto parts = detail::split(v.data(), ':');
                if (parts.empty()) throw ScenarioError(where + ": empty verdict");
                GoldenVerdict gv{r, detail::parse_verdict(parts[0], where), parts.size() > 1 ? parts[1] : ""};
                sc.golden.push_back({"verdict at r=" + key, Source::Computed, gv});
            }
        }
    } catch (const ScenarioError&) {
        throw;
    } catch (const Error& e) {
        throw ScenarioError(origin + ": " + e.what());
    } catch (const pt::ptree_error& e) {
        throw ScenarioError(origin + ": " + e.what());
    }
    return sc;
}

inline Scenario parse_string(const std::string& text, const std::string& origin = "<string>") {
    std::istringstream in(text);
    return parse(in, origin);
}

inline Scenario load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ScenarioError("cannot open config file " + file);
    return parse(in, file);
}

}  // namespace config
}  // namespace tipscan
