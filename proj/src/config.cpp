#include "coreshell/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace coreshell {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
    }
    return value;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t exact = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), exact);
    if (ec == std::errc() && end == t.data() + t.size() && !t.empty()) {
        return exact;
    }
    // also accept counts written as 1e6
    const double value = parse_double(key, text);
    if (!(value >= 0.0) || value != std::floor(value) || value > 9.0e15) {
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
    }
    return static_cast<std::uint64_t>(value);
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t == "off") {
        return false;
    }
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

MeshKind parse_mesh_kind(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "radial") {
        return MeshKind::radial;
    }
    if (t == "planar2d") {
        return MeshKind::planar2d;
    }
    throw ConfigError(fmt::format("{}: unknown mesh kind '{}' (expected radial or planar2d)", key, text));
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"model.b1", [](RunConfig& c, const auto& k, const auto& v) { c.model.b1 = parse_double(k, v); }},
        {"model.b2", [](RunConfig& c, const auto& k, const auto& v) { c.model.b2 = parse_double(k, v); }},
        {"model.c0", [](RunConfig& c, const auto& k, const auto& v) { c.model.c0 = parse_double(k, v); }},
        {"model.c1", [](RunConfig& c, const auto& k, const auto& v) { c.model.c1 = parse_double(k, v); }},
        {"model.consumption",
         [](RunConfig& c, const auto& k, const auto& v) { c.model.consumption = parse_bool(k, v); }},
        {"geometry.kind",
         [](RunConfig& c, const auto& k, const auto& v) { c.geometry.kind = parse_mesh_kind(k, v); }},
        {"geometry.dimension",
         [](RunConfig& c, const auto& k, const auto& v) {
             c.geometry.dimension = static_cast<int>(parse_count(k, v));
         }},
        {"geometry.r1", [](RunConfig& c, const auto& k, const auto& v) { c.geometry.r1 = parse_double(k, v); }},
        {"geometry.r2", [](RunConfig& c, const auto& k, const auto& v) { c.geometry.r2 = parse_double(k, v); }},
        {"geometry.h",
         [](RunConfig& c, const auto& k, const auto& v) { c.geometry.h_target = parse_double(k, v); }},
        {"solver.newton_tol",
         [](RunConfig& c, const auto& k, const auto& v) { c.solver.newton_tol = parse_double(k, v); }},
        {"solver.newton_max_iter",
         [](RunConfig& c, const auto& k, const auto& v) {
             c.solver.newton_max_iter = static_cast<int>(parse_count(k, v));
         }},
        {"solver.linear_tol",
         [](RunConfig& c, const auto& k, const auto& v) { c.solver.linear_tol = parse_double(k, v); }},
        {"solver.dt", [](RunConfig& c, const auto& k, const auto& v) { c.solver.dt = parse_double(k, v); }},
        {"solver.t_end", [](RunConfig& c, const auto& k, const auto& v) { c.solver.t_end = parse_double(k, v); }},
        {"initial.field",
         [](RunConfig& c, const auto&, const auto& v) { c.initial.kind = parse_initial_kind(trim(v)); }},
        {"initial.amplitude",
         [](RunConfig& c, const auto& k, const auto& v) { c.initial.amplitude = parse_double(k, v); }},
        {"initial.seed", [](RunConfig& c, const auto& k, const auto& v) { c.initial.seed = parse_count(k, v); }},
        {"initial.file", [](RunConfig& c, const auto&, const auto& v) { c.initial.file = trim(v); }},
        {"output.dir", [](RunConfig& c, const auto&, const auto& v) { c.output.dir = trim(v); }},
        {"output.vtk", [](RunConfig& c, const auto& k, const auto& v) { c.output.vtk = parse_bool(k, v); }},
        {"output.csv", [](RunConfig& c, const auto& k, const auto& v) { c.output.csv = parse_bool(k, v); }},
        {"verify.seed", [](RunConfig& c, const auto& k, const auto& v) { c.verify.seed = parse_count(k, v); }},
        {"verify.phi_samples",
         [](RunConfig& c, const auto& k, const auto& v) { c.verify.phi_samples = parse_count(k, v); }},
        {"verify.antiderivative_samples",
         [](RunConfig& c, const auto& k, const auto& v) { c.verify.antiderivative_samples = parse_count(k, v); }},
        {"verify.monotonicity_pairs",
         [](RunConfig& c, const auto& k, const auto& v) { c.verify.monotonicity_pairs = parse_count(k, v); }},
        {"verify.coercivity_samples",
         [](RunConfig& c, const auto& k, const auto& v) { c.verify.coercivity_samples = parse_count(k, v); }},
        {"verify.strong_monotonicity_pairs",
         [](RunConfig& c, const auto& k, const auto& v) {
             c.verify.strong_monotonicity_pairs = parse_count(k, v);
         }},
        {"verify.gradient_pairs",
         [](RunConfig& c, const auto& k, const auto& v) { c.verify.gradient_pairs = parse_count(k, v); }},
        {"verify.resolvent_samples",
         [](RunConfig& c, const auto& k, const auto& v) { c.verify.resolvent_samples = parse_count(k, v); }},
    };
    return table;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
        throw ConfigError(fmt::format("unknown configuration key '{}'", key));
    }
    it->second(cfg, key, value);
}

std::string g17(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

std::string to_string(InitialKind kind) {
    switch (kind) {
        case InitialKind::zero:
            return "zero";
        case InitialKind::cone:
            return "cone";
        case InitialKind::random:
            return "random";
        case InitialKind::file:
            return "file";
    }
    return "unknown";
}

InitialKind parse_initial_kind(const std::string& text) {
    for (InitialKind k : {InitialKind::zero, InitialKind::cone, InitialKind::random, InitialKind::file}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    throw ConfigError(fmt::format("initial.field: unknown initial field '{}' (expected zero, cone, random or file)",
                                  text));
}

void RunConfig::validate() const {
    model.validate();
    geometry.validate();
    solver.validate();
    if (initial.kind == InitialKind::file && initial.file.empty()) {
        throw ConfigError("initial.file must be set when initial.field = file");
    }
    if (output.dir.empty()) {
        throw ConfigError("output.dir must not be empty");
    }
}

void apply_setting(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError(fmt::format("override '{}' is not of the form section.key=value", assignment));
    }
    set_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("{}: line {}: {}", source, e.line(), e.message()));
    }
    RunConfig cfg;
    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty()) {
            throw ConfigError(fmt::format("{}: key '{}' must belong to a section", source, section));
        }
        for (const auto& [key, value] : keys) {
            try {
                set_value(cfg, section + "." + key, value.data());
            } catch (const ConfigError& e) {
                throw ConfigError(fmt::format("{}: {}", source, e.what()));
            }
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot read config file '{}'", path));
    }
    std::ostringstream text;
    text << in.rdbuf();
    RunConfig cfg = parse_config(text.str(), path);
    for (const auto& o : overrides) {
        apply_setting(cfg, o);
    }
    cfg.validate();
    return cfg;
}

std::string to_ini(const RunConfig& cfg) {
    std::string out;
    out += "[model]\n";
    out += fmt::format("b1 = {}\nb2 = {}\nc0 = {}\nc1 = {}\nconsumption = {}\n", g17(cfg.model.b1),
                       g17(cfg.model.b2), g17(cfg.model.c0), g17(cfg.model.c1), cfg.model.consumption);
    out += "\n[geometry]\n";
    out += fmt::format("kind = {}\ndimension = {}\nr1 = {}\nr2 = {}\nh = {}\n", to_string(cfg.geometry.kind),
                       cfg.geometry.dimension, g17(cfg.geometry.r1), g17(cfg.geometry.r2),
                       g17(cfg.geometry.h_target));
    out += "\n[solver]\n";
    out += fmt::format("newton_tol = {}\nnewton_max_iter = {}\nlinear_tol = {}\ndt = {}\nt_end = {}\n",
                       g17(cfg.solver.newton_tol), cfg.solver.newton_max_iter, g17(cfg.solver.linear_tol),
                       g17(cfg.solver.dt), g17(cfg.solver.t_end));
    out += "\n[initial]\n";
    out += fmt::format("field = {}\namplitude = {}\nseed = {}\n", to_string(cfg.initial.kind),
                       g17(cfg.initial.amplitude), cfg.initial.seed);
    if (!cfg.initial.file.empty()) {
        out += fmt::format("file = {}\n", cfg.initial.file);
    }
    out += "\n[output]\n";
    out += fmt::format("dir = {}\nvtk = {}\ncsv = {}\n", cfg.output.dir, cfg.output.vtk, cfg.output.csv);
    out += "\n[verify]\n";
    const VerifyConfig& v = cfg.verify;
    out += fmt::format(
        "seed = {}\nphi_samples = {}\nantiderivative_samples = {}\nmonotonicity_pairs = {}\n"
        "coercivity_samples = {}\nstrong_monotonicity_pairs = {}\ngradient_pairs = {}\nresolvent_samples = {}\n",
        v.seed, v.phi_samples, v.antiderivative_samples, v.monotonicity_pairs, v.coercivity_samples,
        v.strong_monotonicity_pairs, v.gradient_pairs, v.resolvent_samples);
    return out;
}

}  // namespace coreshell
