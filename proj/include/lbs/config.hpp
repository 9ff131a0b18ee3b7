#pragma once

// JSON run configuration: strict schema validation (unknown keys and type
// errors are reported with their paths), canonical hash, atomic writes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbs/errors.hpp"
#include "lbs/feynman_kac.hpp"
#include "lbs/levy_model.hpp"
#include "lbs/registry.hpp"

namespace lbs {

inline constexpr const char* kToolVersion = "1.0.0";

using json = nlohmann::json;

struct RunConfig {
    ProblemSpec spec;
    McSetup setup;
    double x0 = 0.0;
    double flow_step = 1e-3;
    double brownian_step = 1e-3;
    std::uint64_t brownian_seed = 0;
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    OracleConfig oracle;
    std::string format = "csv";
    json raw;
    std::string hash;
};

/// FNV-1a over the canonical (sorted-key, compact) serialization.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace detail {

/// Reads members of one JSON object, remembering which keys were consumed so
/// that leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path, std::vector<std::string>& errors)
        : j_(j), path_(std::move(path)), errors_(errors) {
        if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
    }

    [[nodiscard]] std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    const json* get(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return nullptr;
        return &j_.at(key);
    }

    double number(const std::string& key, double fallback, bool required = false) {
        const json* v = get(key);
        if (!v) {
            if (required) errors_.push_back(child(key) + ": required");
            return fallback;
        }
        if (!v->is_number()) {
            errors_.push_back(child(key) + ": expected a number");
            return fallback;
        }
        return v->get<double>();
    }

    std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback, bool required = false) {
        const json* v = get(key);
        if (!v) {
            if (required) errors_.push_back(child(key) + ": required");
            return fallback;
        }
        if (!v->is_number_unsigned()) {
            errors_.push_back(child(key) + ": expected a non-negative integer");
            return fallback;
        }
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            errors_.push_back(child(key) + ": expected true or false");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) {
            errors_.push_back(child(key) + ": expected a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        const json* v = get(key);
        if (!v) return out;
        if (!v->is_array()) {
            errors_.push_back(child(key) + ": expected an array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) {
                errors_.push_back(child(key) + "[" + std::to_string(i) + "]: expected a number");
                continue;
            }
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    void finish() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) errors_.push_back(child(it.key()) + ": unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

inline Var parse_var(const std::string& s, const std::string& path, std::vector<std::string>& errors) {
    if (s == "t") return Var::t;
    if (s == "x") return Var::x;
    if (s == "y") return Var::y;
    errors.push_back(path + ": expected one of \"t\", \"x\", \"y\"");
    return Var::x;
}

inline CoefficientFn parse_coefficient(const json& j, const std::string& path, std::vector<std::string>& errors) {
    ObjectReader r(j, path, errors);
    const std::string name = r.string("name", "");
    const json empty = json::object();
    const json* params = r.get("params");
    ObjectReader p(params ? *params : empty, r.child("params"), errors);
    CoefficientFn out;
    if (name == "constant") {
        out = CoefficientFn::constant(p.number("c", 0.0));
    } else if (name == "linear" || name == "affine") {
        const double c = name == "affine" ? p.number("c", 0.0) : 0.0;
        const double at = p.number("t", 0.0), ax = p.number("x", 0.0), ay = p.number("y", 0.0);
        std::vector<double> az = p.numbers("z");
        out = name == "affine" ? CoefficientFn::affine(c, at, ax, ay, std::move(az)) : CoefficientFn::linear(at, ax, ay, std::move(az));
    } else if (name == "sine") {
        const Var v = parse_var(p.string("var", "x"), p.child("var"), errors);
        const double amp = p.number("amp", 1.0), freq = p.number("freq", 1.0), phase = p.number("phase", 0.0),
                     offset = p.number("offset", 0.0);
        out = CoefficientFn::sine(v, amp, freq, phase, offset);
    } else if (name == "polynomial") {
        const Var v = parse_var(p.string("var", "x"), p.child("var"), errors);
        std::vector<double> coeffs = p.numbers("coeffs");
        if (coeffs.empty()) errors.push_back(p.child("coeffs") + ": required non-empty array");
        out = CoefficientFn::polynomial(v, std::move(coeffs));
    } else {
        errors.push_back(r.child("name") + ": unknown family \"" + name +
                         "\" (expected constant, linear, affine, sine, polynomial)");
    }
    p.finish();
    r.finish();
    return out;
}

inline void positive(double v, const std::string& path, std::vector<std::string>& errors) {
    if (!(v > 0.0) || !std::isfinite(v)) errors.push_back(path + ": must be finite and > 0");
}

}  // namespace detail

/// Parses and validates a configuration. All problems are collected and
/// reported together in one ConfigError.
inline RunConfig parse_config(const json& j) {
    std::vector<std::string> errors;
    RunConfig cfg;
    cfg.raw = j;
    detail::ObjectReader root(j, "", errors);

    {
        const json empty = json::object();
        const json* lv = root.get("levy");
        if (!lv) errors.emplace_back("levy: required");
        detail::ObjectReader r(lv ? *lv : empty, "levy", errors);
        cfg.spec.triplet.drift_pathwise = r.number("drift", 0.0);
        cfg.spec.triplet.sigma_gauss = r.number("sigma", 0.0);
        if (const json* atoms = r.get("atoms")) {
            if (!atoms->is_array()) {
                errors.emplace_back("levy.atoms: expected an array");
            } else {
                for (std::size_t i = 0; i < atoms->size(); ++i) {
                    detail::ObjectReader a((*atoms)[i], "levy.atoms[" + std::to_string(i) + "]", errors);
                    const double y = a.number("y", 0.0, true);
                    const double lambda = a.number("lambda", 0.0, true);
                    a.finish();
                    cfg.spec.triplet.atoms.push_back({y, lambda});
                }
            }
        }
        r.finish();
        try {
            validate_triplet(cfg.spec.triplet, "levy");
        } catch (const ConfigError& e) {
            errors.emplace_back(e.what());
        }
    }
    {
        const json empty = json::object();
        const json* dv = root.get("domain");
        if (!dv) errors.emplace_back("domain: required");
        detail::ObjectReader r(dv ? *dv : empty, "domain", errors);
        const double l = r.number("l", 0.0, true), rr = r.number("r", 1.0, true);
        r.finish();
        if (l < rr && std::isfinite(l) && std::isfinite(rr)) {
            cfg.spec.dom = DomainSpec(l, rr);
        } else {
            errors.emplace_back("domain: need finite l < r");
        }
    }
    cfg.spec.horizon = root.number("horizon", 1.0, true);
    detail::positive(cfg.spec.horizon, "horizon", errors);

    auto coefficient = [&](const char* key, CoefficientFn fallback) {
        const json* v = root.get(key);
        return v ? detail::parse_coefficient(*v, key, errors) : fallback;
    };
    cfg.spec.f = coefficient("f", CoefficientFn::constant(0.0));
    cfg.spec.g = coefficient("g", CoefficientFn::constant(0.0));
    cfg.spec.phi = coefficient("phi", CoefficientFn::constant(0.0));
    cfg.spec.u0 = coefficient("u0", CoefficientFn::constant(0.0));
    cfg.spec.sigma_coef = coefficient("sigma_coef", CoefficientFn::constant(1.0));
    if (!root.has("u0")) errors.emplace_back("u0: required");

    {
        const json empty = json::object();
        const json* sv = root.get("solver");
        detail::ObjectReader r(sv ? *sv : empty, "solver", errors);
        cfg.setup.dt = r.number("dt", 1e-2);
        detail::positive(cfg.setup.dt, "solver.dt", errors);
        cfg.setup.n_paths = r.unsigned_int("n_paths", 10000);
        if (cfg.setup.n_paths == 0) errors.emplace_back("solver.n_paths: must be >= 1");
        const std::uint64_t k = r.unsigned_int("teugels_K", 2);
        if (k < 1 || k > 16) errors.emplace_back("solver.teugels_K: must be in [1, 16]");
        cfg.setup.teugels_order = static_cast<int>(k);
        const std::uint64_t deg = r.unsigned_int("degree", 4);
        if (deg > 16) errors.emplace_back("solver.degree: must be <= 16");
        cfg.setup.solver.reg.degree = static_cast<int>(deg);
        cfg.setup.solver.reg.boundary_feature = r.boolean("boundary_feature", true);
        cfg.setup.solver.reg.ridge = r.number("ridge", 1e-8);
        if (cfg.setup.solver.reg.ridge < 0.0) errors.emplace_back("solver.ridge: must be >= 0");
        cfg.setup.solver.picard = r.boolean("picard", false);
        cfg.setup.solver.batches = r.unsigned_int("batches", 10);
        cfg.x0 = r.number("x0", 0.5 * (cfg.spec.dom.l + cfg.spec.dom.r));
        cfg.flow_step = r.number("flow_step", 1e-3);
        detail::positive(cfg.flow_step, "solver.flow_step", errors);
        r.finish();
    }
    {
        const json empty = json::object();
        const json* sv = root.get("seeds");
        if (!sv) errors.emplace_back("seeds: required");
        detail::ObjectReader r(sv ? *sv : empty, "seeds", errors);
        cfg.setup.seed = r.unsigned_int("master", 0, true);
        cfg.brownian_seed = r.unsigned_int("brownian", 0, true);
        r.finish();
    }
    {
        const json empty = json::object();
        const json* bv = root.get("brownian");
        detail::ObjectReader r(bv ? *bv : empty, "brownian", errors);
        cfg.brownian_step = r.number("step", 1e-3);
        detail::positive(cfg.brownian_step, "brownian.step", errors);
        r.finish();
    }
    {
        const json empty = json::object();
        const json* gv = root.get("grids");
        detail::ObjectReader r(gv ? *gv : empty, "grids", errors);
        cfg.t_grid = r.numbers("t");
        cfg.x_grid = r.numbers("x");
        r.finish();
        if (cfg.t_grid.empty()) cfg.t_grid = {0.0};
        if (cfg.x_grid.empty())
            for (int i = 0; i <= 10; ++i) cfg.x_grid.push_back(cfg.spec.dom.l + (cfg.spec.dom.r - cfg.spec.dom.l) * i / 10.0);
    }
    {
        const json empty = json::object();
        const json* ov = root.get("oracle");
        detail::ObjectReader r(ov ? *ov : empty, "oracle", errors);
        cfg.oracle.nx = r.unsigned_int("nx", 400);
        cfg.oracle.nt = r.unsigned_int("nt", 400);
        cfg.oracle.clamp_jumps = r.boolean("clamp_jumps", true);
        r.finish();
    }
    {
        const json empty = json::object();
        const json* ov = root.get("output");
        detail::ObjectReader r(ov ? *ov : empty, "output", errors);
        cfg.format = r.string("format", "csv");
        if (cfg.format != "csv" && cfg.format != "json") errors.emplace_back("output.format: expected \"csv\" or \"json\"");
        r.finish();
    }
    root.finish();

    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    cfg.hash = config_hash(j);
    return cfg;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

/// Writes through a temporary sibling file and renames it into place.
inline void write_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

} // namespace lbs
