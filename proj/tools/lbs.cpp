// lbs: command-line driver for the reflected Levy BDSDE solvers.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbs/acceptance.hpp"
#include "lbs/bdsde_solver.hpp"
#include "lbs/cloud.hpp"
#include "lbs/coefficients.hpp"
#include "lbs/config.hpp"
#include "lbs/domain.hpp"
#include "lbs/doss_flow.hpp"
#include "lbs/feynman_kac.hpp"
#include "lbs/teugels.hpp"

namespace {

using namespace lbs;

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kAcceptance = 3 };

enum class Level { quiet, info, debug };

Level log_level() {
    const char* v = std::getenv("LBS_LOG");
    if (!v) return Level::quiet;
    const std::string s(v);
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    return Level::quiet;
}

void log(Level at, const std::string& msg) {
    static const Level level = log_level();
    if (level == Level::quiet || static_cast<int>(at) > static_cast<int>(level)) return;
    std::cerr << "[lbs " << (at == Level::debug ? "debug" : "info") << "] " << msg << '\n';
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One tabular result; rendered as CSV (with a hash comment line) or JSON.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Options {
    std::string config_path;
    std::string out;
    std::string format;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed_override;
};

struct Output {
    const Options& opt;
    const RunConfig& cfg;
    std::string format;
    std::vector<std::string> files;

    std::string render_csv(const Table& t) const {
        std::ostringstream os;
        os << "# config_hash=" << cfg.hash << " tool_version=" << kToolVersion << " seed=" << cfg.setup.seed << '\n';
        for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << num(row[c]);
            os << '\n';
        }
        return os.str();
    }

    json render_json_table(const Table& t) const {
        json rows = json::array();
        for (const auto& row : t.rows) {
            json r = json::object();
            for (std::size_t c = 0; c < row.size(); ++c) r[t.columns[c]] = row[c];
            rows.push_back(std::move(r));
        }
        return rows;
    }

    json header() const {
        return {{"config_hash", cfg.hash}, {"tool_version", kToolVersion}, {"seed", cfg.setup.seed}};
    }

    /// Emits a table; `extra` is merged into the JSON form only.
    void emit(const Table& t, const json& extra = json::object()) {
        std::string body;
        if (format == "json") {
            json j = header();
            j["table"] = t.name;
            j["rows"] = render_json_table(t);
            for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
            body = j.dump(2) + "\n";
        } else {
            body = render_csv(t);
        }
        write(t.name + "." + format, body);
    }

    void emit_json(const std::string& name, json j) {
        json h = header();
        for (auto it = j.begin(); it != j.end(); ++it) h[it.key()] = it.value();
        write(name + ".json", h.dump(2) + "\n");
    }

    void write(const std::string& file, const std::string& body) {
        if (opt.out.empty()) {
            std::cout << body;
            return;
        }
        const std::string path = (std::filesystem::path(opt.out) / file).string();
        write_atomic(path, body);
        files.push_back(file);
        log(Level::info, "wrote " + path);
    }

    void manifest(const std::string& command, double seconds, const json& acceptance = nullptr) {
        if (opt.out.empty()) return;
        json m = {{"config_hash", cfg.hash},
                  {"tool_version", kToolVersion},
                  {"command", command},
                  {"wall_time_s", seconds},
                  {"seeds", {{"master", cfg.setup.seed}, {"brownian", cfg.brownian_seed}}},
                  {"files", files}};
        if (!acceptance.is_null()) m["acceptance"] = acceptance;
        write_atomic((std::filesystem::path(opt.out) / "manifest.json").string(), m.dump(2) + "\n");
    }
};

RunConfig load(const Options& opt) {
    if (opt.config_path.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(opt.config_path);
    if (opt.seed_override) {
        cfg.setup.seed = *opt.seed_override;
        cfg.raw["seeds"]["master"] = *opt.seed_override;
        cfg.hash = config_hash(cfg.raw);
    }
    if (!opt.format.empty()) cfg.format = opt.format;
    cfg.setup.solver.threads = opt.threads;
    log(Level::info, "config " + opt.config_path + " hash " + cfg.hash);
    return cfg;
}

std::shared_ptr<const BrownianPath> brownian_for(const RunConfig& cfg) {
    return std::make_shared<const BrownianPath>(simulate_brownian(cfg.spec.horizon, cfg.brownian_step, cfg.brownian_seed));
}

int cmd_basis(Output& out) {
    const RunConfig& cfg = out.cfg;
    const OrthoBasis b = build_basis(cfg.spec.triplet, cfg.setup.teugels_order);
    Table t{"basis", {"i", "power", "coefficient"}, {}};
    for (int i = 1; i <= b.effective_order; ++i)
        for (int k = 1; k <= i; ++k) t.rows.push_back({double(i), double(k), b.c(i, k)});
    out.emit(t, {{"requested_order", b.requested_order},
                 {"effective_order", b.effective_order},
                 {"gram_residual", b.gram_residual}});
    log(Level::info, "K_eff = " + std::to_string(b.effective_order) + ", Gram residual " + num(b.gram_residual));
    return kOk;
}

int cmd_simulate(Output& out, std::size_t n_paths, bool dump_paths, bool dump_flow) {
    const RunConfig& cfg = out.cfg;
    const auto sigma = [&](double x) { return cfg.spec.sigma_coef(x); };
    Table summary{"simulate", {"path", "x_T", "local_time_T", "boundary_steps", "jump_steps"}, {}};
    Table paths{"paths", {"path", "step", "t", "x", "local_time"}, {}};
    for (std::size_t p = 0; p < n_paths; ++p) {
        const ReflectedPath rp = simulate_reflected(cfg.spec.triplet, cfg.spec.dom, sigma, cfg.x0, 0.0, cfg.spec.horizon,
                                                    cfg.setup.dt, StreamSeed{cfg.setup.seed, p, StreamKind::levy});
        double hits = 0.0, jumps = 0.0;
        for (std::size_t i = 0; i < rp.steps(); ++i) {
            hits += rp.boundary_flags[i];
            jumps += rp.jump_flags[i];
        }
        summary.rows.push_back({double(p), rp.x.back(), rp.a.back(), hits, jumps});
        if (dump_paths)
            for (std::size_t i = 0; i < rp.x.size(); ++i) paths.rows.push_back({double(p), double(i), rp.grid[i], rp.x[i], rp.a[i]});
    }
    out.emit(summary);
    if (dump_paths) out.emit(paths);
    if (dump_flow) {
        const FlowEvaluator ev(cfg.spec.g, brownian_for(cfg), cfg.flow_step);
        const double y = cfg.spec.u0(cfg.x0);
        Table flow{"flow", {"t", "B_t", "eta", "eps_of_eta"}, {}};
        const std::size_t n = ev.steps_to(0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = ev.integration_step() * static_cast<double>(i);
            const double eta = ev.solve_flow(t, cfg.x0, y);
            flow.rows.push_back({t, ev.brownian().at(t), eta, ev.inverse_flow(t, cfg.x0, eta)});
        }
        out.emit(flow);
    }
    return kOk;
}

int cmd_solve(Output& out, bool dump_cloud) {
    const RunConfig& cfg = out.cfg;
    const OrthoBasis basis = build_basis(cfg.spec.triplet, cfg.setup.teugels_order);
    CloudConfig cc;
    cc.n_paths = cfg.setup.n_paths;
    cc.dt = cfg.setup.dt;
    cc.seed = cfg.setup.seed;
    cc.initial = InitialLaw::fixed;
    cc.x0 = cfg.x0;
    cc.threads = cfg.setup.solver.threads;
    const PathCloud cloud = simulate_cloud(cfg.spec, basis, cc);
    log(Level::debug, "cloud: " + std::to_string(cloud.n_paths) + " paths, " + std::to_string(cloud.n_steps) + " steps");

    const BrownianPath b = cfg.spec.g.is_zero() ? linear_brownian(cfg.spec.horizon, cfg.spec.horizon, 0.0) : *brownian_for(cfg);
    const BDSDESolution sol = solve_gbdsdel(cfg.spec, b, basis, cloud, cfg.setup.solver);

    Table t{"solve", {"step", "t", "mean_y", "stderr"}, {}};
    for (std::size_t i = 0; i < sol.mean_y.size(); ++i)
        t.rows.push_back({double(i), sol.grid[i], sol.mean_y[i], i < sol.mean_y_stderr.size() ? sol.mean_y_stderr[i] : 0.0});
    json coefficients = json::array();
    for (std::size_t i = 0; i < sol.y_fits.size(); ++i) {
        const RegressionFit& y = sol.y_fits[i];
        const RegressionFit& z = sol.z_fits[i];
        coefficients.push_back({{"step", i},
                                {"t", sol.grid[i]},
                                {"degree", y.degree},
                                {"center", y.center},
                                {"scale", y.scale},
                                {"boundary_feature", y.use_boundary},
                                {"y", y.beta},
                                {"z", z.beta},
                                {"condition_number", y.condition_number}});
    }
    out.emit(t, {{"x0", cfg.x0},
                 {"coefficients", coefficients},
                 {"y0", sol.mean_y.front()},
                 {"y0_stderr", sol.mean_y_stderr.empty() ? 0.0 : sol.mean_y_stderr.front()},
                 {"sup_y", sol.sup_y},
                 {"z_energy", sol.z_energy},
                 {"max_condition", sol.max_condition}});
    log(Level::info, "Y_0 = " + num(sol.mean_y.front()));
    if (dump_cloud) {
        Table c{"cloud", {"step", "path", "x", "a", "u"}, {}};
        for (int k = 1; k <= cloud.order; ++k) c.columns.push_back("v" + std::to_string(k));
        std::vector<double> a(cloud.n_paths, 0.0);
        for (std::size_t i = 0; i <= cloud.n_steps; ++i) {
            for (std::size_t p = 0; p < cloud.n_paths; ++p) {
                const double x = cloud.x_at(i)[p];
                std::vector<double> row{double(i), double(p), x, a[p], sol.y_at(i, x)};
                for (int k = 1; k <= cloud.order; ++k) row.push_back(i < cloud.n_steps ? sol.z_at(i, k, x) : 0.0);
                c.rows.push_back(std::move(row));
                if (i < cloud.n_steps) a[p] += cloud.da_at(i)[p];
            }
        }
        out.emit(c);
    }
    return kOk;
}

int cmd_field(Output& out, bool with_oracle, bool transformed) {
    const RunConfig& cfg = out.cfg;
    std::shared_ptr<const BrownianPath> b;
    std::unique_ptr<FlowEvaluator> ev;
    if (!cfg.spec.g.is_zero()) {
        b = brownian_for(cfg);
        if (transformed) ev = std::make_unique<FlowEvaluator>(cfg.spec.g, b, cfg.flow_step);
    }
    const SolutionField mc = evaluate_field(cfg.spec, cfg.setup, cfg.t_grid, cfg.x_grid, b,
                                            transformed ? FieldRoute::transformed : FieldRoute::direct, ev.get());
    std::optional<SolutionField> fd;
    if (with_oracle) fd = oracle_pide(cfg.spec, cfg.t_grid, cfg.x_grid, cfg.oracle);
    Table t{"field", {"t", "x", "u", "stderr"}, {}};
    if (fd) t.columns.push_back("oracle");
    for (std::size_t it = 0; it < cfg.t_grid.size(); ++it)
        for (std::size_t ix = 0; ix < cfg.x_grid.size(); ++ix) {
            std::vector<double> row{cfg.t_grid[it], cfg.x_grid[ix], mc.at(it, ix), mc.err(it, ix)};
            if (fd) row.push_back(fd->at(it, ix));
            t.rows.push_back(std::move(row));
        }
    out.emit(t);
    return kOk;
}

/// Transformation identities at deterministic sample points of the configured problem.
int cmd_check_operators(Output& out) {
    const RunConfig& cfg = out.cfg;
    const OrthoBasis basis = build_basis(cfg.spec.triplet, cfg.setup.teugels_order);
    const FlowEvaluator ev(cfg.spec.g, brownian_for(cfg), cfg.flow_step);
    Engine rng = make_engine(StreamSeed{cfg.setup.seed, 0, StreamKind::initial_state});
    std::uniform_real_distribution<double> ux(cfg.spec.dom.l, cfg.spec.dom.r), uy(-1.0, 1.0);
    const std::size_t n_t = ev.steps_to(0.0);
    std::uniform_int_distribution<std::size_t> ut(0, n_t);
    constexpr double kTol = 1e-4;
    double worst_inv = 0.0, worst_f = 0.0, worst_phi = 0.0;
    Table t{"operators", {"t", "x", "y", "inverse_residual", "f0_residual", "phi0_residual"}, {}};
    for (int d = 0; d < 20; ++d) {
        const double s = ev.integration_step() * static_cast<double>(ut(rng));
        const double x = ux(rng), y = uy(rng);
        std::vector<double> z(static_cast<std::size_t>(basis.effective_order));
        for (auto& v : z) v = uy(rng);
        const double ri = inverse_identity_residual(ev, s, x, y);
        const double rf = check_f0_identity(cfg.spec, ev, basis, s, x, y, z);
        const double xb = d % 2 ? cfg.spec.dom.l : cfg.spec.dom.r;
        const double rp = check_phi0_identity(cfg.spec, ev, s, xb, y);
        worst_inv = std::max(worst_inv, ri);
        worst_f = std::max(worst_f, rf);
        worst_phi = std::max(worst_phi, rp);
        t.rows.push_back({s, x, y, ri, rf, rp});
    }
    const bool pass = worst_inv <= kTol && worst_f <= kTol && worst_phi <= kTol;
    out.emit(t, {{"tolerance", kTol}, {"passed", pass}});
    std::cerr << "operators: " << (pass ? "PASS" : "FAIL") << " inverse " << num(worst_inv) << ", f0 " << num(worst_f)
              << ", phi0 " << num(worst_phi) << " (tolerance " << num(kTol) << ")\n";
    return pass ? kOk : kAcceptance;
}

int cmd_acceptance(Output& out, json& summary) {
    AcceptanceOptions ao;
    ao.seed = out.cfg.setup.seed;
    ao.threads = out.opt.threads;
    json checks = json::array();
    bool all = true;
    const auto results = run_acceptance(ao, [](const CriterionResult& r) {
        std::fprintf(stderr, "criterion %2d: %s %s [%.1f s] %s\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                     r.detail.c_str());
    });
    for (const auto& r : results) {
        all = all && r.passed;
        checks.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    }
    summary = {{"passed", all}, {"checks", checks}};
    out.emit_json("acceptance", summary);
    return all ? kOk : kAcceptance;
}

int cmd_convergence(Output& out, const std::string& parameter, const std::vector<double>& levels, double reference) {
    const RunConfig& cfg = out.cfg;
    SweepParameter p;
    if (parameter == "dt") p = SweepParameter::dt;
    else if (parameter == "n_paths") p = SweepParameter::n_paths;
    else if (parameter == "degree") p = SweepParameter::degree;
    else throw ArgumentError("convergence: unknown parameter '" + parameter + "' (expected dt, n_paths or degree)");
    std::shared_ptr<const BrownianPath> b;
    if (!cfg.spec.g.is_zero()) b = brownian_for(cfg);
    const ConvergenceReport rep = convergence_study(cfg.spec, cfg.setup, p, levels, cfg.x0, reference, b);
    Table t{"convergence", {"level", "y0", "stderr", "error"}, {}};
    for (std::size_t i = 0; i < rep.levels.size(); ++i)
        t.rows.push_back({rep.levels[i], rep.values[i], rep.std_errors[i], rep.errors[i]});
    out.emit(t, {{"parameter", sweep_parameter_name(p)}, {"reference", rep.reference}, {"slope", rep.slope}});
    log(Level::info, std::string("slope ") + num(rep.slope));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and finite-difference solvers for reflected Levy BDSDEs"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Options opt;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON run configuration")->required();
        sub->add_option("--out", opt.out, "output directory (stdout when omitted)");
        sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed-override", opt.seed_override, "replace seeds.master");
    };

    auto* basis = app.add_subcommand("basis", "Teugels orthonormal polynomial coefficients");
    common(basis);

    std::size_t n_show = 10;
    bool dump_paths = false, dump_flow = false;
    auto* simulate = app.add_subcommand("simulate", "reflected Levy paths from x0");
    common(simulate);
    simulate->add_option("--paths", n_show, "number of paths")->check(CLI::PositiveNumber);
    simulate->add_flag("--dump-paths", dump_paths, "write full trajectories");
    simulate->add_flag("--dump-flow", dump_flow, "write the stochastic flow along the Brownian grid");

    bool dump_cloud = false;
    auto* solve = app.add_subcommand("solve", "backward solve from (0, x0)");
    common(solve);
    solve->add_flag("--dump-cloud", dump_cloud, "write the forward path cloud");

    bool with_oracle = false, transformed = false;
    auto* field = app.add_subcommand("field", "solution field on the configured (t, x) grid");
    common(field);
    field->add_flag("--oracle", with_oracle, "add the finite-difference solution (requires g = 0)");
    field->add_flag("--transformed", transformed, "solve the transformed equation and map back");

    std::string suite, check;
    auto* verify = app.add_subcommand("verify", "acceptance suite or operator identity checks");
    common(verify);
    auto* suite_opt = verify->add_option("--suite", suite, "acceptance")->check(CLI::IsMember({"acceptance"}));
    verify->add_option("--check", check, "operators")->check(CLI::IsMember({"operators"}))->excludes(suite_opt);

    std::string parameter = "dt";
    std::vector<double> levels;
    double reference = std::numeric_limits<double>::quiet_NaN();
    auto* conv = app.add_subcommand("convergence", "error versus dt, n_paths or degree");
    common(conv);
    conv->add_option("--parameter", parameter, "dt, n_paths or degree");
    conv->add_option("--levels", levels, "parameter levels (at least 3)")->required()->delimiter(',');
    conv->add_option("--reference", reference, "exact Y_0 if known");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    const auto start = std::chrono::steady_clock::now();
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        const RunConfig cfg = load(opt);
        Output out{opt, cfg, cfg.format, {}};
        int rc = kOk;
        json summary;
        if (command == "basis") rc = cmd_basis(out);
        else if (command == "simulate") rc = cmd_simulate(out, n_show, dump_paths, dump_flow);
        else if (command == "solve") rc = cmd_solve(out, dump_cloud);
        else if (command == "field") rc = cmd_field(out, with_oracle, transformed);
        else if (command == "verify") {
            if (!check.empty()) rc = cmd_check_operators(out);
            else if (suite == "acceptance") rc = cmd_acceptance(out, summary);
            else throw ArgumentError("verify: pass --suite acceptance or --check operators");
        } else if (command == "convergence") rc = cmd_convergence(out, parameter, levels, reference);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.manifest(command, secs, summary.is_null() ? json(nullptr) : summary);
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
}
