#pragma once

// Acceptance battery: ten pass/fail checks with fixed problem data. Each check
// also returns a fingerprint of its numeric output; check 10 reruns the
// others and compares fingerprints byte for byte.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lbs/bdsde_solver.hpp"
#include "lbs/cloud.hpp"
#include "lbs/coefficients.hpp"
#include "lbs/domain.hpp"
#include "lbs/doss_flow.hpp"
#include "lbs/feynman_kac.hpp"
#include "lbs/levy_model.hpp"
#include "lbs/parallel.hpp"
#include "lbs/registry.hpp"
#include "lbs/rng.hpp"
#include "lbs/teugels.hpp"

namespace lbs {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    std::string detail;
    std::string fingerprint;
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240917;
    unsigned threads = 1;
};

namespace acceptance {

class Fingerprint {
public:
    Fingerprint& operator<<(double v) {
        os_ << std::setprecision(17) << v << ';';
        return *this;
    }
    [[nodiscard]] std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

inline std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

inline LevyTriplet triplet(double drift, double sigma, std::vector<JumpAtom> atoms) {
    LevyTriplet t;
    t.drift_pathwise = drift;
    t.sigma_gauss = sigma;
    t.atoms = std::move(atoms);
    return t;
}

/// The linear test problem: Brownian driver on a domain wide enough never to
/// be hit, f(y) = 0.1 y, u0(x) = x, T = 1.
inline ProblemSpec linear_problem(CoefficientFn g = CoefficientFn::constant(0.0)) {
    ProblemSpec s;
    s.triplet = triplet(0.0, 1.0, {});
    s.dom = DomainSpec(-1e6, 1e6);
    s.f = CoefficientFn::linear(0.0, 0.0, 0.1);
    s.g = std::move(g);
    s.phi = CoefficientFn::constant(0.0);
    s.u0 = CoefficientFn::linear(0.0, 1.0, 0.0);
    s.horizon = 1.0;
    return s;
}

/// Neumann heat problem on [0, 1] with u0 = cos(pi x).
inline ProblemSpec heat_problem(double horizon) {
    ProblemSpec s;
    s.triplet = triplet(0.0, 1.0, {});
    s.dom = DomainSpec(0.0, 1.0);
    s.f = CoefficientFn::constant(0.0);
    s.g = CoefficientFn::constant(0.0);
    s.phi = CoefficientFn::constant(0.0);
    s.u0 = CoefficientFn::sine(Var::x, 1.0, std::numbers::pi, 0.5 * std::numbers::pi);
    s.horizon = horizon;
    return s;
}

/// One-atom jump problem with affine driver and boundary coefficient.
inline ProblemSpec jump_problem() {
    ProblemSpec s;
    s.triplet = triplet(0.0, 1.0, {{1.0, 0.5}});
    s.dom = DomainSpec(0.0, 2.0);
    s.sigma_coef = CoefficientFn::constant(0.5);
    s.f = CoefficientFn::affine(0.2, 0.0, 0.0, 0.1, {0.1});
    s.g = CoefficientFn::constant(0.0);
    s.phi = CoefficientFn::affine(0.0, 0.0, 1.5, 0.25);
    s.u0 = CoefficientFn::polynomial(Var::x, {0.0, 0.0, 1.0});
    s.horizon = 0.5;
    return s;
}

inline CriterionResult teugels_orthonormality(const AcceptanceOptions&) {
    CriterionResult r{1, "Teugels orthonormality", true, 0.0, {}, {}};
    const std::vector<std::pair<LevyTriplet, int>> cases = {
        {triplet(0.0, 1.0, {}), 1},
        {triplet(0.0, 0.0, {{1.0, 1.0}}), 1},
        {triplet(0.0, 0.0, {{-1.0, 0.5}, {1.0, 0.5}}), 2},
        {triplet(0.0, 1.0, {{-1.0, 0.5}, {1.0, 0.5}, {2.0, 0.1}}), 4},
    };
    Fingerprint fp;
    double worst = 0.0;
    std::ostringstream ranks;
    for (const auto& [t, expected] : cases) {
        const OrthoBasis b = build_basis(t, 8);
        const double res = gram_residual(b, t);
        worst = std::max(worst, res);
        ranks << b.effective_order << (&t == &cases.back().first ? "" : ",");
        r.passed = r.passed && res <= 1e-10 && b.effective_order == expected;
        for (const auto& row : b.coeffs)
            for (double c : row) fp << c;
    }
    r.detail = "max gram residual " + fmt(worst) + ", K_eff {" + ranks.str() + "} (expected {1,1,2,4})";
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult martingale_statistics(const AcceptanceOptions& opt) {
    CriterionResult r{2, "Teugels martingale statistics", true, 0.0, {}, {}};
    const LevyTriplet t = triplet(0.0, 1.0, {{-1.0, 0.5}, {1.0, 0.5}, {2.0, 0.1}});
    const OrthoBasis b = build_basis(t, 8);
    const std::size_t K = static_cast<std::size_t>(b.effective_order);
    const std::size_t n = 100000;
    const auto m = compensators(t, b.effective_order);
    const std::size_t stride = K + 2 * K * K;
    std::vector<double> acc(chunk_count(n) * stride, 0.0);
    parallel_chunks(n, opt.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double* s = acc.data() + c * stride;
        std::vector<double> h(K), inc(K);
        for (std::size_t p = begin; p < end; ++p) {
            const LevyPath path = simulate_path(t, 1.0, 1e-3, StreamSeed{opt.seed, p, StreamKind::levy});
            std::fill(h.begin(), h.end(), 0.0);
            for (std::size_t i = 0; i < path.steps(); ++i) {
                step_increments(path, i, b, m, inc);
                for (std::size_t k = 0; k < K; ++k) h[k] += inc[k];
            }
            for (std::size_t i = 0; i < K; ++i) {
                s[i] += h[i];
                for (std::size_t j = 0; j < K; ++j) {
                    const double prod = h[i] * h[j];
                    s[K + i * K + j] += prod;
                    s[K + K * K + i * K + j] += prod * prod;
                }
            }
        }
    });
    std::vector<double> tot(stride, 0.0);
    for (std::size_t c = 0; c < chunk_count(n); ++c)
        for (std::size_t q = 0; q < stride; ++q) tot[q] += acc[c * stride + q];
    const double nn = static_cast<double>(n);
    Fingerprint fp;
    double worst = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        const double mean = tot[i] / nn;
        const double se = std::sqrt((tot[K + i * K + i] / nn - mean * mean) / nn);
        worst = std::max(worst, std::abs(mean) / se);
        fp << mean;
    }
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) {
            const double e2 = tot[K + i * K + j] / nn;
            const double cov = e2 - (tot[i] / nn) * (tot[j] / nn);
            const double se = std::sqrt((tot[K + K * K + i * K + j] / nn - e2 * e2) / nn);
            worst = std::max(worst, std::abs(cov - (i == j ? 1.0 : 0.0)) / se);
            fp << cov;
        }
    r.passed = worst <= 3.0;
    r.detail = "K_eff " + std::to_string(K) + ", 1e5 paths, worst deviation " + fmt(worst, 3) + " SE (limit 3)";
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult reflection(const AcceptanceOptions& opt) {
    CriterionResult r{3, "Reflection containment and local time", true, 0.0, {}, {}};
    const DomainSpec dom(0.0, 1.0);
    const LevyTriplet t = triplet(0.2, 1.0, {{0.3, 2.0}, {-0.5, 1.0}});
    auto one = [](double) { return 1.0; };
    const std::size_t n = 10000;
    std::vector<std::size_t> violations(chunk_count(n), 0), bad_a(chunk_count(n), 0);
    std::vector<double> a_end(n);
    parallel_chunks(n, opt.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const ReflectedPath path = simulate_reflected(t, dom, one, 0.5, 0.0, 1.0, 1e-3, StreamSeed{opt.seed, p, StreamKind::levy});
            for (double x : path.x) violations[c] += dom.contains(x) ? 0 : 1;
            for (std::size_t i = 0; i < path.steps(); ++i) {
                const double da = path.a[i + 1] - path.a[i];
                if (da < 0.0 || (da > 0.0 && !path.boundary_flags[i])) ++bad_a[c];
            }
            a_end[p] = path.a.back();
        }
    });
    std::size_t v = 0, ba = 0;
    for (std::size_t c = 0; c < violations.size(); ++c) {
        v += violations[c];
        ba += bad_a[c];
    }
    const ReflectedPath ramp = simulate_reflected(triplet(1.0, 0.0, {}), dom, one, 0.5, 0.0, 1.0, 1e-3, StreamSeed{opt.seed, 0, StreamKind::levy});
    const double ramp_err = std::abs(ramp.a.back() - 0.5);
    r.passed = v == 0 && ba == 0 && ramp_err <= 1e-3;
    r.detail = "containment violations " + std::to_string(v) + ", A-monotonicity/flag violations " + std::to_string(ba) +
               ", ramp |A_1 - 0.5| = " + fmt(ramp_err);
    Fingerprint fp;
    for (double a : a_end) fp << a;
    fp << ramp.a.back();
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult flow_closed_forms(const AcceptanceOptions& opt) {
    CriterionResult r{4, "Flow closed forms and round trip", true, 0.0, {}, {}};
    auto path = std::make_shared<const BrownianPath>(simulate_brownian(1.0, 1e-4, opt.seed));
    const double c = 0.3;
    FlowEvaluator shift(CoefficientFn::constant(c), path, 1e-4);
    FlowEvaluator scale(CoefficientFn::linear(0.0, 0.0, 1.0), path, 1e-4);
    Fingerprint fp;
    double closed = 0.0;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double db = path->values.back() - path->at(t);
        for (double y : {-1.5, -0.5, 0.3, 1.0, 2.0}) {
            const double a = shift.solve_flow(t, 0.5, y), b = scale.solve_flow(t, 0.5, y);
            closed = std::max({closed, std::abs(a - (y + c * db)), std::abs(b - y * std::exp(db))});
            fp << a << b;
        }
    }
    double trip = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double y = -2.0 + 4.0 * (i + 0.5) / 1000.0;
        for (const FlowEvaluator* ev : {&shift, &scale}) {
            const double u = ev->solve_flow(0.0, 0.5, y);
            const double back = ev->inverse_flow(0.0, 0.5, u);
            trip = std::max(trip, std::abs(back - y));
            fp << back;
        }
    }
    r.passed = closed <= 1e-3 && trip <= 1e-8;
    r.detail = "closed-form error " + fmt(closed) + " (limit 1e-3), round trip " + fmt(trip) + " (limit 1e-8)";
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult transformation_identities(const AcceptanceOptions& opt) {
    CriterionResult r{5, "Inverse-derivative and driver identities", true, 0.0, {}, {}};
    ProblemSpec spec;
    spec.triplet = triplet(0.1, 0.5, {{-1.0, 0.5}, {1.0, 0.5}});
    spec.dom = DomainSpec(0.0, 1.0);
    spec.f = CoefficientFn::affine(0.1, 0.0, 0.2, 0.3, {0.5, -0.2});
    spec.g = CoefficientFn::linear(0.0, 0.0, 0.2);
    spec.phi = CoefficientFn::affine(0.2, 0.0, 0.0, 0.1);
    spec.u0 = CoefficientFn::constant(0.0);
    spec.horizon = 1.0;
    const OrthoBasis basis = build_basis(spec.triplet, 4);
    auto path = std::make_shared<const BrownianPath>(simulate_brownian(1.0, 1e-3, opt.seed));
    const FlowEvaluator ev(spec.g, path, 1e-3);
    Engine rng = make_engine(StreamSeed{opt.seed, 5, StreamKind::initial_state});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double r_inv = 0.0, r_f = 0.0, r_phi = 0.0;
    Fingerprint fp;
    for (int draw = 0; draw < 100; ++draw) {
        const double t = 1e-3 * std::floor(1000.0 * unit(rng));
        const double x = unit(rng);
        const double y = -2.0 + 4.0 * unit(rng);
        std::vector<double> z(static_cast<std::size_t>(basis.effective_order));
        for (double& zk : z) zk = -1.0 + 2.0 * unit(rng);
        const double a = inverse_identity_residual(ev, t, x, y);
        const double b = check_f0_identity(spec, ev, basis, t, x, y, z);
        const double c = check_phi0_identity(spec, ev, t, x, y);
        r_inv = std::max(r_inv, a);
        r_f = std::max(r_f, b);
        r_phi = std::max(r_phi, c);
        fp << a << b << c;
    }
    r.passed = std::max({r_inv, r_f, r_phi}) <= 1e-4;
    r.detail = "100 draws: inverse identities " + fmt(r_inv) + ", F = f~ " + fmt(r_f) + ", Phi = phi~ " + fmt(r_phi) +
               " (limit 1e-4)";
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult linear_closed_form(const AcceptanceOptions& opt) {
    CriterionResult r{6, "Linear backward equation closed form", true, 0.0, {}, {}};
    const ProblemSpec spec = linear_problem();
    const OrthoBasis basis = build_basis(spec.triplet, 1);
    CloudConfig cc;
    cc.n_paths = 100000;
    cc.dt = 1e-2;
    cc.seed = opt.seed;
    cc.x0 = 0.5;
    cc.threads = opt.threads;
    const PathCloud cloud = simulate_cloud(spec, basis, cc);
    SolverConfig sc;
    sc.threads = opt.threads;
    const BDSDESolution sol = solve_gbdsdel(spec, linear_brownian(1.0, 1.0, 0.0), basis, cloud, sc);
    const FieldEstimate e = estimate_field_value(sol, 0.0, 0.5);
    const double exact = 0.5 * std::exp(0.1);
    const double err = std::abs(e.value - exact);
    const double tol = 3.0 * e.std_error + 0.01 * exact;
    r.passed = err <= tol;
    r.detail = "Y_0 = " + fmt(e.value, 8) + " +- " + fmt(e.std_error, 2) + ", exact " + fmt(exact, 8) + ", |err| " + fmt(err, 3) +
               " <= " + fmt(tol, 3);
    Fingerprint fp;
    fp << e.value << e.std_error;
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult neumann_heat(const AcceptanceOptions& opt) {
    CriterionResult r{7, "Neumann heat equation", true, 0.0, {}, {}};
    const double T = 0.05;
    const ProblemSpec spec = heat_problem(T);
    std::vector<double> xs;
    for (int i = 1; i <= 9; ++i) xs.push_back(0.1 * i);
    McSetup setup;
    setup.n_paths = 100000;
    setup.dt = 2.5e-4;
    setup.seed = opt.seed;
    setup.teugels_order = 1;
    setup.solver.threads = opt.threads;
    const SolutionField mc = evaluate_field(spec, setup, {0.0}, xs);
    const SolutionField fd = oracle_pide(spec, {0.0, 0.5 * T}, xs);
    const double amp = std::exp(-0.5 * std::numbers::pi * std::numbers::pi * T);
    double mc_err = 0.0, fd_err = 0.0;
    Fingerprint fp;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double exact0 = amp * std::cos(std::numbers::pi * xs[i]);
        const double exact_half = std::exp(-0.25 * std::numbers::pi * std::numbers::pi * T) * std::cos(std::numbers::pi * xs[i]);
        mc_err = std::max(mc_err, std::abs(mc.at(0, i) - exact0) / amp);
        fd_err = std::max({fd_err, std::abs(fd.at(0, i) - exact0), std::abs(fd.at(1, i) - exact_half)});
        fp << mc.at(0, i) << mc.err(0, i) << fd.at(0, i);
    }
    r.passed = mc_err <= 0.02 && fd_err <= 1e-4;
    r.detail = "T = " + fmt(T) + ": Monte Carlo max error " + fmt(100.0 * mc_err, 3) + "% of sup|u| (limit 2%), oracle max error " +
               fmt(fd_err) + " (limit 1e-4)";
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult pide_cross_check(const AcceptanceOptions& opt) {
    CriterionResult r{8, "Jump PIDE: Monte Carlo vs finite differences", true, 0.0, {}, {}};
    const ProblemSpec spec = jump_problem();
    std::vector<double> ts, xs;
    for (int i = 0; i < 5; ++i) ts.push_back(spec.horizon * i / 4.0);
    for (int i = 0; i < 9; ++i) xs.push_back(spec.dom.l + (spec.dom.r - spec.dom.l) * i / 8.0);
    McSetup setup;
    setup.n_paths = 50000;
    setup.dt = 1.25e-3;
    setup.seed = opt.seed;
    setup.teugels_order = 2;
    setup.solver.threads = opt.threads;
    const SolutionField mc = evaluate_field(spec, setup, ts, xs);
    const SolutionField fd = oracle_pide(spec, ts, xs, OracleConfig{800, 800, true});
    double worst = 0.0;
    std::size_t fails = 0;
    Fingerprint fp;
    for (std::size_t it = 0; it < ts.size(); ++it)
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            const double diff = std::abs(mc.at(it, ix) - fd.at(it, ix));
            const double tol = 3.0 * mc.err(it, ix) + 0.02 * std::abs(fd.at(it, ix));
            worst = std::max(worst, tol > 0.0 ? diff / tol : (diff > 0.0 ? INFINITY : 0.0));
            if (diff > tol) ++fails;
            fp << mc.at(it, ix) << mc.err(it, ix);
        }
    r.passed = fails == 0;
    r.detail = "5x9 grid: " + std::to_string(fails) + " nodes outside 3 SE + 2%, worst |diff|/tol " + fmt(worst, 3);
    r.fingerprint = fp.str();
    return r;
}

inline CriterionResult doss_consistency(const AcceptanceOptions& opt) {
    CriterionResult r{9, "Doss-Sussmann consistency", true, 0.0, {}, {}};
    auto path = std::make_shared<const BrownianPath>(simulate_brownian(1.0, 1e-3, opt.seed ^ 0xB0B));
    Fingerprint fp;
    std::ostringstream detail;
    for (const auto& [label, g] : {std::pair{"g = 0.2", CoefficientFn::constant(0.2)},
                                   std::pair{"g = 0.2y", CoefficientFn::linear(0.0, 0.0, 0.2)}}) {
        const ProblemSpec spec = linear_problem(g);
        const OrthoBasis basis = build_basis(spec.triplet, 1);
        CloudConfig cc;
        cc.n_paths = 10000;
        cc.dt = 2e-2;
        cc.seed = opt.seed;
        cc.x0 = 0.5;
        cc.threads = opt.threads;
        const PathCloud cloud = simulate_cloud(spec, basis, cc);
        SolverConfig sc;
        sc.threads = opt.threads;
        sc.batches = 0;
        const BDSDESolution direct = solve_gbdsdel(spec, *path, basis, cloud, sc);
        const FlowEvaluator ev(spec.g, path, 1e-3);
        const BDSDESolution transformed = solve_gbsdel(spec, ev, basis, cloud, sc);
        const double y0 = direct.y_at(0, 0.5);
        const double u0 = transformed.y_at(0, 0.5);
        const double mapped = ev.solve_flow(0.0, 0.5, u0);
        const double rel = std::abs(y0 - mapped) / std::abs(y0);
        r.passed = r.passed && rel <= 0.02;
        detail << label << ": Y_0 " << fmt(y0, 6) << " vs eta(U_0) " << fmt(mapped, 6) << " (" << fmt(100.0 * rel, 3) << "%); ";
        fp << y0 << u0 << mapped;
    }
    r.detail = detail.str() + "limit 2%";
    r.fingerprint = fp.str();
    return r;
}

using CheckFn = CriterionResult (*)(const AcceptanceOptions&);

inline const std::vector<CheckFn>& checks() {
    static const std::vector<CheckFn> all = {teugels_orthonormality, martingale_statistics, reflection,
                                             flow_closed_forms,      transformation_identities, linear_closed_form,
                                             neumann_heat,           pide_cross_check,       doss_consistency};
    return all;
}

inline CriterionResult timed(CheckFn fn, const AcceptanceOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = fn(opt);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace acceptance

/// Runtime limits (seconds) attached to criteria 1, 2, 5 and 9.
inline double runtime_limit(int id) {
    switch (id) {
        case 1: return 1.0;
        case 2: return 60.0;
        case 5: return 30.0;
        case 9: return 300.0;
        default: return 0.0;
    }
}

/// Runs criteria 1-9, then reruns them for criterion 10. `progress` is
/// called after every finished criterion.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                                   const std::function<void(const CriterionResult&)>& progress = {}) {
    std::vector<CriterionResult> out;
    int id = 1;
    for (auto fn : acceptance::checks()) {
        CriterionResult r = acceptance::timed(fn, opt);
        r.id = id++;
        const double limit = runtime_limit(r.id);
        if (limit > 0.0 && r.seconds > limit) {
            r.passed = false;
            r.detail += "; runtime " + acceptance::fmt(r.seconds, 3) + " s exceeds " + acceptance::fmt(limit, 3) + " s";
        }
        if (progress) progress(r);
        out.push_back(std::move(r));
    }
    CriterionResult det{10, "Determinism of repeated runs", true, 0.0, {}, {}};
    const auto start = std::chrono::steady_clock::now();
    std::vector<int> differing;
    for (std::size_t i = 0; i < acceptance::checks().size(); ++i) {
        const CriterionResult again = acceptance::timed(acceptance::checks()[i], opt);
        if (again.fingerprint != out[i].fingerprint || out[i].fingerprint.empty()) differing.push_back(static_cast<int>(i + 1));
    }
    det.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    det.passed = differing.empty();
    if (differing.empty()) {
        det.detail = "criteria 1-9 rerun with identical configuration: outputs byte-identical";
    } else {
        std::ostringstream os;
        os << "outputs differ for criteria";
        for (int d : differing) os << ' ' << d;
        det.detail = os.str();
    }
    if (progress) progress(det);
    out.push_back(std::move(det));
    return out;
}

} // namespace lbs
