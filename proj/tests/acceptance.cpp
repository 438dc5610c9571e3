// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every instance is seeded.

#include <chrono>
#include <iostream>

#include "cli_support.hpp"
#include "support.hpp"

using namespace pfdr;
using namespace pfdr::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok && passed) detail = what;
        passed = passed && ok;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

/* the instances shared by several criteria */
EEGInstance eeg_chain() { return synth_eeg(2024, 50, 20, 8, 0.01); }
LabelingInstance labeling_grid() { return synth_labeling(2024, 100, 3, 0.2); }

std::vector<CheckResult> oracle_results;
double oracle_seconds = 0.0;

Outcome checks_with_prefix(const std::string& prefix, index_t min_instances, std::string& summary)
{
    Outcome o;
    for (const auto& r : oracle_results) {
        if (r.name.rfind(prefix, 0) != 0) continue;
        o.require(r.passed, r.name + ": " + r.detail);
        o.require(r.instances >= min_instances, r.name + ": only " + std::to_string(r.instances) + " instances");
        summary += " " + r.name.substr(r.name.find('/') + 1) + "=" + fmt(r.worst);
    }
    return o;
}

Outcome criterion_prox()
{
    const auto t0 = Clock::now();
    oracle_results = run_oracle_checks();
    oracle_seconds = seconds_since(t0);
    std::string summary;
    auto o = checks_with_prefix("prox-grid/", 100, summary);
    o.require(oracle_seconds < 60.0, "oracle suite took " + fmt(oracle_seconds) + " s");
    if (o.passed) o.detail = "worst gaps" + summary + ", suite " + fmt(oracle_seconds) + " s";
    return o;
}

Outcome criterion_gradients()
{
    std::string a, b;
    auto o = checks_with_prefix("gradient-fd/", 50, a);
    const auto c = checks_with_prefix("cocoercivity/", 100, b);
    o.require(c.passed, c.detail);
    if (o.passed) o.detail = "relative errors" + a + ", violations" + b;
    return o;
}

Outcome criterion_reductions()
{
    std::string summary;
    auto o = checks_with_prefix("reduction/", 20, summary);
    if (o.passed) o.detail = "max deviations" + summary;
    return o;
}

/* 1/2 (x - 2)^2 + |x| */
SplitProblem lasso()
{
    SmoothTerm f;
    f.gradient = [](std::span<const double> x, std::span<double> g) { g[0] = x[0] - 2.0; };
    f.curvature = DiagonalOperator(1, 1.0);
    auto p = single_block_problem(1, l1_prox({1.0}), f, {}, 0.5);
    p.objective = [](std::span<const double> x) { return 0.5 * (x[0] - 2) * (x[0] - 2) + std::abs(x[0]); };
    return p;
}

Outcome criterion_fixed_point()
{
    Outcome o;
    SolveConfig cfg;
    cfg.stop = StoppingRule::rel_evol(1e-12);
    cfg.max_iters = 1000000;
    cfg.log_every = 0;
    std::string summary;
    for (const auto& [name, p] : {std::pair{std::string("lasso"), lasso()},
             std::pair{std::string("chain"), build_eeg_problem(eeg_chain(), SplitMode::pfdr)}}) {
        const auto r = solve(p, cfg);
        const double res = fixed_point_residual(r.state, p);
        const double bound = 1e-8 * (1.0 + detail::norm_inf(r.x));
        o.require(r.converged, name + " did not reach rel-evol 1e-12");
        o.require(res < bound, name + " residual " + fmt(res) + " >= " + fmt(bound));
        summary += " " + name + "=" + fmt(res) + " (" + std::to_string(r.iterations) + " it)";
    }
    if (o.passed) o.detail = "residuals" + summary;
    return o;
}

/* objective of a solver run to a tight stopping rule */
double pfdr_objective(const SplitProblem& p, const StoppingRule& stop)
{
    SolveConfig cfg;
    cfg.stop = stop;
    cfg.max_iters = 200000;
    cfg.log_every = 0;
    cfg.log_residual = false;
    return p.objective(solve(p, cfg).x);
}

double ppd_objective(const PrimalDualSplitting& s, const StoppingRule& stop)
{
    PpdConfig cfg;
    cfg.stop = stop;
    cfg.max_iters = 500000;
    cfg.log_every = 0;
    return s.objective(ppd_solve(s, cfg).x);
}

std::vector<PrimalDualSplitting> built_splittings;

Outcome criterion_agreement()
{
    Outcome o;
    const auto t0 = Clock::now();
    std::string summary;
    auto compare = [&](const std::string& family, double f_inf, double fa, double fb, double fc) {
        const double scale = std::abs(f_inf);
        const std::pair<const char*, double> runs[] = {{"pfdr", fa}, {"pgfb", fb}, {"ppd", fc}};
        for (const auto& [name, f] : runs) {
            const double rel = std::abs(f - f_inf) / scale;
            o.require(rel < 1e-6, family + " " + name + " relative gap " + fmt(rel));
            summary += " " + family + "/" + name + "=" + fmt(rel);
        }
    };
    {
        const auto inst = eeg_chain();
        const auto ref = reference_solution(build_eeg_problem(inst, SplitMode::pfdr));
        const auto stop = StoppingRule::rel_evol(1e-10);
        const auto ppd = build_ppd_splitting_eeg(inst);
        built_splittings.push_back(ppd);
        compare("eeg", ref.f_inf, pfdr_objective(build_eeg_problem(inst, SplitMode::pfdr), stop),
            pfdr_objective(build_eeg_problem(inst, SplitMode::pgfb), stop), ppd_objective(ppd, stop));
    }
    {
        const auto inst = labeling_grid();
        const auto ref = reference_solution(build_labeling_problem(inst, SplitMode::pfdr));
        const auto stop = StoppingRule::max_evol(1e-10);
        const auto ppd = build_ppd_splitting_labeling(inst);
        built_splittings.push_back(ppd);
        compare("labeling", ref.f_inf, pfdr_objective(build_labeling_problem(inst, SplitMode::pfdr), stop),
            pfdr_objective(build_labeling_problem(inst, SplitMode::pgfb), stop), ppd_objective(ppd, stop));
    }
    const double t = seconds_since(t0);
    o.require(t < 300.0, "took " + fmt(t) + " s");
    if (o.passed) o.detail = "relative gaps" + summary + ", " + fmt(t) + " s";
    return o;
}

struct IterateAudit {
    index_t iterates = 0;
    index_t violations = 0;
    bool domain_signal = false;
};

IterateAudit audit(const SplitProblem& p, const std::function<bool(const Vector&)>& feasible, index_t iters)
{
    IterateAudit a;
    SolveConfig cfg;
    cfg.stop = StoppingRule::iterations();
    cfg.max_iters = iters;
    cfg.log_every = 0;
    cfg.log_residual = false;
    cfg.observer = [&](const SolverState& s) {
        ++a.iterates;
        if (!feasible(s.x)) ++a.violations;
    };
    try {
        solve(p, cfg);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::domain_violation) throw;
        a.domain_signal = true;
    }
    return a;
}

Outcome criterion_feasibility()
{
    Outcome o;
    const index_t iters = 2000;
    index_t pgfb_violations = 0, pgfb_signals = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto lab = seed == 0 ? labeling_grid() : synth_labeling(seed, 64, 3, 0.2);
        const index_t K = lab.K;
        auto simplices = [K](const Vector& x) { return on_simplices_exact(x, K); };
        const auto a = audit(build_labeling_problem(lab, SplitMode::pfdr), simplices, iters);
        o.require(!a.domain_signal && a.violations == 0 && a.iterates == iters,
            "labeling seed " + std::to_string(seed) + ": PFDR left the simplices");
        const auto b = audit(build_labeling_problem(lab, SplitMode::pgfb), simplices, iters);
        pgfb_violations += b.violations;
        pgfb_signals += b.domain_signal;

        const auto eeg = seed == 0 ? eeg_chain() : synth_eeg(seed, 40, 16, 6, 0.01);
        const auto p = build_eeg_problem(eeg, SplitMode::pfdr);
        index_t zeros = 0;
        SolveConfig cfg;
        cfg.stop = StoppingRule::iterations();
        cfg.max_iters = iters;
        cfg.log_every = 0;
        cfg.log_residual = false;
        bool ok = true;
        cfg.observer = [&](const SolverState& s) {
            ok = ok && nonnegative(s.x);
            // coordinates whose aggregate sum_i W_i z_i sits below the l1 threshold are exact zeros
            Vector u(p.dim(), 0.0);
            for (index_t i = 0; i < p.num_blocks(); ++i) {
                const auto& support = p.layout.blocks[i].support;
                for (index_t t = 0; t < support.size(); ++t) u[support[t]] += p.weights.per_block[i][t] * s.z[i][t];
            }
            for (index_t j = 0; j < p.dim(); ++j) {
                const double threshold = eeg.lambda_l1[j] * p.gamma[j];
                if (u[j] < threshold - 1e-12 * (1.0 + std::abs(threshold))) ok = ok && s.x[j] == 0.0;
            }
            zeros = index_t(std::count(s.x.begin(), s.x.end(), 0.0));
        };
        solve(p, cfg);
        o.require(ok, "eeg seed " + std::to_string(seed) + ": PFDR iterate not exactly nonnegative");
        o.require(zeros > 0, "eeg seed " + std::to_string(seed) + ": no exact zeros in the final iterate");
        const auto c = audit(build_eeg_problem(eeg, SplitMode::pgfb), [](const Vector& x) { return nonnegative(x); }, iters);
        pgfb_violations += c.violations;
    }
    o.require(pgfb_violations + pgfb_signals > 0, "no PGFB iterate left the constraint set");
    if (o.passed) {
        o.detail = "PFDR exact on every iterate; PGFB infeasible iterates " + std::to_string(pgfb_violations) +
            ", domain signals " + std::to_string(pgfb_signals);
    }
    return o;
}

Outcome criterion_fejer()
{
    Outcome o;
    std::string summary;
    auto run = [&](const std::string& name, const SplitProblem& p) {
        const auto ref = reference_solution(p);
        SolveConfig cfg;
        cfg.stop = StoppingRule::iterations();
        cfg.max_iters = 5000;
        cfg.log_every = 0;
        cfg.log_residual = false;
        double prev = infinity, first = -1.0, worst = 0.0;
        cfg.observer = [&](const SolverState& s) {
            const double d = fejer_distance(s, ref.z, p);
            if (first < 0) first = d;
            worst = std::max(worst, (d - prev) / first);
            prev = d;
        };
        solve(p, cfg);
        o.require(worst <= 1e-10, name + ": increase of " + fmt(worst) + " relative to the initial distance");
        summary += " " + name + "=" + fmt(worst);
    };
    run("eeg", build_eeg_problem(eeg_chain(), SplitMode::pfdr));
    run("labeling", build_labeling_problem(labeling_grid(), SplitMode::pfdr));
    if (o.passed) o.detail = "largest relative increase" + summary;
    return o;
}

Outcome criterion_errors()
{
    Outcome o;
    std::string summary;
    auto run = [&](const std::string& name, const SplitProblem& p) {
        SolveConfig cfg;
        cfg.stop = StoppingRule::iterations();
        cfg.max_iters = 10000;
        cfg.log_every = 0;
        cfg.log_residual = false;
        const auto clean = solve(p, cfg);
        cfg.errors = ErrorInjection{0.1, 2.0, 7};
        const auto noisy = solve(p, cfg);
        const double fc = p.objective(clean.x), fn = p.objective(readout(noisy.state, p));
        const double rel = std::abs(fn - fc) / std::abs(fc);
        o.require(rel < 1e-5, name + ": relative difference " + fmt(rel));
        summary += " " + name + "=" + fmt(rel);
    };
    run("eeg", build_eeg_problem(eeg_chain(), SplitMode::pfdr));
    run("labeling", build_labeling_problem(labeling_grid(), SplitMode::pfdr));
    if (o.passed) o.detail = "relative differences" + summary;
    return o;
}

Outcome criterion_guards()
{
    Outcome o;
    const auto p = build_eeg_problem(eeg_chain(), SplitMode::pfdr);
    auto refused = [&](const SplitProblem& q, std::optional<double> rho, const std::string& needle) {
        SolveConfig cfg;
        cfg.rho = rho;
        bool stepped = false;
        cfg.observer = [&](const SolverState&) { stepped = true; };
        try {
            solve(q, cfg);
        } catch (const Error& e) {
            const std::string msg = e.what();
            o.require(e.code() == ErrorCode::hypothesis_violation, "wrong error code: " + msg);
            o.require(msg.find(needle) != std::string::npos, "message lacks '" + needle + "': " + msg);
            o.require(!stepped, "iterated before refusing");
            return;
        }
        o.require(false, "accepted a configuration violating " + needle);
    };
    const double bound = rho_upper_bound(p);
    for (double rho : {bound, 1.5 * bound, 0.0, -1.0}) refused(p, rho, "relaxation range");
    auto bad_weights = p;
    bad_weights.weights.per_block[0][0] += 1e-6;
    refused(bad_weights, std::nullopt, "(P2)(iv)");
    auto negative = p;
    negative.weights.per_block[1][0] = -negative.weights.per_block[1][0];
    refused(negative, std::nullopt, "(P2)");
    if (o.passed) o.detail = "rho in {bound, 1.5 bound, 0, -1} and weight perturbations refused before iteration 0";
    return o;
}

double cost_of(const Vector& a, std::uint32_t mask)
{
    double cost = 0.0;
    for (int side = 0; side < 2; ++side) {
        double s = 0.0, n = 0.0;
        for (index_t i = 0; i < a.size(); ++i) {
            if (bool(mask >> i & 1u) == bool(side)) {
                s += a[i];
                n += 1.0;
            }
        }
        for (index_t i = 0; i < a.size(); ++i) {
            if (n > 0 && bool(mask >> i & 1u) == bool(side)) cost += (a[i] - s / n) * (a[i] - s / n);
        }
    }
    return cost;
}

Outcome criterion_metrics()
{
    Outcome o;
    const Vector a{1, 1, 1, 1, 0, 0, 0, 0, 0}, b{1, 1, 1, 0, 1, 1, 1, 0, 0};
    o.require(dice_score(a, a) == 1.0, "dice of identical supports");
    o.require(dice_score(Vector{1, 0}, Vector{0, 1}) == 0.0, "dice of disjoint supports");
    o.require(std::abs(dice_score(a, b) - 0.6) < 1e-15, "dice 4/6/3 example");
    o.require(approx_support_2means(Vector{0, 0, 5, 5}).members == std::vector<index_t>{2, 3}, "2-means {0,0,5,5}");
    o.require(approx_support_2means(Vector(4, 0.0)).members.empty(), "2-means on zeros");
    const std::vector<int> gt{0, 0, 1, 1}, ones{0, 0, 0, 0};
    const std::vector<index_t> all{0, 1, 2, 3};
    o.require(avg_f1(gt, gt, all, 2) == 1.0, "avg_f1 perfect");
    o.require(std::abs(avg_f1(ones, gt, all, 2) - 1.0 / 3.0) < 1e-15, "avg_f1 constant prediction");
    o.require(entropy_uncertainty(Vector{0, 1, 0}, 3)[0] == 0.0, "entropy of a one-hot");
    o.require(std::abs(entropy_uncertainty(Vector(4, 0.25), 4)[0] - std::log(4.0)) < 1e-15, "entropy uniform");
    const long double h = -0.9L * std::log(0.9L) - 0.1L * std::log(0.1L);
    o.require(std::abs(entropy_uncertainty(Vector{0.9, 0.1}, 2)[0] - double(h)) < 1e-15, "entropy (0.9, 0.1)");

    Gen gen(10);
    index_t cases = 0;
    for (index_t n = 2; n <= 12; ++n) {
        for (int t = 0; t < 60; ++t) {
            Vector x = gen.vec(n, -3, 3);
            if (t % 3 == 0) {
                for (double& v : x) v = std::round(v);
            }
            Vector mag(n);
            for (index_t i = 0; i < n; ++i) mag[i] = std::abs(x[i]);
            double best = infinity;
            for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) best = std::min(best, cost_of(mag, mask));
            std::uint32_t mask = 0;
            for (index_t v : approx_support_2means(x).members) mask |= 1u << v;
            const bool degenerate = mask == 0 || mask + 1 == (1u << n);
            const double got = degenerate ? 0.0 : cost_of(mag, mask);
            o.require(degenerate ? best == 0.0 : std::abs(got - best) <= 1e-12 * (1 + best),
                "2-means differs from exhaustive enumeration at n = " + std::to_string(n));
            ++cases;
        }
    }
    if (o.passed) o.detail = "examples exact; 2-means optimal on " + std::to_string(cases) + " inputs, n <= 12";
    return o;
}

Outcome criterion_ppd_norm()
{
    Outcome o;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        built_splittings.push_back(build_ppd_splitting_eeg(synth_eeg(seed, 20 + 5 * seed, 10, 4, 0.01)));
        built_splittings.push_back(build_ppd_splitting_labeling(synth_labeling(seed, 16 + 4 * seed, 2 + seed % 3, 0.2)));
    }
    double worst = 0.0;
    for (const auto& s : built_splittings) {
        const double n = scaled_operator_norm(s.lambda, s.precond);
        worst = std::max(worst, n);
        o.require(n <= 1.0 + 1e-10, "scaled norm " + fmt(n));
    }
    if (o.passed) {
        o.detail = "largest scaled norm " + fmt(worst) + " over " + std::to_string(built_splittings.size()) + " splittings";
    }
    return o;
}

Outcome criterion_determinism()
{
    Outcome o;
    const auto dir = fs::temp_directory_path() / "pfdr_acceptance_cli";
    fs::remove_all(dir);
    const auto eeg = dir / "eeg", lab = dir / "lab";
    o.require(run_cli("synth --family eeg --seed 5 --vertices 50 --observations 20 --out " + eeg.string(), dir).status == 0,
        "synth eeg failed");
    o.require(run_cli("synth --family labeling --seed 5 --vertices 100 --K 3 --out " + lab.string(), dir).status == 0,
        "synth labeling failed");
    index_t compared = 0;
    auto compare = [&](const std::string& args, const std::string& tag) {
        std::vector<std::string> logs, solutions;
        for (const std::string threads : {"1", "4", "1"}) {
            const auto out = dir / (tag + "_" + std::to_string(logs.size()));
            const auto r = run_cli(args + " --threads " + threads + " --out " + out.string(), dir);
            o.require(r.status == 0, tag + ": " + r.output);
            logs.push_back(drop_column(slurp(out / "log.csv"), "time_s"));
            solutions.push_back(slurp(out / "solution.txt"));
        }
        o.require(!logs[0].empty() && logs[0] == logs[1] && logs[0] == logs[2], tag + ": logs differ");
        o.require(!solutions[0].empty() && solutions[0] == solutions[1] && solutions[0] == solutions[2],
            tag + ": solutions differ");
        ++compared;
    };
    for (const std::string solver : {"pfdr", "pgfb", "ppd"}) {
        compare("solve --solver " + solver + " --instance " + eeg.string() + " --stop iters=500 --seed 3", "eeg_" + solver);
    }
    compare("solve --solver pfdr --instance " + eeg.string() + " --stop iters=500 --seed 3 --inject-errors 0.1,2",
        "eeg_errors");
    compare("solve --solver pfdr --instance " + lab.string() + " --stop iters=500 --seed 3", "labeling_pfdr");
    compare("solve --solver ppd --instance " + lab.string() + " --stop iters=500 --seed 3", "labeling_ppd");
    if (o.passed) o.detail = std::to_string(compared) + " configurations identical across --threads 1, 4, 1";
    return o;
}

} // namespace

int main()
{
    const std::pair<const char*, Outcome (*)()> criteria[] = {
        {"prox oracle suite", criterion_prox},
        {"gradient and cocoercivity suite", criterion_gradients},
        {"reduction identities", criterion_reductions},
        {"fixed-point certification", criterion_fixed_point},
        {"cross-solver agreement", criterion_agreement},
        {"per-iteration constraints", criterion_feasibility},
        {"Fejer monotonicity", criterion_fejer},
        {"error robustness", criterion_errors},
        {"guard behavior", criterion_guards},
        {"metrics suite", criterion_metrics},
        {"PPD preconditioners", criterion_ppd_norm},
        {"determinism", criterion_determinism},
    };
    int failures = 0, n = 0;
    for (const auto& [name, run] : criteria) {
        ++n;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.passed;
        std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << n << ": " << name << " (" << o.detail << "; "
                  << fmt(seconds_since(t0)) << " s)" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
