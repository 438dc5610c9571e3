// Command-line driver: synthesize instance bundles, run the splitting
// solvers, benchmark them against a long reference run, and regenerate the
// oracle checks.
//
//   pfdr synth --family eeg --out inst/
//   pfdr solve --instance inst/ --solver pfdr --stop rel-evol=1e-6 --out run/
//   pfdr bench --instance inst/ --out bench/
//   pfdr oracle-check
//
// Exit codes: 0 ok, 1 runtime failure, 2 invalid input, 3 hypothesis
// violation, 4 oracle failure.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "pfdr/pfdr.hpp"

namespace fs = std::filesystem;
using namespace pfdr;

namespace {

enum Exit { ok = 0, runtime_failure = 1, invalid_input = 2, hypothesis_failure = 3, oracle_failure = 4 };

int exit_code(ErrorCode code)
{
    switch (code) {
    case ErrorCode::hypothesis_violation: return hypothesis_failure;
    case ErrorCode::no_feasible_point: return oracle_failure;
    case ErrorCode::domain_violation: return runtime_failure;
    default: return invalid_input;
    }
}

struct SynthArgs {
    std::string family = "eeg";
    std::uint64_t seed = 0;
    index_t vertices = 50;
    index_t observations = 20;
    index_t support = 8;
    double noise = 0.01;
    double lambda_tv = 0.1;
    double lambda_l1 = 0.05;
    index_t K = 3;
    double flip = 0.2;
    double beta = 0.1;
    double lambda = 0.1;
    index_t train_per_class = 3;
    std::string out;
};

struct RunArgs {
    std::string instance;
    std::string solver = "pfdr";
    std::vector<std::string> stops;
    std::optional<double> rho;
    double eta = 0.9;
    double reserve = 0.2;
    std::string gamma_mode = "strict";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out;
    std::string inject;
    index_t max_iters = 10000;
    index_t log_every = 1;
    index_t ref_iters = reference_iterations;
};

BuildOptions build_options(const RunArgs& a)
{
    BuildOptions o;
    o.eta = a.eta;
    o.reserve = a.reserve;
    if (a.gamma_mode == "strict") {
        o.gamma_mode = GammaMode::strict;
    } else if (a.gamma_mode == "jacobi") {
        o.gamma_mode = GammaMode::jacobi;
    } else {
        throw Error(ErrorCode::invalid_input, "--gamma-mode must be 'strict' or 'jacobi'");
    }
    return o;
}

std::optional<ErrorInjection> parse_injection(const std::string& text, std::uint64_t seed)
{
    if (text.empty()) return std::nullopt;
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::invalid_input, "--inject-errors expects 'c,s'");
    ErrorInjection e;
    e.magnitude = io::detail::parse_real(text.substr(0, comma), "--inject-errors c");
    e.exponent = io::detail::parse_real(text.substr(comma + 1), "--inject-errors s");
    if (!(e.magnitude >= 0.0)) throw Error(ErrorCode::invalid_input, "--inject-errors: c must be >= 0");
    e.seed = seed;
    return e;
}

/* split problem of the requested configuration */
SplitProblem split_problem(const io::Bundle& b, SplitMode mode, const BuildOptions& o)
{
    return b.family == io::Family::eeg ? build_eeg_problem(b.eeg, mode, o)
                                       : build_labeling_problem(b.labeling, mode, o);
}

PrimalDualSplitting pd_splitting(const io::Bundle& b)
{
    return b.family == io::Family::eeg ? build_ppd_splitting_eeg(b.eeg) : build_ppd_splitting_labeling(b.labeling);
}

bool feasible(const io::Bundle& b, std::span<const double> x)
{
    return b.family == io::Family::eeg ? nonnegative(x) : on_simplices_exact(x, b.labeling.K);
}

struct Run {
    Vector x;
    ConvergenceLog log;
    index_t iterations = 0;
    double time_s = 0.0;
    index_t infeasible_iterates = 0;
};

Run run_solver(const io::Bundle& b, const RunArgs& a, const StoppingRule& stop, index_t max_iters)
{
    Run r;
    if (a.solver == "ppd") {
        const auto s = pd_splitting(b);
        PpdConfig c;
        c.stop = stop;
        c.max_iters = max_iters;
        c.log_every = a.log_every;
        auto res = ppd_solve(s, c);
        r.x = std::move(res.x);
        r.log = std::move(res.log);
        r.iterations = res.iterations;
        r.time_s = res.time_s;
        r.infeasible_iterates = feasible(b, r.x) ? 0 : 1;
        return r;
    }
    SplitMode mode;
    if (a.solver == "pfdr") {
        mode = SplitMode::pfdr;
    } else if (a.solver == "pgfb") {
        mode = SplitMode::pgfb;
    } else {
        throw Error(ErrorCode::invalid_input, "--solver must be pfdr, pgfb or ppd");
    }
    const auto problem = split_problem(b, mode, build_options(a));
    SolveConfig c;
    c.rho = a.rho;
    c.stop = stop;
    c.max_iters = max_iters;
    c.log_every = a.log_every;
    c.threads = a.threads;
    c.errors = parse_injection(a.inject, a.seed);
    c.observer = [&](const SolverState& s) {
        if (!feasible(b, s.x)) ++r.infeasible_iterates;
    };
    auto res = solve(problem, c);
    r.x = std::move(res.x);
    r.log = std::move(res.log);
    r.iterations = res.iterations;
    r.time_s = res.time_s;
    return r;
}

StoppingRule parse_stop(const std::string& text, index_t& max_iters)
{
    return StoppingRule::parse(text, &max_iters);
}

void write_log(const fs::path& path, const ConvergenceLog& log, std::optional<double> f_inf = std::nullopt)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    write_log_csv(out, log, f_inf);
}

int cmd_synth(const SynthArgs& a)
{
    if (a.out.empty()) throw Error(ErrorCode::invalid_input, "synth: --out is required");
    if (a.family == "eeg") {
        const auto inst = synth_eeg(a.seed, a.vertices, a.observations, a.support, a.noise,
            SynthEegOptions{a.lambda_tv, a.lambda_l1});
        io::write_bundle(a.out, inst);
    } else if (a.family == "labeling") {
        const auto inst = synth_labeling(a.seed, a.vertices, a.K, a.flip,
            SynthLabelingOptions{a.beta, a.lambda, a.train_per_class});
        io::write_bundle(a.out, inst);
    } else {
        throw Error(ErrorCode::invalid_input, "--family must be 'eeg' or 'labeling'");
    }
    std::cout << "wrote " << a.family << " instance to " << a.out << '\n';
    return ok;
}

int cmd_solve(const RunArgs& a)
{
    if (a.instance.empty()) throw Error(ErrorCode::invalid_input, "solve: --instance is required");
    if (a.stops.size() > 1) throw Error(ErrorCode::invalid_input, "solve: give a single --stop");
    const auto bundle = io::read_bundle(a.instance);
    index_t max_iters = a.max_iters;
    const auto stop = parse_stop(a.stops.empty() ? "rel-evol=1e-6" : a.stops.front(), max_iters);
    const auto run = run_solver(bundle, a, stop, max_iters);

    const fs::path out = a.out.empty() ? fs::path(".") : fs::path(a.out);
    fs::create_directories(out);
    write_log(out / "log.csv", run.log);
    io::write_vector(out / "solution.txt", run.x);
    const auto& last = run.log.records.back();
    std::cout << std::setprecision(17) << "solver " << a.solver << "\niterations " << run.iterations
              << "\nobjective " << last.objective << "\ntime_s " << run.time_s << '\n';
    return ok;
}

struct LevelRow {
    std::string solver, stop;
    index_t iterations = 0;
    double time_s = 0.0, objective = 0.0, gap = 0.0, m1 = 0.0, m2 = 0.0;
    index_t infeasible = 0;
    std::string status = "ok";
};

void metric_scores(const io::Bundle& b, std::span<const double> x, LevelRow& row)
{
    if (b.family == io::Family::eeg) {
        if (b.eeg.x_true.empty()) {
            row.m1 = row.m2 = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        row.m1 = dice_score(x, b.eeg.x_true);
        const auto s = approx_support_2means(x);
        Vector indicator(x.size(), 0.0);
        for (index_t v : s.members) indicator[v] = 1.0;
        row.m2 = dice_score(indicator, b.eeg.x_true);
    } else {
        const auto& inst = b.labeling;
        if (inst.labels_true.empty()) {
            row.m1 = row.m2 = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        const auto labels = argmax_labels(x, inst.K);
        std::vector<index_t> all(inst.num_vertices());
        std::iota(all.begin(), all.end(), index_t{0});
        row.m1 = avg_f1(labels, inst.labels_true, all, inst.K);
        row.m2 = inst.training.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : avg_f1(labels, inst.labels_true, inst.training, inst.K);
    }
}

int cmd_bench(RunArgs a)
{
    if (a.instance.empty()) throw Error(ErrorCode::invalid_input, "bench: --instance is required");
    const auto bundle = io::read_bundle(a.instance);
    const bool eeg = bundle.family == io::Family::eeg;
    std::vector<std::string> levels = a.stops;
    if (levels.empty()) {
        levels = eeg ? std::vector<std::string>{"rel-evol=1e-3", "rel-evol=1e-4", "rel-evol=1e-5", "rel-evol=1e-6"}
                     : std::vector<std::string>{"max-evol=1e-2", "max-evol=1e-3", "max-evol=1e-4", "max-evol=1e-5"};
    }
    const fs::path out = a.out.empty() ? fs::path(".") : fs::path(a.out);
    fs::create_directories(out);

    const auto reference_problem = split_problem(bundle, SplitMode::pfdr, build_options(a));
    const auto ref = reference_solution(reference_problem, a.ref_iters, a.threads);
    std::cout << std::setprecision(17) << "F_inf " << ref.f_inf << " (" << a.ref_iters << " iterations)\n";

    std::vector<LevelRow> rows;
    for (const std::string solver : {"pfdr", "pgfb", "ppd"}) {
        RunArgs sa = a;
        sa.solver = solver;
        for (index_t l = 0; l < levels.size(); ++l) {
            index_t max_iters = a.max_iters;
            const auto stop = parse_stop(levels[l], max_iters);
            LevelRow row;
            row.solver = solver;
            row.stop = levels[l];
            Run run;
            try {
                run = run_solver(bundle, sa, stop, max_iters);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::domain_violation) throw;
                row.status = "domain-violation";
                rows.push_back(row);
                std::cerr << solver << " " << levels[l] << ": " << e.what() << '\n';
                continue;
            }
            row.iterations = run.iterations;
            row.time_s = run.time_s;
            row.objective = run.log.records.back().objective;
            row.gap = row.objective - ref.f_inf;
            row.infeasible = run.infeasible_iterates;
            metric_scores(bundle, run.x, row);
            rows.push_back(row);
            if (l + 1 == levels.size()) write_log(out / (solver + ".csv"), run.log, ref.f_inf);
        }
    }

    std::ofstream summary(out / "summary.csv");
    if (!summary) throw Error(ErrorCode::io_error, "cannot write summary.csv");
    summary.precision(17);
    const std::string metric_cols = eeg ? "dice,dice_a" : "avg_f1,avg_f1_train";
    summary << "solver,stop,iterations,time_s,objective,F_minus_Finf," << metric_cols << ",infeasible_iterates,status\n";
    std::cout << std::left << std::setw(6) << "solver" << std::setw(16) << "stop" << std::setw(8) << "iters"
              << std::setw(14) << "F - F_inf" << std::setw(10) << (eeg ? "DS" : "F1") << std::setw(10)
              << (eeg ? "DS_a" : "F1_train") << "time (s)\n";
    for (const auto& r : rows) {
        summary << r.solver << ',' << r.stop << ',' << r.iterations << ',' << r.time_s << ',' << r.objective << ','
                << r.gap << ',' << r.m1 << ',' << r.m2 << ',' << r.infeasible << ',' << r.status << '\n';
        std::cout << std::setprecision(4) << std::setw(6) << r.solver << std::setw(16) << r.stop << std::setw(8)
                  << r.iterations << std::setw(14) << r.gap << std::setw(10) << r.m1 << std::setw(10) << r.m2
                  << r.time_s << (r.status == "ok" ? "" : "  " + r.status) << '\n';
    }
    return ok;
}

int cmd_oracle_check(std::uint64_t seed, double perturbation)
{
    OracleCheckOptions o;
    o.seed = seed;
    o.perturbation = perturbation;
    bool all = true;
    for (const auto& c : run_oracle_checks(o)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  instances=" << c.instances
                  << " worst=" << std::setprecision(3) << c.worst << " tol=" << c.tolerance;
        if (!c.passed) std::cout << "  (" << c.detail << ")";
        std::cout << '\n';
        all = all && c.passed;
    }
    return all ? ok : oracle_failure;
}

/* values from --config files are inserted before the remaining arguments of
 * the subcommand, so explicit flags override them */
std::vector<std::string> expand_config(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    for (index_t i = 0; i < args.size(); ++i) {
        std::string path;
        index_t span = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            span = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            span = 1;
        } else {
            continue;
        }
        std::vector<std::string> injected;
        for (const auto& [key, value] : io::read_config(fs::path(path))) {
            injected.push_back("--" + key);
            injected.push_back(value);
        }
        args.erase(args.begin() + std::ptrdiff_t(i), args.begin() + std::ptrdiff_t(i + span));
        args.insert(args.begin() + 1, injected.begin(), injected.end());
        break;
    }
    std::reverse(args.begin(), args.end());   // CLI11 expects reversed vectors
    return args;
}

void add_run_options(CLI::App* sub, RunArgs& a)
{
    sub->add_option("--instance", a.instance, "instance bundle directory");
    sub->add_option("--stop", a.stops, "rel-evol=<x> | max-evol=<x> | iters=<n>")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--rho", a.rho, "constant relaxation");
    sub->add_option("--eta", a.eta, "||L^1/2 Gamma L^1/2|| = 2 eta");
    sub->add_option("--reserve", a.reserve, "extra block weight in the pgfb configuration");
    sub->add_option("--gamma-mode", a.gamma_mode, "strict | jacobi (least-squares family)");
    sub->add_option("--seed", a.seed, "seed of every random draw");
    sub->add_option("--threads", a.threads, "parallel width of the per-block phases");
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--inject-errors", a.inject, "c,s: perturbations of norm c / k^s");
    sub->add_option("--max-iters", a.max_iters, "iteration cap");
    sub->add_option("--log-every", a.log_every, "log cadence (0: first and last only)");
    sub->add_option("--config", "key = value file (flag names without dashes)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"preconditioned forward-Douglas-Rachford solver suite"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "write a synthetic instance bundle");
    synth->add_option("--family", sy.family, "eeg | labeling");
    synth->add_option("--seed", sy.seed);
    synth->add_option("--vertices", sy.vertices);
    synth->add_option("--observations", sy.observations, "eeg: rows of Phi");
    synth->add_option("--support", sy.support, "eeg: planted support size");
    synth->add_option("--noise", sy.noise, "eeg: observation noise level");
    synth->add_option("--lambda-tv", sy.lambda_tv, "eeg: total variation weight");
    synth->add_option("--lambda-l1", sy.lambda_l1, "eeg: l1 weight");
    synth->add_option("--K", sy.K, "labeling: number of labels");
    synth->add_option("--flip", sy.flip, "labeling: label flip probability");
    synth->add_option("--beta", sy.beta, "labeling: smoothing");
    synth->add_option("--lambda", sy.lambda, "labeling: total variation weight");
    synth->add_option("--train-per-class", sy.train_per_class, "labeling: random training points per class");
    synth->add_option("--out", sy.out, "output directory");
    synth->add_option("--config", "key = value file");

    RunArgs ra;
    auto* solve_cmd = app.add_subcommand("solve", "run one solver on an instance bundle");
    solve_cmd->add_option("--solver", ra.solver, "pfdr | pgfb | ppd");
    add_run_options(solve_cmd, ra);

    RunArgs ba;
    auto* bench = app.add_subcommand("bench", "run all solvers against a reference solution");
    add_run_options(bench, ba);
    bench->add_option("--ref-iters", ba.ref_iters, "iterations of the reference run");

    std::uint64_t oracle_seed = 0;
    double perturbation = 0.0;
    auto* oracle = app.add_subcommand("oracle-check", "regenerate the oracle checks");
    oracle->add_option("--seed", oracle_seed);
    oracle->add_option("--perturb", perturbation, "relative perturbation of the soft-thresholding constant");

    try {
        auto args = expand_config(argc, argv);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : invalid_input;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    }

    try {
        if (*synth) return cmd_synth(sy);
        if (*solve_cmd) return cmd_solve(ra);
        if (*bench) return cmd_bench(ba);
        if (*oracle) return cmd_oracle_check(oracle_seed, perturbation);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return ok;
}
