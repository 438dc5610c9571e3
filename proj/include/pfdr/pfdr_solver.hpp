#pragma once
/*=============================================================================
 * Preconditioned forward-Douglas-Rachford iteration. With p = 2x - Gamma B x,
 *
 *     z_i <- z_i + rho (J_i(p^{H_i} - z_i) - x^{H_i})    for each block i,
 *     x   <- J_C(sum_i W_i z_i),
 *
 * where J_i is the prox of g_i in metric Gamma^-1 W_i and J_C the prox of h in
 * metric Gamma^-1. Optional errors b_k (gradient), a_{i,k} (block resolvents)
 * and c_k (full-term resolvent) are injected as in the perturbed recursion.
 *
 * Block updates write disjoint z_i and may run in parallel; the aggregation
 * sum_i W_i z_i is reduced per coordinate in block order, so results do not
 * depend on the number of threads.
 *===========================================================================*/

#include <chrono>
#include <random>
#include <sstream>

#include "convergence_log.hpp"
#include "split_problem.hpp"

namespace pfdr {

struct SolverState {
    std::vector<Vector> z;   // z_i stored on the support of block i
    Vector x;
    index_t k = 0;
};

struct StepErrors {
    Vector gradient;             // b_k, full dimension; empty for none
    Vector resolvent;            // c_k, full dimension; empty for none
    std::vector<Vector> blocks;  // a_{i,k} on block supports; empty for none
};

struct FixedPointResidual {
    double blocks = 0.0;      // max_i ||x^{H_i} - J_i((2x - Gamma B x)^{H_i} - z_i)||_inf
    double resolvent = 0.0;   // ||x - J_C(sum_i W_i z_i)||_inf
    double value() const noexcept { return std::max(blocks, resolvent); }
};

class PfdrIteration {
public:
    explicit PfdrIteration(const SplitProblem& problem, unsigned threads = 1)
        : problem_(problem), threads_(threads == 0 ? 1 : threads)
    {
        const index_t n = problem.dim();
        detail::require_same_size(problem.gamma.size(), n, "Gamma");
        detail::require_same_size(problem.block_prox.size(), problem.num_blocks(), "block prox");
        detail::require_same_size(problem.weights.per_block.size(), problem.num_blocks(),
            "splitting weights");
        gamma_inv_.resize(n);
        for (index_t j = 0; j < n; ++j) gamma_inv_[j] = 1.0 / problem.gamma[j];

        const auto& blocks = problem.layout.blocks;
        block_metric_.resize(blocks.size());
        in_.resize(blocks.size());
        out_.resize(blocks.size());
        std::vector<index_t> count(n + 1, 0);
        for (index_t i = 0; i < blocks.size(); ++i) {
            const auto& s = blocks[i].support;
            const auto& w = problem.weights.per_block[i];
            detail::require_same_size(w.size(), s.size(), "block weight");
            block_metric_[i].resize(s.size());
            for (index_t t = 0; t < s.size(); ++t) {
                block_metric_[i][t] = w[t] * gamma_inv_[s[t]];
                ++count[s[t] + 1];
            }
            in_[i].resize(s.size());
            out_[i].resize(s.size());
        }
        // per-coordinate incidence (block, offset) in block order
        for (index_t j = 0; j < n; ++j) count[j + 1] += count[j];
        incidence_start_ = count;
        incidence_.resize(count[n]);
        std::vector<index_t> fill(count.begin(), count.end() - 1);
        for (index_t i = 0; i < blocks.size(); ++i) {
            const auto& s = blocks[i].support;
            for (index_t t = 0; t < s.size(); ++t) incidence_[fill[s[t]]++] = {i, t};
        }
        grad_.assign(n, 0.0);
        p_.assign(n, 0.0);
        agg_.assign(n, 0.0);
    }

    const SplitProblem& problem() const noexcept { return problem_; }

    /* z_i = x0^{H_i} and x = J_C(sum_i W_i z_i); x0 = 0 when empty */
    SolverState initial_state(std::span<const double> x0 = {}) const
    {
        const index_t n = problem_.dim();
        Vector start(n, 0.0);
        if (!x0.empty()) {
            detail::require_same_size(x0.size(), n, "initial point");
            std::copy(x0.begin(), x0.end(), start.begin());
        }
        SolverState s;
        s.z.resize(problem_.num_blocks());
        for (index_t i = 0; i < problem_.num_blocks(); ++i) {
            const auto& sup = problem_.layout.blocks[i].support;
            s.z[i].resize(sup.size());
            for (index_t t = 0; t < sup.size(); ++t) s.z[i][t] = start[sup[t]];
        }
        s.x.assign(n, 0.0);
        Vector agg(n);
        aggregate(s, agg);
        apply_full_resolvent(agg, s.x);
        return s;
    }

    /* sum_i W_i z_i */
    void aggregate(const SolverState& s, std::span<double> out) const
    {
        const index_t n = problem_.dim();
        const auto& w = problem_.weights.per_block;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(threads_) if (threads_ > 1)
#endif
        for (std::ptrdiff_t jj = 0; jj < std::ptrdiff_t(n); ++jj) {
            const auto j = index_t(jj);
            double sum = 0.0;
            for (index_t r = incidence_start_[j]; r < incidence_start_[j + 1]; ++r) {
                const auto [i, t] = incidence_[r];
                sum += w[i][t] * s.z[i][t];
            }
            out[j] = sum;
        }
    }

    void step(SolverState& s, double rho, const StepErrors* errors = nullptr)
    {
        const index_t n = problem_.dim();
        check_state(s);
        forward_point(s.x, errors ? std::span<const double>(errors->gradient) : std::span<const double>{});

        const auto& blocks = problem_.layout.blocks;
        const bool block_errors = errors && !errors->blocks.empty();
        if (block_errors) detail::require_same_size(errors->blocks.size(), blocks.size(), "block errors");
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(threads_) if (threads_ > 1)
#endif
        for (std::ptrdiff_t ii = 0; ii < std::ptrdiff_t(blocks.size()); ++ii) {
            const auto i = index_t(ii);
            const auto& sup = blocks[i].support;
            auto& z = s.z[i];
            auto& in = in_[i];
            auto& out = out_[i];
            for (index_t t = 0; t < sup.size(); ++t) in[t] = p_[sup[t]] - z[t];
            if (problem_.block_prox[i]) {
                problem_.block_prox[i](in, block_metric_[i], out);
            } else {
                out = in;
            }
            for (index_t t = 0; t < sup.size(); ++t) {
                double update = out[t] - s.x[sup[t]];
                if (block_errors) update += errors->blocks[i][t];
                z[t] += rho * update;
            }
        }

        aggregate(s, agg_);
        apply_full_resolvent(agg_, s.x);
        if (errors && !errors->resolvent.empty()) {
            detail::require_same_size(errors->resolvent.size(), n, "resolvent error");
            for (index_t j = 0; j < n; ++j) s.x[j] += errors->resolvent[j];
        }
        ++s.k;
    }

    FixedPointResidual fixed_point_residual(const SolverState& s)
    {
        check_state(s);
        FixedPointResidual r;
        forward_point(s.x, {});
        const auto& blocks = problem_.layout.blocks;
        for (index_t i = 0; i < blocks.size(); ++i) {
            const auto& sup = blocks[i].support;
            auto& in = in_[i];
            auto& out = out_[i];
            for (index_t t = 0; t < sup.size(); ++t) in[t] = p_[sup[t]] - s.z[i][t];
            if (problem_.block_prox[i]) {
                problem_.block_prox[i](in, block_metric_[i], out);
            } else {
                out = in;
            }
            for (index_t t = 0; t < sup.size(); ++t) {
                r.blocks = std::max(r.blocks, std::abs(s.x[sup[t]] - out[t]));
            }
        }
        aggregate(s, agg_);
        Vector jc(problem_.dim());
        apply_full_resolvent(agg_, jc);
        for (index_t j = 0; j < jc.size(); ++j) r.resolvent = std::max(r.resolvent, std::abs(s.x[j] - jc[j]));
        return r;
    }

    /* ||z - z_ref|| in the metric sum_i Gamma^-1 W_i */
    double fejer_distance(const SolverState& s, std::span<const Vector> z_ref) const
    {
        detail::require_same_size(z_ref.size(), s.z.size(), "reference auxiliary variables");
        double sum = 0.0;
        for (index_t i = 0; i < s.z.size(); ++i) {
            detail::require_same_size(z_ref[i].size(), s.z[i].size(), "reference block");
            for (index_t t = 0; t < s.z[i].size(); ++t) {
                const double d = s.z[i][t] - z_ref[i][t];
                sum += block_metric_[i][t] * d * d;
            }
        }
        return std::sqrt(sum);
    }

    /* J_C(sum_i W_i z_i) without the resolvent error: the point the state
     * represents, feasible for h even when errors were injected */
    Vector readout(const SolverState& s) const
    {
        check_state(s);
        Vector agg(problem_.dim()), out(problem_.dim());
        aggregate(s, agg);
        apply_full_resolvent(agg, out);
        return out;
    }

    /* the last forward point p = 2x - Gamma (B x + b) */
    std::span<const double> forward_point() const noexcept { return p_; }

private:
    void check_state(const SolverState& s) const
    {
        detail::require_same_size(s.x.size(), problem_.dim(), "state x");
        detail::require_same_size(s.z.size(), problem_.num_blocks(), "state z");
    }

    void forward_point(std::span<const double> x, std::span<const double> grad_error)
    {
        const index_t n = problem_.dim();
        if (problem_.smooth) {
            problem_.smooth->gradient(x, grad_);
        } else {
            std::fill(grad_.begin(), grad_.end(), 0.0);
        }
        if (!grad_error.empty()) {
            detail::require_same_size(grad_error.size(), n, "gradient error");
            for (index_t j = 0; j < n; ++j) grad_[j] += grad_error[j];
        }
        for (index_t j = 0; j < n; ++j) p_[j] = 2.0 * x[j] - problem_.gamma[j] * grad_[j];
    }

    void apply_full_resolvent(std::span<const double> in, std::span<double> out) const
    {
        if (problem_.full_resolvent) {
            problem_.full_resolvent(in, gamma_inv_, out);
        } else {
            std::copy(in.begin(), in.end(), out.begin());
        }
    }

    struct Incidence {
        index_t block;
        index_t offset;
    };

    const SplitProblem& problem_;
    unsigned threads_;
    Vector gamma_inv_;
    std::vector<Vector> block_metric_;
    std::vector<Vector> in_, out_;
    std::vector<index_t> incidence_start_;
    std::vector<Incidence> incidence_;
    Vector grad_, p_, agg_;
};

/**  free-function forms  **/

inline SolverState pfdr_step(SolverState state, const SplitProblem& problem, double rho,
    const StepErrors* errors = nullptr)
{
    PfdrIteration it(problem);
    it.step(state, rho, errors);
    return state;
}

inline double fixed_point_residual(const SolverState& state, const SplitProblem& problem)
{
    PfdrIteration it(problem);
    return it.fixed_point_residual(state).value();
}

inline double fejer_distance(const SolverState& state, std::span<const Vector> z_ref,
    const SplitProblem& problem)
{
    PfdrIteration it(problem);
    return it.fejer_distance(state, z_ref);
}

inline Vector readout(const SolverState& state, const SplitProblem& problem)
{
    return PfdrIteration(problem).readout(state);
}

/**  solve  **/

struct StoppingRule {
    enum class Kind { rel_evol, max_evol, iterations };
    Kind kind = Kind::rel_evol;
    double threshold = 1e-6;

    static StoppingRule rel_evol(double t) { return {Kind::rel_evol, t}; }
    static StoppingRule max_evol(double t) { return {Kind::max_evol, t}; }
    static StoppingRule iterations() { return {Kind::iterations, 0.0}; }

    /* "rel-evol=<x>", "max-evol=<x>" or "iters=<n>"; for the latter, the
     * iteration count is returned through max_iters */
    static StoppingRule parse(const std::string& text, index_t* max_iters = nullptr)
    {
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_input, "stopping rule '" + text + "': expected key=value");
        }
        const std::string key = text.substr(0, eq), value = text.substr(eq + 1);
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_input, "stopping rule '" + text + "': bad value");
        }
        if (key == "rel-evol" || key == "max-evol") {
            if (!(v >= 0.0)) throw Error(ErrorCode::invalid_input, "stopping threshold must be >= 0");
            return key == "rel-evol" ? rel_evol(v) : max_evol(v);
        }
        if (key == "iters") {
            if (!(v >= 0.0) || v != std::floor(v)) {
                throw Error(ErrorCode::invalid_input, "iters must be a nonnegative integer");
            }
            if (max_iters) *max_iters = static_cast<index_t>(v);
            return iterations();
        }
        throw Error(ErrorCode::invalid_input, "unknown stopping rule '" + key + "'");
    }
};

/* relative and sup-norm evolution of the iterate */
struct Evolution {
    double relative = 0.0;
    double max = 0.0;
};

inline Evolution evolution(std::span<const double> x_old, std::span<const double> x_new)
{
    double diff2 = 0.0, norm2 = 0.0, dmax = 0.0;
    for (index_t j = 0; j < x_new.size(); ++j) {
        const double d = x_new[j] - x_old[j];
        diff2 += d * d;
        norm2 += x_new[j] * x_new[j];
        dmax = std::max(dmax, std::abs(d));
    }
    Evolution e;
    e.max = dmax;
    // 0/0 is left undefined so that a zero iterate never counts as converged
    if (norm2 > 0.0) {
        e.relative = std::sqrt(diff2 / norm2);
    } else {
        e.relative = diff2 > 0.0 ? infinity : std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

inline bool stop_reached(const StoppingRule& rule, const Evolution& e)
{
    switch (rule.kind) {
    case StoppingRule::Kind::rel_evol: return e.relative < rule.threshold;
    case StoppingRule::Kind::max_evol: return e.max < rule.threshold;
    case StoppingRule::Kind::iterations: return false;
    }
    return false;
}

/* perturbations of Euclidean norm magnitude / k^exponent, k >= 1 */
struct ErrorInjection {
    double magnitude = 0.1;
    double exponent = 2.0;
    std::uint64_t seed = 0;
    bool gradient = true;
    bool resolvent = true;
    bool blocks = true;
};

class ErrorGenerator {
public:
    ErrorGenerator(const ErrorInjection& config, const BlockLayout& layout)
        : config_(config), layout_(layout), rng_(config.seed)
    {
    }

    /* errors for the (k+1)-th step; returns norms of (b, c, a) */
    std::array<double, 3> generate(index_t k, StepErrors& e)
    {
        const double envelope = config_.magnitude / std::pow(double(k + 1), config_.exponent);
        std::array<double, 3> norms{0.0, 0.0, 0.0};
        auto draw = [&](Vector& v, index_t n) {
            v.resize(n);
            for (double& c : v) c = unif_(rng_);
        };
        auto scale = [&](std::span<double> v, double total_norm) {
            for (double& c : v) c *= envelope / total_norm;
        };
        if (config_.gradient) {
            draw(e.gradient, layout_.dim);
            const double nv = detail::norm2(e.gradient);
            if (nv > 0.0) scale(e.gradient, nv);
            norms[0] = detail::norm2(e.gradient);
        }
        if (config_.resolvent) {
            draw(e.resolvent, layout_.dim);
            const double nv = detail::norm2(e.resolvent);
            if (nv > 0.0) scale(e.resolvent, nv);
            norms[1] = detail::norm2(e.resolvent);
        }
        if (config_.blocks) {
            e.blocks.resize(layout_.blocks.size());
            double sq = 0.0;
            for (index_t i = 0; i < layout_.blocks.size(); ++i) {
                draw(e.blocks[i], layout_.blocks[i].support.size());
                for (double c : e.blocks[i]) sq += c * c;
            }
            const double nv = std::sqrt(sq);
            if (nv > 0.0) {
                for (auto& b : e.blocks) scale(b, nv);
            }
            norms[2] = nv > 0.0 ? envelope : 0.0;
        }
        return norms;
    }

private:
    ErrorInjection config_;
    const BlockLayout& layout_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unif_{-1.0, 1.0};
};

struct SolveConfig {
    std::optional<double> rho;                        // constant; default_rho() if unset
    std::function<double(index_t)> rho_schedule;      // varying rho_k, overrides rho
    StoppingRule stop = StoppingRule::rel_evol(1e-6);
    index_t max_iters = 10000;
    index_t log_every = 1;                            // 0: first and last only
    bool log_residual = true;
    std::optional<ErrorInjection> errors;
    Vector x0;
    unsigned threads = 1;
    std::function<void(const SolverState&)> observer; // called after every step
};

struct SolveResult {
    Vector x;
    SolverState state;
    ConvergenceLog log;
    index_t iterations = 0;
    bool converged = false;   // stopping rule fired before the cap
    double time_s = 0.0;      // time spent in the iteration only
};

inline SolveResult solve(const SplitProblem& problem, const SolveConfig& config)
{
    const double rho0 = config.rho.value_or(default_rho(problem));
    require_hypotheses(problem, config.rho_schedule ? config.rho_schedule(0) : rho0);
    const double rho_upper = rho_upper_bound(problem);

    PfdrIteration it(problem, config.threads);
    SolveResult res;
    res.state = it.initial_state(config.x0);
    std::optional<ErrorGenerator> gen;
    if (config.errors) gen.emplace(*config.errors, problem.layout);
    StepErrors errors;

    auto objective = [&](std::span<const double> x) {
        return problem.objective ? problem.objective(x) : std::numeric_limits<double>::quiet_NaN();
    };
    auto record = [&](double rel, double mx) {
        LogRecord r;
        r.iter = res.state.k;
        r.time_s = res.time_s;
        r.objective = objective(res.state.x);
        r.rel_evol = rel;
        r.max_evol = mx;
        r.fp_residual = config.log_residual ? it.fixed_point_residual(res.state).value()
                                            : std::numeric_limits<double>::quiet_NaN();
        res.log.add(r);
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    record(nan, nan);

    Vector x_old;
    Evolution evol{nan, nan};
    bool logged_last = true;
    while (res.state.k < config.max_iters) {
        const double rho = config.rho_schedule ? config.rho_schedule(res.state.k) : rho0;
        if (!(rho > 0.0 && rho < rho_upper)) {
            throw Error(ErrorCode::hypothesis_violation,
                "rho_" + std::to_string(res.state.k) + " = " + format_real(rho) + " outside ]0, " +
                    format_real(rho_upper) + "[ (relaxation range)");
        }
        if (gen) res.log.injected.push_back(gen->generate(res.state.k, errors));
        x_old = res.state.x;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            it.step(res.state, rho, gen ? &errors : nullptr);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::domain_violation) throw;
            throw Error(ErrorCode::domain_violation,
                "iteration " + std::to_string(res.state.k) + ": " + e.what());
        }
        res.time_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        evol = evolution(x_old, res.state.x);
        if (config.observer) config.observer(res.state);

        const bool done = stop_reached(config.stop, evol);
        logged_last = false;
        if (config.log_every > 0 && res.state.k % config.log_every == 0) {
            record(evol.relative, evol.max);
            logged_last = true;
        }
        if (done) {
            res.converged = true;
            break;
        }
    }
    if (!logged_last) record(evol.relative, evol.max);
    res.iterations = res.state.k;
    res.x = res.state.x;
    return res;
}

} // namespace pfdr
