#pragma once
/*=============================================================================
 * Brute-force references: box grid minimization in up to three dimensions,
 * central finite differences, and long-run reference solutions.
 *===========================================================================*/

#include <functional>

#include "pfdr_solver.hpp"

namespace pfdr {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct GridMinimum {
    Vector point;
    double value = infinity;
};

inline constexpr index_t grid_max_points = 200000;

namespace detail {

/* scan of the grid lo + t step, t = 0..count-1 per dimension; keeps the
 * first strict minimum in lexicographic order */
inline void grid_scan(const std::function<double(std::span<const double>)>& f,
    std::span<const double> lo, std::span<const double> step, std::span<const index_t> count,
    std::span<const Interval> box, GridMinimum& best)
{
    const index_t d = lo.size();
    std::vector<index_t> t(d, 0);
    Vector p(d);
    while (true) {
        for (index_t k = 0; k < d; ++k) p[k] = std::clamp(lo[k] + double(t[k]) * step[k], box[k].lo, box[k].hi);
        const double v = f(p);
        if (v < best.value) {
            best.value = v;
            best.point = p;
        }
        index_t k = 0;
        while (k < d && ++t[k] == count[k]) t[k++] = 0;
        if (k == d) break;
    }
}

} // namespace detail

/* Exhaustive scan of the box on a grid as fine as the point budget allows,
 * then windows of +-2 steps around the incumbent refined 10x per level until
 * the step is at most the resolution, followed by three more 10x passes. */
inline GridMinimum grid_minimize(const std::function<double(std::span<const double>)>& f,
    std::span<const Interval> box, double resolution)
{
    const index_t d = box.size();
    detail::require(d >= 1 && d <= 3, ErrorCode::invalid_input, "grid_minimize: dimension must be 1, 2 or 3");
    detail::require(resolution > 0.0, ErrorCode::invalid_input, "grid_minimize: resolution must be positive");
    for (const auto& b : box) {
        detail::require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo <= b.hi,
            ErrorCode::invalid_input, "grid_minimize: box must be finite and ordered");
    }
    const auto per_dim_cap = index_t(std::floor(std::pow(double(grid_max_points), 1.0 / double(d))));

    Vector lo(d), step(d);
    std::vector<index_t> count(d);
    double coarsest = 0.0;
    for (index_t k = 0; k < d; ++k) {
        const double width = box[k].hi - box[k].lo;
        const auto wanted = index_t(std::ceil(width / resolution)) + 1;
        count[k] = std::max<index_t>(1, std::min(wanted, per_dim_cap));
        lo[k] = box[k].lo;
        step[k] = count[k] > 1 ? width / double(count[k] - 1) : 0.0;
        coarsest = std::max(coarsest, step[k]);
    }
    GridMinimum best;
    detail::grid_scan(f, lo, step, count, box, best);
    if (!std::isfinite(best.value)) {
        throw Error(ErrorCode::no_feasible_point, "grid_minimize: objective infinite on the whole grid");
    }

    int extra_passes = 3;
    double h = coarsest;
    while (h > 0.0 && extra_passes > 0) {
        if (h <= resolution) --extra_passes;
        const double h_old = h;
        h /= 10.0;
        for (index_t k = 0; k < d; ++k) {
            const double s = std::min(step[k], h_old);
            lo[k] = best.point[k] - 2.0 * s;
            step[k] = s / 10.0;
            count[k] = step[k] > 0.0 ? 41 : 1;
        }
        detail::grid_scan(f, lo, step, count, box, best);
    }
    return best;
}

inline GridMinimum grid_minimize(const std::function<double(std::span<const double>)>& f,
    std::initializer_list<Interval> box, double resolution)
{
    return grid_minimize(f, std::span<const Interval>(box.begin(), box.size()), resolution);
}

/* central differences (f(x + h e_j) - f(x - h e_j)) / 2h */
inline Vector fd_gradient(const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h)
{
    detail::require(h > 0.0, ErrorCode::invalid_input, "fd_gradient: step must be positive");
    Vector g(x.size()), probe(x.begin(), x.end());
    for (index_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + h;
        const double fp = f(probe);
        probe[j] = x[j] - h;
        const double fm = f(probe);
        probe[j] = x[j];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw Error(ErrorCode::domain_violation,
                "fd_gradient: non-finite evaluation around coordinate " + std::to_string(j));
        }
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

struct ReferenceSolution {
    Vector x;
    double f_inf = 0.0;
    std::vector<Vector> z;
    double residual = 0.0;   // fixed-point residual of the final state
};

inline constexpr index_t reference_iterations = 100000;

/* forward-Douglas-Rachford run with no stopping rule */
inline ReferenceSolution reference_solution(const SplitProblem& problem,
    index_t iterations = reference_iterations, unsigned threads = 1)
{
    SolveConfig cfg;
    cfg.stop = StoppingRule::iterations();
    cfg.max_iters = iterations;
    cfg.log_every = 0;
    cfg.log_residual = false;
    cfg.threads = threads;
    auto sol = solve(problem, cfg);
    ReferenceSolution ref;
    ref.f_inf = problem.objective ? problem.objective(sol.x) : std::numeric_limits<double>::quiet_NaN();
    ref.residual = fixed_point_residual(sol.state, problem);
    ref.x = std::move(sol.x);
    ref.z = std::move(sol.state.z);
    return ref;
}

} // namespace pfdr
