#pragma once
/*=============================================================================
 * Preconditioned primal-dual comparator for F = g o Lambda + h
 *
 *     u <- prox_{g*}^{Sigma^-1}(u + Sigma Lambda xbar)
 *     x_new <- prox_h^{T^-1}(x - T Lambda^* u)
 *     xbar <- 2 x_new - x
 *
 * with diagonal preconditioners (alpha = 1)
 *     T_j = 1 / sum_i |Lambda_ij|,   Sigma_i = 1 / sum_j |Lambda_ij|.
 *===========================================================================*/

#include <chrono>

#include "convergence_log.hpp"
#include "graph.hpp"
#include "pfdr_solver.hpp"
#include "prox.hpp"
#include "smooth.hpp"

namespace pfdr {

/* compressed sparse rows */
class SparseRows {
public:
    explicit SparseRows(index_t cols = 0) : cols_(cols) { row_start_.push_back(0); }

    /* appends a row; entries are (column, value) pairs */
    void add_row(std::span<const std::pair<index_t, double>> entries)
    {
        for (const auto& [c, v] : entries) {
            detail::require(c < cols_, ErrorCode::invalid_input, "sparse row: column out of range");
            detail::require(std::isfinite(v), ErrorCode::invalid_input, "sparse row: non-finite entry");
            col_.push_back(c);
            val_.push_back(v);
        }
        row_start_.push_back(col_.size());
    }

    void add_row(std::initializer_list<std::pair<index_t, double>> entries)
    {
        add_row(std::span<const std::pair<index_t, double>>(entries.begin(), entries.size()));
    }

    index_t rows() const noexcept { return row_start_.size() - 1; }
    index_t cols() const noexcept { return cols_; }

    double entry(index_t i, index_t j) const
    {
        double s = 0.0;
        for (index_t r = row_start_[i]; r < row_start_[i + 1]; ++r) {
            if (col_[r] == j) s += val_[r];
        }
        return s;
    }

    void apply(std::span<const double> x, std::span<double> out) const
    {
        for (index_t i = 0; i < rows(); ++i) {
            double s = 0.0;
            for (index_t r = row_start_[i]; r < row_start_[i + 1]; ++r) s += val_[r] * x[col_[r]];
            out[i] = s;
        }
    }

    void apply_adjoint(std::span<const double> u, std::span<double> out) const
    {
        std::fill(out.begin(), out.end(), 0.0);
        for (index_t i = 0; i < rows(); ++i) {
            for (index_t r = row_start_[i]; r < row_start_[i + 1]; ++r) out[col_[r]] += val_[r] * u[i];
        }
    }

    Vector apply(std::span<const double> x) const
    {
        detail::require_same_size(x.size(), cols_, "sparse application");
        Vector out(rows());
        apply(x, out);
        return out;
    }

    Vector apply_adjoint(std::span<const double> u) const
    {
        detail::require_same_size(u.size(), rows(), "sparse adjoint");
        Vector out(cols_);
        apply_adjoint(u, out);
        return out;
    }

    Vector row_abs_sums() const
    {
        Vector s(rows(), 0.0);
        for (index_t i = 0; i < rows(); ++i) {
            for (index_t r = row_start_[i]; r < row_start_[i + 1]; ++r) s[i] += std::abs(val_[r]);
        }
        return s;
    }

    Vector col_abs_sums() const
    {
        Vector s(cols_, 0.0);
        for (index_t r = 0; r < col_.size(); ++r) s[col_[r]] += std::abs(val_[r]);
        return s;
    }

private:
    index_t cols_;
    std::vector<index_t> row_start_;
    std::vector<index_t> col_;
    Vector val_;
};

struct PDPreconditioners {
    Vector tau;     // primal, one per column
    Vector sigma;   // dual, one per row
};

inline constexpr double ppd_sum_floor = 1e-12;

inline PDPreconditioners ppd_preconditioners(const SparseRows& lambda)
{
    PDPreconditioners pc;
    pc.tau = lambda.col_abs_sums();
    pc.sigma = lambda.row_abs_sums();
    for (double& t : pc.tau) t = 1.0 / std::max(t, ppd_sum_floor);
    for (double& s : pc.sigma) s = 1.0 / std::max(s, ppd_sum_floor);
    return pc;
}

/* power-method estimate of ||Sigma^1/2 Lambda T^1/2|| */
inline double scaled_operator_norm(const SparseRows& lambda, const PDPreconditioners& pc,
    double tol = 1e-12, index_t max_iters = 100000)
{
    Vector a(lambda.cols()), b(lambda.rows());
    auto gram = [&](std::span<const double> x, std::span<double> out) {
        for (index_t j = 0; j < x.size(); ++j) a[j] = std::sqrt(pc.tau[j]) * x[j];
        lambda.apply(a, b);
        for (index_t i = 0; i < b.size(); ++i) b[i] *= pc.sigma[i];
        lambda.apply_adjoint(b, out);
        for (index_t j = 0; j < out.size(); ++j) out[j] *= std::sqrt(pc.tau[j]);
    };
    const auto est = power_iteration(lambda.cols(), gram, tol, max_iters);
    return std::sqrt(est.raw);
}

struct PrimalDualSplitting {
    SparseRows lambda;
    /* prox of g* over the whole dual vector in metric diag(1/sigma) */
    std::function<void(std::span<const double>, std::span<const double> sigma, std::span<double>)>
        dual_prox;
    /* prox of h over the primal vector in metric diag(1/tau) */
    ProxFn primal_prox;
    ObjectiveFn objective;
    PDPreconditioners precond;
};

struct PpdConfig {
    StoppingRule stop = StoppingRule::rel_evol(1e-6);
    index_t max_iters = 10000;
    index_t log_every = 1;
    Vector x0;
};

struct PpdResult {
    Vector x;
    Vector u;
    ConvergenceLog log;
    index_t iterations = 0;
    bool converged = false;
    double time_s = 0.0;
};

inline constexpr double ppd_norm_tolerance = 1e-10;

inline PpdResult ppd_solve(const PrimalDualSplitting& s, const PpdConfig& config)
{
    const index_t n = s.lambda.cols(), m = s.lambda.rows();
    detail::require(s.precond.tau.size() == n && s.precond.sigma.size() == m,
        ErrorCode::hypothesis_violation, "primal-dual preconditioners have wrong dimensions");
    for (double t : s.precond.tau) {
        detail::require(t > 0.0, ErrorCode::hypothesis_violation, "primal step not positive");
    }
    for (double t : s.precond.sigma) {
        detail::require(t > 0.0, ErrorCode::hypothesis_violation, "dual step not positive");
    }
    const double norm = scaled_operator_norm(s.lambda, s.precond);
    detail::require(norm <= 1.0 + ppd_norm_tolerance, ErrorCode::hypothesis_violation,
        "||Sigma^1/2 Lambda T^1/2|| = " + format_real(norm) + " exceeds 1");

    PpdResult res;
    res.x.assign(n, 0.0);
    if (!config.x0.empty()) {
        detail::require_same_size(config.x0.size(), n, "initial point");
        res.x = config.x0;
    }
    res.u.assign(m, 0.0);
    Vector xbar = res.x, x_old(n), ku(n), lx(m), dual_in(m), primal_in(n);
    Vector tau_inv(n);
    for (index_t j = 0; j < n; ++j) tau_inv[j] = 1.0 / s.precond.tau[j];
    Vector u_old(m);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto record = [&](index_t k, double rel, double mx, double residual) {
        res.log.add({k, res.time_s, s.objective ? s.objective(res.x) : nan, rel, mx, residual});
    };
    record(0, nan, nan, nan);

    Evolution evol{nan, nan};
    double residual = nan;
    bool logged_last = true;
    for (index_t k = 1; k <= config.max_iters; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        u_old = res.u;
        s.lambda.apply(xbar, lx);
        for (index_t i = 0; i < m; ++i) dual_in[i] = res.u[i] + s.precond.sigma[i] * lx[i];
        s.dual_prox(dual_in, s.precond.sigma, res.u);

        x_old = res.x;
        s.lambda.apply_adjoint(res.u, ku);
        for (index_t j = 0; j < n; ++j) primal_in[j] = res.x[j] - s.precond.tau[j] * ku[j];
        if (s.primal_prox) {
            s.primal_prox(primal_in, tau_inv, res.x);
        } else {
            res.x = primal_in;
        }
        for (index_t j = 0; j < n; ++j) xbar[j] = 2.0 * res.x[j] - x_old[j];
        res.time_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        evol = evolution(x_old, res.x);
        residual = std::max(evol.max, evolution(u_old, res.u).max);
        res.iterations = k;
        const bool done = stop_reached(config.stop, evol);
        logged_last = false;
        if (config.log_every > 0 && k % config.log_every == 0) {
            record(k, evol.relative, evol.max, residual);
            logged_last = true;
        }
        if (done) {
            res.converged = true;
            break;
        }
    }
    if (!logged_last) record(res.iterations, evol.relative, evol.max, residual);
    return res;
}

/**  dual proxes of the rows used by the graph problems  **/

/* conjugate prox of g(v) = 1/2 (v - y)^2: (u - sigma y) / (1 + sigma) */
inline double conj_prox_squared_residual(double u, double y, double sigma)
{
    return (u - sigma * y) / (1.0 + sigma);
}

/* conjugate prox of g(d) = |d|: clip to [-1, 1] */
inline double conj_prox_abs(double u)
{
    return std::clamp(u, -1.0, 1.0);
}

} // namespace pfdr
