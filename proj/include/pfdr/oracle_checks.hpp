#pragma once
/*=============================================================================
 * Named oracle checks: every prox against grid minimization, gradients
 * against central differences and cocoercivity, and one-step reductions of
 * the splitting iteration to forward-backward and Douglas-Rachford maps.
 * Used by the oracle-check command and by the test suites.
 *===========================================================================*/

#include <random>

#include "oracle.hpp"
#include "prox.hpp"
#include "smooth.hpp"

namespace pfdr {

struct CheckResult {
    std::string name;
    bool passed = true;
    index_t instances = 0;
    double worst = 0.0;      // largest observed error measure
    double tolerance = 0.0;
    std::string detail;      // first failing instance, if any
};

struct OracleCheckOptions {
    std::uint64_t seed = 0;
    index_t prox_instances = 100;
    index_t gradient_points = 50;
    index_t cocoercivity_pairs = 100;
    index_t reduction_states = 20;
    double grid_resolution = 1e-4;
    /* relative perturbation of the soft-thresholding constant under test;
     * nonzero values must make the soft_threshold check fail */
    double perturbation = 0.0;
};

inline constexpr double prox_gap_tolerance = 1e-6;
inline constexpr double gradient_tolerance = 1e-6;
inline constexpr double cocoercivity_slack = 1e-10;
inline constexpr double reduction_tolerance = 1e-15;

namespace detail {

class CheckRng {
public:
    explicit CheckRng(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    index_t dim() { return index_t(std::uniform_int_distribution<int>(1, 3)(rng_)); }
    Vector vec(index_t n, double lo, double hi)
    {
        Vector v(n);
        for (double& c : v) c = uniform(lo, hi);
        return v;
    }

private:
    std::mt19937_64 rng_;
};

inline void record(CheckResult& r, double err, const std::string& what)
{
    ++r.instances;
    if (!(err <= r.worst)) r.worst = std::isnan(err) ? infinity : std::max(r.worst, err);
    if (!(err <= r.tolerance) && r.passed) {
        r.passed = false;
        r.detail = what + ": error " + format_real(err);
    }
}

using Objective = std::function<double(std::span<const double>)>;

/* |F(candidate) - min over the grid| */
inline double grid_gap(const Objective& f, std::span<const double> candidate,
    std::span<const Interval> box, double resolution)
{
    const auto g = grid_minimize(f, box, resolution);
    return std::abs(f(candidate) - g.value);
}

inline std::string describe(const char* what, index_t instance)
{
    return std::string(what) + " instance " + std::to_string(instance);
}

} // namespace detail

/**  prox versus grid  **/

inline CheckResult check_soft_threshold(const OracleCheckOptions& o)
{
    CheckResult r{"prox-grid/soft_threshold", true, 0, 0.0, prox_gap_tolerance, {}};
    detail::CheckRng rng(o.seed + 11);
    for (index_t n = 0; n < o.prox_instances; ++n) {
        const index_t d = rng.dim();
        const Vector x = rng.vec(d, -3, 3), tau = rng.vec(d, 0, 2), m = rng.vec(d, 0.5, 2);
        Vector tau_used = tau;
        for (double& t : tau_used) t *= 1.0 + o.perturbation;
        const Vector p = soft_threshold(x, tau_used, MetricWeights(m));
        auto f = [&](std::span<const double> u) {
            double s = 0.0;
            for (index_t j = 0; j < d; ++j) s += 0.5 * m[j] * (x[j] - u[j]) * (x[j] - u[j]) + tau[j] * std::abs(u[j]);
            return s;
        };
        std::vector<Interval> box(d);
        for (index_t j = 0; j < d; ++j) box[j] = {std::min(0.0, x[j]) - 0.5, std::max(0.0, x[j]) + 0.5};
        detail::record(r, detail::grid_gap(f, p, box, o.grid_resolution), detail::describe("soft_threshold", n));
    }
    return r;
}

inline CheckResult check_prox_l1_positive(const OracleCheckOptions& o)
{
    CheckResult r{"prox-grid/prox_l1_positive", true, 0, 0.0, prox_gap_tolerance, {}};
    detail::CheckRng rng(o.seed + 12);
    for (index_t n = 0; n < o.prox_instances; ++n) {
        const index_t d = rng.dim();
        const Vector x = rng.vec(d, -3, 3), tau = rng.vec(d, 0, 2), m = rng.vec(d, 0.5, 2);
        const Vector p = prox_l1_positive(x, tau, MetricWeights(m));
        auto f = [&](std::span<const double> u) {
            double s = 0.0;
            for (index_t j = 0; j < d; ++j) {
                if (u[j] < 0.0) return infinity;
                s += 0.5 * m[j] * (x[j] - u[j]) * (x[j] - u[j]) + tau[j] * u[j];
            }
            return s;
        };
        std::vector<Interval> box(d);
        for (index_t j = 0; j < d; ++j) box[j] = {0.0, std::max(0.0, x[j]) + 0.5};
        detail::record(r, detail::grid_gap(f, p, box, o.grid_resolution), detail::describe("prox_l1_positive", n));
    }
    return r;
}

/* K = 2 parameterized by p_1 in [0, 1]; K = 3 by (s, t) in [0, 1]^2 with
 * p = (s, (1 - s) t, (1 - s)(1 - t)), which covers the simplex exactly */
inline Vector simplex_point(std::span<const double> u, index_t K)
{
    if (K == 1) return {1.0};
    if (K == 2) return {u[0], 1.0 - u[0]};
    return {u[0], (1.0 - u[0]) * u[1], (1.0 - u[0]) * (1.0 - u[1])};
}

inline CheckResult check_project_simplex(const OracleCheckOptions& o)
{
    CheckResult r{"prox-grid/project_simplex", true, 0, 0.0, prox_gap_tolerance, {}};
    detail::CheckRng rng(o.seed + 13);
    for (index_t n = 0; n < o.prox_instances; ++n) {
        const index_t K = n % 2 == 0 ? 2 : 3;
        const Vector p = rng.vec(K, -1, 2), m = rng.vec(K, 0.5, 2);
        const Vector q = project_simplex(p, MetricWeights(m));
        auto dist = [&](std::span<const double> v) {
            double s = 0.0;
            for (index_t k = 0; k < K; ++k) s += 0.5 * m[k] * (p[k] - v[k]) * (p[k] - v[k]);
            return s;
        };
        auto f = [&](std::span<const double> u) { return dist(simplex_point(u, K)); };
        std::vector<Interval> box(K - 1, Interval{0.0, 1.0});
        const auto g = grid_minimize(f, box, o.grid_resolution);
        double sum = 0.0, neg = 0.0;
        for (double v : q) {
            sum += v;
            neg = std::min(neg, v);
        }
        const double feas = std::abs(sum - 1.0) + std::abs(neg);
        detail::record(r, std::abs(dist(q) - g.value) + (feas > 1e-12 ? infinity : 0.0),
            detail::describe("project_simplex", n));
    }
    return r;
}

inline CheckResult check_prox_pair_abs_diff(const OracleCheckOptions& o)
{
    CheckResult r{"prox-grid/prox_pair_abs_diff", true, 0, 0.0, prox_gap_tolerance, {}};
    detail::CheckRng rng(o.seed + 14);
    for (index_t n = 0; n < o.prox_instances; ++n) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), lambda = rng.uniform(0, 2);
        const double ma = rng.uniform(0.5, 2), mb = rng.uniform(0.5, 2);
        const auto [p, q] = prox_pair_abs_diff(a, b, lambda, ma, mb);
        auto f = [&](std::span<const double> u) {
            return 0.5 * ma * (a - u[0]) * (a - u[0]) + 0.5 * mb * (b - u[1]) * (b - u[1]) +
                lambda * std::abs(u[0] - u[1]);
        };
        // identical boxes put grid points on the diagonal p = q
        const Interval side{std::min(a, b) - 0.5, std::max(a, b) + 0.5};
        const Interval box[2] = {side, side};
        const double cand[2] = {p, q};
        detail::record(r, detail::grid_gap(f, cand, box, o.grid_resolution), detail::describe("prox_pair_abs_diff", n));
    }
    return r;
}

inline CheckResult check_prox_kl(const OracleCheckOptions& o)
{
    CheckResult r{"prox-grid/prox_kl", true, 0, 0.0, prox_gap_tolerance, {}};
    detail::CheckRng rng(o.seed + 15);
    for (index_t n = 0; n < o.prox_instances; ++n) {
        const index_t K = rng.dim();
        const double beta = rng.uniform(0.05, 0.95);
        Vector q = rng.vec(K, 0.0, 1.0);
        double total = 0.0;
        for (double v : q) total += v;
        for (double& v : q) v /= total;
        const Vector p0 = rng.vec(K, -1, 2), m = rng.vec(K, 0.5, 2);
        const Vector p = prox_kl(p0, q, beta, MetricWeights(m));
        const double c = beta / double(K), a = 1.0 - beta;
        auto f = [&](std::span<const double> u) {
            double s = 0.0;
            for (index_t k = 0; k < K; ++k) {
                const double arg = c + a * u[k];
                if (!(arg > 0.0)) return infinity;
                s += 0.5 * m[k] * (p0[k] - u[k]) * (p0[k] - u[k]) - (c + a * q[k]) * std::log(arg);
            }
            return s;
        };
        std::vector<Interval> box(K);
        for (index_t k = 0; k < K; ++k) box[k] = {std::max(p0[k], -c / a), std::max(p0[k], 0.0) + 3.0};
        detail::record(r, detail::grid_gap(f, p, box, o.grid_resolution), detail::describe("prox_kl", n));
    }
    return r;
}

/* the conjugate prox minimizes sum_j 1/(2 sigma_j) (x_j - u_j)^2 + g*(u);
 * checked for g = |.|, 1/2 (. - y)^2 and the smoothed KL data term, whose
 * conjugates are written out explicitly below */
inline CheckResult check_prox_conjugate(const OracleCheckOptions& o)
{
    CheckResult r{"prox-grid/prox_conjugate", true, 0, 0.0, prox_gap_tolerance, {}};
    detail::CheckRng rng(o.seed + 16);
    for (index_t n = 0; n < o.prox_instances; ++n) {
        const index_t d = rng.dim();
        const Vector x = rng.vec(d, -3, 3), sigma = rng.vec(d, 0.5, 2);
        const int kind = int(n % 3);
        Vector u;
        std::function<double(index_t, double)> conj;
        std::vector<Interval> box(d);
        if (kind == 0) {
            u = prox_conjugate(
                [](std::span<const double> v, std::span<const double> m) {
                    Vector t(v.size(), 1.0), out(v.size());
                    soft_threshold(v, t, m, out);
                    return out;
                },
                x, sigma);
            // the Moreau form rounds at the interval ends
            conj = [](index_t, double v) { return std::abs(v) <= 1.0 + 1e-12 ? 0.0 : infinity; };
            for (auto& b : box) b = {-1.0, 1.0};
        } else if (kind == 1) {
            const Vector y = rng.vec(d, -2, 2);
            u = prox_conjugate(
                [&](std::span<const double> v, std::span<const double> m) {
                    Vector out(v.size());
                    for (index_t j = 0; j < v.size(); ++j) out[j] = (m[j] * v[j] + y[j]) / (m[j] + 1.0);
                    return out;
                },
                x, sigma);
            conj = [y](index_t j, double v) { return 0.5 * v * v + v * y[j]; };
            for (index_t j = 0; j < d; ++j) {
                const double w = std::abs(x[j]) + std::abs(y[j]) + 1.0;
                box[j] = {-w, w};
            }
        } else {
            const double beta = rng.uniform(0.05, 0.95), c = beta / double(d), a = 1.0 - beta;
            const Vector r_coef = rng.vec(d, c, c + a);
            u = prox_conjugate(
                [&](std::span<const double> v, std::span<const double> m) {
                    Vector out(v.size());
                    for (index_t j = 0; j < v.size(); ++j) out[j] = prox_kl(v[j], r_coef[j], c, beta, m[j]);
                    return out;
                },
                x, sigma);
            // g(v) = -r log(c + a v); g*(u) = -r - u c / a + r log(-r a / u) for u < 0
            conj = [=](index_t j, double v) {
                if (!(v < 0.0)) return infinity;
                return -r_coef[j] - v * c / a + r_coef[j] * std::log(-r_coef[j] * a / v);
            };
            for (index_t j = 0; j < d; ++j) box[j] = {std::min(x[j], 0.0) - 3.0 * (1.0 + sigma[j]), 0.0};
        }
        auto f = [&](std::span<const double> v) {
            double s = 0.0;
            for (index_t j = 0; j < d; ++j) s += 0.5 / sigma[j] * (x[j] - v[j]) * (x[j] - v[j]) + conj(j, v[j]);
            return s;
        };
        detail::record(r, detail::grid_gap(f, u, box, o.grid_resolution), detail::describe("prox_conjugate", n));
    }
    return r;
}

/**  gradients  **/

inline double relative_error(std::span<const double> a, std::span<const double> b)
{
    double diff = 0.0, scale = 0.0;
    for (index_t j = 0; j < a.size(); ++j) {
        diff = std::max(diff, std::abs(a[j] - b[j]));
        scale = std::max(scale, std::abs(b[j]));
    }
    return diff / std::max(scale, 1.0);
}

inline DenseOperator random_operator(detail::CheckRng& rng, index_t rows, index_t cols)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-1, 1);
    }
    return DenseOperator(std::move(m));
}

inline CheckResult check_grad_least_squares(const OracleCheckOptions& o)
{
    CheckResult r{"gradient-fd/least_squares", true, 0, 0.0, gradient_tolerance, {}};
    detail::CheckRng rng(o.seed + 21);
    for (index_t n = 0; n < o.gradient_points; ++n) {
        const index_t rows = 1 + n % 4, cols = 1 + (n / 4) % 4;
        const auto phi = random_operator(rng, rows, cols);
        const Vector y = rng.vec(rows, -1, 1), x = rng.vec(cols, -1, 1);
        auto f = [&](std::span<const double> v) {
            const Vector res = phi.apply(v);
            double s = 0.0;
            for (index_t i = 0; i < rows; ++i) s += 0.5 * (y[i] - res[i]) * (y[i] - res[i]);
            return s;
        };
        detail::record(r, relative_error(grad_least_squares(x, phi, y), fd_gradient(f, x, 1e-6)),
            detail::describe("least squares", n));
    }
    return r;
}

inline Vector random_simplex_rows(detail::CheckRng& rng, index_t V, index_t K)
{
    Vector q(V * K);
    for (index_t v = 0; v < V; ++v) {
        double s = 0.0;
        for (index_t k = 0; k < K; ++k) s += (q[v * K + k] = rng.uniform(0.0, 1.0));
        for (index_t k = 0; k < K; ++k) q[v * K + k] /= s;
    }
    return q;
}

/* p-dependent part of the smoothed KL data term */
inline double kl_data_term(std::span<const double> p, std::span<const double> q, double beta,
    index_t K)
{
    const double c = beta / double(K), a = 1.0 - beta;
    double s = 0.0;
    for (index_t j = 0; j < p.size(); ++j) {
        const double arg = c + a * p[j];
        if (!(arg > 0.0)) return infinity;
        s -= (c + a * q[j]) * std::log(arg);
    }
    return s;
}

inline CheckResult check_grad_smoothed_kl(const OracleCheckOptions& o)
{
    CheckResult r{"gradient-fd/smoothed_kl", true, 0, 0.0, gradient_tolerance, {}};
    detail::CheckRng rng(o.seed + 22);
    for (index_t n = 0; n < o.gradient_points; ++n) {
        const index_t K = 2 + n % 3, V = 1 + n % 2;
        const double beta = rng.uniform(0.05, 0.95);
        const Vector q = random_simplex_rows(rng, V, K), p = rng.vec(V * K, 0.05, 1.0);
        auto f = [&](std::span<const double> v) { return kl_data_term(v, q, beta, K); };
        detail::record(r, relative_error(grad_smoothed_kl(p, q, beta, K), fd_gradient(f, p, 1e-6)),
            detail::describe("smoothed KL", n));
    }
    return r;
}

/* <g(x) - g(y) | x - y> - ||g(x) - g(y)||^2_{L^-1} >= -slack; the error
 * measure is the violation, 0 when the inequality holds */
inline double cocoercivity_violation(std::span<const double> gx, std::span<const double> gy,
    std::span<const double> x, std::span<const double> y, std::span<const double> L)
{
    double inner = 0.0, norm = 0.0;
    for (index_t j = 0; j < x.size(); ++j) {
        const double dg = gx[j] - gy[j];
        inner += dg * (x[j] - y[j]);
        norm += dg * dg / L[j];
    }
    return std::max(0.0, norm - inner);
}

inline CheckResult check_cocoercivity_least_squares(const OracleCheckOptions& o)
{
    CheckResult r{"cocoercivity/least_squares", true, 0, 0.0, cocoercivity_slack, {}};
    detail::CheckRng rng(o.seed + 23);
    for (index_t n = 0; n < o.cocoercivity_pairs; ++n) {
        const index_t rows = 1 + n % 5, cols = 1 + (n / 5) % 5;
        const auto phi = random_operator(rng, rows, cols);
        const double ell = power_method_sqnorm(phi).value;
        const Vector y = rng.vec(rows, -1, 1), a = rng.vec(cols, -2, 2), b = rng.vec(cols, -2, 2);
        const Vector L(cols, ell);
        detail::record(r,
            cocoercivity_violation(grad_least_squares(a, phi, y), grad_least_squares(b, phi, y), a, b, L),
            detail::describe("least squares pair", n));
    }
    return r;
}

inline CheckResult check_cocoercivity_kl(const OracleCheckOptions& o)
{
    CheckResult r{"cocoercivity/smoothed_kl", true, 0, 0.0, cocoercivity_slack, {}};
    detail::CheckRng rng(o.seed + 24);
    for (index_t n = 0; n < o.cocoercivity_pairs; ++n) {
        const index_t K = 2 + n % 3, V = 1 + n % 3;
        const double beta = rng.uniform(0.05, 0.95);
        const Vector q = random_simplex_rows(rng, V, K);
        const Vector a = rng.vec(V * K, 0.0, 1.0), b = rng.vec(V * K, 0.0, 1.0);
        const auto L = kl_curvature_diag(q, beta, K);
        detail::record(r,
            cocoercivity_violation(grad_smoothed_kl(a, q, beta, K), grad_smoothed_kl(b, q, beta, K), a, b,
                L.values),
            detail::describe("smoothed KL pair", n));
    }
    return r;
}

/**  reductions  **/

/* one block with full support and weight Id */
inline SplitProblem single_block_problem(index_t d, ProxFn block, std::optional<SmoothTerm> smooth,
    ProxFn full, double gamma)
{
    SplitProblem p;
    p.layout.dim = d;
    Block b;
    b.support.resize(d);
    std::iota(b.support.begin(), b.support.end(), index_t{0});
    p.layout.blocks.push_back(std::move(b));
    p.block_prox.push_back(std::move(block));
    p.smooth = std::move(smooth);
    p.full_resolvent = std::move(full);
    p.weights.per_block.push_back(Vector(d, 1.0));
    p.gamma = DiagonalOperator(d, gamma);
    return p;
}

inline ProxFn l1_prox(Vector tau)
{
    return [tau](std::span<const double> in, std::span<const double> m, std::span<double> out) {
        soft_threshold(in, tau, m, out);
    };
}

/* forward-backward: with C = 0, W = Id, Gamma = gamma Id, rho = 1 and z = x,
 * one step gives J_{gamma A}(x - gamma B x) */
inline CheckResult check_reduction_forward_backward(const OracleCheckOptions& o)
{
    CheckResult r{"reduction/forward_backward", true, 0, 0.0, reduction_tolerance, {}};
    detail::CheckRng rng(o.seed + 31);
    for (index_t n = 0; n < o.reduction_states; ++n) {
        const index_t d = 1 + n % 3;
        auto phi = std::make_shared<DenseOperator>(random_operator(rng, d, d));
        const Vector y = rng.vec(d, -1, 1), tau = rng.vec(d, 0, 0.5);
        const double ell = power_method_sqnorm(*phi).value;
        const double gamma = rng.uniform(0.1, 1.9) / ell;
        SmoothTerm f;
        f.gradient = [phi, y](std::span<const double> x, std::span<double> g) {
            const Vector v = grad_least_squares(x, *phi, y);
            std::copy(v.begin(), v.end(), g.begin());
        };
        f.curvature = DiagonalOperator(d, ell);
        f.scalar_bound = true;
        const auto problem = single_block_problem(d, l1_prox(tau), f, {}, gamma);

        SolverState s;
        s.x = rng.vec(d, -1, 1);
        s.z = {s.x};
        const SolverState next = pfdr_step(s, problem, 1.0);

        const Vector g = grad_least_squares(s.x, *phi, y);
        Vector fwd(d), expected(d), m(d, 1.0 / gamma);
        for (index_t j = 0; j < d; ++j) fwd[j] = s.x[j] - gamma * g[j];
        soft_threshold(fwd, tau, m, expected);
        double err = 0.0;
        for (index_t j = 0; j < d; ++j) err = std::max(err, std::abs(next.x[j] - expected[j]));
        detail::record(r, err, detail::describe("forward-backward state", n));
    }
    return r;
}

/* Douglas-Rachford: with B = 0, W = Id, Gamma = gamma Id and rho = 1, one
 * step maps z to 1/2 (R_{gamma A} R_{gamma C} + Id) z */
inline CheckResult check_reduction_douglas_rachford(const OracleCheckOptions& o)
{
    CheckResult r{"reduction/douglas_rachford", true, 0, 0.0, reduction_tolerance, {}};
    detail::CheckRng rng(o.seed + 32);
    for (index_t n = 0; n < o.reduction_states; ++n) {
        const index_t d = 1 + n % 3;
        const Vector tau_a = rng.vec(d, 0, 0.5), tau_c = rng.vec(d, 0, 0.5);
        const double gamma = rng.uniform(0.2, 2.0);
        ProxFn jc = [tau_c](std::span<const double> in, std::span<const double> m, std::span<double> out) {
            prox_l1_positive(in, tau_c, m, out);
        };
        const auto problem = single_block_problem(d, l1_prox(tau_a), std::nullopt, jc, gamma);

        PfdrIteration it(problem);
        SolverState s;
        s.z = {rng.vec(d, -1, 1)};
        s.x.assign(d, 0.0);
        it.aggregate(s, s.x);
        Vector agg = s.x;
        const Vector m(d, 1.0 / gamma);
        prox_l1_positive(agg, tau_c, m, s.x);
        const Vector z = s.z[0];
        it.step(s, 1.0);

        Vector jcz(d), rcz(d), ja(d), expected(d);
        prox_l1_positive(z, tau_c, m, jcz);
        for (index_t j = 0; j < d; ++j) rcz[j] = 2.0 * jcz[j] - z[j];
        soft_threshold(rcz, tau_a, m, ja);
        for (index_t j = 0; j < d; ++j) expected[j] = 0.5 * ((2.0 * ja[j] - rcz[j]) + z[j]);
        double err = 0.0;
        for (index_t j = 0; j < d; ++j) err = std::max(err, std::abs(s.z[0][j] - expected[j]));
        detail::record(r, err, detail::describe("Douglas-Rachford state", n));
    }
    return r;
}

inline std::vector<CheckResult> run_oracle_checks(const OracleCheckOptions& o = {})
{
    return {
        check_soft_threshold(o),
        check_prox_l1_positive(o),
        check_project_simplex(o),
        check_prox_pair_abs_diff(o),
        check_prox_kl(o),
        check_prox_conjugate(o),
        check_grad_least_squares(o),
        check_grad_smoothed_kl(o),
        check_cocoercivity_least_squares(o),
        check_cocoercivity_kl(o),
        check_reduction_forward_backward(o),
        check_reduction_douglas_rachford(o),
    };
}

} // namespace pfdr
