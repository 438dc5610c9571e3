#pragma once
/*=============================================================================
 * The two graph-structured problem families:
 *
 * sparse positive source recovery over a graph G = (V, E),
 *     F(x) = 1/2 ||y - Phi x||^2 + sum_{(u,v) in E} lambda_uv |x_u - x_v|
 *            + sum_v lambda_l1_v |x_v| + i_{x >= 0}(x);
 *
 * spatial regularization of per-vertex label distributions over K labels,
 *     F(p) = sum_v KL(beta u + (1 - beta) q_v, beta u + (1 - beta) p_v)
 *            + sum_{(u,v) in E} lambda_uv sum_k |p_uk - p_vk| + i_{simplex}(p),
 *     u the uniform distribution.
 *
 * Builders for the forward-Douglas-Rachford, generalized forward-backward and
 * primal-dual configurations, seeded synthetic instances with planted ground
 * truth, and the lambda line search of the labeling family.
 *===========================================================================*/

#include <memory>
#include <random>

#include "metrics.hpp"
#include "pfdr_solver.hpp"
#include "ppd.hpp"

namespace pfdr {

struct EEGInstance {
    DenseOperator phi;
    Vector y;
    Graph graph;          // edge weights are the total variation lambdas
    Vector lambda_l1;     // per vertex
    Vector x_true;        // planted ground truth, empty when unknown

    index_t num_vertices() const noexcept { return graph.num_vertices; }

    void validate() const
    {
        graph.validate();
        detail::require_same_size(phi.cols(), graph.num_vertices, "Phi columns vs vertices");
        detail::require_same_size(y.size(), phi.rows(), "observations vs Phi rows");
        detail::require_same_size(lambda_l1.size(), graph.num_vertices, "l1 weights");
        for (double l : lambda_l1) {
            detail::require(l >= 0.0 && std::isfinite(l), ErrorCode::invalid_input,
                "l1 weights must be finite and nonnegative");
        }
        if (!x_true.empty()) detail::require_same_size(x_true.size(), graph.num_vertices, "ground truth");
    }
};

struct LabelingInstance {
    Graph graph;                       // edge weights are the total variation lambdas
    index_t K = 2;
    Vector q;                          // V x K row-major, rows on the simplex
    double beta = 0.1;
    std::vector<int> labels_true;      // empty when unknown
    std::vector<index_t> training;     // training subset U

    index_t num_vertices() const noexcept { return graph.num_vertices; }

    void validate() const
    {
        graph.validate();
        detail::require(K >= 1, ErrorCode::invalid_input, "K must be positive");
        detail::require_same_size(q.size(), graph.num_vertices * K, "q");
        detail::require(beta > 0.0 && beta <= 1.0, ErrorCode::invalid_input, "beta must lie in (0, 1]");
        for (index_t v = 0; v < graph.num_vertices; ++v) {
            double sum = 0.0;
            for (index_t k = 0; k < K; ++k) {
                const double qk = q[v * K + k];
                detail::require(qk >= 0.0, ErrorCode::invalid_input,
                    "q row " + std::to_string(v) + " has a negative entry");
                sum += qk;
            }
            detail::require(std::abs(sum - 1.0) < 1e-9, ErrorCode::invalid_input,
                "q row " + std::to_string(v) + " is off the simplex");
        }
        if (!labels_true.empty()) {
            detail::require_same_size(labels_true.size(), graph.num_vertices, "ground truth labels");
        }
        for (index_t v : training) {
            detail::require(v < graph.num_vertices, ErrorCode::invalid_input, "training vertex out of range");
        }
    }
};

enum class SplitMode { pfdr, pgfb };
enum class GammaMode { strict, jacobi };

struct BuildOptions {
    double eta = 0.9;            // ||L^1/2 Gamma L^1/2|| = 2 eta
    double reserve = 0.2;        // extra block weight in PGFB mode
    GammaMode gamma_mode = GammaMode::strict;
};

/* violations of the indicator terms below this are ignored when evaluating F */
inline constexpr double feasibility_tolerance = 1e-9;

/**  objectives  **/

inline double eeg_objective(const EEGInstance& inst, std::span<const double> x)
{
    detail::require_same_size(x.size(), inst.num_vertices(), "objective point");
    for (double v : x) {
        if (!(v >= -feasibility_tolerance)) return infinity;
    }
    const Vector r = inst.phi.apply(x);
    double data = 0.0;
    for (index_t i = 0; i < r.size(); ++i) data += (inst.y[i] - r[i]) * (inst.y[i] - r[i]);
    double tv = 0.0;
    for (index_t e = 0; e < inst.graph.num_edges(); ++e) {
        const auto [u, v] = inst.graph.edges[e];
        tv += inst.graph.edge_weight[e] * std::abs(x[u] - x[v]);
    }
    double l1 = 0.0;
    for (index_t v = 0; v < x.size(); ++v) l1 += inst.lambda_l1[v] * std::abs(x[v]);
    return 0.5 * data + tv + l1;
}

inline bool on_simplices(std::span<const double> p, index_t K, double tol)
{
    for (index_t v = 0; v * K < p.size(); ++v) {
        double sum = 0.0;
        for (index_t k = 0; k < K; ++k) {
            if (!(p[v * K + k] >= -tol)) return false;
            sum += p[v * K + k];
        }
        if (!(std::abs(sum - 1.0) <= tol)) return false;
    }
    return true;
}

/* exact constraint checks used to audit iterates: every coordinate >= 0, and
 * for the labeling family every row sums to 1 within 1e-12 */
inline bool nonnegative(std::span<const double> x)
{
    return std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0; });
}

inline constexpr double simplex_sum_tolerance = 1e-12;

inline bool on_simplices_exact(std::span<const double> p, index_t K)
{
    if (!nonnegative(p)) return false;
    for (index_t v = 0; v * K < p.size(); ++v) {
        double sum = 0.0;
        for (index_t k = 0; k < K; ++k) sum += p[v * K + k];
        if (!(std::abs(sum - 1.0) < simplex_sum_tolerance)) return false;
    }
    return true;
}

/* sum_v KL(r_v, s_v) with r = c + (1 - beta) q, s = c + (1 - beta) p */
inline double smoothed_kl(std::span<const double> p, std::span<const double> q, double beta,
    index_t K)
{
    const double c = beta / double(K), a = 1.0 - beta;
    double sum = 0.0;
    for (index_t j = 0; j < p.size(); ++j) {
        const double r = c + a * q[j], s = c + a * p[j];
        if (!(s > 0.0)) return infinity;
        if (r > 0.0) sum += r * std::log(r / s);
    }
    return sum;
}

inline double labeling_objective(const LabelingInstance& inst, std::span<const double> p)
{
    detail::require_same_size(p.size(), inst.q.size(), "objective point");
    if (!on_simplices(p, inst.K, feasibility_tolerance)) return infinity;
    const double data = smoothed_kl(p, inst.q, inst.beta, inst.K);
    double tv = 0.0;
    for (index_t e = 0; e < inst.graph.num_edges(); ++e) {
        const auto [u, v] = inst.graph.edges[e];
        double d = 0.0;
        for (index_t k = 0; k < inst.K; ++k) d += std::abs(p[u * inst.K + k] - p[v * inst.K + k]);
        tv += inst.graph.edge_weight[e] * d;
    }
    return data + tv;
}

inline double eval_objective(const SplitProblem& problem, std::span<const double> x)
{
    detail::require(bool(problem.objective), ErrorCode::invalid_input, "problem has no objective");
    return problem.objective(x);
}

/**  split problems  **/

namespace detail {

/* scalar total variation on the two endpoint coordinates */
inline ProxFn pair_tv_prox(double lambda, index_t channels)
{
    return [lambda, channels](std::span<const double> in, std::span<const double> m,
               std::span<double> out) {
        for (index_t k = 0; k < channels; ++k) {
            const auto [a, b] = prox_pair_abs_diff(in[k], in[channels + k], lambda, m[k],
                m[channels + k]);
            out[k] = a;
            out[channels + k] = b;
        }
    };
}

} // namespace detail

inline CompositeIngredients eeg_ingredients(const EEGInstance& instance,
    const BuildOptions& opts = {})
{
    instance.validate();
    detail::require(opts.eta > 0.0 && opts.eta < 1.0, ErrorCode::invalid_input, "eta must lie in (0, 1)");
    auto inst = std::make_shared<const EEGInstance>(instance);
    const index_t n = inst->num_vertices();

    CompositeIngredients in;
    in.graph = inst->graph;
    in.channels = 1;
    in.reserve = opts.reserve;
    in.edge_prox = [inst](index_t e) { return detail::pair_tv_prox(inst->graph.edge_weight[e], 1); };

    SmoothTerm f;
    f.gradient = [inst](std::span<const double> x, std::span<double> g) {
        Vector r(inst->phi.rows());
        inst->phi.apply(x, r);
        for (index_t i = 0; i < r.size(); ++i) r[i] -= inst->y[i];
        inst->phi.apply_adjoint(r, g);
    };
    if (opts.gamma_mode == GammaMode::strict) {
        const double ell = power_method_sqnorm(inst->phi).value;
        detail::require(ell > 0.0, ErrorCode::invalid_input, "Phi is zero");
        f.curvature = DiagonalOperator(n, ell);
        f.scalar_bound = true;
        in.gamma = DiagonalOperator(n, 2.0 * opts.eta / ell);
    } else {
        const DiagonalOperator h = floor_diagonal(jacobi_diag(inst->phi));
        f.curvature = h;
        f.heuristic = true;
        in.gamma = DiagonalOperator(n, 0.0);
        for (index_t j = 0; j < n; ++j) in.gamma[j] = 2.0 * opts.eta / h[j];
    }
    in.smooth = std::move(f);

    in.h_prox = [inst](std::span<const double> x, std::span<const double> m, std::span<double> out) {
        prox_l1_positive(x, inst->lambda_l1, m, out);
    };
    in.objective = [inst](std::span<const double> x) { return eeg_objective(*inst, x); };
    return in;
}

inline SplitProblem build_eeg_problem(const EEGInstance& instance, SplitMode mode,
    const BuildOptions& opts = {})
{
    const auto in = eeg_ingredients(instance, opts);
    return mode == SplitMode::pfdr ? configure_pfdr(in) : configure_pgfb(in);
}

inline CompositeIngredients labeling_ingredients(const LabelingInstance& instance,
    const BuildOptions& opts = {})
{
    instance.validate();
    detail::require(opts.eta > 0.0 && opts.eta < 1.0, ErrorCode::invalid_input, "eta must lie in (0, 1)");
    auto inst = std::make_shared<const LabelingInstance>(instance);
    const index_t K = inst->K;

    CompositeIngredients in;
    in.graph = inst->graph;
    in.channels = K;
    in.reserve = opts.reserve;
    in.edge_prox = [inst](index_t e) { return detail::pair_tv_prox(inst->graph.edge_weight[e], inst->K); };

    SmoothTerm f;
    f.gradient = [inst](std::span<const double> p, std::span<double> g) {
        grad_smoothed_kl(p, inst->q, inst->beta, inst->K, g);
    };
    f.curvature = kl_curvature_diag(inst->q, inst->beta, K);
    in.gamma = DiagonalOperator(f.curvature.size(), 0.0);
    for (index_t j = 0; j < in.gamma.size(); ++j) in.gamma[j] = 2.0 * opts.eta / f.curvature[j];
    in.smooth = std::move(f);

    in.h_prox = [K](std::span<const double> p, std::span<const double> m, std::span<double> out) {
        for (index_t v = 0; v * K < p.size(); ++v) {
            project_simplex(p.subspan(v * K, K), m.subspan(v * K, K), out.subspan(v * K, K));
        }
    };
    in.objective = [inst](std::span<const double> p) { return labeling_objective(*inst, p); };
    return in;
}

inline SplitProblem build_labeling_problem(const LabelingInstance& instance, SplitMode mode,
    const BuildOptions& opts = {})
{
    const auto in = labeling_ingredients(instance, opts);
    return mode == SplitMode::pfdr ? configure_pfdr(in) : configure_pgfb(in);
}

/**  primal-dual splittings  **/

/* Lambda stacks Phi and the rows lambda_uv (x_u - x_v); g is the squared
 * residual on the first rows and |.| on the edge rows; h = l1 + positivity */
inline PrimalDualSplitting build_ppd_splitting_eeg(const EEGInstance& instance)
{
    instance.validate();
    auto inst = std::make_shared<const EEGInstance>(instance);
    const index_t n = inst->num_vertices(), N = inst->phi.rows();

    PrimalDualSplitting s;
    s.lambda = SparseRows(n);
    std::vector<std::pair<index_t, double>> row;
    for (index_t i = 0; i < N; ++i) {
        row.clear();
        for (index_t j = 0; j < n; ++j) {
            if (inst->phi(i, j) != 0.0) row.emplace_back(j, inst->phi(i, j));
        }
        s.lambda.add_row(row);
    }
    for (index_t e = 0; e < inst->graph.num_edges(); ++e) {
        const auto [u, v] = inst->graph.edges[e];
        const double l = inst->graph.edge_weight[e];
        if (l != 0.0) {
            s.lambda.add_row({{u, l}, {v, -l}});
        } else {
            s.lambda.add_row({});
        }
    }
    s.dual_prox = [inst, N](std::span<const double> u, std::span<const double> sigma,
                      std::span<double> out) {
        for (index_t i = 0; i < N; ++i) out[i] = conj_prox_squared_residual(u[i], inst->y[i], sigma[i]);
        for (index_t i = N; i < u.size(); ++i) out[i] = conj_prox_abs(u[i]);
    };
    s.primal_prox = [inst](std::span<const double> x, std::span<const double> m, std::span<double> out) {
        prox_l1_positive(x, inst->lambda_l1, m, out);
    };
    s.objective = [inst](std::span<const double> x) { return eeg_objective(*inst, x); };
    s.precond = ppd_preconditioners(s.lambda);
    return s;
}

/* Lambda stacks the identity and the per-channel rows lambda_uv (p_uk - p_vk);
 * g is the smoothed KL on the first rows and |.| on the edge rows; h is the
 * product of simplex indicators */
inline PrimalDualSplitting build_ppd_splitting_labeling(const LabelingInstance& instance)
{
    instance.validate();
    auto inst = std::make_shared<const LabelingInstance>(instance);
    const index_t K = inst->K, n = inst->q.size();

    PrimalDualSplitting s;
    s.lambda = SparseRows(n);
    for (index_t j = 0; j < n; ++j) s.lambda.add_row({{j, 1.0}});
    for (index_t e = 0; e < inst->graph.num_edges(); ++e) {
        const auto [u, v] = inst->graph.edges[e];
        const double l = inst->graph.edge_weight[e];
        for (index_t k = 0; k < K; ++k) {
            if (l != 0.0) {
                s.lambda.add_row({{u * K + k, l}, {v * K + k, -l}});
            } else {
                s.lambda.add_row({});
            }
        }
    }
    s.dual_prox = [inst, n](std::span<const double> u, std::span<const double> sigma,
                      std::span<double> out) {
        const double beta = inst->beta, c = beta / double(inst->K);
        for (index_t j = 0; j < n; ++j) {
            // Moreau: u - sigma prox_g^{sigma}(u / sigma)
            const double r = c + (1.0 - beta) * inst->q[j];
            out[j] = u[j] - sigma[j] * prox_kl(u[j] / sigma[j], r, c, beta, sigma[j]);
        }
        for (index_t i = n; i < u.size(); ++i) out[i] = conj_prox_abs(u[i]);
    };
    s.primal_prox = [K](std::span<const double> p, std::span<const double> m, std::span<double> out) {
        for (index_t v = 0; v * K < p.size(); ++v) {
            project_simplex(p.subspan(v * K, K), m.subspan(v * K, K), out.subspan(v * K, K));
        }
    };
    s.objective = [inst](std::span<const double> p) { return labeling_objective(*inst, p); };
    s.precond = ppd_preconditioners(s.lambda);
    return s;
}

/**  synthetic instances  **/

struct SynthEegOptions {
    double lambda_tv = 0.1;
    double lambda_l1 = 0.05;
};

/* chain graph; one contiguous support segment with two constant positive
 * levels; Gaussian Phi with variance 1/N entries; y = Phi xhat + noise */
inline EEGInstance synth_eeg(std::uint64_t seed, index_t num_vertices, index_t num_observations,
    index_t support_size, double noise, const SynthEegOptions& opts = {})
{
    detail::require(num_vertices >= 1 && num_observations >= 1, ErrorCode::invalid_input,
        "synth_eeg: empty dimensions");
    detail::require(support_size <= num_vertices, ErrorCode::invalid_input,
        "synth_eeg: support larger than the vertex set");
    detail::require(noise >= 0.0, ErrorCode::invalid_input, "synth_eeg: negative noise level");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> level(0.5, 1.5);

    EEGInstance inst;
    inst.graph = chain_graph(num_vertices, opts.lambda_tv);
    inst.lambda_l1.assign(num_vertices, opts.lambda_l1);
    inst.x_true.assign(num_vertices, 0.0);
    if (support_size > 0) {
        std::uniform_int_distribution<index_t> start_dist(0, num_vertices - support_size);
        const index_t start = start_dist(rng);
        const double a = level(rng), b = level(rng);
        for (index_t t = 0; t < support_size; ++t) {
            inst.x_true[start + t] = t < (support_size + 1) / 2 ? a : b;
        }
    }
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(num_observations), static_cast<Eigen::Index>(num_vertices));
    const double scale = 1.0 / std::sqrt(double(num_observations));
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
        for (Eigen::Index j = 0; j < phi.cols(); ++j) phi(i, j) = scale * normal(rng);
    }
    inst.phi = DenseOperator(std::move(phi));
    inst.y = inst.phi.apply(inst.x_true);
    for (double& yi : inst.y) yi += noise * normal(rng);
    return inst;
}

/* training subset: per ground-truth class, up to per_class random members,
 * completed by the same number of the most uncertain members (highest
 * entropy of q) not already chosen */
inline std::vector<index_t> select_training_set(std::span<const double> q, index_t K,
    std::span<const int> labels, index_t per_class, std::uint64_t seed)
{
    const Vector h = entropy_uncertainty(q, K);
    std::mt19937_64 rng(seed);
    std::vector<index_t> chosen;
    for (index_t k = 0; k < K; ++k) {
        std::vector<index_t> members;
        for (index_t v = 0; v < labels.size(); ++v) {
            if (labels[v] == int(k)) members.push_back(v);
        }
        std::shuffle(members.begin(), members.end(), rng);
        const index_t n_random = std::min(per_class, members.size());
        std::vector<index_t> picked(members.begin(), members.begin() + std::ptrdiff_t(n_random));
        std::vector<index_t> rest(members.begin() + std::ptrdiff_t(n_random), members.end());
        std::stable_sort(rest.begin(), rest.end(), [&](index_t a, index_t b) {
            return h[a] > h[b] || (h[a] == h[b] && a < b);
        });
        for (index_t t = 0; t < std::min(n_random, rest.size()); ++t) picked.push_back(rest[t]);
        chosen.insert(chosen.end(), picked.begin(), picked.end());
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

struct SynthLabelingOptions {
    double beta = 0.1;
    double lambda = 0.1;
    index_t train_per_class = 3;
};

/* grid graph when the vertex count is a perfect square, chain otherwise;
 * labels constant on K stripes (label order permuted by the seed); q is a
 * one-hot of the possibly flipped label mixed with positive noise so that
 * its argmax is the flipped label and every entry is positive */
inline LabelingInstance synth_labeling(std::uint64_t seed, index_t num_vertices, index_t K,
    double flip_probability, const SynthLabelingOptions& opts = {})
{
    detail::require(K >= 2, ErrorCode::invalid_input, "synth_labeling: need K >= 2");
    detail::require(num_vertices >= 1, ErrorCode::invalid_input, "synth_labeling: no vertices");
    detail::require(flip_probability >= 0.0 && flip_probability <= 1.0, ErrorCode::invalid_input,
        "synth_labeling: flip probability outside [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LabelingInstance inst;
    inst.K = K;
    inst.beta = opts.beta;
    const auto side = index_t(std::llround(std::sqrt(double(num_vertices))));
    const bool grid = side * side == num_vertices && side > 1;
    inst.graph = grid ? grid_graph(side, side, opts.lambda) : chain_graph(num_vertices, opts.lambda);
    const index_t cols = grid ? side : num_vertices;

    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    inst.labels_true.resize(num_vertices);
    for (index_t v = 0; v < num_vertices; ++v) {
        const index_t col = v % cols;
        inst.labels_true[v] = perm[std::min(K - 1, col * K / cols)];
    }

    inst.q.assign(num_vertices * K, 0.0);
    for (index_t v = 0; v < num_vertices; ++v) {
        int observed = inst.labels_true[v];
        if (unif(rng) < flip_probability) {
            const auto shift = 1 + index_t(unif(rng) * double(K - 1)) % (K - 1);
            observed = int((index_t(observed) + shift) % K);
        }
        double sum = 0.0;
        Vector noise(K);
        for (double& c : noise) {
            c = 0.05 + unif(rng);
            sum += c;
        }
        for (index_t k = 0; k < K; ++k) {
            inst.q[v * K + k] = 0.4 * noise[k] / sum + (int(k) == observed ? 0.6 : 0.0);
        }
    }
    inst.training = select_training_set(inst.q, K, inst.labels_true, opts.train_per_class, seed + 1);
    return inst;
}

/**  lambda selection  **/

struct LineSearchResult {
    double best_lambda = 0.0;
    Vector scores;   // average F1 on the training subset, per candidate
};

/* constant lambda on every edge; each candidate solved with the forward-
 * Douglas-Rachford configuration, scored by avg_f1 of the argmax labels on
 * the training subset; ties go to the smaller lambda */
inline LineSearchResult line_search_lambda(std::span<const double> candidates,
    const LabelingInstance& instance, const SolveConfig& config, const BuildOptions& opts = {})
{
    detail::require(!candidates.empty(), ErrorCode::invalid_input, "line search: no candidates");
    detail::require(!instance.training.empty(), ErrorCode::invalid_input,
        "line search: empty training subset");
    detail::require_same_size(instance.labels_true.size(), instance.num_vertices(), "ground truth labels");
    LineSearchResult res;
    res.scores.resize(candidates.size());
    double best_score = -1.0;
    for (index_t c = 0; c < candidates.size(); ++c) {
        LabelingInstance inst = instance;
        std::fill(inst.graph.edge_weight.begin(), inst.graph.edge_weight.end(), candidates[c]);
        const auto problem = build_labeling_problem(inst, SplitMode::pfdr, opts);
        const auto sol = solve(problem, config);
        const auto labels = argmax_labels(sol.x, inst.K);
        res.scores[c] = avg_f1(labels, inst.labels_true, inst.training, inst.K);
        if (res.scores[c] > best_score ||
            (res.scores[c] == best_score && candidates[c] < res.best_lambda)) {
            best_score = res.scores[c];
            res.best_lambda = candidates[c];
        }
    }
    return res;
}

} // namespace pfdr
