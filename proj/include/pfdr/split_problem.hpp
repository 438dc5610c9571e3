#pragma once
/*=============================================================================
 * The problem consumed by the preconditioned forward-Douglas-Rachford
 * iteration: find x minimizing  sum_i g_i(x) + f(x) + h(x), with
 *
 *  - blocks g_i depending only on the coordinates of their support H_i, each
 *    accessed through its prox in the metric Gamma^-1 W_i restricted to H_i,
 *  - f smooth with gradient B and diagonal curvature bound L,
 *  - h accessed through its prox in the metric Gamma^-1 (the resolvent of
 *    Gamma C), identity when h = 0,
 *  - diagonal step Gamma and diagonal splitting weights W_i summing to Id.
 *
 * Also the two graph configurations: forward-Douglas-Rachford (h kept as the
 * full-term resolvent) and generalized forward-backward (h moved into an
 * extra full-support block, C = 0).
 *===========================================================================*/

#include <functional>
#include <sstream>
#include <optional>

#include "layout.hpp"
#include "smooth.hpp"

namespace pfdr {

/* prox of a term on a block support: input, metric and output all have the
 * support size; an empty function is the identity (zero operator) */
using ProxFn =
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct SplitProblem {
    BlockLayout layout;
    std::vector<ProxFn> block_prox;        // one per block
    std::optional<SmoothTerm> smooth;      // B = 0 when absent
    ProxFn full_resolvent;                 // prox_h in metric Gamma^-1
    SplitWeights weights;
    DiagonalOperator gamma;
    ObjectiveFn objective;                 // full functional, +inf off domain

    index_t dim() const noexcept { return layout.dim; }
    index_t num_blocks() const noexcept { return layout.blocks.size(); }

    /* number of auxiliary variables z_i the iteration carries */
    index_t num_auxiliaries() const noexcept { return layout.blocks.size(); }
};

/* ||L^1/2 Gamma L^1/2|| for diagonal L, Gamma: max_j L_j Gamma_j; with a
 * scalar bound L = l Id this is l max_j Gamma_j */
inline double preconditioned_curvature_norm(const SplitProblem& p)
{
    if (!p.smooth) return 0.0;
    const auto& l = p.smooth->curvature.values;
    double norm = 0.0;
    for (index_t j = 0; j < l.size() && j < p.gamma.size(); ++j) {
        norm = std::max(norm, l[j] * p.gamma[j]);
    }
    return norm;
}

/* relaxation must lie in ]0, rho_upper_bound[ */
inline double rho_upper_bound(const SplitProblem& p)
{
    return 2.0 - 0.5 * preconditioned_curvature_norm(p);
}

inline double default_rho(const SplitProblem& p)
{
    return std::min(1.0, 0.99 * rho_upper_bound(p));
}

struct HypothesisReport {
    std::vector<std::string> violations;
    double curvature_norm = 0.0;
    double rho_upper = 0.0;

    bool passed() const noexcept { return violations.empty(); }

    std::string summary() const
    {
        std::string s;
        for (const auto& v : violations) {
            if (!s.empty()) s += "; ";
            s += v;
        }
        return s;
    }
};

inline std::string format_real(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/* checks everything the iteration requires before it starts: structure,
 * (H1) positivity of L, (P1) positivity of Gamma and ||L^1/2 Gamma L^1/2|| < 2,
 * (P2) weights, and the relaxation range when a rho is given */
inline HypothesisReport check_hypotheses(const SplitProblem& p,
    std::optional<double> rho = std::nullopt)
{
    HypothesisReport r;
    try {
        p.layout.validate();
    } catch (const Error& e) {
        r.violations.push_back(std::string("(H2) layout: ") + e.what());
    }
    if (p.block_prox.size() != p.layout.blocks.size()) {
        r.violations.push_back("(H2) expected one block prox per block");
    }
    if (p.gamma.size() != p.dim()) {
        r.violations.push_back("(P1) Gamma has wrong dimension");
    } else if (!p.gamma.strictly_positive()) {
        r.violations.push_back("(P1) Gamma not strictly positive");
    }
    if (p.smooth) {
        if (!p.smooth->gradient) r.violations.push_back("(H1) smooth term without gradient");
        if (p.smooth->curvature.size() != p.dim()) {
            r.violations.push_back("(H1) L has wrong dimension");
        } else if (!p.smooth->curvature.strictly_positive()) {
            r.violations.push_back("(H1) L not strictly positive");
        }
    }
    r.curvature_norm = preconditioned_curvature_norm(p);
    r.rho_upper = 2.0 - 0.5 * r.curvature_norm;
    if (!(r.curvature_norm < 2.0)) {
        r.violations.push_back("(P1)(i) ||L^1/2 Gamma L^1/2|| = " + format_real(r.curvature_norm) +
            " is not < 2");
    }
    const auto w = validate_split_weights(p.weights, p.layout);
    for (const auto& v : w.violations) r.violations.push_back(v);
    if (rho) {
        if (!(*rho > 0.0 && *rho < r.rho_upper)) {
            r.violations.push_back("rho = " + format_real(*rho) + " outside ]0, " +
                format_real(r.rho_upper) + "[ (relaxation range)");
        }
    }
    return r;
}

inline void require_hypotheses(const SplitProblem& p, std::optional<double> rho = std::nullopt)
{
    const auto report = check_hypotheses(p, rho);
    if (!report.passed()) throw Error(ErrorCode::hypothesis_violation, report.summary());
}

/**  graph configurations  **/

struct CompositeIngredients {
    Graph graph;
    index_t channels = 1;
    /* prox of the total variation term of one edge on its block support */
    std::function<ProxFn(index_t edge)> edge_prox;
    std::optional<SmoothTerm> smooth;
    /* prox of h over the full dimension in a given metric; empty when h = 0 */
    ProxFn h_prox;
    DiagonalOperator gamma;
    /* weight of the extra block in the generalized forward-backward layout */
    double reserve = 0.2;
    ObjectiveFn objective;
};

namespace detail {

inline SplitProblem configure_common(const CompositeIngredients& in, bool extra_block,
    double reserve)
{
    SplitProblem p;
    p.layout = graph_layout(in.graph, in.channels, extra_block);
    p.weights = compute_weight_heuristic(in.graph, p.layout, reserve);
    p.smooth = in.smooth;
    p.gamma = in.gamma;
    p.objective = in.objective;
    p.block_prox.reserve(p.layout.blocks.size());
    for (const auto& b : p.layout.blocks) {
        switch (b.kind) {
        case BlockKind::edge: p.block_prox.push_back(in.edge_prox ? in.edge_prox(b.edge) : ProxFn{}); break;
        case BlockKind::extra: p.block_prox.push_back(in.h_prox); break;
        default: p.block_prox.push_back(ProxFn{}); break;
        }
    }
    return p;
}

} // namespace detail

/* h handled by the full-term resolvent; iterates stay in dom h */
inline SplitProblem configure_pfdr(const CompositeIngredients& in)
{
    SplitProblem p = detail::configure_common(in, false, 0.0);
    p.full_resolvent = in.h_prox;
    return p;
}

/* C = 0 and h moved into an extra full-support block with weight reserve;
 * with h = 0 no extra block is added and this coincides with configure_pfdr */
inline SplitProblem configure_pgfb(const CompositeIngredients& in)
{
    if (!in.h_prox) return detail::configure_common(in, false, 0.0);
    detail::require(in.reserve > 0.0, ErrorCode::layout_infeasible,
        "generalized forward-backward: reserve 0 leaves the h block without weight");
    return detail::configure_common(in, true, in.reserve);
}

} // namespace pfdr
