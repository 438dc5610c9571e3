#pragma once
/*=============================================================================
 * Block layout over the coordinates of a (multichannel) graph signal, and the
 * diagonal splitting weights W_i attached to each block.
 *
 * Coordinates are indexed as vertex * channels + channel. For graph total
 * variation, block i holds the coordinates of both endpoints of edge i; an
 * optional extra block covers every coordinate (generalized forward-backward
 * configuration), and coordinates of isolated vertices are gathered into a
 * filler block carrying the zero operator.
 *===========================================================================*/

#include <algorithm>
#include <numeric>

#include "graph.hpp"

namespace pfdr {

enum class BlockKind { edge, extra, filler, generic };

struct Block {
    BlockKind kind = BlockKind::generic;
    index_t edge = npos;               // edge index for edge blocks
    std::vector<index_t> support;      // sorted, duplicate-free coordinates
};

struct BlockLayout {
    index_t dim = 0;
    index_t channels = 1;
    std::vector<Block> blocks;

    index_t num_blocks() const noexcept { return blocks.size(); }

    bool has_extra() const
    {
        return std::any_of(blocks.begin(), blocks.end(),
            [](const Block& b) { return b.kind == BlockKind::extra; });
    }

    /* number of blocks covering each coordinate */
    std::vector<index_t> coverage() const
    {
        std::vector<index_t> count(dim, 0);
        for (const auto& b : blocks) {
            for (index_t j : b.support) ++count[j];
        }
        return count;
    }

    std::vector<index_t> uncovered() const
    {
        std::vector<index_t> out;
        const auto count = coverage();
        for (index_t j = 0; j < dim; ++j) {
            if (count[j] == 0) out.push_back(j);
        }
        return out;
    }

    void validate() const
    {
        for (index_t i = 0; i < blocks.size(); ++i) {
            const auto& s = blocks[i].support;
            detail::require(!s.empty(), ErrorCode::invalid_input,
                "block " + std::to_string(i) + " has empty support");
            for (index_t t = 0; t < s.size(); ++t) {
                detail::require(s[t] < dim, ErrorCode::invalid_input,
                    "block " + std::to_string(i) + " support out of range");
                detail::require(t == 0 || s[t - 1] < s[t], ErrorCode::invalid_input,
                    "block " + std::to_string(i) + " support not sorted and duplicate-free");
            }
        }
        const auto missing = uncovered();
        if (!missing.empty()) {
            throw Error(ErrorCode::layout_infeasible,
                "coordinate " + std::to_string(missing.front()) + " is covered by no block");
        }
    }
};

/* coordinates of an edge block: all channels of u, then all channels of v */
inline std::vector<index_t> edge_support(const Edge& e, index_t channels)
{
    std::vector<index_t> s;
    s.reserve(2 * channels);
    for (index_t k = 0; k < channels; ++k) s.push_back(e.u * channels + k);
    for (index_t k = 0; k < channels; ++k) s.push_back(e.v * channels + k);
    return s;
}

inline BlockLayout graph_layout(const Graph& g, index_t channels, bool extra_block)
{
    detail::require(channels >= 1, ErrorCode::invalid_input, "layout: channels must be positive");
    BlockLayout layout;
    layout.dim = g.num_vertices * channels;
    layout.channels = channels;
    layout.blocks.reserve(g.num_edges() + 2);
    for (index_t e = 0; e < g.num_edges(); ++e) {
        layout.blocks.push_back({BlockKind::edge, e, edge_support(g.edges[e], channels)});
    }

    std::vector<bool> touched(g.num_vertices, false);
    for (const auto& e : g.edges) touched[e.u] = touched[e.v] = true;
    Block filler{BlockKind::filler, npos, {}};
    for (index_t v = 0; v < g.num_vertices; ++v) {
        if (touched[v]) continue;
        for (index_t k = 0; k < channels; ++k) filler.support.push_back(v * channels + k);
    }
    if (!filler.support.empty()) layout.blocks.push_back(std::move(filler));

    if (extra_block && layout.dim > 0) {
        Block extra{BlockKind::extra, npos, std::vector<index_t>(layout.dim)};
        std::iota(extra.support.begin(), extra.support.end(), index_t{0});
        layout.blocks.push_back(std::move(extra));
    }
    return layout;
}

/* one diagonal weight per block, stored compactly on the block support */
struct SplitWeights {
    std::vector<Vector> per_block;
    std::vector<index_t> degenerate_vertices;   // fallback to uniform split

    /* expanded full-dimension representation of each W_i */
    std::vector<Vector> expand(const BlockLayout& layout) const
    {
        std::vector<Vector> dense(per_block.size(), Vector(layout.dim, 0.0));
        for (index_t i = 0; i < per_block.size() && i < layout.blocks.size(); ++i) {
            const auto& s = layout.blocks[i].support;
            for (index_t t = 0; t < s.size() && t < per_block[i].size(); ++t) {
                dense[i][s[t]] = per_block[i][t];
            }
        }
        return dense;
    }
};

/* Edge block weights at vertex u are proportional to the edge lambdas
 * incident to u, scaled to (1 - reserve); the extra block takes the reserve;
 * filler blocks take 1 - reserve. A vertex whose incident lambdas are not all
 * positive falls back to a uniform split among its edges. */
inline SplitWeights compute_weight_heuristic(const Graph& g, const BlockLayout& layout,
    double reserve)
{
    detail::require(reserve >= 0.0 && reserve < 1.0, ErrorCode::invalid_input,
        "weights: reserve must lie in [0, 1)");
    detail::require(layout.dim == g.num_vertices * layout.channels, ErrorCode::invalid_input,
        "weights: layout not derived from graph");
    const bool extra = layout.has_extra();
    detail::require(reserve == 0.0 || extra, ErrorCode::invalid_input,
        "weights: positive reserve requires an extra full-support block");
    detail::require(!extra || reserve > 0.0, ErrorCode::layout_infeasible,
        "weights: extra block present but reserve is 0");
    layout.validate();

    const index_t K = layout.channels;
    const auto incident = g.incident_edges();
    SplitWeights w;

    // per-vertex normalization of incident lambdas
    Vector lambda_sum(g.num_vertices, 0.0);
    std::vector<bool> uniform(g.num_vertices, false);
    for (index_t v = 0; v < g.num_vertices; ++v) {
        for (index_t e : incident[v]) {
            lambda_sum[v] += g.edge_weight[e];
            if (!(g.edge_weight[e] > 0.0)) uniform[v] = true;
        }
        if (uniform[v] && !incident[v].empty()) w.degenerate_vertices.push_back(v);
    }
    auto edge_share = [&](index_t e, index_t v) {
        if (uniform[v]) return 1.0 / static_cast<double>(incident[v].size());
        return g.edge_weight[e] / lambda_sum[v];
    };

    const double share = 1.0 - reserve;
    w.per_block.reserve(layout.blocks.size());
    for (const auto& b : layout.blocks) {
        Vector wi(b.support.size());
        switch (b.kind) {
        case BlockKind::edge: {
            const Edge& e = g.edges[b.edge];
            for (index_t k = 0; k < K; ++k) {
                wi[k] = share * edge_share(b.edge, e.u);
                wi[K + k] = share * edge_share(b.edge, e.v);
            }
            break;
        }
        case BlockKind::extra: std::fill(wi.begin(), wi.end(), reserve); break;
        case BlockKind::filler: std::fill(wi.begin(), wi.end(), share); break;
        case BlockKind::generic:
            throw Error(ErrorCode::invalid_input, "weights: generic blocks need explicit weights");
        }
        w.per_block.push_back(std::move(wi));
    }
    return w;
}

struct WeightReport {
    double max_sum_deviation = 0.0;
    std::vector<index_t> flagged;            // coordinates with a violation
    std::vector<std::string> violations;     // human readable, hypothesis named
    bool passed() const noexcept { return violations.empty(); }
};

inline constexpr double weight_sum_tolerance = 1e-12;

/* checks (P2) on full-dimension weights: zero off the block support,
 * positive on it, and summing to the identity */
inline WeightReport validate_split_weights(std::span<const Vector> dense,
    const BlockLayout& layout)
{
    WeightReport report;
    auto flag = [&](index_t j, std::string msg) {
        report.flagged.push_back(j);
        report.violations.push_back(std::move(msg));
    };
    if (dense.size() != layout.blocks.size()) {
        report.violations.push_back("(P2) expected one weight per block (" +
            std::to_string(layout.blocks.size()) + "), got " + std::to_string(dense.size()));
        return report;
    }
    Vector sum(layout.dim, 0.0);
    for (index_t i = 0; i < dense.size(); ++i) {
        if (dense[i].size() != layout.dim) {
            report.violations.push_back("(P2) weight of block " + std::to_string(i) +
                " has wrong dimension");
            continue;
        }
        const auto& s = layout.blocks[i].support;
        index_t t = 0;
        for (index_t j = 0; j < layout.dim; ++j) {
            const bool on_support = t < s.size() && s[t] == j;
            const double wij = dense[i][j];
            if (on_support) {
                ++t;
                if (!(wij > 0.0)) {
                    flag(j, "(P2)(ii) block " + std::to_string(i) +
                        " nonpositive weight on support at coordinate " + std::to_string(j));
                }
            } else if (wij != 0.0) {
                flag(j, "(P2)(i) block " + std::to_string(i) +
                    " nonzero weight off support at coordinate " + std::to_string(j));
            }
            sum[j] += wij;
        }
    }
    for (index_t j = 0; j < layout.dim; ++j) {
        const double dev = std::abs(sum[j] - 1.0);
        report.max_sum_deviation = std::max(report.max_sum_deviation, dev);
        if (!(dev < weight_sum_tolerance)) {
            flag(j, "(P2)(iv) weights sum to " + std::to_string(sum[j]) +
                " at coordinate " + std::to_string(j));
        }
    }
    return report;
}

inline WeightReport validate_split_weights(const SplitWeights& weights, const BlockLayout& layout)
{
    WeightReport report;
    for (index_t i = 0; i < weights.per_block.size() && i < layout.blocks.size(); ++i) {
        if (weights.per_block[i].size() != layout.blocks[i].support.size()) {
            report.violations.push_back("(P2) compact weight of block " + std::to_string(i) +
                " does not match its support size");
        }
    }
    if (!report.passed()) return report;
    const auto dense = weights.expand(layout);
    return validate_split_weights(std::span<const Vector>(dense), layout);
}

} // namespace pfdr
