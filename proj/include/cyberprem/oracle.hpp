#pragma once

// Exact cluster-size moments on small fixed trees by exhaustive enumeration
// of arrow states. Ground truth for the closed forms and the simulator.

#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cyberprem/closed_form.hpp"
#include "cyberprem/engine.hpp"
#include "cyberprem/error.hpp"

namespace cyberprem {

inline constexpr std::size_t kMaxEnumerationEdges = 13;

struct EnumerationReport {
    double exact_first = 0.0;
    double exact_second = 0.0;
    std::map<int, double> exact_diam_tail;  // n -> P(diam >= 2n), n = 0..R+1
    std::uint64_t config_count = 0;         // 4^|E| arrow assignments covered
    double total_weight = 0.0;              // should be 1
};

// The complete k-ary tree of radius R.
inline Tree regular_tree(int k, int R) {
    Rng unused(0);
    return sample_tree(make_deterministic(k), R, unused);
}

namespace detail {

struct OracleAccumulator {
    double weight = 0.0;
    double first = 0.0;
    double second = 0.0;
    std::vector<double> tail;  // tail[n] = weight of diam >= 2n

    explicit OracleAccumulator(int max_n) : tail(static_cast<std::size_t>(max_n) + 1, 0.0) {}

    void add(double w, std::size_t size, int diameter) {
        const double s = static_cast<double>(size);
        weight += w;
        first += w * s;
        second += w * s * s;
        for (std::size_t n = 0; n < tail.size(); ++n) {
            if (diameter >= 2 * static_cast<int>(n)) tail[n] += w;
        }
    }

    void merge(const OracleAccumulator& o) {
        weight += o.weight;
        first += o.first;
        second += o.second;
        for (std::size_t n = 0; n < tail.size(); ++n) tail[n] += o.tail[n];
    }
};

inline int cluster_diameter(const Tree& tree, const std::vector<Vertex>& cluster, std::vector<Vertex>& local) {
    for (std::size_t i = 0; i < cluster.size(); ++i) local[cluster[i]] = static_cast<Vertex>(i);
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (const Vertex v : cluster) {
        const Vertex up = tree.parent[v];
        if (up >= 0 && local[up] >= 0) edges.emplace_back(local[v], local[up]);
    }
    const int diameter = tree_diameter(cluster.size(), edges);
    for (const Vertex v : cluster) local[v] = -1;
    return diameter;
}

inline void check_instance(const Tree& tree, Vertex source, const PercolationParams& pp) {
    pp.validate();
    if (tree.edge_count() > kMaxEnumerationEdges) {
        throw InstanceTooLarge("enumeration limited to " + std::to_string(kMaxEnumerationEdges) +
                               " edges, tree has " + std::to_string(tree.edge_count()));
    }
    if (source < 0 || static_cast<std::size_t>(source) >= tree.size()) throw InvalidParameter("source not in tree");
}

inline EnumerationReport finish(const OracleAccumulator& acc, std::size_t edges) {
    EnumerationReport rep;
    rep.total_weight = acc.weight;
    rep.exact_first = acc.first;
    rep.exact_second = acc.second;
    for (std::size_t n = 0; n < acc.tail.size(); ++n) rep.exact_diam_tail[static_cast<int>(n)] = acc.tail[n];
    rep.config_count = std::uint64_t{1} << (2 * edges);
    return rep;
}

}  // namespace detail

// Sums over every one of the 4^|E| joint arrow states. Edge e joins vertex
// e+1 to its parent; bit 2e is its downward arrow, bit 2e+1 its upward one.
// The state space is cut into fixed chunks merged in order, so the result
// does not depend on `workers`.
inline EnumerationReport enumerate_bruteforce(const Tree& tree, Vertex source, const PercolationParams& pp,
                                              int workers = 1) {
    detail::check_instance(tree, source, pp);
    const std::size_t edges = tree.edge_count();
    const std::uint64_t total = std::uint64_t{1} << (2 * edges);
    const std::uint64_t chunks = std::min<std::uint64_t>(total, 64);
    const std::uint64_t per_chunk = (total + chunks - 1) / chunks;
    const int max_n = tree.radius + 1;
    std::vector<detail::OracleAccumulator> parts(chunks, detail::OracleAccumulator(max_n));

    detail::for_each_block(chunks, workers, [&](std::uint64_t c) {
        std::vector<Vertex> local(tree.size(), -1);
        std::vector<Vertex> cluster;
        std::vector<char> seen(tree.size(), 0);
        auto& acc = parts[c];
        const std::uint64_t end = std::min(total, (c + 1) * per_chunk);
        for (std::uint64_t mask = c * per_chunk; mask < end; ++mask) {
            double w = 1.0;
            for (std::size_t e = 0; e < edges && w != 0.0; ++e) {
                w *= (mask >> (2 * e)) & 1 ? pp.p : 1.0 - pp.p;
                w *= (mask >> (2 * e + 1)) & 1 ? pp.q : 1.0 - pp.q;
            }
            if (w == 0.0) continue;
            cluster.assign(1, source);
            seen[source] = 1;
            for (std::size_t head = 0; head < cluster.size(); ++head) {
                const Vertex u = cluster[head];
                const Vertex end_child = tree.first_child[u] + tree.child_count[u];
                for (Vertex ch = tree.first_child[u]; ch < end_child; ++ch) {
                    const auto e = static_cast<std::size_t>(ch - 1);
                    if (!seen[ch] && ((mask >> (2 * e)) & 1)) {
                        seen[ch] = 1;
                        cluster.push_back(ch);
                    }
                }
                const Vertex up = tree.parent[u];
                if (up >= 0) {
                    const auto e = static_cast<std::size_t>(u - 1);
                    if (!seen[up] && ((mask >> (2 * e + 1)) & 1)) {
                        seen[up] = 1;
                        cluster.push_back(up);
                    }
                }
            }
            acc.add(w, cluster.size(), detail::cluster_diameter(tree, cluster, local));
            for (const Vertex v : cluster) seen[v] = 0;
        }
    });

    detail::OracleAccumulator acc(max_n);
    for (const auto& part : parts) acc.merge(part);
    return detail::finish(acc, edges);
}

// Same law, enumerating only the arrows the traversal actually consults:
// each outcome of the exploration is a product of the consulted arrow
// probabilities, and unconsulted arrows sum out to one.
inline EnumerationReport enumerate_exact(const Tree& tree, Vertex source, const PercolationParams& pp) {
    detail::check_instance(tree, source, pp);
    struct Arrow {
        Vertex from;
        Vertex to;
        double prob;
    };
    detail::OracleAccumulator acc(tree.radius + 1);
    std::vector<Vertex> local(tree.size(), -1);
    std::vector<Vertex> cluster{source};
    std::vector<Arrow> pending;

    auto push_arrows = [&](Vertex v, Vertex from) {
        const Vertex end = tree.first_child[v] + tree.child_count[v];
        for (Vertex c = tree.first_child[v]; c < end; ++c) {
            if (c != from) pending.push_back({v, c, pp.p});
        }
        const Vertex up = tree.parent[v];
        if (up >= 0 && up != from) pending.push_back({v, up, pp.q});
    };

    auto explore = [&](auto& self, double w) -> void {
        if (pending.empty()) {
            acc.add(w, cluster.size(), detail::cluster_diameter(tree, cluster, local));
            return;
        }
        const Arrow a = pending.back();
        pending.pop_back();
        if (a.prob < 1.0) self(self, w * (1.0 - a.prob));
        if (a.prob > 0.0) {
            const std::size_t mark = pending.size();
            cluster.push_back(a.to);
            push_arrows(a.to, a.from);
            self(self, w * a.prob);
            cluster.pop_back();
            pending.resize(mark);
        }
        pending.push_back(a);
    };

    push_arrows(source, -1);
    explore(explore, 1.0);
    return detail::finish(acc, tree.edge_count());
}

}  // namespace cyberprem
