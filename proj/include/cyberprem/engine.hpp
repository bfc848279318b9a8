#pragma once

// Monte Carlo simulator of the attack model: Galton-Watson network of radius
// R, attack source at a given depth, bidirectional bond percolation from the
// source, per-vertex costs, and a compound-Poisson number of attacks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cyberprem/closed_form.hpp"
#include "cyberprem/dist.hpp"
#include "cyberprem/error.hpp"
#include "cyberprem/model.hpp"
#include "cyberprem/rng.hpp"

namespace cyberprem {

using Vertex = std::int32_t;

inline constexpr std::size_t kDefaultVertexCap = 10'000'000;

// Rooted tree stored level by level: the children of v occupy the contiguous
// index range [first_child[v], first_child[v] + child_count[v]).
struct Tree {
    std::vector<Vertex> parent;  // -1 at the root
    std::vector<std::int32_t> depth;
    std::vector<Vertex> first_child;
    std::vector<std::int32_t> child_count;
    std::vector<Vertex> level_begin;  // level d is [level_begin[d], level_begin[d+1])
    int radius = 0;

    std::size_t size() const noexcept { return parent.size(); }
    std::size_t edge_count() const noexcept { return parent.size() - 1; }
    std::size_t level_size(int d) const noexcept {
        return static_cast<std::size_t>(level_begin[d + 1] - level_begin[d]);
    }
};

inline Tree sample_tree(const OffspringDistribution& d, int R, Rng& rng, std::size_t cap = kDefaultVertexCap) {
    if (R < 0) throw InvalidParameter("radius R must be >= 0");
    Tree t;
    t.radius = R;
    t.parent.push_back(-1);
    t.depth.push_back(0);
    t.level_begin = {0, 1};
    for (int level = 0; level < R; ++level) {
        const Vertex begin = t.level_begin[level];
        const Vertex end = t.level_begin[level + 1];
        for (Vertex v = begin; v < end; ++v) {
            const int k = d.sample(rng);
            if (t.parent.size() + static_cast<std::size_t>(k) > cap) {
                throw SizeCapExceeded("tree exceeds vertex cap of " + std::to_string(cap) +
                                      " (supercritical growth?)");
            }
            t.first_child.push_back(static_cast<Vertex>(t.parent.size()));
            t.child_count.push_back(k);
            for (int c = 0; c < k; ++c) {
                t.parent.push_back(v);
                t.depth.push_back(level + 1);
            }
        }
        t.level_begin.push_back(static_cast<Vertex>(t.parent.size()));
    }
    // Leaves at depth R.
    while (t.first_child.size() < t.parent.size()) {
        t.first_child.push_back(static_cast<Vertex>(t.parent.size()));
        t.child_count.push_back(0);
    }
    return t;
}

// Walks down from the root choosing a uniform child at each step. Ancestors
// of the source then carry the unconditioned offspring law; drawing uniformly
// from the whole depth-r level instead would size-bias them.
inline Vertex place_source(const Tree& tree, int r, Rng& rng) {
    if (r < 0 || r > tree.radius) {
        throw InvalidParameter("source depth r=" + std::to_string(r) + " outside [0, R=" +
                               std::to_string(tree.radius) + "]");
    }
    Vertex v = 0;
    for (int d = 0; d < r; ++d) {
        v = tree.first_child[v] + static_cast<Vertex>(rng.below(static_cast<std::uint64_t>(tree.child_count[v])));
    }
    return v;
}

// Breadth-first directed reachability from the source. Each arrow is drawn
// the first and only time the traversal tries to cross it. The source is
// element 0 of the result.
inline std::vector<Vertex> percolate(const Tree& tree, Vertex source, const PercolationParams& pp, Rng& rng) {
    if (source < 0 || static_cast<std::size_t>(source) >= tree.size()) throw InvalidParameter("source not in tree");
    std::vector<Vertex> via(tree.size(), -1);
    std::vector<Vertex> cluster{source};
    for (std::size_t head = 0; head < cluster.size(); ++head) {
        const Vertex u = cluster[head];
        const Vertex end = tree.first_child[u] + tree.child_count[u];
        for (Vertex c = tree.first_child[u]; c < end; ++c) {
            if (c == via[u]) continue;
            if (rng.bernoulli(pp.p)) {
                via[c] = u;
                cluster.push_back(c);
            }
        }
        const Vertex up = tree.parent[u];
        if (up >= 0 && up != via[u] && rng.bernoulli(pp.q)) {
            via[up] = u;
            cluster.push_back(up);
        }
    }
    return cluster;
}

// Diameter of a tree on vertices 0..n-1 given by its n-1 edges, by double
// breadth-first traversal.
inline int tree_diameter(std::size_t n, std::span<const std::pair<Vertex, Vertex>> edges) {
    if (n <= 1) return 0;
    std::vector<std::int32_t> degree_start(n + 1, 0);
    for (const auto& [a, b] : edges) {
        ++degree_start[a + 1];
        ++degree_start[b + 1];
    }
    for (std::size_t i = 0; i < n; ++i) degree_start[i + 1] += degree_start[i];
    std::vector<Vertex> adj(degree_start[n]);
    std::vector<std::int32_t> fill(degree_start.begin(), degree_start.end() - 1);
    for (const auto& [a, b] : edges) {
        adj[fill[a]++] = b;
        adj[fill[b]++] = a;
    }
    std::vector<std::int32_t> dist(n);
    std::vector<Vertex> queue(n);
    auto farthest = [&](Vertex start) {
        std::fill(dist.begin(), dist.end(), -1);
        std::size_t head = 0;
        std::size_t tail = 0;
        queue[tail++] = start;
        dist[start] = 0;
        Vertex last = start;
        while (head < tail) {
            const Vertex u = queue[head++];
            last = u;
            for (auto i = degree_start[u]; i < degree_start[u + 1]; ++i) {
                const Vertex w = adj[i];
                if (dist[w] < 0) {
                    dist[w] = dist[u] + 1;
                    queue[tail++] = w;
                }
            }
        }
        return std::pair{last, dist[last]};
    };
    const Vertex a = farthest(0).first;
    return farthest(a).second;
}

struct ClusterStats {
    std::int64_t size = 1;
    int diameter = 0;
    int upward_reach = 0;
    double loss = 0.0;
};

inline ClusterStats attack_stats(const Tree& tree, Vertex source, const PercolationParams& pp,
                                 const CostDistribution& cost, Rng& rng) {
    const std::vector<Vertex> cluster = percolate(tree, source, pp, rng);
    ClusterStats s;
    s.size = static_cast<std::int64_t>(cluster.size());

    std::vector<Vertex> local(tree.size(), -1);
    for (std::size_t i = 0; i < cluster.size(); ++i) local[cluster[i]] = static_cast<Vertex>(i);
    int top_depth = tree.depth[source];
    std::vector<std::pair<Vertex, Vertex>> edges;
    edges.reserve(cluster.size());
    for (const Vertex v : cluster) {
        top_depth = std::min(top_depth, tree.depth[v]);
        const Vertex up = tree.parent[v];
        if (up >= 0 && local[up] >= 0) edges.emplace_back(local[v], local[up]);
    }
    s.upward_reach = tree.depth[source] - top_depth;
    s.diameter = tree_diameter(cluster.size(), edges);
    for (std::size_t i = 0; i < cluster.size(); ++i) s.loss += cost.sample(rng);
    return s;
}

// One attack on a network that is generated only where the infection
// reaches: the ancestors of the source on demand, and the offspring of each
// infected vertex when it is expanded. Same law as sample_tree + place_source
// + attack_stats, at a cost proportional to the cluster rather than the tree.
inline ClusterStats simulate_attack(const OffspringDistribution& d, int R, int r, const PercolationParams& pp,
                                    const CostDistribution& cost, Rng& rng, std::size_t cap = kDefaultVertexCap) {
    if (r < 0 || r > R) {
        throw InvalidParameter("source depth r=" + std::to_string(r) + " outside [0, R=" + std::to_string(R) + "]");
    }
    std::vector<std::int32_t> depth{r};
    std::vector<std::pair<Vertex, Vertex>> edges;

    // Grows the infected part of the subtree below the most recently added
    // vertex; `skip_one` marks an ancestor whose child on the source path is
    // already infected.
    auto grow_below = [&](bool skip_one) {
        const std::size_t start = depth.size() - 1;
        for (std::size_t head = start; head < depth.size(); ++head) {
            const auto u = static_cast<Vertex>(head);
            if (depth[u] >= R) continue;
            int k = d.sample(rng);
            if (head == start && skip_one) --k;
            for (int c = 0; c < k; ++c) {
                if (!rng.bernoulli(pp.p)) continue;
                if (depth.size() >= cap) {
                    throw SizeCapExceeded("cluster exceeds vertex cap of " + std::to_string(cap));
                }
                const auto child = static_cast<Vertex>(depth.size());
                depth.push_back(depth[u] + 1);
                edges.emplace_back(child, u);
            }
        }
    };

    grow_below(false);
    int reach = 0;
    Vertex below = 0;
    for (int j = r - 1; j >= 0; --j) {
        if (!rng.bernoulli(pp.q)) break;
        const auto ancestor = static_cast<Vertex>(depth.size());
        depth.push_back(j);
        edges.emplace_back(ancestor, below);
        ++reach;
        grow_below(true);
        below = ancestor;
    }

    ClusterStats s;
    s.size = static_cast<std::int64_t>(depth.size());
    s.upward_reach = reach;
    s.diameter = tree_diameter(depth.size(), edges);
    for (std::size_t i = 0; i < depth.size(); ++i) s.loss += cost.sample(rng);
    return s;
}

enum class TreeMode {
    lazy,          // network grown on demand for each attack
    materialized,  // full fresh tree per attack
    static_tree,   // a fixed pool of trees reused across attacks
};

struct SimulationOptions {
    TreeMode mode = TreeMode::lazy;
    int static_trees = 100;  // pool size for TreeMode::static_tree
    std::size_t vertex_cap = kDefaultVertexCap;
};

struct Statistic {
    enum class Kind { size, size_sq, loss_t, diam_tail, reach_eq, attack_loss };
    Kind kind = Kind::size;
    int n = 0;  // diam_tail threshold n (diam >= 2n) or reach_eq value

    static Statistic parse(const std::string& text) {
        auto with_arg = [&](const std::string& prefix, Kind kind) -> std::optional<Statistic> {
            if (text.rfind(prefix, 0) != 0) return std::nullopt;
            std::string arg = text.substr(prefix.size());
            if (!arg.empty() && (arg.front() == ':' || arg.front() == '(')) arg.erase(0, 1);
            if (!arg.empty() && arg.back() == ')') arg.pop_back();
            std::size_t used = 0;
            int value = 0;
            try {
                value = std::stoi(arg, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (arg.empty() || used != arg.size() || value < 0) {
                throw ConfigError("statistic '" + text + "': expected a nonnegative integer argument");
            }
            return Statistic{kind, value};
        };
        if (text == "size") return {Kind::size, 0};
        if (text == "size_sq") return {Kind::size_sq, 0};
        if (text == "loss_t") return {Kind::loss_t, 0};
        if (text == "loss") return {Kind::attack_loss, 0};
        if (auto s = with_arg("diam_tail", Kind::diam_tail)) return *s;
        if (auto s = with_arg("reach_eq", Kind::reach_eq)) return *s;
        throw ConfigError("unknown statistic '" + text +
                          "' (expected size, size_sq, loss, loss_t, diam_tail:N or reach_eq:K)");
    }

    std::string name() const {
        switch (kind) {
            case Kind::size: return "size";
            case Kind::size_sq: return "size_sq";
            case Kind::loss_t: return "loss_t";
            case Kind::attack_loss: return "loss";
            case Kind::diam_tail: return "diam_tail:" + std::to_string(n);
            case Kind::reach_eq: return "reach_eq:" + std::to_string(n);
        }
        return {};
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
};

struct TraceRow {
    std::uint64_t sample_index = 0;
    ClusterStats stats;
};

// Fixed simulation context: the model, the options and, in static mode, the
// pre-drawn tree pool.
class Simulator {
public:
    Simulator(ModelConfig cfg, SimulationOptions opts, std::uint64_t seed)
        : cfg_(std::move(cfg)), opts_(opts), seed_(seed) {
        cfg_.validate();
        if (opts_.mode == TreeMode::static_tree) {
            if (opts_.static_trees < 1) throw InvalidParameter("static tree pool must hold at least one tree");
            for (int i = 0; i < opts_.static_trees; ++i) {
                Rng rng = Rng::for_stream(seed_ ^ kPoolSalt, static_cast<std::uint64_t>(i));
                pool_.push_back(sample_tree(cfg_.offspring, cfg_.R, rng, opts_.vertex_cap));
            }
        }
    }

    const ModelConfig& config() const noexcept { return cfg_; }
    std::uint64_t seed() const noexcept { return seed_; }

    ClusterStats attack(std::uint64_t index, Rng& rng) const {
        const int r = cfg_.source.sample(rng);
        switch (opts_.mode) {
            case TreeMode::lazy:
                return simulate_attack(cfg_.offspring, cfg_.R, r, cfg_.percolation, cfg_.attack.cost, rng,
                                       opts_.vertex_cap);
            case TreeMode::materialized: {
                const Tree tree = sample_tree(cfg_.offspring, cfg_.R, rng, opts_.vertex_cap);
                return attack_stats(tree, place_source(tree, r, rng), cfg_.percolation, cfg_.attack.cost, rng);
            }
            case TreeMode::static_tree: {
                const Tree& tree = pool_[index % pool_.size()];
                return attack_stats(tree, place_source(tree, r, rng), cfg_.percolation, cfg_.attack.cost, rng);
            }
        }
        return {};
    }

    // L_t = sum of the losses of N ~ Poisson(lambda t) attacks.
    double aggregate(double t, std::uint64_t index, Rng& rng, std::vector<TraceRow>* trace = nullptr) const {
        if (!(t >= 0.0)) throw InvalidParameter("horizon t must be >= 0");
        const std::uint64_t attacks = sample_poisson(cfg_.attack.lambda * t, rng);
        double total = 0.0;
        for (std::uint64_t i = 0; i < attacks; ++i) {
            const ClusterStats s = attack(index, rng);
            if (trace) trace->push_back({index, s});
            total += s.loss;
        }
        return total;
    }

    // Value of the statistic on sample `index`; the draw depends only on
    // (seed, index).
    double sample(const Statistic& stat, std::uint64_t index, std::vector<TraceRow>* trace = nullptr) const {
        Rng rng = Rng::for_stream(seed_, index);
        if (stat.kind == Statistic::Kind::loss_t) return aggregate(cfg_.attack.t, index, rng, trace);
        const ClusterStats s = attack(index, rng);
        if (trace) trace->push_back({index, s});
        switch (stat.kind) {
            case Statistic::Kind::size: return static_cast<double>(s.size);
            case Statistic::Kind::size_sq: return static_cast<double>(s.size) * static_cast<double>(s.size);
            case Statistic::Kind::attack_loss: return s.loss;
            case Statistic::Kind::diam_tail: return s.diameter >= 2 * stat.n ? 1.0 : 0.0;
            case Statistic::Kind::reach_eq: return s.upward_reach == stat.n ? 1.0 : 0.0;
            case Statistic::Kind::loss_t: break;
        }
        return 0.0;
    }

private:
    static constexpr std::uint64_t kPoolSalt = 0x7374617469637472ULL;

    ModelConfig cfg_;
    SimulationOptions opts_;
    std::uint64_t seed_;
    std::vector<Tree> pool_;
};

inline double simulate_aggregate(const ModelConfig& cfg, double t, Rng& rng) {
    const Simulator sim(cfg, {}, 0);
    return sim.aggregate(t, 0, rng);
}

namespace detail {

inline constexpr std::uint64_t kBlockSize = 1024;

// Runs body(block) for every block in [0, blocks) on `workers` threads.
// Exceptions are rethrown from the lowest failing block.
template <class Body>
void for_each_block(std::uint64_t blocks, int workers, Body&& body) {
    std::vector<std::exception_ptr> errors(blocks);
    std::atomic<std::uint64_t> next{0};
    auto run = [&] {
        for (std::uint64_t b; (b = next.fetch_add(1)) < blocks;) {
            try {
                body(b);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::uint64_t>(blocks, 1024))));
    if (threads == 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(run);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct Welford {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double delta = o.mean - mean;
        mean += delta * static_cast<double>(o.n) / total;
        m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }
};

}  // namespace detail

// Mean and standard error of the statistic over samples 0..n_samples-1.
// Samples are grouped in fixed blocks merged in block order, so the result
// is bit-identical for any worker count.
inline McEstimate estimate(const Simulator& sim, const Statistic& stat, std::uint64_t n_samples, int workers = 1) {
    if (n_samples < 2) throw InvalidParameter("estimate needs at least 2 samples");
    const std::uint64_t blocks = (n_samples + detail::kBlockSize - 1) / detail::kBlockSize;
    std::vector<detail::Welford> partial(blocks);
    detail::for_each_block(blocks, workers, [&](std::uint64_t b) {
        const std::uint64_t end = std::min(n_samples, (b + 1) * detail::kBlockSize);
        detail::Welford acc;
        for (std::uint64_t i = b * detail::kBlockSize; i < end; ++i) acc.add(sim.sample(stat, i));
        partial[b] = acc;
    });
    detail::Welford total;
    for (const auto& w : partial) total.merge(w);
    const double var = total.m2 / static_cast<double>(total.n - 1);
    return {total.mean, std::sqrt(std::max(0.0, var) / static_cast<double>(total.n)), total.n, sim.seed()};
}

inline McEstimate estimate(const ModelConfig& cfg, const Statistic& stat, std::uint64_t n_samples,
                           std::uint64_t seed, int workers = 1, SimulationOptions opts = {}) {
    return estimate(Simulator(cfg, opts, seed), stat, n_samples, workers);
}

// Per-sample values in index order.
inline std::vector<double> sample_values(const Simulator& sim, const Statistic& stat, std::uint64_t n_samples,
                                         int workers = 1) {
    std::vector<double> out(n_samples);
    const std::uint64_t blocks = (n_samples + detail::kBlockSize - 1) / detail::kBlockSize;
    detail::for_each_block(blocks, workers, [&](std::uint64_t b) {
        const std::uint64_t end = std::min(n_samples, (b + 1) * detail::kBlockSize);
        for (std::uint64_t i = b * detail::kBlockSize; i < end; ++i) out[i] = sim.sample(stat, i);
    });
    return out;
}

// Every attack simulated for samples 0..n_samples-1, in index order.
inline std::vector<TraceRow> trace(const Simulator& sim, const Statistic& stat, std::uint64_t n_samples,
                                   int workers = 1) {
    const std::uint64_t blocks = (n_samples + detail::kBlockSize - 1) / detail::kBlockSize;
    std::vector<std::vector<TraceRow>> parts(blocks);
    detail::for_each_block(blocks, workers, [&](std::uint64_t b) {
        const std::uint64_t end = std::min(n_samples, (b + 1) * detail::kBlockSize);
        for (std::uint64_t i = b * detail::kBlockSize; i < end; ++i) sim.sample(stat, i, &parts[b]);
    });
    std::vector<TraceRow> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

}  // namespace cyberprem
