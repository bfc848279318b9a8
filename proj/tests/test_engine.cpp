#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "cyberprem/closed_form.hpp"
#include "cyberprem/engine.hpp"

using namespace cyberprem;

namespace {

ModelConfig make_config(OffspringDistribution d, int R, int r, PercolationParams pp,
                        CostDistribution cost = CostDistribution::deterministic(1.0), double lambda = 1.0) {
    return ModelConfig{std::move(d), R, pp, SourceLaw::point(r), AttackModel{lambda, 1.0, std::move(cost)}, 0.0};
}

ModelConfig figure_config(int r, double p, double q) { return make_config(make_matched(5.0, 5.0), 4, r, {p, q}); }

void expect_within(const McEstimate& e, double exact, double k = 4.0) {
    EXPECT_LE(std::fabs(e.mean - exact), k * e.std_error + 1e-12) << "mean=" << e.mean << " se=" << e.std_error
                                                                  << " exact=" << exact;
}

bool is_connected_subtree(const Tree& tree, const std::vector<Vertex>& cluster) {
    std::set<Vertex> in(cluster.begin(), cluster.end());
    if (in.size() != cluster.size()) return false;
    std::size_t internal_edges = 0;
    for (const Vertex v : cluster) {
        if (tree.parent[v] >= 0 && in.count(tree.parent[v])) ++internal_edges;
    }
    return internal_edges + 1 == cluster.size();
}

}  // namespace

TEST(SampleTree, CompleteBinary) {
    Rng rng(1);
    const Tree t = sample_tree(make_deterministic(2), 2, rng);
    EXPECT_EQ(t.size(), 7u);
    EXPECT_EQ(t.level_size(0), 1u);
    EXPECT_EQ(t.level_size(1), 2u);
    EXPECT_EQ(t.level_size(2), 4u);
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (Vertex v = 1; v < 7; ++v) edges.emplace_back(v, t.parent[v]);
    EXPECT_EQ(tree_diameter(7, edges), 4);
    for (Vertex v = 1; v < 7; ++v) EXPECT_EQ(t.depth[v], t.depth[t.parent[v]] + 1);
}

TEST(SampleTree, RadiusZero) {
    Rng rng(1);
    const Tree t = sample_tree(make_matched(5.0, 5.0), 0, rng);
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(t.parent[0], -1);
}

TEST(SampleTree, MeanSizeMatchesBranchingProcess) {
    Rng rng(99);
    const auto d = make_matched(5.0, 5.0);
    const int n = 10'000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Tree t = sample_tree(d, 4, rng);
        for (int r = 0; r < 4; ++r) {
            for (Vertex v = t.level_begin[r]; v < t.level_begin[r + 1]; ++v) EXPECT_GE(t.child_count[v], 1);
        }
        const double x = static_cast<double>(t.size());
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
    EXPECT_LE(std::fabs(mean - 781.0), 4.0 * se);
}

TEST(SampleTree, VertexCap) {
    Rng rng(1);
    EXPECT_THROW(sample_tree(make_deterministic(10), 8, rng, 10'000), SizeCapExceeded);
    EXPECT_THROW(sample_tree(make_deterministic(2), -1, rng), InvalidParameter);
}

TEST(PlaceSource, Examples) {
    Rng rng(5);
    const Tree bin = sample_tree(make_deterministic(2), 2, rng);
    EXPECT_EQ(place_source(bin, 0, rng), 0);
    const Tree path = sample_tree(make_deterministic(1), 5, rng);
    for (int r = 0; r <= 5; ++r) EXPECT_EQ(place_source(path, r, rng), r);
    EXPECT_THROW(place_source(bin, 3, rng), InvalidParameter);

    const int n = 100'000;
    std::map<Vertex, int> counts;
    for (int i = 0; i < n; ++i) ++counts[place_source(bin, 2, rng)];
    ASSERT_EQ(counts.size(), 4u);
    for (const auto& [v, c] : counts) {
        EXPECT_EQ(bin.depth[v], 2);
        EXPECT_NEAR(c / double(n), 0.25, 4.0 * std::sqrt(0.25 * 0.75 / n));
    }
}

TEST(Percolate, Examples) {
    Rng rng(8);
    const Tree t = sample_tree(make_deterministic(2), 2, rng);
    EXPECT_EQ(percolate(t, 3, {1.0, 1.0}, rng).size(), 7u);
    const auto alone = percolate(t, 3, {0.0, 0.0}, rng);
    ASSERT_EQ(alone.size(), 1u);
    EXPECT_EQ(alone[0], 3);
    const auto sub = percolate(t, 1, {1.0, 0.0}, rng);
    EXPECT_EQ(std::set<Vertex>(sub.begin(), sub.end()), (std::set<Vertex>{1, 3, 4}));
}

TEST(Percolate, ClustersAreConnectedSubtrees) {
    Rng rng(12345);
    for (int trial = 0; trial < 10'000; ++trial) {
        const int a = 1 + static_cast<int>(rng.below(3));
        const int b = a + 1 + static_cast<int>(rng.below(3));
        const auto d = make_two_point(a, b, rng.uniform());
        const int R = static_cast<int>(rng.below(5));
        const Tree t = sample_tree(d, R, rng);
        const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(R) + 1));
        const Vertex src = place_source(t, r, rng);
        const PercolationParams pp{rng.uniform(), rng.uniform()};
        const auto cluster = percolate(t, src, pp, rng);
        ASSERT_FALSE(cluster.empty());
        EXPECT_EQ(cluster[0], src);
        ASSERT_TRUE(is_connected_subtree(t, cluster)) << "trial " << trial;
    }
}

TEST(AttackStats, Examples) {
    Rng rng(2);
    const Tree t = sample_tree(make_deterministic(2), 2, rng);
    const auto iso = attack_stats(t, 5, {0.0, 0.0}, CostDistribution::deterministic(10.0), rng);
    EXPECT_EQ(iso.size, 1);
    EXPECT_EQ(iso.diameter, 0);
    EXPECT_EQ(iso.upward_reach, 0);
    EXPECT_EQ(iso.loss, 10.0);
    for (int r = 0; r <= 2; ++r) {
        const auto full = attack_stats(t, t.level_begin[r], {1.0, 1.0}, CostDistribution::deterministic(1.0), rng);
        EXPECT_EQ(full.size, 7);
        EXPECT_EQ(full.diameter, 4);
        EXPECT_EQ(full.upward_reach, r);
        EXPECT_EQ(full.loss, 7.0);
    }
}

TEST(AttackStats, LazyMatchesMaterializedInvariants) {
    for (double p : {0.0, 0.4, 1.0}) {
        for (double q : {0.0, 0.6, 1.0}) {
            Rng rng(77);
            for (int i = 0; i < 2000; ++i) {
                const auto s = simulate_attack(make_matched(3.0, 2.0), 3, 2, {p, q}, CostDistribution::deterministic(2.0), rng);
                EXPECT_GE(s.size, 1);
                EXPECT_LE(s.diameter, 6);
                EXPECT_LE(s.upward_reach, 2);
                EXPECT_EQ(s.loss, 2.0 * s.size);
                if (p == 0.0 && q == 0.0) {
                    EXPECT_EQ(s.size, 1);
                }
            }
        }
    }
    Rng rng(1);
    const auto full = simulate_attack(make_deterministic(2), 2, 1, {1.0, 1.0}, CostDistribution::deterministic(1.0), rng);
    EXPECT_EQ(full.size, 7);
    EXPECT_EQ(full.diameter, 4);
    EXPECT_EQ(full.upward_reach, 1);
}

TEST(Estimate, AnchorModelAllTreeModes) {
    const auto cfg = make_config(make_deterministic(2), 2, 1, {0.5, 0.5});
    for (TreeMode mode : {TreeMode::lazy, TreeMode::materialized, TreeMode::static_tree}) {
        SimulationOptions opts;
        opts.mode = mode;
        expect_within(estimate(cfg, {Statistic::Kind::size}, 200'000, 3, 1, opts), 3.0);
        expect_within(estimate(cfg, {Statistic::Kind::size_sq}, 200'000, 4, 1, opts), 11.125);
    }
}

TEST(Estimate, FigureConfig) {
    const auto cfg = figure_config(2, 0.1, 0.3);
    const auto m = moments({4, 2}, 5.0, 5.0, {0.1, 0.3});
    expect_within(estimate(cfg, {Statistic::Kind::size}, 100'000, 10), m.first);
    expect_within(estimate(cfg, {Statistic::Kind::size_sq}, 100'000, 11), m.second);
    SimulationOptions mat;
    mat.mode = TreeMode::materialized;
    expect_within(estimate(cfg, {Statistic::Kind::size}, 20'000, 12, 1, mat), m.first);
    expect_within(estimate(cfg, {Statistic::Kind::size_sq}, 20'000, 13, 1, mat), m.second);
}

TEST(Estimate, ConstantStatistics) {
    const auto cfg = make_config(make_matched(5.0, 5.0), 4, 2, {0.0, 0.0});
    const auto e = estimate(cfg, {Statistic::Kind::size}, 5000, 1);
    EXPECT_EQ(e.mean, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
    EXPECT_EQ(e.n, 5000u);
    for (int n : {1, 2, 3}) {
        const auto t = estimate(cfg, {Statistic::Kind::diam_tail, n}, 5000, 1);
        EXPECT_EQ(t.mean, 0.0);
    }
    EXPECT_THROW(estimate(cfg, {Statistic::Kind::size}, 1, 1), InvalidParameter);
}

TEST(Estimate, AttackLossMoments) {
    auto cfg = make_config(make_matched(5.0, 5.0), 4, 2, {0.1, 0.3}, CostDistribution::shifted_exponential(10.0, 25.0));
    const auto m = moments({4, 2}, 5.0, 5.0, {0.1, 0.3});
    expect_within(estimate(cfg, {Statistic::Kind::attack_loss}, 100'000, 21), 10.0 * m.first);
}

TEST(Estimate, BitIdenticalAcrossWorkers) {
    const auto cfg = figure_config(2, 0.3, 0.5);
    for (const Statistic stat : {Statistic{Statistic::Kind::size}, Statistic{Statistic::Kind::loss_t},
                                 Statistic{Statistic::Kind::diam_tail, 3}}) {
        const auto one = estimate(cfg, stat, 20'000, 42, 1);
        for (int w : {2, 4, 16}) {
            const auto many = estimate(cfg, stat, 20'000, 42, w);
            EXPECT_EQ(one.mean, many.mean);
            EXPECT_EQ(one.std_error, many.std_error);
        }
    }
    const auto other = estimate(cfg, {Statistic::Kind::size}, 20'000, 43, 1);
    EXPECT_NE(other.mean, estimate(cfg, {Statistic::Kind::size}, 20'000, 42, 1).mean);
}

TEST(Estimate, TraceIsOrderedAndIdenticalAcrossWorkers) {
    const auto cfg = make_config(make_deterministic(2), 2, 1, {0.5, 0.5}, CostDistribution::deterministic(1.0), 2.0);
    const Simulator sim(cfg, {}, 9);
    const auto a = trace(sim, {Statistic::Kind::loss_t}, 3000, 1);
    const auto b = trace(sim, {Statistic::Kind::loss_t}, 3000, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].sample_index, b[i].sample_index);
        EXPECT_EQ(a[i].stats.size, b[i].stats.size);
        EXPECT_EQ(a[i].stats.loss, b[i].stats.loss);
        if (i > 0) {
            EXPECT_LE(a[i - 1].sample_index, a[i].sample_index);
        }
    }
}

// Averaging over a pool of fixed networks gives the same E(S) as drawing a
// fresh network per attack.
TEST(Estimate, StaticTreesAgreeWithDynamic) {
    const auto cfg = figure_config(2, 0.2, 0.4);
    const double exact = first_moment({4, 2}, 5.0, {0.2, 0.4});
    const int trees = 100;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < trees; ++i) {
        SimulationOptions opts;
        opts.mode = TreeMode::static_tree;
        opts.static_trees = 1;
        const double m = estimate(cfg, {Statistic::Kind::size}, 2000, 1000 + i, 1, opts).mean;
        s += m;
        s2 += m * m;
    }
    const double mean = s / trees;
    const double se = std::sqrt((s2 / trees - mean * mean) / (trees - 1));
    EXPECT_LE(std::fabs(mean - exact), 4.0 * se);
    const auto dynamic = estimate(cfg, {Statistic::Kind::size}, 100'000, 5);
    EXPECT_LE(std::fabs(mean - dynamic.mean), 4.0 * std::hypot(se, dynamic.std_error));
}

TEST(Estimate, UpwardReachLaw) {
    for (double q : {0.25, 0.9}) {
        const int r = 3;
        const auto cfg = figure_config(r, 0.1, q);
        for (int k = 0; k <= r; ++k) {
            expect_within(estimate(cfg, {Statistic::Kind::reach_eq, k}, 50'000, 70 + k), d_pmf(k, r, q));
        }
    }
}

TEST(Aggregate, DegenerateCases) {
    Rng rng(3);
    const auto cfg = make_config(make_deterministic(2), 2, 1, {0.5, 0.5}, CostDistribution::deterministic(10.0), 2.0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(simulate_aggregate(cfg, 0.0, rng), 0.0);
    const auto free = make_config(make_deterministic(2), 2, 1, {0.5, 0.5}, CostDistribution::deterministic(0.0), 2.0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(simulate_aggregate(free, 1.0, rng), 0.0);
}

TEST(Aggregate, MixedSourceLawMatchesMixedMoments) {
    ModelConfig cfg = figure_config(0, 0.15, 0.5);
    cfg.source = SourceLaw::uniform_over_depth_counts(4, 5.0);
    cfg.attack = AttackModel{3.0, 1.0, CostDistribution::two_point(5.0, 50.0, 0.9)};
    const auto mixed = cfg.mixed_moments();
    const auto l = aggregate_loss_moments(cfg.attack, mixed);
    expect_within(estimate(cfg, {Statistic::Kind::loss_t}, 100'000, 8), l.mean);
    expect_within(estimate(cfg, {Statistic::Kind::size}, 100'000, 9), mixed.first);
}

TEST(Statistic, Parse) {
    EXPECT_EQ(Statistic::parse("size").kind, Statistic::Kind::size);
    EXPECT_EQ(Statistic::parse("size_sq").kind, Statistic::Kind::size_sq);
    EXPECT_EQ(Statistic::parse("loss_t").kind, Statistic::Kind::loss_t);
    const auto d = Statistic::parse("diam_tail:3");
    EXPECT_EQ(d.kind, Statistic::Kind::diam_tail);
    EXPECT_EQ(d.n, 3);
    EXPECT_EQ(Statistic::parse("diam_tail(2)").n, 2);
    EXPECT_EQ(Statistic::parse("reach_eq:1").name(), "reach_eq:1");
    EXPECT_THROW(Statistic::parse("diameter"), ConfigError);
    EXPECT_THROW(Statistic::parse("diam_tail"), ConfigError);
    EXPECT_THROW(Statistic::parse("diam_tail:x"), ConfigError);
}

TEST(TreeDiameter, SmallCases) {
    EXPECT_EQ(tree_diameter(1, {}), 0);
    const std::vector<std::pair<Vertex, Vertex>> path{{0, 1}, {1, 2}, {2, 3}};
    EXPECT_EQ(tree_diameter(4, path), 3);
    const std::vector<std::pair<Vertex, Vertex>> star{{0, 1}, {0, 2}, {0, 3}};
    EXPECT_EQ(tree_diameter(4, star), 2);
}

TEST(SupercriticalGuard, LazyCap) {
    Rng rng(1);
    EXPECT_THROW(simulate_attack(make_deterministic(10), 9, 0, {1.0, 1.0}, CostDistribution::deterministic(1.0), rng,
                                 1000),
                 SizeCapExceeded);
}

// With highly variable offspring, picking the source uniformly from its level
// would favour prolific ancestors and inflate E(S).
TEST(PlaceSource, AncestorsCarryUnbiasedOffspringLaw) {
    const auto d = make_two_point(1, 9, 0.5);
    const auto cfg = make_config(d, 3, 3, {0.5, 0.9});
    SimulationOptions mat;
    mat.mode = TreeMode::materialized;
    const auto m = moments({3, 3}, d.mu(), d.sigma2(), {0.5, 0.9});
    expect_within(estimate(cfg, {Statistic::Kind::size}, 100'000, 31, 1, mat), m.first);
    expect_within(estimate(cfg, {Statistic::Kind::size_sq}, 100'000, 32, 1, mat), m.second);
}
