#pragma once

// Deterministic verification suites: closed forms against exhaustive
// enumeration, against their own ratio forms, and against the infinite-tree
// limits; exact diameter tails against the exponential-decay bound.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "cyberprem/closed_form.hpp"
#include "cyberprem/oracle.hpp"

namespace cyberprem::verify {

struct Check {
    std::string label;
    double value = 0.0;      // observed discrepancy (or bound excess)
    double tolerance = 0.0;  // pass iff value <= tolerance
    bool passed = false;
};

struct SuiteReport {
    std::string name;
    std::vector<Check> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }

    void add(std::string label, double value, double tolerance) {
        const bool ok = std::isfinite(value) && value <= tolerance;
        checks.push_back({std::move(label), value, tolerance, ok});
    }
};

inline std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// Closed-form E_r(S), E_r(S^2) vs exhaustive enumeration on complete k-ary
// trees, k in {2,3}, R in {1,2}, every r, (p,q) in {0,0.3,0.7,1}^2.
inline SuiteReport oracle_suite(double tolerance = 1e-10) {
    SuiteReport rep{"oracle", {}};
    const double grid[] = {0.0, 0.3, 0.7, 1.0};
    for (int k : {2, 3}) {
        for (int R : {1, 2}) {
            const Tree tree = regular_tree(k, R);
            for (int r = 0; r <= R; ++r) {
                const Vertex source = tree.level_begin[r];
                double worst = 0.0;
                for (double p : grid) {
                    for (double q : grid) {
                        const PercolationParams pp{p, q};
                        const EnumerationReport ex = enumerate_exact(tree, source, pp);
                        const double mu = static_cast<double>(k);
                        worst = std::max(worst, std::fabs(ex.exact_first - first_moment({R, r}, mu, pp)));
                        worst = std::max(worst, std::fabs(ex.exact_second - second_moment({R, r}, mu, 0.0, pp)));
                    }
                }
                rep.add(fmt("mu=%d R=%d r=%d  max|closed-enum| over 16 (p,q)", k, R, r), worst, tolerance);
            }
        }
    }
    return rep;
}

// Direct-summation first moment at q = p vs the symmetric ratio form.
inline SuiteReport symmetric_suite(double tolerance = 1e-12) {
    SuiteReport rep{"symmetric", {}};
    const int R = 4;
    for (int mu : {2, 5}) {
        for (int r = 0; r <= R; ++r) {
            double worst = 0.0;
            int skipped = 0;
            for (int i = 1; i <= 19; ++i) {
                const double p = 0.05 * i;
                const double m = static_cast<double>(mu);
                if (std::fabs(1.0 - m * p) < 1e-9 || std::fabs(1.0 - m * p * p) < 1e-9) {
                    ++skipped;
                    continue;
                }
                const double a = first_moment({R, r}, m, {p, p});
                const double b = first_moment_symmetric({R, r}, m, p);
                worst = std::max(worst, std::fabs(a - b));
            }
            rep.add(fmt("mu=%d R=4 r=%d  max|direct-ratio| (%d singular p skipped)", mu, r, skipped), worst,
                    tolerance);
        }
    }
    return rep;
}

// Finite-R moments at R = 80 vs the infinite-tree forms for mu*p <= 0.8
// (absolute gap, per mu*p), and monotone growth in R.
inline SuiteReport infinite_suite(double tolerance = 1e-8) {
    SuiteReport rep{"infinite", {}};
    struct Case {
        double mu, sigma2;
    };
    const Case cases[] = {{2.0, 0.0}, {3.0, 0.0}, {5.0, 5.0}, {2.5, 1.25}};
    for (const Case c : cases) {
        double worst_drop = 0.0;
        for (double mp : {0.1, 0.3, 0.5, 0.65, 0.7, 0.75, 0.8}) {
            double gap_first = 0.0;
            double gap_second = 0.0;
            for (double q : {0.0, 0.25, 0.5, 0.9, 1.0}) {
                for (int r : {0, 1, 3, 6}) {
                    const PercolationParams pp{mp / c.mu, q};
                    double prev_f = 0.0;
                    double prev_s = 0.0;
                    for (int R = r; R <= 80; ++R) {
                        const double f = first_moment({R, r}, c.mu, pp);
                        const double s = second_moment({R, r}, c.mu, c.sigma2, pp);
                        worst_drop = std::max({worst_drop, prev_f - f, prev_s - s});
                        prev_f = f;
                        prev_s = s;
                    }
                    gap_first = std::max(gap_first, std::fabs(first_moment_infinite(r, c.mu, pp) - prev_f));
                    gap_second = std::max(gap_second, std::fabs(second_moment_infinite(r, c.mu, c.sigma2, pp) - prev_s));
                }
            }
            rep.add(fmt("mu=%.2g sigma2=%.3g mu*p=%.2f  max|first(R=80) - first(inf)|", c.mu, c.sigma2, mp),
                    gap_first, tolerance);
            rep.add(fmt("mu=%.2g sigma2=%.3g mu*p=%.2f  max|second(R=80) - second(inf)|", c.mu, c.sigma2, mp),
                    gap_second, tolerance);
        }
        rep.add(fmt("mu=%.2g sigma2=%.3g  max decrease in R", c.mu, c.sigma2), worst_drop, 1e-12);
    }
    return rep;
}

// Exact diameter tail from enumeration never exceeds the decay bound.
inline SuiteReport tail_suite() {
    SuiteReport rep{"tail", {}};
    for (int k : {2, 3}) {
        for (int R : {1, 2, 3}) {
            if (k == 3 && R == 3) continue;  // 39 edges, beyond enumeration
            const Tree tree = regular_tree(k, R);
            if (tree.edge_count() > kMaxEnumerationEdges) continue;
            double worst = -std::numeric_limits<double>::infinity();
            int cells = 0;
            for (double p : {0.05, 0.15, 0.3}) {
                if (!(k * p < 1.0)) continue;
                for (double q : {0.0, 0.2, 0.5, 0.9, 1.0}) {
                    const PercolationParams pp{p, q};
                    for (int r = 0; r <= R; ++r) {
                        const EnumerationReport ex = enumerate_exact(tree, tree.level_begin[r], pp);
                        for (int n = r + 1; n <= R + 1; ++n) {
                            const double bound = diameter_tail_bound(n, r, k, pp);
                            worst = std::max(worst, ex.exact_diam_tail.at(n) - bound);
                            ++cells;
                        }
                    }
                }
            }
            rep.add(fmt("mu=%d R=%d  max(P_exact(diam>=2n) - bound) over %d cells", k, R, cells), worst, 0.0);
        }
    }
    return rep;
}

inline SuiteReport run_suite(const std::string& name) {
    if (name == "oracle") return oracle_suite();
    if (name == "symmetric") return symmetric_suite();
    if (name == "infinite") return infinite_suite();
    if (name == "tail") return tail_suite();
    throw DomainError("unknown verification suite '" + name + "'");
}

inline void print(std::ostream& os, const SuiteReport& rep) {
    os << "suite " << rep.name << "\n";
    for (const Check& c : rep.checks) {
        os << (c.passed ? "  PASS  " : "  FAIL  ") << c.label << "  value=" << fmt("%.3e", c.value)
           << "  tol=" << fmt("%.1e", c.tolerance) << "\n";
    }
    os << (rep.passed() ? "suite " + rep.name + ": PASS\n" : "suite " + rep.name + ": FAIL\n");
}

}  // namespace cyberprem::verify
