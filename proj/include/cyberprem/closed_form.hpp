#pragma once

// Exact moments of the infected-cluster size under bidirectional bond
// percolation on a Galton-Watson tree of radius R.
//
// Notation: a parent -> offspring arrow is open with probability p, an
// offspring -> parent arrow with probability q. The source sits at depth r.
// The cluster splits into the subtree hanging below the source plus, for
// each of the D infected ancestors, that ancestor together with the infected
// subtrees of its other children. D is truncated-geometric in q; subtree
// sizes are independent branching-process totals.
//
// Every finite geometric expression is evaluated by direct summation, so
// mu*p = 1, q = 1 and mu*p*q = 1 need no special handling. The ratio forms
// are kept separately (suffix _ratio_form, first_moment_symmetric, the
// infinite-tree forms) and raise Singularity where their denominators vanish.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cyberprem/error.hpp"

namespace cyberprem {

struct PercolationParams {
    double p = 0.0;  // parent -> offspring
    double q = 0.0;  // offspring -> parent

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("p must lie in [0,1], got " + std::to_string(p));
        if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in [0,1], got " + std::to_string(q));
    }
};

struct TreeGeometry {
    int R = 0;  // radius
    int r = 0;  // source depth

    void validate() const {
        if (R < 0) throw InvalidParameter("radius R must be >= 0");
        if (r < 0 || r > R) {
            throw InvalidParameter("source depth r must lie in [0, R], got r=" + std::to_string(r) +
                                   ", R=" + std::to_string(R));
        }
    }
};

// Mean and variance of the number of infected children of a vertex (plus)
// and of a vertex with one designated child excluded (minus).
struct HelperMoments {
    double mu_plus = 0.0;
    double mu_minus = 0.0;
    double sigma2_plus = 0.0;
    double sigma2_minus = 0.0;
};

struct MomentResult {
    double first = 1.0;   // E_r(S)
    double second = 1.0;  // E_r(S^2)
};

inline HelperMoments helpers(double mu, double sigma2, const PercolationParams& pp) {
    const double p = pp.p;
    return {
        .mu_plus = mu * p,
        .mu_minus = (mu - 1.0) * p,
        .sigma2_plus = p * (1.0 - p) * mu + p * p * sigma2,
        .sigma2_minus = p * (1.0 - p) * (mu - 1.0) + p * p * sigma2,
    };
}

// sum_{i=0}^{n-1} x^i by direct summation.
inline double geometric_sum(double x, int n) {
    double sum = 0.0;
    double term = 1.0;
    for (int i = 0; i < n; ++i) {
        sum += term;
        term *= x;
    }
    return sum;
}

// First and second moments of S(x_j), the infected size of the subtree
// rooted at depth j, for j = 0..R. Backward recursion from the leaves:
//   m1(R) = 1,  m1(j) = 1 + mu+ m1(j+1)
//   m2(R) = 1,  m2(j) = 1 + 2 mu+ m1(j+1) + mu+ m2(j+1)
//                        + (sigma+^2 + mu+^2 - mu+) m1(j+1)^2
struct SubtreeMoments {
    std::vector<double> first;
    std::vector<double> second;
};

inline SubtreeMoments subtree_moments(int R, const HelperMoments& h) {
    if (R < 0) throw InvalidParameter("radius R must be >= 0");
    SubtreeMoments m{std::vector<double>(R + 1), std::vector<double>(R + 1)};
    const double factorial2 = h.sigma2_plus + h.mu_plus * h.mu_plus - h.mu_plus;
    m.first[R] = 1.0;
    m.second[R] = 1.0;
    for (int j = R - 1; j >= 0; --j) {
        const double m1 = m.first[j + 1];
        const double m2 = m.second[j + 1];
        m.first[j] = 1.0 + h.mu_plus * m1;
        m.second[j] = 1.0 + 2.0 * h.mu_plus * m1 + h.mu_plus * m2 + factorial2 * m1 * m1;
    }
    return m;
}

inline double mu1(int j, const TreeGeometry& geo, const HelperMoments& h) {
    if (j < 0 || j > geo.R) throw DomainError("mu1 index j out of [0, R]");
    return geometric_sum(h.mu_plus, geo.R - j + 1);
}

inline double mu2(int j, const TreeGeometry& geo, const HelperMoments& h) {
    if (j < 0 || j > geo.R) throw DomainError("mu2 index j out of [0, R]");
    return subtree_moments(geo.R - j, h).second.front();
}

inline double mu1_ratio_form(int j, const TreeGeometry& geo, const HelperMoments& h) {
    const double den = 1.0 - h.mu_plus;
    if (std::fabs(den) < 1e-12) throw Singularity("mu1 ratio form: 1 - mu+ vanishes");
    return (1.0 - std::pow(h.mu_plus, geo.R - j + 1)) / den;
}

inline double mu2_ratio_form(int j, const TreeGeometry& geo, const HelperMoments& h) {
    const double x = h.mu_plus;
    const double den = 1.0 - x;
    if (std::fabs(den) < 1e-12) throw Singularity("mu2 ratio form: 1 - mu+ vanishes");
    const int n = geo.R - j;
    const double first = (1.0 - std::pow(x, n + 1)) / den;
    return h.sigma2_plus / (den * den) *
               ((1.0 - std::pow(x, 2 * n + 1)) / den - (2.0 * n + 1.0) * std::pow(x, n)) +
           first * first;
}

// Upward reach D: P(D = k) = q^k (1-q) for k < r, P(D = r) = q^r.
inline double d_pmf(int k, int r, double q) {
    if (r < 0) throw DomainError("d_pmf: r must be >= 0");
    if (k < 0 || k > r) throw DomainError("d_pmf: k=" + std::to_string(k) + " outside [0, r=" + std::to_string(r) + "]");
    const double qk = std::pow(q, k);
    return k < r ? qk * (1.0 - q) : qk;
}

inline double expected_D(int r, double q) {
    if (r < 0) throw DomainError("expected_D: r must be >= 0");
    return q * geometric_sum(q, r);
}

inline double expected_D_factorial(int r, double q) {
    if (r < 0) throw DomainError("expected_D_factorial: r must be >= 0");
    if (r < 2) return 0.0;
    if (std::fabs(1.0 - q) < 1e-9) {
        double sum = 0.0;
        for (int k = 2; k <= r; ++k) sum += static_cast<double>(k) * (k - 1) * d_pmf(k, r, q);
        return sum;
    }
    const double den = 1.0 - q;
    return 2.0 * q * q * (1.0 - r * std::pow(q, r - 1) + (r - 1.0) * std::pow(q, r)) / (den * den);
}

namespace detail {

inline void require_moment_inputs(const TreeGeometry& geo, double mu, const PercolationParams& pp) {
    geo.validate();
    pp.validate();
    if (!(mu >= 1.0)) throw InvalidParameter("offspring mean mu must be >= 1");
}

}  // namespace detail

// E_r(S) = E S(x_r) + E D + mu- * sum_{i=0}^{r-1} q^{i+1} E S(x_{r-i}).
inline double first_moment(const TreeGeometry& geo, double mu, const PercolationParams& pp) {
    detail::require_moment_inputs(geo, mu, pp);
    const HelperMoments h = helpers(mu, 0.0, pp);
    const int r = geo.r;
    double tail = 0.0;
    double qpow = pp.q;
    for (int i = 0; i < r; ++i) {
        tail += qpow * mu1(r - i, geo, h);
        qpow *= pp.q;
    }
    return mu1(r, geo, h) + expected_D(r, pp.q) + h.mu_minus * tail;
}

// Conditioning on D = k, S = S(x_r) + sum_{i=1}^k A_i where the A_i =
// S(x_{r-i} \ x_{r-i+1}) are independent of each other and of S(x_r):
//   E(S^2 | D=k) = m2(r) + 2 m1(r) sum E A_i + sum E A_i^2
//                  + sum_{i != j ordered} E A_i E A_j.
inline double second_moment(const TreeGeometry& geo, double mu, double sigma2,
                            const PercolationParams& pp) {
    detail::require_moment_inputs(geo, mu, pp);
    if (!(sigma2 >= 0.0)) throw InvalidParameter("offspring variance sigma2 must be >= 0");
    const HelperMoments h = helpers(mu, sigma2, pp);
    const SubtreeMoments sub = subtree_moments(geo.R, h);
    const int r = geo.r;
    const double m1r = sub.first[r];
    const double m2r = sub.second[r];
    const double minus_factorial2 = h.sigma2_minus + h.mu_minus * h.mu_minus - h.mu_minus;

    double result = 0.0;
    double sum_a = 0.0;     // sum_{i<=k} E A_i
    double sum_a_sq = 0.0;  // sum_{i<=k} (E A_i)^2
    double sum_a2 = 0.0;    // sum_{i<=k} E A_i^2
    for (int k = 0; k <= r; ++k) {
        if (k > 0) {
            const double m1 = sub.first[r - k + 1];
            const double m2 = sub.second[r - k + 1];
            const double a = 1.0 + h.mu_minus * m1;
            const double a2 = 1.0 + 2.0 * h.mu_minus * m1 + h.mu_minus * m2 + minus_factorial2 * m1 * m1;
            sum_a += a;
            sum_a_sq += a * a;
            sum_a2 += a2;
        }
        const double cross = sum_a * sum_a - sum_a_sq;
        const double conditional = m2r + 2.0 * m1r * sum_a + sum_a2 + cross;
        result += conditional * d_pmf(k, r, pp.q);
    }
    return result;
}

inline MomentResult moments(const TreeGeometry& geo, double mu, double sigma2, const PercolationParams& pp) {
    return {first_moment(geo, mu, pp), second_moment(geo, mu, sigma2, pp)};
}

// The single-fraction expression for E_r(S). Cross-check only.
inline double first_moment_ratio_form(const TreeGeometry& geo, double mu, const PercolationParams& pp) {
    detail::require_moment_inputs(geo, mu, pp);
    const double p = pp.p;
    const double q = pp.q;
    const double mp = mu * p;
    const double mpq = mp * q;
    if (std::fabs(1.0 - mp) < 1e-12) throw Singularity("first moment ratio form: 1 - mu*p vanishes");
    if (std::fabs(1.0 - q) < 1e-12) throw Singularity("first moment ratio form: 1 - q vanishes");
    if (std::fabs(1.0 - mpq) < 1e-12) throw Singularity("first moment ratio form: 1 - mu*p*q vanishes");
    const int R = geo.R;
    const int r = geo.r;
    return (1.0 + q * ((1.0 - std::pow(q, r)) / (1.0 - q)) * (1.0 - p) -
            std::pow(mp, R - r + 1) * ((1.0 - p * q * (1.0 + (mu - 1.0) * std::pow(mpq, r))) / (1.0 - mpq))) /
           (1.0 - mp);
}

// The q = p specialization of the ratio form. Cross-check only.
inline double first_moment_symmetric(const TreeGeometry& geo, double mu, double p) {
    detail::require_moment_inputs(geo, mu, {p, p});
    const double mp = mu * p;
    const double mp2 = mp * p;
    if (std::fabs(1.0 - mp) < 1e-12) throw Singularity("symmetric first moment: 1 - mu*p vanishes");
    if (std::fabs(1.0 - mp2) < 1e-12) throw Singularity("symmetric first moment: 1 - mu*p^2 vanishes");
    if (std::fabs(1.0 - p) < 1e-12) throw Singularity("symmetric first moment: 1 - p vanishes");
    const int R = geo.R;
    const int r = geo.r;
    return (1.0 + p * (1.0 - std::pow(p, r)) -
            std::pow(mp, R - r + 1) * ((1.0 - p * p * (1.0 + (mu - 1.0) * std::pow(mp2, r))) / (1.0 - mp2))) /
           (1.0 - mp);
}

namespace detail {

inline void require_subcritical(double mu, const PercolationParams& pp) {
    pp.validate();
    if (!(mu >= 1.0)) throw InvalidParameter("offspring mean mu must be >= 1");
    if (!(mu * pp.p < 1.0)) {
        throw Supercritical("mu*p = " + std::to_string(mu * pp.p) +
                            " >= 1: cluster moments on the infinite tree are infinite");
    }
}

}  // namespace detail

inline double first_moment_infinite(int r, double mu, const PercolationParams& pp) {
    detail::require_subcritical(mu, pp);
    if (r < 0) throw InvalidParameter("source depth r must be >= 0");
    return (1.0 + expected_D(r, pp.q) * (1.0 - pp.p)) / (1.0 - mu * pp.p);
}

inline double second_moment_infinite(int r, double mu, double sigma2, const PercolationParams& pp) {
    detail::require_subcritical(mu, pp);
    if (r < 0) throw InvalidParameter("source depth r must be >= 0");
    if (!(sigma2 >= 0.0)) throw InvalidParameter("offspring variance sigma2 must be >= 0");
    const double p = pp.p;
    const double g = 1.0 - mu * p;
    const double sp = p * (1.0 - p) * mu + p * p * sigma2;
    const double mm = (mu - 1.0) * p;
    const double sm = p * (1.0 - p) * (mu - 1.0) + p * p * sigma2;
    const double own = (1.0 + sp / g) / (g * g);
    const double linear = 1.0 + 2.0 * (1.0 + mm) / g + (2.0 * mm + sm + mm * mm) / (g * g) + sp * mm / (g * g * g);
    const double branch = 1.0 + mm / g;
    return own + linear * expected_D(r, pp.q) + branch * branch * expected_D_factorial(r, pp.q);
}

// Upper bound on P_r(diam >= 2n), n > r, in the subcritical phase, written as
// sum_{k=0}^{r} q^k (mu p)^{n-k} so that q = mu p and p = 0 need no division.
inline double diameter_tail_bound(int n, int r, double mu, const PercolationParams& pp) {
    detail::require_subcritical(mu, pp);
    if (r < 0) throw DomainError("diameter bound: r must be >= 0");
    if (n <= r) {
        throw DomainError("diameter bound needs n > r, got n=" + std::to_string(n) + ", r=" + std::to_string(r));
    }
    const double mp = mu * pp.p;
    double sum = 0.0;
    for (int k = 0; k <= r; ++k) sum += std::pow(pp.q, k) * std::pow(mp, n - k);
    return std::min(1.0, std::max(0.0, sum));
}

}  // namespace cyberprem
