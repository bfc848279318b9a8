#pragma once

// Offspring laws on the positive integers and per-vertex cost laws.
//
// Every closed form downstream consumes an offspring law only through its
// mean and variance, and a cost law only through its mean and variance.
// The pmf is kept explicitly so that those moments are exact and sampling
// is exact inverse-CDF.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cyberprem/error.hpp"
#include "cyberprem/rng.hpp"

namespace cyberprem {

inline constexpr int kDefaultMaxOffspring = 10'000;

class OffspringDistribution {
public:
    // Validates and stores an explicit pmf. Probabilities must sum to one
    // within 1e-9; the stored pmf is renormalized to sum to one.
    static OffspringDistribution from_pmf(std::map<int, double> pmf,
                                          int max_support = kDefaultMaxOffspring) {
        if (pmf.empty()) throw InvalidParameter("offspring pmf is empty");
        double total = 0.0;
        for (const auto& [k, w] : pmf) {
            if (k < 1) {
                throw InvalidParameter("offspring support must start at 1 (p_0 = 0), got k=" +
                                       std::to_string(k));
            }
            if (k > max_support) {
                throw InvalidParameter("offspring support exceeds cap " +
                                       std::to_string(max_support) + ": k=" + std::to_string(k));
            }
            if (!(w >= 0.0 && w <= 1.0)) {
                throw InvalidParameter("offspring probability outside [0,1] at k=" +
                                       std::to_string(k));
            }
            total += w;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            throw InvalidParameter("offspring pmf sums to " + std::to_string(total) + ", not 1");
        }
        std::erase_if(pmf, [](const auto& kv) { return kv.second == 0.0; });
        for (auto& [k, w] : pmf) w /= total;
        return OffspringDistribution(std::move(pmf));
    }

    const std::map<int, double>& pmf() const noexcept { return pmf_; }
    double mu() const noexcept { return mu_; }
    double sigma2() const noexcept { return sigma2_; }
    int min_support() const noexcept { return pmf_.begin()->first; }
    int max_support() const noexcept { return pmf_.rbegin()->first; }
    bool is_deterministic() const noexcept { return pmf_.size() == 1; }

    int sample(Rng& rng) const noexcept {
        if (values_.size() == 1) return values_.front();
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                               values_.size() - 1);
        return values_[idx];
    }

private:
    explicit OffspringDistribution(std::map<int, double> pmf) : pmf_(std::move(pmf)) {
        double acc = 0.0;
        for (const auto& [k, w] : pmf_) {
            acc += w;
            values_.push_back(k);
            cdf_.push_back(acc);
        }
        cdf_.back() = 1.0;
        double m = 0.0;
        for (const auto& [k, w] : pmf_) m += k * w;
        double v = 0.0;
        for (const auto& [k, w] : pmf_) v += (k - m) * (k - m) * w;
        mu_ = m;
        sigma2_ = v;
    }

    std::map<int, double> pmf_;
    std::vector<int> values_;
    std::vector<double> cdf_;
    double mu_ = 0.0;
    double sigma2_ = 0.0;
};

inline OffspringDistribution make_deterministic(int k) {
    if (k <= 0) throw InvalidParameter("deterministic offspring needs k >= 1, got " + std::to_string(k));
    return OffspringDistribution::from_pmf({{k, 1.0}});
}

inline OffspringDistribution make_two_point(int a, int b, double w) {
    if (a < 1) throw InvalidParameter("two-point offspring needs a >= 1");
    if (a >= b) throw InvalidParameter("two-point offspring needs a < b");
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidParameter("two-point weight must lie in [0,1]");
    return OffspringDistribution::from_pmf({{a, w}, {b, 1.0 - w}});
}

// Three-point law {c-d, c, c+d} with c = floor(mu) (or ceil(mu) if the floor
// centre cannot carry the requested variance) and the smallest d >= 1 whose
// outer mass can hold the second moment about c.
inline OffspringDistribution make_matched(double mu_target, double sigma2_target) {
    if (!(mu_target > 1.0)) {
        throw Infeasible("matched offspring needs mu > 1 (support starts at 1), got mu=" +
                         std::to_string(mu_target));
    }
    if (!(sigma2_target >= 0.0)) throw Infeasible("matched offspring needs sigma2 >= 0");
    if (!std::isfinite(mu_target) || !std::isfinite(sigma2_target)) {
        throw Infeasible("matched offspring needs finite moments");
    }
    const double fl = std::floor(mu_target);
    if (sigma2_target == 0.0) {
        if (fl != mu_target) {
            throw Infeasible("sigma2 = 0 requires integer mu, got mu=" + std::to_string(mu_target));
        }
        return make_deterministic(static_cast<int>(fl));
    }

    std::string why;
    for (const double centre : {fl, std::ceil(mu_target)}) {
        const double e = mu_target - centre;         // offset of the mean from the centre
        const double m2 = sigma2_target + e * e;     // second moment about the centre
        const double d = std::max(1.0, std::ceil(std::sqrt(m2) - 1e-12));
        const double outer = m2 / (d * d);
        const double hi = 0.5 * (outer + e / d);
        const double lo = 0.5 * (outer - e / d);
        const double mid = 1.0 - outer;
        if (centre - d < 1.0) {
            why = "support would need mass at k=" + std::to_string(static_cast<long>(centre - d)) +
                  " <= 0";
            continue;
        }
        if (centre + d > kDefaultMaxOffspring) {
            why = "support exceeds offspring cap";
            continue;
        }
        if (lo < -1e-15 || hi < -1e-15 || mid < -1e-15) {
            why = "sigma2=" + std::to_string(sigma2_target) +
                  " not reachable on a three-point support around mu=" + std::to_string(mu_target);
            continue;
        }
        const int c = static_cast<int>(centre);
        const int di = static_cast<int>(d);
        std::map<int, double> pmf;
        if (lo > 0.0) pmf[c - di] += lo;
        if (mid > 0.0) pmf[c] += mid;
        if (hi > 0.0) pmf[c + di] += hi;
        return OffspringDistribution::from_pmf(std::move(pmf));
    }
    throw Infeasible("matched offspring infeasible: " + why);
}

inline int sample_offspring(const OffspringDistribution& d, Rng& rng) noexcept { return d.sample(rng); }

enum class CostKind { deterministic, two_point, shifted_exponential, empirical };

// Per-vertex cost law. Only mean() and variance() enter the pricing formulas.
class CostDistribution {
public:
    static CostDistribution deterministic(double value) {
        if (!(value >= 0.0) || !std::isfinite(value)) {
            throw InvalidParameter("deterministic cost must be finite and >= 0");
        }
        CostDistribution c(CostKind::deterministic);
        c.a_ = value;
        c.mean_ = value;
        c.variance_ = 0.0;
        return c;
    }

    static CostDistribution two_point(double a, double b, double w) {
        if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
            throw InvalidParameter("two-point cost values must be finite and >= 0");
        }
        if (!(w >= 0.0 && w <= 1.0)) throw InvalidParameter("two-point cost weight must lie in [0,1]");
        CostDistribution c(CostKind::two_point);
        c.a_ = a;
        c.b_ = b;
        c.w_ = w;
        c.mean_ = w * a + (1.0 - w) * b;
        c.variance_ = w * (a - c.mean_) * (a - c.mean_) + (1.0 - w) * (b - c.mean_) * (b - c.mean_);
        return c;
    }

    // shift + Exponential(scale), scale = sqrt(variance), shift = mean - scale.
    static CostDistribution shifted_exponential(double mean, double variance) {
        if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
            throw InvalidParameter("shifted-exponential cost needs finite variance > 0");
        }
        const double scale = std::sqrt(variance);
        if (mean - scale < 0.0) {
            throw InvalidParameter("shifted-exponential cost needs variance <= mean^2 for nonnegative samples");
        }
        CostDistribution c(CostKind::shifted_exponential);
        c.a_ = mean - scale;
        c.b_ = scale;
        c.mean_ = mean;
        c.variance_ = variance;
        return c;
    }

    // Uniform draw from the given sample values.
    static CostDistribution empirical(std::vector<double> values) {
        if (values.empty()) throw InvalidParameter("empirical cost needs at least one value");
        double m = 0.0;
        for (double v : values) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter("empirical cost values must be finite and >= 0");
            m += v;
        }
        m /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - m) * (v - m);
        var /= static_cast<double>(values.size());
        CostDistribution c(CostKind::empirical);
        c.values_ = std::move(values);
        c.mean_ = m;
        c.variance_ = var;
        return c;
    }

    CostKind kind() const noexcept { return kind_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }
    std::span<const double> values() const noexcept { return values_; }
    // Kind-specific parameters: deterministic value / two-point (a, b, w) /
    // exponential (shift, scale).
    double param_a() const noexcept { return a_; }
    double param_b() const noexcept { return b_; }
    double param_w() const noexcept { return w_; }

    double sample(Rng& rng) const noexcept {
        switch (kind_) {
            case CostKind::deterministic:
                return a_;
            case CostKind::two_point:
                return rng.bernoulli(w_) ? a_ : b_;
            case CostKind::shifted_exponential:
                return a_ - b_ * std::log1p(-rng.uniform());
            case CostKind::empirical:
                return values_[rng.below(values_.size())];
        }
        return 0.0;
    }

private:
    explicit CostDistribution(CostKind kind) : kind_(kind) {}

    CostKind kind_;
    double a_ = 0.0;
    double b_ = 0.0;
    double w_ = 0.0;
    std::vector<double> values_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

inline double sample_cost(const CostDistribution& c, Rng& rng) noexcept { return c.sample(rng); }

}  // namespace cyberprem
