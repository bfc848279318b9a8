#pragma once

// Compound-Poisson aggregate loss and the three premium principles.

#include <cmath>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "cyberprem/closed_form.hpp"
#include "cyberprem/dist.hpp"
#include "cyberprem/error.hpp"

namespace cyberprem {

struct AttackModel {
    double lambda = 1.0;  // attacks per unit time
    double t = 1.0;       // horizon
    CostDistribution cost = CostDistribution::deterministic(1.0);

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidParameter("attack rate lambda must be > 0");
        if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParameter("horizon t must be >= 0");
    }
};

// Law of the source depth r over {0..R}.
class SourceLaw {
public:
    static SourceLaw point(int r) {
        if (r < 0) throw InvalidParameter("source depth must be >= 0");
        return SourceLaw({{r, 1.0}});
    }

    static SourceLaw from_weights(std::map<int, double> weights) {
        if (weights.empty()) throw InvalidParameter("source law is empty");
        double total = 0.0;
        for (const auto& [r, w] : weights) {
            if (r < 0) throw InvalidParameter("source law key " + std::to_string(r) + " is negative");
            if (!(w >= 0.0 && w <= 1.0)) throw InvalidParameter("source law weight outside [0,1] at r=" + std::to_string(r));
            total += w;
        }
        if (std::fabs(total - 1.0) > 1e-12) {
            throw InvalidParameter("source law weights sum to " + std::to_string(total) + ", not 1");
        }
        return SourceLaw(std::move(weights));
    }

    // Weights proportional to the expected number of vertices mu^r at depth r.
    static SourceLaw uniform_over_depth_counts(int R, double mu) {
        if (R < 0) throw InvalidParameter("radius R must be >= 0");
        std::map<int, double> w;
        double total = 0.0;
        for (int r = 0; r <= R; ++r) {
            w[r] = std::pow(mu, r);
            total += w[r];
        }
        for (auto& [r, x] : w) x /= total;
        return SourceLaw(std::move(w));
    }

    const std::map<int, double>& weights() const noexcept { return weights_; }
    int max_depth() const noexcept { return weights_.rbegin()->first; }

    void validate_against(int R) const {
        if (max_depth() > R) {
            throw InvalidParameter("source law puts mass at depth " + std::to_string(max_depth()) +
                                   " beyond radius R=" + std::to_string(R));
        }
    }

    int sample(Rng& rng) const noexcept {
        if (weights_.size() == 1) return weights_.begin()->first;
        double u = rng.uniform();
        int last = weights_.begin()->first;
        for (const auto& [r, w] : weights_) {
            if (w <= 0.0) continue;
            last = r;
            if (u < w) return r;
            u -= w;
        }
        return last;
    }

private:
    explicit SourceLaw(std::map<int, double> w) : weights_(std::move(w)) {}
    std::map<int, double> weights_;
};

inline MomentResult mix_moments(const SourceLaw& law, const std::map<int, MomentResult>& per_r) {
    MomentResult out{0.0, 0.0};
    for (const auto& [r, w] : law.weights()) {
        const auto it = per_r.find(r);
        if (it == per_r.end()) throw IncompleteMoments("no moments supplied for source depth r=" + std::to_string(r));
        out.first += w * it->second.first;
        out.second += w * it->second.second;
    }
    return out;
}

// E_r(S), E_r(S^2) for every depth in the law's support.
inline std::map<int, MomentResult> moments_by_depth(const SourceLaw& law, int R, double mu, double sigma2,
                                                    const PercolationParams& pp) {
    law.validate_against(R);
    std::map<int, MomentResult> out;
    for (const auto& [r, w] : law.weights()) out[r] = moments({R, r}, mu, sigma2, pp);
    return out;
}

struct LossMoments {
    double mean = 0.0;
    double variance = 0.0;
};

// Moments of the aggregate loss L_t over a Poisson(lambda t) number of attacks.
inline LossMoments aggregate_loss_moments(const AttackModel& am, const MomentResult& s) {
    am.validate();
    const double lt = am.lambda * am.t;
    const double ec = am.cost.mean();
    return {lt * s.first * ec, lt * s.first * am.cost.variance() + lt * s.second * ec * ec};
}

// Moments of a single attack loss C = sum of S i.i.d. vertex costs.
inline LossMoments single_attack_moments(const CostDistribution& cost, const MomentResult& s) {
    const double ec = cost.mean();
    const double var_s = s.second - s.first * s.first;
    return {s.first * ec, s.first * cost.variance() + var_s * ec * ec};
}

struct PremiumQuote {
    double mean_loss = 0.0;
    double var_loss = 0.0;
    double fair = 0.0;
    double expectation = 0.0;
    double stddev = 0.0;
    double delta = 0.0;
};

// Premiums always price L_1, whatever horizon the attack model carries.
inline PremiumQuote quote(const AttackModel& am, const MomentResult& s, double delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw InvalidParameter("premium loading delta must be >= 0, got " + std::to_string(delta));
    }
    AttackModel unit = am;
    unit.t = 1.0;
    const LossMoments l1 = aggregate_loss_moments(unit, s);
    PremiumQuote out;
    out.mean_loss = l1.mean;
    out.var_loss = l1.variance;
    out.fair = l1.mean;
    out.expectation = l1.mean + delta * l1.mean;
    out.stddev = l1.mean + delta * std::sqrt(l1.variance);
    out.delta = delta;
    return out;
}

inline nlohmann::ordered_json to_json(const PremiumQuote& q) {
    return {
        {"mean_loss", q.mean_loss}, {"var_loss", q.var_loss}, {"fair", q.fair},
        {"expectation", q.expectation}, {"stddev", q.stddev}, {"delta", q.delta},
    };
}

}  // namespace cyberprem
