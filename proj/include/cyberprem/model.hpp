#pragma once

#include "cyberprem/closed_form.hpp"
#include "cyberprem/dist.hpp"
#include "cyberprem/premium.hpp"

namespace cyberprem {

// Fully built model: offspring law and radius, percolation, source-depth
// law, attack process with its cost law, and the premium loading.
struct ModelConfig {
    OffspringDistribution offspring;
    int R = 0;
    PercolationParams percolation;
    SourceLaw source;
    AttackModel attack;
    double delta = 0.0;

    void validate() const {
        if (R < 0) throw InvalidParameter("radius R must be >= 0");
        percolation.validate();
        source.validate_against(R);
        attack.validate();
        if (!(delta >= 0.0)) throw InvalidParameter("premium loading delta must be >= 0");
    }

    std::map<int, MomentResult> moments_per_depth() const {
        return moments_by_depth(source, R, offspring.mu(), offspring.sigma2(), percolation);
    }

    MomentResult mixed_moments() const { return mix_moments(source, moments_per_depth()); }
};

}  // namespace cyberprem
