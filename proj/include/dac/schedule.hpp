#pragma once

#include <vector>

#include "dac/linalg.hpp"

namespace dac {

// Variance-preserving discretization over N steps. Indexing is 1-based to
// match the diffusion step convention i in {1..N}; beta_at(i) == beta[i-1].
struct Schedule {
    int n_steps = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    Vec beta;
    Vec alpha;
    Vec alpha_bar;

    double beta_at(int i) const { return beta[static_cast<std::size_t>(i) - 1]; }
    double alpha_at(int i) const { return alpha[static_cast<std::size_t>(i) - 1]; }
    // alpha_bar_at(0) == 1 by the empty-product convention.
    double alpha_bar_at(int i) const {
        return i == 0 ? 1.0 : alpha_bar[static_cast<std::size_t>(i) - 1];
    }
};

// beta_i = 1 - exp(-beta_min/N - 0.5*(beta_max-beta_min)*(2i-1)/N^2), the VP
// discretization with the exponent negated so every beta lands in (0,1).
Schedule make_schedule(int n_steps, double beta_min, double beta_max);

} // namespace dac
