#pragma once

#include <json.hpp>

#include "dac/critic.hpp"
#include "dac/dataset.hpp"

namespace dac {

// Unimodal baseline policy for the backbone study. The deterministic flavor
// (DDPG/TD3 family) maps state to an action; the stochastic flavor (SAC
// family) maps state to per-coordinate mean and log-std.
struct GaussianPolicy {
    MlpParams net;
    int state_dim = 0;
    int action_dim = 0;
    bool deterministic = true;
    double log_std_min = -5.0;
    double log_std_max = 2.0;

    // Raw heads, no clamping (losses consume these).
    Vec mean(const Vec& s) const;
    Vec log_std(const Vec& s) const;

    // Environment-facing action in [-1,1]^d; deterministic policies return the
    // mean, stochastic ones draw mean + sigma * z.
    Vec act(const Vec& s, Rng& rng) const;
};

GaussianPolicy make_gaussian_policy(int state_dim, int action_dim,
                                    const std::vector<std::size_t>& hidden, bool deterministic,
                                    Activation act, Rng& rng);

struct GaussianBcReport {
    double loss = 0.0;
    MlpGrads grads;
};

// Deterministic: mean squared error to the dataset action. Stochastic:
// Gaussian negative log-likelihood with both heads trained.
GaussianBcReport gaussian_bc_loss(const GaussianPolicy& policy, const TransitionBatch& batch);

struct GaussianQReport {
    double loss = 0.0;
    MlpGrads grads;
};

// -mean min Q(s, pi(s)) with the critic treated as a fixed function of the
// action; stochastic policies use the reparameterized draw mean + sigma * z.
GaussianQReport gaussian_q_loss(const GaussianPolicy& policy, const CriticPair& critics,
                                const TransitionBatch& batch, Rng& rng, bool q_normalize);

nlohmann::json gaussian_policy_to_json(const GaussianPolicy& p);
GaussianPolicy gaussian_policy_from_json(const nlohmann::json& j);

} // namespace dac
