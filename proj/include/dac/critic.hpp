#pragma once

#include <json.hpp>

#include "dac/dataset.hpp"
#include "dac/mlp.hpp"

namespace dac {

// Twin Q-networks with target copies. Networks map concat(state, action) to a
// scalar; min over the pair is the conservative estimate used everywhere.
struct CriticPair {
    MlpParams q1;
    MlpParams q2;
    MlpParams q1_target;
    MlpParams q2_target;
    double tau = 0.005;
    double gamma = 0.99;

    double value(const Vec& s, const Vec& a, bool use_target, int which) const;
};

CriticPair make_critic_pair(int state_dim, int action_dim, const std::vector<std::size_t>& hidden,
                            double tau, double gamma, Activation act, Rng& rng);

double min_q(const CriticPair& critics, const Vec& s, const Vec& a, bool use_target);

// min over the online critics plus d(minQ)/d(action); the gradient follows the
// argmin branch (ties go to q1).
double min_q_with_action_grad(const CriticPair& critics, const Vec& s, const Vec& a, Vec& grad_a);

struct TdLossReport {
    double loss = 0.0;
    MlpGrads grads_q1;
    MlpGrads grads_q2;
};

// y = r + gamma * (1-done) * min target Q(s', a'); loss is the batch mean of
// (y - Q1)^2 + (y - Q2)^2 with y treated as a constant.
TdLossReport td_loss(const CriticPair& critics, const TransitionBatch& batch,
                     const std::vector<Vec>& next_actions);

// target <- tau * online + (1-tau) * target for both critic pairs.
void polyak_update(CriticPair& critics);

// Shared helper for any online/target parameter pair (the trainer reuses it
// for the policy target).
void polyak_blend(const MlpParams& online, MlpParams& target, double tau);

nlohmann::json critic_pair_to_json(const CriticPair& c);
CriticPair critic_pair_from_json(const nlohmann::json& j);

} // namespace dac
