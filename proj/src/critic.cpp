#include "dac/critic.hpp"

#include <algorithm>

#include "dac/errors.hpp"

namespace dac {

double CriticPair::value(const Vec& s, const Vec& a, bool use_target, int which) const {
    const MlpParams& net = which == 1 ? (use_target ? q1_target : q1)
                                      : (use_target ? q2_target : q2);
    return mlp_forward(net, concat(s, a))[0];
}

CriticPair make_critic_pair(int state_dim, int action_dim, const std::vector<std::size_t>& hidden,
                            double tau, double gamma, Activation act, Rng& rng) {
    if (!(tau > 0.0) || tau > 1.0) throw ConfigError("critic tau must be in (0,1]");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("critic gamma must be in [0,1]");
    std::vector<std::size_t> sizes;
    sizes.push_back(static_cast<std::size_t>(state_dim + action_dim));
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);

    CriticPair c;
    c.tau = tau;
    c.gamma = gamma;
    c.q1 = make_mlp(sizes, act, OutputActivation::identity, rng);
    c.q2 = make_mlp(sizes, act, OutputActivation::identity, rng);
    c.q1_target = c.q1;
    c.q2_target = c.q2;
    return c;
}

double min_q(const CriticPair& critics, const Vec& s, const Vec& a, bool use_target) {
    return std::min(critics.value(s, a, use_target, 1), critics.value(s, a, use_target, 2));
}

double min_q_with_action_grad(const CriticPair& critics, const Vec& s, const Vec& a, Vec& grad_a) {
    const Vec input = concat(s, a);
    ForwardTrace t1, t2;
    const double v1 = mlp_forward(critics.q1, input, t1)[0];
    const double v2 = mlp_forward(critics.q2, input, t2)[0];
    const bool first = v1 <= v2;

    MlpGrads scratch = make_grads_like(first ? critics.q1 : critics.q2);
    const Vec input_grad = mlp_backward(first ? critics.q1 : critics.q2, first ? t1 : t2,
                                        Vec{1.0}, scratch);
    grad_a.assign(a.size(), 0.0);
    for (std::size_t d = 0; d < a.size(); ++d) grad_a[d] = input_grad[s.size() + d];
    return first ? v1 : v2;
}

TdLossReport td_loss(const CriticPair& critics, const TransitionBatch& batch,
                     const std::vector<Vec>& next_actions) {
    if (batch.size() == 0) throw ContractViolation("td_loss on empty batch");
    if (next_actions.size() != batch.size())
        throw ContractViolation("td_loss needs one next action per transition");

    TdLossReport report;
    report.grads_q1 = make_grads_like(critics.q1);
    report.grads_q2 = make_grads_like(critics.q2);

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardTrace trace;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const double bootstrap =
            batch.dones[b] ? 0.0
                           : min_q(critics, batch.next_states[b], next_actions[b], true);
        const double y = batch.rewards[b] + critics.gamma * bootstrap;
        const Vec input = concat(batch.states[b], batch.actions[b]);

        const double v1 = mlp_forward(critics.q1, input, trace)[0];
        report.loss += (v1 - y) * (v1 - y) * inv_batch;
        mlp_backward(critics.q1, trace, Vec{2.0 * (v1 - y) * inv_batch}, report.grads_q1);

        const double v2 = mlp_forward(critics.q2, input, trace)[0];
        report.loss += (v2 - y) * (v2 - y) * inv_batch;
        mlp_backward(critics.q2, trace, Vec{2.0 * (v2 - y) * inv_batch}, report.grads_q2);
    }
    return report;
}

void polyak_blend(const MlpParams& online, MlpParams& target, double tau) {
    for (std::size_t l = 0; l < online.weights.size(); ++l) {
        for (std::size_t i = 0; i < online.weights[l].data.size(); ++i)
            target.weights[l].data[i] =
                tau * online.weights[l].data[i] + (1.0 - tau) * target.weights[l].data[i];
        for (std::size_t i = 0; i < online.biases[l].size(); ++i)
            target.biases[l][i] = tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
    }
}

void polyak_update(CriticPair& critics) {
    polyak_blend(critics.q1, critics.q1_target, critics.tau);
    polyak_blend(critics.q2, critics.q2_target, critics.tau);
}

nlohmann::json critic_pair_to_json(const CriticPair& c) {
    nlohmann::json j;
    j["tau"] = c.tau;
    j["gamma"] = c.gamma;
    j["q1"] = mlp_to_json(c.q1);
    j["q2"] = mlp_to_json(c.q2);
    j["q1_target"] = mlp_to_json(c.q1_target);
    j["q2_target"] = mlp_to_json(c.q2_target);
    return j;
}

CriticPair critic_pair_from_json(const nlohmann::json& j) {
    CriticPair c;
    c.tau = j.at("tau").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.q1 = mlp_from_json(j.at("q1"));
    c.q2 = mlp_from_json(j.at("q2"));
    c.q1_target = mlp_from_json(j.at("q1_target"));
    c.q2_target = mlp_from_json(j.at("q2_target"));
    return c;
}

} // namespace dac
