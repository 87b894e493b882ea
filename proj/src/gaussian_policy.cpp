#include "dac/gaussian_policy.hpp"

#include <cmath>

#include "dac/errors.hpp"

namespace dac {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727; // 0.5 * log(2*pi)

double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

} // namespace

Vec GaussianPolicy::mean(const Vec& s) const {
    Vec out = mlp_forward(net, s);
    out.resize(static_cast<std::size_t>(action_dim));
    return out;
}

Vec GaussianPolicy::log_std(const Vec& s) const {
    if (deterministic) throw ContractViolation("deterministic policy has no log_std head");
    Vec out = mlp_forward(net, s);
    Vec ls(static_cast<std::size_t>(action_dim));
    for (int d = 0; d < action_dim; ++d)
        ls[static_cast<std::size_t>(d)] =
            clamp(out[static_cast<std::size_t>(action_dim + d)], log_std_min, log_std_max);
    return ls;
}

Vec GaussianPolicy::act(const Vec& s, Rng& rng) const {
    Vec out = mlp_forward(net, s);
    Vec a(static_cast<std::size_t>(action_dim));
    for (int d = 0; d < action_dim; ++d) {
        double x = out[static_cast<std::size_t>(d)];
        if (!deterministic) {
            const double ls =
                clamp(out[static_cast<std::size_t>(action_dim + d)], log_std_min, log_std_max);
            x += std::exp(ls) * rng.normal();
        }
        a[static_cast<std::size_t>(d)] = clamp(x, -1.0, 1.0);
    }
    return a;
}

GaussianPolicy make_gaussian_policy(int state_dim, int action_dim,
                                    const std::vector<std::size_t>& hidden, bool deterministic,
                                    Activation act, Rng& rng) {
    GaussianPolicy p;
    p.state_dim = state_dim;
    p.action_dim = action_dim;
    p.deterministic = deterministic;
    std::vector<std::size_t> sizes;
    sizes.push_back(static_cast<std::size_t>(state_dim));
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(static_cast<std::size_t>(deterministic ? action_dim : 2 * action_dim));
    p.net = make_mlp(sizes, act, OutputActivation::identity, rng);
    return p;
}

GaussianBcReport gaussian_bc_loss(const GaussianPolicy& policy, const TransitionBatch& batch) {
    if (batch.size() == 0) throw ContractViolation("gaussian_bc_loss on empty batch");

    GaussianBcReport report;
    report.grads = make_grads_like(policy.net);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const std::size_t d = static_cast<std::size_t>(policy.action_dim);

    ForwardTrace trace;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Vec out = mlp_forward(policy.net, batch.states[b], trace);
        Vec upstream(out.size(), 0.0);
        if (policy.deterministic) {
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = out[j] - batch.actions[b][j];
                sq += diff * diff;
                upstream[j] = 2.0 * diff * inv_batch;
            }
            report.loss += sq * inv_batch;
        } else {
            double nll = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double raw_ls = out[d + j];
                const bool saturated = raw_ls < policy.log_std_min || raw_ls > policy.log_std_max;
                const double ls = clamp(raw_ls, policy.log_std_min, policy.log_std_max);
                const double z = (batch.actions[b][j] - out[j]) * std::exp(-ls);
                nll += 0.5 * z * z + ls + kHalfLog2Pi;
                upstream[j] = -z * std::exp(-ls) * inv_batch;
                upstream[d + j] = saturated ? 0.0 : (1.0 - z * z) * inv_batch;
            }
            report.loss += nll * inv_batch;
        }
        mlp_backward(policy.net, trace, upstream, report.grads);
    }
    return report;
}

GaussianQReport gaussian_q_loss(const GaussianPolicy& policy, const CriticPair& critics,
                                const TransitionBatch& batch, Rng& rng, bool q_normalize) {
    if (batch.size() == 0) throw ContractViolation("gaussian_q_loss on empty batch");

    GaussianQReport report;
    report.grads = make_grads_like(policy.net);
    const std::size_t d = static_cast<std::size_t>(policy.action_dim);

    struct Sample {
        ForwardTrace trace;
        Vec out;
        Vec z;      // reparameterization noise (stochastic only)
        Vec action; // unclamped policy action fed to Q
        Vec grad_a;
        double q = 0.0;
        std::vector<bool> saturated;
    };
    std::vector<Sample> samples(batch.size());

    double q_abs_mean = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        Sample& sm = samples[b];
        sm.out = mlp_forward(policy.net, batch.states[b], sm.trace);
        sm.action.resize(d);
        if (policy.deterministic) {
            for (std::size_t j = 0; j < d; ++j) sm.action[j] = sm.out[j];
        } else {
            sm.z = rng.normal_vec(d);
            sm.saturated.resize(d);
            for (std::size_t j = 0; j < d; ++j) {
                const double raw_ls = sm.out[d + j];
                sm.saturated[j] = raw_ls < policy.log_std_min || raw_ls > policy.log_std_max;
                const double ls = clamp(raw_ls, policy.log_std_min, policy.log_std_max);
                sm.action[j] = sm.out[j] + std::exp(ls) * sm.z[j];
            }
        }
        sm.q = min_q_with_action_grad(critics, batch.states[b], sm.action, sm.grad_a);
        q_abs_mean += std::abs(sm.q);
    }
    q_abs_mean /= static_cast<double>(batch.size());
    const double norm = q_normalize ? std::max(q_abs_mean, 1e-8) : 1.0;
    const double inv = 1.0 / (static_cast<double>(batch.size()) * norm);

    for (std::size_t b = 0; b < batch.size(); ++b) {
        Sample& sm = samples[b];
        report.loss -= sm.q * inv;
        Vec upstream(sm.out.size(), 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            const double da = -sm.grad_a[j] * inv;
            upstream[j] = da;
            if (!policy.deterministic && !sm.saturated[j]) {
                const double ls = clamp(sm.out[d + j], policy.log_std_min, policy.log_std_max);
                upstream[d + j] = da * std::exp(ls) * sm.z[j];
            }
        }
        mlp_backward(policy.net, sm.trace, upstream, report.grads);
    }
    return report;
}

nlohmann::json gaussian_policy_to_json(const GaussianPolicy& p) {
    nlohmann::json j;
    j["state_dim"] = p.state_dim;
    j["action_dim"] = p.action_dim;
    j["deterministic"] = p.deterministic;
    j["log_std_min"] = p.log_std_min;
    j["log_std_max"] = p.log_std_max;
    j["net"] = mlp_to_json(p.net);
    return j;
}

GaussianPolicy gaussian_policy_from_json(const nlohmann::json& j) {
    GaussianPolicy p;
    p.state_dim = j.at("state_dim").get<int>();
    p.action_dim = j.at("action_dim").get<int>();
    p.deterministic = j.at("deterministic").get<bool>();
    p.log_std_min = j.at("log_std_min").get<double>();
    p.log_std_max = j.at("log_std_max").get<double>();
    p.net = mlp_from_json(j.at("net"));
    return p;
}

} // namespace dac
