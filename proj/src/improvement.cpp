#include "dac/improvement.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

#include "dac/errors.hpp"

namespace dac {

namespace {

struct NoisySample {
    int i = 0;
    double inv_signal = 0.0; // 1/sqrt(abar_i)
    double coef = 0.0;       // sqrt(1-abar_i)/sqrt(abar_i)
    Vec eps;
    Vec a_i;
    Vec predicted;
    Vec a0_hat;
    ForwardTrace trace;
};

// Draw (i, eps), corrupt the dataset action, predict the noise, and build the
// action approximation, keeping the trace for the backward pass.
NoisySample make_noisy_sample(const NoiseModel& model, const Schedule& schedule, const Vec& a,
                              const Vec& s, Rng& rng) {
    NoisySample n;
    n.i = rng.uniform_int_range(1, schedule.n_steps);
    const double abar = schedule.alpha_bar_at(n.i);
    n.inv_signal = 1.0 / std::sqrt(abar);
    n.coef = std::sqrt(1.0 - abar) * n.inv_signal;
    n.eps = rng.normal_vec(a.size());
    n.a_i = forward_noise(schedule, a, n.i, n.eps);
    n.predicted = model.predict(n.a_i, s, n.i, n.trace);
    n.a0_hat.resize(a.size());
    for (std::size_t d = 0; d < a.size(); ++d)
        n.a0_hat[d] = n.inv_signal * n.a_i[d] - n.coef * n.predicted[d];
    return n;
}

// Backpropagate dL/d(a0_hat) through the approximation into the policy.
void backprop_through_a0(const NoiseModel& model, const NoisySample& sample, const Vec& dl_da0,
                         MlpGrads& grads) {
    Vec upstream(dl_da0.size());
    for (std::size_t d = 0; d < dl_da0.size(); ++d) upstream[d] = -sample.coef * dl_da0[d];
    mlp_backward(model.net, sample.trace, upstream, grads);
}

double batch_mean_q(const CriticPair& critics, const TransitionBatch& batch, Vec& q_values) {
    q_values.resize(batch.size());
    double mean = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        q_values[b] = min_q(critics, batch.states[b], batch.actions[b], false);
        mean += q_values[b];
    }
    return mean / static_cast<double>(batch.size());
}

std::atomic<bool> g_elbo_limit_logged{false};

} // namespace

std::string to_string(ImprovementVariant v) {
    switch (v) {
        case ImprovementVariant::direct: return "direct";
        case ImprovementVariant::elbo_weighted: return "elbo_weighted";
        case ImprovementVariant::awr_approx: return "awr_approx";
    }
    return "awr_approx";
}

ImprovementVariant improvement_variant_from_string(const std::string& s) {
    if (s == "direct") return ImprovementVariant::direct;
    if (s == "elbo_weighted") return ImprovementVariant::elbo_weighted;
    if (s == "awr_approx") return ImprovementVariant::awr_approx;
    throw ConfigError("unknown improvement variant '" + s + "'");
}

double awr_weight(double q_value, double baseline, const ImprovementConfig& cfg) {
    if (!(cfg.awr_temperature > 0.0)) throw ConfigError("awr_temperature must be positive");
    const double advantage = (q_value - baseline) / cfg.awr_temperature;
    if (advantage >= std::log(cfg.awr_weight_clip)) return cfg.awr_weight_clip;
    return std::exp(advantage);
}

QLossReport q_loss_direct(const CriticPair& critics, const NoiseModel& model,
                          const Schedule& schedule, const TransitionBatch& batch, Rng& rng,
                          const ImprovementConfig& cfg) {
    if (batch.size() == 0) throw ContractViolation("q_loss_direct on empty batch");

    QLossReport report;
    report.policy_grads = make_grads_like(model.net);

    std::vector<NoisySample> samples;
    samples.reserve(batch.size());
    std::vector<Vec> action_grads(batch.size());
    Vec q_values(batch.size());

    double q_abs_mean = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        samples.push_back(
            make_noisy_sample(model, schedule, batch.actions[b], batch.states[b], rng));
        q_values[b] = min_q_with_action_grad(critics, batch.states[b], samples[b].a0_hat,
                                             action_grads[b]);
        q_abs_mean += std::abs(q_values[b]);
    }
    q_abs_mean /= static_cast<double>(batch.size());
    const double norm = cfg.q_normalize ? std::max(q_abs_mean, 1e-8) : 1.0;

    const double inv = 1.0 / (static_cast<double>(batch.size()) * norm);
    Vec dl_da0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        report.loss -= q_values[b] * inv;
        dl_da0.assign(action_grads[b].size(), 0.0);
        for (std::size_t d = 0; d < dl_da0.size(); ++d) dl_da0[d] = -action_grads[b][d] * inv;
        backprop_through_a0(model, samples[b], dl_da0, report.policy_grads);
    }
    return report;
}

QLossReport q_loss_elbo_weighted(const CriticPair& critics, const NoiseModel& model,
                                 const Schedule& schedule, const TransitionBatch& batch, Rng& rng,
                                 const ImprovementConfig& cfg) {
    if (batch.size() == 0) throw ContractViolation("q_loss_elbo_weighted on empty batch");

    QLossReport report;
    report.policy_grads = make_grads_like(model.net);

    Vec q_values;
    const double baseline = batch_mean_q(critics, batch, q_values);

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardTrace trace;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const double g = awr_weight(q_values[b], baseline, cfg);
        const int i = rng.uniform_int_range(1, schedule.n_steps);

        double w;
        if (i == 1) {
            if (!g_elbo_limit_logged.exchange(true))
                std::fprintf(stderr,
                             "note: elbo_weighted coefficient at i=1 uses the beta_1/(2 alpha_1) "
                             "limit convention\n");
            w = schedule.beta_at(1) / (2.0 * schedule.alpha_at(1));
        } else {
            w = schedule.beta_at(i) /
                (2.0 * schedule.alpha_at(i) * (1.0 - schedule.alpha_bar_at(i - 1)));
        }

        const Vec eps = rng.normal_vec(batch.actions[b].size());
        const Vec a_i = forward_noise(schedule, batch.actions[b], i, eps);
        const Vec predicted = model.predict(a_i, batch.states[b], i, trace);

        Vec upstream(predicted.size());
        double sq = 0.0;
        for (std::size_t d = 0; d < predicted.size(); ++d) {
            const double diff = predicted[d] - eps[d];
            sq += diff * diff;
            upstream[d] = 2.0 * w * g * diff * inv_batch;
        }
        report.loss += w * g * sq * inv_batch;
        mlp_backward(model.net, trace, upstream, report.policy_grads);
    }
    return report;
}

QLossReport q_loss_awr_approx(const CriticPair& critics, const NoiseModel& model,
                              const Schedule& schedule, const TransitionBatch& batch, Rng& rng,
                              const ImprovementConfig& cfg) {
    if (batch.size() == 0) throw ContractViolation("q_loss_awr_approx on empty batch");

    QLossReport report;
    report.policy_grads = make_grads_like(model.net);

    Vec q_values;
    const double baseline = batch_mean_q(critics, batch, q_values);

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    Vec dl_da0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const double g = awr_weight(q_values[b], baseline, cfg);
        const NoisySample sample =
            make_noisy_sample(model, schedule, batch.actions[b], batch.states[b], rng);

        double sq = 0.0;
        dl_da0.assign(sample.a0_hat.size(), 0.0);
        for (std::size_t d = 0; d < sample.a0_hat.size(); ++d) {
            const double diff = sample.a0_hat[d] - batch.actions[b][d];
            sq += diff * diff;
            dl_da0[d] = 2.0 * g * diff * inv_batch;
        }
        report.loss += g * sq * inv_batch;
        backprop_through_a0(model, sample, dl_da0, report.policy_grads);
    }
    return report;
}

PolicyUpdateReport combined_policy_update(NoiseModel& model, const CriticPair& critics,
                                          const Schedule& schedule, const TransitionBatch& batch,
                                          Rng& rng, const ImprovementConfig& cfg, OptState& opt) {
    PolicyUpdateReport report;

    BcLossReport bc = diffusion_bc_loss(model, schedule, batch, rng);
    report.l_d = bc.loss;

    MlpGrads total = std::move(bc.grads);
    if (cfg.lambda > 0.0) {
        QLossReport q;
        switch (cfg.variant) {
            case ImprovementVariant::direct:
                q = q_loss_direct(critics, model, schedule, batch, rng, cfg);
                break;
            case ImprovementVariant::elbo_weighted:
                q = q_loss_elbo_weighted(critics, model, schedule, batch, rng, cfg);
                break;
            case ImprovementVariant::awr_approx:
                q = q_loss_awr_approx(critics, model, schedule, batch, rng, cfg);
                break;
        }
        report.l_q = q.loss;
        total.axpy(cfg.lambda, q.policy_grads);
    }
    report.l_total = report.l_d + cfg.lambda * report.l_q;

    if (!std::isfinite(report.l_total)) {
        report.applied = false;
        report.diagnostic = "non-finite policy loss";
        return report;
    }
    const AdamResult res = adam_step(model.net, total, opt);
    report.applied = res.applied;
    report.diagnostic = res.diagnostic;
    return report;
}

nlohmann::json improvement_config_to_json(const ImprovementConfig& cfg) {
    return {{"variant", to_string(cfg.variant)},
            {"lambda", cfg.lambda},
            {"awr_temperature", cfg.awr_temperature},
            {"awr_weight_clip", cfg.awr_weight_clip},
            {"q_normalize", cfg.q_normalize}};
}

ImprovementConfig improvement_config_from_json(const nlohmann::json& j) {
    ImprovementConfig cfg;
    cfg.variant = improvement_variant_from_string(j.value("variant", std::string("awr_approx")));
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.awr_temperature = j.value("awr_temperature", cfg.awr_temperature);
    cfg.awr_weight_clip = j.value("awr_weight_clip", cfg.awr_weight_clip);
    cfg.q_normalize = j.value("q_normalize", cfg.q_normalize);
    return cfg;
}

} // namespace dac
