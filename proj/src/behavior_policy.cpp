#include "dac/behavior_policy.hpp"

#include <cmath>

#include "dac/errors.hpp"

namespace dac {

BcLossReport diffusion_bc_loss(const NoiseModel& model, const Schedule& schedule,
                               const TransitionBatch& batch, Rng& rng) {
    if (batch.size() == 0) throw ContractViolation("diffusion_bc_loss on empty batch");

    BcLossReport report;
    report.grads = make_grads_like(model.net);
    report.sampled_steps.reserve(batch.size());

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardTrace trace;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const int i = rng.uniform_int_range(1, schedule.n_steps);
        report.sampled_steps.push_back(i);
        const Vec eps = rng.normal_vec(batch.actions[b].size());
        const Vec a_i = forward_noise(schedule, batch.actions[b], i, eps);

        const Vec predicted = model.predict(a_i, batch.states[b], i, trace);
        Vec upstream(predicted.size());
        double sq = 0.0;
        for (std::size_t d = 0; d < predicted.size(); ++d) {
            const double diff = predicted[d] - eps[d];
            sq += diff * diff;
            upstream[d] = 2.0 * diff * inv_batch;
        }
        report.loss += sq * inv_batch;
        mlp_backward(model.net, trace, upstream, report.grads);
    }
    return report;
}

Vec approximate_a0(const Schedule& schedule, const EpsFn& eps_model, const Vec& a_i, const Vec& s,
                   int i) {
    if (i < 1 || i > schedule.n_steps)
        throw ContractViolation("approximate_a0 step index out of range");
    const double abar = schedule.alpha_bar_at(i);
    const double inv_signal = 1.0 / std::sqrt(abar);
    const double coef = std::sqrt(1.0 - abar) * inv_signal;
    const Vec predicted = eps_model(a_i, s, i);
    require_dim(predicted, a_i.size(), "approximate_a0 model output");
    Vec out(a_i.size());
    for (std::size_t d = 0; d < a_i.size(); ++d)
        out[d] = inv_signal * a_i[d] - coef * predicted[d];
    return out;
}

Vec approximate_a0(const Schedule& schedule, const NoiseModel& model, const Vec& a_i, const Vec& s,
                   int i) {
    return approximate_a0(schedule, eps_fn_of(model), a_i, s, i);
}

} // namespace dac
