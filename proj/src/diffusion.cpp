#include "dac/diffusion.hpp"

#include <cmath>

#include "dac/errors.hpp"

namespace dac {

Vec timestep_embedding(int t, int dim) {
    Vec emb(dim);
    const int half = dim / 2;
    for (int k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * k / half);
        emb[2 * k] = std::sin(t * freq);
        emb[2 * k + 1] = std::cos(t * freq);
    }
    if (dim % 2 == 1) emb[dim - 1] = 0.0;
    return emb;
}

Vec NoiseModel::input_for(const Vec& a_i, const Vec& s, int i) const {
    require_dim(a_i, static_cast<std::size_t>(action_dim), "noise model action");
    require_dim(s, static_cast<std::size_t>(state_dim), "noise model state");
    return concat(a_i, s, timestep_embedding(i, time_embed_dim));
}

Vec NoiseModel::predict(const Vec& a_i, const Vec& s, int i) const {
    return mlp_forward(net, input_for(a_i, s, i));
}

Vec NoiseModel::predict(const Vec& a_i, const Vec& s, int i, ForwardTrace& trace) const {
    return mlp_forward(net, input_for(a_i, s, i), trace);
}

NoiseModel make_noise_model(int action_dim, int state_dim, const std::vector<std::size_t>& hidden,
                            int time_embed_dim, Activation act, Rng& rng) {
    if (action_dim < 1 || state_dim < 1) throw ConfigError("noise model needs positive dims");
    NoiseModel m;
    m.action_dim = action_dim;
    m.state_dim = state_dim;
    m.time_embed_dim = time_embed_dim;
    std::vector<std::size_t> sizes;
    sizes.push_back(static_cast<std::size_t>(action_dim + state_dim + time_embed_dim));
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(static_cast<std::size_t>(action_dim));
    m.net = make_mlp(sizes, act, OutputActivation::identity, rng);
    return m;
}

EpsFn eps_fn_of(const NoiseModel& model) {
    return [&model](const Vec& a_i, const Vec& s, int i) { return model.predict(a_i, s, i); };
}

Vec forward_noise(const Schedule& schedule, const Vec& a0, int i, const Vec& eps) {
    if (i < 1 || i > schedule.n_steps)
        throw ContractViolation("forward_noise step index out of range");
    require_dim(eps, a0.size(), "forward_noise eps");
    const double abar = schedule.alpha_bar_at(i);
    const double signal = std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);
    Vec out(a0.size());
    for (std::size_t d = 0; d < a0.size(); ++d) out[d] = signal * a0[d] + noise * eps[d];
    return out;
}

Vec reverse_step(const Schedule& schedule, const EpsFn& eps_model, const Vec& a_i, const Vec& s,
                 int i, const Vec& eps, const Vec* guidance, double guidance_scale) {
    if (i < 1 || i > schedule.n_steps)
        throw ContractViolation("reverse_step step index out of range");
    const Vec predicted = eps_model(a_i, s, i);
    require_dim(predicted, a_i.size(), "reverse_step model output");
    if (!all_finite(predicted)) throw SamplingError("noise model produced non-finite output", i);

    const double beta = schedule.beta_at(i);
    const double sqrt_alpha = std::sqrt(schedule.alpha_at(i));
    const double coef = beta / (sqrt_alpha * std::sqrt(1.0 - schedule.alpha_bar_at(i)));
    const double sigma = std::sqrt(beta);

    Vec out(a_i.size());
    for (std::size_t d = 0; d < a_i.size(); ++d) {
        double x = a_i[d] / sqrt_alpha - coef * predicted[d];
        if (i > 1) x += sigma * eps[d]; // terminal step is deterministic
        if (guidance) x += guidance_scale * beta * (*guidance)[d];
        out[d] = x;
    }
    return out;
}

Vec sample_action(const EpsFn& eps_model, const Schedule& schedule, const Vec& s, int action_dim,
                  Rng& rng, const GuidanceFn& guidance, double guidance_scale, int chain_start) {
    const int start = (chain_start >= 1 && chain_start <= schedule.n_steps) ? chain_start
                                                                            : schedule.n_steps;
    Vec a = rng.normal_vec(static_cast<std::size_t>(action_dim));
    Vec zero(static_cast<std::size_t>(action_dim), 0.0);
    for (int i = start; i >= 1; --i) {
        Vec g;
        const Vec* gptr = nullptr;
        if (guidance) {
            g = guidance(a, i);
            gptr = &g;
        }
        const Vec eps = (i > 1) ? rng.normal_vec(static_cast<std::size_t>(action_dim)) : zero;
        a = reverse_step(schedule, eps_model, a, s, i, eps, gptr, guidance_scale);
    }
    clamp_inplace(a, -1.0, 1.0);
    return a;
}

Vec sample_action(const NoiseModel& model, const Schedule& schedule, const Vec& s, Rng& rng,
                  const GuidanceFn& guidance, double guidance_scale, int chain_start) {
    return sample_action(eps_fn_of(model), schedule, s, model.action_dim, rng, guidance,
                         guidance_scale, chain_start);
}

nlohmann::json noise_model_to_json(const NoiseModel& m) {
    nlohmann::json j;
    j["action_dim"] = m.action_dim;
    j["state_dim"] = m.state_dim;
    j["time_embed_dim"] = m.time_embed_dim;
    j["net"] = mlp_to_json(m.net);
    return j;
}

NoiseModel noise_model_from_json(const nlohmann::json& j) {
    NoiseModel m;
    m.action_dim = j.at("action_dim").get<int>();
    m.state_dim = j.at("state_dim").get<int>();
    m.time_embed_dim = j.at("time_embed_dim").get<int>();
    m.net = mlp_from_json(j.at("net"));
    return m;
}

} // namespace dac
