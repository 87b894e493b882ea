#pragma once

#include <functional>

#include <json.hpp>

#include "dac/mlp.hpp"
#include "dac/rng.hpp"
#include "dac/schedule.hpp"

namespace dac {

// Sinusoidal embedding of a diffusion step index (valid for t = 0 too).
Vec timestep_embedding(int t, int dim);

// Conditional noise predictor eps(a_i, s, i). Input layout is
// [action | state | timestep embedding]; output has action dimension.
struct NoiseModel {
    MlpParams net;
    int action_dim = 0;
    int state_dim = 0;
    int time_embed_dim = 16;

    Vec input_for(const Vec& a_i, const Vec& s, int i) const;
    Vec predict(const Vec& a_i, const Vec& s, int i) const;
    Vec predict(const Vec& a_i, const Vec& s, int i, ForwardTrace& trace) const;
};

NoiseModel make_noise_model(int action_dim, int state_dim, const std::vector<std::size_t>& hidden,
                            int time_embed_dim, Activation act, Rng& rng);

// Pluggable predictor so samplers and losses can be exercised with stubs.
using EpsFn = std::function<Vec(const Vec& a_i, const Vec& s, int i)>;
EpsFn eps_fn_of(const NoiseModel& model);

// Per-step guidance: called with the current noisy action and step index.
using GuidanceFn = std::function<Vec(const Vec& a_i, int i)>;

// Closed-form forward marginal: sqrt(abar_i) a0 + sqrt(1-abar_i) eps.
Vec forward_noise(const Schedule& schedule, const Vec& a0, int i, const Vec& eps);

// One reverse step. eps is forced to zero when i == 1; guidance (if any) is
// added as guidance_scale * beta_i * guidance.
Vec reverse_step(const Schedule& schedule, const EpsFn& eps_model, const Vec& a_i, const Vec& s,
                 int i, const Vec& eps, const Vec* guidance = nullptr,
                 double guidance_scale = 0.0);

// Full reverse chain from a^N ~ N(0, I); final action clamped to [-1,1]^d.
// chain_start limits the chain to steps chain_start..1 (0 means full N).
Vec sample_action(const EpsFn& eps_model, const Schedule& schedule, const Vec& s, int action_dim,
                  Rng& rng, const GuidanceFn& guidance = nullptr, double guidance_scale = 0.0,
                  int chain_start = 0);
Vec sample_action(const NoiseModel& model, const Schedule& schedule, const Vec& s, Rng& rng,
                  const GuidanceFn& guidance = nullptr, double guidance_scale = 0.0,
                  int chain_start = 0);

nlohmann::json noise_model_to_json(const NoiseModel& m);
NoiseModel noise_model_from_json(const nlohmann::json& j);

} // namespace dac
