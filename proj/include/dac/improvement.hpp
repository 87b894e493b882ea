#pragma once

#include <string>

#include <json.hpp>

#include "dac/behavior_policy.hpp"
#include "dac/critic.hpp"

namespace dac {

enum class ImprovementVariant { direct, elbo_weighted, awr_approx };

std::string to_string(ImprovementVariant v);
ImprovementVariant improvement_variant_from_string(const std::string& s);

struct ImprovementConfig {
    ImprovementVariant variant = ImprovementVariant::awr_approx;
    double lambda = 1.0;
    double awr_temperature = 1.0;
    double awr_weight_clip = 100.0;
    bool q_normalize = true; // direct variant only: divide L_q by batch-mean |Q|
};

// g = min(exp((q - baseline)/temperature), clip); nondecreasing in q.
double awr_weight(double q_value, double baseline, const ImprovementConfig& cfg);

struct QLossReport {
    double loss = 0.0;
    MlpGrads policy_grads;
};

// -mean min Q(s, a0_hat) with gradients flowing through the action
// approximation into the policy; the critics receive no gradient.
QLossReport q_loss_direct(const CriticPair& critics, const NoiseModel& model,
                          const Schedule& schedule, const TransitionBatch& batch, Rng& rng,
                          const ImprovementConfig& cfg);

// ELBO-weighted regression: mean of beta_i/(2 alpha_i (1-abar_{i-1})) * g(Q) *
// ||eps - eps_theta||^2. The i = 1 coefficient uses the beta_1/(2 alpha_1)
// limit convention (abar_0 = 1 would otherwise divide by zero).
QLossReport q_loss_elbo_weighted(const CriticPair& critics, const NoiseModel& model,
                                 const Schedule& schedule, const TransitionBatch& batch, Rng& rng,
                                 const ImprovementConfig& cfg);

// Advantage-weighted reconstruction: mean g(Q(s,a)) * ||a - a0_hat||^2.
QLossReport q_loss_awr_approx(const CriticPair& critics, const NoiseModel& model,
                              const Schedule& schedule, const TransitionBatch& batch, Rng& rng,
                              const ImprovementConfig& cfg);

struct PolicyUpdateReport {
    double l_d = 0.0;
    double l_q = 0.0;
    double l_total = 0.0;
    bool applied = true;
    std::string diagnostic;
};

// One optimizer step on L_d + lambda * L_q with the configured variant.
// lambda == 0 skips the improvement term entirely, so the update (and the rng
// stream) matches a pure behavior-cloning run bit for bit.
PolicyUpdateReport combined_policy_update(NoiseModel& model, const CriticPair& critics,
                                          const Schedule& schedule, const TransitionBatch& batch,
                                          Rng& rng, const ImprovementConfig& cfg, OptState& opt);

nlohmann::json improvement_config_to_json(const ImprovementConfig& cfg);
ImprovementConfig improvement_config_from_json(const nlohmann::json& j);

} // namespace dac
