#pragma once

#include <json.hpp>

#include "dac/critic.hpp"
#include "dac/diffusion.hpp"

namespace dac {

// f_psi(s, a_t, t) approximating the intermediate energy E_t. Input layout is
// [state | noisy action | timestep embedding]; t = 0 is valid and anchors the
// model to Q itself.
struct EnergyModel {
    MlpParams net;
    int state_dim = 0;
    int action_dim = 0;
    int time_embed_dim = 16;
    bool trained = false;

    Vec input_for(const Vec& s, const Vec& a_t, int t) const;
    double energy(const Vec& s, const Vec& a_t, int t) const;
};

EnergyModel make_energy_model(int state_dim, int action_dim,
                              const std::vector<std::size_t>& hidden, int time_embed_dim,
                              Activation act, Rng& rng);

enum class Selection { max_q, soft_q, energy_guided };
std::string to_string(Selection s);
Selection selection_from_string(const std::string& s);

struct GuidanceConfig {
    int n_candidates = 16;        // K
    Selection selection = Selection::max_q;
    double guidance_scale = 1.0;
    int m_support = 16;           // Monte-Carlo size for energy targets
};

struct EnergyDiagnostics {
    long degenerate_weight_fallbacks = 0;
};

// Self-normalized importance estimate of
// log E_{mu_0t(a0|a_t,s)}[exp(Q(s,a0))] over M support actions, evaluated as
// logsumexp(logw + Q) - logsumexp(logw). t = 0 returns min Q(s, a_t) directly.
double energy_target(const CriticPair& critics, const Schedule& schedule, const Vec& s,
                     const std::vector<Vec>& support_actions, const Vec& a_t, int t,
                     EnergyDiagnostics* diag = nullptr);

struct EnergyInput {
    Vec state;
    Vec noisy_action;
    int t = 0;
};

struct EnergyLossReport {
    double loss = 0.0;
    MlpGrads grads;
};

// Mean squared error between f_psi and the (constant) targets.
EnergyLossReport energy_loss(const EnergyModel& energy, const std::vector<double>& targets,
                             const std::vector<EnergyInput>& inputs);

// d f_psi / d a_t via the analytic backward pass; feeds reverse_step guidance.
Vec guided_score(const EnergyModel& energy, const Vec& s, const Vec& a_t, int t);

// K unguided samples, keep the argmax of min Q (ties to the lowest index).
Vec select_action_max_q(const NoiseModel& model, const Schedule& schedule,
                        const CriticPair& critics, const Vec& s, int k, Rng& rng);

// K candidates, pick one with probability softmax(Q).
Vec select_action_soft_q(const NoiseModel& model, const Schedule& schedule,
                         const CriticPair& critics, const Vec& s, int k, Rng& rng);

// One reverse pass with every step guided by the energy gradient.
Vec select_action_energy_guided(const NoiseModel& model, const Schedule& schedule,
                                const EnergyModel& energy, const Vec& s, double guidance_scale,
                                Rng& rng);

nlohmann::json energy_model_to_json(const EnergyModel& m);
EnergyModel energy_model_from_json(const nlohmann::json& j);
nlohmann::json guidance_config_to_json(const GuidanceConfig& cfg);
GuidanceConfig guidance_config_from_json(const nlohmann::json& j);

} // namespace dac
