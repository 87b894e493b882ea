#include "dac/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dac/errors.hpp"

namespace dac {

namespace {

double logsumexp(const Vec& xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

} // namespace

Vec EnergyModel::input_for(const Vec& s, const Vec& a_t, int t) const {
    require_dim(s, static_cast<std::size_t>(state_dim), "energy model state");
    require_dim(a_t, static_cast<std::size_t>(action_dim), "energy model action");
    return concat(s, a_t, timestep_embedding(t, time_embed_dim));
}

double EnergyModel::energy(const Vec& s, const Vec& a_t, int t) const {
    return mlp_forward(net, input_for(s, a_t, t))[0];
}

EnergyModel make_energy_model(int state_dim, int action_dim,
                              const std::vector<std::size_t>& hidden, int time_embed_dim,
                              Activation act, Rng& rng) {
    EnergyModel m;
    m.state_dim = state_dim;
    m.action_dim = action_dim;
    m.time_embed_dim = time_embed_dim;
    std::vector<std::size_t> sizes;
    sizes.push_back(static_cast<std::size_t>(state_dim + action_dim + time_embed_dim));
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    m.net = make_mlp(sizes, act, OutputActivation::identity, rng);
    return m;
}

std::string to_string(Selection s) {
    switch (s) {
        case Selection::max_q: return "max_q";
        case Selection::soft_q: return "soft_q";
        case Selection::energy_guided: return "energy_guided";
    }
    return "max_q";
}

Selection selection_from_string(const std::string& s) {
    if (s == "max_q") return Selection::max_q;
    if (s == "soft_q") return Selection::soft_q;
    if (s == "energy_guided") return Selection::energy_guided;
    throw ConfigError("unknown selection mode '" + s + "'");
}

double energy_target(const CriticPair& critics, const Schedule& schedule, const Vec& s,
                     const std::vector<Vec>& support_actions, const Vec& a_t, int t,
                     EnergyDiagnostics* diag) {
    if (t == 0) return min_q(critics, s, a_t, false); // boundary: E_0 = Q

    if (t < 0 || t > schedule.n_steps)
        throw ContractViolation("energy_target step index out of range");
    if (support_actions.size() < 2)
        throw ContractViolation("energy_target needs at least 2 support actions");

    const double abar = schedule.alpha_bar_at(t);
    const double signal = std::sqrt(abar);
    const double inv_two_var = 1.0 / (2.0 * (1.0 - abar));

    const std::size_t m = support_actions.size();
    Vec log_w(m);
    Vec q(m);
    for (std::size_t k = 0; k < m; ++k) {
        double sq = 0.0;
        for (std::size_t d = 0; d < a_t.size(); ++d) {
            const double diff = a_t[d] - signal * support_actions[k][d];
            sq += diff * diff;
        }
        log_w[k] = -sq * inv_two_var;
        q[k] = min_q(critics, s, support_actions[k], false);
    }

    double hi = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(hi)) {
        // Degenerate weights: fall back to a uniform average over the support.
        if (diag) ++diag->degenerate_weight_fallbacks;
        std::fill(log_w.begin(), log_w.end(), 0.0);
    }

    Vec shifted(m);
    for (std::size_t k = 0; k < m; ++k) shifted[k] = log_w[k] + q[k];
    return logsumexp(shifted) - logsumexp(log_w);
}

EnergyLossReport energy_loss(const EnergyModel& energy, const std::vector<double>& targets,
                             const std::vector<EnergyInput>& inputs) {
    if (targets.size() != inputs.size())
        throw ContractViolation("energy_loss needs one target per input");
    if (targets.empty()) throw ContractViolation("energy_loss on empty batch");
    for (double y : targets)
        if (!std::isfinite(y)) throw ContractViolation("energy_loss target must be finite");

    EnergyLossReport report;
    report.grads = make_grads_like(energy.net);
    const double inv_batch = 1.0 / static_cast<double>(targets.size());
    ForwardTrace trace;
    for (std::size_t b = 0; b < targets.size(); ++b) {
        const Vec in = energy.input_for(inputs[b].state, inputs[b].noisy_action, inputs[b].t);
        const double f = mlp_forward(energy.net, in, trace)[0];
        const double diff = f - targets[b];
        report.loss += diff * diff * inv_batch;
        mlp_backward(energy.net, trace, Vec{2.0 * diff * inv_batch}, report.grads);
    }
    return report;
}

Vec guided_score(const EnergyModel& energy, const Vec& s, const Vec& a_t, int t) {
    const Vec in = energy.input_for(s, a_t, t);
    ForwardTrace trace;
    mlp_forward(energy.net, in, trace);
    MlpGrads scratch = make_grads_like(energy.net);
    const Vec input_grad = mlp_backward(energy.net, trace, Vec{1.0}, scratch);
    Vec grad(a_t.size());
    for (std::size_t d = 0; d < a_t.size(); ++d) grad[d] = input_grad[s.size() + d];
    return grad;
}

Vec select_action_max_q(const NoiseModel& model, const Schedule& schedule,
                        const CriticPair& critics, const Vec& s, int k, Rng& rng) {
    if (k < 1) throw ContractViolation("select_action_max_q needs K >= 1");
    Vec best;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        Vec a = sample_action(model, schedule, s, rng);
        const double q = min_q(critics, s, a, false);
        if (q > best_q) { // strict: ties keep the lowest candidate index
            best_q = q;
            best = std::move(a);
        }
    }
    return best;
}

Vec select_action_soft_q(const NoiseModel& model, const Schedule& schedule,
                         const CriticPair& critics, const Vec& s, int k, Rng& rng) {
    if (k < 2) throw ContractViolation("select_action_soft_q needs K >= 2");
    std::vector<Vec> candidates;
    candidates.reserve(static_cast<std::size_t>(k));
    Vec q(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        candidates.push_back(sample_action(model, schedule, s, rng));
        q[static_cast<std::size_t>(c)] = min_q(critics, s, candidates.back(), false);
    }
    const double lse = logsumexp(q);
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (int c = 0; c < k; ++c) {
        cdf += std::exp(q[static_cast<std::size_t>(c)] - lse);
        if (u <= cdf) return candidates[static_cast<std::size_t>(c)];
    }
    return candidates.back(); // numeric slack: cdf summed to just under u
}

Vec select_action_energy_guided(const NoiseModel& model, const Schedule& schedule,
                                const EnergyModel& energy, const Vec& s, double guidance_scale,
                                Rng& rng) {
    if (!energy.trained)
        throw ConfigError("energy-guided selection requires a trained energy model");
    GuidanceFn guidance = [&](const Vec& a_i, int i) { return guided_score(energy, s, a_i, i); };
    return sample_action(model, schedule, s, rng, guidance, guidance_scale);
}

nlohmann::json energy_model_to_json(const EnergyModel& m) {
    nlohmann::json j;
    j["state_dim"] = m.state_dim;
    j["action_dim"] = m.action_dim;
    j["time_embed_dim"] = m.time_embed_dim;
    j["trained"] = m.trained;
    j["net"] = mlp_to_json(m.net);
    return j;
}

EnergyModel energy_model_from_json(const nlohmann::json& j) {
    EnergyModel m;
    m.state_dim = j.at("state_dim").get<int>();
    m.action_dim = j.at("action_dim").get<int>();
    m.time_embed_dim = j.at("time_embed_dim").get<int>();
    m.trained = j.at("trained").get<bool>();
    m.net = mlp_from_json(j.at("net"));
    return m;
}

nlohmann::json guidance_config_to_json(const GuidanceConfig& cfg) {
    return {{"n_candidates", cfg.n_candidates},
            {"selection", to_string(cfg.selection)},
            {"guidance_scale", cfg.guidance_scale},
            {"m_support", cfg.m_support}};
}

GuidanceConfig guidance_config_from_json(const nlohmann::json& j) {
    GuidanceConfig cfg;
    cfg.n_candidates = j.value("n_candidates", cfg.n_candidates);
    cfg.selection = selection_from_string(j.value("selection", std::string("max_q")));
    cfg.guidance_scale = j.value("guidance_scale", cfg.guidance_scale);
    cfg.m_support = j.value("m_support", cfg.m_support);
    return cfg;
}

} // namespace dac
