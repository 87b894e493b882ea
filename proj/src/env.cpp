#include "dac/env.hpp"

#include <cmath>

#include "dac/errors.hpp"

namespace dac {

namespace {

// Summary dynamics and engagement/termination constants. The last two summary
// coordinates carry engagement and normalized step progress; the rest hold a
// reward-weighted moving average of projected actions seeded with a noisy
// projection of the initial preference (a "profile hint").
constexpr double kHintNoiseSigma = 0.25;
constexpr double kHistoryDecay = 0.75;
constexpr double kEngagementGain = 0.25;
constexpr double kEngagementRef = 0.5;
constexpr double kBaseHazard = 0.02;
constexpr double kHazardScale = 0.3;
constexpr double kEngagementFloor = 0.02;

double cosine(const Vec& a, const Vec& b) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

} // namespace

Vec random_unit_vector(std::size_t dim, Rng& rng) {
    Vec v = rng.normal_vec(dim);
    double n = norm2(v);
    while (n < 1e-12) { // astronomically unlikely, but keep the contract exact
        v = rng.normal_vec(dim);
        n = norm2(v);
    }
    for (auto& x : v) x /= n;
    return v;
}

SimEnv::SimEnv(const EnvConfig& cfg) : cfg_(cfg) {
    if (cfg.action_dim < 1) throw ConfigError("env action_dim must be positive");
    if (cfg.state_dim < cfg.action_dim + 2)
        throw ConfigError("env state_dim must be at least action_dim + 2");
    if (cfg.max_steps < 1) throw ConfigError("env max_steps must be positive");
    if (cfg.preference_drift < 0.0 || cfg.reward_noise_sigma < 0.0 || cfg.boredom_strength < 0.0)
        throw ConfigError("env rates must be non-negative");

    // Fixed projection from action space into the history part of the summary,
    // derived from the config seed so it is stable across episodes. Columns are
    // orthonormalized so directions stay recoverable from the summary.
    const std::size_t hist_dim = static_cast<std::size_t>(cfg.state_dim - 2);
    Rng proj_rng(cfg.seed, /*stream=*/0x70726f6aULL);
    projection_ = Matrix(hist_dim, static_cast<std::size_t>(cfg.action_dim));
    std::vector<Vec> cols;
    for (int c = 0; c < cfg.action_dim; ++c) {
        Vec v;
        double n = 0.0;
        do {
            v = proj_rng.normal_vec(hist_dim);
            for (const auto& prev : cols) {
                const double proj = dot(v, prev);
                for (std::size_t d = 0; d < hist_dim; ++d) v[d] -= proj * prev[d];
            }
            n = norm2(v);
        } while (n < 1e-9);
        for (auto& x : v) x /= n;
        cols.push_back(std::move(v));
    }
    for (std::size_t r = 0; r < hist_dim; ++r)
        for (int c = 0; c < cfg.action_dim; ++c)
            projection_.at(r, static_cast<std::size_t>(c)) = cols[static_cast<std::size_t>(c)][r];
}

EnvState SimEnv::reset(Rng& rng) const {
    EnvState st;
    st.latent_preference = random_unit_vector(static_cast<std::size_t>(cfg_.action_dim), rng);
    st.trend = random_unit_vector(static_cast<std::size_t>(cfg_.action_dim), rng);
    st.prev_action.assign(static_cast<std::size_t>(cfg_.action_dim), 0.0);
    st.step_index = 0;
    st.engagement = 1.0;

    const std::size_t hist_dim = static_cast<std::size_t>(cfg_.state_dim - 2);
    st.interaction_history_summary.assign(static_cast<std::size_t>(cfg_.state_dim), 0.0);
    Vec hint;
    matvec_add(projection_, st.latent_preference, Vec(hist_dim, 0.0), hint);
    for (std::size_t d = 0; d < hist_dim; ++d)
        st.interaction_history_summary[d] = hint[d] + kHintNoiseSigma * rng.normal();
    st.interaction_history_summary[hist_dim] = st.engagement;
    st.interaction_history_summary[hist_dim + 1] = 0.0;
    return st;
}

StepResult SimEnv::step(EnvState& state, const Vec& action, Rng& rng) const {
    require_dim(action, static_cast<std::size_t>(cfg_.action_dim), "env action");
    if (!all_finite(action)) throw ContractViolation("env action must be finite");

    StepResult res;
    Vec a = action;
    for (auto& x : a) {
        if (x < -1.0 || x > 1.0) res.clamped = true;
        x = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
    }
    if (res.clamped) ++clamp_warnings_;

    const double base = 0.5 * (1.0 + cosine(a, state.latent_preference));
    double penalty = 0.0;
    if (cfg_.boredom_strength > 0.0) {
        const double sim = cosine(a, state.prev_action);
        if (sim > 0.0) penalty = cfg_.boredom_strength * sim;
    }
    double r = base - penalty;
    if (cfg_.reward_noise_sigma > 0.0) r += cfg_.reward_noise_sigma * rng.normal();
    r = r < 0.0 ? 0.0 : (r > 1.0 ? 1.0 : r);
    res.reward = r;

    // Preference drifts toward the episode trend, staying on the unit sphere.
    if (cfg_.preference_drift > 0.0) {
        Vec p = state.latent_preference;
        for (std::size_t d = 0; d < p.size(); ++d)
            p[d] += cfg_.preference_drift * (state.trend[d] - p[d]);
        const double n = norm2(p);
        if (n > 1e-12)
            for (auto& x : p) x /= n;
        state.latent_preference = p;
    }

    state.engagement += kEngagementGain * (r - kEngagementRef);
    state.engagement = state.engagement < 0.0 ? 0.0 : (state.engagement > 1.0 ? 1.0 : state.engagement);

    const double hazard = kBaseHazard + kHazardScale * (1.0 - state.engagement);
    const bool disengaged = rng.uniform01() < hazard || state.engagement < kEngagementFloor;

    const std::size_t hist_dim = static_cast<std::size_t>(cfg_.state_dim - 2);
    Vec embedded;
    matvec_add(projection_, a, Vec(hist_dim, 0.0), embedded);
    const double signal = 2.0 * r - 1.0; // clicks push toward the action, skips away
    for (std::size_t d = 0; d < hist_dim; ++d) {
        auto& h = state.interaction_history_summary[d];
        h = kHistoryDecay * h + (1.0 - kHistoryDecay) * signal * embedded[d];
    }

    state.prev_action = a;
    state.step_index += 1;
    state.interaction_history_summary[hist_dim] = state.engagement;
    state.interaction_history_summary[hist_dim + 1] =
        static_cast<double>(state.step_index) / cfg_.max_steps;

    res.done = disengaged || state.step_index >= cfg_.max_steps;
    return res;
}

std::string to_string(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::mixture_gaussian: return "mixture_gaussian";
        case BehaviorKind::epsilon_greedy_oracle: return "epsilon_greedy_oracle";
        case BehaviorKind::stale_oracle: return "stale_oracle";
    }
    return "mixture_gaussian";
}

BehaviorKind behavior_kind_from_string(const std::string& s) {
    if (s == "mixture_gaussian") return BehaviorKind::mixture_gaussian;
    if (s == "epsilon_greedy_oracle") return BehaviorKind::epsilon_greedy_oracle;
    if (s == "stale_oracle") return BehaviorKind::stale_oracle;
    throw ConfigError("unknown behavior kind '" + s + "'");
}

nlohmann::json env_config_to_json(const EnvConfig& cfg) {
    return {{"state_dim", cfg.state_dim},
            {"action_dim", cfg.action_dim},
            {"max_steps", cfg.max_steps},
            {"preference_drift", cfg.preference_drift},
            {"reward_noise_sigma", cfg.reward_noise_sigma},
            {"boredom_strength", cfg.boredom_strength},
            {"seed", cfg.seed}};
}

EnvConfig env_config_from_json(const nlohmann::json& j) {
    EnvConfig cfg;
    cfg.state_dim = j.value("state_dim", cfg.state_dim);
    cfg.action_dim = j.value("action_dim", cfg.action_dim);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.preference_drift = j.value("preference_drift", cfg.preference_drift);
    cfg.reward_noise_sigma = j.value("reward_noise_sigma", cfg.reward_noise_sigma);
    cfg.boredom_strength = j.value("boredom_strength", cfg.boredom_strength);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

nlohmann::json behavior_spec_to_json(const BehaviorSpec& spec) {
    nlohmann::json means = nlohmann::json::array();
    for (const auto& m : spec.mixture_means) means.push_back(m);
    return {{"kind", to_string(spec.kind)},
            {"mixture_means", means},
            {"sigma", spec.sigma},
            {"epsilon", spec.epsilon},
            {"staleness_lag", spec.staleness_lag}};
}

BehaviorSpec behavior_spec_from_json(const nlohmann::json& j) {
    BehaviorSpec spec;
    spec.kind = behavior_kind_from_string(j.value("kind", std::string("mixture_gaussian")));
    if (j.contains("mixture_means"))
        for (const auto& m : j.at("mixture_means")) spec.mixture_means.push_back(m.get<Vec>());
    spec.sigma = j.value("sigma", spec.sigma);
    spec.epsilon = j.value("epsilon", spec.epsilon);
    spec.staleness_lag = j.value("staleness_lag", spec.staleness_lag);
    return spec;
}

} // namespace dac
