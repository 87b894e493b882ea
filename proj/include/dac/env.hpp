#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dac/linalg.hpp"
#include "dac/rng.hpp"

namespace dac {

struct EnvConfig {
    int state_dim = 16;
    int action_dim = 4;
    int max_steps = 40;
    double preference_drift = 0.02;  // per-step pull toward the episode trend vector
    double reward_noise_sigma = 0.05;
    double boredom_strength = 0.0;   // penalty for repeating similar actions
    std::uint64_t seed = 0;
};

// Hidden per-episode quantities live here next to the exposed summary; only
// interaction_history_summary (plus engagement/progress features folded into
// it) ever reaches the agent.
struct EnvState {
    Vec latent_preference;            // unit vector, action_dim
    Vec trend;                        // unit vector the preference drifts toward
    Vec interaction_history_summary;  // state_dim, the exposed observation
    Vec prev_action;
    int step_index = 0;
    double engagement = 1.0;
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
    bool clamped = false; // action had to be clamped into [-1,1]^d
};

class SimEnv {
  public:
    explicit SimEnv(const EnvConfig& cfg);

    const EnvConfig& config() const { return cfg_; }

    EnvState reset(Rng& rng) const;
    StepResult step(EnvState& state, const Vec& action, Rng& rng) const;

    Vec observe(const EnvState& state) const { return state.interaction_history_summary; }

    // The cheating reference policy: acts on the true current preference.
    Vec oracle_action(const EnvState& state) const { return state.latent_preference; }

    std::uint64_t clamp_warnings() const { return clamp_warnings_; }

  private:
    EnvConfig cfg_;
    Matrix projection_; // (state_dim-2) x action_dim, orthonormal columns
    mutable std::uint64_t clamp_warnings_ = 0;
};

Vec random_unit_vector(std::size_t dim, Rng& rng);

enum class BehaviorKind { mixture_gaussian, epsilon_greedy_oracle, stale_oracle };

std::string to_string(BehaviorKind k);
BehaviorKind behavior_kind_from_string(const std::string& s);

struct BehaviorSpec {
    BehaviorKind kind = BehaviorKind::mixture_gaussian;
    std::vector<Vec> mixture_means; // one vector per component, action_dim each
    double sigma = 0.05;
    double epsilon = 0.0;
    int staleness_lag = 0; // >= max_steps pins the initial preference
};

nlohmann::json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const nlohmann::json& j);
nlohmann::json behavior_spec_to_json(const BehaviorSpec& spec);
BehaviorSpec behavior_spec_from_json(const nlohmann::json& j);

} // namespace dac
