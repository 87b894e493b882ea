#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dac/env.hpp"
#include "dac/linalg.hpp"
#include "dac/rng.hpp"

namespace dac {

struct Transition {
    Vec state;
    Vec action;
    double reward = 0.0;
    Vec next_state;
    bool done = false;
    std::uint32_t trajectory_id = 0;
};

struct NormalizationStats {
    Vec mean;
    Vec std_dev; // floored at 1e-8 for near-constant coordinates
};

constexpr std::uint32_t kDatasetFormatVersion = 1;

struct DatasetMetadata {
    EnvConfig env;
    BehaviorSpec behavior;
    std::uint64_t seed = 0;
    std::uint32_t format_version = kDatasetFormatVersion;
};

struct OfflineDataset {
    std::vector<Transition> transitions;
    NormalizationStats normalization;
    DatasetMetadata metadata;

    std::size_t size() const { return transitions.size(); }
    int state_dim() const { return metadata.env.state_dim; }
    int action_dim() const { return metadata.env.action_dim; }

    Vec normalize_state(const Vec& raw) const;
    double mean_reward() const;
};

// Parallel arrays; states/next_states are already normalized when produced by
// sample_minibatch.
struct TransitionBatch {
    std::vector<Vec> states;
    std::vector<Vec> actions;
    Vec rewards;
    std::vector<Vec> next_states;
    std::vector<std::uint8_t> dones;

    std::size_t size() const { return states.size(); }
};

NormalizationStats compute_normalization(const std::vector<Transition>& transitions,
                                         int state_dim);

// Rolls out the behavior policy on the synthetic environment. The metadata
// records cfg, behavior, and seed verbatim.
OfflineDataset generate_dataset(const EnvConfig& cfg, const BehaviorSpec& behavior,
                                int n_trajectories, Rng& rng);

// One behavior action; exposed so oracle baselines can reuse the exact policy.
Vec behavior_action(const SimEnv& env, const BehaviorSpec& behavior, const EnvState& state,
                    const std::vector<Vec>& preference_history, Rng& rng);

// Binary container: magic, version, JSON header, length-prefixed records,
// trailing CRC-32. Layout documented in docs/dataset_format.md.
void write_dataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset read_dataset(const std::string& path);

// Uniform with replacement; states and next_states are normalized with the
// dataset's stored stats.
TransitionBatch sample_minibatch(const OfflineDataset& dataset, std::size_t batch_size, Rng& rng);

nlohmann::json normalization_to_json(const NormalizationStats& stats);
NormalizationStats normalization_from_json(const nlohmann::json& j);

} // namespace dac
