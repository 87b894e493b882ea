#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dac/linalg.hpp"
#include "dac/rng.hpp"

namespace dac {

enum class Activation { mish, relu, tanh_act };
enum class OutputActivation { identity, tanh_out };

std::string to_string(Activation a);
std::string to_string(OutputActivation a);
Activation activation_from_string(const std::string& s);
OutputActivation output_activation_from_string(const std::string& s);

// A plain fully connected network with analytic gradients. Hidden layers share
// one activation; the output layer gets its own (identity or tanh).
struct MlpParams {
    std::vector<std::size_t> layer_sizes; // [in, h1, ..., out]
    std::vector<Matrix> weights;          // weights[l] has shape layer_sizes[l+1] x layer_sizes[l]
    std::vector<Vec> biases;
    Activation activation = Activation::mish;
    OutputActivation output_activation = OutputActivation::identity;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t n_layers() const { return weights.size(); }
    std::size_t n_params() const;
};

// Weights and biases drawn U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
MlpParams make_mlp(const std::vector<std::size_t>& layer_sizes, Activation act,
                   OutputActivation out_act, Rng& rng);

// Parameter-shaped container reused for gradients and optimizer moments.
struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<Vec> biases;

    void zero();
    void scale(double s);
    void axpy(double alpha, const MlpGrads& other); // this += alpha * other
    bool all_finite() const;
};

MlpGrads make_grads_like(const MlpParams& params);

// Per-layer pre-activations and activations kept for the backward pass.
struct ForwardTrace {
    Vec input;
    std::vector<Vec> pre;  // z_l = W_l h_{l-1} + b_l
    std::vector<Vec> post; // h_l = act(z_l)
};

Vec mlp_forward(const MlpParams& params, const Vec& input);
Vec mlp_forward(const MlpParams& params, const Vec& input, ForwardTrace& trace);

// Accumulates d(upstream . output)/d(params) into grads and returns
// d(upstream . output)/d(input).
Vec mlp_backward(const MlpParams& params, const ForwardTrace& trace, const Vec& upstream,
                 MlpGrads& grads);

// Convenience form matching the operation contract: runs its own forward pass.
std::pair<MlpGrads, Vec> mlp_backward(const MlpParams& params, const Vec& input,
                                      const Vec& upstream);

struct OptState {
    MlpGrads first_moment;
    MlpGrads second_moment;
    long step_count = 0;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptState make_opt_state(const MlpParams& params, double learning_rate);

struct AdamResult {
    bool applied = true;
    std::string diagnostic; // set when the update was rejected
};

// Bias-corrected adaptive-moment update, in place. A non-finite gradient
// rejects the whole update and leaves params and state untouched.
AdamResult adam_step(MlpParams& params, const MlpGrads& grads, OptState& state);

nlohmann::json mlp_to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& j);
nlohmann::json opt_state_to_json(const OptState& state);
OptState opt_state_from_json(const nlohmann::json& j, const MlpParams& params);

} // namespace dac
