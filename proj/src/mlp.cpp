#include "dac/mlp.hpp"

#include <cmath>

#include "dac/errors.hpp"

namespace dac {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double activate(Activation act, double x) {
    switch (act) {
        case Activation::mish: return x * std::tanh(softplus(x));
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh_act: return std::tanh(x);
    }
    return x;
}

// Derivative in terms of the pre-activation z.
double activate_grad(Activation act, double z) {
    switch (act) {
        case Activation::mish: {
            const double t = std::tanh(softplus(z));
            return t + z * (1.0 - t * t) * sigmoid(z);
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh_act: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

} // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::mish: return "mish";
        case Activation::relu: return "relu";
        case Activation::tanh_act: return "tanh";
    }
    return "mish";
}

std::string to_string(OutputActivation a) {
    return a == OutputActivation::tanh_out ? "tanh" : "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "mish") return Activation::mish;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh_act;
    throw ConfigError("unknown activation '" + s + "'");
}

OutputActivation output_activation_from_string(const std::string& s) {
    if (s == "identity") return OutputActivation::identity;
    if (s == "tanh") return OutputActivation::tanh_out;
    throw ConfigError("unknown output activation '" + s + "'");
}

std::size_t MlpParams::n_params() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.data.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

MlpParams make_mlp(const std::vector<std::size_t>& layer_sizes, Activation act,
                   OutputActivation out_act, Rng& rng) {
    if (layer_sizes.size() < 2) throw ConfigError("mlp needs at least input and output sizes");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw ConfigError("mlp layer sizes must be positive");

    MlpParams p;
    p.layer_sizes = layer_sizes;
    p.activation = act;
    p.output_activation = out_act;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t fan_in = layer_sizes[l];
        const std::size_t fan_out = layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (auto& x : w.data) x = rng.uniform(-bound, bound);
        Vec b(fan_out);
        for (auto& x : b) x = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return p;
}

void MlpGrads::zero() {
    for (auto& w : weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGrads::scale(double s) {
    for (auto& w : weights)
        for (auto& x : w.data) x *= s;
    for (auto& b : biases)
        for (auto& x : b) x *= s;
}

void MlpGrads::axpy(double alpha, const MlpGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].data.size(); ++i)
            weights[l].data[i] += alpha * other.weights[l].data[i];
        for (std::size_t i = 0; i < biases[l].size(); ++i)
            biases[l][i] += alpha * other.biases[l][i];
    }
}

bool MlpGrads::all_finite() const {
    for (const auto& w : weights)
        for (double x : w.data)
            if (!std::isfinite(x)) return false;
    for (const auto& b : biases)
        for (double x : b)
            if (!std::isfinite(x)) return false;
    return true;
}

MlpGrads make_grads_like(const MlpParams& params) {
    MlpGrads g;
    for (const auto& w : params.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

Vec mlp_forward(const MlpParams& params, const Vec& input) {
    require_dim(input, params.input_size(), "mlp input");
    Vec h = input;
    Vec z;
    const std::size_t L = params.n_layers();
    for (std::size_t l = 0; l < L; ++l) {
        matvec_add(params.weights[l], h, params.biases[l], z);
        const bool last = (l + 1 == L);
        if (last) {
            if (params.output_activation == OutputActivation::tanh_out)
                for (auto& x : z) x = std::tanh(x);
        } else {
            for (auto& x : z) x = activate(params.activation, x);
        }
        h.swap(z);
    }
    return h;
}

Vec mlp_forward(const MlpParams& params, const Vec& input, ForwardTrace& trace) {
    require_dim(input, params.input_size(), "mlp input");
    const std::size_t L = params.n_layers();
    trace.input = input;
    trace.pre.assign(L, Vec{});
    trace.post.assign(L, Vec{});
    const Vec* h = &trace.input;
    for (std::size_t l = 0; l < L; ++l) {
        matvec_add(params.weights[l], *h, params.biases[l], trace.pre[l]);
        trace.post[l] = trace.pre[l];
        const bool last = (l + 1 == L);
        if (last) {
            if (params.output_activation == OutputActivation::tanh_out)
                for (auto& x : trace.post[l]) x = std::tanh(x);
        } else {
            for (auto& x : trace.post[l]) x = activate(params.activation, x);
        }
        h = &trace.post[l];
    }
    return trace.post.back();
}

Vec mlp_backward(const MlpParams& params, const ForwardTrace& trace, const Vec& upstream,
                 MlpGrads& grads) {
    require_dim(upstream, params.output_size(), "mlp upstream gradient");
    const std::size_t L = params.n_layers();

    // delta = dL/dz for the current layer
    Vec delta = upstream;
    if (params.output_activation == OutputActivation::tanh_out) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const double t = trace.post[L - 1][i];
            delta[i] *= 1.0 - t * t;
        }
    }

    Vec next_delta;
    for (std::size_t l = L; l-- > 0;) {
        const Vec& h_in = (l == 0) ? trace.input : trace.post[l - 1];
        Matrix& gw = grads.weights[l];
        Vec& gb = grads.biases[l];
        const Matrix& w = params.weights[l];

        for (std::size_t r = 0; r < w.rows; ++r) {
            const double d = delta[r];
            gb[r] += d;
            double* grow = &gw.data[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) grow[c] += d * h_in[c];
        }

        next_delta.assign(w.cols, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double d = delta[r];
            const double* row = &w.data[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) next_delta[c] += d * row[c];
        }

        if (l > 0) {
            for (std::size_t c = 0; c < next_delta.size(); ++c)
                next_delta[c] *= activate_grad(params.activation, trace.pre[l - 1][c]);
        }
        delta.swap(next_delta);
    }
    return delta; // gradient w.r.t. the network input
}

std::pair<MlpGrads, Vec> mlp_backward(const MlpParams& params, const Vec& input,
                                      const Vec& upstream) {
    ForwardTrace trace;
    mlp_forward(params, input, trace);
    MlpGrads grads = make_grads_like(params);
    Vec input_grad = mlp_backward(params, trace, upstream, grads);
    return {std::move(grads), std::move(input_grad)};
}

OptState make_opt_state(const MlpParams& params, double learning_rate) {
    OptState s;
    s.first_moment = make_grads_like(params);
    s.second_moment = make_grads_like(params);
    s.learning_rate = learning_rate;
    return s;
}

AdamResult adam_step(MlpParams& params, const MlpGrads& grads, OptState& state) {
    if (!grads.all_finite())
        return {false, "non-finite gradient, update rejected at step " +
                           std::to_string(state.step_count + 1)};

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);

    auto update = [&](double& p, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / bias1;
        const double v_hat = v / bias2;
        p -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    };

    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        auto& w = params.weights[l].data;
        for (std::size_t i = 0; i < w.size(); ++i)
            update(w[i], grads.weights[l].data[i], state.first_moment.weights[l].data[i],
                   state.second_moment.weights[l].data[i]);
        auto& b = params.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i)
            update(b[i], grads.biases[l][i], state.first_moment.biases[l][i],
                   state.second_moment.biases[l][i]);
    }
    return {true, ""};
}

nlohmann::json mlp_to_json(const MlpParams& params) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["layer_sizes"] = params.layer_sizes;
    j["activation"] = to_string(params.activation);
    j["output_activation"] = to_string(params.output_activation);
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : params.weights) weights.push_back(w.data);
    j["weights"] = weights;
    nlohmann::json biases = nlohmann::json::array();
    for (const auto& b : params.biases) biases.push_back(b);
    j["biases"] = biases;
    return j;
}

MlpParams mlp_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1)
        throw ConfigError("unsupported mlp format version");
    MlpParams p;
    p.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    p.activation = activation_from_string(j.at("activation").get<std::string>());
    p.output_activation = output_activation_from_string(j.at("output_activation").get<std::string>());
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() + 1 != p.layer_sizes.size() || biases.size() != weights.size())
        throw ConfigError("mlp json layer count mismatch");
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        Matrix w(p.layer_sizes[l + 1], p.layer_sizes[l]);
        auto flat = weights[l].get<std::vector<double>>();
        if (flat.size() != w.data.size()) throw ConfigError("mlp json weight shape mismatch");
        w.data = std::move(flat);
        p.weights.push_back(std::move(w));
        auto b = biases[l].get<Vec>();
        if (b.size() != p.layer_sizes[l + 1]) throw ConfigError("mlp json bias shape mismatch");
        p.biases.push_back(std::move(b));
    }
    return p;
}

nlohmann::json opt_state_to_json(const OptState& state) {
    nlohmann::json j;
    j["step_count"] = state.step_count;
    j["learning_rate"] = state.learning_rate;
    j["beta1"] = state.beta1;
    j["beta2"] = state.beta2;
    j["epsilon"] = state.epsilon;
    nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
    nlohmann::json mb = nlohmann::json::array(), vb = nlohmann::json::array();
    for (const auto& w : state.first_moment.weights) m.push_back(w.data);
    for (const auto& w : state.second_moment.weights) v.push_back(w.data);
    for (const auto& b : state.first_moment.biases) mb.push_back(b);
    for (const auto& b : state.second_moment.biases) vb.push_back(b);
    j["m_weights"] = m;
    j["v_weights"] = v;
    j["m_biases"] = mb;
    j["v_biases"] = vb;
    return j;
}

OptState opt_state_from_json(const nlohmann::json& j, const MlpParams& params) {
    OptState s = make_opt_state(params, j.at("learning_rate").get<double>());
    s.step_count = j.at("step_count").get<long>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        s.first_moment.weights[l].data = j.at("m_weights")[l].get<std::vector<double>>();
        s.second_moment.weights[l].data = j.at("v_weights")[l].get<std::vector<double>>();
        s.first_moment.biases[l] = j.at("m_biases")[l].get<Vec>();
        s.second_moment.biases[l] = j.at("v_biases")[l].get<Vec>();
        if (s.first_moment.weights[l].data.size() != params.weights[l].data.size())
            throw ConfigError("optimizer state shape mismatch");
    }
    return s;
}

} // namespace dac
