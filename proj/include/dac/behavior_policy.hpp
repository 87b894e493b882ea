#pragma once

#include "dac/dataset.hpp"
#include "dac/diffusion.hpp"

namespace dac {

struct BcLossReport {
    double loss = 0.0;        // mean squared eps-prediction error over the batch
    MlpGrads grads;           // exact analytic gradients w.r.t. the noise model
    std::vector<int> sampled_steps;
};

// One uniformly sampled diffusion step and one fresh noise draw per datum;
// loss is the batch mean of ||eps - eps_theta(a^i, s, i)||^2.
BcLossReport diffusion_bc_loss(const NoiseModel& model, const Schedule& schedule,
                               const TransitionBatch& batch, Rng& rng);

// One-step clean-action estimate a0_hat = a_i/sqrt(abar_i)
// - sqrt(1-abar_i)/sqrt(abar_i) * eps(a_i, s, i). Unclamped: this feeds losses,
// not the environment.
Vec approximate_a0(const Schedule& schedule, const EpsFn& eps_model, const Vec& a_i, const Vec& s,
                   int i);
Vec approximate_a0(const Schedule& schedule, const NoiseModel& model, const Vec& a_i, const Vec& s,
                   int i);

} // namespace dac
