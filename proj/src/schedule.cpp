#include "dac/schedule.hpp"

#include <cmath>

#include "dac/errors.hpp"

namespace dac {

Schedule make_schedule(int n_steps, double beta_min, double beta_max) {
    if (n_steps < 1) throw ConfigError("schedule needs n_steps >= 1");
    if (!(beta_min > 0.0) || !(beta_min <= beta_max))
        throw ConfigError("schedule needs 0 < beta_min <= beta_max");

    Schedule s;
    s.n_steps = n_steps;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.beta.resize(n_steps);
    s.alpha.resize(n_steps);
    s.alpha_bar.resize(n_steps);

    const double n = static_cast<double>(n_steps);
    double cumulative = 1.0;
    for (int i = 1; i <= n_steps; ++i) {
        const double exponent =
            -beta_min / n - 0.5 * (beta_max - beta_min) * (2.0 * i - 1.0) / (n * n);
        const double alpha = std::exp(exponent);
        const double beta = 1.0 - alpha;
        if (!(beta > 0.0) || !(beta < 1.0))
            throw ConfigError("schedule parameters put beta_" + std::to_string(i) +
                              " outside (0,1)");
        cumulative *= alpha;
        s.beta[i - 1] = beta;
        s.alpha[i - 1] = alpha;
        s.alpha_bar[i - 1] = cumulative;
    }
    return s;
}

} // namespace dac
