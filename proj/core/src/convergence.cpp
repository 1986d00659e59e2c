#include "p2pfaas/convergence.hpp"

#include <algorithm>
#include <limits>

#include "p2pfaas/errors.hpp"

namespace p2pfaas {

void ConvergencePolicy::validate() const {
    if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
    if (plateau_patience < 1) throw ConfigError("plateau_patience must be >= 1");
    if (min_delta < 0.0) throw ConfigError("min_delta must be >= 0");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must be in (0, 1)");
    if (!(min_lr > 0.0)) throw ConfigError("min_lr must be positive");
}

ConvergenceDecision check_convergence(const ConvergencePolicy& policy, std::span<const double> losses,
                                      double initial_lr) {
    policy.validate();
    if (losses.empty()) throw ValidationError("loss history is empty");

    double best = std::numeric_limits<double>::infinity();
    double lr = initial_lr;
    int plateau_bad = 0;
    int stop_bad = 0;
    for (double loss : losses) {
        if (loss < best - policy.min_delta) {
            best = loss;
            plateau_bad = 0;
            stop_bad = 0;
            continue;
        }
        ++plateau_bad;
        ++stop_bad;
        if (plateau_bad >= policy.plateau_patience) {
            lr = std::max(lr * policy.plateau_factor, policy.min_lr);
            plateau_bad = 0;
        }
        if (stop_bad >= policy.early_stop_patience) {
            return {true, lr};
        }
    }
    return {false, lr};
}

}  // namespace p2pfaas
