#pragma once

#include <span>

namespace p2pfaas {

// Plateau LR reduction plus early stopping, both driven by the validation
// loss history. An "improvement" is a loss more than min_delta below the best
// seen so far; improvements reset both patience counters.
struct ConvergencePolicy {
    int early_stop_patience = 10;
    double min_delta = 1e-4;
    int plateau_patience = 5;
    double plateau_factor = 0.5;
    double min_lr = 1e-6;

    void validate() const;
};

struct ConvergenceDecision {
    bool stop = false;
    double lr = 0.0;
};

// Replays the full loss history with initial_lr in effect at its first entry:
// after plateau_patience epochs without improvement the learning rate is
// multiplied by plateau_factor (floored at min_lr) and the plateau counter
// resets; after early_stop_patience epochs without improvement the decision
// is stop. Pure function of (policy, losses, initial_lr), so peers sharing a
// loss history always agree.
ConvergenceDecision check_convergence(const ConvergencePolicy& policy, std::span<const double> losses,
                                      double initial_lr);

}  // namespace p2pfaas
