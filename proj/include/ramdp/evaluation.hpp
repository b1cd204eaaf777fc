#pragma once

#include "ramdp/mdp.hpp"
#include "ramdp/types.hpp"
#include "ramdp/uncertainty.hpp"

#include <optional>

namespace ramdp {

enum class GainMethod { RviExact, GridOracle };

/// Worst-case average reward of a fixed policy.
struct RobustGain {
    double gain = 0.0;
    /// A feasible (S*A) x S kernel attaining `gain`: policy rows are worst-case
    /// rows, the rest nominal. Absent when some policy row fails the
    /// small-radius condition.
    std::optional<Kernel> certificate;
    GainMethod method = GainMethod::RviExact;
    BiasVector bias;
    long iterations = 0;
    /// Grid oracles only: Lipschitz-style bound grid_step * Sp(bias).
    double error_bound = 0.0;
};

/// Policy-restricted robust relative value iteration, damped by 1/2:
/// h <- anchor(h/2 + (r_pi + sigma_pi(h))/2). Throws NonConvergenceError at
/// the iteration cap.
RobustGain robust_policy_gain(const TabularMdp& mdp, const UncertaintyModel& model, const Policy& policy,
                              double tol = 1e-11, long max_iter = 1'000'000);

/// Grid oracle: discretises each policy row's feasible set, then minimises the
/// fixed-policy gain over the product (full enumeration for S <= 2, adversarial
/// policy iteration over the grid rows for S = 3). Never calls support().
RobustGain brute_force_robust_gain(const TabularMdp& mdp, const UncertaintyModel& model,
                                   const Policy& policy, double grid_step = 1e-2);

struct OptimalPolicy {
    Policy policy;
    double gain = 0.0;
};

/// Enumerates all A^S policies with brute_force_robust_gain; first maximiser wins.
OptimalPolicy brute_force_optimal(const TabularMdp& mdp, const UncertaintyModel& model,
                                  double grid_step = 1e-2);

/// Feasible grid points of the (s,a) row set (exposed for tests).
std::vector<Vector> grid_rows(const UncertaintyModel& model, int s, int a, double grid_step);

}  // namespace ramdp
