#pragma once

#include "ramdp/bellman.hpp"
#include "ramdp/mdp.hpp"
#include "ramdp/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace ramdp {

struct TraceRow {
    long k = 0;
    double residual_span = 0.0;
    /// Robust gain of the greedy policy at this iteration; NaN when not evaluated.
    double greedy_gain = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t cum_samples = 0;
};

/// Per-iteration log; iteration indices are strictly increasing.
class ConvergenceTrace {
public:
    void append(const TraceRow& row);
    const std::vector<TraceRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    const TraceRow& back() const { return rows_.back(); }

    /// Header `k,residual_span,greedy_gain,cum_samples`.
    void write_csv(std::ostream& os) const;

private:
    std::vector<TraceRow> rows_;
};

using PolicyEvaluator = std::function<double(const Policy&)>;

struct TraceOptions {
    /// Record every `every`-th iteration (the last one is always recorded).
    long every = 1;
    /// Fills the greedy_gain column when set.
    PolicyEvaluator evaluate;
};

struct ExactSolveReport {
    QTable q;
    Policy policy;
    double gain = 0.0;
    double residual = 0.0;
    long iterations = 0;
    bool converged = false;
    ConvergenceTrace trace;
};

/// Exact robust Halpern iteration with beta_k = k/(k+2):
/// Q^{k+1} = anchor((1 - beta_{k+1}) Q0 + beta_{k+1} T(Q^k)). Stops once
/// Sp(T(Q^k) - Q^k) <= tol or after n iterations. The gain estimate is the
/// mean of T(Q) - Q at termination.
ExactSolveReport rhi_exact(const BellmanContext& ctx, const QTable& q0, long n, double tol,
                           const TraceOptions& trace = {});

/// Robust relative value iteration on h, anchored at state 0 and damped by
/// `damping` (h <- (1-d) h + d T_V(h)) so periodic chains still converge.
/// Throws NonConvergenceError after max_iter iterations.
ExactSolveReport rrvi_baseline(const BellmanContext& ctx, double tol, long max_iter,
                               const TraceOptions& trace = {}, double damping = 0.5);

struct DiscountedSolution {
    BiasVector value;
    Policy policy;
    double residual = 0.0;
    long iterations = 0;
};

/// Banach iteration on the robust discounted operator until ||T(V) - V||_inf <= tol.
DiscountedSolution robust_discounted_vi(const BellmanContext& ctx, double tol,
                                        long max_iter = 10'000'000);

/// Robust discounted value of a fixed policy (policy-restricted iteration).
BiasVector robust_discounted_policy_value(const BellmanContext& ctx, const Policy& policy, double tol,
                                          long max_iter = 10'000'000);

struct ReductionReport : ExactSolveReport {
    double discount = 0.0;
    BiasVector value;
    /// ||V*_gamma - V^pi_gamma||_inf for the returned policy.
    double discounted_suboptimality = 0.0;
};

/// Solves the robust discounted problem with gamma = 1 - epsilon / h_bound
/// and returns its greedy policy.
ReductionReport reduction_solve(const BellmanContext& ctx, double epsilon, double h_bound, double tol);

/// Heuristic lower estimate of max over the set of Sp(h^pi_P): bias spans at
/// the nominal kernel, at worst-case kernels for random value directions, and
/// at random feasible kernels. A running max over a seeded prefix-stable
/// stream, so it is nondecreasing in kernel_samples.
double measure_bias_span(const BellmanContext& ctx, const Policy& policy, int kernel_samples,
                         std::uint64_t seed);

/// splitmix64 step; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ramdp
