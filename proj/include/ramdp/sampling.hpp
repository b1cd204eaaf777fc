#pragma once

#include "ramdp/bellman.hpp"
#include "ramdp/mdp.hpp"
#include "ramdp/solvers.hpp"
#include "ramdp/types.hpp"
#include "ramdp/uncertainty.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ramdp {

/// Sampling access to the nominal kernel. Identical seeds give identical draws.
class GenerativeModel {
public:
    GenerativeModel(const TabularMdp& mdp, std::uint64_t seed);

    const TabularMdp& mdp() const { return *mdp_; }
    /// Total next-state draws so far.
    std::uint64_t sample_count() const { return count_; }

    /// m i.i.d. draws from P0(.|s,a).
    std::vector<int> draw_next_states(int s, int a, long m);
    /// (1/m) sum_j values(s_j) with s_j ~ P0(.|s,a). The multinomial visit
    /// counts are drawn directly by conditional binomials, so the cost does not
    /// grow with m; the counter still advances by m.
    double sample_mean(int s, int a, long m, const Eigen::Ref<const Vector>& values);

private:
    void check(int s, int a, long m) const;

    const TabularMdp* mdp_;
    std::mt19937_64 rng_;
    std::vector<std::discrete_distribution<int>> rows_;
    struct Sparse {
        std::vector<int> states;
        std::vector<double> probs;
    };
    std::vector<Sparse> sparse_;
    std::uint64_t count_ = 0;
};

struct RhiConfig {
    long n = 300;
    double epsilon = 0.1;
    double delta = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    /// ln(2 S A (n+1) / delta).
    double alpha(int num_states, int num_actions) const;
};

/// c_k = 5 (k+2) ln^2(k+2).
double batch_weight(long k);
/// beta_k = k / (k+2).
double halpern_weight(long k);

/// One sampled increment D^k of the robust operator estimate:
/// Lp:            D(s,a) = mean_j d(s_j) - R (kappa(h_k) - kappa(h_prev))
/// contamination: D(s,a) = (1-R) mean_j d(s_j) + R (min h_k - min h_prev)
/// with d = h_k - h_prev and s_j ~ P0(.|s,a), m draws per pair.
QTable r_sample(GenerativeModel& gm, const UncertaintyModel& model, const Eigen::Ref<const Vector>& h_k,
                const Eigen::Ref<const Vector>& h_prev, long m);

/// Iterate bundle after an RHI step.
struct RhiState {
    long k = -1;           ///< index of the last completed iteration
    QTable q;              ///< Q^k
    BiasVector h;          ///< h^k, anchored
    BiasVector h_prev;     ///< h^{k-1}, anchored
    QTable t;              ///< T^k
    QTable increment;      ///< D^k
    long batch = 0;        ///< m_k
    std::uint64_t cum_samples = 0;
};

/// Sampled robust Halpern iteration, one call to step() per iteration
/// k = 0..n. Starts from T^{-1} = r, h^{-1} = 0.
class RhiSampler {
public:
    RhiSampler(GenerativeModel& gm, const UncertaintyModel& model, const RhiConfig& cfg);
    RhiSampler(GenerativeModel& gm, const UncertaintyModel& model, const RhiConfig& cfg, QTable q0);

    bool done() const { return state_.k >= cfg_.n; }
    const RhiState& step();
    const RhiState& state() const { return state_; }
    const RhiConfig& config() const { return cfg_; }

private:
    GenerativeModel& gm_;
    const UncertaintyModel& model_;
    RhiConfig cfg_;
    double alpha_;
    QTable q0_;
    RhiState state_;
};

struct RhiResult {
    Policy policy;
    QTable q;
    ConvergenceTrace trace;
    std::uint64_t total_samples = 0;
};

/// Runs iterations 0..n and returns greedy(Q^n). The residual column holds
/// Sp(T(Q^k) - Q^k) computed with the exact operator (diagnostic only).
RhiResult rhi_sampled(GenerativeModel& gm, const UncertaintyModel& model, const RhiConfig& cfg,
                      const TraceOptions& trace = {});

struct SampleBudget {
    std::uint64_t total_samples = 0;
    long iterations = 0;
};

SampleBudget sample_budget_report(const ConvergenceTrace& trace);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace ramdp
