#pragma once

#include "ramdp/types.hpp"

#include <Eigen/Core>

#include <algorithm>

namespace ramdp {

/// Finite MDP with a nominal kernel and rewards in [0,1]. Immutable after
/// construction; the constructor enforces the simplex and reward invariants.
class TabularMdp {
public:
    TabularMdp(Kernel nominal, QTable reward);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    const Kernel& nominal() const { return nominal_; }
    const QTable& reward() const { return reward_; }

    /// Index of the (s,a) row in any (S*A) x S kernel.
    Eigen::Index row(int s, int a) const { return Eigen::Index(s) * num_actions_ + a; }
    auto nominal_row(int s, int a) const { return nominal_.row(row(s, a)); }

private:
    int num_states_;
    int num_actions_;
    Kernel nominal_;
    QTable reward_;
};

/// Throws UsageError unless every row of `kernel` lies on the simplex (1e-12).
void check_row_stochastic(const Kernel& kernel);
void check_policy(const TabularMdp& mdp, const Policy& policy);

/// max(v) - min(v) over all coefficients.
template <typename Derived>
typename Derived::Scalar span(const Eigen::DenseBase<Derived>& v) {
    if (v.size() == 0) throw UsageError("span of an empty vector");
    return v.maxCoeff() - v.minCoeff();
}

/// Canonical representative of v modulo constants: subtracts the first
/// coefficient (state 0, or cell (0,0) for a Q table).
template <typename Derived>
typename Derived::PlainObject anchor(const Eigen::DenseBase<Derived>& v) {
    typename Derived::PlainObject out = v;
    if (out.size() == 0) return out;
    const auto first = out(0, 0);
    out.array() -= first;
    return out;
}

/// Gain and bias of a fixed policy; the bias is anchored at state 0.
struct GainResult {
    double gain = 0.0;
    BiasVector bias;
};

/// S x S chain induced by `policy` on an (S*A) x S kernel.
Matrix policy_kernel(const TabularMdp& mdp, const Kernel& kernel, const Policy& policy);
Vector policy_reward(const TabularMdp& mdp, const Policy& policy);

/// Solves h = r - g + P h with h(0) = 0 as a dense (S+1)-unknown system.
/// Throws DegeneracyError when the chain is not unichain.
GainResult chain_gain(const Matrix& chain, const Vector& reward);
GainResult fixed_policy_gain(const TabularMdp& mdp, const Kernel& kernel, const Policy& policy);

/// True iff the chain has exactly one closed communicating class
/// (entries > `threshold` count as edges).
bool is_unichain(const Matrix& chain, double threshold = 0.0);

/// Checks every deterministic policy on the nominal kernel; A^S must be small.
bool all_policies_unichain(const TabularMdp& mdp);

/// Calls f(policy) for each of the A^S deterministic policies in
/// lexicographic order (state 0 most significant).
template <typename F>
void for_each_policy(int num_states, int num_actions, F&& f) {
    Policy pi(std::size_t(num_states), 0);
    while (true) {
        f(static_cast<const Policy&>(pi));
        int s = num_states - 1;
        while (s >= 0 && pi[std::size_t(s)] == num_actions - 1) {
            pi[std::size_t(s)] = 0;
            --s;
        }
        if (s < 0) return;
        ++pi[std::size_t(s)];
    }
}

}  // namespace ramdp
