#include "ramdp/mdp.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>
#include <vector>

namespace ramdp {

void check_row_stochastic(const Kernel& kernel) {
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        const auto row = kernel.row(i);
        if (!row.allFinite() || (row.array() < 0.0).any() || (row.array() > 1.0).any())
            throw UsageError("kernel row " + std::to_string(i) + " has entries outside [0,1]");
        if (std::abs(row.sum() - 1.0) > 1e-12)
            throw UsageError("kernel row " + std::to_string(i) + " does not sum to 1");
    }
}

TabularMdp::TabularMdp(Kernel nominal, QTable reward)
    : num_states_(int(reward.rows())),
      num_actions_(int(reward.cols())),
      nominal_(std::move(nominal)),
      reward_(std::move(reward)) {
    if (num_states_ < 1 || num_actions_ < 1) throw UsageError("MDP needs S >= 1 and A >= 1");
    if (nominal_.rows() != Eigen::Index(num_states_) * num_actions_ || nominal_.cols() != num_states_)
        throw UsageError("nominal kernel must be (S*A) x S");
    check_row_stochastic(nominal_);
    if (!reward_.allFinite() || (reward_.array() < 0.0).any() || (reward_.array() > 1.0).any())
        throw UsageError("rewards must lie in [0,1]");
}

void check_policy(const TabularMdp& mdp, const Policy& policy) {
    if (policy.size() != std::size_t(mdp.num_states()))
        throw UsageError("policy length must equal S");
    for (int a : policy)
        if (a < 0 || a >= mdp.num_actions()) throw UsageError("policy action out of range");
}

Matrix policy_kernel(const TabularMdp& mdp, const Kernel& kernel, const Policy& policy) {
    check_policy(mdp, policy);
    const int S = mdp.num_states();
    Matrix chain(S, S);
    for (int s = 0; s < S; ++s) chain.row(s) = kernel.row(mdp.row(s, policy[std::size_t(s)]));
    return chain;
}

Vector policy_reward(const TabularMdp& mdp, const Policy& policy) {
    check_policy(mdp, policy);
    Vector r(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) r(s) = mdp.reward()(s, policy[std::size_t(s)]);
    return r;
}

GainResult chain_gain(const Matrix& chain, const Vector& reward) {
    const Eigen::Index S = chain.rows();
    // Unknowns x = (g, h(0..S-1)); rows 0..S-1: g + h(s) - sum_s' P(s'|s) h(s') = r(s);
    // last row pins h(0) = 0.
    Matrix system = Matrix::Zero(S + 1, S + 1);
    Vector rhs = Vector::Zero(S + 1);
    system.block(0, 0, S, 1).setOnes();
    system.block(0, 1, S, S) = Matrix::Identity(S, S) - chain;
    rhs.head(S) = reward;
    system(S, 1) = 1.0;

    Eigen::FullPivLU<Matrix> lu(system);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw DegeneracyError("gain system is singular (chain is not unichain)");
    const Vector x = lu.solve(rhs);
    GainResult out;
    out.gain = x(0);
    out.bias = x.tail(S);
    out.bias(0) = 0.0;
    return out;
}

GainResult fixed_policy_gain(const TabularMdp& mdp, const Kernel& kernel, const Policy& policy) {
    return chain_gain(policy_kernel(mdp, kernel, policy), policy_reward(mdp, policy));
}

bool is_unichain(const Matrix& chain, double threshold) {
    const int S = int(chain.rows());
    // reach(i,j): j reachable from i (reflexive).
    std::vector<std::vector<char>> reach(std::size_t(S), std::vector<char>(std::size_t(S), 0));
    for (int i = 0; i < S; ++i) {
        std::vector<int> stack{i};
        reach[std::size_t(i)][std::size_t(i)] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < S; ++v) {
                if (chain(u, v) > threshold && !reach[std::size_t(i)][std::size_t(v)]) {
                    reach[std::size_t(i)][std::size_t(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    // A state is recurrent iff every state it reaches reaches it back. Recurrent
    // classes are then disjoint; unichain means all recurrent states share one.
    int representative = -1;
    for (int i = 0; i < S; ++i) {
        bool recurrent = true;
        for (int j = 0; j < S && recurrent; ++j)
            if (reach[std::size_t(i)][std::size_t(j)] && !reach[std::size_t(j)][std::size_t(i)]) recurrent = false;
        if (!recurrent) continue;
        if (representative < 0)
            representative = i;
        else if (!reach[std::size_t(representative)][std::size_t(i)])
            return false;
    }
    return representative >= 0;
}

bool all_policies_unichain(const TabularMdp& mdp) {
    bool ok = true;
    for_each_policy(mdp.num_states(), mdp.num_actions(), [&](const Policy& pi) {
        if (ok && !is_unichain(policy_kernel(mdp, mdp.nominal(), pi))) ok = false;
    });
    return ok;
}

}  // namespace ramdp
