#pragma once

#include "ramdp/mdp.hpp"
#include "ramdp/types.hpp"
#include "ramdp/uncertainty.hpp"

#include <Eigen/Core>

namespace ramdp {

/// Non-owning bundle of the model pieces every operator needs.
/// discount == 1 selects the undiscounted (average-reward) operator.
struct BellmanContext {
    BellmanContext(const TabularMdp& mdp, const UncertaintyModel& model, double discount = 1.0);

    const TabularMdp& mdp;
    const UncertaintyModel& model;
    double discount;
};

/// h(s) = max_a Q(s,a).
template <typename Derived>
VectorT<typename Derived::Scalar> max_over_actions(const Eigen::DenseBase<Derived>& q) {
    return q.rowwise().maxCoeff();
}

/// argmax_a Q(s,a) per state, ties to the lowest action index.
template <typename Derived>
Policy greedy(const Eigen::DenseBase<Derived>& q) {
    Policy pi(std::size_t(q.rows()));
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        q.row(s).maxCoeff(&best);
        pi[std::size_t(s)] = int(best);
    }
    return pi;
}

/// sigma(s,a)(h) for every cell.
QTable support_table(const UncertaintyModel& model, const Eigen::Ref<const Vector>& h);

/// T(Q)(s,a) = r(s,a) + sigma(s,a)(max_A Q).
QTable robust_T(const BellmanContext& ctx, const QTable& q);

/// T_gamma(V)(s) = max_a { r(s,a) + gamma sigma(s,a)(V) }; requires gamma < 1.
BiasVector robust_T_discounted(const BellmanContext& ctx, const Eigen::Ref<const Vector>& v);

/// Q-form of the discounted operator: r + gamma sigma(V), S x A.
QTable discounted_q(const BellmanContext& ctx, const Eigen::Ref<const Vector>& v);

/// Sp(T(Q) - Q): bounds the suboptimality of greedy(Q) in robust gain.
double residual_span_gap(const BellmanContext& ctx, const QTable& q);

}  // namespace ramdp
