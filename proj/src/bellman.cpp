#include "ramdp/bellman.hpp"

namespace ramdp {

BellmanContext::BellmanContext(const TabularMdp& mdp, const UncertaintyModel& model, double discount)
    : mdp(mdp), model(model), discount(discount) {
    if (!(discount >= 0.0 && discount <= 1.0)) throw UsageError("discount must lie in [0,1]");
    if (model.num_states() != mdp.num_states() || model.num_actions() != mdp.num_actions())
        throw UsageError("uncertainty model does not match the MDP dimensions");
}

QTable support_table(const UncertaintyModel& model, const Eigen::Ref<const Vector>& h) {
    QTable out(model.num_states(), model.num_actions());
    for (int s = 0; s < model.num_states(); ++s)
        for (int a = 0; a < model.num_actions(); ++a) out(s, a) = support(model, s, a, h);
    return out;
}

QTable robust_T(const BellmanContext& ctx, const QTable& q) {
    return ctx.mdp.reward() + support_table(ctx.model, max_over_actions(q));
}

QTable discounted_q(const BellmanContext& ctx, const Eigen::Ref<const Vector>& v) {
    return ctx.mdp.reward() + ctx.discount * support_table(ctx.model, v);
}

BiasVector robust_T_discounted(const BellmanContext& ctx, const Eigen::Ref<const Vector>& v) {
    if (ctx.discount >= 1.0) throw UsageError("robust_T_discounted needs discount < 1; use robust_T");
    return max_over_actions(discounted_q(ctx, v));
}

double residual_span_gap(const BellmanContext& ctx, const QTable& q) {
    return span(robust_T(ctx, q) - q);
}

}  // namespace ramdp
