#include "ramdp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

namespace ramdp {

void ConvergenceTrace::append(const TraceRow& row) {
    if (!rows_.empty() && row.k <= rows_.back().k)
        throw UsageError("trace iterations must be strictly increasing");
    rows_.push_back(row);
}

void ConvergenceTrace::write_csv(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "k,residual_span,greedy_gain,cum_samples\n";
    for (const auto& r : rows_)
        os << r.k << ',' << r.residual_span << ',' << r.greedy_gain << ',' << r.cum_samples << '\n';
    os.precision(old_precision);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

bool should_record(const TraceOptions& opts, long k, bool last) {
    return last || opts.every <= 1 || k % opts.every == 0;
}

double evaluate_or_nan(const TraceOptions& opts, const Policy& pi) {
    return opts.evaluate ? opts.evaluate(pi) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ExactSolveReport rhi_exact(const BellmanContext& ctx, const QTable& q0, long n, double tol,
                           const TraceOptions& trace) {
    if (n < 1) throw UsageError("rhi_exact needs n >= 1");
    if (q0.rows() != ctx.mdp.num_states() || q0.cols() != ctx.mdp.num_actions())
        throw UsageError("Q0 must be S x A");

    ExactSolveReport report;
    QTable q = q0;
    for (long k = 0;; ++k) {
        const QTable tq = robust_T(ctx, q);
        const QTable diff = tq - q;
        const double residual = span(diff);
        const bool done = residual <= tol || k == n;
        if (should_record(trace, k, done))
            report.trace.append({k, residual, evaluate_or_nan(trace, greedy(q)), 0});
        if (done) {
            report.q = q;
            report.policy = greedy(q);
            report.gain = diff.mean();
            report.residual = residual;
            report.iterations = k;
            report.converged = residual <= tol;
            return report;
        }
        const double beta = double(k + 1) / double(k + 3);
        q = anchor((1.0 - beta) * q0 + beta * tq);
    }
}

ExactSolveReport rrvi_baseline(const BellmanContext& ctx, double tol, long max_iter,
                               const TraceOptions& trace, double damping) {
    if (!(tol > 0.0)) throw UsageError("rrvi_baseline needs tol > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw UsageError("damping must lie in (0,1]");

    ExactSolveReport report;
    BiasVector h = BiasVector::Zero(ctx.mdp.num_states());
    double diff = std::numeric_limits<double>::infinity();
    for (long t = 0; t < max_iter; ++t) {
        const QTable q = ctx.mdp.reward() + support_table(ctx.model, h);
        const BiasVector th = max_over_actions(q);
        const BiasVector next = anchor((1.0 - damping) * h + damping * th);
        diff = (next - h).cwiseAbs().maxCoeff();
        h = next;
        const bool done = diff <= tol;
        if (should_record(trace, t, done))
            report.trace.append({t, diff, evaluate_or_nan(trace, greedy(q)), 0});
        if (done) {
            report.q = ctx.mdp.reward() + support_table(ctx.model, h);
            report.policy = greedy(report.q);
            const BiasVector final_th = max_over_actions(report.q);
            report.gain = final_th(0) - h(0);
            report.residual = diff;
            report.iterations = t + 1;
            report.converged = true;
            return report;
        }
    }
    throw NonConvergenceError("rrvi_baseline did not converge within " + std::to_string(max_iter) +
                                  " iterations",
                              diff);
}

DiscountedSolution robust_discounted_vi(const BellmanContext& ctx, double tol, long max_iter) {
    if (!(ctx.discount < 1.0)) throw UsageError("robust_discounted_vi needs discount < 1");
    DiscountedSolution out;
    BiasVector v = BiasVector::Zero(ctx.mdp.num_states());
    for (long t = 0; t < max_iter; ++t) {
        const BiasVector next = robust_T_discounted(ctx, v);
        const double residual = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (residual <= tol) {
            // v is one application past the checked iterate; its residual is at most
            // discount * residual <= tol.
            out.value = v;
            out.policy = greedy(discounted_q(ctx, v));
            out.residual = (robust_T_discounted(ctx, v) - v).cwiseAbs().maxCoeff();
            out.iterations = t + 1;
            return out;
        }
    }
    throw NonConvergenceError("robust_discounted_vi hit the iteration cap",
                              (robust_T_discounted(ctx, v) - v).cwiseAbs().maxCoeff());
}

BiasVector robust_discounted_policy_value(const BellmanContext& ctx, const Policy& policy, double tol,
                                          long max_iter) {
    if (!(ctx.discount < 1.0)) throw UsageError("discounted policy evaluation needs discount < 1");
    check_policy(ctx.mdp, policy);
    const int S = ctx.mdp.num_states();
    BiasVector v = BiasVector::Zero(S);
    BiasVector next(S);
    for (long t = 0; t < max_iter; ++t) {
        for (int s = 0; s < S; ++s) {
            const int a = policy[std::size_t(s)];
            next(s) = ctx.mdp.reward()(s, a) + ctx.discount * support(ctx.model, s, a, v);
        }
        const double residual = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (residual <= tol) return v;
    }
    throw NonConvergenceError("discounted policy evaluation hit the iteration cap", 0.0);
}

ReductionReport reduction_solve(const BellmanContext& ctx, double epsilon, double h_bound, double tol) {
    if (!(epsilon > 0.0)) throw UsageError("reduction needs epsilon > 0");
    if (!(epsilon < h_bound)) throw UsageError("reduction needs epsilon < H (discount would be <= 0)");
    const double gamma = 1.0 - epsilon / h_bound;
    const BellmanContext disc(ctx.mdp, ctx.model, gamma);
    const DiscountedSolution sol = robust_discounted_vi(disc, tol);

    ReductionReport report;
    report.discount = gamma;
    report.value = sol.value;
    report.q = discounted_q(disc, sol.value);
    report.policy = sol.policy;
    report.gain = (1.0 - gamma) * sol.value.mean();
    report.residual = sol.residual;
    report.iterations = sol.iterations;
    report.converged = true;
    const BiasVector v_pi = robust_discounted_policy_value(disc, sol.policy, tol);
    report.discounted_suboptimality = (sol.value - v_pi).cwiseAbs().maxCoeff();
    report.trace.append({sol.iterations, sol.residual, std::numeric_limits<double>::quiet_NaN(), 0});
    return report;
}

double measure_bias_span(const BellmanContext& ctx, const Policy& policy, int kernel_samples,
                         std::uint64_t seed) {
    check_policy(ctx.mdp, policy);
    const int S = ctx.mdp.num_states();
    const Vector r_pi = policy_reward(ctx.mdp, policy);
    double best = 0.0;

    auto consider = [&](const Matrix& chain) {
        try {
            best = std::max(best, span(chain_gain(chain, r_pi).bias));
        } catch (const DegeneracyError&) {
            // non-unichain kernel: no well-defined bias span
        }
    };
    auto worst_chain = [&](const Vector& direction, Matrix& chain) {
        for (int s = 0; s < S; ++s) {
            const int a = policy[std::size_t(s)];
            chain.row(s) = worst_case_kernel_row(ctx.model, s, a, direction).transpose();
        }
    };

    const Matrix nominal = policy_kernel(ctx.mdp, ctx.mdp.nominal(), policy);
    consider(nominal);
    Matrix chain(S, S);
    try {
        // Push mass toward low-bias states, and toward high-bias ones.
        const BiasVector h0 = chain_gain(nominal, r_pi).bias;
        worst_chain(h0, chain);
        consider(chain);
        worst_chain(-h0, chain);
        consider(chain);
    } catch (const std::runtime_error&) {
    }

    for (int i = 0; i < kernel_samples; ++i) {
        std::mt19937_64 rng(mix_seed(seed, std::uint64_t(i)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vector direction(S);
        for (int s = 0; s < S; ++s) direction(s) = gauss(rng);
        try {
            worst_chain(direction, chain);
            consider(chain);
        } catch (const DegeneracyError&) {
        }
        for (int s = 0; s < S; ++s)
            chain.row(s) = random_feasible_row(ctx.model, s, policy[std::size_t(s)], rng).transpose();
        consider(chain);
    }
    return best;
}

}  // namespace ramdp
