#include "ramdp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ramdp {

RobustGain robust_policy_gain(const TabularMdp& mdp, const UncertaintyModel& model, const Policy& policy,
                              double tol, long max_iter) {
    check_policy(mdp, policy);
    const int S = mdp.num_states();
    const Vector r_pi = policy_reward(mdp, policy);

    auto apply = [&](const BiasVector& h) {
        BiasVector out(S);
        for (int s = 0; s < S; ++s) out(s) = r_pi(s) + support(model, s, policy[std::size_t(s)], h);
        return out;
    };

    RobustGain result;
    BiasVector h = BiasVector::Zero(S);
    double diff = std::numeric_limits<double>::infinity();
    long t = 0;
    for (; t < max_iter && diff > tol; ++t) {
        const BiasVector next = anchor(0.5 * h + 0.5 * apply(h));
        diff = (next - h).cwiseAbs().maxCoeff();
        h = next;
    }
    if (diff > tol) throw NonConvergenceError("robust_policy_gain hit the iteration cap", diff);

    result.gain = apply(h)(0) - h(0);
    result.bias = h;
    result.iterations = t;
    result.method = GainMethod::RviExact;

    bool exact = true;
    for (int s = 0; s < S; ++s) exact = exact && model.is_exact(s, policy[std::size_t(s)]);
    if (exact) {
        Kernel cert = mdp.nominal();
        for (int s = 0; s < S; ++s) {
            const int a = policy[std::size_t(s)];
            cert.row(mdp.row(s, a)) = worst_case_kernel_row(model, s, a, h).transpose();
        }
        result.certificate = std::move(cert);
    }
    return result;
}

std::vector<Vector> grid_rows(const UncertaintyModel& model, int s, int a, double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 0.5)) throw UsageError("grid_step must lie in (0, 0.5]");
    const Vector nominal = model.nominal_row(s, a).transpose();
    const double R = model.radius(s, a);
    const int S = model.num_states();
    std::vector<Vector> rows;
    if (R == 0.0) return {nominal};

    if (model.kind() == SetKind::Contamination) {
        if (S > 3) throw UsageError("grid oracle supports at most 3 states");
        const int N = int(std::lround(1.0 / grid_step));
        // All compositions c of N into S parts; q = c / N covers the simplex vertices.
        std::vector<int> c(std::size_t(S), 0);
        auto emit = [&](auto&& self, int pos, int left) -> void {
            if (pos == S - 1) {
                c[std::size_t(pos)] = left;
                Vector q(S);
                for (int i = 0; i < S; ++i) q(i) = double(c[std::size_t(i)]) / N;
                rows.push_back((1.0 - R) * nominal + R * q);
                return;
            }
            for (int x = 0; x <= left; ++x) {
                c[std::size_t(pos)] = x;
                self(self, pos + 1, left - x);
            }
        };
        emit(emit, 0, N);
        return rows;
    }

    const auto idx = model.effective_support(s, a);
    const int n = int(idx.size());
    if (n <= 1) return {nominal};
    if (n > 3) throw UsageError("grid oracle supports at most 3 effective states");
    const int dim = n - 1;
    const double p = model.p();

    auto norm_p = [&](const Vector& d) {
        if (std::isinf(p)) return d.cwiseAbs().maxCoeff();
        return std::pow(d.cwiseAbs().array().pow(p).sum(), 1.0 / p);
    };
    // Pulls a perturbation back along the ray to the nominal row until it is
    // inside both the ball and the nonnegative orthant.
    auto push = [&](const Vector& delta) {
        double t = 1.0;
        const double nrm = norm_p(delta);
        if (nrm > R) t = R / nrm;
        for (int k = 0; k < n; ++k) {
            const double base = nominal(idx[std::size_t(k)]);
            if (delta(k) < 0.0) t = std::min(t, base / -delta(k));
        }
        Vector row = nominal;
        for (int k = 0; k < n; ++k) row(idx[std::size_t(k)]) += t * delta(k);
        rows.push_back(row);
    };

    const int M = 2 * int(std::lround(1.0 / grid_step));
    std::vector<int> counter(std::size_t(dim), 0);
    while (true) {
        Vector delta(n);
        for (int k = 0; k < dim; ++k) delta(k) = -R + 2.0 * R * counter[std::size_t(k)] / M;
        delta(dim) = -delta.head(dim).sum();
        push(delta);
        int k = 0;
        while (k < dim && ++counter[std::size_t(k)] > M) counter[std::size_t(k++)] = 0;
        if (k == dim) break;
    }
    if (dim == 2) {
        // Dense ring of boundary directions in the sum-zero plane.
        const Vector b1 = (Vector(3) << 1.0, -1.0, 0.0).finished() / std::sqrt(2.0);
        const Vector b2 = (Vector(3) << 1.0, 1.0, -2.0).finished() / std::sqrt(6.0);
        const int K = int(std::ceil(4.0 * std::numbers::pi / grid_step));
        for (int i = 0; i < K; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / K;
            push(4.0 * R * (std::cos(theta) * b1 + std::sin(theta) * b2));
        }
    }
    return rows;
}

namespace {

constexpr long kProductLimit = 5'000'000;

}  // namespace

RobustGain brute_force_robust_gain(const TabularMdp& mdp, const UncertaintyModel& model,
                                   const Policy& policy, double grid_step) {
    check_policy(mdp, policy);
    const int S = mdp.num_states();
    if (S > 3) throw UsageError("brute_force_robust_gain supports at most 3 states");
    const Vector r_pi = policy_reward(mdp, policy);

    std::vector<std::vector<Vector>> candidates;
    for (int s = 0; s < S; ++s) candidates.push_back(grid_rows(model, s, policy[std::size_t(s)], grid_step));

    RobustGain best;
    best.method = GainMethod::GridOracle;
    best.gain = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> choice(std::size_t(S), 0);
    Matrix chain(S, S);
    auto load = [&] {
        for (int s = 0; s < S; ++s) chain.row(s) = candidates[std::size_t(s)][choice[std::size_t(s)]].transpose();
    };

    long product = 1;
    for (const auto& c : candidates) product = std::min(kProductLimit + 1, product * long(c.size()));

    if (S <= 2 && product <= kProductLimit) {
        bool any = false;
        while (true) {
            load();
            try {
                const GainResult g = chain_gain(chain, r_pi);
                if (g.gain < best.gain) {
                    best.gain = g.gain;
                    best.bias = g.bias;
                    Kernel cert = mdp.nominal();
                    for (int s = 0; s < S; ++s) cert.row(mdp.row(s, policy[std::size_t(s)])) = chain.row(s);
                    best.certificate = std::move(cert);
                }
                any = true;
            } catch (const DegeneracyError&) {
            }
            int s = 0;
            while (s < S && ++choice[std::size_t(s)] == candidates[std::size_t(s)].size()) choice[std::size_t(s++)] = 0;
            if (s == S) break;
        }
        if (!any) throw DegeneracyError("no unichain kernel on the grid");
    } else {
        // Adversarial policy iteration: rows are the adversary's actions.
        const GainResult nominal_gain = chain_gain(policy_kernel(mdp, mdp.nominal(), policy), r_pi);
        BiasVector h = nominal_gain.bias;
        bool first = true;
        for (int iter = 0; iter < 10'000; ++iter) {
            bool changed = false;
            for (int s = 0; s < S; ++s) {
                const auto& cand = candidates[std::size_t(s)];
                std::size_t arg = choice[std::size_t(s)];
                double val = cand[arg].dot(h);
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    const double x = cand[i].dot(h);
                    if (x < val - 1e-13 * (1.0 + std::abs(val))) {
                        val = x;
                        arg = i;
                    }
                }
                if (first || arg != choice[std::size_t(s)]) changed = true;
                choice[std::size_t(s)] = arg;
            }
            first = false;
            load();
            const GainResult g = chain_gain(chain, r_pi);
            h = g.bias;
            best.gain = g.gain;
            best.bias = g.bias;
            if (!changed) break;
        }
        Kernel cert = mdp.nominal();
        for (int s = 0; s < S; ++s) cert.row(mdp.row(s, policy[std::size_t(s)])) = chain.row(s);
        best.certificate = std::move(cert);
    }
    best.error_bound = grid_step * span(best.bias);
    return best;
}

OptimalPolicy brute_force_optimal(const TabularMdp& mdp, const UncertaintyModel& model, double grid_step) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    if (S > 3 || A > 4) throw UsageError("brute_force_optimal needs S <= 3 and A <= 4");
    OptimalPolicy best;
    best.gain = -std::numeric_limits<double>::infinity();
    for_each_policy(S, A, [&](const Policy& pi) {
        const double g = brute_force_robust_gain(mdp, model, pi, grid_step).gain;
        if (g > best.gain) {
            best.gain = g;
            best.policy = pi;
        }
    });
    return best;
}

}  // namespace ramdp
