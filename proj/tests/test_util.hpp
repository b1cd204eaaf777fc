#pragma once

#include "ramdp/mdp.hpp"
#include "ramdp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace ramdp::testing {

inline Kernel one_row_kernel(std::initializer_list<double> row) {
    Kernel k(1, Eigen::Index(row.size()));
    Eigen::Index i = 0;
    for (double x : row) k(0, i++) = x;
    return k;
}

/// Dirichlet(1) row over `width` random successors.
inline Vector random_row(int S, int width, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i) idx[std::size_t(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::exponential_distribution<double> ex(1.0);
    Vector row = Vector::Zero(S);
    for (int i = 0; i < width; ++i) row(idx[std::size_t(i)]) = ex(rng) + 1e-3;
    return row / row.sum();
}

/// Random instance; each row has between min_width and S successors.
inline TabularMdp random_mdp(int S, int A, std::mt19937_64& rng, int min_width = -1) {
    if (min_width < 1) min_width = S;
    std::uniform_int_distribution<int> w(min_width, S);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Kernel P(Eigen::Index(S) * A, S);
    QTable r(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            P.row(Eigen::Index(s) * A + a) = random_row(S, w(rng), rng).transpose();
            r(s, a) = u(rng);
        }
    return TabularMdp(std::move(P), std::move(r));
}

/// Random instance whose nominal chains are unichain under every policy.
inline TabularMdp random_unichain_mdp(int S, int A, std::mt19937_64& rng, int min_width = -1) {
    for (;;) {
        TabularMdp m = random_mdp(S, A, rng, min_width);
        if (all_policies_unichain(m)) return m;
    }
}

/// R(s,a) = min(cap, min positive P0(.|s,a) / 2), so Lp rows stay exact.
inline QTable valid_radius(const TabularMdp& mdp, double cap) {
    QTable R(mdp.num_states(), mdp.num_actions());
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a) {
            double lo = 1.0;
            for (int t = 0; t < mdp.num_states(); ++t) {
                const double p = mdp.nominal()(mdp.row(s, a), t);
                if (p > 0.0) lo = std::min(lo, p);
            }
            R(s, a) = std::min(cap, 0.5 * lo);
        }
    return R;
}

/// Contamination, linf and l2 sets with radius cap `cap`.
inline std::vector<UncertaintyModel> three_models(const TabularMdp& mdp, double cap = 0.1) {
    const QTable R = valid_radius(mdp, cap);
    return {UncertaintyModel::contamination(mdp, cap), UncertaintyModel::lp_ball(mdp, kInfNorm, R),
            UncertaintyModel::lp_ball(mdp, 2.0, R)};
}

inline const char* model_name(const UncertaintyModel& m) {
    if (m.kind() == SetKind::Contamination) return "contamination";
    return std::isinf(m.p()) ? "linf" : "l2";
}

/// Cesaro average of r_pi along a simulated trajectory of `chain`.
inline double simulate_average_reward(const Matrix& chain, const Vector& r_pi, long steps, std::uint64_t seed,
                                      int start = 0) {
    std::mt19937_64 rng(seed);
    std::vector<std::discrete_distribution<int>> rows;
    for (Eigen::Index i = 0; i < chain.rows(); ++i) {
        std::vector<double> w;
        for (Eigen::Index j = 0; j < chain.cols(); ++j) w.push_back(chain(i, j));
        rows.emplace_back(w.begin(), w.end());
    }
    int s = start;
    double acc = 0.0;
    for (long t = 0; t < steps; ++t) {
        acc += r_pi(s);
        s = rows[std::size_t(s)](rng);
    }
    return acc / double(steps);
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

}  // namespace ramdp::testing
