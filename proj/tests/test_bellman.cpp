#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ramdp/bellman.hpp"
#include "ramdp/evaluation.hpp"
#include "ramdp/solvers.hpp"
#include "test_util.hpp"

using namespace ramdp;
using namespace ramdp::testing;

namespace {

TabularMdp single_state(std::initializer_list<double> rewards) {
    const int A = int(rewards.size());
    Kernel P = Kernel::Ones(A, 1);
    QTable r(1, A);
    int a = 0;
    for (double x : rewards) r(0, a++) = x;
    return TabularMdp(P, r);
}

QTable random_q(int S, int A, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    QTable q(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) q(s, a) = g(rng);
    return q;
}

}  // namespace

TEST_CASE("max over actions and greedy") {
    QTable q(2, 3);
    q << 1, 3, 2, 0, 5, 5;
    const Vector h = max_over_actions(q);
    CHECK(h(0) == 3.0);
    CHECK(h(1) == 5.0);
    CHECK(greedy(q) == Policy{1, 1});
    const QTable shifted = (q.array() + 7.5).matrix();
    CHECK(greedy(shifted) == greedy(q));
    CHECK((max_over_actions(shifted) - h).cwiseAbs().maxCoeff() == doctest::Approx(7.5));
    QTable col(3, 1);
    col << 4, -1, 2;
    CHECK(max_over_actions(col) == Vector(col.col(0)));
}

TEST_CASE("context validation") {
    const TabularMdp m = single_state({0.5});
    const auto model = UncertaintyModel::contamination(m, 0.1);
    CHECK_THROWS_AS(BellmanContext(m, model, 1.5), UsageError);
    CHECK_THROWS_AS(BellmanContext(m, model, -0.1), UsageError);
    std::mt19937_64 rng(1);
    const TabularMdp other = random_mdp(2, 1, rng);
    CHECK_THROWS_AS(BellmanContext(other, model, 1.0), UsageError);
}

TEST_CASE("R = 0 gives the nominal operator") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const TabularMdp m = random_mdp(4, 3, rng);
        for (const auto& model : {UncertaintyModel::contamination(m, 0.0), UncertaintyModel::lp_ball(m, 2.0, 0.0)}) {
            const BellmanContext ctx(m, model);
            const QTable q = random_q(4, 3, rng);
            const Vector h = q.rowwise().maxCoeff();
            QTable expected(4, 3);
            for (int s = 0; s < 4; ++s)
                for (int a = 0; a < 3; ++a) expected(s, a) = m.reward()(s, a) + m.nominal().row(m.row(s, a)).dot(h);
            CHECK((robust_T(ctx, q) - expected).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
}

TEST_CASE("single-state operator") {
    const TabularMdp m = single_state({0.2, 0.9, 0.4});
    const auto model = UncertaintyModel::contamination(m, 0.3);
    const BellmanContext ctx(m, model);
    QTable q(1, 3);
    q << 1.0, -2.0, 0.5;
    const QTable t = robust_T(ctx, q);
    CHECK(t(0, 0) == doctest::Approx(1.2));
    CHECK(t(0, 1) == doctest::Approx(1.9));
    CHECK(t(0, 2) == doctest::Approx(1.4));
}

TEST_CASE("fixed point of the average-reward equation") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const TabularMdp m = random_unichain_mdp(4, 2, rng, 2);
        for (const auto& model : three_models(m)) {
            const BellmanContext ctx(m, model);
            const ExactSolveReport rep = rrvi_baseline(ctx, 1e-12, 1'000'000);
            const QTable t = robust_T(ctx, rep.q);
            const QTable expect = (rep.q.array() + rep.gain).matrix();
            CHECK((t - expect).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(residual_span_gap(ctx, rep.q) < 1e-8);
        }
    }
}

TEST_CASE("robust_T commutes with shifts and is span-nonexpansive") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> c(-20.0, 20.0);
    for (int trial = 0; trial < 30; ++trial) {
        const TabularMdp m = random_mdp(5, 3, rng, 2);
        for (const auto& model : three_models(m)) {
            const BellmanContext ctx(m, model);
            const QTable q1 = random_q(5, 3, rng, 2.0);
            const QTable q2 = random_q(5, 3, rng, 2.0);
            const double shift = c(rng);
            const QTable t1 = robust_T(ctx, q1);
            const QTable ts = robust_T(ctx, (q1.array() + shift).matrix());
            CHECK(((ts - t1).array() - shift).abs().maxCoeff() < 1e-10);
            CHECK(span(t1 - robust_T(ctx, q2)) <= span(q1 - q2) + 1e-12);
        }
    }
}

TEST_CASE("residual span gap basics") {
    std::mt19937_64 rng(5);
    const TabularMdp m = random_mdp(3, 2, rng);
    const auto model = UncertaintyModel::contamination(m, 0.1);
    const BellmanContext ctx(m, model);
    const double r0 = residual_span_gap(ctx, QTable::Zero(3, 2));
    CHECK(r0 >= 0.0);
    CHECK(r0 <= 1.0);
    CHECK(r0 == doctest::Approx(span(m.reward())));
}

TEST_CASE("greedy gap is bounded by the residual span") {
    std::mt19937_64 rng(6);
    int checked = 0;
    for (int trial = 0; trial < 8; ++trial) {
        const TabularMdp m = random_unichain_mdp(3, 2, rng, 2);
        for (const auto& model : three_models(m)) {
            const BellmanContext ctx(m, model);
            const double g_star = rrvi_baseline(ctx, 1e-12, 1'000'000).gain;
            for (int rep = 0; rep < 5; ++rep) {
                const QTable q = random_q(3, 2, rng, 0.5);
                const double gap = g_star - robust_policy_gain(m, model, greedy(q)).gain;
                CHECK(gap >= -1e-9);
                CHECK(gap <= residual_span_gap(ctx, q) + 1e-9);
                ++checked;
            }
        }
    }
    CHECK(checked == 120);
}

TEST_CASE("discounted operator") {
    std::mt19937_64 rng(7);
    const TabularMdp m = random_mdp(4, 3, rng);
    const auto model = UncertaintyModel::lp_ball(m, 2.0, valid_radius(m, 0.1));
    const BellmanContext ctx(m, model, 0.9);
    const Vector t0 = robust_T_discounted(ctx, Vector::Zero(4));
    CHECK((t0 - max_over_actions(m.reward())).cwiseAbs().maxCoeff() < 1e-15);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector v = random_vector(4, rng, 3.0);
        const Vector w = random_vector(4, rng, 3.0);
        const double lhs = (robust_T_discounted(ctx, v) - robust_T_discounted(ctx, w)).cwiseAbs().maxCoeff();
        CHECK(lhs <= 0.9 * (v - w).cwiseAbs().maxCoeff() + 1e-12);
    }
    CHECK_THROWS_AS(robust_T_discounted(BellmanContext(m, model, 1.0), Vector::Zero(4)), UsageError);
}

TEST_CASE("discounted fixed point of a single state") {
    const TabularMdp m = single_state({0.7});
    const auto model = UncertaintyModel::contamination(m, 0.0);
    const BellmanContext ctx(m, model, 0.9);
    Vector v = Vector::Zero(1);
    // Contraction bound: 2/(1-gamma) ln(1/tol) steps reach residual <= tol.
    const double tol = 1e-10;
    const long steps = long(std::ceil(2.0 / 0.1 * std::log(1.0 / tol)));
    for (long i = 0; i < steps; ++i) v = robust_T_discounted(ctx, v);
    CHECK(v(0) == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(std::abs(robust_T_discounted(ctx, v)(0) - v(0)) <= tol);
}
