#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ramdp/evaluation.hpp"
#include "ramdp/garnet.hpp"
#include "ramdp/sampling.hpp"
#include "test_util.hpp"

#include <sstream>

using namespace ramdp;
using namespace ramdp::testing;

TEST_CASE("next-state frequencies match the nominal row") {
    std::mt19937_64 rng(1);
    const TabularMdp m = random_mdp(5, 2, rng, 3);
    GenerativeModel gm(m, 7);
    const long draws = 100000;
    for (int s = 0; s < 5; ++s) {
        for (int a = 0; a < 2; ++a) {
            std::vector<long> counts(5, 0);
            for (int x : gm.draw_next_states(s, a, draws)) ++counts[std::size_t(x)];
            const Vector p = m.nominal_row(s, a);
            for (int t = 0; t < 5; ++t) {
                const double f = double(counts[std::size_t(t)]) / double(draws);
                CHECK(std::abs(f - p(t)) <= 4.0 * std::sqrt(p(t) * (1.0 - p(t)) / double(draws)) + 1e-12);
            }
        }
    }
    CHECK(gm.sample_count() == 10u * std::uint64_t(draws));
}

TEST_CASE("aggregated means match the nominal expectation") {
    std::mt19937_64 rng(2);
    const TabularMdp m = random_mdp(6, 2, rng, 3);
    GenerativeModel gm(m, 3);
    const Vector v = random_vector(6, rng, 1.0);
    for (int s = 0; s < 6; ++s) {
        const Vector p = m.nominal_row(s, 1);
        const double mean = p.dot(v);
        const double sd = std::sqrt(p.dot(v.cwiseProduct(v)) - mean * mean);
        const long draws = 200000;
        const std::uint64_t before = gm.sample_count();
        CHECK(std::abs(gm.sample_mean(s, 1, draws, v) - mean) <= 4.0 * sd / std::sqrt(double(draws)) + 1e-12);
        CHECK(gm.sample_count() - before == std::uint64_t(draws));
    }
}

TEST_CASE("point-mass rows always return the same successor") {
    Kernel P(2, 2);
    P << 0, 1, 1, 0;
    const TabularMdp m(P, QTable::Zero(2, 1));
    GenerativeModel gm(m, 1);
    for (int x : gm.draw_next_states(0, 0, 1000)) CHECK(x == 1);
    CHECK(gm.sample_mean(1, 0, 12345, Vector{{2.5, -1.0}}) == 2.5);
    CHECK_THROWS_AS(gm.draw_next_states(0, 0, 0), UsageError);
    CHECK_THROWS_AS(gm.sample_mean(2, 0, 1, Vector{{0.0, 0.0}}), UsageError);
}

TEST_CASE("identical seeds give identical draws") {
    std::mt19937_64 rng(3);
    const TabularMdp m = random_mdp(4, 2, rng);
    GenerativeModel a(m, 99), b(m, 99), c(m, 100);
    CHECK(a.draw_next_states(2, 1, 500) == b.draw_next_states(2, 1, 500));
    CHECK(a.draw_next_states(2, 1, 500) != c.draw_next_states(2, 1, 500));
}

TEST_CASE("schedule constants") {
    CHECK(halpern_weight(0) == 0.0);
    CHECK(halpern_weight(2) == 0.5);
    CHECK(batch_weight(0) == doctest::Approx(10.0 * std::log(2.0) * std::log(2.0)));
    double acc = 0.0;
    for (long k = 0; k <= 1'000'000; ++k) acc += 1.0 / batch_weight(k);
    CHECK(2.0 * acc <= 1.0);
    RhiConfig cfg{10, 0.1, 0.05, 0};
    CHECK(cfg.alpha(3, 4) == doctest::Approx(std::log(2.0 * 3 * 4 * 11 / 0.05)));
    CHECK_THROWS_AS((RhiConfig{10, 0.0, 0.1, 0}.validate()), UsageError);
    CHECK_THROWS_AS((RhiConfig{10, 0.1, 1.0, 0}.validate()), UsageError);
    CHECK_THROWS_AS((RhiConfig{-1, 0.1, 0.1, 0}.validate()), UsageError);
}

TEST_CASE("zero increment when the bias does not move") {
    std::mt19937_64 rng(4);
    const TabularMdp m = random_mdp(4, 2, rng, 2);
    GenerativeModel gm(m, 5);
    const Vector h = random_vector(4, rng, 1.0);
    for (const auto& model : three_models(m)) {
        const QTable D = r_sample(gm, model, h, h, 10);
        CHECK(D.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("deterministic rows give the exact support difference") {
    const TabularMdp m = generate_garnet({5, 3, 1, 11});
    GenerativeModel gm(m, 5);
    std::mt19937_64 rng(5);
    const std::vector<UncertaintyModel> models{UncertaintyModel::contamination(m, 0.3),
                                               UncertaintyModel::lp_ball(m, kInfNorm, 0.3),
                                               UncertaintyModel::lp_ball(m, 2.0, 0.3)};
    for (const auto& model : models) {
        const Vector h1 = random_vector(5, rng, 1.0), h0 = random_vector(5, rng, 1.0);
        const QTable D = r_sample(gm, model, h1, h0, 3);
        CHECK((D - (support_table(model, h1) - support_table(model, h0))).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("increments are unbiased") {
    Kernel P(4, 4);
    P << 0.4, 0.3, 0.2, 0.1, 0.1, 0.1, 0.4, 0.4, 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1;
    const TabularMdp m(P, QTable::Zero(4, 1));
    const std::vector<UncertaintyModel> models{UncertaintyModel::lp_ball(m, 2.0, 0.05),
                                               UncertaintyModel::contamination(m, 0.2)};
    const Vector h1{{0.0, 0.8, -0.3, 0.5}}, h0{{0.0, 0.1, 0.2, -0.4}};
    for (const auto& model : models) {
        REQUIRE(model.all_exact());
        GenerativeModel gm(m, 17);
        const QTable target = support_table(model, h1) - support_table(model, h0);
        const int calls = 10000;
        QTable sum = QTable::Zero(4, 1), sq = QTable::Zero(4, 1);
        for (int i = 0; i < calls; ++i) {
            const QTable D = r_sample(gm, model, h1, h0, 3);
            sum += D;
            sq += D.cwiseProduct(D);
        }
        const QTable mean = sum / calls;
        for (int s = 0; s < 4; ++s) {
            const double var = sq(s, 0) / calls - mean(s, 0) * mean(s, 0);
            const double se = std::sqrt(var / calls);
            INFO(model_name(model) << " s=" << s);
            CHECK(std::abs(mean(s, 0) - target(s, 0)) <= 3.0 * se + 1e-12);
        }
        CHECK(gm.sample_count() == std::uint64_t(calls) * 4u * 3u);
    }
}

TEST_CASE("increment span is bounded by the bias change span") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const TabularMdp m = random_mdp(5, 3, rng, 2);
        GenerativeModel gm(m, std::uint64_t(trial));
        for (const auto& model : three_models(m)) {
            const Vector h1 = random_vector(5, rng, 1.0), h0 = random_vector(5, rng, 1.0);
            const QTable D = r_sample(gm, model, h1, h0, 1 + int(rng() % 5));
            // Each entry lies in [min d, max d] up to the kappa shift.
            const Vector d = h1 - h0;
            if (model.kind() == SetKind::Contamination) CHECK(span(D) <= span(d) + 1e-12);
            CHECK(D.allFinite());
        }
    }
}

TEST_CASE("sampled iterates telescope to the robust operator") {
    const TabularMdp m = generate_garnet({5, 3, 1, 21});
    for (const auto& model : three_models(m, 0.2)) {
        GenerativeModel gm(m, 3);
        RhiSampler sampler(gm, model, {40, 0.1, 0.1, 0});
        const BellmanContext ctx(m, model);
        while (!sampler.done()) {
            const RhiState& st = sampler.step();
            // T^k = T(Q^k) up to a constant: the bias is anchored.
            CHECK(span(st.t - robust_T(ctx, st.q)) < 1e-10);
            if (st.k >= 1 && st.k % 10 == 0) {
                const ExactSolveReport ex = rhi_exact(ctx, QTable::Zero(5, 3), st.k, 0.0);
                CHECK((anchor(st.q) - ex.q).cwiseAbs().maxCoeff() < 1e-10);
            }
        }
    }
}

TEST_CASE("telescoping in span with stochastic rows") {
    std::mt19937_64 rng(7);
    const TabularMdp m = random_mdp(4, 2, rng, 2);
    const auto model = UncertaintyModel::contamination(m, 0.1);
    GenerativeModel gm(m, 4);
    RhiSampler sampler(gm, model, {30, 0.05, 0.1, 0});
    QTable acc = m.reward();
    while (!sampler.done()) {
        const RhiState& st = sampler.step();
        acc += st.increment;
        CHECK((acc - st.t).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("first batch is a single draw per pair") {
    std::mt19937_64 rng(8);
    const TabularMdp m = random_mdp(3, 2, rng);
    const auto model = UncertaintyModel::contamination(m, 0.1);
    GenerativeModel gm(m, 1);
    RhiSampler sampler(gm, model, {5, 0.1, 0.1, 0});
    const RhiState& st = sampler.step();
    CHECK(st.k == 0);
    CHECK(st.batch == 1);
    CHECK(st.cum_samples == 6u);
    CHECK(st.increment.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batch sizes follow the schedule and the counter") {
    const TabularMdp m = generate_garnet({5, 3, 3, 31});
    const auto model = UncertaintyModel::lp_ball(m, 2.0, 0.05);
    GenerativeModel gm(m, 2);
    const RhiConfig cfg{25, 0.2, 0.1, 0};
    RhiSampler sampler(gm, model, cfg);
    const double alpha = cfg.alpha(5, 3);
    std::uint64_t total = 0;
    while (!sampler.done()) {
        const RhiState& st = sampler.step();
        const double sp = span(st.h - st.h_prev);
        const long expect = std::max(long(std::ceil(alpha * batch_weight(st.k) * sp * sp / (0.2 * 0.2))), 1L);
        CHECK(st.batch == expect);
        total += 15u * std::uint64_t(st.batch);
        CHECK(st.cum_samples == total);
    }
    CHECK(gm.sample_count() == total);
    CHECK_THROWS_AS(sampler.step(), UsageError);
}

TEST_CASE("single-state instance picks the best action") {
    Kernel P = Kernel::Ones(3, 1);
    QTable r(1, 3);
    r << 0.2, 0.9, 0.4;
    const TabularMdp m(P, r);
    for (const auto& model : {UncertaintyModel::contamination(m, 0.3), UncertaintyModel::lp_ball(m, 2.0, 0.3)}) {
        GenerativeModel gm(m, 1);
        const RhiResult res = rhi_sampled(gm, model, {3, 0.1, 0.1, 0});
        CHECK(res.policy == Policy{1});
        CHECK(res.total_samples == 12u);
    }
}

TEST_CASE("runs are reproducible and traces are consistent") {
    const TabularMdp m = generate_garnet({6, 3, 3, 41});
    const auto model = UncertaintyModel::contamination(m, 0.1);
    auto run = [&](std::uint64_t seed) {
        GenerativeModel gm(m, seed);
        TraceOptions opts;
        opts.evaluate = [&](const Policy& pi) { return robust_policy_gain(m, model, pi).gain; };
        opts.every = 7;
        const RhiResult res = rhi_sampled(gm, model, {50, 0.1, 0.1, seed}, opts);
        std::ostringstream os;
        res.trace.write_csv(os);
        return std::make_pair(os.str(), res);
    };
    const auto [csv1, r1] = run(5);
    const auto [csv2, r2] = run(5);
    const auto [csv3, r3] = run(6);
    CHECK(csv1 == csv2);
    CHECK(csv1 != csv3);
    CHECK(r1.trace.back().k == 50);
    CHECK(r1.trace.rows()[1].k == 7);
    const SampleBudget b = sample_budget_report(r1.trace);
    CHECK(b.total_samples == r1.total_samples);
    CHECK(b.iterations == 51);
    for (std::size_t i = 1; i < r1.trace.size(); ++i)
        CHECK(r1.trace.rows()[i].cum_samples >= r1.trace.rows()[i - 1].cum_samples);
}

TEST_CASE("sampled run reaches a near-optimal policy") {
    const TabularMdp m = generate_garnet({5, 3, 3, 51});
    for (const auto& model : three_models(m)) {
        const BellmanContext ctx(m, model);
        const double g_star = rrvi_baseline(ctx, 1e-12, 1'000'000).gain;
        GenerativeModel gm(m, 8);
        const RhiResult res = rhi_sampled(gm, model, {60, 0.1, 0.1, 8});
        CHECK(g_star - robust_policy_gain(m, model, res.policy).gain <= 0.1);
    }
}

TEST_CASE("numeric fault on runaway batch sizes") {
    std::mt19937_64 rng(9);
    const TabularMdp m = random_mdp(3, 2, rng);
    const auto model = UncertaintyModel::contamination(m, 0.1);
    GenerativeModel gm(m, 1);
    QTable q0 = QTable::Zero(3, 2);
    q0(1, 0) = 1e300;
    RhiSampler sampler(gm, model, {5, 1e-10, 0.1, 0}, q0);
    CHECK_THROWS_AS(sampler.step(), NumericFault);
}

TEST_CASE("log-log slope") {
    const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(loglog_slope(one, one), UsageError);
}
