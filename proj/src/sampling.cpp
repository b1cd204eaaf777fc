#include "ramdp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ramdp {

GenerativeModel::GenerativeModel(const TabularMdp& mdp, std::uint64_t seed) : mdp_(&mdp), rng_(seed) {
    const Kernel& P = mdp.nominal();
    rows_.reserve(std::size_t(P.rows()));
    sparse_.resize(std::size_t(P.rows()));
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        rows_.emplace_back(P.row(i).data(), P.row(i).data() + P.cols());
        for (Eigen::Index t = 0; t < P.cols(); ++t) {
            if (P(i, t) > 0.0) {
                sparse_[std::size_t(i)].states.push_back(int(t));
                sparse_[std::size_t(i)].probs.push_back(P(i, t));
            }
        }
    }
}

void GenerativeModel::check(int s, int a, long m) const {
    if (s < 0 || s >= mdp_->num_states() || a < 0 || a >= mdp_->num_actions())
        throw UsageError("state-action pair out of range");
    if (m < 1) throw UsageError("need at least one draw");
}

std::vector<int> GenerativeModel::draw_next_states(int s, int a, long m) {
    check(s, a, m);
    auto& dist = rows_[std::size_t(mdp_->row(s, a))];
    std::vector<int> out(static_cast<std::size_t>(m));
    for (auto& x : out) x = dist(rng_);
    count_ += std::uint64_t(m);
    return out;
}

double GenerativeModel::sample_mean(int s, int a, long m, const Eigen::Ref<const Vector>& values) {
    check(s, a, m);
    const Sparse& row = sparse_[std::size_t(mdp_->row(s, a))];
    double acc = 0.0;
    long left = m;
    double mass = 1.0;
    const std::size_t last = row.states.size() - 1;
    for (std::size_t j = 0; j < last && left > 0; ++j) {
        const double p = std::clamp(row.probs[j] / mass, 0.0, 1.0);
        const long c = std::binomial_distribution<long>(left, p)(rng_);
        acc += double(c) * values(row.states[j]);
        left -= c;
        mass -= row.probs[j];
    }
    acc += double(left) * values(row.states[last]);
    count_ += std::uint64_t(m);
    return acc / double(m);
}

void RhiConfig::validate() const {
    if (n < 0) throw UsageError("n must be nonnegative");
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0,1)");
}

double RhiConfig::alpha(int num_states, int num_actions) const {
    return std::log(2.0 * num_states * num_actions * double(n + 1) / delta);
}

double batch_weight(long k) {
    const double x = double(k + 2);
    const double l = std::log(x);
    return 5.0 * x * l * l;
}

double halpern_weight(long k) { return double(k) / double(k + 2); }

QTable r_sample(GenerativeModel& gm, const UncertaintyModel& model, const Eigen::Ref<const Vector>& h_k,
                const Eigen::Ref<const Vector>& h_prev, long m) {
    const int S = model.num_states();
    const int A = model.num_actions();
    const Vector d = h_k - h_prev;
    QTable D(S, A);
    const bool contamination = model.kind() == SetKind::Contamination;
    const double min_shift = contamination ? h_k.minCoeff() - h_prev.minCoeff() : 0.0;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double mean = gm.sample_mean(s, a, m, d);
            const double R = model.radius(s, a);
            if (contamination) {
                D(s, a) = (1.0 - R) * mean + R * min_shift;
            } else {
                const auto idx = model.effective_support(s, a);
                const double K = R == 0.0 ? 0.0
                                          : kappa(h_k, model.q(), idx) - kappa(h_prev, model.q(), idx);
                D(s, a) = mean - R * K;
            }
        }
    }
    return D;
}

RhiSampler::RhiSampler(GenerativeModel& gm, const UncertaintyModel& model, const RhiConfig& cfg)
    : RhiSampler(gm, model, cfg, QTable::Zero(model.num_states(), model.num_actions())) {}

RhiSampler::RhiSampler(GenerativeModel& gm, const UncertaintyModel& model, const RhiConfig& cfg, QTable q0)
    : gm_(gm), model_(model), cfg_(cfg), q0_(std::move(q0)) {
    cfg_.validate();
    const TabularMdp& mdp = gm.mdp();
    if (model.num_states() != mdp.num_states() || model.num_actions() != mdp.num_actions())
        throw UsageError("uncertainty model does not match the MDP dimensions");
    if (q0_.rows() != mdp.num_states() || q0_.cols() != mdp.num_actions())
        throw UsageError("Q0 must be S x A");
    alpha_ = cfg_.alpha(mdp.num_states(), mdp.num_actions());
    state_.t = mdp.reward();
    state_.h = BiasVector::Zero(mdp.num_states());
    state_.cum_samples = gm.sample_count();
}

const RhiState& RhiSampler::step() {
    if (done()) throw UsageError("RHI already ran all n+1 iterations");
    const long k = state_.k + 1;
    const double beta = halpern_weight(k);
    state_.h_prev = state_.h;
    state_.q = (1.0 - beta) * q0_ + beta * state_.t;
    state_.h = anchor(max_over_actions(state_.q));

    const double sp = span(state_.h - state_.h_prev);
    const double raw = std::ceil(alpha_ * batch_weight(k) * sp * sp / (cfg_.epsilon * cfg_.epsilon));
    if (!std::isfinite(raw) || raw > 1e15)
        throw NumericFault("batch size overflow at iteration " + std::to_string(k), k);
    state_.batch = std::max(long(raw), 1L);

    state_.increment = r_sample(gm_, model_, state_.h, state_.h_prev, state_.batch);
    state_.t += state_.increment;
    if (!state_.t.allFinite() || !state_.q.allFinite())
        throw NumericFault("non-finite iterate at iteration " + std::to_string(k), k);
    state_.k = k;
    state_.cum_samples = gm_.sample_count();
    return state_;
}

RhiResult rhi_sampled(GenerativeModel& gm, const UncertaintyModel& model, const RhiConfig& cfg,
                      const TraceOptions& trace) {
    RhiSampler sampler(gm, model, cfg);
    const BellmanContext ctx(gm.mdp(), model, 1.0);
    const std::uint64_t start = gm.sample_count();
    RhiResult result;
    while (!sampler.done()) {
        const RhiState& st = sampler.step();
        const bool last = sampler.done();
        if (last || trace.every <= 1 || st.k % trace.every == 0) {
            TraceRow row;
            row.k = st.k;
            row.residual_span = residual_span_gap(ctx, st.q);
            if (trace.evaluate) row.greedy_gain = trace.evaluate(greedy(st.q));
            row.cum_samples = st.cum_samples - start;
            result.trace.append(row);
        }
    }
    result.q = sampler.state().q;
    result.policy = greedy(result.q);
    result.total_samples = gm.sample_count() - start;
    return result;
}

SampleBudget sample_budget_report(const ConvergenceTrace& trace) {
    SampleBudget out;
    if (trace.empty()) return out;
    out.total_samples = trace.back().cum_samples;
    out.iterations = trace.back().k + 1;
    return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("slope needs at least two paired points");
    double mx = 0.0, my = 0.0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace ramdp
