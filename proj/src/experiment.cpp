#include "ramdp/experiment.hpp"

#include "ramdp/evaluation.hpp"
#include "ramdp/solvers.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace ramdp {

void ExperimentConfig::validate() const {
    if (repeats < 1) throw UsageError("repeats must be >= 1");
    if (eval_every < 1) throw UsageError("eval-every must be >= 1");
    if (models.empty()) throw UsageError("experiment needs at least one uncertainty model");
    rhi.validate();
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.garnet = GarnetSpec{20, 15, 5, 2024};
    ModelSpec contamination;
    contamination.kind = SetKind::Contamination;
    ModelSpec linf;
    linf.kind = SetKind::LpBall;
    linf.p = kInfNorm;
    ModelSpec l2;
    l2.kind = SetKind::LpBall;
    l2.p = 2.0;
    cfg.models = {contamination, linf, l2};
    cfg.rhi = RhiConfig{300, 0.1, 0.1, 1};
    return cfg;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    if (!j.is_object()) throw FormatError("experiment config must be a JSON object");
    try {
        if (j.contains("garnet")) cfg.garnet = garnet_spec_from_json(j.at("garnet"));
        if (j.contains("models")) {
            cfg.models.clear();
            for (const auto& m : j.at("models")) cfg.models.push_back(model_spec_from_json(m));
        }
        if (j.contains("rhi")) cfg.rhi = rhi_config_from_json(j.at("rhi"));
        if (j.contains("repeats")) cfg.repeats = j.at("repeats").get<int>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("eval_every")) cfg.eval_every = j.at("eval_every").get<long>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad experiment config: ") + e.what() +
                          R"(; expected { "garnet": {...}, "models": [...], "rhi": {...}, "repeats": int, "output_dir": str, "eval_every": int })");
    }
    cfg.validate();
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    json models = json::array();
    for (const auto& m : cfg.models) models.push_back(model_spec_to_json(m));
    return json{{"garnet", garnet_spec_to_json(cfg.garnet)},
                {"models", std::move(models)},
                {"rhi", rhi_config_to_json(cfg.rhi)},
                {"repeats", cfg.repeats},
                {"output_dir", cfg.output_dir.string()},
                {"eval_every", cfg.eval_every}};
}

std::uint64_t repeat_seed(std::uint64_t base, std::size_t model_index, int repeat) {
    return mix_seed(mix_seed(base, model_index), std::uint64_t(repeat));
}

std::vector<AggregateRow> aggregate_traces(const std::vector<ConvergenceTrace>& traces, double baseline) {
    std::vector<AggregateRow> out;
    if (traces.empty()) return out;
    const std::size_t rows = traces.front().size();
    for (const auto& t : traces)
        if (t.size() != rows) throw UsageError("traces must have equal length to aggregate");
    out.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        AggregateRow row;
        row.k = traces.front().rows()[i].k;
        row.baseline_gain = baseline;
        double sum = 0.0;
        for (const auto& t : traces) {
            if (t.rows()[i].k != row.k) throw UsageError("traces disagree on iteration indices");
            sum += t.rows()[i].greedy_gain;
        }
        row.mean_gain = sum / double(traces.size());
        double ss = 0.0;
        for (const auto& t : traces) {
            const double d = t.rows()[i].greedy_gain - row.mean_gain;
            ss += d * d;
        }
        row.std_gain = std::sqrt(ss / double(traces.size()));
        out.push_back(row);
    }
    return out;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os) {
    os << "k,mean_gain,std_gain,baseline_gain\n";
    os << std::setprecision(17);
    for (const auto& r : rows) os << r.k << ',' << r.mean_gain << ',' << r.std_gain << ',' << r.baseline_gain << '\n';
}

namespace {

struct RepeatOutcome {
    ConvergenceTrace trace;
    std::uint64_t samples = 0;
};

RepeatOutcome run_repeat(const TabularMdp& mdp, const UncertaintyModel& model, RhiConfig rhi, long eval_every) {
    std::map<Policy, double> cache;
    TraceOptions opts;
    opts.every = eval_every;
    opts.evaluate = [&](const Policy& pi) {
        auto it = cache.find(pi);
        if (it != cache.end()) return it->second;
        const double g = robust_policy_gain(mdp, model, pi).gain;
        cache.emplace(pi, g);
        return g;
    };
    GenerativeModel gm(mdp, rhi.seed);
    RhiResult res = rhi_sampled(gm, model, rhi, opts);
    return RepeatOutcome{std::move(res.trace), res.total_samples};
}

std::string csv_text(const ConvergenceTrace& trace) {
    std::ostringstream os;
    trace.write_csv(os);
    return os.str();
}

}  // namespace

std::vector<ModelRunSummary> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const TabularMdp mdp = generate_garnet(cfg.garnet);
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());

    std::filesystem::create_directories(cfg.output_dir);
    write_text_file(cfg.output_dir / "config.json", experiment_config_to_json(cfg).dump(2) + "\n");

    std::vector<ModelRunSummary> summaries;
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
        const UncertaintyModel model = cfg.models[m].build(mdp);
        ModelRunSummary summary;
        summary.label = cfg.models[m].label();
        summary.inexact_rows = model.count_inexact();
        const BellmanContext ctx(mdp, model, 1.0);
        summary.baseline_gain = rrvi_baseline(ctx, 1e-11, 10'000'000).gain;

        std::vector<RepeatOutcome> outcomes(std::size_t(cfg.repeats));
        for (int start = 0; start < cfg.repeats; start += int(threads)) {
            const int stop = std::min(cfg.repeats, start + int(threads));
            std::vector<std::future<RepeatOutcome>> jobs;
            for (int r = start; r < stop; ++r) {
                RhiConfig rhi = cfg.rhi;
                rhi.seed = repeat_seed(cfg.rhi.seed, m, r);
                jobs.push_back(std::async(std::launch::async, run_repeat, std::cref(mdp), std::cref(model), rhi,
                                          cfg.eval_every));
            }
            for (int r = start; r < stop; ++r) outcomes[std::size_t(r)] = jobs[std::size_t(r - start)].get();
        }

        const std::filesystem::path dir = cfg.output_dir / summary.label;
        for (int r = 0; r < cfg.repeats; ++r) {
            auto& o = outcomes[std::size_t(r)];
            write_text_file(dir / ("trace_" + std::to_string(r) + ".csv"), csv_text(o.trace));
            summary.total_samples.push_back(o.samples);
            summary.traces.push_back(std::move(o.trace));
        }
        summary.aggregate = aggregate_traces(summary.traces, summary.baseline_gain);
        std::ostringstream os;
        write_aggregate_csv(summary.aggregate, os);
        summary.aggregate_csv = dir / "aggregate.csv";
        write_text_file(summary.aggregate_csv, os.str());
        summaries.push_back(std::move(summary));
    }
    return summaries;
}

SweepReport sweep_epsilon(const TabularMdp& mdp, const UncertaintyModel& model, const std::vector<double>& epsilons,
                          double delta, std::uint64_t seed) {
    if (epsilons.size() < 2) throw UsageError("sweep needs at least two epsilon values");
    const BellmanContext ctx(mdp, model, 1.0);
    const ExactSolveReport base = rrvi_baseline(ctx, 1e-11, 10'000'000);
    SweepReport report;
    report.h_estimate = measure_bias_span(ctx, base.policy, 64, seed);
    std::vector<double> inv_eps, totals, scaled;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        const double eps = epsilons[i];
        RhiConfig rhi;
        rhi.epsilon = eps;
        rhi.delta = delta;
        rhi.n = std::max(1L, long(std::ceil(report.h_estimate / eps)));
        rhi.seed = mix_seed(seed, i + 1);
        GenerativeModel gm(mdp, rhi.seed);
        const RhiResult res = rhi_sampled(gm, model, rhi);
        report.points.push_back(SweepPoint{eps, rhi.n, res.total_samples});
        inv_eps.push_back(1.0 / eps);
        totals.push_back(double(res.total_samples));
        double weight = 0.0;
        for (long k = 0; k <= rhi.n; ++k) weight += batch_weight(k) / double((k + 1) * (k + 1));
        scaled.push_back(totals.back() / (rhi.alpha(mdp.num_states(), mdp.num_actions()) * weight));
    }
    report.slope = loglog_slope(inv_eps, totals);
    report.polylog_slope = loglog_slope(inv_eps, scaled);
    return report;
}

}  // namespace ramdp
