#pragma once

#include "ramdp/garnet.hpp"
#include "ramdp/io.hpp"
#include "ramdp/sampling.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ramdp {

struct ExperimentConfig {
    GarnetSpec garnet;
    std::vector<ModelSpec> models;
    RhiConfig rhi;
    int repeats = 10;
    std::filesystem::path output_dir = "results";
    /// Evaluate the greedy policy every this many iterations (the last one always).
    long eval_every = 1;
    /// Worker threads for the repeats; 0 picks hardware_concurrency.
    unsigned threads = 0;

    void validate() const;
    /// G(20,15), b = 5, R = 0.1 for contamination, linf and l2, n = 300, 10 repeats.
    static ExperimentConfig defaults();
};

ExperimentConfig experiment_config_from_json(const json& j);
json experiment_config_to_json(const ExperimentConfig& cfg);

struct AggregateRow {
    long k = 0;
    double mean_gain = 0.0;
    double std_gain = 0.0;
    double baseline_gain = 0.0;
};

struct ModelRunSummary {
    std::string label;
    double baseline_gain = 0.0;
    std::vector<AggregateRow> aggregate;
    std::vector<ConvergenceTrace> traces;
    std::vector<std::uint64_t> total_samples;
    std::size_t inexact_rows = 0;
    std::filesystem::path aggregate_csv;
};

/// Seed of repeat `r` for the model at position `m` of the config.
std::uint64_t repeat_seed(std::uint64_t base, std::size_t model_index, int repeat);

/// Header `k,mean_gain,std_gain,baseline_gain`; population standard deviation.
std::vector<AggregateRow> aggregate_traces(const std::vector<ConvergenceTrace>& traces, double baseline);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os);

/// Baseline via rrvi_baseline, then `repeats` sampled RHI runs per model with
/// the greedy robust gain recorded along the way. Writes
/// <out>/<label>/trace_<r>.csv, <out>/<label>/aggregate.csv and <out>/config.json.
std::vector<ModelRunSummary> run_experiment(const ExperimentConfig& cfg);

struct SweepPoint {
    double epsilon = 0.0;
    long n = 0;
    std::uint64_t total_samples = 0;
};

struct SweepReport {
    double h_estimate = 0.0;
    std::vector<SweepPoint> points;
    /// Least-squares slope of log(total samples) against log(1/epsilon).
    double slope = 0.0;
    /// Same slope after dividing each total by alpha(n) * sum_{k<=n} c_k / (k+1)^2,
    /// the budget shape when Sp(h^k - h^{k-1}) decays like 1/(k+1).
    double polylog_slope = 0.0;
};

/// Sample budget of sampled RHI at each epsilon with n = ceil(h / epsilon),
/// where h is the measure_bias_span estimate for the baseline policy.
SweepReport sweep_epsilon(const TabularMdp& mdp, const UncertaintyModel& model, const std::vector<double>& epsilons,
                          double delta, std::uint64_t seed);

}  // namespace ramdp
