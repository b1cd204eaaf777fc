#include "ramdp/evaluation.hpp"
#include "ramdp/experiment.hpp"
#include "ramdp/garnet.hpp"
#include "ramdp/io.hpp"
#include "ramdp/sampling.hpp"
#include "ramdp/solvers.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace ramdp;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

void warn_inexact(const UncertaintyModel& model) {
    const std::size_t bad = model.count_inexact();
    if (bad > 0)
        std::cerr << "warning: " << bad << " of " << model.num_states() * model.num_actions()
                  << " rows violate R <= min positive P0; support values there are lower bounds\n";
}

void emit(const json& j, const std::string& out) {
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_text_file(out, j.dump(2) + "\n");
}

Policy parse_policy_arg(const std::string& arg) {
    if (std::filesystem::exists(arg)) return policy_from_json(read_json_file(arg));
    Policy pi;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            pi.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw FormatError("policy must be a JSON file or a comma list such as 0,2,1");
        }
    }
    return pi;
}

struct Common {
    std::string instance;
    std::string model = "contamination:0.1";
    std::string out;
    double tol = 1e-9;
};

void add_instance(CLI::App* cmd, Common& c) {
    cmd->add_option("--instance", c.instance, "MDP instance JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--model", c.model, "uncertainty model JSON or <kind>:<R> (contamination, linf, tv, l2)")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust average-reward MDP toolkit"};
    app.require_subcommand(1);

    Common c;
    std::string method = "rrvi";
    long n = 0;
    double epsilon = 0.1;
    double delta = 0.1;
    std::uint64_t seed = 0;
    std::string config;
    std::string policy_arg;
    std::string trace_out;
    double h_bound = 0.0;
    int repeats = 10;
    long eval_every = 1;
    bool evaluate = false;
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
    int gS = 20, gA = 15, gb = 5;

    auto* garnet = app.add_subcommand("garnet", "emit a random Garnet instance");
    garnet->add_option("--S", gS, "states")->capture_default_str();
    garnet->add_option("--A", gA, "actions")->capture_default_str();
    garnet->add_option("--b", gb, "branching factor")->capture_default_str();
    garnet->add_option("--seed", seed)->capture_default_str();
    garnet->add_option("--out", c.out, "output path (stdout when omitted)");

    auto* exact = app.add_subcommand("solve-exact", "optimal robust gain with the exact operator");
    add_instance(exact, c);
    exact->add_option("--method", method, "rrvi or rhi")->check(CLI::IsMember({"rrvi", "rhi"}))->capture_default_str();
    exact->add_option("--tol", c.tol)->capture_default_str();
    exact->add_option("--n", n, "iteration cap (0 = default)");
    exact->add_option("--out", c.out, "result JSON path");

    auto* rhi = app.add_subcommand("solve-rhi", "sampled robust Halpern iteration");
    add_instance(rhi, c);
    rhi->add_option("--config", config, "RHI config JSON {n, epsilon, delta, seed}")->check(CLI::ExistingFile);
    rhi->add_option("--n", n, "iterations");
    rhi->add_option("--epsilon", epsilon)->capture_default_str();
    rhi->add_option("--delta", delta)->capture_default_str();
    rhi->add_option("--seed", seed)->capture_default_str();
    rhi->add_option("--trace", trace_out, "trace CSV path");
    rhi->add_flag("--eval", evaluate, "record the greedy policy's robust gain in the trace");
    rhi->add_option("--eval-every", eval_every)->capture_default_str();
    rhi->add_option("--out", c.out, "result JSON path");

    auto* reduce = app.add_subcommand("reduce", "discounted reduction with gamma = 1 - epsilon / H");
    add_instance(reduce, c);
    reduce->add_option("--epsilon", epsilon)->capture_default_str();
    reduce->add_option("--h-bound", h_bound, "bias span bound H (default: 2x sampled estimate)");
    reduce->add_option("--tol", c.tol)->capture_default_str();
    reduce->add_option("--seed", seed)->capture_default_str();
    reduce->add_option("--out", c.out, "result JSON path");

    auto* eval = app.add_subcommand("eval-policy", "robust gain of a fixed policy");
    add_instance(eval, c);
    eval->add_option("--policy", policy_arg, "policy JSON or comma list")->required();
    eval->add_option("--tol", c.tol)->capture_default_str();
    eval->add_option("--out", c.out, "result JSON path");

    auto* exper = app.add_subcommand("experiment", "Garnet experiment: repeated sampled runs against the baseline");
    exper->add_option("--config", config, "experiment config JSON")->check(CLI::ExistingFile);
    exper->add_option("--n", n, "iterations");
    exper->add_option("--epsilon", epsilon);
    exper->add_option("--delta", delta);
    exper->add_option("--seed", seed);
    exper->add_option("--repeats", repeats);
    exper->add_option("--eval-every", eval_every);
    exper->add_option("--out", c.out, "output directory");

    auto* sweep = app.add_subcommand("sweep-epsilon", "sample budget of sampled RHI across epsilon");
    add_instance(sweep, c);
    sweep->add_option("--eps", eps_list, "epsilon values")->delimiter(',')->capture_default_str();
    sweep->add_option("--delta", delta)->capture_default_str();
    sweep->add_option("--seed", seed)->capture_default_str();
    sweep->add_option("--out", c.out, "result JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (garnet->parsed()) {
            const TabularMdp mdp = generate_garnet(GarnetSpec{gS, gA, gb, seed});
            const std::string text = mdp_to_json(mdp).dump() + "\n";
            if (c.out.empty())
                std::cout << text;
            else
                write_text_file(c.out, text);
            return 0;
        }

        if (exper->parsed()) {
            ExperimentConfig cfg = config.empty() ? ExperimentConfig::defaults()
                                                  : experiment_config_from_json(read_json_file(config));
            if (exper->count("--n")) cfg.rhi.n = n;
            if (exper->count("--epsilon")) cfg.rhi.epsilon = epsilon;
            if (exper->count("--delta")) cfg.rhi.delta = delta;
            if (exper->count("--seed")) cfg.rhi.seed = seed;
            if (exper->count("--repeats")) cfg.repeats = repeats;
            if (exper->count("--eval-every")) cfg.eval_every = eval_every;
            if (!c.out.empty()) cfg.output_dir = c.out;
            const auto summaries = run_experiment(cfg);
            for (const auto& s : summaries) {
                if (s.inexact_rows > 0)
                    std::cerr << "warning: " << s.label << ": " << s.inexact_rows
                              << " rows violate R <= min positive P0\n";
                const auto& last = s.aggregate.back();
                std::cout << s.label << ": baseline " << s.baseline_gain << ", final mean " << last.mean_gain
                          << " (std " << last.std_gain << "), gap " << s.baseline_gain - last.mean_gain << ", "
                          << s.aggregate_csv.string() << '\n';
            }
            return 0;
        }

        const TabularMdp mdp = load_mdp(c.instance);
        const UncertaintyModel model = parse_model_arg(c.model).build(mdp);
        warn_inexact(model);
        const BellmanContext ctx(mdp, model, 1.0);

        if (exact->parsed()) {
            ExactSolveReport rep;
            if (method == "rrvi")
                rep = rrvi_baseline(ctx, c.tol, n > 0 ? n : 10'000'000);
            else
                rep = rhi_exact(ctx, QTable::Zero(mdp.num_states(), mdp.num_actions()), n > 0 ? n : 10'000'000,
                                c.tol);
            if (method == "rhi" && !rep.converged)
                throw NonConvergenceError("rhi did not reach the tolerance", rep.residual);
            std::cerr << "g* = " << std::setprecision(12) << rep.gain << '\n';
            emit(json{{"method", method},
                      {"gain", rep.gain},
                      {"policy", rep.policy},
                      {"iterations", rep.iterations},
                      {"residual", rep.residual}},
                 c.out);
            return 0;
        }

        if (rhi->parsed()) {
            RhiConfig cfg;
            if (!config.empty()) cfg = rhi_config_from_json(read_json_file(config));
            if (rhi->count("--n")) cfg.n = n;
            if (rhi->count("--epsilon") || config.empty()) cfg.epsilon = epsilon;
            if (rhi->count("--delta") || config.empty()) cfg.delta = delta;
            if (rhi->count("--seed") || config.empty()) cfg.seed = seed;
            cfg.validate();
            TraceOptions opts;
            opts.every = eval_every;
            if (evaluate) opts.evaluate = [&](const Policy& pi) { return robust_policy_gain(mdp, model, pi).gain; };
            GenerativeModel gm(mdp, cfg.seed);
            const RhiResult res = rhi_sampled(gm, model, cfg, opts);
            if (!trace_out.empty()) {
                std::ostringstream os;
                res.trace.write_csv(os);
                write_text_file(trace_out, os.str());
            }
            emit(json{{"policy", res.policy},
                      {"total_samples", res.total_samples},
                      {"config", rhi_config_to_json(cfg)},
                      {"final_residual_span", res.trace.back().residual_span}},
                 c.out);
            return 0;
        }

        if (reduce->parsed()) {
            double H = h_bound;
            if (H <= 0.0) {
                const ExactSolveReport base = rrvi_baseline(ctx, 1e-10, 10'000'000);
                H = 2.0 * measure_bias_span(ctx, base.policy, 64, seed);
                if (H <= epsilon) H = 2.0 * epsilon;
                std::cerr << "using H = " << H << " (2x sampled bias span estimate, not a verified bound)\n";
            }
            const ReductionReport rep = reduction_solve(ctx, epsilon, H, c.tol);
            const RobustGain g = robust_policy_gain(mdp, model, rep.policy);
            emit(json{{"policy", rep.policy},
                      {"discount", rep.discount},
                      {"h_bound", H},
                      {"robust_gain", g.gain},
                      {"discounted_suboptimality", rep.discounted_suboptimality}},
                 c.out);
            return 0;
        }

        if (eval->parsed()) {
            const Policy pi = parse_policy_arg(policy_arg);
            const RobustGain g = robust_policy_gain(mdp, model, pi, c.tol);
            json j{{"gain", g.gain}, {"iterations", g.iterations}, {"certificate", g.certificate.has_value()}};
            emit(j, c.out);
            return 0;
        }

        if (sweep->parsed()) {
            const SweepReport rep = sweep_epsilon(mdp, model, eps_list, delta, seed);
            json pts = json::array();
            for (const auto& p : rep.points)
                pts.push_back(json{{"epsilon", p.epsilon}, {"n", p.n}, {"total_samples", p.total_samples}});
            emit(json{{"h_estimate", rep.h_estimate},
                      {"points", pts},
                      {"slope", rep.slope},
                      {"polylog_slope", rep.polylog_slope}},
                 c.out);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (last residual " << e.last_residual << ")\n";
        return kExitSolver;
    } catch (const DegeneracyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const NumericFault& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
