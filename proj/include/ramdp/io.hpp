#pragma once

#include "ramdp/garnet.hpp"
#include "ramdp/mdp.hpp"
#include "ramdp/sampling.hpp"
#include "ramdp/uncertainty.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace ramdp {

using json = nlohmann::json;

/// Malformed input files; carries a schema hint.
struct FormatError : UsageError {
    using UsageError::UsageError;
};

// MDP instance: { "S": int, "A": int, "P0": [[[f64]]], "r": [[f64]] }, P0[s][a][s'].
TabularMdp mdp_from_json(const json& j);
json mdp_to_json(const TabularMdp& mdp);
TabularMdp load_mdp(const std::filesystem::path& path);
void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);

/// MDP-independent description of an uncertainty set, as stored in files:
/// { "kind": "contamination"|"lp"|"linf"|"tv"|"l2", "p": number|"inf",
///   "R": [[f64]] | f64, "forbidden": "auto"|"none" }.
/// `linf` and `tv` both mean the Lp ball with p = inf; `l2` means p = 2.
struct ModelSpec {
    SetKind kind = SetKind::Contamination;
    double p = kInfNorm;
    double radius = 0.1;
    std::optional<QTable> radius_table;
    ForbiddenMode forbidden = ForbiddenMode::Auto;

    UncertaintyModel build(const TabularMdp& mdp) const;
    /// Short label: contamination, linf, l2, lp<p>.
    std::string label() const;
};

ModelSpec model_spec_from_json(const json& j);
json model_spec_to_json(const ModelSpec& spec);
/// Path to a JSON file, or shorthand `<kind>:<radius>` such as `tv:0.1`.
ModelSpec parse_model_arg(const std::string& arg);

// RHI config: { "n": int, "epsilon": f64, "delta": f64, "seed": u64 }.
RhiConfig rhi_config_from_json(const json& j);
json rhi_config_to_json(const RhiConfig& cfg);

GarnetSpec garnet_spec_from_json(const json& j);
json garnet_spec_to_json(const GarnetSpec& spec);

json policy_to_json(const Policy& policy);
Policy policy_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ramdp
