#include "ramdp/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ramdp {

namespace {

constexpr const char* kMdpSchema = R"({ "S": int, "A": int, "P0": [[[f64]]], "r": [[f64]] })";
constexpr const char* kModelSchema =
    R"({ "kind": "contamination"|"lp"|"linf"|"tv"|"l2", "p": number|"inf", "R": [[f64]]|f64, "forbidden": "auto"|"none" })";
constexpr const char* kRhiSchema = R"({ "n": int, "epsilon": f64, "delta": f64, "seed": u64 })";

[[noreturn]] void fail(const std::string& what, const char* schema) {
    throw FormatError(what + "; expected " + schema);
}

template <typename T>
T field(const json& j, const char* key, const char* schema) {
    if (!j.is_object() || !j.contains(key)) fail(std::string("missing field \"") + key + "\"", schema);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(std::string("bad field \"") + key + "\": " + e.what(), schema);
    }
}

double parse_norm(const json& p) {
    if (p.is_string()) {
        const auto s = p.get<std::string>();
        if (s == "inf" || s == "infinity") return kInfNorm;
        fail("bad norm order \"" + s + "\"", kModelSchema);
    }
    if (!p.is_number()) fail("norm order must be a number or \"inf\"", kModelSchema);
    return p.get<double>();
}

}  // namespace

TabularMdp mdp_from_json(const json& j) {
    const int S = field<int>(j, "S", kMdpSchema);
    const int A = field<int>(j, "A", kMdpSchema);
    if (S < 1 || A < 1) fail("S and A must be positive", kMdpSchema);
    const auto P0 = field<std::vector<std::vector<std::vector<double>>>>(j, "P0", kMdpSchema);
    const auto r = field<std::vector<std::vector<double>>>(j, "r", kMdpSchema);
    if (P0.size() != std::size_t(S) || r.size() != std::size_t(S)) fail("outer dimension must be S", kMdpSchema);
    Kernel P(Eigen::Index(S) * A, S);
    QTable R(S, A);
    for (int s = 0; s < S; ++s) {
        if (P0[std::size_t(s)].size() != std::size_t(A) || r[std::size_t(s)].size() != std::size_t(A))
            fail("second dimension must be A", kMdpSchema);
        for (int a = 0; a < A; ++a) {
            const auto& row = P0[std::size_t(s)][std::size_t(a)];
            if (row.size() != std::size_t(S)) fail("kernel rows must have S entries", kMdpSchema);
            for (int t = 0; t < S; ++t) P(Eigen::Index(s) * A + a, t) = row[std::size_t(t)];
            R(s, a) = r[std::size_t(s)][std::size_t(a)];
        }
    }
    try {
        return TabularMdp(std::move(P), std::move(R));
    } catch (const UsageError& e) {
        fail(e.what(), kMdpSchema);
    }
}

json mdp_to_json(const TabularMdp& mdp) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    json P0 = json::array();
    json r = json::array();
    for (int s = 0; s < S; ++s) {
        json ps = json::array();
        json rs = json::array();
        for (int a = 0; a < A; ++a) {
            json row = json::array();
            for (int t = 0; t < S; ++t) row.push_back(mdp.nominal()(mdp.row(s, a), t));
            ps.push_back(std::move(row));
            rs.push_back(mdp.reward()(s, a));
        }
        P0.push_back(std::move(ps));
        r.push_back(std::move(rs));
    }
    return json{{"S", S}, {"A", A}, {"P0", std::move(P0)}, {"r", std::move(r)}};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": malformed JSON: " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

TabularMdp load_mdp(const std::filesystem::path& path) {
    try {
        return mdp_from_json(read_json_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
    write_text_file(path, mdp_to_json(mdp).dump() + "\n");
}

UncertaintyModel ModelSpec::build(const TabularMdp& mdp) const {
    const QTable R = radius_table ? *radius_table : QTable::Constant(mdp.num_states(), mdp.num_actions(), radius);
    if (kind == SetKind::Contamination) return UncertaintyModel::contamination(mdp, R);
    return UncertaintyModel::lp_ball(mdp, p, R, forbidden);
}

std::string ModelSpec::label() const {
    if (kind == SetKind::Contamination) return "contamination";
    if (std::isinf(p)) return "linf";
    if (p == 2.0) return "l2";
    std::ostringstream os;
    os << "lp" << p;
    return os.str();
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec spec;
    const auto kind = field<std::string>(j, "kind", kModelSchema);
    if (kind == "contamination") {
        spec.kind = SetKind::Contamination;
    } else if (kind == "lp") {
        spec.kind = SetKind::LpBall;
        if (!j.contains("p")) fail("lp model needs \"p\"", kModelSchema);
        spec.p = parse_norm(j.at("p"));
        if (!(spec.p >= 1.0)) fail("p must be >= 1", kModelSchema);
    } else if (kind == "linf" || kind == "tv") {
        spec.kind = SetKind::LpBall;
        spec.p = kInfNorm;
    } else if (kind == "l2") {
        spec.kind = SetKind::LpBall;
        spec.p = 2.0;
    } else {
        fail("unknown kind \"" + kind + "\"", kModelSchema);
    }
    if (!j.contains("R")) fail("missing field \"R\"", kModelSchema);
    const json& R = j.at("R");
    if (R.is_number()) {
        spec.radius = R.get<double>();
        if (!(spec.radius >= 0.0)) fail("R must be nonnegative", kModelSchema);
    } else if (R.is_array()) {
        const auto rows = R.get<std::vector<std::vector<double>>>();
        if (rows.empty() || rows.front().empty()) fail("R table must be S x A", kModelSchema);
        QTable table(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
        for (std::size_t s = 0; s < rows.size(); ++s) {
            if (rows[s].size() != rows.front().size()) fail("R table rows must have equal length", kModelSchema);
            for (std::size_t a = 0; a < rows[s].size(); ++a) table(Eigen::Index(s), Eigen::Index(a)) = rows[s][a];
        }
        spec.radius_table = std::move(table);
    } else {
        fail("R must be a number or an S x A table", kModelSchema);
    }
    if (j.contains("forbidden")) {
        const auto f = j.at("forbidden").get<std::string>();
        if (f == "auto")
            spec.forbidden = ForbiddenMode::Auto;
        else if (f == "none")
            spec.forbidden = ForbiddenMode::None;
        else
            fail("forbidden must be \"auto\" or \"none\"", kModelSchema);
    }
    return spec;
}

json model_spec_to_json(const ModelSpec& spec) {
    json j;
    if (spec.kind == SetKind::Contamination) {
        j["kind"] = "contamination";
    } else {
        j["kind"] = "lp";
        if (std::isinf(spec.p))
            j["p"] = "inf";
        else
            j["p"] = spec.p;
    }
    if (spec.radius_table) {
        json rows = json::array();
        for (Eigen::Index s = 0; s < spec.radius_table->rows(); ++s) {
            json row = json::array();
            for (Eigen::Index a = 0; a < spec.radius_table->cols(); ++a) row.push_back((*spec.radius_table)(s, a));
            rows.push_back(std::move(row));
        }
        j["R"] = std::move(rows);
    } else {
        j["R"] = spec.radius;
    }
    j["forbidden"] = spec.forbidden == ForbiddenMode::None ? "none" : "auto";
    return j;
}

ModelSpec parse_model_arg(const std::string& arg) {
    const auto colon = arg.find(':');
    if (colon != std::string::npos && !std::filesystem::exists(arg)) {
        json j;
        j["kind"] = arg.substr(0, colon);
        const std::string rest = arg.substr(colon + 1);
        try {
            std::size_t used = 0;
            j["R"] = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument(rest);
        } catch (const std::exception&) {
            fail("bad radius in model shorthand \"" + arg + "\"", kModelSchema);
        }
        return model_spec_from_json(j);
    }
    return model_spec_from_json(read_json_file(arg));
}

RhiConfig rhi_config_from_json(const json& j) {
    RhiConfig cfg;
    cfg.n = field<long>(j, "n", kRhiSchema);
    cfg.epsilon = field<double>(j, "epsilon", kRhiSchema);
    cfg.delta = field<double>(j, "delta", kRhiSchema);
    cfg.seed = field<std::uint64_t>(j, "seed", kRhiSchema);
    try {
        cfg.validate();
    } catch (const UsageError& e) {
        fail(e.what(), kRhiSchema);
    }
    return cfg;
}

json rhi_config_to_json(const RhiConfig& cfg) {
    return json{{"n", cfg.n}, {"epsilon", cfg.epsilon}, {"delta", cfg.delta}, {"seed", cfg.seed}};
}

GarnetSpec garnet_spec_from_json(const json& j) {
    constexpr const char* schema = R"({ "S": int, "A": int, "b": int, "seed": u64 })";
    GarnetSpec spec;
    spec.num_states = field<int>(j, "S", schema);
    spec.num_actions = field<int>(j, "A", schema);
    spec.branching = j.contains("b") ? field<int>(j, "b", schema) : 5;
    spec.seed = j.contains("seed") ? field<std::uint64_t>(j, "seed", schema) : 0;
    return spec;
}

json garnet_spec_to_json(const GarnetSpec& spec) {
    return json{{"S", spec.num_states}, {"A", spec.num_actions}, {"b", spec.branching}, {"seed", spec.seed}};
}

json policy_to_json(const Policy& policy) { return json(policy); }

Policy policy_from_json(const json& j) {
    if (j.is_object() && j.contains("policy")) return policy_from_json(j.at("policy"));
    try {
        return j.get<Policy>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("policy must be an array of action indices: ") + e.what());
    }
}

}  // namespace ramdp
