#include "lomach/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lomach/errors.hpp"

namespace lomach {

namespace {

using json = nlohmann::ordered_json;

json grid_to_json(const GridSpec& g) {
    return json{{"n", g.n},
                {"modes_per_axis", g.modes_per_axis},
                {"T", g.T},
                {"time_steps", g.time_steps},
                {"dealias_fraction", g.dealias_fraction}};
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    g.n = j.at("n").get<int>();
    g.modes_per_axis = j.at("modes_per_axis").get<int>();
    g.T = j.at("T").get<double>();
    g.time_steps = j.at("time_steps").get<int>();
    g.dealias_fraction = j.at("dealias_fraction").get<double>();
    return g;
}

json tol_to_json(const Tolerances& t) {
    return json{{"mean_zero_rel", t.mean_zero_rel},
                {"trace_free", t.trace_free},
                {"mollifier_mass", t.mollifier_mass},
                {"lin_residual_rel", t.lin_residual_rel},
                {"margin_strict", t.margin_strict},
                {"l2_slack_rel", t.l2_slack_rel},
                {"energy_slack_rel", t.energy_slack_rel},
                {"k_star_tol", t.k_star_tol},
                {"min_decrease", t.min_decrease},
                {"eig_discriminant", t.eig_discriminant}};
}

Tolerances tol_from_json(const json& j) {
    Tolerances t;
    t.mean_zero_rel = j.at("mean_zero_rel").get<double>();
    t.trace_free = j.at("trace_free").get<double>();
    t.mollifier_mass = j.at("mollifier_mass").get<double>();
    t.lin_residual_rel = j.at("lin_residual_rel").get<double>();
    t.margin_strict = j.at("margin_strict").get<double>();
    t.l2_slack_rel = j.at("l2_slack_rel").get<double>();
    t.energy_slack_rel = j.at("energy_slack_rel").get<double>();
    t.k_star_tol = j.at("k_star_tol").get<double>();
    t.min_decrease = j.at("min_decrease").get<double>();
    t.eig_discriminant = j.at("eig_discriminant").get<double>();
    return t;
}

}  // namespace

void RunManifest::validate() const {
    grid.validate();
    if (epsilons.empty()) throw PreconditionViolated("manifest: empty epsilon list");
    if (deltas.size() != epsilons.size())
        throw PreconditionViolated("manifest: need one delta list per epsilon");
    double eps_max = 0.0;
    for (double e : epsilons) {
        if (!(e > 0)) throw PreconditionViolated("manifest: epsilon must be positive");
        eps_max = std::max(eps_max, e);
    }
    for (const auto& ds : deltas)
        for (double d : ds)
            if (!(d > 0)) throw PreconditionViolated("manifest: delta must be positive");
    if (!(grid.T - 2.0 * eps_max > 0))
        throw PreconditionViolated("manifest: common window T - 2 eps_max is empty");
    if (!(gamma > 1.0)) throw PreconditionViolated("manifest: gamma must exceed 1");
    if (budget < 0) throw PreconditionViolated("manifest: negative budget");
    if (test_modes < 0) throw PreconditionViolated("manifest: negative test_modes");
}

std::string manifest_to_json(const RunManifest& m) {
    json j;
    j["scenario"] = m.scenario;
    j["params"] = json::object();
    for (const auto& [k, v] : m.params) j["params"][k] = v;
    j["grid"] = grid_to_json(m.grid);
    j["gamma"] = m.gamma;
    j["epsilons"] = m.epsilons;
    j["deltas"] = m.deltas;
    j["seed"] = m.seed;
    j["budget"] = m.budget;
    j["trace_target"] = m.trace_target;
    j["test_modes"] = m.test_modes;
    j["out_dir"] = m.out_dir;
    j["tolerances"] = tol_to_json(m.tol);
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(std::string("manifest parse: ") + e.what());
    }
    RunManifest m;
    m.scenario = j.at("scenario").get<std::string>();
    for (const auto& [k, v] : j.at("params").items()) m.params[k] = v.get<double>();
    m.grid = grid_from_json(j.at("grid"));
    m.gamma = j.at("gamma").get<double>();
    m.epsilons = j.at("epsilons").get<std::vector<double>>();
    m.deltas = j.at("deltas").get<std::vector<std::vector<double>>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.budget = j.at("budget").get<int>();
    m.trace_target = j.at("trace_target").get<double>();
    m.test_modes = j.at("test_modes").get<int>();
    m.out_dir = j.at("out_dir").get<std::string>();
    m.tol = tol_from_json(j.at("tolerances"));
    return m;
}

std::string manifest_hash(const RunManifest& m) {
    const std::string text = manifest_to_json(m);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

void save_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << manifest_to_json(m);
    if (!f) throw IoError("short write to " + path);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return manifest_from_json(ss.str());
}

}  // namespace lomach
