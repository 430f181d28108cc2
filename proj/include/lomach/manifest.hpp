#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lomach/config.hpp"
#include "lomach/grid.hpp"
#include "lomach/scenario.hpp"

namespace lomach {

/// Everything a sweep needs, in one value: scenario, grid, the (epsilon,
/// delta) schedule, seeds and tolerances. A manifest fully determines a run;
/// two equal manifests produce byte-identical reports.
struct RunManifest {
    std::string scenario = "taylor_green_2d";
    ScenarioParams params;
    GridSpec grid;
    double gamma = 1.4;
    std::vector<double> epsilons;
    std::vector<std::vector<double>> deltas;  // one list per epsilon
    std::uint64_t seed = 1;
    int budget = 40;            // greedy step budget per row
    double trace_target = 0.5;  // stop when int tr M falls to this fraction
    int test_modes = 4;         // |k|_inf cap for the weak-form battery
    std::string out_dir = "runs";
    Tolerances tol;

    void validate() const;  // throws PreconditionViolated on malformed schedules
};

/// Canonical JSON serialization (fixed key order, shortest round-trip floats);
/// the deserializer accepts exactly what the serializer emits.
std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

/// FNV-1a 64-bit digest of the canonical serialization, as 16 lowercase hex
/// digits; names the run directory.
std::string manifest_hash(const RunManifest& m);

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

}  // namespace lomach
