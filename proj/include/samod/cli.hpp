#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "samod/solve.hpp"

namespace samod::cli {

/// Exit codes of the `samod` tool.
enum Exit : int {
    ok = 0,
    run_failed = 1,  // a sample did not reach the required status, or validation failed
    bad_input = 2,   // missing file, malformed document, bad flag
    internal = 3,
};

/// Everything one run depends on. Relative paths in the manifest document
/// resolve against the manifest's directory.
struct RunManifest {
    std::filesystem::path network;
    std::filesystem::path requests;
    std::filesystem::path prices;
    std::optional<std::filesystem::path> solar;
    std::filesystem::path fleet;
    std::optional<std::filesystem::path> fare;
    std::uint64_t seed = 1;
    int requests_per_sample = 200;
    int vehicles_per_sample = 5;
    int samples = 1;
    SolverConfig solver;
    std::filesystem::path output = "out";
    std::vector<double> battery_sizes{20.0, 40.0, 60.0};

    /// Paths that must exist before anything runs.
    std::vector<std::filesystem::path> inputs() const;
};

/// Throws ParseError on malformed documents and Error when unreadable.
RunManifest load_manifest(const std::filesystem::path& path);

/// Resolved manifest (absolute input paths replaced by the given ones),
/// written next to the outputs.
void write_manifest(std::ostream& out, const RunManifest& manifest);

/// Entry point of the tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace samod::cli
