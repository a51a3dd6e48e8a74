#pragma once

#include "qmark/report.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qmark {

// Verification outcome classes, shared with the CLI exit codes and the C API.
enum StatusCode : int {
    StatusOk = 0,
    StatusChecksFailed = 1,
    StatusConfigError = 2,
    StatusFaithfulnessError = 3,
    StatusInternalError = 4,
};

struct RunConfig {
    int window_length = 4;
    std::string family = "trivial";  // trivial|ising|hopping|product|two_block|diag_lift|from_files
    // family parameters
    double alpha = 1.0, beta = 0.0, gamma = 0.0, delta = 1.0, h = 0.5;  // ising / hopping
    double empty_probability = 0.3;                                      // product
    double t_hop = 0.6, t_vv = 0.4;                                      // two_block
    double pi_stay1 = 0.9, pi_stay2 = 0.9;                               // diag_lift transition
    std::string files_dir;                                               // from_files
    std::vector<std::string> suites = {"all"};
    std::string out_path;
    std::uint64_t seed = 20240601;
    std::map<std::string, double> tolerance_override;

    void validate() const;  // throws ConfigError
    bool wants(const std::string& suite) const;
    double tol_for(const std::string& check_id, double pinned) const;
    std::map<std::string, std::string> describe() const;  // env block
};

RunConfig config_from_keyvalues(const std::map<std::string, std::string>& kv);

// Executes the requested suites in dependency order; deterministic given the seed.
Report run(const RunConfig& config);

// Writes the family as operator files (amplitude manifest or density).
void write_demo(const RunConfig& config, const std::string& out_dir);

// Loads a saved sequence/density and verifies it.
Report verify_files(const RunConfig& config);

// Single-purpose front ends used by the matching CLI verbs.
Report run_hamiltonian(const RunConfig& config);
Report run_correlations(const RunConfig& config);
Report run_disintegration(const RunConfig& config);

int status_of(const Report& report);

}  // namespace qmark
