#pragma once

#include "ghzw/belltest.hpp"
#include "ghzw/protocols.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ghzw::run {

/// Effective configuration of one CLI invocation. Field names double as the
/// JSON config keys; unknown keys in a config file are rejected.
struct RunConfig {
    std::string protocol = "ghz";       // pair | ghz | w
    std::string engine = "exact";       // exact | montecarlo | abstract
    std::string preparation = "ideal";  // ideal | heralded | product
    std::string flag_treatment = "trace"; // trace | erase | abstract
    double p_c = 1e-3;
    double eta = 0.0;
    double dark = 0.0;
    double retrieval_efficiency = 1.0;
    double phi1 = 0.0, phi2 = 0.0, phi3 = 0.0;
    double phi_a2 = 0.0, phi_a3 = 0.0;
    bool compensate = true;
    double phase_jitter = 0.0; // per-shot uniform drift width (radians)
    int n_max = 2;
    long shots = 100000;
    std::uint64_t seed = 1;
    double t0 = 1.0;
    double t1 = 1.0;
    std::uint64_t attempt_cap = 1000000;
    int threads = 1;
    std::string mermin_a = ""; // default depends on protocol
    std::string mermin_b = "";

    void validate() const;

    /// Parse a JSON config document; every key must be a known field.
    static RunConfig from_json_text(const std::string& text);

    /// Canonical serialization (sorted keys, shortest round-trip numbers);
    /// the basis of the config hash.
    std::string canonical_json() const;

    /// FNV-1a 64 over the canonical serialization, as fixed-width hex.
    std::string config_hash() const;
};

struct ResultRecord {
    std::string experiment;
    std::string settings;
    double value = 0.0;
    double stderr_ = 0.0;
    long shots = 0;
    double valid_fraction = 1.0;
    std::string engine;
};

struct RunReport {
    RunConfig config;
    std::vector<ResultRecord> rows;
    std::vector<std::string> notes;
    bool warned = false; // e.g. heralding failed; still exit 0
};

RunReport run_pair(const RunConfig& config);
RunReport run_ghz(const RunConfig& config);
RunReport run_w(const RunConfig& config);
RunReport run_mermin(const RunConfig& config);
RunReport run_timing(const RunConfig& config);

/// Deterministic CSV: fixed header, one line per record, 12 significant
/// digits, config hash on every row.
std::string to_csv(const RunReport& report);

/// JSON report embedding the full effective config.
std::string to_json(const RunReport& report);

/// Build the prepared three-party state (extracted coincidence component or
/// product fixture) plus the station compensation for it.
struct PreparedState {
    fock::StateVector state;
    std::array<double, 3> compensation{0.0, 0.0, 0.0};
    double coincidence_weight = 1.0;
};
PreparedState prepare_state(const RunConfig& config);

bell::BellConfig bell_config(const RunConfig& config,
                             const std::array<double, 3>& compensation);

} // namespace ghzw::run
