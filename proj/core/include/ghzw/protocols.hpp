#pragma once

#include "ghzw/fock.hpp"
#include "ghzw/optics.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ghzw::protocols {

using fock::ModeId;
using fock::ModeRegistry;
using fock::StateVector;

enum class Protocol { pair, ghz, w };

/// Weak-pulse excitation strength and the optical-channel phase its Stokes
/// light accumulates. The expansion keeps terms through the double
/// excitation, so p_c must stay small for the model to be meaningful.
struct ExcitationParams {
    double p_c = 0.01;
    double phase = 0.0;
};

/// Channel phases of the three pair links and of the shared line that
/// prepares the Fock-basis W resource. phi_r is always derived.
struct ChannelPhases {
    double phi1 = 0.0, phi2 = 0.0, phi3 = 0.0;
    double phi_a2 = 0.0, phi_a3 = 0.0;

    double phi_r() const { return phi1 + phi2 + phi3; }
};

struct TimingParams {
    double t0 = 1.0; // one pair-preparation round
    double t1 = 1.0; // one Fock-basis W round
};

struct RetrievalParams {
    double efficiency = 1.0;
};

/// Outcome of one heralded preparation. `state` is the highest-weight pure
/// trajectory conditioned on the herald pattern; with dark counts disabled
/// (the default) it is the full conditional state. `branches` lists every
/// trajectory with its probability (summing to herald_probability), which is
/// what mixed-state diagnostics should average over.
struct HeraldResult {
    bool success = false;
    double herald_probability = 0.0;
    optics::ClickPattern pattern;
    /// Relative phase the herald imprints between the two branches,
    /// including the detection convention's fixed offset.
    double effective_phase = 0.0;
    StateVector state;
    std::vector<std::pair<double, StateVector>> branches;
};

struct CoincidenceComponent {
    double weight = 0.0;
    StateVector component;
};

/// Apply 1 + sqrt(p) e^{i phi} S+b+ + (p/2) e^{2 i phi} (S+b+)^2 to the
/// state and normalize. Ensemble and photon occupations stay perfectly
/// correlated term by term. The photon mode must be vacuum.
StateVector raman_excite(const StateVector& state, const ModeId& ensemble,
                         const ModeId& photon, const ExcitationParams& params);

/// Same expansion without the vacuum check or normalization; used when
/// several ensembles emit into one shared mode.
StateVector apply_weak_excitation(const StateVector& state, const ModeId& ensemble,
                                  const ModeId& photon, double p_c, double phase);

struct PairLabels {
    std::string left = "L";
    std::string right = "R";
    std::string stokes_left = "sL";
    std::string stokes_right = "sR";
};

/// Excite two ensembles, interfere their Stokes modes on a balanced
/// splitter and herald on exactly one click at the chosen output (0 or 1).
/// The heralded atomic state approaches
/// (S_left+ + e^{i effective_phase} S_right+)|vac>/sqrt(2) as p_c -> 0.
HeraldResult prepare_pair(const ExcitationParams& excitation,
                          const optics::DetectorModel& detector,
                          const PairLabels& labels = {}, int herald_output = 0,
                          int n_max = fock::kDefaultTruncation);

/// Three ensembles on one line emit into a single shared Stokes mode;
/// herald on a click of the one detector behind the line. The conditional
/// atomic state approaches the uniform single-excitation superposition with
/// phases (0, phi_a2, phi_a3).
HeraldResult prepare_w_fock(double p_c, double phi_a2, double phi_a3,
                            const optics::DetectorModel& detector,
                            const std::array<std::string, 3>& labels = {"A1", "A2",
                                                                        "A3"},
                            const std::string& stokes_label = "sA",
                            int n_max = fock::kDefaultTruncation);

/// Tensor product of three pair states over disjoint registries.
StateVector prepare_ghz_raw(const StateVector& pair1, const StateVector& pair2,
                            const StateVector& pair3);

/// Tensor product of three pair states and the shared-line resource.
StateVector prepare_w_raw(const StateVector& pair1, const StateVector& pair2,
                          const StateVector& pair3, const StateVector& w_fock);

/// Project onto the subspace holding exactly one excitation in each listed
/// pair of modes; returns the subspace weight and the normalized component.
CoincidenceComponent
extract_coincidence_component(const StateVector& state,
                              const std::vector<std::pair<std::string, std::string>>& pairs);

/// Move the stored excitation from an ensemble mode into a vacuum photonic
/// mode; efficiency below one inserts a loss channel on the photon.
StateVector retrieve(const StateVector& state, const ModeId& ensemble,
                     const ModeId& photon, const RetrievalParams& params = {});

// ------------------------------------------------------------ ideal states

StateVector ideal_pair_state(double phase, const std::string& left = "L",
                             const std::string& right = "R",
                             int n_max = fock::kDefaultTruncation);
StateVector ideal_ghz_raw(const ChannelPhases& phases,
                          int n_max = fock::kDefaultTruncation);
StateVector ideal_ghz_component(const ChannelPhases& phases,
                                int n_max = fock::kDefaultTruncation);
StateVector ideal_w_fock(const ChannelPhases& phases,
                         int n_max = fock::kDefaultTruncation);
StateVector ideal_w_raw(const ChannelPhases& phases,
                        int n_max = fock::kDefaultTruncation);
StateVector ideal_w_component(const ChannelPhases& phases,
                              int n_max = fock::kDefaultTruncation);

/// Pair-detection grouping that keeps only the all-left/all-right branches
/// of the raw six-ensemble state: pair i is grouped with the right ensemble
/// of pair i+1 (indices wrap).
std::vector<std::pair<std::string, std::string>> ghz_coincidence_pairs();
std::vector<std::pair<std::string, std::string>> w_coincidence_pairs();

/// Reference heralded-pair target for a given herald pattern.
StateVector pair_target_state(double channel_phase, int herald_output,
                              const std::string& left = "L",
                              const std::string& right = "R",
                              int n_max = fock::kDefaultTruncation);

/// Herald-convention phase for a pair heralded at the given output.
double pair_effective_phase(double channel_phase, int herald_output);

// ------------------------------------------------------------------ timing

/// Closed-form expected preparation times: 4*t0/(1-eta)^3 for the
/// three-pair protocol and 4*max(t0,t1)/(1-eta)^3 for the W protocol.
/// The pair protocol has no closed form here; use attempt enumeration.
double expected_time(Protocol protocol, const TimingParams& timing, double eta);

/// Per-attempt success probability of the repeat-until-success stage,
/// computed by exact enumeration of the optical train. For `pair` this is
/// the probability of any single-click herald at strength p_c; for ghz/w it
/// is the coincidence weight times the probability that every party's
/// station registers exactly one click.
double coincidence_success_probability(Protocol protocol,
                                       const optics::DetectorModel& detector,
                                       const ExcitationParams& excitation = {});

struct AttemptStats {
    std::vector<std::uint32_t> samples;
    double mean = 0.0;
    double stderr_ = 0.0;
    double success_probability = 0.0;
};

/// Repeat Bernoulli attempts until success, `shots` times; throws once any
/// shot exhausts the cap. Deterministic for fixed seed, independent of
/// thread count.
AttemptStats sample_attempts(double success_probability, int shots,
                             std::uint64_t seed, std::uint64_t stream,
                             int threads = 1,
                             std::uint64_t attempt_cap = 1000000);

/// Repeat the herald/post-selection stage with fresh per-shot randomness
/// until success, `shots` times. Attempt counts are geometric with the
/// enumerated per-attempt probability. Deterministic for fixed seed,
/// independent of thread count.
AttemptStats simulate_attempts(Protocol protocol,
                               const optics::DetectorModel& detector,
                               const ExcitationParams& excitation, int shots,
                               std::uint64_t seed, int threads = 1,
                               std::uint64_t attempt_cap = 1000000);

// ----------------------------------------------------- phase bookkeeping

/// Station compensation phases that null the branch phases of a prepared
/// three-pair component (one entry per party).
std::array<double, 3> ghz_compensation(const std::array<double, 3>& pair_phases);

/// Same for the W component, whose branch i carries the shared-line phase
/// of ensemble i plus its pair's channel phase.
std::array<double, 3> w_compensation(const std::array<double, 3>& pair_phases,
                                     double a2, double a3);

} // namespace ghzw::protocols
