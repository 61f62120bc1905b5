#pragma once

#include "ghzw/optics.hpp"
#include "ghzw/protocols.hpp"
#include "ghzw/qubit.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace ghzw::bell {

using fock::ModeId;
using fock::StateVector;
using protocols::Protocol;

enum class MeasurementSetting { X, Y, Z };

/// How the unmeasured which-path flag ensembles of the W protocol are
/// handled at measurement time:
///  - trace:    leave them alone (physical default; decoheres x statistics),
///  - erase:    interfere their retrieved photons on a balanced multiport,
///              detect, and classically correct x outcomes per click,
///  - abstract: coherently drop them (ideal-qubit reference behavior).
enum class FlagTreatment { trace, erase, abstract };

enum class EngineKind { exact, montecarlo, abstract };

/// One party's measurement optics. `zero_mode`/`one_mode` carry the photonic
/// dual-rail qubit after retrieval; the station applies the compensation
/// phase and the phase plate to `one_mode`, mixes the rails on a balanced
/// splitter, and reads two threshold detectors. A click on detector A
/// (the zero_mode output) is the +1 outcome, on detector B the -1 outcome.
///
/// The station includes a fixed quarter-wave offset so that, with the
/// symmetric splitter convention, plate 0 measures the (|0>+|1>)/sqrt(2)
/// basis and plate pi/2 the (|0>+i|1>)/sqrt(2) basis.
struct PartyStation {
    int party = 1; // 1..3
    ModeId zero_mode;
    ModeId one_mode;
    std::optional<ModeId> flag_mode; // retrieved which-path flag (Z readout)
    double compensation = 0.0;
    optics::DetectorModel detector;

    static double plate_phase(MeasurementSetting s);
};

/// One measurement trajectory at a station. `outcome` is +1/-1 when valid.
struct StationBranch {
    int outcome = 0;
    bool valid = false;
    double probability = 0.0;
    StateVector state;
};

/// sigma_x / sigma_y style dual-rail measurement; exactly one click between
/// the two detectors is a valid outcome, anything else is discarded.
std::vector<StationBranch> station_measure_xy(const StateVector& state,
                                              const PartyStation& station,
                                              MeasurementSetting setting);

/// Flag readout: detect the retrieved flag photon. A click records z = +1
/// ("the ensemble has an excitation"), no click records z = -1. Always
/// valid. Note the recorded value is the click convention; the sigma_z
/// EIGENVALUE of the dual-rail qubit is the negative of it, because a set
/// flag marks the excited (|1>) branch.
std::vector<StationBranch> station_measure_z(const StateVector& state,
                                             const PartyStation& station);

/// One erasure outcome. `x_sign` lists, per erased flag (in input order),
/// the classical sign to fold into that flag owner's x outcome.
/// outcome == -1 means no detector clicked.
struct ErasureBranch {
    int outcome = -1;
    std::vector<int> x_sign;
    double probability = 0.0;
    StateVector state;
};

/// Send retrieved flag photons through a balanced multiport and detect all
/// outputs. For two flags the click position fixes a +/- relative phase, so
/// a deterministic x-flip of the first flag's party restores the erased
/// coherence; for three or more flags the outcome phases are not multiples
/// of pi and no classical x correction exists (signs stay +1).
std::vector<ErasureBranch> erasure_station(const StateVector& state,
                                           const std::vector<ModeId>& flag_photons,
                                           const optics::DetectorModel& detector);

/// Coherently clear the given modes, merging amplitudes (reference
/// transform used by FlagTreatment::abstract; not physical optics).
StateVector delete_flag_modes(const StateVector& state,
                              const std::vector<ModeId>& modes);

// -------------------------------------------------------------- estimates

struct CorrelationEstimate {
    std::array<MeasurementSetting, 3> settings{};
    double value = 0.0;
    double stderr_ = 0.0; // 0 for the deterministic engines
    long shots = 0;
    double valid_fraction = 1.0;
    EngineKind engine = EngineKind::exact;
};

struct ProbabilityEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    long shots = 0;
    double valid_fraction = 1.0;
    EngineKind engine = EngineKind::exact;
};

struct MerminResult {
    std::array<CorrelationEstimate, 4> terms{};
    double value = 0.0;
    double stderr_ = 0.0;
    bool violated = false;
};

struct GhzBatteryResult {
    CorrelationEstimate e_yyx, e_yxy, e_xyy, e_xxx;
    /// Local realism turns the three mixed-basis results into a prediction
    /// for the all-x experiment: the product of the three.
    double lhv_xxx_prediction = 0.0;
    bool contradiction = false;
};

struct WPropertyReport {
    ProbabilityEstimate two_z_minus;
    /// Party-symmetrized conditionals P(x_j = x_k | z_i = -1); the two rows
    /// are distinct role assignments that coincide after symmetrization.
    ProbabilityEstimate x_match_a;
    ProbabilityEstimate x_match_b;
};

struct BellConfig {
    Protocol protocol = Protocol::ghz;
    FlagTreatment flag = FlagTreatment::trace;
    optics::DetectorModel detector;
    protocols::RetrievalParams retrieval;
    std::array<double, 3> compensation{0.0, 0.0, 0.0};
    /// Width of a per-shot uniform drift of each party's rail phase,
    /// for studying uncalibrated channels. Only the sampling engine
    /// supports it (a drifting phase is a random variable, not a state).
    double phase_jitter = 0.0;
    int threads = 1;
};

/// Exact enumeration over every station outcome combination, conditioned on
/// coincidence validity. Z settings contribute sigma_z eigenvalues
/// (-recorded z) to the product.
CorrelationEstimate exact_correlation(const StateVector& prepared,
                                      const std::array<MeasurementSetting, 3>& settings,
                                      const BellConfig& config);

/// Per-shot trajectory sampling through the full optical train. Bit-exact
/// for a fixed seed, independent of thread count.
CorrelationEstimate sample_correlation(const StateVector& prepared,
                                       const std::array<MeasurementSetting, 3>& settings,
                                       const BellConfig& config, long shots,
                                       std::uint64_t seed);

/// Ideal three-qubit reference value.
CorrelationEstimate abstract_correlation(Protocol protocol,
                                         const std::array<MeasurementSetting, 3>& settings);

/// Engine dispatch used by the batteries below.
CorrelationEstimate correlation(const StateVector& prepared,
                                const std::array<MeasurementSetting, 3>& settings,
                                EngineKind engine, const BellConfig& config,
                                long shots, std::uint64_t seed);

/// The four-experiment battery: E(YYX), E(YXY), E(XYY) and E(XXX), plus the
/// local-realistic prediction for the last from the first three.
GhzBatteryResult ghz_battery(const StateVector& prepared, EngineKind engine,
                             const BellConfig& config, long shots = 0,
                             std::uint64_t seed = 1);

WPropertyReport w_property_probabilities(const StateVector& prepared,
                                         EngineKind engine, const BellConfig& config,
                                         long shots = 0, std::uint64_t seed = 1);

/// P(x1 = x2 = x3) under all-x measurements, conditioned on coincidence.
ProbabilityEstimate w_all_equal_probability(const StateVector& prepared,
                                            EngineKind engine,
                                            const BellConfig& config,
                                            long shots = 0, std::uint64_t seed = 1);

/// <a1 a2 a3> - <a1 b2 b3> - <b1 a2 b3> - <b1 b2 a3> and the |.| > 2 flag.
MerminResult mermin_value(const StateVector& prepared, MeasurementSetting a,
                          MeasurementSetting b, EngineKind engine,
                          const BellConfig& config, long shots = 0,
                          std::uint64_t seed = 1);

} // namespace ghzw::bell
