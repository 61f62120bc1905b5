#pragma once

#include "ghzw/fock.hpp"
#include "ghzw/rng.hpp"

#include <numbers>
#include <vector>

namespace ghzw::optics {

using fock::Complex;
using fock::ModeId;
using fock::StateVector;

/// Two-mode mixer. theta = pi/4 is a balanced (50/50) splitter. The
/// convention is the symmetric one: cross terms pick up a factor i,
///   a1+ -> cos(theta) a1+ + i sin(theta) a2+
///   a2+ -> i sin(theta) a1+ + cos(theta) a2+.
/// Negative theta applies the inverse.
struct BeamSplitterSpec {
    ModeId mode_a;
    ModeId mode_b;
    double theta = std::numbers::pi / 4;
};

/// Threshold (non-number-resolving) detector. `loss` is the lumped loss
/// probability of the detection path; `dark` the dark-click probability per
/// detection window.
struct DetectorModel {
    double loss = 0.0;
    double dark = 0.0;
};

/// Ordered click/no-click record, one entry per detector queried.
struct ClickPattern {
    std::vector<bool> clicks;

    bool operator==(const ClickPattern&) const = default;
    std::size_t click_count() const;
    std::string to_string() const;
};

/// Balanced m-port: the discrete-Fourier unitary
/// U[j][k] = exp(2*pi*i*j*k/m)/sqrt(m) applied to creation operators.
struct MultiportSpec {
    std::vector<ModeId> modes; // size >= 2
};

/// Square matrix of creation-operator coefficients, row-major; column k is
/// the image of input mode k.
struct ModeUnitary {
    std::size_t dim = 0;
    std::vector<Complex> coeff;

    const Complex& at(std::size_t row, std::size_t col) const {
        return coeff[row * dim + col];
    }
};

ModeUnitary beam_splitter_unitary(double theta);
ModeUnitary dft_unitary(std::size_t m);

/// Apply a mode unitary to the listed modes. Output terms that exceed a
/// mode's cutoff are dropped; their squared weight (the unitarity deficit)
/// is added to *leakage when given.
StateVector apply_mode_unitary(const StateVector& state,
                               const std::vector<ModeId>& modes,
                               const ModeUnitary& u,
                               double* leakage = nullptr);

/// Occupation-n terms gain exp(i*n*phi).
StateVector phase_shift(const StateVector& state, const ModeId& mode, double phi);

StateVector beam_splitter(const StateVector& state, const BeamSplitterSpec& spec,
                          double* leakage = nullptr);

StateVector multiport(const StateVector& state, const MultiportSpec& spec,
                      double* leakage = nullptr);

/// Couple `mode` to a fresh vacuum ancilla with transmission 1-eta. The
/// ancilla keeps the lost light in the state, so trajectories stay pure.
StateVector apply_loss(const StateVector& state, const ModeId& mode, double eta,
                       const ModeId& loss_mode);

/// One pure trajectory of a threshold detection.
struct DetectionBranch {
    bool click = false;
    double probability = 0.0;
    StateVector state; // normalized; retains any loss ancilla
};

/// Exact click/no-click decomposition of a threshold measurement. With
/// dark = 0 this has (at most) two branches; a dark detector adds a third
/// trajectory (dark click on the vacuum component) so every branch stays a
/// pure state. Branch probabilities sum to one.
std::vector<DetectionBranch> detect_threshold(const StateVector& state,
                                              const ModeId& mode,
                                              const DetectorModel& detector);

/// Aggregate click probability: dark + (1-dark)*(1 - sum_n p(n) loss^n).
double click_probability(const StateVector& state, const ModeId& mode,
                         const DetectorModel& detector);

/// Sample one trajectory of detect_threshold.
DetectionBranch sample_detection(const StateVector& state, const ModeId& mode,
                                 const DetectorModel& detector, ShotRng& rng);

struct PatternBranch {
    ClickPattern pattern;
    double probability = 0.0;
    StateVector state;
};

/// Joint distribution over click patterns of several detectors, measured in
/// order. Entries may share a pattern when dark counts split trajectories;
/// probabilities over all entries sum to one.
std::vector<PatternBranch>
click_pattern_distribution(const StateVector& state,
                           const std::vector<std::pair<ModeId, DetectorModel>>& detectors);

/// Total probability of one specific pattern.
double pattern_probability(const std::vector<PatternBranch>& branches,
                           const ClickPattern& pattern);

} // namespace ghzw::optics
