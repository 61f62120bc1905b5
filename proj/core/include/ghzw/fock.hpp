#pragma once

#include "ghzw/errors.hpp"

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ghzw::fock {

using Complex = std::complex<double>;

/// Amplitudes smaller than this are dropped from sparse states.
inline constexpr double kPruneThreshold = 1e-15;
/// States with a norm below this cannot be normalized or collapsed onto.
inline constexpr double kZeroNormThreshold = 1e-14;
/// Default per-mode occupation cutoff. Two quanta per mode covers the
/// leading double-excitation error terms of weak-pulse preparation.
inline constexpr int kDefaultTruncation = 2;

/// Handle to a registered bosonic mode. The index is the mode's position in
/// its registry and is stable after registration.
struct ModeId {
    std::uint32_t index = 0;
    std::string label;
};

/// Ordered set of named modes with a per-mode occupation cutoff.
/// Registries are immutable values; "extending" one returns a new registry
/// that has the old one as a prefix.
class ModeRegistry {
  public:
    ModeRegistry();
    explicit ModeRegistry(std::vector<std::string> labels,
                          int n_max = kDefaultTruncation);
    ModeRegistry(std::vector<std::string> labels, std::vector<int> n_max);

    std::size_t size() const { return data_->modes.size(); }
    bool empty() const { return data_->modes.empty(); }

    const ModeId& mode(std::string_view label) const;
    const ModeId& mode(std::size_t index) const;
    bool has(std::string_view label) const;
    int n_max(std::size_t index) const { return data_->n_max.at(index); }

    /// New registry with extra modes appended. Labels must be fresh.
    ModeRegistry extended(const std::vector<std::string>& labels,
                          int n_max = kDefaultTruncation) const;

    /// Value equality: same labels in the same order, same cutoffs.
    bool same_as(const ModeRegistry& other) const;
    /// True when this registry's modes form a leading prefix of `other`.
    bool is_prefix_of(const ModeRegistry& other) const;

    friend ModeRegistry concat(const ModeRegistry& a, const ModeRegistry& b);

  private:
    struct Data {
        std::vector<ModeId> modes;
        std::vector<int> n_max;
        std::map<std::string, std::uint32_t, std::less<>> by_label;
    };
    static std::shared_ptr<const Data> build(std::vector<std::string> labels,
                                             std::vector<int> n_max);
    std::shared_ptr<const Data> data_;
};

/// Per-mode excitation counts for one basis ket.
using Occupation = std::vector<std::uint8_t>;

using Term = std::pair<Occupation, Complex>;

/// Sparse ket over a truncated multimode Fock space. Immutable after
/// construction: every operation returns a new state, so values can move
/// freely between threads.
class StateVector {
  public:
    StateVector() = default;
    /// Terms are sorted, merged and pruned; no normalization is applied.
    StateVector(ModeRegistry registry, std::vector<Term> terms);

    const ModeRegistry& registry() const { return registry_; }
    std::span<const Term> terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    Complex amplitude(const Occupation& occ) const;
    double norm_squared() const { return norm_sq_; }
    double norm() const;

    /// True when the given mode is unoccupied in every stored term.
    bool mode_is_vacuum(const ModeId& mode) const;

    /// Lift onto a registry that has this one as a prefix (new modes start
    /// in vacuum).
    StateVector extended(const ModeRegistry& bigger) const;

    std::string to_string() const;

  private:
    ModeRegistry registry_;
    std::vector<Term> terms_;
    double norm_sq_ = 0.0;
};

struct CreateResult {
    StateVector state;
    /// Squared weight of input terms whose image exceeded the truncation.
    double leakage = 0.0;
};

struct Projection {
    double probability = 0.0;
    StateVector state;
};

/// All-modes-empty ket with amplitude one.
StateVector vacuum(const ModeRegistry& registry);

/// Bosonic creation operator on one mode: |n> -> sqrt(n+1)|n+1>. Terms that
/// would exceed the mode cutoff are dropped and reported as leakage, never
/// silently renormalized.
CreateResult apply_create(const StateVector& state, const ModeId& mode);

/// Linear combination of states sharing one registry. Not normalized.
StateVector superpose(const std::vector<std::pair<Complex, StateVector>>& terms);

/// <a|b>, conjugate-linear in the first argument.
Complex inner(const StateVector& a, const StateVector& b);

StateVector normalize(const StateVector& state);

/// Probability of finding exactly n quanta in the mode.
double occupation_probability(const StateVector& state, const ModeId& mode, int n);

/// Project onto occupation n of a mode and collapse. Throws NumericalError
/// when the outcome probability is below the zero-norm threshold.
Projection project_number(const StateVector& state, const ModeId& mode, int n);

/// Collapse onto "at least one quantum" in the mode (threshold-detector
/// companion of project_number).
Projection project_occupied(const StateVector& state, const ModeId& mode);

/// Product state over the concatenation of two disjoint registries.
StateVector tensor(const StateVector& a, const StateVector& b);

/// |<a|b>|^2 for normalized states on a shared registry.
double fidelity(const StateVector& a, const StateVector& b);

/// Fidelity <t|rho|t> of the reduced state on the target's modes, where rho
/// traces out every other mode of `state`. The target's registry must be a
/// sub-registry (by label) of the state's and the target must be normalized.
double reduced_fidelity(const StateVector& state, const StateVector& target);

/// Check that the mode handle belongs to the state's registry.
void require_mode(const StateVector& state, const ModeId& mode);

} // namespace ghzw::fock
