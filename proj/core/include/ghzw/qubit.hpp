#pragma once

#include "ghzw/errors.hpp"

#include <array>
#include <complex>

namespace ghzw::qubit {

using Complex = std::complex<double>;

/// Three-qubit amplitudes. Basis index packs party 1 in the top bit:
/// index = q1*4 + q2*2 + q3. Bit value 1 marks the "excited" branch of a
/// party's dual-rail encoding; its sigma_z eigenvalue is -1.
using State3 = std::array<Complex, 8>;

enum class Basis { X, Y, Z };

/// (|000> + e^{i phase}|111>)/sqrt(2)
State3 ghz_state(double phase = 0.0);

/// (|100> + e^{i a2}|010> + e^{i a3}|001>)/sqrt(3)
State3 w_state(double a2 = 0.0, double a3 = 0.0);

/// |000>
State3 product_zero();

/// <psi| B1 x B2 x B3 |psi> with standard Pauli eigenvalues.
double correlation(const State3& psi, const std::array<Basis, 3>& bases);

/// Probability that exactly two parties record z = -1, i.e. exactly one
/// qubit sits in the excited branch.
double p_two_z_minus(const State3& psi);

/// P(x_j = x_k | qubit z_party records z = -1), averaged over nothing:
/// one specific conditioning party.
double x_match_given_z_minus(const State3& psi, int z_party);

/// P(x_1 = x_2 = x_3).
double p_all_x_equal(const State3& psi);

/// Joint probability of one definite outcome triple under the given bases;
/// outcome entries are +1 or -1 Pauli eigenvalues.
double outcome_probability(const State3& psi, const std::array<Basis, 3>& bases,
                           const std::array<int, 3>& outcomes);

} // namespace ghzw::qubit
