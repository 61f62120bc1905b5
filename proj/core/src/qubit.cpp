#include "ghzw/qubit.hpp"

#include <cmath>

namespace ghzw::qubit {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

/// Rotate one qubit so that computational outcomes become eigenvalue
/// outcomes of the requested basis: row 0 of the 2x2 matrix is the +1
/// eigenbra, row 1 the -1 eigenbra.
State3 rotate_to_basis(const State3& psi, int party, Basis basis) {
    if (basis == Basis::Z) return psi;
    Complex m00, m01, m10, m11;
    if (basis == Basis::X) {
        m00 = {kInvSqrt2, 0}; m01 = {kInvSqrt2, 0};
        m10 = {kInvSqrt2, 0}; m11 = {-kInvSqrt2, 0};
    } else { // Y: <+i| = (<0| - i<1|)/sqrt(2)
        m00 = {kInvSqrt2, 0}; m01 = {0, -kInvSqrt2};
        m10 = {kInvSqrt2, 0}; m11 = {0, kInvSqrt2};
    }
    State3 out{};
    const int bit = 2 - party; // party 0 holds the top bit
    for (int idx = 0; idx < 8; ++idx) {
        const int lo = idx & ~(1 << bit);
        const int hi = idx | (1 << bit);
        if (idx & (1 << bit)) continue;
        const Complex a0 = psi[lo];
        const Complex a1 = psi[hi];
        out[lo] = m00 * a0 + m01 * a1;
        out[hi] = m10 * a0 + m11 * a1;
    }
    return out;
}

int eigenvalue(int idx, int party) {
    const int bit = 2 - party;
    return (idx >> bit) & 1 ? -1 : +1;
}

} // namespace

State3 ghz_state(double phase) {
    State3 s{};
    s[0b000] = {kInvSqrt2, 0};
    s[0b111] = std::polar(kInvSqrt2, phase);
    return s;
}

State3 w_state(double a2, double a3) {
    State3 s{};
    const double inv = 1.0 / std::sqrt(3.0);
    s[0b100] = {inv, 0};
    s[0b010] = std::polar(inv, a2);
    s[0b001] = std::polar(inv, a3);
    return s;
}

State3 product_zero() {
    State3 s{};
    s[0b000] = {1, 0};
    return s;
}

double correlation(const State3& psi, const std::array<Basis, 3>& bases) {
    State3 r = psi;
    for (int p = 0; p < 3; ++p) r = rotate_to_basis(r, p, bases[p]);
    double e = 0.0;
    for (int idx = 0; idx < 8; ++idx) {
        const double w = std::norm(r[idx]);
        if (w == 0.0) continue;
        e += w * eigenvalue(idx, 0) * eigenvalue(idx, 1) * eigenvalue(idx, 2);
    }
    return e;
}

double outcome_probability(const State3& psi, const std::array<Basis, 3>& bases,
                           const std::array<int, 3>& outcomes) {
    State3 r = psi;
    for (int p = 0; p < 3; ++p) r = rotate_to_basis(r, p, bases[p]);
    int idx = 0;
    for (int p = 0; p < 3; ++p) {
        if (outcomes[p] != 1 && outcomes[p] != -1)
            throw UsageError("outcomes must be +1 or -1");
        if (outcomes[p] == -1) idx |= 1 << (2 - p);
    }
    return std::norm(r[idx]);
}

double p_two_z_minus(const State3& psi) {
    // Recorded z is -1 exactly when the qubit is NOT excited, so "two
    // parties answer -1" means exactly one set bit.
    double p = 0.0;
    for (int idx = 0; idx < 8; ++idx) {
        const int ones = ((idx >> 2) & 1) + ((idx >> 1) & 1) + (idx & 1);
        if (ones == 1) p += std::norm(psi[idx]);
    }
    return p;
}

double x_match_given_z_minus(const State3& psi, int z_party) {
    if (z_party < 0 || z_party > 2)
        throw UsageError("party index out of range");
    const int bit = 2 - z_party;
    // Condition on the z_party qubit being unexcited (recorded z = -1).
    State3 cond{};
    double pz = 0.0;
    for (int idx = 0; idx < 8; ++idx) {
        if ((idx >> bit) & 1) continue;
        cond[idx] = psi[idx];
        pz += std::norm(psi[idx]);
    }
    if (pz <= 0.0)
        throw NumericalError("conditioning event has probability zero");
    const double inv = 1.0 / std::sqrt(pz);
    for (auto& a : cond) a *= inv;

    std::array<int, 2> others{};
    int k = 0;
    for (int p = 0; p < 3; ++p)
        if (p != z_party) others[k++] = p;
    State3 r = cond;
    r = rotate_to_basis(r, others[0], Basis::X);
    r = rotate_to_basis(r, others[1], Basis::X);
    double match = 0.0;
    for (int idx = 0; idx < 8; ++idx) {
        const double w = std::norm(r[idx]);
        if (w == 0.0) continue;
        if (eigenvalue(idx, others[0]) == eigenvalue(idx, others[1])) match += w;
    }
    return match;
}

double p_all_x_equal(const State3& psi) {
    State3 r = psi;
    for (int p = 0; p < 3; ++p) r = rotate_to_basis(r, p, Basis::X);
    double p_eq = 0.0;
    for (int idx : {0b000, 0b111}) p_eq += std::norm(r[idx]);
    return p_eq;
}

} // namespace ghzw::qubit
