#include "ghzw/optics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace ghzw::optics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double abs2(const Complex& z) {
    return z.real() * z.real() + z.imag() * z.imag();
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

void require_distinct(const std::vector<ModeId>& modes) {
    for (std::size_t i = 0; i < modes.size(); ++i)
        for (std::size_t j = i + 1; j < modes.size(); ++j)
            if (modes[i].index == modes[j].index)
                throw UsageError("duplicate mode '" + modes[i].label + "'");
}

std::string fresh_loss_label(const StateVector& state, const ModeId& mode) {
    // Registry size makes the label unique within this state's lineage.
    return "~loss:" + mode.label + ":" +
           std::to_string(state.registry().size());
}

} // namespace

std::size_t ClickPattern::click_count() const {
    std::size_t n = 0;
    for (bool c : clicks) n += c ? 1 : 0;
    return n;
}

std::string ClickPattern::to_string() const {
    std::string s;
    s.reserve(clicks.size());
    for (bool c : clicks) s.push_back(c ? '1' : '0');
    return s;
}

ModeUnitary beam_splitter_unitary(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    ModeUnitary u;
    u.dim = 2;
    u.coeff = {Complex(c, 0), Complex(0, s), Complex(0, s), Complex(c, 0)};
    return u;
}

ModeUnitary dft_unitary(std::size_t m) {
    ModeUnitary u;
    u.dim = m;
    u.coeff.resize(m * m);
    const double inv = 1.0 / std::sqrt(double(m));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
            u.coeff[j * m + k] =
                std::polar(inv, kTwoPi * double(j) * double(k) / double(m));
    return u;
}

StateVector apply_mode_unitary(const StateVector& state,
                               const std::vector<ModeId>& modes,
                               const ModeUnitary& u, double* leakage) {
    if (modes.size() != u.dim)
        throw UsageError("apply_mode_unitary: mode/matrix size mismatch");
    for (const auto& m : modes) fock::require_mode(state, m);
    require_distinct(modes);

    const std::size_t k = modes.size();
    const auto& reg = state.registry();
    std::vector<fock::Term> out;
    double leaked = 0.0;

    // Expand prod_j (sum_i U[i][j] a_i+)^(n_j) term by term. Exponents stay
    // tiny (total photons <= k * n_max), so a map-backed polynomial is fine.
    using Monomial = std::vector<std::uint8_t>;
    for (const auto& [occ, amp] : state.terms()) {
        std::map<Monomial, Complex> poly;
        poly[Monomial(k, 0)] = Complex(1.0, 0.0);
        double in_fact = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            const int nj = occ[modes[j].index];
            in_fact *= factorial(nj);
            for (int rep = 0; rep < nj; ++rep) {
                std::map<Monomial, Complex> next;
                for (const auto& [mono, c] : poly) {
                    for (std::size_t i = 0; i < k; ++i) {
                        const Complex& uij = u.at(i, j);
                        if (uij == Complex{0.0, 0.0}) continue;
                        Monomial m2 = mono;
                        ++m2[i];
                        next[m2] += c * uij;
                    }
                }
                poly = std::move(next);
            }
        }
        const double in_norm = std::sqrt(in_fact);
        for (const auto& [mono, c] : poly) {
            double out_fact = 1.0;
            bool truncated = false;
            for (std::size_t i = 0; i < k; ++i) {
                if (mono[i] > reg.n_max(modes[i].index)) truncated = true;
                out_fact *= factorial(mono[i]);
            }
            const Complex a = amp * c * std::sqrt(out_fact) / in_norm;
            if (truncated) {
                leaked += abs2(a);
                continue;
            }
            fock::Occupation o = occ;
            for (std::size_t i = 0; i < k; ++i)
                o[modes[i].index] = mono[i];
            out.emplace_back(std::move(o), a);
        }
    }
    if (leakage) *leakage += leaked;
    return StateVector(reg, std::move(out));
}

StateVector phase_shift(const StateVector& state, const ModeId& mode, double phi) {
    fock::require_mode(state, mode);
    std::vector<fock::Term> out(state.terms().begin(), state.terms().end());
    for (auto& [occ, amp] : out)
        if (occ[mode.index] != 0)
            amp *= std::polar(1.0, phi * double(occ[mode.index]));
    return StateVector(state.registry(), std::move(out));
}

StateVector beam_splitter(const StateVector& state, const BeamSplitterSpec& spec,
                          double* leakage) {
    if (spec.mode_a.index == spec.mode_b.index)
        throw UsageError("beam_splitter: identical modes");
    if (std::abs(spec.theta) > std::numbers::pi / 2 + 1e-12)
        throw UsageError("beam_splitter: mixing angle outside [-pi/2, pi/2]");
    return apply_mode_unitary(state, {spec.mode_a, spec.mode_b},
                              beam_splitter_unitary(spec.theta), leakage);
}

StateVector multiport(const StateVector& state, const MultiportSpec& spec,
                      double* leakage) {
    if (spec.modes.size() < 2)
        throw UsageError("multiport: needs at least two modes");
    return apply_mode_unitary(state, spec.modes, dft_unitary(spec.modes.size()),
                              leakage);
}

StateVector apply_loss(const StateVector& state, const ModeId& mode, double eta,
                       const ModeId& loss_mode) {
    fock::require_mode(state, mode);
    fock::require_mode(state, loss_mode);
    if (eta < 0.0 || eta > 1.0)
        throw UsageError("apply_loss: eta outside [0,1]");
    if (!state.mode_is_vacuum(loss_mode))
        throw UsageError("apply_loss: loss mode must start in vacuum");
    if (eta == 0.0) return state;
    const double t = std::sqrt(1.0 - eta);
    const double r = std::sqrt(eta);
    ModeUnitary u;
    u.dim = 2;
    u.coeff = {Complex(t, 0), Complex(0, r), Complex(0, r), Complex(t, 0)};
    return apply_mode_unitary(state, {mode, loss_mode}, u, nullptr);
}

namespace {

struct ThresholdSplit {
    StateVector measured;   // state after the loss coupling (if any)
    ModeId mode;            // mode the ideal detector actually sees
    double p_vacuum = 0.0;  // weight of the zero-quanta sector
    double p_occupied = 0.0; // weight of everything else; the two need not
                             // sum to one when upstream truncation leaked
};

ThresholdSplit prepare_threshold(const StateVector& state, const ModeId& mode,
                                 const DetectorModel& det) {
    if (det.loss < 0 || det.loss > 1 || det.dark < 0 || det.dark > 1)
        throw UsageError("detector probabilities outside [0,1]");
    ThresholdSplit out;
    if (det.loss > 0.0) {
        const std::string label = fresh_loss_label(state, mode);
        auto reg = state.registry().extended({label},
                                             state.registry().n_max(mode.index));
        StateVector lifted = state.extended(reg);
        out.measured = apply_loss(lifted, mode, det.loss, reg.mode(label));
        out.mode = mode;
    } else {
        out.measured = state;
        out.mode = mode;
    }
    out.p_vacuum = occupation_probability(out.measured, out.mode, 0);
    out.p_occupied = out.measured.norm_squared() - out.p_vacuum;
    if (out.p_occupied < 0.0) out.p_occupied = 0.0;
    return out;
}

} // namespace

std::vector<DetectionBranch> detect_threshold(const StateVector& state,
                                              const ModeId& mode,
                                              const DetectorModel& det) {
    ThresholdSplit split = prepare_threshold(state, mode, det);
    std::vector<DetectionBranch> branches;
    constexpr double eps = 1e-26; // on squared weights

    if (split.p_vacuum > eps) {
        auto proj = fock::project_number(split.measured, split.mode, 0);
        if ((1.0 - det.dark) * split.p_vacuum > eps)
            branches.push_back(
                {false, (1.0 - det.dark) * split.p_vacuum, proj.state});
        if (det.dark * split.p_vacuum > eps)
            branches.push_back({true, det.dark * split.p_vacuum, proj.state});
    }
    if (split.p_occupied > eps) {
        auto proj = fock::project_occupied(split.measured, split.mode);
        branches.push_back({true, split.p_occupied, proj.state});
    }
    return branches;
}

double click_probability(const StateVector& state, const ModeId& mode,
                         const DetectorModel& det) {
    ThresholdSplit split = prepare_threshold(state, mode, det);
    const double total = split.p_vacuum + split.p_occupied;
    if (total <= 0.0) return det.dark;
    return det.dark + (1.0 - det.dark) * split.p_occupied / total;
}

DetectionBranch sample_detection(const StateVector& state, const ModeId& mode,
                                 const DetectorModel& det, ShotRng& rng) {
    ThresholdSplit split = prepare_threshold(state, mode, det);
    const double total = split.p_vacuum + split.p_occupied;
    const double u = rng.uniform() * total;
    // Branch order matches detect_threshold: no-click, dark-on-vacuum, click.
    if (u < (1.0 - det.dark) * split.p_vacuum) {
        auto proj = fock::project_number(split.measured, split.mode, 0);
        return {false, (1.0 - det.dark) * split.p_vacuum, proj.state};
    }
    if (u < split.p_vacuum) {
        auto proj = fock::project_number(split.measured, split.mode, 0);
        return {true, det.dark * split.p_vacuum, proj.state};
    }
    auto proj = fock::project_occupied(split.measured, split.mode);
    return {true, split.p_occupied, proj.state};
}

std::vector<PatternBranch>
click_pattern_distribution(const StateVector& state,
                           const std::vector<std::pair<ModeId, DetectorModel>>& detectors) {
    {
        std::vector<ModeId> modes;
        modes.reserve(detectors.size());
        for (const auto& [m, d] : detectors) modes.push_back(m);
        require_distinct(modes);
    }
    std::vector<PatternBranch> branches{{ClickPattern{}, 1.0, state}};
    for (const auto& [mode, det] : detectors) {
        std::vector<PatternBranch> next;
        next.reserve(branches.size() * 2);
        for (const auto& b : branches) {
            for (const auto& d : detect_threshold(b.state, mode, det)) {
                PatternBranch nb;
                nb.pattern = b.pattern;
                nb.pattern.clicks.push_back(d.click);
                nb.probability = b.probability * d.probability;
                nb.state = d.state;
                if (nb.probability > 1e-15) next.push_back(std::move(nb));
            }
        }
        branches = std::move(next);
    }
    return branches;
}

double pattern_probability(const std::vector<PatternBranch>& branches,
                           const ClickPattern& pattern) {
    double p = 0.0;
    for (const auto& b : branches)
        if (b.pattern == pattern) p += b.probability;
    return p;
}

} // namespace ghzw::optics
