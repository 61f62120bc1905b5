#include "ghzw/protocols.hpp"

#include "ghzw/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace ghzw::protocols {

namespace {

constexpr double kPi = std::numbers::pi;

void check_p_c(double p_c) {
    if (!(p_c > 0.0) || p_c > 0.2)
        throw UsageError("excitation probability must lie in (0, 0.2]");
}

std::string label_i(const char* stem, int i) {
    return std::string(stem) + std::to_string(i);
}

StateVector tensor3(const StateVector& a, const StateVector& b,
                    const StateVector& c) {
    return fock::tensor(fock::tensor(a, b), c);
}

} // namespace

StateVector apply_weak_excitation(const StateVector& state, const ModeId& ensemble,
                                  const ModeId& photon, double p_c, double phase) {
    check_p_c(p_c);
    fock::require_mode(state, ensemble);
    fock::require_mode(state, photon);
    if (state.registry().n_max(ensemble.index) < 2 ||
        state.registry().n_max(photon.index) < 2)
        throw ConfigError("weak excitation needs n_max >= 2 on both modes");

    auto single = fock::apply_create(fock::apply_create(state, ensemble).state,
                                     photon).state;
    auto twice = fock::apply_create(fock::apply_create(single, ensemble).state,
                                    photon).state;
    return fock::superpose({
        {fock::Complex(1.0, 0.0), state},
        {std::polar(std::sqrt(p_c), phase), single},
        {std::polar(p_c / 2.0, 2.0 * phase), twice},
    });
}

StateVector raman_excite(const StateVector& state, const ModeId& ensemble,
                         const ModeId& photon, const ExcitationParams& params) {
    if (!state.mode_is_vacuum(photon))
        throw UsageError("raman_excite: photon mode must start in vacuum");
    return fock::normalize(
        apply_weak_excitation(state, ensemble, photon, params.p_c, params.phase));
}

double pair_effective_phase(double channel_phase, int herald_output) {
    // The symmetric splitter puts +i on the cross path, so heralding at the
    // first output leaves phase + pi/2 between the branches, at the second
    // output phase - pi/2.
    return herald_output == 0 ? channel_phase + kPi / 2 : channel_phase - kPi / 2;
}

HeraldResult prepare_pair(const ExcitationParams& excitation,
                          const optics::DetectorModel& detector,
                          const PairLabels& labels, int herald_output, int n_max) {
    if (herald_output != 0 && herald_output != 1)
        throw UsageError("prepare_pair: herald output must be 0 or 1");
    ModeRegistry reg({labels.left, labels.right, labels.stokes_left,
                      labels.stokes_right},
                     n_max);
    StateVector s = fock::vacuum(reg);
    s = raman_excite(s, reg.mode(labels.left), reg.mode(labels.stokes_left),
                     {excitation.p_c, 0.0});
    s = raman_excite(s, reg.mode(labels.right), reg.mode(labels.stokes_right),
                     {excitation.p_c, excitation.phase});
    s = optics::beam_splitter(
        s, {reg.mode(labels.stokes_left), reg.mode(labels.stokes_right), kPi / 4});

    auto branches = optics::click_pattern_distribution(
        s, {{reg.mode(labels.stokes_left), detector},
            {reg.mode(labels.stokes_right), detector}});

    optics::ClickPattern want{{herald_output == 0, herald_output == 1}};
    HeraldResult out;
    out.pattern = want;
    out.effective_phase = pair_effective_phase(excitation.phase, herald_output);
    for (const auto& b : branches) {
        if (b.pattern == want) {
            out.herald_probability += b.probability;
            out.branches.emplace_back(b.probability, b.state);
        }
    }
    if (out.branches.empty()) {
        out.success = false;
        out.herald_probability = 0.0;
        return out;
    }
    std::sort(out.branches.begin(), out.branches.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    out.success = true;
    out.state = out.branches.front().second;
    return out;
}

HeraldResult prepare_w_fock(double p_c, double phi_a2, double phi_a3,
                            const optics::DetectorModel& detector,
                            const std::array<std::string, 3>& labels,
                            const std::string& stokes_label, int n_max) {
    ModeRegistry reg({labels[0], labels[1], labels[2], stokes_label}, n_max);
    StateVector s = fock::vacuum(reg);
    const std::array<double, 3> phases{0.0, phi_a2, phi_a3};
    for (int i = 0; i < 3; ++i)
        s = apply_weak_excitation(s, reg.mode(labels[i]), reg.mode(stokes_label),
                                  p_c, phases[i]);
    s = fock::normalize(s);

    HeraldResult out;
    out.pattern = optics::ClickPattern{{true}};
    out.effective_phase = 0.0; // one shared detector adds only a global phase
    for (const auto& b : optics::detect_threshold(s, reg.mode(stokes_label),
                                                  detector)) {
        if (!b.click) continue;
        out.herald_probability += b.probability;
        out.branches.emplace_back(b.probability, b.state);
    }
    if (out.branches.empty()) {
        out.success = false;
        out.herald_probability = 0.0;
        return out;
    }
    std::sort(out.branches.begin(), out.branches.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    out.success = true;
    out.state = out.branches.front().second;
    return out;
}

StateVector prepare_ghz_raw(const StateVector& pair1, const StateVector& pair2,
                            const StateVector& pair3) {
    return tensor3(pair1, pair2, pair3);
}

StateVector prepare_w_raw(const StateVector& pair1, const StateVector& pair2,
                          const StateVector& pair3, const StateVector& w_fock) {
    return fock::tensor(tensor3(pair1, pair2, pair3), w_fock);
}

CoincidenceComponent extract_coincidence_component(
    const StateVector& state,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    const auto& reg = state.registry();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> idx;
    idx.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        const auto ia = reg.mode(a).index;
        const auto ib = reg.mode(b).index;
        if (ia == ib)
            throw UsageError("coincidence pair uses one mode twice");
        idx.emplace_back(ia, ib);
    }
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j)
            if (idx[i].first == idx[j].first || idx[i].first == idx[j].second ||
                idx[i].second == idx[j].first || idx[i].second == idx[j].second)
                throw UsageError("coincidence pairs must be disjoint");

    std::vector<fock::Term> kept;
    double weight = 0.0;
    for (const auto& [occ, amp] : state.terms()) {
        bool ok = true;
        for (const auto& [ia, ib] : idx) {
            if (occ[ia] + occ[ib] != 1) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        weight += std::norm(amp);
        kept.emplace_back(occ, amp);
    }
    if (weight < fock::kZeroNormThreshold * fock::kZeroNormThreshold)
        throw NumericalError("coincidence component has zero weight");
    StateVector component(reg, std::move(kept));
    return CoincidenceComponent{weight, fock::normalize(component)};
}

StateVector retrieve(const StateVector& state, const ModeId& ensemble,
                     const ModeId& photon, const RetrievalParams& params) {
    fock::require_mode(state, ensemble);
    fock::require_mode(state, photon);
    if (params.efficiency < 0.0 || params.efficiency > 1.0)
        throw UsageError("retrieval efficiency outside [0,1]");
    if (!state.mode_is_vacuum(photon))
        throw UsageError("retrieve: photon mode must start in vacuum");

    const auto& reg = state.registry();
    std::vector<fock::Term> out;
    out.reserve(state.term_count());
    for (const auto& [occ, amp] : state.terms()) {
        fock::Occupation o = occ;
        const auto n = o[ensemble.index];
        if (n > reg.n_max(photon.index))
            throw NumericalError("retrieve: excitation exceeds photon cutoff");
        o[photon.index] = n;
        o[ensemble.index] = 0;
        out.emplace_back(std::move(o), amp);
    }
    StateVector swapped(reg, std::move(out));
    if (params.efficiency >= 1.0) return swapped;

    const std::string loss_label =
        "~ret:" + photon.label + ":" + std::to_string(reg.size());
    auto reg2 = reg.extended({loss_label}, reg.n_max(photon.index));
    StateVector lifted = swapped.extended(reg2);
    return optics::apply_loss(lifted, photon, 1.0 - params.efficiency,
                              reg2.mode(loss_label));
}

// ------------------------------------------------------------ ideal states

StateVector ideal_pair_state(double phase, const std::string& left,
                             const std::string& right, int n_max) {
    ModeRegistry reg({left, right}, n_max);
    const double inv = 1.0 / std::sqrt(2.0);
    std::vector<fock::Term> terms{
        {{1, 0}, fock::Complex(inv, 0.0)},
        {{0, 1}, std::polar(inv, phase)},
    };
    return StateVector(reg, std::move(terms));
}

StateVector ideal_ghz_raw(const ChannelPhases& phases, int n_max) {
    const std::array<double, 3> p{phases.phi1, phases.phi2, phases.phi3};
    StateVector s = ideal_pair_state(p[0], "L1", "R1", n_max);
    for (int i = 2; i <= 3; ++i)
        s = fock::tensor(s, ideal_pair_state(p[i - 1], label_i("L", i),
                                             label_i("R", i), n_max));
    return s;
}

StateVector ideal_ghz_component(const ChannelPhases& phases, int n_max) {
    return extract_coincidence_component(ideal_ghz_raw(phases, n_max),
                                         ghz_coincidence_pairs())
        .component;
}

StateVector ideal_w_fock(const ChannelPhases& phases, int n_max) {
    ModeRegistry reg({"A1", "A2", "A3"}, n_max);
    const double inv = 1.0 / std::sqrt(3.0);
    std::vector<fock::Term> terms{
        {{1, 0, 0}, fock::Complex(inv, 0.0)},
        {{0, 1, 0}, std::polar(inv, phases.phi_a2)},
        {{0, 0, 1}, std::polar(inv, phases.phi_a3)},
    };
    return StateVector(reg, std::move(terms));
}

StateVector ideal_w_raw(const ChannelPhases& phases, int n_max) {
    const std::array<double, 3> p{phases.phi1, phases.phi2, phases.phi3};
    StateVector s = ideal_pair_state(p[0], "B1", "C1", n_max);
    for (int i = 2; i <= 3; ++i)
        s = fock::tensor(s, ideal_pair_state(p[i - 1], label_i("B", i),
                                             label_i("C", i), n_max));
    return fock::tensor(s, ideal_w_fock(phases, n_max));
}

StateVector ideal_w_component(const ChannelPhases& phases, int n_max) {
    return extract_coincidence_component(ideal_w_raw(phases, n_max),
                                         w_coincidence_pairs())
        .component;
}

std::vector<std::pair<std::string, std::string>> ghz_coincidence_pairs() {
    // Party i collects the left ensemble of pair i and the right ensemble of
    // pair i+1 (cyclic); only the all-left and all-right branches then place
    // one excitation in every group.
    return {{"L1", "R2"}, {"L2", "R3"}, {"L3", "R1"}};
}

std::vector<std::pair<std::string, std::string>> w_coincidence_pairs() {
    return {{"A1", "B1"}, {"A2", "B2"}, {"A3", "B3"}};
}

StateVector pair_target_state(double channel_phase, int herald_output,
                              const std::string& left, const std::string& right,
                              int n_max) {
    return ideal_pair_state(pair_effective_phase(channel_phase, herald_output),
                            left, right, n_max);
}

// ------------------------------------------------------------------ timing

double expected_time(Protocol protocol, const TimingParams& timing, double eta) {
    if (timing.t0 <= 0.0 || timing.t1 <= 0.0)
        throw UsageError("preparation times must be positive");
    if (eta < 0.0 || eta >= 1.0)
        throw UsageError("expected_time: eta must lie in [0, 1)");
    const double denom = std::pow(1.0 - eta, 3);
    switch (protocol) {
        case Protocol::ghz:
            return 4.0 * timing.t0 / denom;
        case Protocol::w:
            return 4.0 * std::max(timing.t0, timing.t1) / denom;
        case Protocol::pair:
            throw UsageError("pair preparation has no closed-form time; "
                             "use the enumerated attempt count");
    }
    throw UsageError("unknown protocol");
}

namespace {

/// Probability that every party station registers exactly one click when the
/// normalized coincidence component is retrieved and measured. Plate phases
/// do not matter for validity, so the stations are modeled as a bare
/// balanced splitter followed by two threshold detectors.
double station_validity_probability(
    const StateVector& component,
    const std::array<std::pair<std::string, std::string>, 3>& party_modes,
    const optics::DetectorModel& detector) {
    StateVector s = component;
    std::vector<std::string> photon_labels;
    for (const auto& [a, b] : party_modes) {
        photon_labels.push_back("ph:" + a);
        photon_labels.push_back("ph:" + b);
    }
    auto reg = s.registry().extended(photon_labels);
    s = s.extended(reg);
    std::vector<std::pair<ModeId, optics::DetectorModel>> queries;
    for (const auto& [a, b] : party_modes) {
        s = retrieve(s, reg.mode(a), reg.mode("ph:" + a));
        s = retrieve(s, reg.mode(b), reg.mode("ph:" + b));
        s = optics::beam_splitter(
            s, {reg.mode("ph:" + a), reg.mode("ph:" + b), kPi / 4});
        queries.emplace_back(reg.mode("ph:" + a), detector);
        queries.emplace_back(reg.mode("ph:" + b), detector);
    }
    double valid = 0.0;
    for (const auto& b : optics::click_pattern_distribution(s, queries)) {
        bool ok = true;
        for (int party = 0; party < 3; ++party) {
            const bool ca = b.pattern.clicks[2 * party];
            const bool cb = b.pattern.clicks[2 * party + 1];
            if (ca == cb) { // zero or two clicks at this station
                ok = false;
                break;
            }
        }
        if (ok) valid += b.probability;
    }
    return valid;
}

} // namespace

double coincidence_success_probability(Protocol protocol,
                                       const optics::DetectorModel& detector,
                                       const ExcitationParams& excitation) {
    switch (protocol) {
        case Protocol::pair: {
            // Any single-click pattern heralds a usable pair.
            ModeRegistry reg({"L", "R", "sL", "sR"});
            StateVector s = fock::vacuum(reg);
            s = raman_excite(s, reg.mode("L"), reg.mode("sL"),
                             {excitation.p_c, 0.0});
            s = raman_excite(s, reg.mode("R"), reg.mode("sR"),
                             {excitation.p_c, excitation.phase});
            s = optics::beam_splitter(s,
                                      {reg.mode("sL"), reg.mode("sR"), kPi / 4});
            auto dist = optics::click_pattern_distribution(
                s, {{reg.mode("sL"), detector}, {reg.mode("sR"), detector}});
            return optics::pattern_probability(dist,
                                               optics::ClickPattern{{true, false}}) +
                   optics::pattern_probability(dist,
                                               optics::ClickPattern{{false, true}});
        }
        case Protocol::ghz: {
            auto extracted = extract_coincidence_component(
                ideal_ghz_raw(ChannelPhases{}), ghz_coincidence_pairs());
            const double valid = station_validity_probability(
                extracted.component,
                {{{"L1", "R1"}, {"L2", "R2"}, {"L3", "R3"}}}, detector);
            return extracted.weight * valid;
        }
        case Protocol::w: {
            auto extracted = extract_coincidence_component(
                ideal_w_raw(ChannelPhases{}), w_coincidence_pairs());
            const double valid = station_validity_probability(
                extracted.component,
                {{{"B1", "A1"}, {"B2", "A2"}, {"B3", "A3"}}}, detector);
            return extracted.weight * valid;
        }
    }
    throw UsageError("unknown protocol");
}

AttemptStats sample_attempts(double success_probability, int shots,
                             std::uint64_t seed, std::uint64_t stream,
                             int threads, std::uint64_t attempt_cap) {
    if (shots < 1) throw UsageError("sample_attempts: shots must be >= 1");
    if (threads < 1) throw UsageError("sample_attempts: threads must be >= 1");
    if (attempt_cap < 1) throw UsageError("sample_attempts: cap must be >= 1");

    const double p = success_probability;
    AttemptStats stats;
    stats.success_probability = p;
    stats.samples.assign(static_cast<std::size_t>(shots), 0);

    std::atomic<bool> capped{false};

    auto worker = [&](int begin, int end) {
        for (int shot = begin; shot < end; ++shot) {
            ShotRng rng(seed, stream, static_cast<std::uint64_t>(shot));
            std::uint64_t attempts = 0;
            bool success = false;
            while (!success) {
                if (++attempts > attempt_cap) {
                    capped.store(true);
                    return;
                }
                success = rng.uniform() < p;
            }
            stats.samples[static_cast<std::size_t>(shot)] =
                static_cast<std::uint32_t>(attempts);
        }
    };

    if (threads == 1) {
        worker(0, shots);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (shots + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(shots, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    if (capped.load())
        throw NumericalError("sample_attempts: attempt cap exhausted "
                             "(success probability too small?)");

    double sum = 0.0;
    for (auto a : stats.samples) sum += a;
    stats.mean = sum / shots;
    double var = 0.0;
    for (auto a : stats.samples) {
        const double d = a - stats.mean;
        var += d * d;
    }
    stats.stderr_ = shots > 1 ? std::sqrt(var / (shots - 1) / shots) : 0.0;
    return stats;
}

AttemptStats simulate_attempts(Protocol protocol,
                               const optics::DetectorModel& detector,
                               const ExcitationParams& excitation, int shots,
                               std::uint64_t seed, int threads,
                               std::uint64_t attempt_cap) {
    const double p = coincidence_success_probability(protocol, detector,
                                                     excitation);
    const std::uint64_t stream = 100 + static_cast<std::uint64_t>(protocol);
    return sample_attempts(p, shots, seed, stream, threads, attempt_cap);
}

std::array<double, 3> ghz_compensation(const std::array<double, 3>& pair_phases) {
    return {-pair_phases[0], -pair_phases[1], -pair_phases[2]};
}

std::array<double, 3> w_compensation(const std::array<double, 3>& pair_phases,
                                     double a2, double a3) {
    return {-pair_phases[0], -(a2 + pair_phases[1]), -(a3 + pair_phases[2])};
}

} // namespace ghzw::protocols
