#include "ghzw/belltest.hpp"

#include "ghzw/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace ghzw::bell {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2;

struct PartyLabels {
    std::string zero;
    std::string one;
    std::optional<std::string> flag;
};

std::array<PartyLabels, 3> layout(Protocol protocol) {
    switch (protocol) {
        case Protocol::ghz:
            return {PartyLabels{"L1", "R1", std::nullopt},
                    PartyLabels{"L2", "R2", std::nullopt},
                    PartyLabels{"L3", "R3", std::nullopt}};
        case Protocol::w:
            return {PartyLabels{"B1", "A1", "C1"},
                    PartyLabels{"B2", "A2", "C2"},
                    PartyLabels{"B3", "A3", "C3"}};
        case Protocol::pair:
            throw UsageError("bell tests need a three-party protocol");
    }
    throw UsageError("unknown protocol");
}

qubit::Basis to_basis(MeasurementSetting s) {
    switch (s) {
        case MeasurementSetting::X: return qubit::Basis::X;
        case MeasurementSetting::Y: return qubit::Basis::Y;
        case MeasurementSetting::Z: return qubit::Basis::Z;
    }
    throw UsageError("unknown setting");
}

qubit::State3 abstract_state(Protocol protocol) {
    switch (protocol) {
        case Protocol::ghz: return qubit::ghz_state();
        case Protocol::w: return qubit::w_state();
        case Protocol::pair:
            throw UsageError("bell tests need a three-party protocol");
    }
    throw UsageError("unknown protocol");
}

std::uint64_t settings_stream(const std::array<MeasurementSetting, 3>& s,
                              std::uint64_t offset) {
    std::uint64_t id = 0;
    for (auto v : s) id = id * 3 + static_cast<std::uint64_t>(v);
    return 200 + offset * 32 + id;
}

// --------------------------------------------------------- measurement plan

struct PartyPlan {
    MeasurementSetting setting = MeasurementSetting::X;
    int bit_a = -1, bit_b = -1; // dual-rail detectors
    int bit_c = -1;             // flag detector (Z)
};

struct Plan {
    StateVector state;
    std::vector<std::pair<ModeId, optics::DetectorModel>> detectors;
    std::array<PartyPlan, 3> parties;
    bool erasure_active = false;
    int erasure_first_bit = 0;
    int erasure_count = 0;
    std::vector<int> erasure_party; // flag order -> 0-based party
    /// Every term of the prepared state holds at least one excitation among
    /// the erased flags (makes a no-click erasure outcome impossible with
    /// ideal detectors).
    bool flag_excitation_guaranteed = false;
    /// Some term holds one; a silent erasure then either means a z station
    /// accounted for the excitation or the which-path record was lost.
    bool flag_excitation_possible = false;
    bool ideal_detectors = false;
};

Plan build_plan(const StateVector& prepared,
                const std::array<MeasurementSetting, 3>& settings,
                const BellConfig& cfg,
                const std::array<double, 3>& drift = {0.0, 0.0, 0.0}) {
    const auto lay = layout(cfg.protocol);
    const bool is_w = cfg.protocol == Protocol::w;
    StateVector s = prepared;

    for (int i = 0; i < 3; ++i) {
        if (!s.registry().has(lay[i].zero) || !s.registry().has(lay[i].one))
            throw UsageError("prepared state lacks the modes of party " +
                             std::to_string(i + 1));
        if (settings[i] == MeasurementSetting::Z && !lay[i].flag)
            throw UsageError("sigma_z readout needs a flag ensemble "
                             "(W protocol only)");
    }

    std::vector<std::string> erased_flags;
    if (is_w)
        for (int i = 0; i < 3; ++i)
            if (settings[i] != MeasurementSetting::Z)
                erased_flags.push_back(*lay[i].flag);

    if (is_w && cfg.flag == FlagTreatment::abstract && !erased_flags.empty()) {
        std::vector<ModeId> modes;
        for (const auto& l : erased_flags) modes.push_back(s.registry().mode(l));
        s = delete_flag_modes(s, modes);
    }

    std::vector<std::string> photon_labels;
    for (int i = 0; i < 3; ++i) {
        if (settings[i] == MeasurementSetting::Z) {
            photon_labels.push_back("ph:" + *lay[i].flag);
        } else {
            photon_labels.push_back("ph:" + lay[i].zero);
            photon_labels.push_back("ph:" + lay[i].one);
        }
    }
    if (is_w && cfg.flag == FlagTreatment::erase)
        for (const auto& l : erased_flags) photon_labels.push_back("ph:" + l);

    auto reg = s.registry().extended(photon_labels);
    s = s.extended(reg);

    Plan plan;
    plan.ideal_detectors = cfg.detector.loss == 0.0 && cfg.detector.dark == 0.0 &&
                           cfg.retrieval.efficiency == 1.0;
    int bit = 0;
    for (int i = 0; i < 3; ++i) {
        PartyPlan& pp = plan.parties[i];
        pp.setting = settings[i];
        if (settings[i] == MeasurementSetting::Z) {
            const auto& flag = *lay[i].flag;
            s = protocols::retrieve(s, reg.mode(flag), reg.mode("ph:" + flag),
                                    cfg.retrieval);
            plan.detectors.emplace_back(reg.mode("ph:" + flag), cfg.detector);
            pp.bit_c = bit++;
        } else {
            const auto zero_ph = reg.mode("ph:" + lay[i].zero);
            const auto one_ph = reg.mode("ph:" + lay[i].one);
            s = protocols::retrieve(s, reg.mode(lay[i].zero), zero_ph,
                                    cfg.retrieval);
            s = protocols::retrieve(s, reg.mode(lay[i].one), one_ph,
                                    cfg.retrieval);
            const double chi = cfg.compensation[i] + drift[i] - kHalfPi -
                               PartyStation::plate_phase(settings[i]);
            s = optics::phase_shift(s, one_ph, chi);
            s = optics::beam_splitter(s, {zero_ph, one_ph, kPi / 4});
            plan.detectors.emplace_back(zero_ph, cfg.detector);
            plan.detectors.emplace_back(one_ph, cfg.detector);
            pp.bit_a = bit++;
            pp.bit_b = bit++;
        }
    }

    if (is_w && cfg.flag == FlagTreatment::erase && !erased_flags.empty()) {
        std::vector<ModeId> flag_photons;
        for (int i = 0; i < 3; ++i) {
            if (settings[i] == MeasurementSetting::Z) continue;
            const auto& flag = *lay[i].flag;
            const auto ph = reg.mode("ph:" + flag);
            s = protocols::retrieve(s, reg.mode(flag), ph, cfg.retrieval);
            flag_photons.push_back(ph);
            plan.erasure_party.push_back(i);
        }
        plan.flag_excitation_guaranteed = true;
        for (const auto& [occ, amp] : s.terms()) {
            int total = 0;
            for (const auto& m : flag_photons) total += occ[m.index];
            if (total == 0) plan.flag_excitation_guaranteed = false;
            else plan.flag_excitation_possible = true;
        }
        if (flag_photons.size() >= 2)
            s = optics::multiport(s, {flag_photons});
        plan.erasure_active = true;
        plan.erasure_first_bit = bit;
        plan.erasure_count = static_cast<int>(flag_photons.size());
        for (const auto& ph : flag_photons) {
            plan.detectors.emplace_back(ph, cfg.detector);
            ++bit;
        }
    }

    plan.state = std::move(s);
    return plan;
}

struct ShotOutcome {
    bool valid = false;
    std::array<int, 3> eigen{0, 0, 0}; // Pauli eigenvalues incl. corrections
    std::array<int, 3> z_rec{0, 0, 0}; // click-convention z, 0 if not Z
    std::array<int, 3> x_val{0, 0, 0}; // corrected x, 0 if not X/Y
};

ShotOutcome decode(const Plan& plan, const optics::ClickPattern& pattern) {
    ShotOutcome out;

    for (int i = 0; i < 3; ++i) {
        const PartyPlan& pp = plan.parties[i];
        if (pp.setting != MeasurementSetting::Z) continue;
        out.z_rec[i] = pattern.clicks[pp.bit_c] ? +1 : -1;
        out.eigen[i] = -out.z_rec[i];
    }

    std::array<int, 3> sign{1, 1, 1};
    if (plan.erasure_active) {
        int clicks = 0, where = -1;
        for (int i = 0; i < plan.erasure_count; ++i) {
            if (pattern.clicks[plan.erasure_first_bit + i]) {
                ++clicks;
                where = i;
            }
        }
        if (clicks > 1) return out; // dark-count artifact; discard
        if (clicks == 0 && plan.flag_excitation_possible) {
            bool claimed_by_z = false;
            for (int i = 0; i < 3; ++i)
                if (out.z_rec[i] == +1) claimed_by_z = true;
            if (!claimed_by_z) {
                // the excitation reached neither a z station nor the
                // erasure outputs: with ideal detection that is impossible,
                // otherwise its which-path record is lost and the shot
                // cannot be corrected
                if (plan.flag_excitation_guaranteed && plan.ideal_detectors)
                    throw NumericalError("erasure station: no click although "
                                         "an excitation was guaranteed");
                return out;
            }
        }
        if (clicks == 1 && plan.erasure_count == 2 && where == 1)
            sign[plan.erasure_party[0]] = -1;
        // three-port outcomes carry non-classical phases; no x correction.
    }

    for (int i = 0; i < 3; ++i) {
        const PartyPlan& pp = plan.parties[i];
        if (pp.setting == MeasurementSetting::Z) continue;
        const bool ca = pattern.clicks[pp.bit_a];
        const bool cb = pattern.clicks[pp.bit_b];
        if (ca == cb) return out; // zero or two clicks: no coincidence
        const int raw = ca ? +1 : -1;
        out.x_val[i] = raw * sign[i];
        out.eigen[i] = out.x_val[i];
    }
    out.valid = true;
    return out;
}

/// Run the sampler over shots with a fixed per-shot stream; fn must be
/// thread-safe and write only to its own shot slot.
template <typename Fn>
void run_shots(long shots, int threads, Fn&& fn) {
    if (threads <= 1) {
        for (long i = 0; i < shots; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const long chunk = (shots + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long begin = t * chunk;
        const long end = std::min(shots, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] {
            for (long i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

optics::ClickPattern sample_pattern(const Plan& plan, ShotRng& rng) {
    StateVector s = plan.state;
    optics::ClickPattern pattern;
    pattern.clicks.reserve(plan.detectors.size());
    for (const auto& [mode, det] : plan.detectors) {
        auto branch = optics::sample_detection(s, mode, det, rng);
        pattern.clicks.push_back(branch.click);
        s = std::move(branch.state);
    }
    return pattern;
}

void require_no_jitter(const BellConfig& cfg) {
    if (cfg.phase_jitter > 0.0)
        throw UsageError("phase jitter is a per-shot drift; only the "
                         "sampling engine supports it");
}

/// Drive one decoded trajectory per shot. With phase jitter the rail
/// phases drift per shot (drawn before the detector randomness), so the
/// measurement plan is rebuilt shot by shot.
template <typename PerShot>
void sample_outcomes(const StateVector& prepared,
                     const std::array<MeasurementSetting, 3>& settings,
                     const BellConfig& cfg, long shots, std::uint64_t seed,
                     std::uint64_t stream, PerShot&& per_shot) {
    if (cfg.phase_jitter <= 0.0) {
        const Plan plan = build_plan(prepared, settings, cfg);
        run_shots(shots, cfg.threads, [&](long shot) {
            ShotRng rng(seed, stream, static_cast<std::uint64_t>(shot));
            const auto pattern = sample_pattern(plan, rng);
            per_shot(shot, decode(plan, pattern));
        });
        return;
    }
    run_shots(shots, cfg.threads, [&](long shot) {
        ShotRng rng(seed, stream, static_cast<std::uint64_t>(shot));
        std::array<double, 3> drift{};
        for (auto& d : drift) d = (rng.uniform() - 0.5) * cfg.phase_jitter;
        const Plan plan = build_plan(prepared, settings, cfg, drift);
        const auto pattern = sample_pattern(plan, rng);
        per_shot(shot, decode(plan, pattern));
    });
}

/// Exact event masses: conditioning (incl. validity) and event within it.
template <typename CondF, typename EventF>
ProbabilityEstimate exact_event(const Plan& plan, CondF&& cond, EventF&& event) {
    double p_cond = 0.0, p_event = 0.0, p_valid = 0.0;
    for (const auto& b : optics::click_pattern_distribution(plan.state,
                                                            plan.detectors)) {
        const ShotOutcome o = decode(plan, b.pattern);
        if (!o.valid) continue;
        p_valid += b.probability;
        if (!cond(o)) continue;
        p_cond += b.probability;
        if (event(o)) p_event += b.probability;
    }
    if (p_cond < 1e-12)
        throw NumericalError("conditioning event has zero probability");
    ProbabilityEstimate est;
    est.value = p_event / p_cond;
    est.stderr_ = 0.0;
    est.shots = 0;
    est.valid_fraction = p_valid;
    est.engine = EngineKind::exact;
    return est;
}

struct EventCounts {
    long valid = 0, cond = 0, event = 0;
};

template <typename CondF, typename EventF>
EventCounts mc_event_counts(const StateVector& prepared,
                            const std::array<MeasurementSetting, 3>& settings,
                            const BellConfig& cfg, long shots,
                            std::uint64_t seed, std::uint64_t stream,
                            CondF&& cond, EventF&& event) {
    std::vector<std::uint8_t> marks(static_cast<std::size_t>(shots), 0);
    sample_outcomes(prepared, settings, cfg, shots, seed, stream,
                    [&](long shot, const ShotOutcome& o) {
                        if (!o.valid) return;
                        std::uint8_t m = 1;
                        if (cond(o)) {
                            m |= 2;
                            if (event(o)) m |= 4;
                        }
                        marks[static_cast<std::size_t>(shot)] = m;
                    });
    EventCounts c;
    for (auto m : marks) {
        if (m & 1) ++c.valid;
        if (m & 2) ++c.cond;
        if (m & 4) ++c.event;
    }
    return c;
}

ProbabilityEstimate estimate_from_counts(const EventCounts& c, long shots) {
    if (c.cond == 0)
        throw NumericalError("conditioning event never occurred in sample");
    ProbabilityEstimate est;
    est.value = double(c.event) / double(c.cond);
    est.stderr_ = std::sqrt(est.value * (1.0 - est.value) /
                            std::max<long>(1, c.cond));
    est.shots = shots;
    est.valid_fraction = double(c.valid) / double(shots);
    est.engine = EngineKind::montecarlo;
    return est;
}

void require_positive_shots(long shots) {
    if (shots < 1)
        throw UsageError("monte-carlo estimates need shots >= 1");
}

} // namespace

// ----------------------------------------------------------- station ops

double PartyStation::plate_phase(MeasurementSetting s) {
    switch (s) {
        case MeasurementSetting::X: return 0.0;
        case MeasurementSetting::Y: return kHalfPi;
        case MeasurementSetting::Z:
            throw UsageError("phase plate undefined for sigma_z readout");
    }
    throw UsageError("unknown setting");
}

std::vector<StationBranch> station_measure_xy(const StateVector& state,
                                              const PartyStation& station,
                                              MeasurementSetting setting) {
    if (setting == MeasurementSetting::Z)
        throw UsageError("station_measure_xy: use station_measure_z for sigma_z");
    const double chi = station.compensation - kHalfPi - PartyStation::plate_phase(setting);
    StateVector s = optics::phase_shift(state, station.one_mode, chi);
    s = optics::beam_splitter(s, {station.zero_mode, station.one_mode, kPi / 4});
    std::vector<StationBranch> out;
    for (const auto& b : optics::click_pattern_distribution(
             s, {{station.zero_mode, station.detector},
                 {station.one_mode, station.detector}})) {
        StationBranch sb;
        sb.probability = b.probability;
        sb.state = b.state;
        const bool ca = b.pattern.clicks[0];
        const bool cb = b.pattern.clicks[1];
        if (ca != cb) {
            sb.valid = true;
            sb.outcome = ca ? +1 : -1;
        }
        out.push_back(std::move(sb));
    }
    return out;
}

std::vector<StationBranch> station_measure_z(const StateVector& state,
                                             const PartyStation& station) {
    if (!station.flag_mode)
        throw UsageError("station_measure_z: party has no flag ensemble "
                         "(not a W-protocol party)");
    std::vector<StationBranch> out;
    for (const auto& b :
         optics::detect_threshold(state, *station.flag_mode, station.detector)) {
        StationBranch sb;
        sb.valid = true;
        sb.outcome = b.click ? +1 : -1;
        sb.probability = b.probability;
        sb.state = b.state;
        out.push_back(std::move(sb));
    }
    return out;
}

std::vector<ErasureBranch> erasure_station(const StateVector& state,
                                           const std::vector<ModeId>& flag_photons,
                                           const optics::DetectorModel& detector) {
    if (flag_photons.empty())
        throw UsageError("erasure_station: no flag modes");
    const int m = static_cast<int>(flag_photons.size());
    StateVector s = m >= 2 ? optics::multiport(state, {flag_photons}) : state;
    std::vector<std::pair<ModeId, optics::DetectorModel>> queries;
    for (const auto& f : flag_photons) queries.emplace_back(f, detector);

    std::vector<ErasureBranch> out;
    for (const auto& b : optics::click_pattern_distribution(s, queries)) {
        ErasureBranch eb;
        eb.probability = b.probability;
        eb.state = b.state;
        eb.x_sign.assign(m, 1);
        int clicks = 0, where = -1;
        for (int i = 0; i < m; ++i) {
            if (b.pattern.clicks[i]) {
                ++clicks;
                where = i;
            }
        }
        if (clicks == 0) {
            eb.outcome = -1;
        } else if (clicks == 1) {
            eb.outcome = where;
            if (m == 2 && where == 1) eb.x_sign[0] = -1;
        } else {
            eb.outcome = -2;
        }
        out.push_back(std::move(eb));
    }
    return out;
}

StateVector delete_flag_modes(const StateVector& state,
                              const std::vector<ModeId>& modes) {
    for (const auto& m : modes) fock::require_mode(state, m);
    std::vector<fock::Term> out;
    out.reserve(state.term_count());
    for (const auto& [occ, amp] : state.terms()) {
        fock::Occupation o = occ;
        for (const auto& m : modes) o[m.index] = 0;
        out.emplace_back(std::move(o), amp);
    }
    return fock::normalize(StateVector(state.registry(), std::move(out)));
}

// ----------------------------------------------------------------- engines

CorrelationEstimate exact_correlation(const StateVector& prepared,
                                      const std::array<MeasurementSetting, 3>& settings,
                                      const BellConfig& config) {
    require_no_jitter(config);
    const Plan plan = build_plan(prepared, settings, config);
    double p_valid = 0.0, acc = 0.0;
    for (const auto& b : optics::click_pattern_distribution(plan.state,
                                                            plan.detectors)) {
        const ShotOutcome o = decode(plan, b.pattern);
        if (!o.valid) continue;
        p_valid += b.probability;
        acc += b.probability * o.eigen[0] * o.eigen[1] * o.eigen[2];
    }
    if (p_valid < 1e-12)
        throw NumericalError("zero valid-coincidence probability");
    CorrelationEstimate est;
    est.settings = settings;
    est.value = acc / p_valid;
    est.stderr_ = 0.0;
    est.shots = 0;
    est.valid_fraction = p_valid;
    est.engine = EngineKind::exact;
    return est;
}

CorrelationEstimate sample_correlation(const StateVector& prepared,
                                       const std::array<MeasurementSetting, 3>& settings,
                                       const BellConfig& config, long shots,
                                       std::uint64_t seed) {
    require_positive_shots(shots);
    std::vector<std::int8_t> products(static_cast<std::size_t>(shots), 0);
    sample_outcomes(prepared, settings, config, shots, seed,
                    settings_stream(settings, 0),
                    [&](long shot, const ShotOutcome& o) {
                        if (o.valid)
                            products[static_cast<std::size_t>(shot)] =
                                static_cast<std::int8_t>(o.eigen[0] *
                                                         o.eigen[1] *
                                                         o.eigen[2]);
                    });

    long n_valid = 0;
    double sum = 0.0;
    for (auto p : products) {
        if (p == 0) continue;
        ++n_valid;
        sum += p;
    }
    if (n_valid == 0)
        throw NumericalError("no valid coincidences in sample");
    const double mean = sum / n_valid;
    // products are +/-1, so the sample variance has a closed form
    const double var = n_valid > 1
                           ? (1.0 - mean * mean) * n_valid / (n_valid - 1)
                           : 0.0;
    CorrelationEstimate est;
    est.settings = settings;
    est.value = mean;
    est.stderr_ = std::sqrt(var / n_valid);
    est.shots = shots;
    est.valid_fraction = double(n_valid) / double(shots);
    est.engine = EngineKind::montecarlo;
    return est;
}

CorrelationEstimate abstract_correlation(Protocol protocol,
                                         const std::array<MeasurementSetting, 3>& settings) {
    CorrelationEstimate est;
    est.settings = settings;
    est.value = qubit::correlation(abstract_state(protocol),
                                   {to_basis(settings[0]), to_basis(settings[1]),
                                    to_basis(settings[2])});
    est.engine = EngineKind::abstract;
    return est;
}

CorrelationEstimate correlation(const StateVector& prepared,
                                const std::array<MeasurementSetting, 3>& settings,
                                EngineKind engine, const BellConfig& config,
                                long shots, std::uint64_t seed) {
    switch (engine) {
        case EngineKind::exact:
            return exact_correlation(prepared, settings, config);
        case EngineKind::montecarlo:
            return sample_correlation(prepared, settings, config, shots, seed);
        case EngineKind::abstract:
            return abstract_correlation(config.protocol, settings);
    }
    throw UsageError("unknown engine");
}

GhzBatteryResult ghz_battery(const StateVector& prepared, EngineKind engine,
                             const BellConfig& config, long shots,
                             std::uint64_t seed) {
    using S = MeasurementSetting;
    GhzBatteryResult r;
    r.e_yyx = correlation(prepared, {S::Y, S::Y, S::X}, engine, config, shots, seed);
    r.e_yxy = correlation(prepared, {S::Y, S::X, S::Y}, engine, config, shots, seed);
    r.e_xyy = correlation(prepared, {S::X, S::Y, S::Y}, engine, config, shots, seed);
    r.e_xxx = correlation(prepared, {S::X, S::X, S::X}, engine, config, shots, seed);
    r.lhv_xxx_prediction = r.e_yyx.value * r.e_yxy.value * r.e_xyy.value;
    r.contradiction = r.lhv_xxx_prediction * r.e_xxx.value < 0.0;
    return r;
}

namespace {

bool two_z_minus(const ShotOutcome& o) {
    int minus = 0;
    for (int i = 0; i < 3; ++i)
        if (o.z_rec[i] == -1) ++minus;
    return minus == 2;
}

} // namespace

WPropertyReport w_property_probabilities(const StateVector& prepared,
                                         EngineKind engine, const BellConfig& config,
                                         long shots, std::uint64_t seed) {
    using S = MeasurementSetting;
    WPropertyReport report;

    if (engine == EngineKind::abstract) {
        const auto psi = abstract_state(config.protocol);
        report.two_z_minus.value = qubit::p_two_z_minus(psi);
        report.two_z_minus.engine = EngineKind::abstract;
        double cond = 0.0;
        for (int i = 0; i < 3; ++i) cond += qubit::x_match_given_z_minus(psi, i);
        cond /= 3.0;
        report.x_match_a.value = cond;
        report.x_match_a.engine = EngineKind::abstract;
        report.x_match_b = report.x_match_a;
        return report;
    }

    auto settings_for = [](int z_party) {
        std::array<S, 3> s{S::X, S::X, S::X};
        s[z_party] = S::Z;
        return s;
    };

    if (engine == EngineKind::exact) {
        require_no_jitter(config);
        {
            const Plan plan = build_plan(prepared, {S::Z, S::Z, S::Z}, config);
            report.two_z_minus = exact_event(
                plan, [](const ShotOutcome&) { return true; }, two_z_minus);
        }
        double sum = 0.0, valid = 0.0;
        for (int i = 0; i < 3; ++i) {
            const Plan plan = build_plan(prepared, settings_for(i), config);
            auto est = exact_event(
                plan,
                [i](const ShotOutcome& o) { return o.z_rec[i] == -1; },
                [i](const ShotOutcome& o) {
                    std::array<int, 2> x{};
                    int k = 0;
                    for (int p = 0; p < 3; ++p)
                        if (p != i) x[k++] = o.x_val[p];
                    return x[0] == x[1];
                });
            sum += est.value;
            valid += est.valid_fraction;
        }
        report.x_match_a.value = sum / 3.0;
        report.x_match_a.valid_fraction = valid / 3.0;
        report.x_match_a.engine = EngineKind::exact;
        report.x_match_b = report.x_match_a;
        return report;
    }

    require_positive_shots(shots);
    {
        auto counts = mc_event_counts(
            prepared, {S::Z, S::Z, S::Z}, config, shots, seed,
            settings_stream({S::Z, S::Z, S::Z}, 1),
            [](const ShotOutcome&) { return true; }, two_z_minus);
        report.two_z_minus = estimate_from_counts(counts, shots);
    }
    EventCounts pooled;
    for (int i = 0; i < 3; ++i) {
        auto counts = mc_event_counts(
            prepared, settings_for(i), config, shots, seed,
            settings_stream(settings_for(i), 2 + i),
            [i](const ShotOutcome& o) { return o.z_rec[i] == -1; },
            [i](const ShotOutcome& o) {
                std::array<int, 2> x{};
                int k = 0;
                for (int p = 0; p < 3; ++p)
                    if (p != i) x[k++] = o.x_val[p];
                return x[0] == x[1];
            });
        pooled.valid += counts.valid;
        pooled.cond += counts.cond;
        pooled.event += counts.event;
    }
    report.x_match_a = estimate_from_counts(pooled, 3 * shots);
    report.x_match_b = report.x_match_a;
    return report;
}

ProbabilityEstimate w_all_equal_probability(const StateVector& prepared,
                                            EngineKind engine,
                                            const BellConfig& config, long shots,
                                            std::uint64_t seed) {
    using S = MeasurementSetting;
    if (engine == EngineKind::abstract) {
        ProbabilityEstimate est;
        est.value = qubit::p_all_x_equal(abstract_state(config.protocol));
        est.engine = EngineKind::abstract;
        return est;
    }
    auto all_equal = [](const ShotOutcome& o) {
        return o.x_val[0] == o.x_val[1] && o.x_val[1] == o.x_val[2];
    };
    if (engine == EngineKind::exact) {
        require_no_jitter(config);
        const Plan plan = build_plan(prepared, {S::X, S::X, S::X}, config);
        return exact_event(plan, [](const ShotOutcome&) { return true; },
                           all_equal);
    }
    require_positive_shots(shots);
    auto counts = mc_event_counts(prepared, {S::X, S::X, S::X}, config, shots,
                                  seed, settings_stream({S::X, S::X, S::X}, 5),
                                  [](const ShotOutcome&) { return true; },
                                  all_equal);
    return estimate_from_counts(counts, shots);
}

MerminResult mermin_value(const StateVector& prepared, MeasurementSetting a,
                          MeasurementSetting b, EngineKind engine,
                          const BellConfig& config, long shots,
                          std::uint64_t seed) {
    MerminResult r;
    const std::array<std::array<MeasurementSetting, 3>, 4> runs{{
        {a, a, a},
        {a, b, b},
        {b, a, b},
        {b, b, a},
    }};
    for (int i = 0; i < 4; ++i)
        r.terms[i] = correlation(prepared, runs[i], engine, config, shots, seed);
    r.value = r.terms[0].value - r.terms[1].value - r.terms[2].value -
              r.terms[3].value;
    double var = 0.0;
    for (const auto& t : r.terms) var += t.stderr_ * t.stderr_;
    r.stderr_ = std::sqrt(var);
    r.violated = std::abs(r.value) > 2.0;
    return r;
}

} // namespace ghzw::bell
