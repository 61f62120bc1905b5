#include "ghzw/run.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ghzw::run {

namespace {

using nlohmann::json;
using protocols::Protocol;

Protocol parse_protocol(const std::string& s) {
    if (s == "pair") return Protocol::pair;
    if (s == "ghz") return Protocol::ghz;
    if (s == "w") return Protocol::w;
    throw ConfigError("unknown protocol '" + s + "'");
}

bell::EngineKind parse_engine(const std::string& s) {
    if (s == "exact") return bell::EngineKind::exact;
    if (s == "montecarlo") return bell::EngineKind::montecarlo;
    if (s == "abstract") return bell::EngineKind::abstract;
    throw ConfigError("unknown engine '" + s + "'");
}

bell::FlagTreatment parse_flag(const std::string& s) {
    if (s == "trace") return bell::FlagTreatment::trace;
    if (s == "erase") return bell::FlagTreatment::erase;
    if (s == "abstract") return bell::FlagTreatment::abstract;
    throw ConfigError("unknown flag treatment '" + s + "'");
}

bell::MeasurementSetting parse_setting(const std::string& s) {
    if (s == "X" || s == "x") return bell::MeasurementSetting::X;
    if (s == "Y" || s == "y") return bell::MeasurementSetting::Y;
    if (s == "Z" || s == "z") return bell::MeasurementSetting::Z;
    throw ConfigError("unknown measurement setting '" + s + "'");
}

std::string setting_name(bell::MeasurementSetting s) {
    switch (s) {
        case bell::MeasurementSetting::X: return "X";
        case bell::MeasurementSetting::Y: return "Y";
        case bell::MeasurementSetting::Z: return "Z";
    }
    return "?";
}

std::string settings_name(const std::array<bell::MeasurementSetting, 3>& s) {
    return setting_name(s[0]) + setting_name(s[1]) + setting_name(s[2]);
}

std::string engine_name(bell::EngineKind e) {
    switch (e) {
        case bell::EngineKind::exact: return "exact";
        case bell::EngineKind::montecarlo: return "montecarlo";
        case bell::EngineKind::abstract: return "abstract";
    }
    return "?";
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

ResultRecord record_from(const bell::CorrelationEstimate& e,
                         const std::string& experiment) {
    ResultRecord r;
    r.experiment = experiment;
    r.settings = settings_name(e.settings);
    r.value = e.value;
    r.stderr_ = e.stderr_;
    r.shots = e.shots;
    r.valid_fraction = e.valid_fraction;
    r.engine = engine_name(e.engine);
    return r;
}

ResultRecord record_from(const bell::ProbabilityEstimate& e,
                         const std::string& experiment,
                         const std::string& settings) {
    ResultRecord r;
    r.experiment = experiment;
    r.settings = settings;
    r.value = e.value;
    r.stderr_ = e.stderr_;
    r.shots = e.shots;
    r.valid_fraction = e.valid_fraction;
    r.engine = engine_name(e.engine);
    return r;
}

ResultRecord scalar_record(const std::string& experiment, double value,
                           const std::string& engine = "exact",
                           const std::string& settings = "-") {
    ResultRecord r;
    r.experiment = experiment;
    r.settings = settings;
    r.value = value;
    r.engine = engine;
    return r;
}

// Note: `threads` is an execution detail, not part of the experiment; it is
// deliberately left out so outputs stay byte-identical across parallelism.
json config_to_json(const RunConfig& c) {
    json j;
    j["protocol"] = c.protocol;
    j["engine"] = c.engine;
    j["preparation"] = c.preparation;
    j["flag_treatment"] = c.flag_treatment;
    j["p_c"] = c.p_c;
    j["eta"] = c.eta;
    j["dark"] = c.dark;
    j["retrieval_efficiency"] = c.retrieval_efficiency;
    j["phi1"] = c.phi1;
    j["phi2"] = c.phi2;
    j["phi3"] = c.phi3;
    j["phi_a2"] = c.phi_a2;
    j["phi_a3"] = c.phi_a3;
    j["compensate"] = c.compensate;
    j["phase_jitter"] = c.phase_jitter;
    j["n_max"] = c.n_max;
    j["shots"] = c.shots;
    j["seed"] = c.seed;
    j["t0"] = c.t0;
    j["t1"] = c.t1;
    j["attempt_cap"] = c.attempt_cap;
    j["mermin_a"] = c.mermin_a;
    j["mermin_b"] = c.mermin_b;
    return j;
}

} // namespace

void RunConfig::validate() const {
    parse_protocol(protocol);
    parse_engine(engine);
    parse_flag(flag_treatment);
    if (preparation != "ideal" && preparation != "heralded" &&
        preparation != "product")
        throw ConfigError("unknown preparation '" + preparation + "'");
    if (!(p_c > 0.0) || p_c > 0.2)
        throw ConfigError("p_c must lie in (0, 0.2]");
    if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must lie in [0, 1]");
    if (dark < 0.0 || dark > 1.0) throw ConfigError("dark must lie in [0, 1]");
    if (retrieval_efficiency < 0.0 || retrieval_efficiency > 1.0)
        throw ConfigError("retrieval_efficiency must lie in [0, 1]");
    if (phase_jitter < 0.0)
        throw ConfigError("phase_jitter must be >= 0");
    if (phase_jitter > 0.0 && engine != "montecarlo")
        throw ConfigError("phase_jitter needs engine=montecarlo");
    if (n_max < 1) throw ConfigError("n_max must be >= 1");
    if (shots < 1) throw ConfigError("shots must be >= 1");
    if (t0 <= 0.0 || t1 <= 0.0) throw ConfigError("t0/t1 must be positive");
    if (attempt_cap < 1) throw ConfigError("attempt_cap must be >= 1");
    if (threads < 1 || threads > 256)
        throw ConfigError("threads must lie in [1, 256]");
    if (!mermin_a.empty()) parse_setting(mermin_a);
    if (!mermin_b.empty()) parse_setting(mermin_b);
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "protocol") c.protocol = value.get<std::string>();
            else if (key == "engine") c.engine = value.get<std::string>();
            else if (key == "preparation") c.preparation = value.get<std::string>();
            else if (key == "flag_treatment")
                c.flag_treatment = value.get<std::string>();
            else if (key == "p_c") c.p_c = value.get<double>();
            else if (key == "eta") c.eta = value.get<double>();
            else if (key == "dark") c.dark = value.get<double>();
            else if (key == "retrieval_efficiency")
                c.retrieval_efficiency = value.get<double>();
            else if (key == "phi1") c.phi1 = value.get<double>();
            else if (key == "phi2") c.phi2 = value.get<double>();
            else if (key == "phi3") c.phi3 = value.get<double>();
            else if (key == "phi_a2") c.phi_a2 = value.get<double>();
            else if (key == "phi_a3") c.phi_a3 = value.get<double>();
            else if (key == "compensate") c.compensate = value.get<bool>();
            else if (key == "phase_jitter")
                c.phase_jitter = value.get<double>();
            else if (key == "n_max") c.n_max = value.get<int>();
            else if (key == "shots") c.shots = value.get<long>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "t0") c.t0 = value.get<double>();
            else if (key == "t1") c.t1 = value.get<double>();
            else if (key == "attempt_cap")
                c.attempt_cap = value.get<std::uint64_t>();
            else if (key == "threads") c.threads = value.get<int>();
            else if (key == "mermin_a") c.mermin_a = value.get<std::string>();
            else if (key == "mermin_b") c.mermin_b = value.get<std::string>();
            else
                throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") +
                          e.what());
    }
    c.validate();
    return c;
}

std::string RunConfig::canonical_json() const {
    return config_to_json(*this).dump();
}

std::string RunConfig::config_hash() const {
    const std::string text = canonical_json();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

// ----------------------------------------------------------- preparation

PreparedState prepare_state(const RunConfig& config) {
    const Protocol protocol = parse_protocol(config.protocol);
    const protocols::ChannelPhases phases{config.phi1, config.phi2, config.phi3,
                                          config.phi_a2, config.phi_a3};
    const optics::DetectorModel herald_det{config.eta, config.dark};
    PreparedState out;

    if (protocol == Protocol::pair)
        throw UsageError("prepare_state: pair protocol has no 3-party state");

    if (config.preparation == "product") {
        // Fixture: every party in its |0> rail, flags empty.
        if (protocol == Protocol::ghz) {
            fock::ModeRegistry reg({"L1", "R1", "L2", "R2", "L3", "R3"},
                                   config.n_max);
            std::vector<fock::Term> t{
                {{1, 0, 1, 0, 1, 0}, fock::Complex(1.0, 0.0)}};
            out.state = fock::StateVector(reg, std::move(t));
        } else {
            fock::ModeRegistry reg(
                {"B1", "C1", "B2", "C2", "B3", "C3", "A1", "A2", "A3"},
                config.n_max);
            std::vector<fock::Term> t{
                {{1, 0, 1, 0, 1, 0, 0, 0, 0}, fock::Complex(1.0, 0.0)}};
            out.state = fock::StateVector(reg, std::move(t));
        }
        return out;
    }

    std::array<double, 3> pair_phases{config.phi1, config.phi2, config.phi3};

    if (config.preparation == "ideal") {
        if (protocol == Protocol::ghz) {
            auto extracted = protocols::extract_coincidence_component(
                protocols::ideal_ghz_raw(phases, config.n_max),
                protocols::ghz_coincidence_pairs());
            out.state = extracted.component;
            out.coincidence_weight = extracted.weight;
        } else {
            auto extracted = protocols::extract_coincidence_component(
                protocols::ideal_w_raw(phases, config.n_max),
                protocols::w_coincidence_pairs());
            out.state = extracted.component;
            out.coincidence_weight = extracted.weight;
        }
    } else { // heralded
        const std::array<double, 3> channel{config.phi1, config.phi2,
                                            config.phi3};
        std::array<fock::StateVector, 3> pairs;
        const char* left_stem = protocol == Protocol::ghz ? "L" : "B";
        const char* right_stem = protocol == Protocol::ghz ? "R" : "C";
        for (int i = 0; i < 3; ++i) {
            const std::string n = std::to_string(i + 1);
            protocols::PairLabels labels{left_stem + n, right_stem + n,
                                         "s" + std::string(left_stem) + n,
                                         "s" + std::string(right_stem) + n};
            auto herald = protocols::prepare_pair({config.p_c, channel[i]},
                                                  herald_det, labels, 0,
                                                  config.n_max);
            if (!herald.success)
                throw NumericalError("pair heralding has zero probability "
                                     "under this configuration");
            pairs[i] = herald.state;
            pair_phases[i] = herald.effective_phase;
        }
        if (protocol == Protocol::ghz) {
            auto raw = protocols::prepare_ghz_raw(pairs[0], pairs[1], pairs[2]);
            auto extracted = protocols::extract_coincidence_component(
                raw, protocols::ghz_coincidence_pairs());
            out.state = extracted.component;
            out.coincidence_weight = extracted.weight;
        } else {
            auto wf = protocols::prepare_w_fock(config.p_c, config.phi_a2,
                                                config.phi_a3, herald_det,
                                                {"A1", "A2", "A3"}, "sA",
                                                config.n_max);
            if (!wf.success)
                throw NumericalError("shared-line heralding has zero "
                                     "probability under this configuration");
            auto raw = protocols::prepare_w_raw(pairs[0], pairs[1], pairs[2],
                                                wf.state);
            auto extracted = protocols::extract_coincidence_component(
                raw, protocols::w_coincidence_pairs());
            out.state = extracted.component;
            out.coincidence_weight = extracted.weight;
        }
    }

    if (config.compensate) {
        out.compensation =
            protocol == Protocol::ghz
                ? protocols::ghz_compensation(pair_phases)
                : protocols::w_compensation(pair_phases, config.phi_a2,
                                            config.phi_a3);
    }
    return out;
}

bell::BellConfig bell_config(const RunConfig& config,
                             const std::array<double, 3>& compensation) {
    bell::BellConfig bc;
    bc.protocol = parse_protocol(config.protocol);
    bc.flag = parse_flag(config.flag_treatment);
    bc.detector = {config.eta, config.dark};
    bc.retrieval = {config.retrieval_efficiency};
    bc.compensation = compensation;
    bc.phase_jitter = config.phase_jitter;
    bc.threads = config.threads;
    return bc;
}

// ----------------------------------------------------------------- runners

namespace {

void warn_strong_pump(const RunConfig& config, RunReport& report) {
    const bool uses_pump =
        config.protocol == "pair" || config.preparation == "heralded";
    if (uses_pump && config.p_c > 0.1)
        report.notes.push_back("p_c above 0.1 strains the weak-pulse "
                               "expansion; double-excitation errors grow "
                               "linearly with it");
}

} // namespace

RunReport run_pair(const RunConfig& config) {
    config.validate();
    RunReport report{config, {}, {}, false};
    warn_strong_pump(config, report);
    const optics::DetectorModel det{config.eta, config.dark};
    const protocols::ExcitationParams excitation{config.p_c, config.phi1};

    auto herald = protocols::prepare_pair(excitation, det, {}, 0, config.n_max);
    report.rows.push_back(
        scalar_record("pair.success", herald.success ? 1.0 : 0.0));
    report.rows.push_back(
        scalar_record("pair.herald_probability", herald.herald_probability));

    if (!herald.success) {
        report.warned = true;
        report.notes.push_back("heralding has zero probability under this "
                               "configuration; no conditional state");
        return report;
    }

    const auto target = protocols::pair_target_state(config.phi1, 0, "L", "R",
                                                     config.n_max);
    double fid = 0.0;
    double contamination = 0.0;
    for (const auto& [w, state] : herald.branches) {
        const double share = w / herald.herald_probability;
        fid += share * fock::reduced_fidelity(state, target);
        double two = 0.0;
        const auto& reg = state.registry();
        const auto li = reg.mode("L").index;
        const auto ri = reg.mode("R").index;
        for (const auto& [occ, amp] : state.terms())
            if (occ[li] + occ[ri] >= 2) two += std::norm(amp);
        contamination += share * two;
    }
    report.rows.push_back(scalar_record("pair.fidelity", fid));
    report.rows.push_back(
        scalar_record("pair.two_excitation_weight", contamination));
    const double p_any = protocols::coincidence_success_probability(
        Protocol::pair, det, excitation);
    report.rows.push_back(
        scalar_record("pair.analytic_attempts", 1.0 / p_any));
    return report;
}

RunReport run_ghz(const RunConfig& config) {
    config.validate();
    if (config.protocol != "ghz")
        throw ConfigError("the ghz command requires protocol=ghz");
    RunReport report{config, {}, {}, false};
    warn_strong_pump(config, report);
    const auto prepared = prepare_state(config);
    const auto bc = bell_config(config, prepared.compensation);
    const auto engine = parse_engine(config.engine);

    auto battery = bell::ghz_battery(prepared.state, engine, bc, config.shots,
                                     config.seed);
    report.rows.push_back(record_from(battery.e_yyx, "ghz.E"));
    report.rows.push_back(record_from(battery.e_yxy, "ghz.E"));
    report.rows.push_back(record_from(battery.e_xyy, "ghz.E"));
    report.rows.push_back(record_from(battery.e_xxx, "ghz.E"));
    auto lhv = scalar_record("ghz.lhv_xxx_prediction",
                             battery.lhv_xxx_prediction, "derived", "XXX");
    report.rows.push_back(lhv);
    report.rows.push_back(scalar_record("ghz.contradiction",
                                        battery.contradiction ? 1.0 : 0.0,
                                        "derived"));
    if (battery.contradiction)
        report.notes.push_back("local realism predicts the opposite sign for "
                               "the all-x experiment");
    return report;
}

RunReport run_w(const RunConfig& config) {
    config.validate();
    if (config.protocol != "w")
        throw ConfigError("the w command requires protocol=w");
    RunReport report{config, {}, {}, false};
    warn_strong_pump(config, report);
    const auto prepared = prepare_state(config);
    const auto bc = bell_config(config, prepared.compensation);
    const auto engine = parse_engine(config.engine);

    auto props = bell::w_property_probabilities(prepared.state, engine, bc,
                                                config.shots, config.seed);
    report.rows.push_back(
        record_from(props.two_z_minus, "w.two_z_minus", "ZZZ"));
    report.rows.push_back(
        record_from(props.x_match_a, "w.x_match_given_z_a", "sym(ZXX)"));
    report.rows.push_back(
        record_from(props.x_match_b, "w.x_match_given_z_b", "sym(ZXX)"));
    auto all_eq = bell::w_all_equal_probability(prepared.state, engine, bc,
                                                config.shots, config.seed);
    report.rows.push_back(record_from(all_eq, "w.all_x_equal", "XXX"));

    if (engine != bell::EngineKind::abstract &&
        parse_flag(config.flag_treatment) == bell::FlagTreatment::trace)
        report.notes.push_back(
            "flag treatment 'trace' leaves which-path records in the unread "
            "flag ensembles; the x conditionals decohere to 1/2 instead of "
            "the ideal-qubit value 1");
    return report;
}

RunReport run_mermin(const RunConfig& config) {
    config.validate();
    RunReport report{config, {}, {}, false};
    warn_strong_pump(config, report);
    const Protocol protocol = parse_protocol(config.protocol);

    std::string a_name = config.mermin_a;
    std::string b_name = config.mermin_b;
    if (a_name.empty()) a_name = protocol == Protocol::w ? "Z" : "X";
    if (b_name.empty()) b_name = protocol == Protocol::w ? "X" : "Y";
    const auto a = parse_setting(a_name);
    const auto b = parse_setting(b_name);

    const auto prepared = prepare_state(config);
    const auto bc = bell_config(config, prepared.compensation);
    const auto engine = parse_engine(config.engine);

    auto mermin = bell::mermin_value(prepared.state, a, b, engine, bc,
                                     config.shots, config.seed);
    const std::array<std::string, 4> names{
        "mermin.term_aaa", "mermin.term_abb", "mermin.term_bab",
        "mermin.term_bba"};
    for (int i = 0; i < 4; ++i)
        report.rows.push_back(record_from(mermin.terms[i], names[i]));
    ResultRecord combined = scalar_record("mermin.value", mermin.value,
                                          engine_name(parse_engine(config.engine)),
                                          a_name + "/" + b_name);
    combined.stderr_ = mermin.stderr_;
    report.rows.push_back(combined);
    report.rows.push_back(scalar_record("mermin.violated",
                                        mermin.violated ? 1.0 : 0.0, "derived"));
    return report;
}

RunReport run_timing(const RunConfig& config) {
    config.validate();
    RunReport report{config, {}, {}, false};
    const Protocol protocol = parse_protocol(config.protocol);
    const optics::DetectorModel det{config.eta, config.dark};
    const protocols::ExcitationParams excitation{config.p_c, config.phi1};
    const protocols::TimingParams timing{config.t0, config.t1};

    const double p = protocols::coincidence_success_probability(protocol, det,
                                                                excitation);
    report.rows.push_back(scalar_record("timing.success_probability", p));
    report.rows.push_back(scalar_record("timing.analytic_attempts", 1.0 / p));

    const double step = protocol == Protocol::w
                            ? std::max(config.t0, config.t1)
                            : config.t0;
    if (protocol != Protocol::pair) {
        const double closed_form = protocols::expected_time(protocol, timing,
                                                      config.eta);
        report.rows.push_back(scalar_record("timing.closed_form_seconds", closed_form));
        const double implied = step / closed_form;
        if (std::abs(implied - p) > 1e-9) {
            std::ostringstream note;
            note << "closed-form time implies per-round success "
                 << format_number(implied)
                 << " but enumeration of the optical train gives "
                 << format_number(p) << "; both are reported";
            report.notes.push_back(note.str());
        }
    }

    auto stats = protocols::simulate_attempts(
        protocol, det, excitation, static_cast<int>(config.shots), config.seed,
        config.threads, config.attempt_cap);
    ResultRecord mean = scalar_record("timing.simulated_mean_attempts",
                                      stats.mean, "montecarlo");
    mean.stderr_ = stats.stderr_;
    mean.shots = config.shots;
    report.rows.push_back(mean);
    ResultRecord secs = scalar_record("timing.simulated_mean_seconds",
                                      stats.mean * step, "montecarlo");
    secs.stderr_ = stats.stderr_ * step;
    secs.shots = config.shots;
    report.rows.push_back(secs);
    return report;
}

// ------------------------------------------------------------------ output

std::string to_csv(const RunReport& report) {
    const std::string hash = report.config.config_hash();
    std::string out =
        "experiment,settings,value,stderr,shots,valid_fraction,engine,"
        "config_hash\n";
    for (const auto& r : report.rows) {
        out += r.experiment;
        out += ',';
        out += r.settings;
        out += ',';
        out += format_number(r.value);
        out += ',';
        out += format_number(r.stderr_);
        out += ',';
        out += std::to_string(r.shots);
        out += ',';
        out += format_number(r.valid_fraction);
        out += ',';
        out += r.engine;
        out += ',';
        out += hash;
        out += '\n';
    }
    return out;
}

std::string to_json(const RunReport& report) {
    json j;
    j["config"] = json::parse(report.config.canonical_json());
    j["config_hash"] = report.config.config_hash();
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row;
        row["experiment"] = r.experiment;
        row["settings"] = r.settings;
        row["value"] = r.value;
        row["stderr"] = r.stderr_;
        row["shots"] = r.shots;
        row["valid_fraction"] = r.valid_fraction;
        row["engine"] = r.engine;
        rows.push_back(row);
    }
    j["rows"] = rows;
    j["notes"] = report.notes;
    return j.dump(2) + "\n";
}

} // namespace ghzw::run
