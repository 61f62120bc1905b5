// Acceptance suite: one numbered criterion per function, one PASS/FAIL line
// each, exit status = number of failures.

#include "ghzw/belltest.hpp"
#include "ghzw/protocols.hpp"
#include "ghzw/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

using namespace ghzw;
using bell::EngineKind;
using bell::FlagTreatment;
using bell::MeasurementSetting;
using fock::Complex;
using fock::ModeRegistry;
using fock::StateVector;
using protocols::Protocol;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr auto X = MeasurementSetting::X;
constexpr auto Y = MeasurementSetting::Y;
constexpr auto Z = MeasurementSetting::Z;

int g_failures = 0;

void criterion(int number, const std::string& description,
               const std::function<void()>& body) {
    try {
        body();
        std::cout << "[PASS] criterion " << number << ": " << description
                  << "\n";
    } catch (const std::exception& e) {
        std::cout << "[FAIL] criterion " << number << ": " << description
                  << " -- " << e.what() << "\n";
        ++g_failures;
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

void require_close(double actual, double expected, double tol,
                   const std::string& what) {
    if (std::abs(actual - expected) > tol) {
        std::ostringstream os;
        os << what << ": expected " << expected << " +/- " << tol << ", got "
           << actual;
        throw std::runtime_error(os.str());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// deterministic random states with bounded total quanta
StateVector random_state(const ModeRegistry& reg, int max_total, ShotRng& rng) {
    std::vector<fock::Term> terms;
    const int n_terms = 2 + static_cast<int>(rng.next_u64() % 4);
    for (int t = 0; t < n_terms; ++t) {
        fock::Occupation occ(reg.size(), 0);
        int budget = max_total;
        for (std::size_t m = 0; m < reg.size() && budget > 0; ++m) {
            const int n = static_cast<int>(rng.next_u64() % (budget + 1));
            const int capped = std::min(n, reg.n_max(m));
            occ[m] = static_cast<std::uint8_t>(capped);
            budget -= capped;
        }
        terms.emplace_back(std::move(occ),
                           Complex(rng.uniform() - 0.5, rng.uniform() - 0.5));
    }
    return fock::normalize(StateVector(reg, std::move(terms)));
}

void criterion_1_pair_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    auto herald = protocols::prepare_pair({1e-3, 0.0}, {0.0, 0.0});
    require(herald.success, "heralding failed");
    const auto target = protocols::pair_target_state(0.0, 0);
    const double f = fock::reduced_fidelity(herald.state, target);
    require(f >= 0.999, "fidelity below 0.999: " + std::to_string(f));
    require(seconds_since(t0) < 1.0, "pair preparation exceeded 1 s");
}

void criterion_2_ghz_extraction() {
    for (double phi_r : {0.0, kPi / 3, kPi}) {
        auto raw = protocols::ideal_ghz_raw({phi_r, 0.0, 0.0});
        auto extracted = protocols::extract_coincidence_component(
            raw, protocols::ghz_coincidence_pairs());
        require_close(extracted.weight, 0.25, 1e-10, "coincidence weight");

        ModeRegistry reg({"L1", "R1", "L2", "R2", "L3", "R3"});
        const double inv = 1.0 / std::sqrt(2.0);
        StateVector target(reg,
                           {{{1, 0, 1, 0, 1, 0}, Complex(inv, 0)},
                            {{0, 1, 0, 1, 0, 1}, std::polar(inv, phi_r)}});
        require_close(fock::fidelity(extracted.component, target), 1.0, 1e-10,
                      "component fidelity at phi_r=" + std::to_string(phi_r));
    }
}

void criterion_3_ghz_battery() {
    const auto t0 = std::chrono::steady_clock::now();
    auto state = protocols::ideal_ghz_component({});
    bell::BellConfig cfg;
    cfg.protocol = Protocol::ghz;

    auto exact = bell::ghz_battery(state, EngineKind::exact, cfg);
    require_close(exact.e_yyx.value, -1.0, 1e-9, "E(YYX)");
    require_close(exact.e_yxy.value, -1.0, 1e-9, "E(YXY)");
    require_close(exact.e_xyy.value, -1.0, 1e-9, "E(XYY)");
    require_close(exact.e_xxx.value, 1.0, 1e-9, "E(XXX)");
    require_close(exact.lhv_xxx_prediction, -1.0, 1e-9, "LHV prediction");
    require(exact.contradiction, "contradiction flag not raised");

    cfg.threads = 4;
    auto mc = bell::ghz_battery(state, EngineKind::montecarlo, cfg, 100000, 21);
    const std::array<std::pair<const bell::CorrelationEstimate*, double>, 4>
        pairs{{{&mc.e_yyx, -1.0},
               {&mc.e_yxy, -1.0},
               {&mc.e_xyy, -1.0},
               {&mc.e_xxx, 1.0}}};
    for (const auto& [est, expected] : pairs)
        require(std::abs(est->value - expected) <= 5 * est->stderr_,
                "monte-carlo battery term outside 5 standard errors");
    require(seconds_since(t0) < 30.0, "battery exceeded 30 s");
}

void criterion_4_w_properties() {
    auto state = protocols::ideal_w_component({});
    bell::BellConfig cfg;
    cfg.protocol = Protocol::w;

    cfg.flag = FlagTreatment::abstract;
    auto reference = bell::w_property_probabilities(state, EngineKind::abstract,
                                                    cfg);
    require_close(reference.two_z_minus.value, 1.0, 1e-9, "abstract line 1");
    require_close(reference.x_match_a.value, 1.0, 1e-9, "abstract line 2");
    require_close(reference.x_match_b.value, 1.0, 1e-9, "abstract line 3");

    cfg.flag = FlagTreatment::trace;
    auto traced = bell::w_property_probabilities(state, EngineKind::exact, cfg);
    require_close(traced.two_z_minus.value, 1.0, 1e-9, "trace line 1");
    require_close(traced.x_match_a.value, 0.5, 1e-9, "trace conditionals");

    // the CLI layer flags the trace-vs-ideal discrepancy
    run::RunConfig rc;
    rc.protocol = "w";
    rc.engine = "exact";
    rc.flag_treatment = "trace";
    auto report = run::run_w(rc);
    require(!report.notes.empty(), "trace discrepancy note missing");

    cfg.flag = FlagTreatment::erase;
    auto erased = bell::w_property_probabilities(state, EngineKind::exact, cfg);
    require_close(erased.two_z_minus.value, 1.0, 1e-9, "erase line 1");
    require_close(erased.x_match_a.value, 1.0, 1e-9,
                  "erase conditionals after correction");
}

void criterion_5_all_equal_three_quarters() {
    auto state = protocols::ideal_w_component({});
    bell::BellConfig cfg;
    cfg.protocol = Protocol::w;
    cfg.flag = FlagTreatment::abstract;

    auto reference =
        bell::w_all_equal_probability(state, EngineKind::abstract, cfg);
    require_close(reference.value, 0.75, 1e-9, "abstract P(x1=x2=x3)");

    cfg.threads = 4;
    auto mc = bell::w_all_equal_probability(state, EngineKind::montecarlo, cfg,
                                            100000, 23);
    require(std::abs(mc.value - 0.75) <= 5 * mc.stderr_,
            "monte-carlo P(x1=x2=x3) outside 5 standard errors");
}

void criterion_6_mermin() {
    bell::BellConfig wcfg;
    wcfg.protocol = Protocol::w;
    auto w_state = protocols::ideal_w_component({});

    wcfg.flag = FlagTreatment::abstract;
    auto m_abstract =
        bell::mermin_value(w_state, Z, X, EngineKind::abstract, wcfg);
    require_close(m_abstract.value, -3.0, 1e-9, "W Mermin (abstract)");
    require(m_abstract.violated, "W violation flag (abstract)");

    wcfg.flag = FlagTreatment::erase;
    auto m_erase = bell::mermin_value(w_state, Z, X, EngineKind::exact, wcfg);
    require_close(m_erase.value, -3.0, 1e-9, "W Mermin (erase)");
    require(m_erase.violated, "W violation flag (erase)");

    bell::BellConfig gcfg;
    gcfg.protocol = Protocol::ghz;
    auto ghz_state = protocols::ideal_ghz_component({});
    auto m_ghz = bell::mermin_value(ghz_state, X, Y, EngineKind::exact, gcfg);
    require_close(m_ghz.value, 4.0, 1e-9, "GHZ Mermin");
    require(m_ghz.violated, "GHZ violation flag");

    // separable fixture
    run::RunConfig rc;
    rc.protocol = "w";
    rc.preparation = "product";
    rc.engine = "exact";
    rc.mermin_a = "Z";
    rc.mermin_b = "X";
    auto report = run::run_mermin(rc);
    for (const auto& row : report.rows)
        if (row.experiment == "mermin.value")
            require(std::abs(row.value) <= 2.0 + 1e-9,
                    "product state broke the local bound");
}

void criterion_7_timing() {
    for (double eta : {0.0, 0.1, 0.5}) {
        const double expected = 4.0 / std::pow(1.0 - eta, 3);
        require_close(protocols::expected_time(Protocol::ghz, {1.0, 1.0}, eta),
                      expected, 1e-12, "closed-form time");
        auto stats = protocols::simulate_attempts(Protocol::ghz, {eta, 0.0}, {},
                                                  10000, 29);
        require(std::abs(stats.mean - expected) <= 3 * stats.stderr_,
                "sampled attempts outside 3 standard errors");
    }
    // the W bottleneck: closed form alongside the enumerated rate
    const double p_w =
        protocols::coincidence_success_probability(Protocol::w, {0.0, 0.0});
    require_close(p_w, 0.125, 1e-10, "enumerated W success probability");
    require_close(protocols::expected_time(Protocol::w, {1.0, 2.0}, 0.0), 8.0,
                  1e-12, "closed-form W time");
}

void criterion_8_unitarity() {
    ShotRng rng(31, 0, 0);
    ModeRegistry reg2({"a", "b"});
    ModeRegistry reg3({"a", "b", "c"});
    for (int rep = 0; rep < 100; ++rep) {
        auto s2 = random_state(reg2, 2, rng);
        const double theta = rng.uniform() * kPi / 2;
        require_close(
            optics::beam_splitter(s2, {reg2.mode("a"), reg2.mode("b"), theta})
                .norm(),
            1.0, 1e-10, "beam splitter norm");
        require_close(optics::phase_shift(s2, reg2.mode("a"),
                                          rng.uniform() * 2 * kPi)
                          .norm(),
                      1.0, 1e-10, "phase shifter norm");
        auto s3 = random_state(reg3, 2, rng);
        require_close(optics::multiport(s3, {{reg3.mode("a"), reg3.mode("b"),
                                              reg3.mode("c")}})
                          .norm(),
                      1.0, 1e-10, "multiport norm");
    }
    // two indistinguishable photons never produce a coincidence
    StateVector both(reg2, {{{1, 1}, Complex(1, 0)}});
    auto mixed = optics::beam_splitter(both, {reg2.mode("a"), reg2.mode("b")});
    auto dist = optics::click_pattern_distribution(
        mixed, {{reg2.mode("a"), {}}, {reg2.mode("b"), {}}});
    require_close(optics::pattern_probability(dist, {{true, true}}), 0.0, 1e-10,
                  "coincidence probability after bunching");
}

void criterion_9_determinism() {
    const char* cli = std::getenv("GHZW_CLI");
    require(cli != nullptr && *cli, "GHZW_CLI not set");
    auto run_cli = [&](const std::string& args) {
        const std::string cmd = std::string(cli) + " " + args +
                                " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        require(WEXITSTATUS(status) == 0, "cli run failed: " + args);
    };
    const std::string base =
        "ghz --engine montecarlo --shots 20000 --seed 97 --format csv";
    run_cli(base + " --threads 1 --out /tmp/ghzw_acc_a.csv");
    run_cli(base + " --threads 1 --out /tmp/ghzw_acc_b.csv");
    run_cli(base + " --threads 4 --out /tmp/ghzw_acc_c.csv");
    auto slurp = [](const char* path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp("/tmp/ghzw_acc_a.csv");
    require(!a.empty(), "empty output file");
    require(a == slurp("/tmp/ghzw_acc_b.csv"), "rerun changed the bytes");
    require(a == slurp("/tmp/ghzw_acc_c.csv"),
            "thread count changed the bytes");
}

} // namespace

int main() {
    criterion(1, "heralded pair fidelity >= 0.999 at p_c = 1e-3",
              criterion_1_pair_fidelity);
    criterion(2, "coincidence weight 1/4 and component fidelity 1",
              criterion_2_ghz_extraction);
    criterion(3, "four-experiment battery: exact signs and monte-carlo",
              criterion_3_ghz_battery);
    criterion(4, "W properties per flag treatment (1 / 0.5 / 1)",
              criterion_4_w_properties);
    criterion(5, "P(x1=x2=x3) = 3/4", criterion_5_all_equal_three_quarters);
    criterion(6, "Mermin values -3 (W), +4 (GHZ), bounded for products",
              criterion_6_mermin);
    criterion(7, "timing closed forms and enumerated success rates",
              criterion_7_timing);
    criterion(8, "unitarity and bunching of the optics layer",
              criterion_8_unitarity);
    criterion(9, "byte-identical output across reruns and thread counts",
              criterion_9_determinism);

    if (g_failures) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
