#include "ghzw/protocols.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ghzw;
using fock::Complex;
using fock::ModeRegistry;
using fock::StateVector;
using protocols::Protocol;

namespace {

constexpr double kPi = std::numbers::pi;
const optics::DetectorModel kIdeal{0.0, 0.0};

} // namespace

TEST_CASE("weak excitation keeps atom and photon numbers locked") {
    ModeRegistry reg({"atom", "ph"});
    auto s = protocols::raman_excite(fock::vacuum(reg), reg.mode("atom"),
                                     reg.mode("ph"), {0.01, 0.0});
    for (const auto& [occ, amp] : s.terms()) CHECK(occ[0] == occ[1]);

    // |1,1> amplitude is sqrt(p)/norm
    const double norm = std::sqrt(1.0 + 0.01 + 0.01 * 0.01);
    CHECK(s.amplitude({1, 1}).real() ==
          doctest::Approx(std::sqrt(0.01) / norm).epsilon(1e-12));
}

TEST_CASE("weak excitation approaches vacuum as p_c -> 0") {
    ModeRegistry reg({"atom", "ph"});
    auto tiny = protocols::raman_excite(fock::vacuum(reg), reg.mode("atom"),
                                        reg.mode("ph"), {1e-6, 0.3});
    CHECK(fock::fidelity(tiny, fock::vacuum(reg)) ==
          doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("double-to-single excitation weight ratio follows the expansion") {
    // expansion coefficients: |1,1> <- sqrt(p), |2,2> <- (p/2)*||(S+b+)^2|0>||
    // with (S+b+)^2|0,0> = 2|2,2>, so the squared-amplitude ratio is
    // p^2 / p = p.
    ModeRegistry reg({"atom", "ph"});
    const double p_c = 0.05;
    auto s = protocols::raman_excite(fock::vacuum(reg), reg.mode("atom"),
                                     reg.mode("ph"), {p_c, 0.0});
    const double w1 = std::norm(s.amplitude({1, 1}));
    const double w2 = std::norm(s.amplitude({2, 2}));
    CHECK(w2 / w1 == doctest::Approx(p_c).epsilon(1e-10));

    CHECK_THROWS_AS(protocols::raman_excite(s, reg.mode("atom"), reg.mode("ph"),
                                            {p_c, 0.0}),
                    UsageError); // photon mode no longer vacuum
}

TEST_CASE("heralded pair approaches the two-branch target") {
    auto herald = protocols::prepare_pair({1e-3, 0.0}, kIdeal);
    REQUIRE(herald.success);
    CHECK(herald.branches.size() == 1);
    auto target = protocols::pair_target_state(0.0, 0);
    const double f = fock::reduced_fidelity(herald.state, target);
    CHECK(f >= 0.999);
    CHECK(f == doctest::Approx(1.0 / (1.0 + 1e-3)).epsilon(1e-6));
}

TEST_CASE("herald probability matches the click-pattern enumeration") {
    const double p_c = 0.01;
    for (double eta : {0.0, 0.2}) {
        const optics::DetectorModel det{eta, 0.0};
        auto herald = protocols::prepare_pair({p_c, 0.4}, det);
        // independent path: direct pattern enumeration
        ModeRegistry reg({"L", "R", "sL", "sR"});
        StateVector s = fock::vacuum(reg);
        s = protocols::raman_excite(s, reg.mode("L"), reg.mode("sL"), {p_c, 0.0});
        s = protocols::raman_excite(s, reg.mode("R"), reg.mode("sR"), {p_c, 0.4});
        s = optics::beam_splitter(s, {reg.mode("sL"), reg.mode("sR"), kPi / 4});
        auto dist = optics::click_pattern_distribution(
            s, {{reg.mode("sL"), det}, {reg.mode("sR"), det}});
        const double p_first =
            optics::pattern_probability(dist, {{true, false}});
        CHECK(herald.herald_probability ==
              doctest::Approx(p_first).epsilon(1e-10));
        // small-p behavior: one pattern carries ~ p_c (1 - eta)
        CHECK(herald.herald_probability ==
              doctest::Approx(p_c * (1 - eta)).epsilon(0.05));
    }
}

TEST_CASE("pair contamination scales linearly with p_c") {
    auto contamination = [](double p_c) {
        auto h = protocols::prepare_pair({p_c, 0.0}, kIdeal);
        auto target = protocols::pair_target_state(0.0, 0);
        return 1.0 - fock::reduced_fidelity(h.state, target);
    };
    const double c1 = contamination(0.05);
    const double c2 = contamination(0.005);
    CHECK(c1 / c2 == doctest::Approx(10.0).epsilon(0.1));
}

TEST_CASE("heralding with a dead detector reports failure") {
    auto herald = protocols::prepare_pair({0.01, 0.0}, {1.0, 0.0});
    CHECK(!herald.success);
    CHECK(herald.herald_probability == 0.0);
}

TEST_CASE("raw three-pair state matches the combinatorial expansion") {
    const std::array<double, 3> phases{0.0, 0.7, -0.4};
    auto raw = protocols::ideal_ghz_raw({phases[0], phases[1], phases[2]});
    auto expected = oracle::three_pair_expansion(phases);
    CHECK(raw.term_count() == 8);
    CHECK(raw.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& [key, amp] : expected) {
        fock::Occupation occ(6, 0);
        for (int i = 0; i < 3; ++i) {
            if (key[i] == 'L') occ[2 * i] = 1;
            else occ[2 * i + 1] = 1;
        }
        CHECK(std::abs(raw.amplitude(occ) - amp) < 1e-12);
    }
}

TEST_CASE("coincidence extraction keeps the all-left/all-right branches") {
    const double phi_r = 0.7 + 0.1 - 0.3;
    auto raw = protocols::ideal_ghz_raw({0.7, 0.1, -0.3});
    auto extracted = protocols::extract_coincidence_component(
        raw, protocols::ghz_coincidence_pairs());
    CHECK(extracted.weight ==
          doctest::Approx(oracle::ghz_coincidence_weight_oracle())
              .epsilon(1e-12));
    CHECK(extracted.weight == doctest::Approx(0.25).epsilon(1e-12));

    // component = (|LLL> + e^{i phi_r}|RRR>)/sqrt(2)
    ModeRegistry reg({"L1", "R1", "L2", "R2", "L3", "R3"});
    const double inv = 1.0 / std::sqrt(2.0);
    StateVector target(reg, {{{1, 0, 1, 0, 1, 0}, Complex(inv, 0)},
                             {{0, 1, 0, 1, 0, 1}, std::polar(inv, phi_r)}});
    CHECK(fock::fidelity(extracted.component, target) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("extraction rejects zero-weight subspaces") {
    fock::ModeRegistry reg({"L1", "R1", "L2", "R2", "L3", "R3"});
    CHECK_THROWS_AS(protocols::extract_coincidence_component(
                        fock::vacuum(reg), protocols::ghz_coincidence_pairs()),
                    NumericalError);
}

TEST_CASE("shared-line resource heralds the uniform superposition") {
    auto herald = protocols::prepare_w_fock(1e-3, 0.3, -0.5, kIdeal);
    REQUIRE(herald.success);
    auto target = protocols::ideal_w_fock({0, 0, 0, 0.3, -0.5});
    const double f = fock::reduced_fidelity(herald.state, target);
    // double emissions contaminate at first order in p_c:
    // weight ratio 9 p_c^2 / (3 p_c) = 3 p_c
    CHECK(f == doctest::Approx(1.0 / (1.0 + 3e-3)).epsilon(1e-6));
    CHECK(f > 0.99);

    // herald probability ~ 3 p_c (1 - eta)
    const optics::DetectorModel det{0.25, 0.0};
    auto lossy = protocols::prepare_w_fock(1e-3, 0.0, 0.0, det);
    CHECK(lossy.herald_probability ==
          doctest::Approx(3e-3 * 0.75).epsilon(0.05));
}

TEST_CASE("raw nine-ensemble state has 24 equal-weight components") {
    auto raw = protocols::ideal_w_raw({});
    CHECK(raw.term_count() == 24);
    CHECK(raw.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& [occ, amp] : raw.terms())
        CHECK(std::norm(amp) == doctest::Approx(1.0 / 24).epsilon(1e-12));
}

TEST_CASE("W extraction matches the expansion oracle") {
    auto raw = protocols::ideal_w_raw({0.2, -0.1, 0.4, 0.6, -0.8});
    auto extracted = protocols::extract_coincidence_component(
        raw, protocols::w_coincidence_pairs());
    CHECK(extracted.weight ==
          doctest::Approx(oracle::w_coincidence_weight_oracle()).epsilon(1e-12));
    CHECK(extracted.weight == doctest::Approx(0.125).epsilon(1e-12));

    // surviving branches: line ensemble i excited, pair i on its flag side,
    // other pairs on their B side; phases combine as line + pair.
    ModeRegistry reg({"B1", "C1", "B2", "C2", "B3", "C3", "A1", "A2", "A3"});
    const double inv = 1.0 / std::sqrt(3.0);
    StateVector target(
        reg, {
                 {{0, 1, 1, 0, 1, 0, 1, 0, 0}, std::polar(inv, 0.2)},
                 {{1, 0, 0, 1, 1, 0, 0, 1, 0}, std::polar(inv, 0.6 - 0.1)},
                 {{1, 0, 1, 0, 0, 1, 0, 0, 1}, std::polar(inv, -0.8 + 0.4)},
             });
    CHECK(fock::fidelity(extracted.component, target) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("retrieval swaps the excitation into the photon mode") {
    ModeRegistry reg({"atom", "ph"});
    StateVector one(reg, {{{1, 0}, Complex(1, 0)}});
    auto moved = protocols::retrieve(one, reg.mode("atom"), reg.mode("ph"));
    CHECK(std::norm(moved.amplitude({0, 1})) == doctest::Approx(1.0));

    auto still = protocols::retrieve(fock::vacuum(reg), reg.mode("atom"),
                                     reg.mode("ph"));
    CHECK(fock::fidelity(still, fock::vacuum(reg)) == doctest::Approx(1.0));

    auto lossy = protocols::retrieve(one, reg.mode("atom"), reg.mode("ph"),
                                     {0.9});
    CHECK(optics::click_probability(lossy, lossy.registry().mode("ph"), kIdeal) ==
          doctest::Approx(0.9).epsilon(1e-12));

    CHECK_THROWS_AS(protocols::retrieve(moved, reg.mode("atom"), reg.mode("ph")),
                    UsageError);
}

TEST_CASE("closed-form preparation times") {
    CHECK(protocols::expected_time(Protocol::ghz, {1.0, 1.0}, 0.0) ==
          doctest::Approx(4.0));
    CHECK(protocols::expected_time(Protocol::ghz, {1.0, 1.0}, 0.5) ==
          doctest::Approx(32.0));
    CHECK(protocols::expected_time(Protocol::w, {1.0, 2.0}, 0.0) ==
          doctest::Approx(8.0));
    CHECK_THROWS_AS(protocols::expected_time(Protocol::ghz, {1.0, 1.0}, 1.0),
                    UsageError);
    CHECK_THROWS_AS(protocols::expected_time(Protocol::pair, {1.0, 1.0}, 0.0),
                    UsageError);
}

TEST_CASE("enumerated per-attempt success probabilities") {
    CHECK(protocols::coincidence_success_probability(Protocol::ghz, kIdeal) ==
          doctest::Approx(0.25).epsilon(1e-10));
    CHECK(protocols::coincidence_success_probability(Protocol::w, kIdeal) ==
          doctest::Approx(0.125).epsilon(1e-10));
    const double eta = 0.1;
    CHECK(protocols::coincidence_success_probability(Protocol::ghz,
                                                     {eta, 0.0}) ==
          doctest::Approx(0.25 * std::pow(0.9, 3)).epsilon(1e-10));
    // one pair attempt succeeds on either single-click pattern
    const double p_c = 0.01;
    CHECK(protocols::coincidence_success_probability(Protocol::pair, kIdeal,
                                                     {p_c, 0.0}) ==
          doctest::Approx(2 * p_c).epsilon(0.05));
}

TEST_CASE("attempt sampling is geometric around the enumerated rate") {
    auto stats = protocols::simulate_attempts(Protocol::ghz, kIdeal, {}, 10000, 7);
    CHECK(std::abs(stats.mean - 4.0) < 3 * stats.stderr_);

    auto lossy = protocols::simulate_attempts(Protocol::ghz, {0.1, 0.0}, {},
                                              10000, 7);
    CHECK(std::abs(lossy.mean - 4.0 / std::pow(0.9, 3)) < 3 * lossy.stderr_);
}

TEST_CASE("attempt sampling is deterministic and thread-invariant") {
    auto a = protocols::simulate_attempts(Protocol::w, {0.2, 0.0}, {}, 2000, 13, 1);
    auto b = protocols::simulate_attempts(Protocol::w, {0.2, 0.0}, {}, 2000, 13, 4);
    CHECK(a.samples == b.samples);
}

TEST_CASE("certain success needs exactly one attempt") {
    auto stats = protocols::sample_attempts(1.0, 500, 3, 0);
    for (auto n : stats.samples) CHECK(n == 1);
    CHECK(stats.mean == doctest::Approx(1.0));
}

TEST_CASE("attempt cap aborts hopeless configurations") {
    CHECK_THROWS_AS(protocols::simulate_attempts(Protocol::pair, {1.0, 0.0},
                                                 {0.01, 0.0}, 1, 1, 1, 1000),
                    NumericalError);
}
