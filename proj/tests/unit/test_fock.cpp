#include "ghzw/fock.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace ghzw;
using fock::Complex;
using fock::ModeRegistry;
using fock::StateVector;

namespace {

StateVector ket(const ModeRegistry& reg, std::vector<std::uint8_t> occ,
                Complex amp = {1.0, 0.0}) {
    return StateVector(reg, {{std::move(occ), amp}});
}

} // namespace

TEST_CASE("vacuum is a single unit-amplitude term") {
    ModeRegistry reg({"a", "b"});
    auto v = fock::vacuum(reg);
    CHECK(v.term_count() == 1);
    CHECK(v.amplitude({0, 0}) == Complex{1.0, 0.0});
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));

    ModeRegistry reg6({"1", "2", "3", "4", "5", "6"});
    CHECK(fock::vacuum(reg6).norm() == doctest::Approx(1.0));

    std::vector<std::string> nine;
    for (int i = 0; i < 9; ++i) nine.push_back("m" + std::to_string(i));
    auto v9 = fock::vacuum(ModeRegistry(nine));
    CHECK(fock::inner(v9, v9).real() == doctest::Approx(1.0));

    CHECK_THROWS_AS(fock::vacuum(ModeRegistry{}), ConfigError);
}

TEST_CASE("creation operator raises occupation with sqrt(n+1)") {
    ModeRegistry reg({"a"});
    auto v = fock::vacuum(reg);
    auto one = fock::apply_create(v, reg.mode("a"));
    CHECK(one.leakage == 0.0);
    CHECK(one.state.amplitude({1}) == Complex{1.0, 0.0});

    auto two = fock::apply_create(one.state, reg.mode("a"));
    CHECK(two.state.amplitude({2}).real() == doctest::Approx(std::sqrt(2.0)));

    // raising past the cutoff empties the state and reports the lost weight
    auto three = fock::apply_create(fock::normalize(two.state), reg.mode("a"));
    CHECK(three.state.empty());
    CHECK(three.leakage == doctest::Approx(1.0));
}

TEST_CASE("factorial normalization <n|(a+)^n|0> = sqrt(n!)") {
    ModeRegistry reg({"a"}, 4);
    StateVector s = fock::vacuum(reg);
    double expected = 1.0;
    for (int n = 1; n <= 4; ++n) {
        s = fock::apply_create(s, reg.mode("a")).state;
        expected *= n;
        auto target = ket(reg, {static_cast<std::uint8_t>(n)});
        CHECK(fock::inner(target, s).real() ==
              doctest::Approx(std::sqrt(expected)).epsilon(1e-12));
    }
}

TEST_CASE("superpose forms unnormalized linear combinations") {
    ModeRegistry reg({"a", "b"});
    auto ten = ket(reg, {1, 0});
    auto o01 = ket(reg, {0, 1});
    const double inv = 1.0 / std::sqrt(2.0);
    auto bell = fock::superpose({{Complex(inv, 0), ten}, {Complex(inv, 0), o01}});
    CHECK(bell.norm() == doctest::Approx(1.0).epsilon(1e-12));

    auto same = fock::superpose({{Complex(1, 0), ten}, {Complex(0, 0), o01}});
    CHECK(fock::fidelity(same, ten) == doctest::Approx(1.0));

    auto phased = fock::superpose(
        {{Complex(inv, 0), ten}, {std::polar(inv, M_PI / 3), o01}});
    CHECK(phased.norm() == doctest::Approx(1.0).epsilon(1e-12));

    ModeRegistry other({"a", "c"});
    CHECK_THROWS_AS(fock::superpose({{Complex(1, 0), ten},
                                     {Complex(1, 0), fock::vacuum(other)}}),
                    UsageError);
}

TEST_CASE("inner products") {
    ModeRegistry reg({"a", "b"});
    auto v = fock::vacuum(reg);
    CHECK(fock::inner(v, v) == Complex{1.0, 0.0});
    CHECK(fock::inner(ket(reg, {1, 0}), ket(reg, {0, 1})) == Complex{0.0, 0.0});

    const double inv = 1.0 / std::sqrt(2.0);
    auto bell = fock::superpose(
        {{Complex(inv, 0), ket(reg, {1, 0})}, {Complex(inv, 0), ket(reg, {0, 1})}});
    CHECK(fock::inner(bell, bell).real() == doctest::Approx(1.0).epsilon(1e-12));

    // conjugate-linearity in the first slot
    auto i_ten = ket(reg, {1, 0}, Complex(0, 1));
    CHECK(fock::inner(i_ten, ket(reg, {1, 0})).imag() == doctest::Approx(-1.0));
}

TEST_CASE("normalize") {
    ModeRegistry reg({"a", "b"});
    auto scaled = ket(reg, {1, 0}, Complex(2.0, 0.0));
    CHECK(fock::normalize(scaled).amplitude({1, 0}).real() ==
          doctest::Approx(1.0));

    auto nil = fock::superpose({{Complex(1, 0), ket(reg, {1, 0})},
                                {Complex(-1, 0), ket(reg, {1, 0})}});
    CHECK_THROWS_AS(fock::normalize(nil), NumericalError);

    auto s = fock::superpose({{Complex(3, 0), ket(reg, {1, 0})},
                              {Complex(0, 4), ket(reg, {0, 1})}});
    auto n = fock::normalize(s);
    CHECK(n.amplitude({1, 0}).real() == doctest::Approx(0.6));
    CHECK(n.amplitude({0, 1}).imag() == doctest::Approx(0.8));
}

TEST_CASE("project_number collapses and reports probabilities") {
    ModeRegistry reg({"L", "R"});
    const double inv = 1.0 / std::sqrt(2.0);
    auto pair = fock::superpose(
        {{Complex(inv, 0), ket(reg, {1, 0})}, {Complex(inv, 0), ket(reg, {0, 1})}});

    auto proj = fock::project_number(pair, reg.mode("L"), 1);
    CHECK(proj.probability == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fock::fidelity(proj.state, ket(reg, {1, 0})) == doctest::Approx(1.0));

    auto v = fock::vacuum(reg);
    CHECK(fock::occupation_probability(v, reg.mode("L"), 0) ==
          doctest::Approx(1.0));
    CHECK(fock::occupation_probability(v, reg.mode("L"), 1) == 0.0);
    CHECK_THROWS_AS(fock::project_number(v, reg.mode("L"), 1), NumericalError);
}

TEST_CASE("projection probabilities over n sum to one") {
    ModeRegistry reg({"a", "b"});
    auto s = fock::normalize(fock::superpose({
        {Complex(0.3, 0.1), ket(reg, {0, 0})},
        {Complex(0.5, 0), ket(reg, {1, 1})},
        {Complex(0, 0.4), ket(reg, {2, 0})},
    }));
    double total = 0.0;
    for (int n = 0; n <= 2; ++n)
        total += fock::occupation_probability(s, reg.mode("a"), n);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tensor products") {
    ModeRegistry ra({"a"}), rb({"b"});
    auto t = fock::tensor(fock::vacuum(ra), fock::vacuum(rb));
    CHECK(t.registry().size() == 2);
    CHECK(t.amplitude({0, 0}) == Complex{1.0, 0.0});

    auto x = fock::normalize(ket(ra, {1}, Complex(0.0, 0.7)));
    auto y = fock::normalize(ket(rb, {1}, Complex(0.3, 0.0)));
    CHECK(fock::tensor(x, y).norm() == doctest::Approx(1.0).epsilon(1e-12));

    ModeRegistry rdup({"a"});
    CHECK_THROWS_AS(fock::tensor(fock::vacuum(ra), fock::vacuum(rdup)),
                    UsageError);
}

TEST_CASE("tensor norm is multiplicative") {
    ModeRegistry ra({"a"}), rb({"b"});
    auto x = ket(ra, {1}, Complex(0.5, 0.25));
    auto y = ket(rb, {2}, Complex(-0.4, 1.25));
    CHECK(fock::tensor(x, y).norm() ==
          doctest::Approx(x.norm() * y.norm()).epsilon(1e-12));
}

TEST_CASE("fidelity") {
    ModeRegistry reg({"L", "R"});
    const double inv = 1.0 / std::sqrt(2.0);
    auto plus = fock::superpose(
        {{Complex(inv, 0), ket(reg, {1, 0})}, {Complex(inv, 0), ket(reg, {0, 1})}});
    auto minus = fock::superpose(
        {{Complex(inv, 0), ket(reg, {1, 0})}, {std::polar(inv, M_PI), ket(reg, {0, 1})}});
    CHECK(fock::fidelity(plus, plus) == doctest::Approx(1.0));
    CHECK(fock::fidelity(ket(reg, {1, 0}), ket(reg, {0, 1})) ==
          doctest::Approx(0.0));
    // opposite-phase pair states are orthogonal
    CHECK(fock::fidelity(plus, minus) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reduced fidelity traces out environment modes") {
    ModeRegistry reg({"L", "R", "env"});
    const double inv = 1.0 / std::sqrt(2.0);
    // perfectly correlated environment destroys the reduced coherence
    auto entangled = fock::superpose({
        {Complex(inv, 0), ket(reg, {1, 0, 0})},
        {Complex(inv, 0), ket(reg, {0, 1, 1})},
    });
    ModeRegistry sub({"L", "R"});
    auto target = fock::superpose({{Complex(inv, 0), ket(sub, {1, 0})},
                                   {Complex(inv, 0), ket(sub, {0, 1})}});
    CHECK(fock::reduced_fidelity(entangled, target) ==
          doctest::Approx(0.5).epsilon(1e-12));

    // factorized environment keeps it
    auto product = fock::superpose({
        {Complex(inv, 0), ket(reg, {1, 0, 1})},
        {Complex(inv, 0), ket(reg, {0, 1, 1})},
    });
    CHECK(fock::reduced_fidelity(product, target) ==
          doctest::Approx(1.0).epsilon(1e-12));
}
