#include <catch2/catch_amalgamated.hpp>

#include <episub/certificates.hpp>
#include <episub/hom.hpp>
#include <episub/structure.hpp>

#include "corpus.hpp"

#include <algorithm>

using namespace episub;

namespace {

Budget fresh() { return Budget(ResourceLimits{}); }

Algebra square() { return product(corpus::two_lat(), corpus::two_lat()); }

} // namespace

TEST_CASE("delta_formula lays out the full diagram") {
    Algebra b = square();
    std::vector<int> a{0, 1, 3};
    DeltaCertificate cert = delta_formula(b, a);
    CHECK(cert.b_size == 4);
    CHECK(cert.x_elements == std::vector<int>{0, 1, 3});
    CHECK(cert.y_elements == std::vector<int>{2});
    // 2 binary ops with 16 instances each + 2 nullary instances
    CHECK(cert.equations.size() == 34);
    CHECK(cert.var_count() == 4);
    CHECK_THROWS_AS(delta_formula(b, std::vector<int>{}), error);
}

TEST_CASE("flat solutions of the diagram are exactly the homomorphisms") {
    Algebra b = square();
    std::vector<int> a{0, 1, 3};
    DeltaCertificate cert = delta_formula(b, a);
    Algebra lat = corpus::two_lat();

    Budget budget = fresh();
    std::vector<std::vector<int>> sols;
    std::vector<std::pair<int, int>> no_pairs;
    detail::FlatSolver solver(lat, cert.var_count(), cert.equations, no_pairs, budget);
    std::vector<int> free_inputs(static_cast<std::size_t>(cert.var_count()), -1);
    solver.run(free_inputs, [&](const std::vector<int>& sol) {
        sols.push_back(sol);
        return true;
    });
    std::sort(sols.begin(), sols.end());

    // reorder each hom through the certificate's variable layout
    auto hs = homs(b, lat, budget);
    std::vector<std::vector<int>> expected;
    for (const auto& h : hs) {
        std::vector<int> sol(static_cast<std::size_t>(cert.var_count()));
        for (int v = 0; v < cert.var_count(); ++v)
            sol[static_cast<std::size_t>(v)] = h[static_cast<std::size_t>(cert.element_of_var(v))];
        expected.push_back(std::move(sol));
    }
    std::sort(expected.begin(), expected.end());
    CHECK(sols == expected);
}

TEST_CASE("the worked example defines a function exactly when the subset is epic") {
    Algebra b = square();
    Algebra lat = corpus::two_lat();
    std::vector<Algebra> targets{lat};
    Budget budget = fresh();

    DeltaCertificate epic_cert = delta_formula(b, std::vector<int>{0, 1, 3});
    CHECK(defines_function(epic_cert, targets, budget));

    DeltaCertificate bad_cert = delta_formula(b, std::vector<int>{0, 3});
    CHECK_FALSE(defines_function(bad_cert, targets, budget));
}

TEST_CASE("apply_formula evaluates the defined partial function") {
    Algebra b = square();
    Algebra lat = corpus::two_lat();
    Budget budget = fresh();
    DeltaCertificate cert = delta_formula(b, std::vector<int>{0, 1, 3});

    // homomorphism images of (x0,x1,x2) in the 2-element lattice
    auto out1 = apply_formula(cert, lat, std::vector<int>{0, 0, 1}, budget);
    REQUIRE(out1.has_value());
    CHECK(*out1 == std::vector<int>{1});
    auto out2 = apply_formula(cert, lat, std::vector<int>{0, 1, 1}, budget);
    REQUIRE(out2.has_value());
    CHECK(*out2 == std::vector<int>{0});
    // no solution extends this input
    CHECK_FALSE(apply_formula(cert, lat, std::vector<int>{1, 0, 0}, budget).has_value());
}

TEST_CASE("pp formulas define term functions and get interpolated") {
    Algebra lat = corpus::two_lat();
    std::vector<Algebra> cls{lat};
    Budget budget = fresh();

    PPFormula pp;
    pp.signature = lat.sig;
    pp.inputs = 2;
    pp.existentials = 0;
    pp.equations.push_back(FlatEquation{lat.sig.index_of("meet"), {0, 1}, 2});
    CHECK(defines_function(pp, cls, budget));

    auto val = apply_formula(pp, lat, std::vector<int>{1, 1}, budget);
    REQUIRE(val.has_value());
    CHECK(*val == 1);

    auto t = find_interpolating_term(cls, pp, budget);
    REQUIRE(t.has_value());
    std::vector<int> env{1, 0};
    CHECK(evaluate(lat, *t, env) == 0);
    env = {1, 1};
    CHECK(evaluate(lat, *t, env) == 1);
}

TEST_CASE("pp formula with existentials can fail to define a function") {
    Algebra lat = corpus::two_lat();
    std::vector<Algebra> cls{lat};
    Budget budget = fresh();

    PPFormula pp;
    pp.signature = lat.sig;
    pp.inputs = 1;
    pp.existentials = 1;
    // output v2 only constrained through join with an unconstrained witness
    pp.equations.push_back(FlatEquation{lat.sig.index_of("join"), {0, 1}, 2});
    CHECK_FALSE(defines_function(pp, cls, budget));
}

TEST_CASE("the non-surjective witness function has no interpolating term") {
    Algebra b = square();
    Algebra lat = corpus::two_lat();
    std::vector<Algebra> cls{lat};
    Budget budget = fresh();
    DeltaCertificate cert = delta_formula(b, std::vector<int>{0, 1, 3});

    PPFormula pp;
    pp.signature = cert.signature;
    pp.inputs = static_cast<int>(cert.x_elements.size());
    pp.existentials = 0;
    // rename diagram variables so inputs come first and y0 is the output
    std::vector<int> rename(static_cast<std::size_t>(cert.var_count()));
    for (int v = 0; v < cert.var_count(); ++v) {
        int e = cert.element_of_var(v);
        auto xat = std::find(cert.x_elements.begin(), cert.x_elements.end(), e);
        if (xat != cert.x_elements.end())
            rename[static_cast<std::size_t>(v)] =
                static_cast<int>(xat - cert.x_elements.begin());
        else
            rename[static_cast<std::size_t>(v)] = pp.inputs;
    }
    for (FlatEquation eq : cert.equations) {
        for (int& v : eq.args) v = rename[static_cast<std::size_t>(v)];
        eq.result = rename[static_cast<std::size_t>(eq.result)];
        pp.equations.push_back(std::move(eq));
    }
    CHECK(defines_function(pp, cls, budget));
    // lattice terms are monotone; this function is not
    CHECK_FALSE(find_interpolating_term(cls, pp, budget).has_value());
}

TEST_CASE("verify_witness accepts the genuine certificate") {
    Algebra b = square();
    std::vector<Algebra> targets{corpus::two_lat()};
    Budget budget = fresh();
    std::vector<int> a{0, 1, 3};
    DeltaCertificate cert = delta_formula(b, a);
    VerifyResult res = verify_witness(b, a, cert, targets, budget);
    CHECK(res.ok);
    CHECK(res.status == WitnessStatus::ok);
}

TEST_CASE("verify_witness reports each failure class") {
    Algebra b = square();
    std::vector<Algebra> targets{corpus::two_lat()};
    Budget budget = fresh();
    std::vector<int> a{0, 1, 3};
    DeltaCertificate good = delta_formula(b, a);

    SECTION("wrong universe size") {
        DeltaCertificate c = good;
        c.b_size = 5;
        auto r = verify_witness(b, a, c, targets, budget);
        CHECK_FALSE(r.ok);
        CHECK(r.status == WitnessStatus::malformed);
    }
    SECTION("signature mismatch") {
        DeltaCertificate c = good;
        c.signature.symbols[0].arity = 1;
        auto r = verify_witness(b, a, c, targets, budget);
        CHECK_FALSE(r.ok);
        CHECK(r.status == WitnessStatus::malformed);
    }
    SECTION("input element outside the subuniverse") {
        DeltaCertificate c = good;
        std::vector<int> a_small{0, 1};
        auto r = verify_witness(b, a_small, c, targets, budget);
        CHECK_FALSE(r.ok);
        CHECK(r.status == WitnessStatus::inputs_outside_a);
    }
    SECTION("outputs must be the complement") {
        DeltaCertificate c = delta_formula(b, std::vector<int>{0, 3});
        auto r = verify_witness(b, a, c, targets, budget);
        CHECK_FALSE(r.ok);
        CHECK(r.status == WitnessStatus::outputs_not_complement);
    }
    SECTION("equation failing inside b") {
        DeltaCertificate c = good;
        c.equations[0].result = c.equations[0].result == 0 ? 1 : 0;
        auto r = verify_witness(b, a, c, targets, budget);
        CHECK_FALSE(r.ok);
        CHECK(r.status == WitnessStatus::equation_fails_in_b);
        CHECK(r.detail.find("equation") != std::string::npos);
    }
    SECTION("diagram of a non-epic subset is not a function") {
        std::vector<int> ends{0, 3};
        DeltaCertificate c = delta_formula(b, ends);
        auto r = verify_witness(b, ends, c, targets, budget);
        CHECK_FALSE(r.ok);
        CHECK(r.status == WitnessStatus::not_a_function);
    }
}

TEST_CASE("status strings are stable") {
    CHECK(std::string(to_string(WitnessStatus::ok)) == "ok");
    CHECK(std::string(to_string(WitnessStatus::malformed)) == "malformed");
    CHECK(std::string(to_string(WitnessStatus::inputs_outside_a)) == "inputs-outside-a");
    CHECK(std::string(to_string(WitnessStatus::outputs_not_complement)) == "outputs-not-complement");
    CHECK(std::string(to_string(WitnessStatus::equation_fails_in_b)) == "equation-fails-in-b");
    CHECK(std::string(to_string(WitnessStatus::not_a_function)) == "not-a-function");
}
