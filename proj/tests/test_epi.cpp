#include <catch2/catch_amalgamated.hpp>

#include <episub/epi.hpp>

#include "corpus.hpp"
#include "oracles.hpp"

#include <random>

using namespace episub;

namespace {

Budget fresh() { return Budget(ResourceLimits{}); }

Algebra square() { return product(corpus::two_lat(), corpus::two_lat()); }

} // namespace

TEST_CASE("is_epic on the worked example") {
    Budget budget = fresh();
    std::vector<Algebra> targets{corpus::two_lat()};

    EpicResult yes = is_epic(square(), std::vector<int>{0, 1, 3}, targets, budget);
    CHECK(yes.epic);

    EpicResult no = is_epic(square(), std::vector<int>{0, 3}, targets, budget);
    REQUIRE_FALSE(no.epic);
    REQUIRE(no.counterexample.has_value());
    const auto& cx = *no.counterexample;
    CHECK(cx.g != cx.g2);
    CHECK(cx.g[static_cast<std::size_t>(cx.element)] != cx.g2[static_cast<std::size_t>(cx.element)]);
    CHECK(cx.g[0] == cx.g2[0]);
    CHECK(cx.g[3] == cx.g2[3]);
}

TEST_CASE("is_epic rejects subsets that are not subuniverses") {
    Budget budget = fresh();
    std::vector<Algebra> targets{corpus::two_lat()};
    CHECK_THROWS_AS(is_epic(square(), std::vector<int>{1, 2}, targets, budget), error);
}

TEST_CASE("is_epic agrees with the exhaustive oracle on random instances") {
    std::mt19937_64 rng(0xab1e);
    auto sigs = corpus::mixed_signatures();
    int checked = 0;
    for (int round = 0; round < 120; ++round) {
        const auto& sig = sigs[static_cast<std::size_t>(round) % sigs.size()];
        std::uniform_int_distribution<int> bsize(1, 4), tsize(1, 3), tcount(1, 2);
        Algebra b = corpus::random_algebra(rng, sig, bsize(rng));
        Budget budget = fresh();
        auto subs = subuniverses(b, budget);
        const auto& a = subs[rng() % subs.size()].members;
        std::vector<Algebra> targets;
        int k = tcount(rng);
        for (int i = 0; i < k; ++i) targets.push_back(corpus::random_algebra(rng, sig, tsize(rng)));
        bool got = is_epic(b, a, targets, budget).epic;
        bool want = oracle::is_epic(b, a, targets);
        REQUIRE(got == want);
        ++checked;
    }
    CHECK(checked == 120);
}

TEST_CASE("epicness is unchanged when targets are replaced by their pairwise products") {
    std::mt19937_64 rng(0x9d0f);
    auto sigs = corpus::mixed_signatures();
    for (int round = 0; round < 40; ++round) {
        const auto& sig = sigs[static_cast<std::size_t>(round) % sigs.size()];
        std::uniform_int_distribution<int> bsize(2, 4), ssize(1, 3), scount(1, 2);
        Algebra b = corpus::random_algebra(rng, sig, bsize(rng));
        Budget budget = fresh();
        auto subs = subuniverses(b, budget);
        const auto& a = subs[rng() % subs.size()].members;

        std::vector<Algebra> s;
        int k = scount(rng);
        for (int i = 0; i < k; ++i) s.push_back(corpus::random_algebra(rng, sig, ssize(rng)));
        std::vector<Algebra> paired;
        for (const auto& c : s)
            for (const auto& d : s) paired.push_back(product(c, d));

        CHECK(is_epic(b, a, s, budget).epic == is_epic(b, a, paired, budget).epic);
    }
}

TEST_CASE("find_proper_epic reproduces the square-and-chain witness") {
    Budget budget = fresh();
    AlgebraClass s;
    s.insert(corpus::two_lat(), "generator", budget);
    auto witness = find_proper_epic(s, 2, 1, budget);
    REQUIRE(witness.has_value());
    CHECK(witness->b.size == 4);
    CHECK(witness->a_members.size() == 3);
    CHECK(witness->product_factors == std::vector<int>{0, 0});
    // the certificate names the missing element
    CHECK(witness->certificate.y_elements.size() == 1);
}

TEST_CASE("find_proper_epic finds nothing over the boolean algebra") {
    Budget budget = fresh();
    AlgebraClass s;
    s.insert(corpus::two_bool(), "generator", budget);
    CHECK_FALSE(find_proper_epic(s, 2, 1, budget).has_value());
}

TEST_CASE("find_proper_epic is thread-count invariant") {
    for (int threads : {1, 4}) {
        Budget budget = fresh();
        AlgebraClass s;
        s.insert(corpus::two_lat(), "generator", budget);
        auto witness = find_proper_epic(s, 2, threads, budget);
        REQUIRE(witness.has_value());
        CHECK(witness->product_factors == std::vector<int>{0, 0});
        CHECK(witness->b_elements == std::vector<int>{0, 1, 2, 3});
        CHECK(witness->a_members == std::vector<int>{0, 1, 3});
    }
}

TEST_CASE("decide quasivariety mode on the corpus") {
    DecideOptions opt;
    opt.mode = DecideMode::quasivariety;

    Budget b1 = fresh();
    std::vector<Algebra> lat{corpus::two_lat()};
    DecisionReport rep = decide_surjective_epis(lat, opt, b1);
    CHECK(rep.verdict == Verdict::not_surjective);
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness->b.size == 4);
    CHECK_FALSE(rep.conditional_on_fsi_surrogate);
    CHECK(rep.nu_term.has_value());

    Budget b2 = fresh();
    std::vector<Algebra> boolean{corpus::two_bool()};
    CHECK(decide_surjective_epis(boolean, opt, b2).verdict == Verdict::surjective);

    Budget b3 = fresh();
    std::vector<Algebra> h3{corpus::heyting_chain(3)};
    CHECK(decide_surjective_epis(h3, opt, b3).verdict == Verdict::surjective);
}

TEST_CASE("decide variety mode scans quotient-closed classes") {
    DecideOptions opt;
    opt.mode = DecideMode::variety;

    Budget b1 = fresh();
    std::vector<Algebra> lat{corpus::two_lat()};
    CHECK(decide_surjective_epis(lat, opt, b1).verdict == Verdict::not_surjective);

    Budget b2 = fresh();
    std::vector<Algebra> boolean{corpus::two_bool()};
    CHECK(decide_surjective_epis(boolean, opt, b2).verdict == Verdict::surjective);
}

TEST_CASE("decide without a near-unanimity term is inapplicable") {
    DecideOptions opt;
    opt.mode = DecideMode::quasivariety;
    Signature meet_only{{{"f", 2}}};
    std::vector<Algebra> semi{make_algebra(meet_only, 2, {{0, 0, 0, 1}})};
    Budget budget = fresh();
    DecisionReport rep = decide_surjective_epis(semi, opt, budget);
    CHECK(rep.verdict == Verdict::inapplicable);
    CHECK_FALSE(rep.inapplicable_reason.empty());
}

TEST_CASE("decide arithmetical mode is conditional and needs a pixley term") {
    DecideOptions opt;
    opt.mode = DecideMode::arithmetical;

    Budget b1 = fresh();
    std::vector<Algebra> boolean{corpus::two_bool()};
    DecisionReport rep = decide_surjective_epis(boolean, opt, b1);
    CHECK(rep.verdict == Verdict::surjective);
    CHECK(rep.conditional_on_fsi_surrogate);
    CHECK(rep.pixley_term.has_value());

    Budget b2 = fresh();
    std::vector<Algebra> lat{corpus::two_lat()};
    CHECK(decide_surjective_epis(lat, opt, b2).verdict == Verdict::inapplicable);

    Budget b3 = fresh();
    std::vector<Algebra> h3{corpus::heyting_chain(3)};
    DecisionReport hrep = decide_surjective_epis(h3, opt, b3);
    CHECK(hrep.verdict == Verdict::surjective);
    CHECK(hrep.s_class.members().size() == 2);
}

TEST_CASE("decide s-choice does not change the verdict") {
    for (DecideMode mode : {DecideMode::quasivariety, DecideMode::variety}) {
        for (const auto& gen :
             {corpus::two_lat(), corpus::two_bool(), corpus::heyting_chain(3), corpus::median2()}) {
            DecideOptions a, b;
            a.mode = b.mode = mode;
            a.s_choice = SChoice::qrsi;
            b.s_choice = SChoice::is_closure;
            Budget ba = fresh(), bb = fresh();
            std::vector<Algebra> gens{gen};
            CHECK(decide_surjective_epis(gens, a, ba).verdict ==
                  decide_surjective_epis(gens, b, bb).verdict);
        }
    }
}

TEST_CASE("decide reports witnesses that re-verify") {
    DecideOptions opt;
    opt.mode = DecideMode::quasivariety;
    Budget budget = fresh();
    std::vector<Algebra> lat{corpus::two_lat()};
    DecisionReport rep = decide_surjective_epis(lat, opt, budget);
    REQUIRE(rep.witness.has_value());

    Budget verify_budget = fresh();
    std::vector<Algebra> targets;
    for (const auto& m : rep.s_class.members()) targets.push_back(m.alg);
    VerifyResult vr = verify_witness(rep.witness->b, rep.witness->a_members,
                                     rep.witness->certificate, targets, verify_budget);
    CHECK(vr.ok);
}

TEST_CASE("decide surfaces resource exhaustion as a verdict") {
    DecideOptions opt;
    opt.mode = DecideMode::quasivariety;
    ResourceLimits lims;
    lims.max_search_nodes = 10;
    Budget budget(lims);
    std::vector<Algebra> lat{corpus::two_lat()};
    DecisionReport rep = decide_surjective_epis(lat, opt, budget);
    CHECK(rep.verdict == Verdict::resource_limit);
    CHECK_FALSE(rep.limit_reason.empty());
}

TEST_CASE("fold combinations enumerate non-decreasing tuples") {
    auto combos = detail::fold_combinations(2, 2);
    std::vector<std::vector<int>> want{{0}, {1}, {0, 0}, {0, 1}, {1, 1}};
    CHECK(combos == want);
}
