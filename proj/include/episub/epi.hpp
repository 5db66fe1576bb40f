#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "canonical.hpp"
#include "certificates.hpp"
#include "core.hpp"
#include "free_algebra.hpp"
#include "hom.hpp"
#include "quasivariety.hpp"
#include "structure.hpp"

namespace episub {

/// Two homomorphisms into a target that agree on A yet differ: direct
/// evidence that A sits non-epically in B.
struct EpicCounterexample {
    int target_index = -1;
    std::vector<int> g;
    std::vector<int> g2;
    int element = -1;
};

struct EpicResult {
    bool epic = false;
    std::optional<EpicCounterexample> counterexample;
};

/// Does every pair of homomorphisms from B into each target that agree on A
/// agree everywhere? A must be a subuniverse of B. Product targets never
/// get special treatment here; callers exploit the product reduction by
/// passing factor lists instead.
inline EpicResult is_epic(const Algebra& b, std::span<const int> a_members,
                          std::span<const Algebra> targets, Budget& budget) {
    std::vector<int> a_sorted(a_members.begin(), a_members.end());
    std::sort(a_sorted.begin(), a_sorted.end());
    a_sorted.erase(std::unique(a_sorted.begin(), a_sorted.end()), a_sorted.end());
    if (a_sorted.size() != a_members.size())
        throw error("epicity check: repeated subset element");
    if (sg(b, a_sorted, budget).members != a_sorted)
        throw error("epicity check: subset is not a subuniverse");
    budget.counters().pairs_checked.fetch_add(1, std::memory_order_relaxed);

    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        std::map<std::vector<int>, std::vector<int>> first_by_restriction;
        std::optional<EpicCounterexample> found;
        for_each_hom(b, targets[ti], nullptr, budget, [&](const std::vector<int>& h) {
            std::vector<int> key;
            key.reserve(a_sorted.size());
            for (int e : a_sorted) key.push_back(h[static_cast<std::size_t>(e)]);
            auto [it, fresh] = first_by_restriction.insert({std::move(key), h});
            if (!fresh && it->second != h) {
                EpicCounterexample cx;
                cx.target_index = static_cast<int>(ti);
                cx.g = it->second;
                cx.g2 = h;
                for (std::size_t e = 0; e < h.size(); ++e)
                    if (cx.g[e] != h[e]) {
                        cx.element = static_cast<int>(e);
                        break;
                    }
                found = std::move(cx);
                return false;
            }
            return true;
        });
        if (found) return EpicResult{false, std::move(found)};
    }
    return EpicResult{true, std::nullopt};
}

/// A proper epic pair dug out of the scan: B is a subalgebra of a product of
/// class members, A a maximal proper subuniverse of B, and the certificate
/// is the ready-to-verify flat-equation witness.
struct ProperEpicWitness {
    std::vector<int> product_factors; // indices into the class, the fold tuple
    std::vector<int> b_elements;      // B inside the product
    Algebra b;
    std::vector<int> a_members;       // inside B's own numbering
    DeltaCertificate certificate;
};

namespace detail {

struct EpicJob {
    std::vector<int> product_factors;
    std::vector<int> b_elements;
    Algebra b;
    std::vector<int> a_members;
};

// Jobs are evaluated in fixed-size waves. A wave is fully evaluated before
// its results are inspected, and its size does not depend on the thread
// count, so the first hit and all statistics are reproducible.
inline constexpr std::size_t kWaveSize = 16;

inline void run_wave(std::span<const EpicJob> jobs, std::span<const Algebra> targets,
                     std::vector<EpicResult>& results, int threads, Budget& budget) {
    results.assign(jobs.size(), EpicResult{});
    if (threads <= 1 || jobs.size() <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            results[i] = is_epic(jobs[i].b, jobs[i].a_members, targets, budget);
        return;
    }
    std::size_t nslices = std::min<std::size_t>(static_cast<std::size_t>(threads), jobs.size());
    std::vector<std::exception_ptr> errors(nslices);
    std::vector<std::future<void>> futures;
    futures.reserve(nslices);
    for (std::size_t s = 0; s < nslices; ++s) {
        std::size_t lo = jobs.size() * s / nslices;
        std::size_t hi = jobs.size() * (s + 1) / nslices;
        futures.push_back(std::async(std::launch::async, [&, lo, hi, s] {
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    results[i] = is_epic(jobs[i].b, jobs[i].a_members, targets, budget);
            } catch (...) {
                errors[s] = std::current_exception();
            }
        }));
    }
    for (auto& f : futures) f.get();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Non-decreasing index tuples of each length 1..fold, by length then lex.
inline std::vector<std::vector<int>> fold_combinations(int members, int fold) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int next, int remaining) -> void {
        if (remaining == 0) {
            out.push_back(cur);
            return;
        }
        for (int i = next; i < members; ++i) {
            cur.push_back(i);
            self(self, i, remaining - 1);
            cur.pop_back();
        }
    };
    for (int len = 1; len <= fold; ++len) rec(rec, 0, len);
    return out;
}

} // namespace detail

/// Scans the subalgebras of all fold-limited products of class members for a
/// maximal proper subuniverse that sits epically (with the class itself as
/// targets). Products, subalgebras and (B, A) pairs are deduplicated up to
/// isomorphism; the scan order is canonical, so the first witness is a
/// deterministic function of the class.
inline std::optional<ProperEpicWitness> find_proper_epic(const AlgebraClass& s, int fold,
                                                         int threads, Budget& budget) {
    if (fold < 1) throw error("epic scan: fold must be >= 1");
    std::vector<Algebra> targets = s.algebras();
    if (targets.empty()) return std::nullopt;

    std::set<std::vector<int>> seen_products;
    std::set<std::vector<int>> seen_b;
    std::set<std::vector<int>> seen_pairs;
    std::vector<EpicResult> results;

    for (const std::vector<int>& combo : detail::fold_combinations(static_cast<int>(targets.size()), fold)) {
        std::vector<Algebra> factors;
        factors.reserve(combo.size());
        for (int i : combo) factors.push_back(targets[static_cast<std::size_t>(i)]);
        Algebra p = product(factors);
        budget.counters().products_built.fetch_add(1, std::memory_order_relaxed);
        if (!seen_products.insert(canonical_form(p, budget).encoding).second) continue;

        std::vector<detail::EpicJob> jobs;
        for (const Subuniverse& sub : subuniverses(p, budget)) {
            Algebra b = induced(p, sub);
            if (!seen_b.insert(canonical_form(b, budget).encoding).second) continue;
            budget.counters().subalgebras_scanned.fetch_add(1, std::memory_order_relaxed);
            for (const Subuniverse& a : maximal_proper_subuniverses(b, budget)) {
                if (!seen_pairs.insert(canonical_form_marked(b, a.members, budget).encoding).second)
                    continue;
                detail::EpicJob job;
                job.product_factors = combo;
                job.b_elements = sub.members;
                job.b = b;
                job.a_members = a.members;
                jobs.push_back(std::move(job));
            }
        }
        for (std::size_t w0 = 0; w0 < jobs.size(); w0 += detail::kWaveSize) {
            std::size_t w1 = std::min(w0 + detail::kWaveSize, jobs.size());
            std::span<const detail::EpicJob> wave(jobs.data() + w0, w1 - w0);
            detail::run_wave(wave, targets, results, threads, budget);
            for (std::size_t i = 0; i < wave.size(); ++i) {
                if (!results[i].epic) continue;
                const detail::EpicJob& job = wave[i];
                ProperEpicWitness w;
                w.product_factors = job.product_factors;
                w.b_elements = job.b_elements;
                w.b = job.b;
                w.a_members = job.a_members;
                w.certificate = delta_formula(job.b, job.a_members);
                return w;
            }
        }
    }
    return std::nullopt;
}

enum class DecideMode { quasivariety, variety, arithmetical };
enum class SChoice { qrsi, is_closure };

inline const char* to_string(DecideMode m) {
    switch (m) {
        case DecideMode::quasivariety: return "quasivariety";
        case DecideMode::variety: return "variety";
        case DecideMode::arithmetical: return "arithmetical";
    }
    return "unknown";
}

enum class Verdict { surjective, not_surjective, inapplicable, resource_limit };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::surjective: return "surjective";
        case Verdict::not_surjective: return "not-surjective";
        case Verdict::inapplicable: return "inapplicable";
        case Verdict::resource_limit: return "resource-limit";
    }
    return "unknown";
}

struct DecideOptions {
    DecideMode mode = DecideMode::quasivariety;
    int nu_arity = 3;
    std::optional<int> fold; // default: nu_arity - 1
    SChoice s_choice = SChoice::qrsi;
    int threads = 1;
};

struct DecisionReport {
    DecideMode mode = DecideMode::quasivariety;
    Verdict verdict = Verdict::inapplicable;
    std::optional<Term> nu_term;
    std::optional<Term> pixley_term;
    int nu_arity = 0;
    int fold = 0;
    std::string s_description;
    AlgebraClass s_class;
    std::optional<ProperEpicWitness> witness;
    std::string inapplicable_reason;
    std::string limit_reason;
    bool conditional_on_fsi_surrogate = false;
    std::uint64_t stat_products = 0;
    std::uint64_t stat_subalgebras = 0;
    std::uint64_t stat_pairs = 0;
    std::uint64_t stat_hom_calls = 0;
};

/// Does every epimorphism into a member of the class generated by F have to
/// be surjective? Not-surjective verdicts come with a checked witness; a
/// surjective verdict means the scan ran to completion.
inline DecisionReport decide_surjective_epis(std::span<const Algebra> F, const DecideOptions& opt,
                                             Budget& budget) {
    if (F.empty()) throw error("decision: empty class");
    if (!same_signature(F)) throw error("decision: signature mismatch");
    for (const Algebra& a : F) a.validate();

    DecisionReport rep;
    rep.mode = opt.mode;
    rep.nu_arity = opt.nu_arity;
    try {
        if (opt.mode == DecideMode::arithmetical) {
            rep.pixley_term = find_pixley_term(F, budget);
            rep.fold = 1;
            if (!rep.pixley_term) {
                rep.verdict = Verdict::inapplicable;
                rep.inapplicable_reason = "no Pixley term: the generated variety is not arithmetical";
            } else {
                AlgebraClass hs = class_HS(F, budget);
                AlgebraClass fsi;
                for (const auto& m : hs.members())
                    if (is_fsi(m.alg, budget)) fsi.insert(m.alg, m.provenance, budget);
                rep.s_description = "finitely subdirectly irreducible members of the HS closure";
                rep.s_class = fsi;
                rep.conditional_on_fsi_surrogate = true;
                std::string offender;
                for (const auto& m : fsi.members()) {
                    for (const Subuniverse& sub : subuniverses(m.alg, budget)) {
                        if (!is_fsi(induced(m.alg, sub), budget)) {
                            offender = "subalgebra " + detail::set_to_string(sub.members) + " of " +
                                       m.provenance + " is not finitely subdirectly irreducible";
                            break;
                        }
                    }
                    if (!offender.empty()) break;
                }
                if (!offender.empty()) {
                    rep.verdict = Verdict::inapplicable;
                    rep.inapplicable_reason = offender;
                } else {
                    rep.witness = find_proper_epic(fsi, 1, opt.threads, budget);
                    rep.verdict = rep.witness ? Verdict::not_surjective : Verdict::surjective;
                }
            }
        } else {
            rep.nu_term = find_nu_term(F, opt.nu_arity, budget);
            rep.fold = opt.fold.value_or(opt.nu_arity - 1);
            if (rep.fold < 1) throw error("decision: fold must be >= 1");
            if (!rep.nu_term) {
                rep.verdict = Verdict::inapplicable;
                rep.inapplicable_reason = "no near-unanimity term of arity " +
                                          std::to_string(opt.nu_arity);
            } else {
                if (opt.mode == DecideMode::quasivariety) {
                    if (opt.s_choice == SChoice::qrsi) {
                        rep.s_class = q_rsi_class(F, budget).rsi_class;
                        rep.s_description =
                            "relatively subdirectly irreducible members of the quasivariety";
                    } else {
                        rep.s_class = class_IS(F, budget);
                        rep.s_description = "all subalgebras of class members, up to isomorphism";
                    }
                } else {
                    AlgebraClass hs = class_HS(F, budget);
                    if (opt.s_choice == SChoice::qrsi) {
                        AlgebraClass si;
                        for (const auto& m : hs.members())
                            if (is_si(m.alg, budget)) si.insert(m.alg, m.provenance, budget);
                        rep.s_class = si;
                        rep.s_description = "subdirectly irreducible members of the HS closure";
                    } else {
                        rep.s_class = hs;
                        rep.s_description = "the full HS closure, up to isomorphism";
                    }
                }
                rep.witness = find_proper_epic(rep.s_class, rep.fold, opt.threads, budget);
                rep.verdict = rep.witness ? Verdict::not_surjective : Verdict::surjective;
            }
        }
        if (rep.witness) {
            VerifyResult check = verify_witness(rep.witness->b, rep.witness->a_members,
                                                rep.witness->certificate, rep.s_class.algebras(),
                                                budget);
            if (!check.ok)
                throw error(std::string("internal: witness failed verification: ") + check.detail);
        }
    } catch (const limit_error& e) {
        rep.verdict = Verdict::resource_limit;
        rep.limit_reason = e.what();
        rep.witness.reset();
    }
    rep.stat_products = budget.counters().products_built.load();
    rep.stat_subalgebras = budget.counters().subalgebras_scanned.load();
    rep.stat_pairs = budget.counters().pairs_checked.load();
    rep.stat_hom_calls = budget.counters().hom_calls.load();
    return rep;
}

} // namespace episub
