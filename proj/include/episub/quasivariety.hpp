#pragma once

#include <optional>
#include <span>
#include <vector>

#include "algebra.hpp"
#include "canonical.hpp"
#include "core.hpp"
#include "hom.hpp"
#include "structure.hpp"

namespace episub {

/// Membership in the quasivariety generated by F. For finite algebras this
/// is embeddability into a finite product of members, i.e. every pair of
/// distinct elements is separated by a homomorphism into some member.
inline bool in_quasivariety(const Algebra& alg, std::span<const Algebra> F, Budget& budget) {
    if (F.empty()) throw error("quasivariety membership: empty class");
    if (!same_signature(F)) throw error("quasivariety membership: signature mismatch");
    if (!(alg.sig == F[0].sig)) throw error("quasivariety membership: signature mismatch");
    int n = alg.size;
    if (n == 1) return true; // embeds in the empty product
    std::vector<char> separated(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    std::size_t remaining = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
    for (const Algebra& c : F) {
        if (remaining == 0) break;
        for_each_hom(alg, c, nullptr, budget, [&](const std::vector<int>& h) {
            for (int a = 0; a < n && remaining > 0; ++a) {
                for (int b = a + 1; b < n; ++b) {
                    auto& flag = separated[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
                                           static_cast<std::size_t>(b)];
                    if (!flag && h[static_cast<std::size_t>(a)] != h[static_cast<std::size_t>(b)]) {
                        flag = 1;
                        --remaining;
                    }
                }
            }
            return remaining > 0;
        });
    }
    return remaining == 0;
}

/// Congruences whose quotient stays inside the quasivariety, and the
/// relative subdirect-irreducibility facts derived from them. Relative
/// congruences are closed under intersection, so irreducibility amounts to
/// the meet of the non-diagonal ones staying off the diagonal.
struct RsiReport {
    int member = -1; // index into the subalgebra class
    std::vector<Congruence> q_congruences;
    std::optional<Congruence> relative_monolith;
    bool rsi = false;
};

struct QRsiResult {
    AlgebraClass is_class;
    AlgebraClass rsi_class;
    std::vector<RsiReport> reports;
};

/// Relatively subdirectly irreducible members of the quasivariety generated
/// by F. Candidates are the subalgebras of members (up to isomorphism);
/// each is tested via its lattice of relative congruences.
inline QRsiResult q_rsi_class(std::span<const Algebra> F, Budget& budget) {
    QRsiResult out;
    out.is_class = class_IS(F, budget);
    const auto& members = out.is_class.members();
    for (std::size_t i = 0; i < members.size(); ++i) {
        const Algebra& m = members[i].alg;
        RsiReport rep;
        rep.member = static_cast<int>(i);
        for (const Congruence& theta : congruences(m, budget)) {
            if (theta.is_diagonal() || in_quasivariety(quotient(m, theta).alg, F, budget))
                rep.q_congruences.push_back(theta);
        }
        std::optional<Congruence> meet_all;
        for (const Congruence& theta : rep.q_congruences) {
            if (theta.is_diagonal()) continue;
            meet_all = meet_all ? meet(*meet_all, theta) : theta;
        }
        if (m.size >= 2 && meet_all && !meet_all->is_diagonal()) {
            rep.rsi = true;
            rep.relative_monolith = std::move(meet_all);
            out.rsi_class.insert(m, members[i].provenance, budget);
        }
        out.reports.push_back(std::move(rep));
    }
    return out;
}

} // namespace episub
