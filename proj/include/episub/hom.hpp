#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "algebra.hpp"
#include "core.hpp"

namespace episub {

/// Partial assignment from source elements to target elements; -1 means
/// unassigned. Used to seed searches and to report restrictions.
struct PartialMap {
    std::vector<int> assignment;

    static PartialMap empty(int source_size) {
        PartialMap m;
        m.assignment.assign(static_cast<std::size_t>(source_size), -1);
        return m;
    }
};

namespace detail {

// One ground instance of an operation constraint: h(out) = f^T(h(a1..ak)).
// Cells are the k+1 source elements involved; the search propagates over
// instances indexed by participating element.
struct OpInstance {
    int sym;
    std::vector<int> args;
    int out;
};

struct HomProblem {
    const Algebra* src;
    const Algebra* dst;
    std::vector<OpInstance> instances;
    std::vector<std::vector<int>> instances_of; // per source element

    HomProblem(const Algebra& s, const Algebra& d) : src(&s), dst(&d) {
        instances_of.resize(static_cast<std::size_t>(s.size));
        for (std::size_t f = 0; f < s.sig.symbols.size(); ++f) {
            int k = s.sig.symbols[f].arity;
            if (k == 0) continue; // handled as a seed assignment
            for_each_tuple(s.size, k, [&](const std::vector<int>& args) {
                OpInstance inst{static_cast<int>(f), args, s.op(static_cast<int>(f), args)};
                int idx = static_cast<int>(instances.size());
                instances.push_back(std::move(inst));
                auto touch = [&](int e) {
                    auto& v = instances_of[static_cast<std::size_t>(e)];
                    if (v.empty() || v.back() != idx) v.push_back(idx);
                };
                for (int a : instances.back().args) touch(a);
                touch(instances.back().out);
            });
        }
    }
};

// Forward-checking search over bitmask domains. Target size is capped at 64
// so a domain fits one word; every algebra this library builds stays far
// below that.
class HomSearch {
public:
    HomSearch(const HomProblem& p, Budget& budget) : p_(p), budget_(budget) {
        if (p.dst->size > 64)
            throw error("homomorphism search: target universe larger than 64");
        full_ = p.dst->size == 64 ? ~0ull : ((1ull << p.dst->size) - 1);
    }

    /// Enumerates all homomorphisms extending `fixed`, in some complete
    /// order. Returns false if the visitor stopped the enumeration.
    bool run(const PartialMap* fixed,
             const std::function<bool(const std::vector<int>&)>& visit) {
        budget_.counters().hom_calls.fetch_add(1, std::memory_order_relaxed);
        int n = p_.src->size;
        assign_.assign(static_cast<std::size_t>(n), -1);
        domain_.assign(static_cast<std::size_t>(n), full_);

        // Nullary symbols pin their interpretation.
        for (std::size_t f = 0; f < p_.src->sig.symbols.size(); ++f) {
            if (p_.src->sig.symbols[f].arity != 0) continue;
            int se = p_.src->tables[f][0];
            int te = p_.dst->tables[f][0];
            domain_[static_cast<std::size_t>(se)] &= 1ull << te;
        }
        if (fixed) {
            for (int e = 0; e < n; ++e) {
                int v = fixed->assignment[static_cast<std::size_t>(e)];
                if (v < 0) continue;
                if (v >= p_.dst->size) throw error("homomorphism search: fixed value out of range");
                domain_[static_cast<std::size_t>(e)] &= 1ull << v;
            }
        }
        // Commit all singleton domains up front.
        for (int e = 0; e < n; ++e) {
            if (assign_[static_cast<std::size_t>(e)] >= 0) continue;
            std::uint64_t d = domain_[static_cast<std::size_t>(e)];
            if (d == 0) return true;
            if (std::popcount(d) == 1 && !commit(e, std::countr_zero(d))) return true;
        }
        return dfs(visit);
    }

private:
    bool dfs(const std::function<bool(const std::vector<int>&)>& visit) {
        budget_.tick("homomorphism search");
        int var = -1, best = 65;
        for (int e = 0; e < p_.src->size; ++e) {
            if (assign_[static_cast<std::size_t>(e)] >= 0) continue;
            int c = std::popcount(domain_[static_cast<std::size_t>(e)]);
            if (c < best) {
                best = c;
                var = e;
            }
        }
        if (var < 0) return visit(assign_);

        auto saved_assign = assign_;
        auto saved_domain = domain_;
        std::uint64_t d = domain_[static_cast<std::size_t>(var)];
        while (d) {
            int v = std::countr_zero(d);
            d &= d - 1;
            if (commit(var, v)) {
                if (!dfs(visit)) return false;
            }
            assign_ = saved_assign;
            domain_ = saved_domain;
        }
        return true;
    }

    // Assigns var := v and forward-checks every instance touching a newly
    // assigned element. Returns false on a dead end.
    bool commit(int var, int v) {
        pending_.clear();
        pending_.push_back({var, v});
        while (!pending_.empty()) {
            auto [e, val] = pending_.back();
            pending_.pop_back();
            if (assign_[static_cast<std::size_t>(e)] == val) continue;
            assign_[static_cast<std::size_t>(e)] = val;
            domain_[static_cast<std::size_t>(e)] = 1ull << val;
            for (int idx : p_.instances_of[static_cast<std::size_t>(e)])
                if (!check_instance(idx)) return false;
        }
        return true;
    }

    bool check_instance(int idx) {
        const OpInstance& inst = p_.instances[static_cast<std::size_t>(idx)];
        int k = static_cast<int>(inst.args.size());
        int open = -1, open_count = 0;
        for (int i = 0; i < k; ++i) {
            if (assign_[static_cast<std::size_t>(inst.args[static_cast<std::size_t>(i)])] < 0) {
                open = i;
                ++open_count;
                if (open_count > 1) return true; // too loose to propagate yet
            }
        }
        bool out_open = assign_[static_cast<std::size_t>(inst.out)] < 0;
        if (open_count == 0) {
            vals_.resize(static_cast<std::size_t>(k));
            for (int i = 0; i < k; ++i)
                vals_[static_cast<std::size_t>(i)] =
                    assign_[static_cast<std::size_t>(inst.args[static_cast<std::size_t>(i)])];
            int img = p_.dst->op(inst.sym, vals_);
            if (!out_open)
                return assign_[static_cast<std::size_t>(inst.out)] == img;
            return narrow(inst.out, 1ull << img);
        }
        if (out_open) return true; // two holes: leave for later
        // Exactly one open argument: collect the values making it consistent.
        int need = assign_[static_cast<std::size_t>(inst.out)];
        std::uint64_t ok = 0;
        vals_.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
            if (i != open)
                vals_[static_cast<std::size_t>(i)] =
                    assign_[static_cast<std::size_t>(inst.args[static_cast<std::size_t>(i)])];
        int hole = inst.args[static_cast<std::size_t>(open)];
        std::uint64_t dom = domain_[static_cast<std::size_t>(hole)];
        std::uint64_t scan = dom;
        while (scan) {
            int cand = std::countr_zero(scan);
            scan &= scan - 1;
            vals_[static_cast<std::size_t>(open)] = cand;
            if (p_.dst->op(inst.sym, vals_) == need) ok |= 1ull << cand;
        }
        return narrow(hole, ok);
    }

    bool narrow(int e, std::uint64_t allowed) {
        std::uint64_t d = domain_[static_cast<std::size_t>(e)] & allowed;
        if (d == 0) return false;
        domain_[static_cast<std::size_t>(e)] = d;
        if (std::popcount(d) == 1 && assign_[static_cast<std::size_t>(e)] < 0)
            pending_.push_back({e, std::countr_zero(d)});
        return true;
    }

    const HomProblem& p_;
    Budget& budget_;
    std::uint64_t full_ = 0;
    std::vector<int> assign_;
    std::vector<std::uint64_t> domain_;
    std::vector<std::pair<int, int>> pending_;
    std::vector<int> vals_;
};

} // namespace detail

/// Streams every homomorphism src -> dst extending `fixed` (pass nullptr for
/// no seed). The visitor returns false to stop early; the function returns
/// false iff it was stopped. Enumeration order is unspecified; use homs() for
/// a sorted list.
inline bool for_each_hom(const Algebra& src, const Algebra& dst, const PartialMap* fixed,
                         Budget& budget,
                         const std::function<bool(const std::vector<int>&)>& visit) {
    if (!(src.sig == dst.sig))
        throw error("homomorphism search: signature mismatch");
    detail::HomProblem p(src, dst);
    detail::HomSearch search(p, budget);
    return search.run(fixed, visit);
}

/// All homomorphisms src -> dst extending `fixed`, sorted lexicographically
/// by assignment vector.
inline std::vector<std::vector<int>> homs(const Algebra& src, const Algebra& dst,
                                          Budget& budget, const PartialMap* fixed = nullptr) {
    std::vector<std::vector<int>> out;
    for_each_hom(src, dst, fixed, budget, [&](const std::vector<int>& h) {
        out.push_back(h);
        return true;
    });
    std::sort(out.begin(), out.end());
    return out;
}

inline bool exists_hom(const Algebra& src, const Algebra& dst, Budget& budget,
                       const PartialMap* fixed = nullptr) {
    bool found = false;
    for_each_hom(src, dst, fixed, budget, [&](const std::vector<int>&) {
        found = true;
        return false;
    });
    return found;
}

/// Homomorphisms src -> dst bucketed by their restriction to `sub` (a sorted
/// list of source elements). Groups are ordered by restriction vector, maps
/// inside a group lexicographically.
struct RestrictionGroup {
    std::vector<int> restriction; // images of sub's elements, in sub order
    std::vector<std::vector<int>> maps;
};

struct GroupedHoms {
    std::vector<int> sub;
    std::vector<RestrictionGroup> groups;

    /// First group holding two maps that differ, plus the least element
    /// where they differ. This is exactly a failure of epicity for `sub`.
    struct Disagreement {
        std::vector<int> restriction;
        std::vector<int> g;
        std::vector<int> g2;
        int element;
    };
    std::optional<Disagreement> disagreement() const {
        for (const auto& grp : groups) {
            for (std::size_t i = 1; i < grp.maps.size(); ++i) {
                if (grp.maps[i] != grp.maps[0]) {
                    int where = -1;
                    for (std::size_t e = 0; e < grp.maps[0].size(); ++e)
                        if (grp.maps[0][e] != grp.maps[i][e]) {
                            where = static_cast<int>(e);
                            break;
                        }
                    return Disagreement{grp.restriction, grp.maps[0], grp.maps[i], where};
                }
            }
        }
        return std::nullopt;
    }
};

inline GroupedHoms homs_grouped_by_restriction(const Algebra& src, const Algebra& dst,
                                               std::span<const int> sub, Budget& budget) {
    GroupedHoms out;
    out.sub.assign(sub.begin(), sub.end());
    std::map<std::vector<int>, std::vector<std::vector<int>>> buckets;
    for_each_hom(src, dst, nullptr, budget, [&](const std::vector<int>& h) {
        std::vector<int> key;
        key.reserve(sub.size());
        for (int e : sub) key.push_back(h[static_cast<std::size_t>(e)]);
        buckets[std::move(key)].push_back(h);
        return true;
    });
    for (auto& [key, maps] : buckets) {
        std::sort(maps.begin(), maps.end());
        out.groups.push_back(RestrictionGroup{key, std::move(maps)});
    }
    return out;
}

} // namespace episub
