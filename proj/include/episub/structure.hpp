#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "algebra.hpp"
#include "core.hpp"

namespace episub {

/// Sorted element list of a subuniverse of some ambient algebra.
struct Subuniverse {
    std::vector<int> members;
    friend bool operator==(const Subuniverse&, const Subuniverse&) = default;
    friend auto operator<=>(const Subuniverse&, const Subuniverse&) = default;
};

namespace detail {

// Closes `members` (deduplicated, any order) under all operations, including
// nullary ones. Each element is processed once: when element at queue
// position p is reached, all argument tuples drawn from members[0..p] that
// use it are applied. Every tuple over the final set is therefore visited
// exactly once, keyed by its latest-discovered coordinate.
inline std::vector<int> close_under_operations(const Algebra& alg, std::span<const int> init,
                                               Budget& budget) {
    std::vector<char> inset(static_cast<std::size_t>(alg.size), 0);
    std::vector<int> members;
    auto add = [&](int x) {
        if (!inset[static_cast<std::size_t>(x)]) {
            inset[static_cast<std::size_t>(x)] = 1;
            members.push_back(x);
        }
    };
    for (int x : init) {
        if (x < 0 || x >= alg.size) throw error("subuniverse closure: element out of range");
        add(x);
    }
    for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f)
        if (alg.sig.symbols[f].arity == 0) add(alg.tables[f][0]);

    std::vector<int> args;
    for (std::size_t p = 0; p < members.size(); ++p) {
        budget.tick("subuniverse closure");
        budget.check_size(members.size(), budget.limits().max_closure_size, "subuniverse closure");
        for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
            int k = alg.sig.symbols[f].arity;
            if (k == 0) continue;
            args.assign(static_cast<std::size_t>(k), 0);
            // Odometer over indices into members[0..p]; require x somewhere.
            std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
            while (true) {
                bool uses_x = false;
                for (int i = 0; i < k; ++i) {
                    args[static_cast<std::size_t>(i)] = members[idx[static_cast<std::size_t>(i)]];
                    if (idx[static_cast<std::size_t>(i)] == p) uses_x = true;
                }
                if (uses_x) add(alg.op(static_cast<int>(f), args));
                int i = k - 1;
                while (i >= 0 && idx[static_cast<std::size_t>(i)] == p) {
                    idx[static_cast<std::size_t>(i)] = 0;
                    --i;
                }
                if (i < 0) break;
                ++idx[static_cast<std::size_t>(i)];
            }
        }
    }
    std::sort(members.begin(), members.end());
    return members;
}

} // namespace detail

inline Subuniverse sg(const Algebra& alg, std::span<const int> generators, Budget& budget) {
    return Subuniverse{detail::close_under_operations(alg, generators, budget)};
}

/// All nonempty subuniverses, ordered by size then lexicographically.
/// Enumeration walks the closed-set lattice upward from the least
/// subuniverse, extending by one generator at a time.
inline std::vector<Subuniverse> subuniverses(const Algebra& alg, Budget& budget) {
    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> queue;
    auto push = [&](std::vector<int> s) {
        if (seen.insert(s).second) {
            budget.check_size(seen.size(), budget.limits().max_class_size, "subuniverse enumeration");
            queue.push_back(std::move(s));
        }
    };
    std::vector<int> least = detail::close_under_operations(alg, {}, budget);
    if (!least.empty()) {
        push(least);
    } else {
        // No constants: every singleton closure starts a chain.
        for (int x = 0; x < alg.size; ++x) {
            std::vector<int> one{x};
            push(detail::close_under_operations(alg, one, budget));
        }
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        std::vector<int> base = queue[qi];
        for (int x = 0; x < alg.size; ++x) {
            if (std::binary_search(base.begin(), base.end(), x)) continue;
            std::vector<int> gens = base;
            gens.push_back(x);
            push(detail::close_under_operations(alg, gens, budget));
        }
    }
    std::vector<Subuniverse> out;
    out.reserve(seen.size());
    for (const auto& s : seen) out.push_back(Subuniverse{s});
    std::sort(out.begin(), out.end(), [](const Subuniverse& a, const Subuniverse& b) {
        if (a.members.size() != b.members.size()) return a.members.size() < b.members.size();
        return a.members < b.members;
    });
    return out;
}

/// Proper subuniverses not contained in any larger proper one, in the same
/// order subuniverses() yields them.
inline std::vector<Subuniverse> maximal_proper_subuniverses(const Algebra& alg, Budget& budget) {
    std::vector<Subuniverse> all = subuniverses(alg, budget);
    std::vector<Subuniverse> proper;
    for (auto& s : all)
        if (static_cast<int>(s.members.size()) < alg.size) proper.push_back(std::move(s));
    std::vector<Subuniverse> out;
    for (std::size_t i = 0; i < proper.size(); ++i) {
        bool maximal = true;
        for (std::size_t j = 0; j < proper.size() && maximal; ++j) {
            if (i == j || proper[j].members.size() <= proper[i].members.size()) continue;
            maximal = !std::includes(proper[j].members.begin(), proper[j].members.end(),
                                     proper[i].members.begin(), proper[i].members.end());
        }
        if (maximal) out.push_back(proper[i]);
    }
    return out;
}

/// Algebra induced on a subuniverse; element i of the result is
/// sub.members[i].
inline Algebra induced(const Algebra& alg, const Subuniverse& sub) {
    int m = static_cast<int>(sub.members.size());
    if (m == 0) throw error("induced algebra: empty subuniverse");
    std::vector<int> pos(static_cast<std::size_t>(alg.size), -1);
    for (int i = 0; i < m; ++i) pos[static_cast<std::size_t>(sub.members[static_cast<std::size_t>(i)])] = i;
    Algebra out;
    out.sig = alg.sig;
    out.size = m;
    out.tables.resize(alg.sig.symbols.size());
    std::vector<int> args;
    for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
        int k = alg.sig.symbols[f].arity;
        out.tables[f].reserve(table_size(m, k));
        detail::for_each_tuple(m, k, [&](const std::vector<int>& t) {
            args.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                args[i] = sub.members[static_cast<std::size_t>(t[i])];
            int v = alg.op(static_cast<int>(f), args);
            int vp = pos[static_cast<std::size_t>(v)];
            if (vp < 0) throw error("induced algebra: set is not closed");
            out.tables[f].push_back(vp);
        });
    }
    return out;
}

/// Direct product; factor tuple (a0,..,ak-1) is coded row-major, so for two
/// factors element i of A paired with j of B is i*|B|+j.
inline Algebra product(std::span<const Algebra> factors) {
    if (factors.empty()) throw error("product: no factors");
    if (!same_signature(factors)) throw error("product: signature mismatch");
    std::size_t n = 1;
    for (const Algebra& a : factors) n *= static_cast<std::size_t>(a.size);
    if (n > 1'000'000) throw error("product: universe too large");
    int nf = static_cast<int>(factors.size());

    auto decode = [&](int e, std::vector<int>& coords) {
        for (int i = nf - 1; i >= 0; --i) {
            int s = factors[static_cast<std::size_t>(i)].size;
            coords[static_cast<std::size_t>(i)] = e % s;
            e /= s;
        }
    };
    Algebra out;
    out.sig = factors[0].sig;
    out.size = static_cast<int>(n);
    out.tables.resize(out.sig.symbols.size());
    std::vector<std::vector<int>> coords;
    std::vector<int> fargs;
    for (std::size_t f = 0; f < out.sig.symbols.size(); ++f) {
        int k = out.sig.symbols[f].arity;
        out.tables[f].reserve(table_size(out.size, k));
        coords.assign(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(nf)));
        fargs.assign(static_cast<std::size_t>(k), 0);
        detail::for_each_tuple(out.size, k, [&](const std::vector<int>& t) {
            for (int i = 0; i < k; ++i) decode(t[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(i)]);
            int result = 0;
            for (int c = 0; c < nf; ++c) {
                for (int i = 0; i < k; ++i) fargs[static_cast<std::size_t>(i)] = coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
                result = result * factors[static_cast<std::size_t>(c)].size +
                         factors[static_cast<std::size_t>(c)].op(static_cast<int>(f), fargs);
            }
            out.tables[f].push_back(result);
        });
    }
    return out;
}

inline Algebra product(const Algebra& a, const Algebra& b) {
    const Algebra fs[2] = {a, b};
    return product(std::span<const Algebra>(fs, 2));
}

/// Partition of 0..n-1 as a block-id vector, normalized so ids appear in
/// first-occurrence order. Only compatible partitions of a given algebra are
/// congruences; cg/congruences construct those.
struct Congruence {
    std::vector<int> block;
    int blocks = 0;

    bool related(int x, int y) const {
        return block[static_cast<std::size_t>(x)] == block[static_cast<std::size_t>(y)];
    }
    bool is_diagonal() const { return blocks == static_cast<int>(block.size()); }
    bool is_total() const { return blocks <= 1; }

    std::vector<std::vector<int>> block_sets() const {
        std::vector<std::vector<int>> out(static_cast<std::size_t>(blocks));
        for (std::size_t x = 0; x < block.size(); ++x)
            out[static_cast<std::size_t>(block[x])].push_back(static_cast<int>(x));
        return out;
    }

    friend bool operator==(const Congruence&, const Congruence&) = default;
    friend auto operator<=>(const Congruence&, const Congruence&) = default;
};

inline Congruence normalize_partition(std::span<const int> raw) {
    Congruence c;
    c.block.assign(raw.size(), -1);
    std::vector<int> relabel(raw.size(), -1);
    int next = 0;
    for (std::size_t x = 0; x < raw.size(); ++x) {
        int r = raw[x];
        if (relabel[static_cast<std::size_t>(r)] < 0) relabel[static_cast<std::size_t>(r)] = next++;
        c.block[x] = relabel[static_cast<std::size_t>(r)];
    }
    c.blocks = next;
    return c;
}

inline Congruence diagonal_congruence(int n) {
    Congruence c;
    c.block.resize(static_cast<std::size_t>(n));
    std::iota(c.block.begin(), c.block.end(), 0);
    c.blocks = n;
    return c;
}

inline Congruence total_congruence(int n) {
    Congruence c;
    c.block.assign(static_cast<std::size_t>(n), 0);
    c.blocks = n > 0 ? 1 : 0;
    return c;
}

inline bool is_compatible(const Algebra& alg, const Congruence& c) {
    if (static_cast<int>(c.block.size()) != alg.size) return false;
    bool ok = true;
    for (std::size_t f = 0; f < alg.sig.symbols.size() && ok; ++f) {
        int k = alg.sig.symbols[f].arity;
        if (k == 0) continue;
        detail::for_each_tuple(alg.size, k, [&](const std::vector<int>& t) {
            // Replace one coordinate by a related element; images must relate.
            for (int i = 0; i < k && ok; ++i) {
                for (int y = 0; y < alg.size; ++y) {
                    if (!c.related(t[static_cast<std::size_t>(i)], y)) continue;
                    std::vector<int> t2 = t;
                    t2[static_cast<std::size_t>(i)] = y;
                    if (!c.related(alg.op(static_cast<int>(f), t),
                                   alg.op(static_cast<int>(f), t2))) {
                        ok = false;
                        break;
                    }
                }
            }
            return ok;
        });
    }
    return ok;
}

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    bool merge(int x, int y) {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        if (x > y) std::swap(x, y);
        parent[static_cast<std::size_t>(y)] = x;
        return true;
    }
    Congruence to_congruence() {
        std::vector<int> raw(parent.size());
        for (std::size_t x = 0; x < parent.size(); ++x) raw[x] = find(static_cast<int>(x));
        return normalize_partition(raw);
    }
};

} // namespace detail

/// Principal congruence Cg(a,b): closes {(a,b)} under reflexivity, symmetry,
/// transitivity and all translations f(c1,..,x,..,ck).
inline Congruence cg(const Algebra& alg, int a, int b) {
    if (a < 0 || a >= alg.size || b < 0 || b >= alg.size)
        throw error("principal congruence: element out of range");
    detail::UnionFind uf(alg.size);
    std::vector<std::pair<int, int>> work;
    if (uf.merge(a, b)) work.push_back({a, b});
    std::vector<int> args;
    while (!work.empty()) {
        auto [x, y] = work.back();
        work.pop_back();
        for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
            int k = alg.sig.symbols[f].arity;
            if (k == 0) continue;
            for (int pos = 0; pos < k; ++pos) {
                detail::for_each_tuple(alg.size, k - 1, [&](const std::vector<int>& rest) {
                    args.clear();
                    args.insert(args.end(), rest.begin(), rest.begin() + pos);
                    args.push_back(x);
                    args.insert(args.end(), rest.begin() + pos, rest.end());
                    int u = alg.op(static_cast<int>(f), args);
                    args[static_cast<std::size_t>(pos)] = y;
                    int v = alg.op(static_cast<int>(f), args);
                    if (uf.merge(u, v)) work.push_back({u, v});
                });
            }
        }
    }
    return uf.to_congruence();
}

inline Congruence meet(const Congruence& a, const Congruence& b) {
    std::size_t n = a.block.size();
    if (b.block.size() != n) throw error("congruence meet: size mismatch");
    std::vector<int> raw(n);
    std::map<std::pair<int, int>, int> key;
    for (std::size_t x = 0; x < n; ++x) {
        auto k = std::make_pair(a.block[x], b.block[x]);
        auto [it, fresh] = key.insert({k, static_cast<int>(key.size())});
        raw[x] = it->second;
        (void)fresh;
    }
    return normalize_partition(raw);
}

inline Congruence join(const Congruence& a, const Congruence& b) {
    std::size_t n = a.block.size();
    if (b.block.size() != n) throw error("congruence join: size mismatch");
    detail::UnionFind uf(static_cast<int>(n));
    std::vector<int> first_a(static_cast<std::size_t>(a.blocks), -1);
    std::vector<int> first_b(static_cast<std::size_t>(b.blocks), -1);
    for (std::size_t x = 0; x < n; ++x) {
        int& fa = first_a[static_cast<std::size_t>(a.block[x])];
        int& fb = first_b[static_cast<std::size_t>(b.block[x])];
        if (fa < 0) fa = static_cast<int>(x); else uf.merge(fa, static_cast<int>(x));
        if (fb < 0) fb = static_cast<int>(x); else uf.merge(fb, static_cast<int>(x));
    }
    return uf.to_congruence();
}

/// The whole congruence lattice: principal congruences closed under joins.
/// Sorted by block count descending (diagonal first), then block vector.
inline std::vector<Congruence> congruences(const Algebra& alg, Budget& budget) {
    std::set<Congruence> seen;
    seen.insert(diagonal_congruence(alg.size));
    std::vector<Congruence> work;
    for (int a = 0; a < alg.size; ++a) {
        for (int b = a + 1; b < alg.size; ++b) {
            budget.tick("congruence enumeration");
            Congruence c = cg(alg, a, b);
            if (seen.insert(c).second) work.push_back(std::move(c));
        }
    }
    std::vector<Congruence> known(seen.begin(), seen.end());
    for (std::size_t i = 0; i < work.size(); ++i) {
        for (std::size_t j = 0; j < known.size(); ++j) {
            budget.tick("congruence enumeration");
            Congruence c = join(work[i], known[j]);
            if (seen.insert(c).second) {
                budget.check_size(seen.size(), budget.limits().max_class_size,
                                  "congruence enumeration");
                work.push_back(c);
                known.push_back(std::move(c));
            }
        }
    }
    std::vector<Congruence> out(seen.begin(), seen.end());
    std::sort(out.begin(), out.end(), [](const Congruence& a, const Congruence& b) {
        if (a.blocks != b.blocks) return a.blocks > b.blocks;
        return a.block < b.block;
    });
    return out;
}

struct Quotient {
    Algebra alg;
    std::vector<int> projection; // element -> block id
};

inline Quotient quotient(const Algebra& alg, const Congruence& c) {
    if (static_cast<int>(c.block.size()) != alg.size)
        throw error("quotient: congruence size mismatch");
    if (!is_compatible(alg, c)) throw error("quotient: partition is not a congruence");
    std::vector<int> rep(static_cast<std::size_t>(c.blocks), -1);
    for (int x = 0; x < alg.size; ++x)
        if (rep[static_cast<std::size_t>(c.block[static_cast<std::size_t>(x)])] < 0)
            rep[static_cast<std::size_t>(c.block[static_cast<std::size_t>(x)])] = x;
    Quotient out;
    out.alg.sig = alg.sig;
    out.alg.size = c.blocks;
    out.alg.tables.resize(alg.sig.symbols.size());
    out.projection = c.block;
    std::vector<int> args;
    for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
        int k = alg.sig.symbols[f].arity;
        out.alg.tables[f].reserve(table_size(c.blocks, k));
        detail::for_each_tuple(c.blocks, k, [&](const std::vector<int>& t) {
            args.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                args[i] = rep[static_cast<std::size_t>(t[i])];
            out.alg.tables[f].push_back(
                c.block[static_cast<std::size_t>(alg.op(static_cast<int>(f), args))]);
        });
    }
    return out;
}

/// Meet of all non-diagonal congruences; subdirect irreducibility asks this
/// to stay off the diagonal (one-element algebras never qualify).
inline std::optional<Congruence> monolith(const Algebra& alg, std::span<const Congruence> cons) {
    Congruence m = total_congruence(alg.size);
    bool saw = false;
    for (const Congruence& c : cons) {
        if (c.is_diagonal()) continue;
        m = saw ? meet(m, c) : c;
        saw = true;
    }
    if (!saw || m.is_diagonal()) return std::nullopt;
    return m;
}

inline bool is_si(const Algebra& alg, std::span<const Congruence> cons) {
    if (alg.size <= 1) return false;
    return monolith(alg, cons).has_value();
}

inline bool is_fsi(const Algebra& alg, std::span<const Congruence> cons) {
    if (alg.size <= 1) return false;
    for (std::size_t i = 0; i < cons.size(); ++i) {
        if (cons[i].is_diagonal()) continue;
        for (std::size_t j = i; j < cons.size(); ++j) {
            if (cons[j].is_diagonal()) continue;
            if (meet(cons[i], cons[j]).is_diagonal()) return false;
        }
    }
    return true;
}

inline bool is_simple(const Algebra& alg, std::span<const Congruence> cons) {
    if (alg.size <= 1) return false;
    return cons.size() == 2;
}

inline bool is_si(const Algebra& alg, Budget& budget) {
    return is_si(alg, congruences(alg, budget));
}
inline bool is_fsi(const Algebra& alg, Budget& budget) {
    return is_fsi(alg, congruences(alg, budget));
}
inline bool is_simple(const Algebra& alg, Budget& budget) {
    return is_simple(alg, congruences(alg, budget));
}

} // namespace episub
