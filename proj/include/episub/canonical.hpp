#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "core.hpp"
#include "structure.hpp"

namespace episub {

/// Isomorphism-invariant fingerprint of an algebra: two algebras over the
/// same signature get equal encodings iff they are isomorphic. `relabel`
/// maps old element ids to their canonical labels.
struct CanonicalForm {
    std::vector<int> encoding;
    std::vector<int> relabel;

    std::string digest() const {
        std::uint64_t h = detail::fnv1a64(encoding);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }

    friend bool operator==(const CanonicalForm& a, const CanonicalForm& b) {
        return a.encoding == b.encoding;
    }
};

namespace detail {

// Color refinement: start from local invariants, then repeatedly hash each
// element's neighborhood in every operation table until the partition stops
// splitting. The result is isomorphism-invariant but possibly coarser than
// the orbit partition; the search below closes the gap.
inline std::vector<int> refine_colors(const Algebra& alg, std::span<const int> marked,
                                      Budget& budget) {
    int n = alg.size;
    std::vector<char> mark(static_cast<std::size_t>(n), 0);
    for (int x : marked) mark[static_cast<std::size_t>(x)] = 1;

    std::vector<std::vector<std::uint64_t>> key(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        auto& k = key[static_cast<std::size_t>(x)];
        k.push_back(mark[static_cast<std::size_t>(x)]);
        for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
            int ar = alg.sig.symbols[f].arity;
            if (ar == 0) {
                k.push_back(alg.tables[f][0] == x);
            } else {
                std::vector<int> diag(static_cast<std::size_t>(ar), x);
                k.push_back(alg.op(static_cast<int>(f), diag) == x);
            }
        }
    }
    auto rank = [&](std::vector<std::vector<std::uint64_t>>& keys) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
        });
        std::vector<int> color(static_cast<std::size_t>(n), 0);
        int c = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i && keys[static_cast<std::size_t>(order[i])] != keys[static_cast<std::size_t>(order[i - 1])])
                ++c;
            color[static_cast<std::size_t>(order[i])] = c;
        }
        return std::pair{color, c + 1};
    };
    auto [color, ncolors] = rank(key);

    while (true) {
        budget.tick("canonical form refinement");
        std::vector<std::vector<std::uint64_t>> next(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x)
            next[static_cast<std::size_t>(x)].push_back(static_cast<std::uint64_t>(color[static_cast<std::size_t>(x)]));
        for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
            int ar = alg.sig.symbols[f].arity;
            if (ar == 0) continue;
            for (int pos = 0; pos < ar; ++pos) {
                std::vector<std::vector<std::uint64_t>> sigs(static_cast<std::size_t>(n));
                for_each_tuple(n, ar, [&](const std::vector<int>& t) {
                    int out = alg.op(static_cast<int>(f), t);
                    std::uint64_t h = 0x9e3779b97f4a7c15ull;
                    h = h * 0x100000001b3ull ^ static_cast<std::uint64_t>(color[static_cast<std::size_t>(out)]);
                    for (int i = 0; i < ar; ++i)
                        if (i != pos)
                            h = h * 0x100000001b3ull ^
                                static_cast<std::uint64_t>(color[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])] + 1);
                    sigs[static_cast<std::size_t>(t[static_cast<std::size_t>(pos)])].push_back(h);
                });
                for (int x = 0; x < n; ++x) {
                    auto& s = sigs[static_cast<std::size_t>(x)];
                    std::sort(s.begin(), s.end());
                    std::uint64_t h = 0xcbf29ce484222325ull;
                    for (std::uint64_t v : s) {
                        h ^= v;
                        h *= 0x100000001b3ull;
                    }
                    next[static_cast<std::size_t>(x)].push_back(h);
                }
            }
        }
        auto [ncolor, count] = rank(next);
        if (count == ncolors) return color;
        color = std::move(ncolor);
        ncolors = count;
    }
}

// Encoding body for a candidate relabeling: all tables rewritten to the new
// labels, row-major over new labels, then the marked mask. Header (sizes,
// signature) is identical across relabelings so only the body is minimized.
inline std::vector<int> encode_body(const Algebra& alg, std::span<const int> marked,
                                    const std::vector<int>& relabel) {
    int n = alg.size;
    std::vector<int> inv(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) inv[static_cast<std::size_t>(relabel[static_cast<std::size_t>(x)])] = x;
    std::vector<int> body;
    std::vector<int> args;
    for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
        int ar = alg.sig.symbols[f].arity;
        for_each_tuple(n, ar, [&](const std::vector<int>& t) {
            args.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                args[i] = inv[static_cast<std::size_t>(t[i])];
            body.push_back(relabel[static_cast<std::size_t>(alg.op(static_cast<int>(f), args))]);
        });
    }
    std::vector<char> mark(static_cast<std::size_t>(n), 0);
    for (int x : marked) mark[static_cast<std::size_t>(x)] = 1;
    for (int e = 0; e < n; ++e) body.push_back(mark[static_cast<std::size_t>(inv[static_cast<std::size_t>(e)])]);
    return body;
}

} // namespace detail

/// Canonical form with distinguished elements: `marked` is carried as an
/// extra unary predicate, so (B, A) pairs can be deduplicated up to
/// isomorphisms preserving the marked set.
inline CanonicalForm canonical_form_marked(const Algebra& alg, std::span<const int> marked,
                                           Budget& budget) {
    alg.validate();
    int n = alg.size;
    std::vector<int> color = detail::refine_colors(alg, marked, budget);

    // Class blocks in color order; a valid relabeling maps each block onto a
    // contiguous range, in block order.
    int ncolors = *std::max_element(color.begin(), color.end()) + 1;
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(ncolors));
    for (int x = 0; x < n; ++x) blocks[static_cast<std::size_t>(color[static_cast<std::size_t>(x)])].push_back(x);

    std::vector<int> slot_of_pos(static_cast<std::size_t>(n)); // new label -> block
    {
        int p = 0;
        for (int c = 0; c < ncolors; ++c)
            for (std::size_t i = 0; i < blocks[static_cast<std::size_t>(c)].size(); ++i)
                slot_of_pos[static_cast<std::size_t>(p++)] = c;
    }

    std::vector<int> relabel(static_cast<std::size_t>(n), -1);
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    std::vector<int> best_body;
    std::vector<int> best_relabel;

    auto dfs = [&](auto&& self, int pos) -> void {
        budget.tick("canonical form search");
        if (pos == n) {
            std::vector<int> body = detail::encode_body(alg, marked, relabel);
            if (best_body.empty() || body < best_body) {
                best_body = std::move(body);
                best_relabel = relabel;
            }
            return;
        }
        for (int x : blocks[static_cast<std::size_t>(slot_of_pos[static_cast<std::size_t>(pos)])]) {
            if (used[static_cast<std::size_t>(x)]) continue;
            used[static_cast<std::size_t>(x)] = 1;
            relabel[static_cast<std::size_t>(x)] = pos;
            self(self, pos + 1);
            used[static_cast<std::size_t>(x)] = 0;
            relabel[static_cast<std::size_t>(x)] = -1;
        }
    };
    dfs(dfs, 0);

    CanonicalForm out;
    out.relabel = best_relabel;
    // Header: universe size, signature shape and names, block profile.
    out.encoding.push_back(n);
    out.encoding.push_back(static_cast<int>(alg.sig.symbols.size()));
    for (const auto& s : alg.sig.symbols) {
        out.encoding.push_back(s.arity);
        out.encoding.push_back(static_cast<int>(s.name.size()));
        for (char ch : s.name) out.encoding.push_back(static_cast<int>(static_cast<unsigned char>(ch)));
    }
    out.encoding.insert(out.encoding.end(), best_body.begin(), best_body.end());
    return out;
}

inline CanonicalForm canonical_form(const Algebra& alg, Budget& budget) {
    return canonical_form_marked(alg, {}, budget);
}

/// Image of the algebra under a permutation of its universe (old -> new).
inline Algebra relabeled(const Algebra& alg, std::span<const int> relabel) {
    if (static_cast<int>(relabel.size()) != alg.size)
        throw error("relabel: permutation size mismatch");
    int n = alg.size;
    std::vector<int> inv(static_cast<std::size_t>(n), -1);
    for (int x = 0; x < n; ++x) {
        int y = relabel[static_cast<std::size_t>(x)];
        if (y < 0 || y >= n || inv[static_cast<std::size_t>(y)] >= 0)
            throw error("relabel: not a permutation");
        inv[static_cast<std::size_t>(y)] = x;
    }
    Algebra out;
    out.sig = alg.sig;
    out.size = n;
    out.tables.resize(alg.sig.symbols.size());
    std::vector<int> args;
    for (std::size_t f = 0; f < alg.sig.symbols.size(); ++f) {
        int ar = alg.sig.symbols[f].arity;
        out.tables[f].reserve(table_size(n, ar));
        detail::for_each_tuple(n, ar, [&](const std::vector<int>& t) {
            args.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                args[i] = inv[static_cast<std::size_t>(t[i])];
            out.tables[f].push_back(relabel[static_cast<std::size_t>(alg.op(static_cast<int>(f), args))]);
        });
    }
    return out;
}

inline bool is_isomorphic(const Algebra& a, const Algebra& b, Budget& budget) {
    if (!(a.sig == b.sig) || a.size != b.size) return false;
    return canonical_form(a, budget).encoding == canonical_form(b, budget).encoding;
}

/// Finite class of algebras kept deduplicated up to isomorphism and ordered
/// by canonical encoding. Each member remembers where it came from.
class AlgebraClass {
public:
    struct Member {
        Algebra alg;
        CanonicalForm canon;
        std::string provenance;
    };

    /// Returns {index, inserted}. A representative already present keeps its
    /// provenance; the new copy is dropped.
    std::pair<int, bool> insert(Algebra alg, std::string provenance, Budget& budget) {
        CanonicalForm canon = canonical_form(alg, budget);
        auto it = std::lower_bound(members_.begin(), members_.end(), canon.encoding,
                                   [](const Member& m, const std::vector<int>& e) {
                                       return m.canon.encoding < e;
                                   });
        if (it != members_.end() && it->canon.encoding == canon.encoding)
            return {static_cast<int>(it - members_.begin()), false};
        int idx = static_cast<int>(it - members_.begin());
        members_.insert(it, Member{std::move(alg), std::move(canon), std::move(provenance)});
        return {idx, true};
    }

    /// Index of the member isomorphic to `alg`, or -1.
    int find(const Algebra& alg, Budget& budget) const {
        CanonicalForm canon = canonical_form(alg, budget);
        auto it = std::lower_bound(members_.begin(), members_.end(), canon.encoding,
                                   [](const Member& m, const std::vector<int>& e) {
                                       return m.canon.encoding < e;
                                   });
        if (it != members_.end() && it->canon.encoding == canon.encoding)
            return static_cast<int>(it - members_.begin());
        return -1;
    }

    bool contains(const Algebra& alg, Budget& budget) const { return find(alg, budget) >= 0; }

    const std::vector<Member>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }

    std::vector<Algebra> algebras() const {
        std::vector<Algebra> out;
        out.reserve(members_.size());
        for (const Member& m : members_) out.push_back(m.alg);
        return out;
    }

private:
    std::vector<Member> members_;
};

namespace detail {

inline std::string set_to_string(std::span<const int> xs) {
    std::string s = "{";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(xs[i]);
    }
    s += "}";
    return s;
}

inline std::string partition_to_string(const Congruence& c) {
    std::string s = "{";
    auto blocks = c.block_sets();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) s += ",";
        s += set_to_string(blocks[i]);
    }
    s += "}";
    return s;
}

} // namespace detail

/// Closure of the listed algebras under subalgebras, up to isomorphism.
inline AlgebraClass class_IS(std::span<const Algebra> algebras, Budget& budget) {
    if (algebras.empty()) throw error("class operator: empty input");
    if (!same_signature(algebras)) throw error("class operator: signature mismatch");
    AlgebraClass out;
    for (std::size_t i = 0; i < algebras.size(); ++i) {
        for (const Subuniverse& s : subuniverses(algebras[i], budget)) {
            std::string prov = "F" + std::to_string(i + 1) + " sub " + detail::set_to_string(s.members);
            out.insert(induced(algebras[i], s), std::move(prov), budget);
        }
    }
    return out;
}

/// Closure under homomorphic images of subalgebras, up to isomorphism.
inline AlgebraClass class_HS(std::span<const Algebra> algebras, Budget& budget) {
    if (algebras.empty()) throw error("class operator: empty input");
    if (!same_signature(algebras)) throw error("class operator: signature mismatch");
    AlgebraClass out;
    for (std::size_t i = 0; i < algebras.size(); ++i) {
        for (const Subuniverse& s : subuniverses(algebras[i], budget)) {
            Algebra sub = induced(algebras[i], s);
            std::string base = "F" + std::to_string(i + 1) + " sub " + detail::set_to_string(s.members);
            for (const Congruence& theta : congruences(sub, budget)) {
                std::string prov = theta.is_diagonal() ? base : base + " / " + detail::partition_to_string(theta);
                out.insert(quotient(sub, theta).alg, std::move(prov), budget);
            }
        }
    }
    return out;
}

} // namespace episub
