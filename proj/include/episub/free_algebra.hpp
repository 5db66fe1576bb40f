#pragma once

#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "algebra.hpp"
#include "core.hpp"

namespace episub {

namespace detail {

/// Closure of generator rows inside a product of column algebras, applying
/// every operation componentwise. Elements remember how they were produced,
/// so each one converts back to a term in the generators.
struct SubpowerClosure {
    std::vector<std::vector<int>> elements;     // discovery order
    std::vector<int> parent_sym;                // -1 for generators
    std::vector<std::vector<int>> parent_args;  // element indices
    std::vector<int> generator_of;              // variable index or -1
    std::unordered_map<std::vector<int>, int, VecHash> index;

    int find(const std::vector<int>& v) const {
        auto it = index.find(v);
        return it == index.end() ? -1 : it->second;
    }

    Term term_of(int e) const {
        if (generator_of[static_cast<std::size_t>(e)] >= 0)
            return Term::v(generator_of[static_cast<std::size_t>(e)]);
        std::vector<Term> args;
        args.reserve(parent_args[static_cast<std::size_t>(e)].size());
        for (int a : parent_args[static_cast<std::size_t>(e)]) args.push_back(term_of(a));
        return Term::ap(parent_sym[static_cast<std::size_t>(e)], std::move(args));
    }
};

/// Runs the closure. `col_algebra[c]` names the algebra acting on column c.
/// If `stop_at` is given, the closure returns as soon as that row appears;
/// the return value is its element index, or -1 after a full closure without
/// finding it.
inline int close_subpower(std::span<const Algebra> cls, std::span<const int> col_algebra,
                          const std::vector<std::vector<int>>& generators,
                          const std::vector<int>* stop_at, SubpowerClosure& out, Budget& budget) {
    const Signature& sig = cls[0].sig;
    std::size_t ncols = col_algebra.size();
    int found = -1;
    auto add = [&](std::vector<int> v, int sym, std::vector<int> args, int gen) {
        auto [it, fresh] = out.index.insert({v, static_cast<int>(out.elements.size())});
        if (!fresh) return it->second;
        out.elements.push_back(std::move(v));
        out.parent_sym.push_back(sym);
        out.parent_args.push_back(std::move(args));
        out.generator_of.push_back(gen);
        budget.check_size(out.elements.size(), budget.limits().max_closure_size,
                          "subpower closure");
        int id = it->second;
        if (stop_at && found < 0 && out.elements[static_cast<std::size_t>(id)] == *stop_at)
            found = id;
        return id;
    };

    for (std::size_t g = 0; g < generators.size(); ++g) {
        if (generators[g].size() != ncols) throw error("subpower closure: bad generator row");
        add(generators[g], -1, {}, static_cast<int>(g));
    }
    std::vector<int> row(ncols);
    for (std::size_t f = 0; f < sig.symbols.size(); ++f) {
        if (sig.symbols[f].arity != 0) continue;
        for (std::size_t c = 0; c < ncols; ++c)
            row[c] = cls[static_cast<std::size_t>(col_algebra[c])].tables[f][0];
        add(row, static_cast<int>(f), {}, -1);
    }
    if (found >= 0) return found;

    std::vector<int> opargs;
    for (std::size_t p = 0; p < out.elements.size(); ++p) {
        budget.tick("subpower closure");
        for (std::size_t f = 0; f < sig.symbols.size(); ++f) {
            int k = sig.symbols[f].arity;
            if (k == 0) continue;
            std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
            while (true) {
                bool uses_p = false;
                for (int i = 0; i < k; ++i)
                    if (idx[static_cast<std::size_t>(i)] == p) uses_p = true;
                if (uses_p) {
                    for (std::size_t c = 0; c < ncols; ++c) {
                        const Algebra& colalg = cls[static_cast<std::size_t>(col_algebra[c])];
                        opargs.resize(static_cast<std::size_t>(k));
                        for (int i = 0; i < k; ++i)
                            opargs[static_cast<std::size_t>(i)] =
                                out.elements[idx[static_cast<std::size_t>(i)]][c];
                        row[c] = colalg.op(static_cast<int>(f), opargs);
                    }
                    std::vector<int> args(idx.begin(), idx.end());
                    add(row, static_cast<int>(f), std::move(args), -1);
                    if (found >= 0) return found;
                }
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
    return found;
}

/// One column of a term-search problem: in which algebra it lives, what each
/// variable is there, and the value the term has to produce.
struct ColumnProblem {
    int nvars = 0;
    std::vector<int> col_algebra;
    std::vector<std::vector<int>> gen_rows; // nvars rows
    std::vector<int> target;
};

/// Decides whether some term over the class hits every column's target, and
/// reconstructs one if so. Duplicate columns collapse; equal columns with
/// different targets are an immediate refutation.
inline std::optional<Term> term_fitting_columns(std::span<const Algebra> cls,
                                                const ColumnProblem& prob, Budget& budget) {
    if (cls.empty()) throw error("term search: empty class");
    if (!same_signature(cls)) throw error("term search: signature mismatch");
    std::map<std::pair<int, std::vector<int>>, std::pair<std::size_t, int>> dedup;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < prob.col_algebra.size(); ++c) {
        std::vector<int> colgens(static_cast<std::size_t>(prob.nvars));
        for (int j = 0; j < prob.nvars; ++j)
            colgens[static_cast<std::size_t>(j)] = prob.gen_rows[static_cast<std::size_t>(j)][c];
        auto key = std::make_pair(prob.col_algebra[c], std::move(colgens));
        auto [it, fresh] = dedup.insert({std::move(key), {c, prob.target[c]}});
        if (fresh)
            keep.push_back(c);
        else if (it->second.second != prob.target[c])
            return std::nullopt;
    }
    std::vector<int> col_algebra;
    std::vector<std::vector<int>> gens(static_cast<std::size_t>(prob.nvars));
    std::vector<int> target;
    for (std::size_t c : keep) {
        col_algebra.push_back(prob.col_algebra[c]);
        for (int j = 0; j < prob.nvars; ++j)
            gens[static_cast<std::size_t>(j)].push_back(prob.gen_rows[static_cast<std::size_t>(j)][c]);
        target.push_back(prob.target[c]);
    }
    SubpowerClosure closure;
    int hit = close_subpower(cls, col_algebra, gens, &target, closure, budget);
    if (hit < 0) return std::nullopt;
    return closure.term_of(hit);
}

} // namespace detail

/// Free algebra of the class on k generators: the subalgebra of the product
/// over all k-tuples of all members, generated by the projection rows.
struct FreeAlgebra {
    Algebra alg;
    std::vector<int> generators;
    detail::SubpowerClosure closure;

    Term term_of(int element) const { return closure.term_of(element); }
};

inline FreeAlgebra free_algebra(std::span<const Algebra> cls, int k, Budget& budget) {
    if (cls.empty()) throw error("free algebra: empty class");
    if (!same_signature(cls)) throw error("free algebra: signature mismatch");
    if (k < 0) throw error("free algebra: negative rank");
    std::vector<int> col_algebra;
    std::vector<std::vector<int>> gens(static_cast<std::size_t>(k));
    for (std::size_t ai = 0; ai < cls.size(); ++ai) {
        detail::for_each_tuple(cls[ai].size, k, [&](const std::vector<int>& tuple) {
            col_algebra.push_back(static_cast<int>(ai));
            for (int j = 0; j < k; ++j)
                gens[static_cast<std::size_t>(j)].push_back(tuple[static_cast<std::size_t>(j)]);
        });
    }
    FreeAlgebra out;
    detail::close_subpower(cls, col_algebra, gens, nullptr, out.closure, budget);

    int m = static_cast<int>(out.closure.elements.size());
    if (m == 0) throw error("free algebra: empty (rank 0 and no constants)");
    // Projections that coincide as rows share one element.
    out.generators.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        out.generators[static_cast<std::size_t>(j)] = out.closure.find(gens[static_cast<std::size_t>(j)]);

    const Signature& sig = cls[0].sig;
    out.alg.sig = sig;
    out.alg.size = m;
    out.alg.tables.resize(sig.symbols.size());
    std::vector<int> row(col_algebra.size());
    std::vector<int> opargs;
    for (std::size_t f = 0; f < sig.symbols.size(); ++f) {
        int ar = sig.symbols[f].arity;
        out.alg.tables[f].reserve(table_size(m, ar));
        detail::for_each_tuple(m, ar, [&](const std::vector<int>& t) {
            budget.tick("free algebra tables");
            for (std::size_t c = 0; c < col_algebra.size(); ++c) {
                const Algebra& colalg = cls[static_cast<std::size_t>(col_algebra[c])];
                opargs.resize(static_cast<std::size_t>(ar));
                for (int i = 0; i < ar; ++i)
                    opargs[static_cast<std::size_t>(i)] =
                        out.closure.elements[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])][c];
                row[c] = colalg.op(static_cast<int>(f), opargs);
            }
            int e = out.closure.find(row);
            if (e < 0) throw error("free algebra: closure not closed");
            out.alg.tables[f].push_back(e);
        });
    }
    return out;
}

/// Near-unanimity term for the class at the given arity, if one exists. The
/// defining identities become one column per member, argument pair and
/// position; a term fits them all iff it is a near-unanimity term.
inline std::optional<Term> find_nu_term(std::span<const Algebra> cls, int arity, Budget& budget) {
    if (arity < 3) throw error("near-unanimity search: arity must be >= 3");
    if (cls.empty()) throw error("near-unanimity search: empty class");
    detail::ColumnProblem prob;
    prob.nvars = arity;
    prob.gen_rows.resize(static_cast<std::size_t>(arity));
    for (std::size_t ai = 0; ai < cls.size(); ++ai) {
        int n = cls[ai].size;
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                for (int pos = 0; pos < arity; ++pos) {
                    prob.col_algebra.push_back(static_cast<int>(ai));
                    for (int j = 0; j < arity; ++j)
                        prob.gen_rows[static_cast<std::size_t>(j)].push_back(j == pos ? y : x);
                    prob.target.push_back(x);
                }
            }
        }
    }
    return detail::term_fitting_columns(cls, prob, budget);
}

inline std::optional<Term> find_majority_term(std::span<const Algebra> cls, Budget& budget) {
    return find_nu_term(cls, 3, budget);
}

/// Pixley term: p(x,y,y) = p(x,y,x) = p(y,y,x) = x across the class.
inline std::optional<Term> find_pixley_term(std::span<const Algebra> cls, Budget& budget) {
    if (cls.empty()) throw error("pixley search: empty class");
    detail::ColumnProblem prob;
    prob.nvars = 3;
    prob.gen_rows.resize(3);
    auto push = [&](int ai, int a, int b, int c, int tgt) {
        prob.col_algebra.push_back(ai);
        prob.gen_rows[0].push_back(a);
        prob.gen_rows[1].push_back(b);
        prob.gen_rows[2].push_back(c);
        prob.target.push_back(tgt);
    };
    for (std::size_t ai = 0; ai < cls.size(); ++ai) {
        int n = cls[ai].size;
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                push(static_cast<int>(ai), x, y, y, x);
                push(static_cast<int>(ai), x, y, x, x);
                push(static_cast<int>(ai), y, y, x, x);
            }
        }
    }
    return detail::term_fitting_columns(cls, prob, budget);
}

} // namespace episub
