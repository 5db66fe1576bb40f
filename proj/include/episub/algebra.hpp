#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace episub {

struct OperationSymbol {
    std::string name;
    int arity = 0;
    friend bool operator==(const OperationSymbol&, const OperationSymbol&) = default;
};

/// Purely algebraic signature: named operation symbols with arities.
struct Signature {
    std::vector<OperationSymbol> symbols;

    int index_of(std::string_view name) const {
        for (std::size_t i = 0; i < symbols.size(); ++i)
            if (symbols[i].name == name) return static_cast<int>(i);
        return -1;
    }

    void validate() const {
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (symbols[i].name.empty())
                throw error("signature: empty operation name");
            if (symbols[i].arity < 0)
                throw error("signature: negative arity for " + symbols[i].name);
            for (std::size_t j = i + 1; j < symbols.size(); ++j)
                if (symbols[i].name == symbols[j].name)
                    throw error("signature: duplicate operation name " + symbols[i].name);
        }
    }

    friend bool operator==(const Signature&, const Signature&) = default;
};

inline std::size_t table_size(int universe, int arity) {
    std::size_t s = 1;
    for (int i = 0; i < arity; ++i) s *= static_cast<std::size_t>(universe);
    return s;
}

/// Finite algebra: universe 0..size-1, one row-major table per symbol
/// (first argument most significant).
struct Algebra {
    Signature sig;
    int size = 0;
    std::vector<std::vector<int>> tables;

    int op(int sym, std::span<const int> args) const {
        const auto& t = tables[static_cast<std::size_t>(sym)];
        std::size_t idx = 0;
        for (int a : args) idx = idx * static_cast<std::size_t>(size) + static_cast<std::size_t>(a);
        return t[idx];
    }

    void validate() const {
        sig.validate();
        if (size <= 0) throw error("algebra: universe must be nonempty");
        if (tables.size() != sig.symbols.size())
            throw error("algebra: table count does not match signature");
        for (std::size_t i = 0; i < tables.size(); ++i) {
            const auto& sym = sig.symbols[i];
            if (tables[i].size() != table_size(size, sym.arity))
                throw error("algebra: wrong table length for " + sym.name);
            for (int v : tables[i])
                if (v < 0 || v >= size)
                    throw error("algebra: entry out of range in " + sym.name);
        }
    }
};

inline Algebra make_algebra(Signature sig, int size, std::vector<std::vector<int>> tables) {
    Algebra a{std::move(sig), size, std::move(tables)};
    a.validate();
    return a;
}

inline bool same_signature(std::span<const Algebra> algebras) {
    for (std::size_t i = 1; i < algebras.size(); ++i)
        if (!(algebras[i].sig == algebras[0].sig)) return false;
    return true;
}

/// Term over a signature. A node is either a variable leaf (var >= 0) or an
/// application of symbol `sym` to `args`.
struct Term {
    int var = -1;
    int sym = -1;
    std::vector<Term> args;

    bool is_var() const { return var >= 0; }

    static Term v(int index) {
        Term t;
        t.var = index;
        return t;
    }
    static Term ap(int symbol, std::vector<Term> arguments) {
        Term t;
        t.sym = symbol;
        t.args = std::move(arguments);
        return t;
    }

    friend bool operator==(const Term&, const Term&) = default;
};

inline void validate_term(const Term& t, const Signature& sig, int nvars) {
    if (t.is_var()) {
        if (t.var >= nvars) throw error("term: variable index out of range");
        return;
    }
    if (t.sym < 0 || t.sym >= static_cast<int>(sig.symbols.size()))
        throw error("term: unknown operation symbol");
    if (static_cast<int>(t.args.size()) != sig.symbols[static_cast<std::size_t>(t.sym)].arity)
        throw error("term: arity mismatch for " + sig.symbols[static_cast<std::size_t>(t.sym)].name);
    for (const Term& a : t.args) validate_term(a, sig, nvars);
}

inline int evaluate(const Algebra& alg, const Term& t, std::span<const int> env) {
    if (t.is_var()) {
        if (t.var >= static_cast<int>(env.size()))
            throw error("evaluate: not enough arguments for term");
        int v = env[static_cast<std::size_t>(t.var)];
        if (v < 0 || v >= alg.size) throw error("evaluate: argument out of range");
        return v;
    }
    if (t.sym < 0 || t.sym >= static_cast<int>(alg.sig.symbols.size()))
        throw error("evaluate: unknown operation symbol");
    if (static_cast<int>(t.args.size()) != alg.sig.symbols[static_cast<std::size_t>(t.sym)].arity)
        throw error("evaluate: arity mismatch");
    std::vector<int> vals(t.args.size());
    for (std::size_t i = 0; i < t.args.size(); ++i)
        vals[i] = evaluate(alg, t.args[i], env);
    return alg.op(t.sym, vals);
}

/// Graph of the induced term operation: one output per argument tuple,
/// row-major over nvars arguments.
inline std::vector<int> term_table(const Algebra& alg, const Term& t, int nvars) {
    validate_term(t, alg.sig, nvars);
    std::vector<int> out;
    out.reserve(table_size(alg.size, nvars));
    detail::for_each_tuple(alg.size, nvars, [&](const std::vector<int>& env) {
        out.push_back(evaluate(alg, t, env));
    });
    return out;
}

inline Term substitute(const Term& t, std::span<const Term> replacement) {
    if (t.is_var()) {
        if (t.var >= static_cast<int>(replacement.size()))
            throw error("substitute: variable index out of range");
        return replacement[static_cast<std::size_t>(t.var)];
    }
    std::vector<Term> args;
    args.reserve(t.args.size());
    for (const Term& a : t.args) args.push_back(substitute(a, replacement));
    return Term::ap(t.sym, std::move(args));
}

inline std::string term_to_string(const Term& t, const Signature& sig) {
    if (t.is_var()) return "x" + std::to_string(t.var);
    std::string s = sig.symbols[static_cast<std::size_t>(t.sym)].name;
    s += '(';
    for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) s += ", ";
        s += term_to_string(t.args[i], sig);
    }
    s += ')';
    return s;
}

/// lhs = rhs, universally quantified over `vars` variables.
struct Identity {
    Term lhs;
    Term rhs;
    int vars = 0;
    friend bool operator==(const Identity&, const Identity&) = default;
};

inline bool holds(const Algebra& alg, const Identity& id) {
    validate_term(id.lhs, alg.sig, id.vars);
    validate_term(id.rhs, alg.sig, id.vars);
    bool ok = true;
    detail::for_each_tuple(alg.size, id.vars, [&](const std::vector<int>& env) {
        if (evaluate(alg, id.lhs, env) != evaluate(alg, id.rhs, env)) {
            ok = false;
            return false;
        }
        return true;
    });
    return ok;
}

inline bool holds(std::span<const Algebra> algebras, const Identity& id) {
    return std::all_of(algebras.begin(), algebras.end(),
                       [&](const Algebra& a) { return holds(a, id); });
}

/// The n identities t(x,..,x,y,x,..,x) = x (y in each position in turn)
/// saying t is a near-unanimity term. Two variables: x = x0, y = x1.
inline std::vector<Identity> near_unanimity_identities(const Term& t, int arity) {
    std::vector<Identity> out;
    out.reserve(static_cast<std::size_t>(arity));
    for (int pos = 0; pos < arity; ++pos) {
        std::vector<Term> env;
        env.reserve(static_cast<std::size_t>(arity));
        for (int i = 0; i < arity; ++i) env.push_back(Term::v(i == pos ? 1 : 0));
        out.push_back(Identity{substitute(t, env), Term::v(0), 2});
    }
    return out;
}

/// p(x,y,y) = x, p(x,y,x) = x, p(y,y,x) = x.
inline std::vector<Identity> pixley_identities(const Term& p) {
    auto subst3 = [&](int a, int b, int c) {
        std::vector<Term> env{Term::v(a), Term::v(b), Term::v(c)};
        return substitute(p, env);
    };
    return {
        Identity{subst3(0, 1, 1), Term::v(0), 2},
        Identity{subst3(0, 1, 0), Term::v(0), 2},
        Identity{subst3(1, 1, 0), Term::v(0), 2},
    };
}

inline bool is_near_unanimity_term(std::span<const Algebra> algebras, const Term& t, int arity) {
    if (arity < 3) throw error("near-unanimity terms need arity >= 3");
    for (const Identity& id : near_unanimity_identities(t, arity))
        if (!holds(algebras, id)) return false;
    return true;
}

inline bool is_pixley_term(std::span<const Algebra> algebras, const Term& p) {
    for (const Identity& id : pixley_identities(p))
        if (!holds(algebras, id)) return false;
    return true;
}

} // namespace episub
