#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "core.hpp"
#include "free_algebra.hpp"

namespace episub {

/// Atomic equation sym(v1,..,vk) = v0 over a fixed variable space.
struct FlatEquation {
    int sym = -1;
    std::vector<int> args;
    int result = -1;
    friend bool operator==(const FlatEquation&, const FlatEquation&) = default;
};

/// Existential diagram of an algebra B relative to a subset A: variables
/// x0..x|A|-1 name the elements of A, y0..y|B\A|-1 the other elements, and
/// the equations record every entry of every operation table. Satisfying
/// assignments in any algebra C are exactly the homomorphisms B -> C.
struct DeltaCertificate {
    Signature signature;
    int b_size = 0;
    std::vector<int> x_elements; // ascending
    std::vector<int> y_elements; // ascending, the rest of B
    std::vector<FlatEquation> equations;

    int var_count() const {
        return static_cast<int>(x_elements.size() + y_elements.size());
    }
    int inputs() const { return static_cast<int>(x_elements.size()); }

    int element_of_var(int v) const {
        int nx = static_cast<int>(x_elements.size());
        if (v < nx) return x_elements[static_cast<std::size_t>(v)];
        return y_elements[static_cast<std::size_t>(v - nx)];
    }
    int var_of_element(int e) const {
        for (int v = 0; v < var_count(); ++v)
            if (element_of_var(v) == e) return v;
        return -1;
    }
};

inline DeltaCertificate delta_formula(const Algebra& b, std::span<const int> a_members) {
    b.validate();
    DeltaCertificate cert;
    cert.signature = b.sig;
    cert.b_size = b.size;
    std::vector<char> in_a(static_cast<std::size_t>(b.size), 0);
    for (int e : a_members) {
        if (e < 0 || e >= b.size) throw error("delta formula: element out of range");
        in_a[static_cast<std::size_t>(e)] = 1;
    }
    for (int e = 0; e < b.size; ++e)
        (in_a[static_cast<std::size_t>(e)] ? cert.x_elements : cert.y_elements).push_back(e);
    if (cert.x_elements.empty()) throw error("delta formula: empty subset");

    std::vector<int> var_of(static_cast<std::size_t>(b.size));
    for (int v = 0; v < cert.var_count(); ++v)
        var_of[static_cast<std::size_t>(cert.element_of_var(v))] = v;

    for (std::size_t f = 0; f < b.sig.symbols.size(); ++f) {
        int k = b.sig.symbols[f].arity;
        detail::for_each_tuple(b.size, k, [&](const std::vector<int>& t) {
            FlatEquation eq;
            eq.sym = static_cast<int>(f);
            eq.args.reserve(t.size());
            for (int e : t) eq.args.push_back(var_of[static_cast<std::size_t>(e)]);
            eq.result = var_of[static_cast<std::size_t>(b.op(static_cast<int>(f), t))];
            cert.equations.push_back(std::move(eq));
        });
    }
    return cert;
}

/// Primitive positive formula with input variables x0..x(inputs-1),
/// existential variables after them, and the output variable last. Variable
/// equalities are separate conjuncts since flat equations cannot say x = y.
struct PPFormula {
    Signature signature;
    int inputs = 0;
    int existentials = 0;
    std::vector<FlatEquation> equations;
    std::vector<std::pair<int, int>> equal_pairs;

    int output_var() const { return inputs + existentials; }
    int var_count() const { return inputs + existentials + 1; }
};

namespace detail {

inline void validate_flat(const Signature& sig, std::span<const FlatEquation> eqs, int nvars) {
    for (const FlatEquation& eq : eqs) {
        if (eq.sym < 0 || eq.sym >= static_cast<int>(sig.symbols.size()))
            throw error("flat equation: unknown symbol");
        if (static_cast<int>(eq.args.size()) != sig.symbols[static_cast<std::size_t>(eq.sym)].arity)
            throw error("flat equation: arity mismatch");
        if (eq.result < 0 || eq.result >= nvars) throw error("flat equation: variable out of range");
        for (int a : eq.args)
            if (a < 0 || a >= nvars) throw error("flat equation: variable out of range");
    }
}

/// Backtracking enumeration of the satisfying assignments of a flat-equation
/// system over a finite algebra, with forward checking. Independent of the
/// homomorphism engine on purpose: the two are compared in tests.
class FlatSolver {
public:
    FlatSolver(const Algebra& alg, int nvars, std::span<const FlatEquation> eqs,
               std::span<const std::pair<int, int>> equal_pairs, Budget& budget)
        : alg_(alg), nvars_(nvars), budget_(budget) {
        if (alg.size > 64) throw error("flat solver: universe larger than 64");
        validate_flat(alg.sig, eqs, nvars);
        for (auto [a, b] : equal_pairs)
            if (a < 0 || a >= nvars || b < 0 || b >= nvars)
                throw error("flat equation: variable out of range");
        full_ = alg.size == 64 ? ~0ull : ((1ull << alg.size) - 1);
        eqs_of_.resize(static_cast<std::size_t>(nvars));
        for (std::size_t i = 0; i < eqs.size(); ++i) {
            eqs_.push_back(eqs[i]);
            auto touch = [&](int v) {
                auto& lst = eqs_of_[static_cast<std::size_t>(v)];
                if (lst.empty() || lst.back() != static_cast<int>(i)) lst.push_back(static_cast<int>(i));
            };
            for (int a : eqs[i].args) touch(a);
            touch(eqs[i].result);
        }
        pairs_of_.resize(static_cast<std::size_t>(nvars));
        for (std::size_t i = 0; i < equal_pairs.size(); ++i) {
            pairs_.push_back(equal_pairs[i]);
            pairs_of_[static_cast<std::size_t>(equal_pairs[i].first)].push_back(static_cast<int>(i));
            pairs_of_[static_cast<std::size_t>(equal_pairs[i].second)].push_back(static_cast<int>(i));
        }
    }

    /// `fixed[v] >= 0` pins variable v. Visitor returns false to stop.
    /// Returns false iff stopped early.
    bool run(std::span<const int> fixed, const std::function<bool(const std::vector<int>&)>& visit) {
        assign_.assign(static_cast<std::size_t>(nvars_), -1);
        domain_.assign(static_cast<std::size_t>(nvars_), full_);
        for (std::size_t v = 0; v < fixed.size(); ++v) {
            if (fixed[v] < 0) continue;
            if (fixed[v] >= alg_.size) throw error("flat solver: fixed value out of range");
            domain_[v] &= 1ull << fixed[v];
        }
        for (int v = 0; v < nvars_; ++v) {
            std::uint64_t d = domain_[static_cast<std::size_t>(v)];
            if (d == 0) return true;
            if (assign_[static_cast<std::size_t>(v)] < 0 && std::popcount(d) == 1 &&
                !commit(v, std::countr_zero(d)))
                return true;
        }
        return dfs(visit);
    }

private:
    bool dfs(const std::function<bool(const std::vector<int>&)>& visit) {
        budget_.tick("flat solver");
        int var = -1, best = 65;
        for (int v = 0; v < nvars_; ++v) {
            if (assign_[static_cast<std::size_t>(v)] >= 0) continue;
            int c = std::popcount(domain_[static_cast<std::size_t>(v)]);
            if (c < best) {
                best = c;
                var = v;
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

    bool commit(int var, int val) {
        pending_.clear();
        pending_.push_back({var, val});
        while (!pending_.empty()) {
            auto [v, value] = pending_.back();
            pending_.pop_back();
            if (assign_[static_cast<std::size_t>(v)] == value) continue;
            assign_[static_cast<std::size_t>(v)] = value;
            domain_[static_cast<std::size_t>(v)] = 1ull << value;
            for (int i : eqs_of_[static_cast<std::size_t>(v)])
                if (!check_equation(i)) return false;
            for (int i : pairs_of_[static_cast<std::size_t>(v)]) {
                auto [a, b] = pairs_[static_cast<std::size_t>(i)];
                int other = a == v ? b : a;
                if (!narrow(other, 1ull << value)) return false;
            }
        }
        return true;
    }

    bool check_equation(int i) {
        const FlatEquation& eq = eqs_[static_cast<std::size_t>(i)];
        int k = static_cast<int>(eq.args.size());
        int open = -1, open_count = 0;
        for (int j = 0; j < k; ++j) {
            if (assign_[static_cast<std::size_t>(eq.args[static_cast<std::size_t>(j)])] < 0) {
                open = j;
                if (++open_count > 1) return true;
            }
        }
        bool out_open = assign_[static_cast<std::size_t>(eq.result)] < 0;
        vals_.resize(static_cast<std::size_t>(k));
        if (open_count == 0) {
            for (int j = 0; j < k; ++j)
                vals_[static_cast<std::size_t>(j)] =
                    assign_[static_cast<std::size_t>(eq.args[static_cast<std::size_t>(j)])];
            int img = alg_.op(eq.sym, vals_);
            if (!out_open) return assign_[static_cast<std::size_t>(eq.result)] == img;
            return narrow(eq.result, 1ull << img);
        }
        if (out_open) return true;
        int need = assign_[static_cast<std::size_t>(eq.result)];
        for (int j = 0; j < k; ++j)
            if (j != open)
                vals_[static_cast<std::size_t>(j)] =
                    assign_[static_cast<std::size_t>(eq.args[static_cast<std::size_t>(j)])];
        int hole = eq.args[static_cast<std::size_t>(open)];
        std::uint64_t ok = 0;
        std::uint64_t scan = domain_[static_cast<std::size_t>(hole)];
        while (scan) {
            int cand = std::countr_zero(scan);
            scan &= scan - 1;
            vals_[static_cast<std::size_t>(open)] = cand;
            if (alg_.op(eq.sym, vals_) == need) ok |= 1ull << cand;
        }
        return narrow(hole, ok);
    }

    bool narrow(int v, std::uint64_t allowed) {
        std::uint64_t d = domain_[static_cast<std::size_t>(v)] & allowed;
        if (d == 0) return false;
        domain_[static_cast<std::size_t>(v)] = d;
        if (std::popcount(d) == 1 && assign_[static_cast<std::size_t>(v)] < 0)
            pending_.push_back({v, std::countr_zero(d)});
        return true;
    }

    const Algebra& alg_;
    int nvars_;
    Budget& budget_;
    std::uint64_t full_ = 0;
    std::vector<FlatEquation> eqs_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<std::vector<int>> eqs_of_;
    std::vector<std::vector<int>> pairs_of_;
    std::vector<int> assign_;
    std::vector<std::uint64_t> domain_;
    std::vector<std::pair<int, int>> pending_;
    std::vector<int> vals_;
};

/// Shared core: does the formula's solution set, over every listed algebra,
/// determine the output variables from the input variables?
inline bool solutions_define_function(const Algebra& c, int nvars,
                                      std::span<const FlatEquation> eqs,
                                      std::span<const std::pair<int, int>> equal_pairs,
                                      std::span<const int> input_vars,
                                      std::span<const int> output_vars, Budget& budget) {
    FlatSolver solver(c, nvars, eqs, equal_pairs, budget);
    std::map<std::vector<int>, std::vector<int>> graph;
    bool functional = true;
    std::vector<int> none;
    solver.run(none, [&](const std::vector<int>& sol) {
        std::vector<int> in, out;
        in.reserve(input_vars.size());
        out.reserve(output_vars.size());
        for (int v : input_vars) in.push_back(sol[static_cast<std::size_t>(v)]);
        for (int v : output_vars) out.push_back(sol[static_cast<std::size_t>(v)]);
        auto [it, fresh] = graph.insert({std::move(in), std::move(out)});
        if (!fresh && !(it->second == out)) {
            functional = false;
            return false;
        }
        return true;
    });
    return functional;
}

} // namespace detail

inline bool defines_function(const DeltaCertificate& cert, std::span<const Algebra> targets,
                             Budget& budget) {
    std::vector<int> in(static_cast<std::size_t>(cert.inputs()));
    std::iota(in.begin(), in.end(), 0);
    std::vector<int> out(static_cast<std::size_t>(cert.y_elements.size()));
    std::iota(out.begin(), out.end(), cert.inputs());
    for (const Algebra& c : targets) {
        if (!(c.sig == cert.signature)) throw error("defines-function: signature mismatch");
        if (!detail::solutions_define_function(c, cert.var_count(), cert.equations, {}, in, out,
                                               budget))
            return false;
    }
    return true;
}

inline bool defines_function(const PPFormula& pp, std::span<const Algebra> targets, Budget& budget) {
    std::vector<int> in(static_cast<std::size_t>(pp.inputs));
    std::iota(in.begin(), in.end(), 0);
    std::vector<int> out{pp.output_var()};
    for (const Algebra& c : targets) {
        if (!(c.sig == pp.signature)) throw error("defines-function: signature mismatch");
        if (!detail::solutions_define_function(c, pp.var_count(), pp.equations, pp.equal_pairs, in,
                                               out, budget))
            return false;
    }
    return true;
}

/// Value of the defined partial function at `args`, or nullopt when the
/// formula is not satisfiable there. Throws if several values qualify.
inline std::optional<int> apply_formula(const PPFormula& pp, const Algebra& c,
                                        std::span<const int> args, Budget& budget) {
    if (!(c.sig == pp.signature)) throw error("apply-formula: signature mismatch");
    if (static_cast<int>(args.size()) != pp.inputs) throw error("apply-formula: wrong argument count");
    detail::FlatSolver solver(c, pp.var_count(), pp.equations, pp.equal_pairs, budget);
    std::vector<int> fixed(static_cast<std::size_t>(pp.var_count()), -1);
    for (int i = 0; i < pp.inputs; ++i) {
        if (args[static_cast<std::size_t>(i)] < 0 || args[static_cast<std::size_t>(i)] >= c.size)
            throw error("apply-formula: argument out of range");
        fixed[static_cast<std::size_t>(i)] = args[static_cast<std::size_t>(i)];
    }
    std::optional<int> value;
    bool clash = false;
    solver.run(fixed, [&](const std::vector<int>& sol) {
        int y = sol[static_cast<std::size_t>(pp.output_var())];
        if (!value) {
            value = y;
            return true;
        }
        if (*value != y) {
            clash = true;
            return false;
        }
        return true;
    });
    if (clash) throw error("apply-formula: formula is not a function here");
    return value;
}

/// Images of the y-variables at the given x-values, or nullopt.
inline std::optional<std::vector<int>> apply_formula(const DeltaCertificate& cert, const Algebra& c,
                                                     std::span<const int> args, Budget& budget) {
    if (!(c.sig == cert.signature)) throw error("apply-formula: signature mismatch");
    if (static_cast<int>(args.size()) != cert.inputs())
        throw error("apply-formula: wrong argument count");
    detail::FlatSolver solver(c, cert.var_count(), cert.equations, {}, budget);
    std::vector<int> fixed(static_cast<std::size_t>(cert.var_count()), -1);
    for (int i = 0; i < cert.inputs(); ++i) {
        if (args[static_cast<std::size_t>(i)] < 0 || args[static_cast<std::size_t>(i)] >= c.size)
            throw error("apply-formula: argument out of range");
        fixed[static_cast<std::size_t>(i)] = args[static_cast<std::size_t>(i)];
    }
    std::optional<std::vector<int>> value;
    bool clash = false;
    solver.run(fixed, [&](const std::vector<int>& sol) {
        std::vector<int> y(sol.begin() + cert.inputs(), sol.end());
        if (!value) {
            value = std::move(y);
            return true;
        }
        if (*value != y) {
            clash = true;
            return false;
        }
        return true;
    });
    if (clash) throw error("apply-formula: formula is not a function here");
    return value;
}

enum class WitnessStatus {
    ok,
    malformed,
    inputs_outside_a,
    outputs_not_complement,
    equation_fails_in_b,
    not_a_function,
};

inline const char* to_string(WitnessStatus s) {
    switch (s) {
        case WitnessStatus::ok: return "ok";
        case WitnessStatus::malformed: return "malformed";
        case WitnessStatus::inputs_outside_a: return "inputs-outside-a";
        case WitnessStatus::outputs_not_complement: return "outputs-not-complement";
        case WitnessStatus::equation_fails_in_b: return "equation-fails-in-b";
        case WitnessStatus::not_a_function: return "not-a-function";
    }
    return "unknown";
}

struct VerifyResult {
    bool ok = false;
    WitnessStatus status = WitnessStatus::malformed;
    std::string detail;
};

/// Independent check of a certificate against the claimed (B, A, targets):
/// shape, satisfaction in B at the named elements, and functionality over
/// the targets. Everything an auditor needs, nothing taken on trust.
inline VerifyResult verify_witness(const Algebra& b, std::span<const int> a_members,
                                   const DeltaCertificate& cert, std::span<const Algebra> targets,
                                   Budget& budget) {
    auto fail = [](WitnessStatus st, std::string d) {
        return VerifyResult{false, st, std::move(d)};
    };
    if (!(cert.signature == b.sig)) return fail(WitnessStatus::malformed, "signature mismatch");
    if (cert.b_size != b.size) return fail(WitnessStatus::malformed, "universe size mismatch");
    int nvars = cert.var_count();
    std::vector<char> seen(static_cast<std::size_t>(b.size), 0);
    for (int v = 0; v < nvars; ++v) {
        int e = cert.element_of_var(v);
        if (e < 0 || e >= b.size) return fail(WitnessStatus::malformed, "element out of range");
        if (seen[static_cast<std::size_t>(e)]) return fail(WitnessStatus::malformed, "repeated element");
        seen[static_cast<std::size_t>(e)] = 1;
    }
    try {
        detail::validate_flat(cert.signature, cert.equations, nvars);
    } catch (const error& e) {
        return fail(WitnessStatus::malformed, e.what());
    }
    if (cert.x_elements.empty()) return fail(WitnessStatus::malformed, "no input variables");

    std::vector<char> in_a(static_cast<std::size_t>(b.size), 0);
    for (int e : a_members) {
        if (e < 0 || e >= b.size) return fail(WitnessStatus::malformed, "subset element out of range");
        in_a[static_cast<std::size_t>(e)] = 1;
    }
    for (int e : cert.x_elements)
        if (!in_a[static_cast<std::size_t>(e)])
            return fail(WitnessStatus::inputs_outside_a,
                        "x variable names element " + std::to_string(e));
    std::vector<int> complement;
    for (int e = 0; e < b.size; ++e)
        if (!in_a[static_cast<std::size_t>(e)]) complement.push_back(e);
    std::vector<int> ys = cert.y_elements;
    std::sort(ys.begin(), ys.end());
    if (ys != complement)
        return fail(WitnessStatus::outputs_not_complement, "y variables must enumerate B minus A");

    std::vector<int> vals;
    for (std::size_t i = 0; i < cert.equations.size(); ++i) {
        const FlatEquation& eq = cert.equations[i];
        vals.clear();
        for (int v : eq.args) vals.push_back(cert.element_of_var(v));
        if (b.op(eq.sym, vals) != cert.element_of_var(eq.result))
            return fail(WitnessStatus::equation_fails_in_b,
                        "equation " + std::to_string(i) + " fails in B");
    }
    if (!defines_function(cert, targets, budget))
        return fail(WitnessStatus::not_a_function, "certificate does not define a function on the targets");
    return VerifyResult{true, WitnessStatus::ok, ""};
}

/// A term matching the partial function a pp formula defines on the class,
/// when one exists. The formula must define a function first.
inline std::optional<Term> find_interpolating_term(std::span<const Algebra> cls, const PPFormula& pp,
                                                   Budget& budget) {
    if (cls.empty()) throw error("interpolation: empty class");
    if (!same_signature(cls)) throw error("interpolation: signature mismatch");
    if (!defines_function(pp, cls, budget))
        throw error("interpolation: formula does not define a function on the class");
    detail::ColumnProblem prob;
    prob.nvars = pp.inputs;
    prob.gen_rows.resize(static_cast<std::size_t>(pp.inputs));
    for (std::size_t ai = 0; ai < cls.size(); ++ai) {
        detail::for_each_tuple(cls[ai].size, pp.inputs, [&](const std::vector<int>& args) {
            std::optional<int> v = apply_formula(pp, cls[ai], args, budget);
            if (!v) return;
            prob.col_algebra.push_back(static_cast<int>(ai));
            for (int j = 0; j < pp.inputs; ++j)
                prob.gen_rows[static_cast<std::size_t>(j)].push_back(args[static_cast<std::size_t>(j)]);
            prob.target.push_back(*v);
        });
    }
    if (prob.col_algebra.empty())
        throw error("interpolation: formula has empty domain on the class");
    return detail::term_fitting_columns(cls, prob, budget);
}

} // namespace episub
