/** \file word.hpp
    Exactly differentiable observables on spaces of named matrix variables.

    Three layers:
      - TraceWord: formal sums c * Tr(A1 X_{i1} A2 X_{i2} ... A_m X_{im})
        with constant matrices A_j and named variables X_i (repetitions
        allowed).  Evaluation and exact complex-linear partials; the partial
        with respect to X is returned as the pairing representative G with
        df(V) = Tr(G V), projected into the dual corner when the variable
        is declared corner-constrained.
      - SandwichOp: linear maps U -> sum_i A_i U B_i with composition,
        pointwise algebra, and the trace-pairing adjoint (A,B) -> (B,A).
        These are the exact Jacobian blocks of every coordinate change in
        this library (all such changes are built from products and corner
        inverses).
      - Observable / CoordMap / compose: a type-erased (eval, deriv)
        interface, differentiable coordinate maps carrying their Jacobian
        blocks, and the chain rule
        d(f o T)/du = sum_out adjoint(D_{out,u}) (df/d out).

    MatExpr builds CoordMaps conveniently: it tracks a value together with
    one SandwichOp per input variable through sums, products, and corner
    inverses (d X^{-1} = -X^{-1} U X^{-1}, valid because every inverse we
    take is of a full-rank corner element perturbed inside its corner).
*/
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bgl/algebra.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

/// Named matrix variables, optionally constrained to a corner L M R.
/// Corner declarations make derivative representatives land in the dual
/// corner R M L (the unique representative seen by corner directions).
class Env {
public:
    void set(const std::string& name, AlgebraElement value) {
        slots_.insert_or_assign(name, Slot{std::move(value), std::nullopt});
    }
    void set_cornered(const std::string& name, AlgebraElement value, AlgebraElement left,
                      AlgebraElement right) {
        slots_.insert_or_assign(
            name, Slot{std::move(value), Corner{std::move(left), std::move(right)}});
    }

    bool has(const std::string& name) const { return slots_.count(name) > 0; }

    const AlgebraElement& value(const std::string& name) const {
        const auto it = slots_.find(name);
        if (it == slots_.end()) throw UnknownVariable("no variable named '" + name + "'");
        return it->second.value;
    }

    /// Project a raw derivative representative into the dual corner of the
    /// named variable (identity when the variable is unconstrained).
    AlgebraElement project_dual(const std::string& name, const AlgebraElement& g) const {
        const auto it = slots_.find(name);
        if (it == slots_.end()) throw UnknownVariable("no variable named '" + name + "'");
        if (!it->second.corner) return g;
        return it->second.corner->right * g * it->second.corner->left;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(slots_.size());
        for (const auto& [k, v] : slots_) out.push_back(k);
        return out;
    }

private:
    struct Corner {
        AlgebraElement left, right;
    };
    struct Slot {
        AlgebraElement value;
        std::optional<Corner> corner;
    };
    std::map<std::string, Slot> slots_;
};

// ---------------------------------------------------------------------------
// Sandwich operators
// ---------------------------------------------------------------------------

/// Finite sum of two-sided multiplications U -> sum_i A_i U B_i.
class SandwichOp {
public:
    SandwichOp() = default;

    static SandwichOp zero() { return SandwichOp(); }
    static SandwichOp identity(const AlgebraDescriptor& d) {
        SandwichOp s;
        s.terms_.emplace_back(AlgebraElement::identity(d), AlgebraElement::identity(d));
        return s;
    }
    /// The single term U -> a U b.
    static SandwichOp two_sided(AlgebraElement a, AlgebraElement b) {
        SandwichOp s;
        s.terms_.emplace_back(std::move(a), std::move(b));
        return s;
    }

    bool empty() const { return terms_.empty(); }

    AlgebraElement apply(const AlgebraElement& u) const {
        AlgebraElement out = AlgebraElement::zero(u.descriptor());
        for (const auto& [a, b] : terms_) out = out + a * u * b;
        return out;
    }

    /// Trace-pairing adjoint: Tr(G sum A U B) = Tr((sum B G A) U).
    SandwichOp adjoint() const {
        SandwichOp s;
        for (const auto& [a, b] : terms_) s.terms_.emplace_back(b, a);
        return s;
    }

    /// Post-multiply every image on both sides: U -> l (this U) r.
    SandwichOp sandwiched(const AlgebraElement& l, const AlgebraElement& r) const {
        SandwichOp s;
        for (const auto& [a, b] : terms_) s.terms_.emplace_back(l * a, b * r);
        return s;
    }
    /// U -> l (this U).
    SandwichOp sandwiched_left(const AlgebraElement& l) const {
        SandwichOp s;
        for (const auto& [a, b] : terms_) s.terms_.emplace_back(l * a, b);
        return s;
    }
    /// U -> (this U) r.
    SandwichOp sandwiched_right(const AlgebraElement& r) const {
        SandwichOp s;
        for (const auto& [a, b] : terms_) s.terms_.emplace_back(a, b * r);
        return s;
    }

    friend SandwichOp operator+(const SandwichOp& x, const SandwichOp& y) {
        SandwichOp s = x;
        s.terms_.insert(s.terms_.end(), y.terms_.begin(), y.terms_.end());
        return s;
    }
    friend SandwichOp operator*(cplx c, const SandwichOp& x) {
        SandwichOp s;
        for (const auto& [a, b] : x.terms_) s.terms_.emplace_back(c * a, b);
        return s;
    }
    /// Composition (this after other): sum_{ij} (A_i A'_j) U (B'_j B_i).
    SandwichOp after(const SandwichOp& other) const {
        SandwichOp s;
        for (const auto& [a, b] : terms_)
            for (const auto& [ap, bp] : other.terms_) s.terms_.emplace_back(a * ap, bp * b);
        return s;
    }

private:
    std::vector<std::pair<AlgebraElement, AlgebraElement>> terms_;
};

// ---------------------------------------------------------------------------
// Trace words
// ---------------------------------------------------------------------------

/// One constant-then-variable factor A_j X_{i_j} of a trace word.
struct TraceFactor {
    AlgebraElement coeff;
    std::string var;
};

/// One term c * Tr(A1 X_{i1} ... A_m X_{im}); an empty factor list is the
/// constant term c.
struct TraceTerm {
    cplx coeff = 1.0;
    std::vector<TraceFactor> factors;
};

/// Polynomial observable: a formal sum of trace terms over named matrix
/// variables.  Closed under sums, scalar multiples, and substitution of a
/// product of variables for a variable.
class TraceWord {
public:
    TraceWord() = default;

    static TraceWord constant(cplx c) {
        TraceWord w;
        w.terms_.push_back(TraceTerm{c, {}});
        return w;
    }
    /// Tr(a X_var).
    static TraceWord linear(AlgebraElement a, const std::string& var) {
        TraceWord w;
        w.terms_.push_back(TraceTerm{1.0, {TraceFactor{std::move(a), var}}});
        return w;
    }

    TraceWord& add_term(cplx coeff, std::vector<TraceFactor> factors) {
        terms_.push_back(TraceTerm{coeff, std::move(factors)});
        return *this;
    }

    const std::vector<TraceTerm>& terms() const { return terms_; }

    cplx eval(const Env& env) const {
        cplx total = 0.0;
        for (const TraceTerm& t : terms_) {
            if (t.factors.empty()) {
                total += t.coeff;
                continue;
            }
            AlgebraElement prod = t.factors.front().coeff * env.value(t.factors.front().var);
            for (std::size_t j = 1; j < t.factors.size(); ++j)
                prod = prod * t.factors[j].coeff * env.value(t.factors[j].var);
            total += t.coeff * prod.trace();
        }
        return total;
    }

    /// Exact partial with respect to `var`, as the pairing representative:
    /// for the term Tr(... A_k X ...) the occurrence at position k yields
    /// (tail after X) (head up to A_k), summed over occurrences.
    AlgebraElement deriv(const Env& env, const std::string& var) const {
        AlgebraElement g = AlgebraElement::zero(env.value(var).descriptor());
        for (const TraceTerm& t : terms_) {
            const std::size_t m = t.factors.size();
            if (m == 0) continue;
            bool touches = false;
            for (const TraceFactor& f : t.factors) touches |= (f.var == var);
            if (!touches) continue;
            // prefix[k] = A1 X1 ... Ak Xk (prefix[0] = 1)
            std::vector<AlgebraElement> prefix;
            prefix.reserve(m + 1);
            prefix.push_back(AlgebraElement::identity(g.descriptor()));
            for (std::size_t j = 0; j < m; ++j)
                prefix.push_back(prefix.back() * t.factors[j].coeff *
                                 env.value(t.factors[j].var));
            // suffix accumulated backwards: suffix_k = A_{k+1} X_{k+1} ... A_m X_m
            AlgebraElement suffix = AlgebraElement::identity(g.descriptor());
            for (std::size_t k = m; k-- > 0;) {
                if (t.factors[k].var == var)
                    g = g + t.coeff * (suffix * prefix[k] * t.factors[k].coeff);
                suffix = t.factors[k].coeff * env.value(t.factors[k].var) * suffix;
            }
        }
        return env.project_dual(var, g);
    }

    /// Replace every occurrence of `var` by the product of `replacement`
    /// factors (the exact pullback under a monomial coordinate map such as
    /// X = phi * eta).
    TraceWord substitute(const std::string& var,
                         const std::vector<TraceFactor>& replacement) const {
        TraceWord out;
        for (const TraceTerm& t : terms_) {
            TraceTerm nt{t.coeff, {}};
            for (const TraceFactor& f : t.factors) {
                if (f.var != var) {
                    nt.factors.push_back(f);
                    continue;
                }
                // A_k X -> (A_k A'_1) Y_1 A'_2 Y_2 ...
                for (std::size_t r = 0; r < replacement.size(); ++r)
                    nt.factors.push_back(TraceFactor{
                        r == 0 ? AlgebraElement(f.coeff * replacement[r].coeff)
                               : replacement[r].coeff,
                        replacement[r].var});
            }
            out.terms_.push_back(std::move(nt));
        }
        return out;
    }

    friend TraceWord operator+(const TraceWord& x, const TraceWord& y) {
        TraceWord w = x;
        w.terms_.insert(w.terms_.end(), y.terms_.begin(), y.terms_.end());
        return w;
    }
    friend TraceWord operator*(cplx c, const TraceWord& x) {
        TraceWord w = x;
        for (TraceTerm& t : w.terms_) t.coeff *= c;
        return w;
    }
    friend TraceWord operator-(const TraceWord& x, const TraceWord& y) {
        return x + cplx(-1.0) * y;
    }

private:
    std::vector<TraceTerm> terms_;
};

// ---------------------------------------------------------------------------
// Observables and coordinate maps
// ---------------------------------------------------------------------------

/// Type-erased exactly-differentiable scalar function of an environment.
struct Observable {
    std::function<cplx(const Env&)> eval;
    std::function<AlgebraElement(const Env&, const std::string&)> deriv;
};

inline Observable observable(TraceWord w) {
    auto shared = std::make_shared<TraceWord>(std::move(w));
    return Observable{
        [shared](const Env& env) { return shared->eval(env); },
        [shared](const Env& env, const std::string& var) { return shared->deriv(env, var); }};
}

inline Observable operator+(const Observable& f, const Observable& g) {
    return Observable{[f, g](const Env& e) { return f.eval(e) + g.eval(e); },
                      [f, g](const Env& e, const std::string& v) {
                          return f.deriv(e, v) + g.deriv(e, v);
                      }};
}

inline Observable operator*(cplx c, const Observable& f) {
    return Observable{[c, f](const Env& e) { return c * f.eval(e); },
                      [c, f](const Env& e, const std::string& v) {
                          return c * f.deriv(e, v);
                      }};
}

/// Pointwise product with the Leibniz rule.
inline Observable operator*(const Observable& f, const Observable& g) {
    return Observable{[f, g](const Env& e) { return f.eval(e) * g.eval(e); },
                      [f, g](const Env& e, const std::string& v) {
                          return g.eval(e) * f.deriv(e, v) + f.eval(e) * g.deriv(e, v);
                      }};
}

/// A differentiable coordinate change evaluated at a point: the output
/// environment plus one SandwichOp Jacobian block per (output, input) pair.
struct CoordFrame {
    Env out;
    std::map<std::pair<std::string, std::string>, SandwichOp> jac;
};

using CoordMap = std::function<CoordFrame(const Env&)>;

/// Chain rule: the pullback f o T as an observable on the input variables.
inline Observable compose(const Observable& f, const CoordMap& t) {
    return Observable{
        [f, t](const Env& env) { return f.eval(t(env).out); },
        [f, t](const Env& env, const std::string& u) {
            const CoordFrame frame = t(env);
            AlgebraElement g = AlgebraElement::zero(env.value(u).descriptor());
            for (const auto& [key, block] : frame.jac) {
                if (key.second != u || block.empty()) continue;
                g = g + block.adjoint().apply(f.deriv(frame.out, key.first));
            }
            return env.project_dual(u, g);
        }};
}

// ---------------------------------------------------------------------------
// MatExpr: matrix-valued expressions with tracked Jacobian blocks
// ---------------------------------------------------------------------------

/// A matrix value together with one SandwichOp partial per input variable.
/// Build with variable()/constant(), combine with + - * and corner_inverse(),
/// then read off the value and blocks to assemble a CoordFrame.
class MatExpr {
public:
    static MatExpr constant(AlgebraElement v) { return MatExpr(std::move(v), {}); }
    static MatExpr variable(const std::string& name, const Env& env) {
        const AlgebraElement& v = env.value(name);
        std::map<std::string, SandwichOp> p;
        p.emplace(name, SandwichOp::identity(v.descriptor()));
        return MatExpr(v, std::move(p));
    }

    const AlgebraElement& value() const { return value_; }
    const std::map<std::string, SandwichOp>& partials() const { return partials_; }
    SandwichOp partial(const std::string& name) const {
        const auto it = partials_.find(name);
        return it == partials_.end() ? SandwichOp::zero() : it->second;
    }

    friend MatExpr operator+(const MatExpr& x, const MatExpr& y) {
        std::map<std::string, SandwichOp> p = x.partials_;
        for (const auto& [k, op] : y.partials_) {
            const auto it = p.find(k);
            if (it == p.end())
                p.emplace(k, op);
            else
                it->second = it->second + op;
        }
        return MatExpr(x.value_ + y.value_, std::move(p));
    }
    friend MatExpr operator-(const MatExpr& x, const MatExpr& y) {
        return x + cplx(-1.0) * y;
    }
    friend MatExpr operator*(cplx c, const MatExpr& x) {
        std::map<std::string, SandwichOp> p;
        for (const auto& [k, op] : x.partials_) p.emplace(k, c * op);
        return MatExpr(c * x.value_, std::move(p));
    }
    friend MatExpr operator*(const MatExpr& x, const MatExpr& y) {
        std::map<std::string, SandwichOp> p;
        for (const auto& [k, op] : x.partials_) p.emplace(k, op.sandwiched_right(y.value_));
        for (const auto& [k, op] : y.partials_) {
            const SandwichOp lifted = op.sandwiched_left(x.value_);
            const auto it = p.find(k);
            if (it == p.end())
                p.emplace(k, lifted);
            else
                it->second = it->second + lifted;
        }
        return MatExpr(x.value_ * y.value_, std::move(p));
    }

    /// Inverse of a full-rank corner element under corner-preserving
    /// perturbations: value X^{-1}, partials U -> -X^{-1} U X^{-1}.
    MatExpr corner_inverse() const {
        const AlgebraElement inv = partial_inverse(value_);
        std::map<std::string, SandwichOp> p;
        for (const auto& [k, op] : partials_)
            p.emplace(k, (cplx(-1.0) * op).sandwiched(inv, inv));
        return MatExpr(inv, std::move(p));
    }

private:
    MatExpr(AlgebraElement v, std::map<std::string, SandwichOp> p)
        : value_(std::move(v)), partials_(std::move(p)) {}

    AlgebraElement value_;
    std::map<std::string, SandwichOp> partials_;
};

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

/// Central difference of f along `direction` in variable `var`; the
/// reference against which exact derivatives are verified in tests.
inline cplx fd_directional(const Observable& f, const Env& env, const std::string& var,
                           const AlgebraElement& direction, double h = 1e-5) {
    Env plus = env, minus = env;
    plus.set(var, env.value(var) + h * direction);
    minus.set(var, env.value(var) - h * direction);
    // re-apply the corner declaration if any (set() drops it): projecting
    // the direction is the caller's job, values just shift
    return (f.eval(plus) - f.eval(minus)) / cplx(2.0 * h);
}

} // namespace bgl
