/** \file algebroid.hpp
    The Atiyah sequence of the support-fixing bundle and its Lie algebroid.

    Fibrewise the sequence is the corner splitting  qMq -> Mq -> (1-q)Mq
    with the inclusion and the (1-q)-cut as maps.  Sections of the algebroid
    come in two interchangeable shapes:

      * GlobalSection  — an equivariant vector field eta -> v(eta) on the
        bundle (v(eta g) = v(eta) g), bracketed by the usual commutator of
        vector fields;
      * ChartSection   — a pair of coefficient maps y -> (a(y), b(y)) in a
        lattice chart, bracketed by the coefficient formulas with the extra
        commutator term [b2, b1].

    Coefficient maps may be supplied as plain callables (finite differences
    fill in the derivatives) or as MatrixPolynomial objects, in which case
    every derivative in sight — including those of nested brackets — is
    evaluated exactly.
*/
#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "bgl/bundle.hpp"
#include "bgl/tangent.hpp"
#include "bgl/word.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Fibre points of the three bundles in the sequence
// ---------------------------------------------------------------------------

enum class FiberKind {
    kCorner,      ///< x in qMq: the isotropy (gauge) part
    kModule,      ///< x in Mq: the full fibre of the middle bundle
    kTransversal  ///< x in (1-q)Mq: the quotient (base-direction) part
};

/// A point of one of the three fibre bundles over the projection lattice,
/// tagged by which bundle it belongs to.  Corner membership is enforced.
struct AlgebroidFiberPoint {
    AlgebraElement x;
    ProjectionElement q;
    FiberKind kind;

    AlgebroidFiberPoint(AlgebraElement x_in, ProjectionElement q_in, FiberKind kind_in)
        : x(std::move(x_in)), q(std::move(q_in)), kind(kind_in) {
        const AlgebraElement one = AlgebraElement::identity(x.descriptor());
        AlgebraElement left = one;
        if (kind == FiberKind::kCorner) left = q.element();
        if (kind == FiberKind::kTransversal) left = one - q.element();
        if (dist(left * x * q.element(), x) > 1e-12 * std::max(1.0, x.norm()))
            throw CornerError("fibre point violates its corner constraint");
    }
};

/// Inclusion qMq -> Mq of the isotropy part into the middle bundle.
inline AlgebroidFiberPoint atiyah_iota(const AlgebraElement& x, const ProjectionElement& q) {
    AlgebroidFiberPoint checked(x, q, FiberKind::kCorner); // validates x in qMq
    return AlgebroidFiberPoint(checked.x, q, FiberKind::kModule);
}

/// Projection Mq -> (1-q)Mq cutting away the isotropy part.
inline AlgebroidFiberPoint atiyah_a(const AlgebraElement& x, const ProjectionElement& q) {
    AlgebroidFiberPoint checked(x, q, FiberKind::kModule); // validates x in Mq
    const AlgebraElement one = AlgebraElement::identity(x.descriptor());
    return AlgebroidFiberPoint((one - q.element()) * checked.x, q, FiberKind::kTransversal);
}

// ---------------------------------------------------------------------------
// Noncommutative matrix polynomials in one matrix variable
// ---------------------------------------------------------------------------

/// A matrix-valued polynomial in a single matrix variable: a finite sum of
/// words  c * A0 * Y * A1 * Y * ... where the A_j are constant algebra
/// elements and Y is the variable.  Closed under sums, products, and
/// directional differentiation (with a polynomial direction), which is what
/// makes iterated section brackets exactly differentiable.
class MatrixPolynomial {
public:
    struct Factor {
        bool is_var = false;
        AlgebraElement coeff; // used when !is_var
        Factor() : coeff(AlgebraElement::zero(AlgebraDescriptor({1}))) {}
    };
    struct Term {
        cplx c = 1.0;
        std::vector<Factor> factors; // empty product = identity
    };

    explicit MatrixPolynomial(AlgebraDescriptor desc) : desc_(std::move(desc)) {}

    static MatrixPolynomial zero(const AlgebraDescriptor& d) { return MatrixPolynomial(d); }

    static MatrixPolynomial constant(const AlgebraElement& a) {
        MatrixPolynomial p(a.descriptor());
        Term t;
        t.factors.push_back(const_factor(a));
        p.terms_.push_back(std::move(t));
        return p;
    }

    static MatrixPolynomial variable(const AlgebraDescriptor& d) {
        MatrixPolynomial p(d);
        Term t;
        t.factors.push_back(var_factor());
        p.terms_.push_back(std::move(t));
        return p;
    }

    const AlgebraDescriptor& descriptor() const { return desc_; }

    AlgebraElement eval(const AlgebraElement& y) const {
        AlgebraElement out = AlgebraElement::zero(desc_);
        for (const Term& t : terms_) {
            AlgebraElement prod = AlgebraElement::identity(desc_);
            for (const Factor& f : t.factors) prod = prod * (f.is_var ? y : f.coeff);
            out = out + t.c * prod;
        }
        return out;
    }

    /// Directional derivative: d/dt|_0 of eval(y + t h(y)) as a polynomial in
    /// y.  Each variable slot is replaced, one at a time, by the direction.
    MatrixPolynomial directional(const MatrixPolynomial& h) const {
        MatrixPolynomial out(desc_);
        for (const Term& t : terms_) {
            for (std::size_t k = 0; k < t.factors.size(); ++k) {
                if (!t.factors[k].is_var) continue;
                for (const Term& ht : h.terms_) {
                    Term nt;
                    nt.c = t.c * ht.c;
                    nt.factors.insert(nt.factors.end(), t.factors.begin(),
                                      t.factors.begin() + static_cast<long>(k));
                    nt.factors.insert(nt.factors.end(), ht.factors.begin(), ht.factors.end());
                    nt.factors.insert(nt.factors.end(),
                                      t.factors.begin() + static_cast<long>(k) + 1,
                                      t.factors.end());
                    out.terms_.push_back(std::move(nt));
                }
            }
        }
        return out;
    }

    friend MatrixPolynomial operator+(const MatrixPolynomial& l, const MatrixPolynomial& r) {
        MatrixPolynomial out = l;
        out.terms_.insert(out.terms_.end(), r.terms_.begin(), r.terms_.end());
        return out;
    }
    friend MatrixPolynomial operator-(const MatrixPolynomial& l, const MatrixPolynomial& r) {
        return l + (-1.0) * r;
    }
    friend MatrixPolynomial operator*(cplx c, const MatrixPolynomial& p) {
        MatrixPolynomial out = p;
        for (Term& t : out.terms_) t.c *= c;
        return out;
    }
    friend MatrixPolynomial operator*(const MatrixPolynomial& l, const MatrixPolynomial& r) {
        MatrixPolynomial out(l.desc_);
        for (const Term& lt : l.terms_)
            for (const Term& rt : r.terms_) {
                Term nt;
                nt.c = lt.c * rt.c;
                nt.factors = lt.factors;
                nt.factors.insert(nt.factors.end(), rt.factors.begin(), rt.factors.end());
                out.terms_.push_back(std::move(nt));
            }
        return out;
    }
    friend MatrixPolynomial operator*(const AlgebraElement& a, const MatrixPolynomial& p) {
        return constant(a) * p;
    }
    friend MatrixPolynomial operator*(const MatrixPolynomial& p, const AlgebraElement& a) {
        return p * constant(a);
    }

private:
    static Factor const_factor(const AlgebraElement& a) {
        Factor f;
        f.is_var = false;
        f.coeff = a;
        return f;
    }
    static Factor var_factor() {
        Factor f;
        f.is_var = true;
        return f;
    }

    AlgebraDescriptor desc_;
    std::vector<Term> terms_;
};

inline MatrixPolynomial poly_commutator(const MatrixPolynomial& l, const MatrixPolynomial& r) {
    return l * r - r * l;
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

using CoefficientMap = std::function<AlgebraElement(const AlgebraElement&)>;
using CoefficientDeriv =
    std::function<AlgebraElement(const AlgebraElement&, const AlgebraElement&)>;

/// A section in a lattice chart around p: coefficient maps y -> a(y) in
/// (1-p)Mp (base direction) and y -> b(y) in pMp (frame direction).
/// Derivative callables are optional; polynomial-backed sections carry their
/// polynomials so brackets of brackets stay exact.
struct ChartSection {
    ProjectionElement p;
    CoefficientMap a, b;
    CoefficientDeriv da, db; // may be empty: finite differences are used
    std::shared_ptr<const MatrixPolynomial> a_poly, b_poly;

    ChartSection(ProjectionElement p_in, CoefficientMap a_in, CoefficientMap b_in,
                 CoefficientDeriv da_in = {}, CoefficientDeriv db_in = {})
        : p(std::move(p_in)), a(std::move(a_in)), b(std::move(b_in)), da(std::move(da_in)),
          db(std::move(db_in)) {}

    static ChartSection from_polynomials(ProjectionElement p_in, MatrixPolynomial a_in,
                                         MatrixPolynomial b_in) {
        auto ap = std::make_shared<const MatrixPolynomial>(std::move(a_in));
        auto bp = std::make_shared<const MatrixPolynomial>(std::move(b_in));
        ChartSection s(
            std::move(p_in), [ap](const AlgebraElement& y) { return ap->eval(y); },
            [bp](const AlgebraElement& y) { return bp->eval(y); },
            [ap](const AlgebraElement& y, const AlgebraElement& h) {
                return ap->directional(MatrixPolynomial::constant(h)).eval(y);
            },
            [bp](const AlgebraElement& y, const AlgebraElement& h) {
                return bp->directional(MatrixPolynomial::constant(h)).eval(y);
            });
        s.a_poly = ap;
        s.b_poly = bp;
        return s;
    }
};

/// An equivariant vector field on the bundle: eta -> v(eta) in Mp0 with
/// v(eta g) = v(eta) g.  Linear fields v(eta) = w eta carry their generator
/// so brackets of linear fields stay linear (and exact).
struct GlobalSection {
    std::function<AlgebraElement(const BundlePoint&)> v;
    std::function<AlgebraElement(const BundlePoint&, const AlgebraElement&)> dv; // optional
    std::shared_ptr<const AlgebraElement> linear_generator;                      // optional

    static GlobalSection linear(const AlgebraElement& w) {
        auto shared = std::make_shared<const AlgebraElement>(w);
        GlobalSection s;
        s.v = [shared](const BundlePoint& eta) { return *shared * eta.element(); };
        s.dv = [shared](const BundlePoint&, const AlgebraElement& u) { return *shared * u; };
        s.linear_generator = shared;
        return s;
    }
};

namespace detail {

/// Exact derivative when available, else a central difference.
inline AlgebraElement coefficient_deriv(const CoefficientMap& f, const CoefficientDeriv& df,
                                        const AlgebraElement& y, const AlgebraElement& h) {
    if (df) return df(y, h);
    const double step = 1e-5;
    return (1.0 / (2.0 * step)) * (f(y + step * h) - f(y - step * h));
}

inline AlgebraElement field_deriv(const GlobalSection& s, const BundlePoint& eta,
                                  const AlgebraElement& u) {
    if (s.dv) return s.dv(eta, u);
    const double step = 1e-5;
    return (1.0 / (2.0 * step)) *
           (s.v(BundlePoint(eta.element() + step * u, eta.p0())) -
            s.v(BundlePoint(eta.element() - step * u, eta.p0())));
}

} // namespace detail

// ---------------------------------------------------------------------------
// The two sides of the section dictionary
// ---------------------------------------------------------------------------

/// Restrict a global field to chart coefficients around p, using a fixed
/// reference frame z in pMp0 (full corner rank).  The point over y is
/// eta = (p + y) z, for which p eta = z, so the coefficient formulas reduce
/// to a(y) = (1 - p - y) v(eta) z^{-1} and b(y) = p v(eta) z^{-1}.
inline ChartSection to_chart_section(const GlobalSection& field, const ProjectionElement& p,
                                     const AlgebraElement& z_ref) {
    const AlgebraElement zi = partial_inverse(z_ref);
    const AlgebraElement one = AlgebraElement::identity(z_ref.descriptor());
    const AlgebraElement pe = p.element();
    const ProjectionElement p0 = right_support(z_ref);
    auto at_y = [pe, z_ref, p0](const AlgebraElement& y) {
        return BundlePoint((pe + y) * z_ref, p0);
    };

    ChartSection s(
        p,
        [field, at_y, one, pe, zi](const AlgebraElement& y) {
            return (one - pe - y) * field.v(at_y(y)) * zi;
        },
        [field, at_y, pe, zi](const AlgebraElement& y) {
            return pe * field.v(at_y(y)) * zi;
        });
    if (field.dv) {
        s.da = [field, at_y, one, pe, zi, z_ref](const AlgebraElement& y,
                                                 const AlgebraElement& h) {
            const BundlePoint eta = at_y(y);
            return (-1.0) * h * field.v(eta) * zi +
                   (one - pe - y) * field.dv(eta, h * z_ref) * zi;
        };
        s.db = [field, at_y, pe, zi, z_ref](const AlgebraElement& y, const AlgebraElement& h) {
            return pe * field.dv(at_y(y), h * z_ref) * zi;
        };
    }
    return s;
}

/// Extend chart coefficients to the global field they cut out on the chart's
/// domain: v(eta) = (a(y) + (p + y) b(y)) (p eta) at y = eta (p eta)^{-1} - p.
/// Equivariance is automatic because y is invariant and p eta moves by g.
inline GlobalSection to_global_section(const ChartSection& section) {
    GlobalSection s;
    s.v = [section](const BundlePoint& eta) {
        const BundleChartPair c = bundle_chart(section.p, eta); // NotInChart off-domain
        return (section.a(c.y_p) + (section.p.element() + c.y_p) * section.b(c.y_p)) * c.z;
    };
    return s;
}

/// The anchor: forget the frame coefficient and return the base vector field.
inline CoefficientMap anchor(const ChartSection& section) { return section.a; }

/// Chart-coefficient bracket.  Polynomial-backed inputs give a
/// polynomial-backed (exactly differentiable) result.
inline ChartSection bracket_chart(const ChartSection& x1, const ChartSection& x2) {
    if (dist(x1.p.element(), x2.p.element()) > kTauProj)
        throw BaseMismatch("sections live in different charts");

    if (x1.a_poly && x1.b_poly && x2.a_poly && x2.b_poly) {
        const MatrixPolynomial& a1 = *x1.a_poly;
        const MatrixPolynomial& b1 = *x1.b_poly;
        const MatrixPolynomial& a2 = *x2.a_poly;
        const MatrixPolynomial& b2 = *x2.b_poly;
        return ChartSection::from_polynomials(
            x1.p, a2.directional(a1) - a1.directional(a2),
            b2.directional(a1) - b1.directional(a2) + poly_commutator(b2, b1));
    }

    return ChartSection(
        x1.p,
        [x1, x2](const AlgebraElement& y) {
            return detail::coefficient_deriv(x2.a, x2.da, y, x1.a(y)) -
                   detail::coefficient_deriv(x1.a, x1.da, y, x2.a(y));
        },
        [x1, x2](const AlgebraElement& y) {
            return detail::coefficient_deriv(x2.b, x2.db, y, x1.a(y)) -
                   detail::coefficient_deriv(x1.b, x1.db, y, x2.a(y)) +
                   commutator(x2.b(y), x1.b(y));
        });
}

/// Vector-field bracket of equivariant fields.  Linear fields close on
/// linear fields with generator w2 w1 - w1 w2.
inline GlobalSection bracket_global(const GlobalSection& v1, const GlobalSection& v2) {
    if (v1.linear_generator && v2.linear_generator) {
        const AlgebraElement& w1 = *v1.linear_generator;
        const AlgebraElement& w2 = *v2.linear_generator;
        return GlobalSection::linear(w2 * w1 - w1 * w2);
    }
    GlobalSection out;
    out.v = [v1, v2](const BundlePoint& eta) {
        return detail::field_deriv(v2, eta, v1.v(eta)) -
               detail::field_deriv(v1, eta, v2.v(eta));
    };
    return out;
}

// ---------------------------------------------------------------------------
// Linear-plus-base observables on the cotangent carrier
// ---------------------------------------------------------------------------

/// The observable f(phi, eta) = <phi, v(eta)> + rho(eta) for a linear field
/// v(eta) = w eta and a base observable rho of the variable "eta".  The first
/// summand is the exact trace word Tr(phi w eta).
inline Observable linear_plus_base_observable(const AlgebraElement& w, const Observable& rho) {
    TraceWord momentum_part;
    momentum_part.add_term(1.0, {{AlgebraElement::identity(w.descriptor()), "phi"},
                                 {w, "eta"}});
    return observable(std::move(momentum_part)) + rho;
}

/// Convenience overload: no base part.
inline Observable linear_plus_base_observable(const AlgebraElement& w) {
    TraceWord zero_word;
    return linear_plus_base_observable(w, observable(std::move(zero_word)));
}

/// Empirical gauge-invariance check for a base observable rho(eta): max of
/// |rho(eta g) - rho(eta)| over random points and group elements.
inline double base_invariance_defect(const Observable& rho, const ProjectionElement& p0,
                                     int samples, Rng& rng) {
    double worst = 0.0;
    const AlgebraDescriptor& d = p0.descriptor();
    for (int i = 0; i < samples; ++i) {
        const BundlePoint eta(random_element(d, rng) * p0.element(), p0);
        const StructureGroupElement g(
            p0.element() * random_element(d, rng) * p0.element() + 2.0 * p0.element(), p0);
        Env at, moved;
        at.set_cornered("eta", eta.element(), AlgebraElement::identity(d), p0.element());
        moved.set_cornered("eta", act(eta, g).element(), AlgebraElement::identity(d),
                           p0.element());
        worst = std::max(worst, std::abs(rho.eval(moved) - rho.eval(at)));
    }
    return worst;
}

/// A gauge-invariant base observable: a trace word in the chart coordinate
/// y(eta) = eta (p eta)^{-1} - p, which is unchanged along fibres.  The
/// derivative in "eta" is exact via the chain rule.
inline Observable invariant_base_observable(const TraceWord& word_in_y,
                                            const ProjectionElement& p) {
    const AlgebraElement pe = p.element();
    CoordMap chart = [pe](const Env& env) {
        MatExpr eta = MatExpr::variable("eta", env);
        MatExpr pz = MatExpr::constant(pe) * eta;
        MatExpr y = eta * pz.corner_inverse() - MatExpr::constant(pe);
        CoordFrame frame;
        const AlgebraElement one = AlgebraElement::identity(pe.descriptor());
        frame.out.set_cornered("y", y.value(), one - pe, pe);
        for (const auto& [name, block] : y.partials())
            frame.jac[{"y", name}] = block;
        return frame;
    };
    return compose(observable(word_in_y), chart);
}

} // namespace bgl
