/** \file tangent.hpp
    Tangent layer of the bundle and of the arrow space: chart quadruples
    over a lattice chart, their transitions, tangent coordinates of arrows
    and their transitions, the vertical/horizontal splitting maps of the
    bundle (single and pair versions), the semidirect tangent group with
    its action, left-translation flows, and their chart cocycles.
*/
#pragma once

#include <utility>

#include "bgl/bundle.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Tangent vectors of the bundle
// ---------------------------------------------------------------------------

/// A tangent vector at a bundle point: v in M p0 attached to eta.
struct TangentVector {
    AlgebraElement v;
    BundlePoint base;

    TangentVector(AlgebraElement v_in, BundlePoint base_in)
        : v(std::move(v_in)), base(std::move(base_in)) {
        if (dist(v * base.p0().element(), v) > kTauProj * std::max(1.0, v.norm()))
            throw CornerError("tangent vector does not lie in M p0");
    }
};

/// Chart record of a tangent vector over the lattice chart at p:
/// a in (1-p)Mp, b in pMp, plus the point coordinates (y, z).
struct TangentChartQuad {
    AlgebraElement a, b, y, z;
};

inline TangentChartQuad t_chart(const ProjectionElement& p, const TangentVector& tv) {
    const BundleChartPair c = bundle_chart(p, tv.base); // throws NotInChart
    const AlgebraElement zi = partial_inverse(c.z);
    const AlgebraElement& eta = tv.base.element();
    return TangentChartQuad{(tv.v - eta * zi * tv.v) * zi, p.element() * tv.v * zi,
                            c.y_p, c.z};
}

inline TangentVector t_chart_inv(const ProjectionElement& p, const TangentChartQuad& q,
                                 const ProjectionElement& p0) {
    const BundlePoint eta = bundle_chart_inv(p, BundleChartPair{q.y, q.z}, p0);
    return TangentVector((q.a + (p.element() + q.y) * q.b) * q.z, eta);
}

/// Chart change of the quadruple:
///   a' = (d - (b + d y)(a + c y)^{-1}) a (a + c y)^{-1}
///   b' = (c a + (a + c y) b)(a + c y)^{-1}
///   y' = (b + d y)(a + c y)^{-1},  z' = (a + c y) z.
inline TangentChartQuad t_transition(const ProjectionElement& p, const ProjectionElement& pp,
                                     const TangentChartQuad& q) {
    if (!in_pi(pp, chart_phi_inv(p, q.y)))
        throw NotInChart("base point leaves the chart around p'");
    const TransitionBlocks t = transition_blocks(p, pp);
    const AlgebraElement acy = t.a + t.c * q.y;
    const AlgebraElement acy_i = partial_inverse(acy);
    const AlgebraElement yp = (t.b + t.d * q.y) * acy_i;
    return TangentChartQuad{(t.d - yp) * q.a * acy_i, (t.c * q.a + acy * q.b) * acy_i, yp,
                            acy * q.z};
}

// ---------------------------------------------------------------------------
// Tangent coordinates of arrows
// ---------------------------------------------------------------------------

/// Velocity record over an arrow chart triple: a in (1-p)Mp, b in pMp~,
/// at in (1-p~)Mp~ are the t-derivatives of (y, z, y~) along a curve.
struct TangentGroupoidCoords {
    AlgebraElement a, b, at;
    GroupoidChartTriple base;
};

/// Chart change of the velocity record (the derivative of the arrow-chart
/// transition), together with the base transition.
inline TangentGroupoidCoords tangent_groupoid_transition(const TangentGroupoidCoords& c,
                                                         const ProjectionElement& pp,
                                                         const ProjectionElement& ptp) {
    const GroupoidChartTriple moved = groupoid_transition(c.base, pp, ptp);
    const TransitionBlocks u = transition_blocks(c.base.p, pp);
    const TransitionBlocks v = transition_blocks(c.base.pt, ptp);
    const AlgebraElement acy_i = partial_inverse(u.a + u.c * c.base.y_p);
    const AlgebraElement acy = u.a + u.c * c.base.y_p;
    const AlgebraElement tacy_i = partial_inverse(v.a + v.c * c.base.yt);

    const AlgebraElement ap = u.d * c.a * acy_i -
                              (u.b + u.d * c.base.y_p) * acy_i * u.c * c.a * acy_i;
    const AlgebraElement bp = u.c * c.a * c.base.z * tacy_i + acy * c.b * tacy_i -
                              acy * c.base.z * tacy_i * v.c * c.at * tacy_i;
    const AlgebraElement atp = v.d * c.at * tacy_i -
                               (v.b + v.d * c.base.yt) * tacy_i * v.c * c.at * tacy_i;
    return TangentGroupoidCoords{ap, bp, atp, moved};
}

// ---------------------------------------------------------------------------
// Vertical/horizontal splitting of the bundle tangent
// ---------------------------------------------------------------------------

/// Vertical injection of a corner element: x -> (eta x, eta).
inline TangentVector vertical_inject(const AlgebraElement& x, const BundlePoint& eta) {
    const AlgebraElement& p0 = eta.p0().element();
    if (dist(p0 * x * p0, x) > kTauProj * std::max(1.0, x.norm()))
        throw CornerError("vertical direction must lie in p0 M p0");
    return TangentVector(eta.element() * x, eta);
}

/// Canonical representative of the horizontal coset of v: the component
/// (1 - eta eta^{-1}) v orthogonal to the vertical subspace.
inline AlgebraElement horizontal_project(const TangentVector& tv) {
    const AlgebraElement& eta = tv.base.element();
    const AlgebraElement one = AlgebraElement::identity(eta.descriptor());
    return (one - eta * partial_inverse(eta)) * tv.v;
}

/// Pair version of the vertical injection with one shared corner element:
/// x -> ((eta x, eta), (xi x, xi)).
inline std::pair<TangentVector, TangentVector> vertical_inject2(const AlgebraElement& x,
                                                                const BundlePoint& eta,
                                                                const BundlePoint& xi) {
    return {vertical_inject(x, eta), vertical_inject(x, xi)};
}

/// Canonical representative of the diagonal-vertical coset of a pair:
/// subtract the joint least-squares corner element
/// xh = (eta*eta + xi*xi)^{-1}(eta*v + xi*w).
inline std::pair<AlgebraElement, AlgebraElement> horizontal_project2(
    const TangentVector& tv, const TangentVector& tw) {
    const AlgebraElement& eta = tv.base.element();
    const AlgebraElement& xi = tw.base.element();
    const AlgebraElement gram = eta.adjoint() * eta + xi.adjoint() * xi;
    const AlgebraElement xh =
        partial_inverse(gram) * (eta.adjoint() * tv.v + xi.adjoint() * tw.v);
    return {tv.v - eta * xh, tw.v - xi * xh};
}

// ---------------------------------------------------------------------------
// The tangent group of the structure group and its action
// ---------------------------------------------------------------------------

/// Element (x, g) of the semidirect product corner x corner-group with
/// multiplication (x, g)(y, h) = (x + g y g^{-1}, g h).
struct SemidirectElement {
    AlgebraElement x;
    StructureGroupElement g;
};

inline SemidirectElement semidirect_unit(const ProjectionElement& p0) {
    return SemidirectElement{AlgebraElement::zero(p0.descriptor()),
                             StructureGroupElement::unit(p0)};
}

inline SemidirectElement semidirect_product(const SemidirectElement& l,
                                            const SemidirectElement& r) {
    const AlgebraElement gi = partial_inverse(l.g.element());
    return SemidirectElement{l.x + l.g.element() * r.x * gi, l.g * r.g};
}

inline SemidirectElement semidirect_inverse(const SemidirectElement& s) {
    const AlgebraElement gi = partial_inverse(s.g.element());
    return SemidirectElement{cplx(-1.0) * (gi * s.x * s.g.element()),
                             s.g.inverse()};
}

/// Right action of the semidirect element on a tangent vector of the
/// bundle: (v, eta).(x, g) = (v g + eta x g, eta g).
inline TangentVector tangent_action(const TangentVector& tv, const SemidirectElement& s) {
    return TangentVector(tv.v * s.g.element() + tv.base.element() * s.x * s.g.element(),
                         act(tv.base, s.g));
}

// ---------------------------------------------------------------------------
// Left-translation flows and their cocycles
// ---------------------------------------------------------------------------

/// Generator of the one-parameter family of left translations
/// x -> exp(t w) x.
struct FlowGenerator {
    AlgebraElement w;
};

inline AlgebraElement flow_factor(const FlowGenerator& f, double t) {
    return (cplx(t) * f.w).map([](const Mat& m) { return mat_exp(m); });
}

/// Left translation of an arrow; preserves the source exactly.
inline GroupoidElement flow_translate(const FlowGenerator& f, double t,
                                      const GroupoidElement& x) {
    return GroupoidElement(flow_factor(f, t) * x.element());
}

/// Induced flow on bundle points.
inline BundlePoint flow_point(const FlowGenerator& f, double t, const BundlePoint& eta) {
    return BundlePoint(flow_factor(f, t) * eta.element(), eta.p0());
}

/// Induced flow on the lattice: q -> target of exp(t w) q.
inline ProjectionElement flow_lattice(const FlowGenerator& f, double t,
                                      const ProjectionElement& q) {
    return left_support(flow_factor(f, t) * q.element());
}

/// Chart cocycle of the flow at q: c_p(q, t) = p exp(t w) sigma_p(q),
/// an invertible corner element satisfying the lifting identity
/// exp(t w) sigma_p(q) = sigma_p(lambda_t(q)) c_p(q, t).
inline AlgebraElement cocycle(const FlowGenerator& f, const ProjectionElement& p,
                              const ProjectionElement& q, double t) {
    if (!in_pi(p, q)) throw NotInChart("base point lies outside the chart around p");
    if (!in_pi(p, flow_lattice(f, t, q)))
        throw NotInChart("flow leaves the chart around p at the requested time");
    return p.element() * flow_factor(f, t) * chart_sigma(p, q);
}

} // namespace bgl
