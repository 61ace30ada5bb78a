/** \file involution.hpp
    Two involutions and the real charts they carve out: the arrow involution
    J(x) = (x^{-1})* whose fixed points are exactly the partial isometries,
    Hermitian-parameter charts on the unitary arrows relative to a caller
    supplied reference frame, and the complement involution p -> 1-p on the
    projection lattice together with its coordinate formula.

    The unitary charts trivialise arrows through the isometric polar parts
    of the section legs p + y_p rather than through the legs themselves:
    only then is the middle factor z a corner unitary exactly for partial
    isometries.  (With the raw legs the criterion fails: x = e11 + t e21
    has plain middle factor e11, yet x x* x != x for t != 0.)
*/
#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "bgl/groupoid.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// The arrow involution J
// ---------------------------------------------------------------------------

/// J(x) = (x^{-1})*: the adjoint of the partial inverse.  Involutive, keeps
/// source and target, and respects the partial composition; an arrow is a
/// fixed point exactly when all its singular values are one.
inline GroupoidElement j_involution(const GroupoidElement& x) {
    return GroupoidElement(partial_inverse(x.element()).adjoint());
}

// ---------------------------------------------------------------------------
// Partial isometries
// ---------------------------------------------------------------------------

/// Cheap defect test ||u u* u - u|| <= tol deciding whether u is a partial
/// isometry; equivalent to u being a fixed point of j_involution.
inline bool is_partial_isometry(const AlgebraElement& u, double tol = 1e-8) {
    return dist(u * u.adjoint() * u, u) <= tol;
}

/// An element certified to satisfy u u* u = u, so that u*u and uu* are
/// both projections and u is fixed by j_involution.
class PartialIsometry {
public:
    explicit PartialIsometry(AlgebraElement u) : u_(std::move(u)) {
        if (dist(u_ * u_.adjoint() * u_, u_) > 1e-10)
            throw ProjectionError("element is not a partial isometry");
    }

    const AlgebraElement& element() const { return u_; }
    /// Initial projection u*u.
    ProjectionElement src() const { return ProjectionElement(u_.adjoint() * u_); }
    /// Final projection uu*.
    ProjectionElement tgt() const { return ProjectionElement(u_ * u_.adjoint()); }

private:
    AlgebraElement u_;
};

// ---------------------------------------------------------------------------
// Isometric arrow charts
// ---------------------------------------------------------------------------

/// The unique partial-isometry arrow q <- p over the chart around p: the
/// isometric polar part of the section sigma_p(q) = (pq)^{-1} = p + y_p.
inline AlgebraElement unitary_section(const ProjectionElement& p, const ProjectionElement& q) {
    return polar_decompose(chart_sigma(p, q)).u;
}

/// Arrow chart with isometric legs: the corner coordinates agree with
/// chart_psi, but the middle factor is trivialised by the partial-isometry
/// sections, z = u_p(T x)* x u_p~(S x).  In these coordinates the arrow
/// involution fixes y_p, yt and applies J to the middle alone, so x is a
/// partial isometry exactly when z is a corner unitary, z z* = p.
inline GroupoidChartTriple chart_psi_iso(const ProjectionElement& p, const ProjectionElement& pt,
                                         const GroupoidElement& x) {
    const AlgebraElement sig = chart_sigma(p, x.tgt());
    const AlgebraElement sigt = chart_sigma(pt, x.src());
    const AlgebraElement u = polar_decompose(sig).u;
    const AlgebraElement ut = polar_decompose(sigt).u;
    return GroupoidChartTriple{p, pt, sig - p.element(),
                               u.adjoint() * x.element() * ut, sigt - pt.element()};
}

inline GroupoidElement chart_psi_iso_inv(const GroupoidChartTriple& t) {
    const AlgebraElement u = polar_decompose(t.p.element() + t.y_p).u;
    const AlgebraElement ut = polar_decompose(t.pt.element() + t.yt).u;
    return GroupoidElement(u * t.z * ut.adjoint());
}

// ---------------------------------------------------------------------------
// Real charts on the unitary arrows
// ---------------------------------------------------------------------------

/// Coordinates of a unitary arrow near (p, p~): the two lattice corners as
/// in GroupoidChartTriple, with the isometric middle factor replaced by its
/// Hermitian generator h in p~Mp~ relative to the reference frame,
/// z = z0 exp(i h).
struct UnitaryChartTriple {
    ProjectionElement p;
    ProjectionElement pt;
    AlgebraElement y_p;
    AlgebraElement h;
    AlgebraElement yt;
};

namespace detail {

/// Blockwise principal logarithm of w + (1 - pt) for w in the corner
/// p~Mp~: the complement carries eigenvalue one and logs to zero, so the
/// result stays in the corner.  Throws LogBranchError on the cut.
inline AlgebraElement corner_log_principal(const ProjectionElement& pt,
                                           const AlgebraElement& w) {
    const AlgebraDescriptor& d = w.descriptor();
    std::vector<Mat> out;
    out.reserve(static_cast<std::size_t>(d.blocks()));
    for (int k = 0; k < d.blocks(); ++k)
        out.push_back(mat_log_principal(
            w.block(k) + Mat::Identity(d.dim(k), d.dim(k)) - pt.block(k)));
    return AlgebraElement(d, std::move(out));
}

/// Blockwise exp(i h); for Hermitian h in the corner p~Mp~ this is the
/// corner unitary exp(i h) plus the identity on the complement, which a
/// frame z0 in pMp~ annihilates on multiplication.
inline AlgebraElement exp_i(const AlgebraElement& h) {
    const AlgebraDescriptor& d = h.descriptor();
    const std::complex<double> i(0.0, 1.0);
    std::vector<Mat> out;
    out.reserve(static_cast<std::size_t>(d.blocks()));
    for (int k = 0; k < d.blocks(); ++k) out.push_back(mat_exp(i * h.block(k)));
    return AlgebraElement(d, std::move(out));
}

/// Frame validation: z0 z0* = p and z0* z0 = p~, i.e. z0 is a corner
/// unitary pMp~ element.
inline void check_frame(const ProjectionElement& p, const ProjectionElement& pt,
                        const AlgebraElement& z0) {
    const double tol = 1e-8 * std::max(1.0, z0.norm());
    if (dist(z0 * z0.adjoint(), p.element()) > tol ||
        dist(z0.adjoint() * z0, pt.element()) > tol)
        throw CornerError("reference frame is not a corner unitary between p and p~");
}

} // namespace detail

/// Chart of a unitary arrow x through the frame z0: splits x at (p, p~)
/// with isometric legs and takes h = -i log((z0)^{-1} z) on the principal
/// branch.  For actual partial isometries h is Hermitian; the defect
/// ||h - h*|| measures how far the middle factor is from a corner unitary.
/// Throws NotInChart when x leaves the chart domain and LogBranchError
/// when the relative middle factor has spectrum on the closed negative
/// real axis.
inline UnitaryChartTriple unitary_chart(const ProjectionElement& p,
                                        const ProjectionElement& pt,
                                        const AlgebraElement& z0,
                                        const GroupoidElement& x) {
    detail::check_frame(p, pt, z0);
    const GroupoidChartTriple t = chart_psi_iso(p, pt, x);
    const AlgebraElement w = partial_inverse(z0) * t.z;
    const std::complex<double> mi(0.0, -1.0);
    return UnitaryChartTriple{t.p, t.pt, t.y_p,
                              mi * detail::corner_log_principal(pt, w), t.yt};
}

/// Inverse chart: rebuilds the middle factor z = z0 exp(i h) and
/// reassembles the arrow through the isometric section legs.
inline GroupoidElement unitary_chart_inv(const AlgebraElement& z0,
                                         const UnitaryChartTriple& t) {
    detail::check_frame(t.p, t.pt, z0);
    const AlgebraElement z = z0 * detail::exp_i(t.h);
    return chart_psi_iso_inv(GroupoidChartTriple{t.p, t.pt, t.y_p, z, t.yt});
}

// ---------------------------------------------------------------------------
// The complement involution on the lattice
// ---------------------------------------------------------------------------

/// Orthogonal complement 1 - p viewed as a lattice involution; ranks are
/// complemented blockwise.
inline ProjectionElement perp(const ProjectionElement& p) { return complement(p); }

/// The complement involution in the chart around p: for y in (1-p)Mp with
/// q = (p+y)(p+y)^{-1} the complement 1-q lies in the chart around 1-p and
///     y_perp = [(1-p)(1-(p+y)(p+y)^{-1})]^{-1} - (1-p),
/// all inverses partial.  Throws NotInChart when 1-q falls outside the
/// chart around 1-p (in particular when y leaves the corner (1-p)Mp and
/// inflates the support of p+y).
inline AlgebraElement perp_transition(const ProjectionElement& p, const AlgebraElement& y) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement g = p.element() + y;
    const AlgebraElement q = g * partial_inverse(g);
    if (!in_pi(perp(p), ProjectionElement(one - q)))
        throw NotInChart("complement leaves the chart around 1-p");
    return partial_inverse((one - p.element()) * (one - q)) - (one - p.element());
}

} // namespace bgl
