/** \file groupoid.hpp
    Arrows over the projection lattice: partial composition on matching
    supports, transitive components, the lattice charts around a fixed
    projection, the arrow charts around a pair of projections, and both
    families of transition maps.

    An arrow is any element x; its source is the right support u*u and its
    target the left support uu* from the polar parts.  Composition is the
    algebra product, defined when src(x) matches tgt(y).
*/
#pragma once

#include <functional>
#include <vector>

#include "bgl/algebra.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Arrows
// ---------------------------------------------------------------------------

/// An algebra element together with its cached source/target projections.
class GroupoidElement {
public:
    explicit GroupoidElement(AlgebraElement x)
        : x_(std::move(x)), src_(right_support(x_)), tgt_(left_support(x_)) {}

    /// The identity arrow sitting at a projection.
    static GroupoidElement unit(const ProjectionElement& p) {
        return GroupoidElement(p.element());
    }

    const AlgebraElement& element() const { return x_; }
    const ProjectionElement& src() const { return src_; }
    const ProjectionElement& tgt() const { return tgt_; }

    GroupoidElement inverse() const { return GroupoidElement(partial_inverse(x_)); }

private:
    AlgebraElement x_;
    ProjectionElement src_;
    ProjectionElement tgt_;
};

/// Partial multiplication: defined when src(x) = tgt(y) to tau_match.
inline GroupoidElement compose(const GroupoidElement& x, const GroupoidElement& y,
                               double tau_match = kTauMatch) {
    if (dist(x.src().element(), y.tgt().element()) > tau_match)
        throw NonComposable("source of left factor does not match target of right factor");
    return GroupoidElement(x.element() * y.element());
}

// ---------------------------------------------------------------------------
// Transitive components
// ---------------------------------------------------------------------------

inline bool in_lattice_component(const ProjectionElement& q, const ProjectionElement& p0) {
    return mvn_equivalent(q, p0);
}

inline bool in_groupoid_component(const GroupoidElement& x, const ProjectionElement& p0) {
    return mvn_equivalent(x.src(), p0) && mvn_equivalent(x.tgt(), p0);
}

/// All per-block rank vectors (0..n_k each); these index the components.
inline std::vector<std::vector<int>> enumerate_rank_vectors(const AlgebraDescriptor& d) {
    std::vector<std::vector<int>> out{{}};
    for (int k = 0; k < d.blocks(); ++k) {
        std::vector<std::vector<int>> next;
        for (const auto& head : out)
            for (int r = 0; r <= d.dim(k); ++r) {
                std::vector<int> v = head;
                v.push_back(r);
                next.push_back(std::move(v));
            }
        out = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lattice charts around p
// ---------------------------------------------------------------------------

/// Chart-domain test: q admits the splitting M = qM + (1-p)M exactly when
/// p and q have equal per-block ranks and pq has full rank rank(p).
inline bool in_pi(const ProjectionElement& p, const ProjectionElement& q) {
    if (p.descriptor() != q.descriptor())
        throw DescriptorError("projections live over different descriptors");
    const int scale = p.descriptor().max_dim();
    for (int k = 0; k < p.descriptor().blocks(); ++k) {
        if (p.rank(k) != q.rank(k)) return false;
        if (numerical_rank(Mat(p.block(k) * q.block(k)), scale) != p.rank(k)) return false;
    }
    return true;
}

/// Conditioning margin of the chart-domain test: the smallest retained
/// singular value of pq (0 when q is outside the domain).  Values barely
/// above the rank threshold flag a nearly degenerate chart.
inline double in_pi_margin(const ProjectionElement& p, const ProjectionElement& q) {
    if (!in_pi(p, q)) return 0.0;
    double margin = std::numeric_limits<double>::infinity();
    const int scale = p.descriptor().max_dim();
    for (int k = 0; k < p.descriptor().blocks(); ++k) {
        if (p.rank(k) == 0) continue;
        const SvdParts s = svd_with_rank(Mat(p.block(k) * q.block(k)), scale);
        margin = std::min(margin, s.sigma(s.rank - 1));
    }
    return std::isfinite(margin) ? margin : 1.0;
}

/// Section of the target map over the chart: sigma = (pq)^{-1}, an arrow
/// with source p and target q satisfying p*sigma = p.
inline AlgebraElement chart_sigma(const ProjectionElement& p, const ProjectionElement& q) {
    if (!in_pi(p, q)) throw NotInChart("projection lies outside the chart around p");
    return partial_inverse(p.element() * q.element());
}

/// Chart coordinate y_p = (pq)^{-1} - p, a corner element in (1-p)Mp.
inline AlgebraElement chart_phi(const ProjectionElement& p, const ProjectionElement& q) {
    return chart_sigma(p, q) - p.element();
}

/// Inverse chart: the projection onto the graph of y_p, recovered as the
/// left support of p + y_p.
inline ProjectionElement chart_phi_inv(const ProjectionElement& p, const AlgebraElement& y) {
    return left_support(p.element() + y);
}

// ---------------------------------------------------------------------------
// Transitions between lattice charts
// ---------------------------------------------------------------------------

/// The four corner pieces of the identity with respect to (p, p'):
/// a = p'p, b = (1-p')p, c = p'(1-p), d = (1-p')(1-p).
struct TransitionBlocks {
    AlgebraElement a, b, c, d;
};

inline TransitionBlocks transition_blocks(const ProjectionElement& p,
                                          const ProjectionElement& pp) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement& P = p.element();
    const AlgebraElement& Q = pp.element();
    return TransitionBlocks{Q * P, (one - Q) * P, Q * (one - P), (one - Q) * (one - P)};
}

/// Chart change on the lattice: y_{p'} = (b + d y_p)(a + c y_p)^{-1}.
inline AlgebraElement lattice_transition(const ProjectionElement& p,
                                         const ProjectionElement& pp,
                                         const AlgebraElement& y) {
    const ProjectionElement q = chart_phi_inv(p, y);
    if (!in_pi(pp, q)) throw NotInChart("point leaves the chart around p'");
    const TransitionBlocks t = transition_blocks(p, pp);
    return (t.b + t.d * y) * partial_inverse(t.a + t.c * y);
}

// ---------------------------------------------------------------------------
// Arrow charts around (p, p~)
// ---------------------------------------------------------------------------

/// Coordinates of an arrow relative to the pair (p, p~): target-side corner
/// y_p in (1-p)Mp, the conjugated middle factor z in pMp~ of full corner
/// rank, and source-side corner yt in (1-p~)Mp~.
struct GroupoidChartTriple {
    ProjectionElement p;
    ProjectionElement pt;
    AlgebraElement y_p;
    AlgebraElement z;
    AlgebraElement yt;
};

inline GroupoidChartTriple chart_psi(const ProjectionElement& p, const ProjectionElement& pt,
                                     const GroupoidElement& x) {
    const AlgebraElement y = chart_phi(p, x.tgt());
    const AlgebraElement yt = chart_phi(pt, x.src());
    const AlgebraElement sig = chart_sigma(p, x.tgt());
    const AlgebraElement sigt = chart_sigma(pt, x.src());
    const AlgebraElement z = partial_inverse(sig) * x.element() * sigt;
    return GroupoidChartTriple{p, pt, y, z, yt};
}

inline GroupoidElement chart_psi_inv(const GroupoidChartTriple& t) {
    return GroupoidElement((t.p.element() + t.y_p) * t.z *
                           partial_inverse(t.pt.element() + t.yt));
}

/// Chart change on arrows: both corner coordinates transform as on the
/// lattice and the middle factor is conjugated,
/// z' = (a + c y_p) z (a~ + c~ y~)^{-1}.
inline GroupoidChartTriple groupoid_transition(const GroupoidChartTriple& t,
                                               const ProjectionElement& pp,
                                               const ProjectionElement& ptp) {
    const ProjectionElement q = chart_phi_inv(t.p, t.y_p);
    const ProjectionElement qt = chart_phi_inv(t.pt, t.yt);
    if (!in_pi(pp, q) || !in_pi(ptp, qt))
        throw NotInChart("arrow leaves the chart around (p', p~')");
    const TransitionBlocks u = transition_blocks(t.p, pp);
    const TransitionBlocks v = transition_blocks(t.pt, ptp);
    const AlgebraElement left = u.a + u.c * t.y_p;
    const AlgebraElement right = v.a + v.c * t.yt;
    return GroupoidChartTriple{pp, ptp,
                               (u.b + u.d * t.y_p) * partial_inverse(left),
                               left * t.z * partial_inverse(right),
                               (v.b + v.d * t.yt) * partial_inverse(right)};
}

// ---------------------------------------------------------------------------
// Central projections have one-point charts
// ---------------------------------------------------------------------------

/// True iff the chart domain around p is {p} itself, i.e. (1-p)Mp = 0,
/// tested on all matrix units.  Agrees with centrality of p.
inline bool pi_is_singleton(const ProjectionElement& p) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const double tol = 64.0 * p.descriptor().max_dim() * kEps *
                       std::max(1.0, p.element().norm());
    for (const AlgebraElement& u : matrix_units(p.descriptor()))
        if (((one - p.element()) * u * p.element()).norm() > tol) return false;
    return true;
}

} // namespace bgl
