/** \file bundle.hpp
    The source fibre over a fixed projection p0 as a principal bundle:
    points eta with right support p0, the corner group acting freely on
    the right, gauge invariants labelling the orbits, chart coordinates,
    and the action-groupoid embedding into the pair of points.
*/
#pragma once

#include <utility>

#include "bgl/groupoid.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Points and structure group
// ---------------------------------------------------------------------------

/// A point of the bundle: eta in M p0 whose right support is exactly p0.
/// The rank condition makes the right corner-group action free.
class BundlePoint {
public:
    BundlePoint(AlgebraElement eta, ProjectionElement p0)
        : eta_(std::move(eta)), p0_(std::move(p0)) {
        if (dist(eta_ * p0_.element(), eta_) > kTauProj * std::max(1.0, eta_.norm()))
            throw CornerError("bundle point does not lie in M p0");
        const int scale = p0_.descriptor().max_dim();
        for (int k = 0; k < p0_.descriptor().blocks(); ++k)
            if (numerical_rank(eta_.block(k), scale) != p0_.rank(k))
                throw RankError("bundle point must have the rank of p0 in every block");
    }

    const AlgebraElement& element() const { return eta_; }
    const ProjectionElement& p0() const { return p0_; }

    /// Partial inverse of the point, used by the gauge invariants.
    AlgebraElement pinv() const { return partial_inverse(eta_); }

private:
    AlgebraElement eta_;
    ProjectionElement p0_;
};

/// An element of the structure group: g in p0 M p0 invertible inside the
/// corner (full rank on every block of p0).
class StructureGroupElement {
public:
    StructureGroupElement(AlgebraElement g, ProjectionElement p0)
        : g_(std::move(g)), p0_(std::move(p0)) {
        const AlgebraElement corner = p0_.element() * g_ * p0_.element();
        if (dist(corner, g_) > kTauProj * std::max(1.0, g_.norm()))
            throw CornerError("group element does not lie in p0 M p0");
        const int scale = p0_.descriptor().max_dim();
        for (int k = 0; k < p0_.descriptor().blocks(); ++k)
            if (numerical_rank(g_.block(k), scale) != p0_.rank(k))
                throw RankError("group element is not invertible in the corner");
    }

    static StructureGroupElement unit(const ProjectionElement& p0) {
        return StructureGroupElement(p0.element(), p0);
    }

    const AlgebraElement& element() const { return g_; }
    const ProjectionElement& p0() const { return p0_; }

    StructureGroupElement inverse() const {
        return StructureGroupElement(partial_inverse(g_), p0_);
    }
    friend StructureGroupElement operator*(const StructureGroupElement& a,
                                           const StructureGroupElement& b) {
        return StructureGroupElement(a.g_ * b.g_, a.p0_);
    }

private:
    AlgebraElement g_;
    ProjectionElement p0_;
};

// ---------------------------------------------------------------------------
// Action and gauge invariants
// ---------------------------------------------------------------------------

/// Free right action eta.g of the structure group.
inline BundlePoint act(const BundlePoint& eta, const StructureGroupElement& g) {
    return BundlePoint(eta.element() * g.element(), eta.p0());
}

/// Base-point invariant eta eta^{-1}: the left support, constant on orbits.
inline ProjectionElement gauge_base(const BundlePoint& eta) {
    return left_support(eta.element());
}

/// Arrow invariant eta xi^{-1} labelling the orbit of a pair of points;
/// its source is gauge_base(xi) and its target gauge_base(eta).
inline GroupoidElement gauge_arrow(const BundlePoint& eta, const BundlePoint& xi) {
    return GroupoidElement(eta.element() * xi.pinv());
}

/// Embedding of the action pair (eta, g) as an ordered pair of points
/// whose gauge arrow has equal source and target.
inline std::pair<BundlePoint, BundlePoint> action_groupoid_embed(
    const BundlePoint& eta, const StructureGroupElement& g) {
    return {act(eta, g), eta};
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

/// Chart coordinates of a point: the lattice coordinate of its base
/// together with the frame factor, (y_p, z) = (eta (p eta)^{-1} - p, p eta).
struct BundleChartPair {
    AlgebraElement y_p; ///< in (1-p)Mp
    AlgebraElement z;   ///< in pMp0, full corner rank
};

inline BundleChartPair bundle_chart(const ProjectionElement& p, const BundlePoint& eta) {
    if (!in_pi(p, gauge_base(eta)))
        throw NotInChart("base of the point lies outside the chart around p");
    const AlgebraElement z = p.element() * eta.element();
    return BundleChartPair{eta.element() * partial_inverse(z) - p.element(), z};
}

inline BundlePoint bundle_chart_inv(const ProjectionElement& p, const BundleChartPair& c,
                                    const ProjectionElement& p0) {
    return BundlePoint((p.element() + c.y_p) * c.z, p0);
}

} // namespace bgl
