/** \file poisson.hpp
    Symplectic and Poisson structure of the cotangent space of the
    support-fixing bundle.

    The cotangent carrier is the pair (phi, eta) with phi in the dual corner
    p0 M (trace pairing realization) and eta a bundle point.  This header
    provides:

      * the canonical one- and two-forms and the Poisson bracket of exactly
        differentiable observables, with Hamiltonian fields;
      * the momentum map phi*eta, its equivariance, and its chart-coordinate
        expression z^{-1} beta z;
      * cotangent charts (alpha, beta, y, z), their transitions, and the full
        chart-coordinate bracket (canonical alpha/y part, Lie-Poisson beta
        part, and the frame term), plus the reduced three-term bracket;
      * the Lie-Poisson bracket on the corner and the momentum-pullback
        comparison report;
      * the flat-subbundle anchor (theta, v) = (-eta_flat, phi_flat) and its
        inverse;
      * the zero-momentum local section used for reduction, with its
        momentum and one-form pullback residuals.
*/
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "bgl/tangent.hpp"
#include "bgl/word.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Carrier types
// ---------------------------------------------------------------------------

/// A cotangent point: a dual-corner element over a bundle point.
struct CotangentPoint {
    AlgebraElement phi; ///< in p0 M (trace-pairing realization of the dual)
    BundlePoint eta;

    CotangentPoint(AlgebraElement phi_in, BundlePoint eta_in)
        : phi(std::move(phi_in)), eta(std::move(eta_in)) {
        if (dist(eta.p0().element() * phi, phi) > 1e-10 * std::max(1.0, phi.norm()))
            throw CornerError("covector must lie in the dual corner p0 M");
    }
};

/// A tangent vector of the cotangent space: a covector direction theta and a
/// base direction v over a cotangent point.
struct TangentAtCotangent {
    AlgebraElement theta; ///< in p0 M
    AlgebraElement v;     ///< in M p0
    CotangentPoint base;

    TangentAtCotangent(AlgebraElement theta_in, AlgebraElement v_in, CotangentPoint base_in)
        : theta(std::move(theta_in)), v(std::move(v_in)), base(std::move(base_in)) {
        const AlgebraElement p0 = base.eta.p0().element();
        if (dist(p0 * theta, theta) > 1e-10 * std::max(1.0, theta.norm()))
            throw CornerError("covector direction must lie in p0 M");
        if (dist(v * p0, v) > 1e-10 * std::max(1.0, v.norm()))
            throw CornerError("base direction must lie in M p0");
    }
};

/// Chart coordinates of a cotangent point around the lattice chart at p.
struct CotangentChartQuad {
    AlgebraElement alpha; ///< in p M (1-p)
    AlgebraElement beta;  ///< in p M p
    AlgebraElement y;     ///< in (1-p) M p
    AlgebraElement z;     ///< in p M p0, full corner rank
};

// ---------------------------------------------------------------------------
// Canonical forms and the Poisson bracket
// ---------------------------------------------------------------------------

/// The tautological one-form: the covector applied to the base velocity.
inline cplx canonical_one_form(const TangentAtCotangent& xi) {
    return pairing(xi.base.phi, xi.v);
}

/// The canonical weak-symplectic two-form <theta1, v2> - <theta2, v1>.
inline cplx symplectic_two_form(const TangentAtCotangent& xi1, const TangentAtCotangent& xi2) {
    if (dist(xi1.base.phi, xi2.base.phi) > kTauProj ||
        dist(xi1.base.eta.element(), xi2.base.eta.element()) > kTauProj)
        throw BaseMismatch("two-form arguments must share a base point");
    return pairing(xi1.theta, xi2.v) - pairing(xi2.theta, xi1.v);
}

/// Environment with the cotangent variables "phi" and "eta" declared in
/// their corners, ready for exact observable derivatives.
inline Env cotangent_env(const CotangentPoint& at) {
    const AlgebraElement one = AlgebraElement::identity(at.phi.descriptor());
    Env env;
    env.set_cornered("phi", at.phi, at.eta.p0().element(), one);
    env.set_cornered("eta", at.eta.element(), one, at.eta.p0().element());
    return env;
}

/// Canonical Poisson bracket <dg/deta, df/dphi> - <df/deta, dg/dphi>.
inline cplx pbracket(const Observable& f, const Observable& g, const CotangentPoint& at) {
    const Env env = cotangent_env(at);
    return pairing(g.deriv(env, "eta"), f.deriv(env, "phi")) -
           pairing(f.deriv(env, "eta"), g.deriv(env, "phi"));
}

/// Hamiltonian field of f: (theta, v) = (-df/deta, df/dphi), the unique
/// field with omega(xi_f, .) = -df.
inline TangentAtCotangent hamiltonian_field(const Observable& f, const CotangentPoint& at) {
    const Env env = cotangent_env(at);
    return TangentAtCotangent((-1.0) * f.deriv(env, "eta"), f.deriv(env, "phi"), at);
}

/// Differential of f evaluated on a tangent vector.
inline cplx differential(const Observable& f, const TangentAtCotangent& xi) {
    const Env env = cotangent_env(xi.base);
    return pairing(xi.theta, f.deriv(env, "phi")) + pairing(f.deriv(env, "eta"), xi.v);
}

// ---------------------------------------------------------------------------
// Momentum maps
// ---------------------------------------------------------------------------

/// The momentum of a cotangent point: phi * eta in the corner p0 M p0.
inline AlgebraElement momentum(const CotangentPoint& at) {
    return at.phi * at.eta.element();
}

/// The structure-group action on the cotangent carrier:
/// (phi, eta) -> (g^{-1} phi, eta g).
inline CotangentPoint cotangent_act(const CotangentPoint& at, const StructureGroupElement& g) {
    return CotangentPoint(partial_inverse(g.element()) * at.phi, act(at.eta, g));
}

/// Rank of the (exact) derivative of the momentum map at a point, assembled
/// from phi' * eta + phi * eta' over unit directions; full rank equals the
/// dimension of the corner p0 M p0 and witnesses the submersion property.
inline int momentum_jacobian_rank(const CotangentPoint& at) {
    const AlgebraDescriptor& d = at.phi.descriptor();
    const AlgebraElement p0 = at.eta.p0().element();
    std::vector<Eigen::VectorXcd> cols;
    for (const AlgebraElement& u : matrix_units(d)) {
        const AlgebraElement du_phi = p0 * u;     // covector direction
        const AlgebraElement du_eta = u * p0;     // base direction
        if (du_phi.norm() > 1e-8) cols.push_back(to_vector(du_phi * at.eta.element()));
        if (du_eta.norm() > 1e-8) cols.push_back(to_vector(at.phi * du_eta));
    }
    Mat jac(d.total_dim(), static_cast<int>(cols.size()));
    for (int j = 0; j < static_cast<int>(cols.size()); ++j)
        jac.col(j) = cols[static_cast<std::size_t>(j)];
    return numerical_rank(jac, d.max_dim());
}

// ---------------------------------------------------------------------------
// Cotangent charts
// ---------------------------------------------------------------------------

/// Chart record of a cotangent point around p: alpha = (p eta) phi (1-p),
/// beta = (p eta) phi eta (p eta)^{-1}, plus the base chart pair (y, z).
inline CotangentChartQuad cotangent_chart(const ProjectionElement& p, const CotangentPoint& at) {
    const BundleChartPair base = bundle_chart(p, at.eta); // NotInChart off-domain
    const AlgebraElement one = AlgebraElement::identity(at.phi.descriptor());
    const AlgebraElement zphi = base.z * at.phi;
    return CotangentChartQuad{zphi * (one - p.element()),
                              zphi * at.eta.element() * partial_inverse(base.z), base.y_p,
                              base.z};
}

/// Chart inverse: phi = z^{-1}(alpha + beta - alpha y), eta = (p + y) z.
inline CotangentPoint cotangent_chart_inv(const ProjectionElement& p,
                                          const CotangentChartQuad& quad,
                                          const ProjectionElement& p0) {
    const AlgebraElement phi =
        partial_inverse(quad.z) * (quad.alpha + quad.beta - quad.alpha * quad.y);
    return CotangentPoint(phi, BundlePoint((p.element() + quad.y) * quad.z, p0));
}

/// Chart change of the cotangent record.  With m = a + c y (the invertible
/// block of the base transition):
///   alpha' = m (alpha + beta - alpha y) (1 - p'),   beta' = m beta m^{-1},
///   y' = (b + d y) m^{-1},                          z' = m z.
inline CotangentChartQuad cotangent_transition(const ProjectionElement& p,
                                               const ProjectionElement& pp,
                                               const CotangentChartQuad& quad) {
    const ProjectionElement q = chart_phi_inv(p, quad.y);
    if (!in_pi(pp, q)) throw NotInChart("point leaves the chart around p'");
    const TransitionBlocks blocks = transition_blocks(p, pp);
    const AlgebraElement m = blocks.a + blocks.c * quad.y;
    const AlgebraElement mi = partial_inverse(m);
    const AlgebraElement one = AlgebraElement::identity(m.descriptor());
    return CotangentChartQuad{
        m * (quad.alpha + quad.beta - quad.alpha * quad.y) * (one - pp.element()),
        m * quad.beta * mi, (blocks.b + blocks.d * quad.y) * mi, m * quad.z};
}

/// Momentum in chart coordinates: z^{-1} beta z (exactly phi * eta).
inline AlgebraElement momentum_in_chart(const CotangentChartQuad& quad) {
    return partial_inverse(quad.z) * quad.beta * quad.z;
}

/// Environment with the chart variables declared in their corners.
inline Env chart_env(const CotangentChartQuad& quad, const ProjectionElement& p,
                     const ProjectionElement& p0) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    Env env;
    env.set_cornered("alpha", quad.alpha, p.element(), one - p.element());
    env.set_cornered("beta", quad.beta, p.element(), p.element());
    env.set_cornered("y", quad.y, one - p.element(), p.element());
    env.set_cornered("z", quad.z, p.element(), p0.element());
    return env;
}

/// Differentiable coordinate map (phi, eta) -> (alpha, beta, y, z) for
/// transporting chart observables back to the carrier with exact Jacobians.
inline CoordMap cotangent_chart_map(const ProjectionElement& p, const ProjectionElement& p0) {
    const AlgebraElement pe = p.element();
    const AlgebraElement p0e = p0.element();
    return [pe, p0e](const Env& env) {
        const AlgebraElement one = AlgebraElement::identity(pe.descriptor());
        const MatExpr phi = MatExpr::variable("phi", env);
        const MatExpr eta = MatExpr::variable("eta", env);
        const MatExpr z = MatExpr::constant(pe) * eta;
        const MatExpr zi = z.corner_inverse();
        const MatExpr y = eta * zi - MatExpr::constant(pe);
        const MatExpr alpha = z * phi * MatExpr::constant(one - pe);
        const MatExpr beta = z * phi * eta * zi;
        CoordFrame frame;
        frame.out.set_cornered("alpha", alpha.value(), pe, one - pe);
        frame.out.set_cornered("beta", beta.value(), pe, pe);
        frame.out.set_cornered("y", y.value(), one - pe, pe);
        frame.out.set_cornered("z", z.value(), pe, p0e);
        for (const auto& [name, block] : alpha.partials()) frame.jac[{"alpha", name}] = block;
        for (const auto& [name, block] : beta.partials()) frame.jac[{"beta", name}] = block;
        for (const auto& [name, block] : y.partials()) frame.jac[{"y", name}] = block;
        for (const auto& [name, block] : z.partials()) frame.jac[{"z", name}] = block;
        return frame;
    };
}

// ---------------------------------------------------------------------------
// Corner Lie-Poisson bracket and the momentum comparison
// ---------------------------------------------------------------------------

/// Lie-Poisson bracket on the dual of the corner algebra:
/// {F,G}(chi) = <chi, [dF/dchi, dG/dchi]> for observables of "chi".
inline cplx lp_bracket(const Observable& f, const Observable& g, const AlgebraElement& chi,
                       const ProjectionElement& p0) {
    Env env;
    env.set_cornered("chi", chi, p0.element(), p0.element());
    return pairing(chi, commutator(f.deriv(env, "chi"), g.deriv(env, "chi")));
}

/// Pull an observable of the corner variable "chi" back through the momentum
/// map chi = phi * eta (an exact trace-word substitution).
inline TraceWord momentum_pullback(const TraceWord& f) {
    const AlgebraDescriptor d = [&] {
        for (const TraceTerm& t : f.terms())
            for (const TraceFactor& fac : t.factors) return fac.coeff.descriptor();
        return AlgebraDescriptor({1});
    }();
    const AlgebraElement one = AlgebraElement::identity(d);
    return f.substitute("chi", {{one, "phi"}, {one, "eta"}});
}

/// Comparison report for bracket identities sampled at random points.
struct BracketComparisonReport {
    double max_residual = 0.0;
    int samples = 0;
};

/// Max over random cotangent points of
/// |{F o J, G o J}_canonical - {F, G}_LP o J| for the momentum J = phi eta.
inline BracketComparisonReport check_momentum_poisson(const TraceWord& f, const TraceWord& g,
                                                      const ProjectionElement& p0, int samples,
                                                      Rng& rng) {
    const AlgebraDescriptor& d = p0.descriptor();
    const Observable fo = observable(f);
    const Observable go = observable(g);
    const Observable fj = observable(momentum_pullback(f));
    const Observable gj = observable(momentum_pullback(g));
    BracketComparisonReport report;
    report.samples = samples;
    for (int i = 0; i < samples; ++i) {
        const CotangentPoint at(p0.element() * random_element(d, rng),
                                BundlePoint(random_element(d, rng) * p0.element(), p0));
        const cplx lhs = pbracket(fj, gj, at);
        const cplx rhs = lp_bracket(fo, go, momentum(at), p0);
        report.max_residual = std::max(report.max_residual, std::abs(lhs - rhs));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Chart-coordinate brackets
// ---------------------------------------------------------------------------

/// Full chart-coordinate bracket on observables of (alpha, beta, y, z):
/// canonical (alpha, y) part + Lie-Poisson beta part + frame term pairing
/// z dg/dz against df/dbeta.
inline cplx chart_bracket_full(const Observable& f, const Observable& g, const Env& env) {
    const AlgebraElement beta = env.value("beta");
    const AlgebraElement z = env.value("z");
    return pairing(g.deriv(env, "y"), f.deriv(env, "alpha")) -
           pairing(f.deriv(env, "y"), g.deriv(env, "alpha")) +
           pairing(beta, commutator(g.deriv(env, "beta"), f.deriv(env, "beta"))) +
           pairing(z * g.deriv(env, "z"), f.deriv(env, "beta")) -
           pairing(z * f.deriv(env, "z"), g.deriv(env, "beta"));
}

/// Reduced bracket for frame-independent observables of (alpha, beta, y):
/// the full bracket with the z-terms dropped.
inline cplx chart_bracket_reduced(const Observable& f, const Observable& g, const Env& env) {
    const AlgebraElement beta = env.value("beta");
    return pairing(g.deriv(env, "y"), f.deriv(env, "alpha")) -
           pairing(f.deriv(env, "y"), g.deriv(env, "alpha")) +
           pairing(beta, commutator(g.deriv(env, "beta"), f.deriv(env, "beta")));
}

// ---------------------------------------------------------------------------
// Flat subbundle anchor
// ---------------------------------------------------------------------------

/// A covector of the cotangent space itself, in the flat realization:
/// a component phi_flat in M p0 (pairs with theta) and eta_flat in p0 M
/// (pairs with v).
struct FlatCovector {
    AlgebraElement phi_flat; ///< in M p0
    AlgebraElement eta_flat; ///< in p0 M
};

/// Sharp map of the canonical structure on the flat subbundle:
/// (phi_flat, eta_flat) -> (theta, v) = (-eta_flat, phi_flat).
inline TangentAtCotangent sub_anchor_1(const FlatCovector& w, const CotangentPoint& at) {
    return TangentAtCotangent((-1.0) * w.eta_flat, w.phi_flat, at);
}

/// Inverse of the sharp map on its image: (theta, v) -> (v, -theta).
inline FlatCovector cotangent_flat(const TangentAtCotangent& xi) {
    return FlatCovector{xi.v, (-1.0) * xi.theta};
}

// ---------------------------------------------------------------------------
// Invariant-observable bracket on (beta, eta)
// ---------------------------------------------------------------------------

/// Bracket of gauge-invariant observables of (beta, eta): the Lie-Poisson
/// term in beta (the eta-dependence contributes nothing on invariants).
inline cplx sp_bracket(const Observable& f, const Observable& g, const AlgebraElement& beta,
                       const BundlePoint& eta) {
    const AlgebraElement p0 = eta.p0().element();
    const AlgebraElement one = AlgebraElement::identity(p0.descriptor());
    Env env;
    env.set_cornered("beta", beta, p0, p0);
    env.set_cornered("eta", eta.element(), one, p0);
    return pairing(beta, commutator(f.deriv(env, "beta"), g.deriv(env, "beta")));
}

/// sp_bracket together with a sampled invariance audit of its arguments.
struct SpBracketResult {
    cplx value = 0.0;
    double defect = 0.0; ///< worst sampled invariance violation of f or g
    bool invariant = true;
};

/// Invariance defect of an observable of (beta, eta) under
/// (beta, eta) -> (g^{-1} beta g, eta g); zero for admissible arguments.
inline double invariance_defect(const Observable& f, const ProjectionElement& p0, int samples,
                                Rng& rng) {
    const AlgebraDescriptor& d = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(d);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const AlgebraElement beta =
            p0.element() * random_element(d, rng) * p0.element();
        const BundlePoint eta(random_element(d, rng) * p0.element(), p0);
        const StructureGroupElement g(
            p0.element() * random_element(d, rng) * p0.element() + 2.0 * p0.element(), p0);
        const AlgebraElement gi = partial_inverse(g.element());
        Env at, moved;
        at.set_cornered("beta", beta, p0.element(), p0.element());
        at.set_cornered("eta", eta.element(), one, p0.element());
        moved.set_cornered("beta", gi * beta * g.element(), p0.element(), p0.element());
        moved.set_cornered("eta", act(eta, g).element(), one, p0.element());
        worst = std::max(worst, std::abs(f.eval(moved) - f.eval(at)));
    }
    return worst;
}

/// Bracket plus invariance audit.  The bracket value is well defined on the
/// quotient only for invariant observables; a failed audit is reported in
/// the result (and thrown as InvarianceViolation when strict).
inline SpBracketResult sp_bracket_checked(const Observable& f, const Observable& g,
                                          const AlgebraElement& beta, const BundlePoint& eta,
                                          int samples, Rng& rng, bool strict = false) {
    SpBracketResult result;
    result.value = sp_bracket(f, g, beta, eta);
    result.defect = std::max(invariance_defect(f, eta.p0(), samples, rng),
                             invariance_defect(g, eta.p0(), samples, rng));
    result.invariant = result.defect <= 1e-8;
    if (strict && !result.invariant)
        throw InvarianceViolation("bracket arguments are not gauge invariant");
    return result;
}

// ---------------------------------------------------------------------------
// Zero-momentum local section (reduction)
// ---------------------------------------------------------------------------

/// Residuals of the zero-momentum section through a reference frame over p:
/// the point over base covector alpha at the chart coordinate y is
///   eta = (p + y) eta_ref,   phi = eta_ref^{-1} (alpha - alpha y),
/// which has beta-coordinate zero.  Reports (a) the worst momentum norm on
/// the section's image and (b) the worst defect between the pullback of the
/// tautological form along finite-difference curves and the reduced-space
/// pairing <alpha, dy/dt>.
struct ReducedSectionReport {
    double momentum_residual = 0.0;
    double pullback_residual = 0.0;
    int samples = 0;
};

inline ReducedSectionReport zero_momentum_section_check(const ProjectionElement& p,
                                                        const BundlePoint& eta_ref,
                                                        int samples, Rng& rng) {
    if (dist(gauge_base(eta_ref).element(), p.element()) > 1e-8)
        throw NotInChart("reference frame must have target p");
    const AlgebraDescriptor& d = p.descriptor();
    const AlgebraElement one = AlgebraElement::identity(d);
    const AlgebraElement refi = partial_inverse(eta_ref.element());
    const ProjectionElement p0 = eta_ref.p0();

    auto section = [&](const AlgebraElement& alpha, const AlgebraElement& y) {
        return CotangentPoint(refi * (alpha - alpha * y),
                              BundlePoint((p.element() + y) * eta_ref.element(), p0));
    };

    ReducedSectionReport report;
    report.samples = samples;
    const double h = 1e-5;
    for (int i = 0; i < samples; ++i) {
        const AlgebraElement alpha =
            p.element() * random_element(d, rng) * (one - p.element());
        const AlgebraElement y =
            (one - p.element()) * random_element(d, rng) * p.element();
        const CotangentPoint at = section(alpha, y);
        report.momentum_residual = std::max(report.momentum_residual, momentum(at).norm());

        // pullback of the tautological form along a coordinate curve
        const AlgebraElement alpha_dot =
            p.element() * random_element(d, rng) * (one - p.element());
        const AlgebraElement y_dot =
            (one - p.element()) * random_element(d, rng) * p.element();
        const CotangentPoint plus = section(alpha + h * alpha_dot, y + h * y_dot);
        const CotangentPoint minus = section(alpha - h * alpha_dot, y - h * y_dot);
        const AlgebraElement eta_dot =
            (1.0 / (2.0 * h)) * (plus.eta.element() - minus.eta.element());
        const cplx pulled = pairing(at.phi, eta_dot);
        const cplx reduced = pairing(alpha, y_dot);
        report.pullback_residual =
            std::max(report.pullback_residual, std::abs(pulled - reduced));
    }
    return report;
}

} // namespace bgl
