#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "bgl/vb.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Invariant charts of the gauge quotients
//
// Once the pair-type cotangent structures are pushed down the gauge action,
// what remains is a small family of matrix charts: corner slots indexed by a
// projection (or two), explicit quadratic brackets, and groupoid structures
// whose legs mix the slots through an invertible frame element.  This header
// holds those charts, their brackets and anchors, the dual embed/project
// pair that splits covectors into gauge and reduced parts, and the tangent
// prolongation groupoids of the three reduced structures together with the
// check that the bracket anchor is a morphism of the dual pair.
// ---------------------------------------------------------------------------

/// A chart slot: an environment variable name plus the corner it lives in.
struct NamedSlot {
    std::string name;
    SlotCorner corner;
};

/// Six-slot chart of the gauge-orbit cotangent space: two canonical pairs
/// (alpha, y) and (alphat, yt) plus an isotropy pair (beta, z) whose frame
/// slot z couples the two legs.
inline std::vector<NamedSlot> gauge_cotangent_slots(const ProjectionElement& p,
                                                    const ProjectionElement& pt) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement pe = p.element();
    const AlgebraElement pte = pt.element();
    return {{"alpha", {pe, one - pe}}, {"beta", {pte, pe}},
            {"alphat", {pte, one - pte}}, {"y", {one - pe, pe}},
            {"z", {pe, pte}},            {"yt", {one - pte, pte}}};
}

/// Seven-slot chart of the quotient pair structure: the isotropy covector
/// splits into two diagonal corner slots (beta, betat) joined by the frame z.
inline std::vector<NamedSlot> quotient_pair_slots(const ProjectionElement& p,
                                                  const ProjectionElement& pt) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement pe = p.element();
    const AlgebraElement pte = pt.element();
    return {{"alpha", {pe, one - pe}},   {"beta", {pe, pe}},
            {"y", {one - pe, pe}},       {"z", {pe, pte}},
            {"alphat", {pte, one - pte}}, {"betat", {pte, pte}},
            {"yt", {one - pte, pte}}};
}

/// Five-slot chart with the corner covector kept in the reference corner:
/// chi sits over the reference projection and two frames z, zt carry it to
/// the chart projections.
inline std::vector<NamedSlot> corner_pair_slots(const ProjectionElement& p,
                                                const ProjectionElement& pt,
                                                const ProjectionElement& p0) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement pe = p.element();
    const AlgebraElement pte = pt.element();
    const AlgebraElement p0e = p0.element();
    return {{"chi", {p0e, p0e}},
            {"y", {one - pe, pe}},
            {"z", {pe, p0e}},
            {"yt", {one - pte, pte}},
            {"zt", {pte, p0e}}};
}

/// Four-slot chart of the reduced corner structure: the transported corner
/// covector chip = z chi z^{-1} replaces the reference-corner slot.
inline std::vector<NamedSlot> reduced_corner_slots(const ProjectionElement& p,
                                                   const ProjectionElement& pt) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement pe = p.element();
    const AlgebraElement pte = pt.element();
    return {{"chip", {pe, pe}},
            {"y", {one - pe, pe}},
            {"z", {pe, pte}},
            {"yt", {one - pte, pte}}};
}

/// Environment with every chart slot declared in its corner.
inline Env slot_env(const std::vector<NamedSlot>& slots, const CoordTuple& values) {
    if (slots.size() != values.size())
        throw DescriptorError("chart value tuple does not match the slot table");
    Env env;
    for (std::size_t i = 0; i < slots.size(); ++i)
        env.set_cornered(slots[i].name, values[i], slots[i].corner.left,
                         slots[i].corner.right);
    return env;
}

/// Random chart point (every slot a random corner element; overwrite frame
/// slots with sample_frame when a chart map needs to invert them).
inline Env random_slot_env(const std::vector<NamedSlot>& slots, Rng& rng) {
    CoordTuple values;
    values.reserve(slots.size());
    for (const NamedSlot& s : slots) values.push_back(sample_corner(s.corner, rng));
    return slot_env(slots, values);
}

// ---------------------------------------------------------------------------
// Brackets on the invariant charts
// ---------------------------------------------------------------------------

/// Bracket of the six-slot chart: three decoupled canonical pairs
/// (alpha, y), (alphat, yt), (beta, z).
inline cplx gauge_cotangent_bracket(const Observable& f, const Observable& g,
                                    const Env& env) {
    auto df = [&](const char* v) { return f.deriv(env, v); };
    auto dg = [&](const char* v) { return g.deriv(env, v); };
    return pairing(dg("y"), df("alpha")) - pairing(df("y"), dg("alpha")) +
           pairing(dg("yt"), df("alphat")) - pairing(df("yt"), dg("alphat")) +
           pairing(dg("z"), df("beta")) - pairing(df("z"), dg("beta"));
}

/// Bracket of the seven-slot chart: two canonical pairs, two corner
/// Lie-Poisson terms, and a frame term coupling beta and betat through z.
inline cplx quotient_pair_bracket(const Observable& f, const Observable& g,
                                  const Env& env) {
    auto df = [&](const char* v) { return f.deriv(env, v); };
    auto dg = [&](const char* v) { return g.deriv(env, v); };
    const AlgebraElement& b = env.value("beta");
    const AlgebraElement& bt = env.value("betat");
    const AlgebraElement& z = env.value("z");
    return pairing(dg("y"), df("alpha")) - pairing(df("y"), dg("alpha")) +
           pairing(dg("yt"), df("alphat")) - pairing(df("yt"), dg("alphat")) +
           pairing(b, commutator(dg("beta"), df("beta"))) +
           pairing(bt, commutator(dg("betat"), df("betat"))) +
           pairing(dg("z"), df("beta") * z - z * df("betat")) -
           pairing(df("z"), dg("beta") * z - z * dg("betat"));
}

/// Bracket of the five-slot chart: minus the corner Lie-Poisson bracket in
/// the reference-corner slot, all other slots central.
inline cplx corner_pair_bracket(const Observable& f, const Observable& g,
                                const Env& env) {
    return -pairing(env.value("chi"),
                    commutator(f.deriv(env, "chi"), g.deriv(env, "chi")));
}

/// Bracket of the reduced corner chart: minus the corner Lie-Poisson bracket
/// in the transported slot chip, all other slots central.
inline cplx reduced_corner_bracket(const Observable& f, const Observable& g,
                                   const Env& env) {
    return -pairing(env.value("chip"),
                    commutator(f.deriv(env, "chip"), g.deriv(env, "chip")));
}

// ---------------------------------------------------------------------------
// Anchors (Hamiltonian velocity tuples, one slot per chart variable)
// ---------------------------------------------------------------------------

enum class ReducedGroupoid { kGaugeCotangent, kQuotientPair, kReducedCorner };

/// Bracket anchor applied to a covector tuple f over the base tuple g, in
/// the slot order of the corresponding chart table.  This is the total-space
/// leg of the anchor morphism; the brackets above are an independent route
/// to the same structure and the two are cross-checked in tests.
inline CoordTuple reduced_sharp_fiber(ReducedGroupoid which, const CoordTuple& f,
                                      const CoordTuple& g) {
    switch (which) {
    case ReducedGroupoid::kGaugeCotangent:
        return {-1.0 * f[3], -1.0 * f[4], -1.0 * f[5], f[0], f[1], f[2]};
    case ReducedGroupoid::kQuotientPair:
        return {-1.0 * f[2],
                -1.0 * commutator(g[1], f[1]) - g[3] * f[3],
                f[0],
                f[1] * g[3] - g[3] * f[5],
                -1.0 * f[6],
                -1.0 * commutator(g[5], f[5]) + f[3] * g[3],
                f[4]};
    case ReducedGroupoid::kReducedCorner:
    default: {
        const AlgebraElement zero = AlgebraElement::zero(f[0].descriptor());
        return {-1.0 * commutator(g[0], f[0]), zero, zero, zero};
    }
    }
}

/// Side leg of the anchor morphism: dual core tuple k over the unit point m
/// to a side velocity tuple.
inline CoordTuple reduced_sharp_side(ReducedGroupoid which, const CoordTuple& k,
                                     const CoordTuple& m) {
    switch (which) {
    case ReducedGroupoid::kGaugeCotangent:
        return {-1.0 * k[1], -1.0 * k[2], k[0]};
    case ReducedGroupoid::kQuotientPair:
        return {-1.0 * k[2], -1.0 * commutator(m[1], k[1]) - k[3], k[0]};
    case ReducedGroupoid::kReducedCorner:
    default:
        return {AlgebraElement::zero(k[0].descriptor())};
    }
}

/// Hamiltonian velocity of f on the six-slot chart.
inline CoordTuple gauge_cotangent_anchor(const Observable& f, const Env& env) {
    const CoordTuple base = {env.value("alpha"), env.value("beta"), env.value("alphat"),
                             env.value("y"),     env.value("z"),    env.value("yt")};
    const CoordTuple df = {f.deriv(env, "alpha"), f.deriv(env, "beta"),
                           f.deriv(env, "alphat"), f.deriv(env, "y"),
                           f.deriv(env, "z"),      f.deriv(env, "yt")};
    return reduced_sharp_fiber(ReducedGroupoid::kGaugeCotangent, df, base);
}

/// Hamiltonian velocity of f on the seven-slot chart.
inline CoordTuple quotient_pair_anchor(const Observable& f, const Env& env) {
    const CoordTuple base = {env.value("alpha"), env.value("beta"), env.value("y"),
                             env.value("z"),     env.value("alphat"),
                             env.value("betat"), env.value("yt")};
    const CoordTuple df = {f.deriv(env, "alpha"), f.deriv(env, "beta"),
                           f.deriv(env, "y"),     f.deriv(env, "z"),
                           f.deriv(env, "alphat"), f.deriv(env, "betat"),
                           f.deriv(env, "yt")};
    return reduced_sharp_fiber(ReducedGroupoid::kQuotientPair, df, base);
}

/// Hamiltonian velocity of f on the five-slot chart: a coadjoint velocity in
/// the reference-corner slot, zero elsewhere.
inline CoordTuple corner_pair_anchor(const Observable& f, const Env& env) {
    const AlgebraElement fc = f.deriv(env, "chi");
    const AlgebraElement zero = AlgebraElement::zero(fc.descriptor());
    return {-1.0 * commutator(env.value("chi"), fc), zero, zero, zero, zero};
}

/// Hamiltonian velocity of f on the reduced corner chart.
inline CoordTuple reduced_corner_anchor(const Observable& f, const Env& env) {
    const CoordTuple base = {env.value("chip"), env.value("y"), env.value("z"),
                             env.value("yt")};
    const CoordTuple df = {f.deriv(env, "chip"), f.deriv(env, "y"),
                           f.deriv(env, "z"), f.deriv(env, "yt")};
    return reduced_sharp_fiber(ReducedGroupoid::kReducedCorner, df, base);
}

// ---------------------------------------------------------------------------
// Gauge/reduced splitting of covectors over the seven-slot chart
// ---------------------------------------------------------------------------

/// Transport a corner element along an invertible frame: chi -> z chi z^{-1}.
inline AlgebraElement frame_conjugate(const AlgebraElement& z, const AlgebraElement& chi) {
    return z * chi * partial_inverse(z);
}

/// Embed a unit-side covector (alpha, beta_iso, alphat) over the base
/// (y, z, yt) into the seven-slot chart along the gauge directions: the
/// isotropy covector enters twice, transported by the frame with opposite
/// signs.
inline CoordTuple gauge_covector_embed(const AlgebraElement& alpha,
                                       const AlgebraElement& beta_iso,
                                       const AlgebraElement& alphat,
                                       const AlgebraElement& y, const AlgebraElement& z,
                                       const AlgebraElement& yt) {
    return {alpha, z * beta_iso, y, z, alphat, -1.0 * (beta_iso * z), yt};
}

/// Collapse a seven-slot chart point onto the reduced corner chart: the two
/// diagonal isotropy slots merge into chip = beta + z betat z^{-1} and the
/// base slots pass through.
inline CoordTuple reduced_covector_project(const CoordTuple& c) {
    return {c[1] + c[3] * c[5] * partial_inverse(c[3]), c[2], c[3], c[6]};
}

/// Linear-algebra audit of the splitting at a fixed frame: the image of the
/// gauge embed must be exactly the kernel of the reduced projection on the
/// covector slots (alpha, beta, alphat, betat).
struct GaugeSplitReport {
    int embed_dim = 0;    ///< dimension of the embedded gauge covectors
    int embed_rank = 0;   ///< rank of the embed map (injectivity check)
    int kernel_dim = 0;   ///< dimension of the projection kernel
    double containment = 0.0; ///< largest projection of an embedded basis vector
    bool exact(double tol) const {
        return embed_rank == embed_dim && embed_rank == kernel_dim &&
               containment <= tol;
    }
};

inline GaugeSplitReport gauge_split_check(const ProjectionElement& p,
                                          const ProjectionElement& pt,
                                          const AlgebraElement& z) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement pe = p.element();
    const AlgebraElement pte = pt.element();
    const SlotCorner sa{pe, one - pe};
    const SlotCorner sb{pe, pe};
    const SlotCorner sat{pte, one - pte};
    const SlotCorner sbt{pte, pte};
    const SlotCorner siso{pte, pe};
    const AlgebraElement zi = partial_inverse(z);
    const std::vector<SlotCorner> cov = {sa, sb, sat, sbt};

    auto project = [&](const CoordTuple& f) { return f[1] + z * f[3] * zi; };

    // Embed matrix: gauge covector basis -> stacked covector slots.
    std::vector<Eigen::VectorXcd> embed_cols;
    double contain = 0.0;
    auto push_embed = [&](const AlgebraElement& a, const AlgebraElement& biso,
                          const AlgebraElement& at) {
        const CoordTuple img = {a, z * biso, at, -1.0 * (biso * z)};
        embed_cols.push_back(stack_tuple(img));
        contain = std::max(contain, project(img).norm());
    };
    const AlgebraElement za = AlgebraElement::zero(p.descriptor());
    for (const AlgebraElement& e : corner_basis(sa).basis) push_embed(e, za, za);
    for (const AlgebraElement& e : corner_basis(siso).basis) push_embed(za, e, za);
    for (const AlgebraElement& e : corner_basis(sat).basis) push_embed(za, za, e);

    GaugeSplitReport r;
    r.embed_dim = static_cast<int>(embed_cols.size());
    r.containment = contain;
    if (!embed_cols.empty()) {
        Mat em(embed_cols.front().size(), embed_cols.size());
        for (std::size_t j = 0; j < embed_cols.size(); ++j) em.col(j) = embed_cols[j];
        Eigen::JacobiSVD<Mat> svd(em);
        const double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        r.embed_rank = static_cast<int>(
            (svd.singularValues().array() > 1e-10 * std::max(1.0, top)).count());
    }

    // Projection matrix: covector slot basis -> chip corner.
    std::vector<Eigen::VectorXcd> proj_cols;
    int total = 0;
    for (std::size_t slot = 0; slot < cov.size(); ++slot) {
        for (const AlgebraElement& e : corner_basis(cov[slot]).basis) {
            CoordTuple f = zero_fiber(cov);
            f[slot] = e;
            proj_cols.push_back(to_vector(project(f)));
            ++total;
        }
    }
    Mat pm(proj_cols.front().size(), proj_cols.size());
    for (std::size_t j = 0; j < proj_cols.size(); ++j) pm.col(j) = proj_cols[j];
    Eigen::JacobiSVD<Mat> svd(pm);
    const double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    const int rank = static_cast<int>(
        (svd.singularValues().array() > 1e-10 * std::max(1.0, top)).count());
    r.kernel_dim = total - rank;
    return r;
}

/// Shift a covector over a pair-cotangent arrow along the differentials of
/// the momentum components <J2(.), x>: the degeneracy directions that the
/// quotient charts collapse.
inline CoordTuple momentum_coshift(const CoordTuple& w, const CoordTuple& base,
                                   const AlgebraElement& x) {
    return {w[0] + base[1] * x, w[1] + x * base[0], w[2] + base[3] * x,
            w[3] + x * base[2]};
}

// ---------------------------------------------------------------------------
// Two-leg chart map from pair-cotangent variables to the seven-slot chart
// ---------------------------------------------------------------------------

/// Differentiable chart map (phi, eta, psi, xi) -> (alpha, beta, y, z,
/// alphat, betat, yt): each leg uses its own corner frame and the coupling
/// slot is z = (p eta)(pt xi)^{-1}.
inline CoordMap pair_chart_map(const ProjectionElement& p, const ProjectionElement& pt,
                               const ProjectionElement& p0) {
    const AlgebraElement pe = p.element();
    const AlgebraElement pte = pt.element();
    (void)p0;
    return [pe, pte](const Env& env) {
        const AlgebraElement one = AlgebraElement::identity(pe.descriptor());
        const MatExpr phi = MatExpr::variable("phi", env);
        const MatExpr eta = MatExpr::variable("eta", env);
        const MatExpr psi = MatExpr::variable("psi", env);
        const MatExpr xi = MatExpr::variable("xi", env);
        const MatExpr z1 = MatExpr::constant(pe) * eta;
        const MatExpr z1i = z1.corner_inverse();
        const MatExpr z2 = MatExpr::constant(pte) * xi;
        const MatExpr z2i = z2.corner_inverse();
        const MatExpr alpha = z1 * phi * MatExpr::constant(one - pe);
        const MatExpr beta = z1 * phi * eta * z1i;
        const MatExpr y = eta * z1i - MatExpr::constant(pe);
        const MatExpr z = z1 * z2i;
        const MatExpr alphat = z2 * psi * MatExpr::constant(one - pte);
        const MatExpr betat = z2 * psi * xi * z2i;
        const MatExpr yt = xi * z2i - MatExpr::constant(pte);
        CoordFrame frame;
        frame.out.set_cornered("alpha", alpha.value(), pe, one - pe);
        frame.out.set_cornered("beta", beta.value(), pe, pe);
        frame.out.set_cornered("y", y.value(), one - pe, pe);
        frame.out.set_cornered("z", z.value(), pe, pte);
        frame.out.set_cornered("alphat", alphat.value(), pte, one - pte);
        frame.out.set_cornered("betat", betat.value(), pte, pte);
        frame.out.set_cornered("yt", yt.value(), one - pte, pte);
        for (const auto& [n, op] : alpha.partials()) frame.jac[{"alpha", n}] = op;
        for (const auto& [n, op] : beta.partials()) frame.jac[{"beta", n}] = op;
        for (const auto& [n, op] : y.partials()) frame.jac[{"y", n}] = op;
        for (const auto& [n, op] : z.partials()) frame.jac[{"z", n}] = op;
        for (const auto& [n, op] : alphat.partials()) frame.jac[{"alphat", n}] = op;
        for (const auto& [n, op] : betat.partials()) frame.jac[{"betat", n}] = op;
        for (const auto& [n, op] : yt.partials()) frame.jac[{"yt", n}] = op;
        return frame;
    };
}

// ---------------------------------------------------------------------------
// Tangent prolongations of the three reduced groupoids
// ---------------------------------------------------------------------------

/// Velocities of the six-slot gauge-cotangent groupoid.  Arrows compose by
/// multiplying the frame slots and transporting the isotropy slot; source
/// and target land in the three-slot unit chart (alpha, beta, y).
inline VBGroupoidSpec gauge_cotangent_prolongation_spec(const ProjectionElement& p) {
    VBGroupoidSpec s;
    s.name = "gauge cotangent tangent prolongation";
    s.desc = p.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const AlgebraElement pe = p.element();
    const SlotCorner sa{pe, one - pe};
    const SlotCorner sb{pe, pe};
    const SlotCorner sy{one - pe, pe};
    const SlotCorner sz{pe, pe};
    s.omega_fiber = {sa, sb, sa, sy, sz, sy};
    s.side_fiber = {sa, sb, sy};

    auto gsrc = [](const CoordTuple& g) {
        return CoordTuple{-1.0 * g[2], g[1] * g[4], g[5]};
    };
    auto gtgt = [](const CoordTuple& g) {
        return CoordTuple{g[0], g[4] * g[1], g[3]};
    };
    auto gunit = [pe](const CoordTuple& m) {
        return CoordTuple{m[0], m[1], -1.0 * m[0], m[2], pe, m[2]};
    };
    auto ginv = [](const CoordTuple& g) {
        return CoordTuple{-1.0 * g[2], g[4] * g[1] * g[4], -1.0 * g[0],
                          g[5],        partial_inverse(g[4]), g[3]};
    };
    auto gprod = [](const CoordTuple& a, const CoordTuple& b) {
        return CoordTuple{a[0], partial_inverse(b[4]) * a[1], b[2],
                          a[3], a[4] * b[4],                  b[5]};
    };
    s.gamma_src = gsrc;
    s.gamma_tgt = gtgt;
    s.gamma_unit = gunit;
    s.gamma_inv = ginv;
    s.gamma_prod = gprod;

    auto dsrc = [](const CoordTuple& f, const CoordTuple& g) {
        return CoordTuple{-1.0 * f[2], f[1] * g[4] + g[1] * f[4], f[5]};
    };
    auto dtgt = [](const CoordTuple& f, const CoordTuple& g) {
        return CoordTuple{f[0], f[4] * g[1] + g[4] * f[1], f[3]};
    };
    s.src = [gsrc, dsrc](const VBPoint& x) {
        return VBPoint{dsrc(x.fiber, x.base), gsrc(x.base)};
    };
    s.tgt = [gtgt, dtgt](const VBPoint& x) {
        return VBPoint{dtgt(x.fiber, x.base), gtgt(x.base)};
    };
    s.unit = [gunit](const VBPoint& e) {
        const AlgebraElement zero = AlgebraElement::zero(e.fiber[0].descriptor());
        return VBPoint{{e.fiber[0], e.fiber[1], -1.0 * e.fiber[0], e.fiber[2], zero,
                        e.fiber[2]},
                       gunit(e.base)};
    };
    s.inv = [ginv](const VBPoint& x) {
        const CoordTuple& g = x.base;
        const CoordTuple& f = x.fiber;
        const AlgebraElement zi = partial_inverse(g[4]);
        return VBPoint{{-1.0 * f[2],
                        f[4] * g[1] * g[4] + g[4] * f[1] * g[4] + g[4] * g[1] * f[4],
                        -1.0 * f[0], f[5], -1.0 * (zi * f[4] * zi), f[3]},
                       ginv(g)};
    };
    s.prod = [gsrc, gtgt, dsrc, dtgt, gprod](const VBPoint& x, const VBPoint& y) {
        detail::require_match(
            std::max(tuple_dist(gsrc(x.base), gtgt(y.base)),
                     tuple_dist(dsrc(x.fiber, x.base), dtgt(y.fiber, y.base))),
            tuple_norm(x.fiber) + tuple_norm(x.base),
            "gauge cotangent velocity arrows do not match source to target");
        const CoordTuple& g1 = x.base;
        const CoordTuple& g2 = y.base;
        const CoordTuple& f1 = x.fiber;
        const CoordTuple& f2 = y.fiber;
        const AlgebraElement z2i = partial_inverse(g2[4]);
        return VBPoint{{f1[0], -1.0 * (z2i * f2[4] * z2i * g1[1]) + z2i * f1[1],
                        f2[2], f1[3], f1[4] * g2[4] + g1[4] * f2[4], f2[5]},
                       gprod(g1, g2)};
    };

    s.sample_base = [sa, sb, sy, p](Rng& rng) {
        return CoordTuple{sample_corner(sa, rng), sample_corner(sb, rng),
                          sample_corner(sa, rng), sample_corner(sy, rng),
                          sample_frame(p, p, rng), sample_corner(sy, rng)};
    };
    auto follow = [sa, sy, p](const CoordTuple& g1, Rng& rng) {
        const AlgebraElement z2 = sample_frame(p, p, rng);
        return CoordTuple{-1.0 * g1[2], partial_inverse(z2) * g1[1] * g1[4],
                          sample_corner(sa, rng), g1[5], z2, sample_corner(sy, rng)};
    };
    s.sample_composable_base = [sample = s.sample_base, follow](Rng& rng) {
        const CoordTuple g1 = sample(rng);
        return std::make_pair(g1, follow(g1, rng));
    };
    s.sample_composable_triple = [sample = s.sample_base, follow](Rng& rng) {
        const CoordTuple g1 = sample(rng);
        const CoordTuple g2 = follow(g1, rng);
        return std::array<CoordTuple, 3>{g1, g2, follow(g2, rng)};
    };

    s.core.slots = {sa, sy, sz};
    s.core.inject = [gunit](const CoordTuple& m, const CoordTuple& k) {
        const AlgebraElement zero = AlgebraElement::zero(k[0].descriptor());
        return VBPoint{{k[0], -1.0 * (m[1] * k[2]), zero, k[1], k[2], zero},
                       gunit(m)};
    };
    return s;
}

/// Velocities of the seven-slot quotient pair groupoid.  All slots but the
/// frame compose by copying; the frame slots multiply.
inline VBGroupoidSpec quotient_pair_prolongation_spec(const ProjectionElement& p) {
    VBGroupoidSpec s;
    s.name = "quotient pair tangent prolongation";
    s.desc = p.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const AlgebraElement pe = p.element();
    const SlotCorner sa{pe, one - pe};
    const SlotCorner sb{pe, pe};
    const SlotCorner sy{one - pe, pe};
    const SlotCorner sz{pe, pe};
    s.omega_fiber = {sa, sb, sy, sz, sa, sb, sy};
    s.side_fiber = {sa, sb, sy};

    auto gsrc = [](const CoordTuple& g) {
        return CoordTuple{-1.0 * g[4], -1.0 * g[5], g[6]};
    };
    auto gtgt = [](const CoordTuple& g) { return CoordTuple{g[0], g[1], g[2]}; };
    auto gunit = [pe](const CoordTuple& m) {
        return CoordTuple{m[0], m[1], m[2], pe, -1.0 * m[0], -1.0 * m[1], m[2]};
    };
    auto ginv = [](const CoordTuple& g) {
        return CoordTuple{-1.0 * g[4], -1.0 * g[5], g[6], partial_inverse(g[3]),
                          -1.0 * g[0], -1.0 * g[1], g[2]};
    };
    auto gprod = [](const CoordTuple& a, const CoordTuple& b) {
        return CoordTuple{a[0], a[1], a[2], a[3] * b[3], b[4], b[5], b[6]};
    };
    s.gamma_src = gsrc;
    s.gamma_tgt = gtgt;
    s.gamma_unit = gunit;
    s.gamma_inv = ginv;
    s.gamma_prod = gprod;

    auto dsrc = [](const CoordTuple& f) {
        return CoordTuple{-1.0 * f[4], -1.0 * f[5], f[6]};
    };
    auto dtgt = [](const CoordTuple& f) { return CoordTuple{f[0], f[1], f[2]}; };
    s.src = [gsrc, dsrc](const VBPoint& x) {
        return VBPoint{dsrc(x.fiber), gsrc(x.base)};
    };
    s.tgt = [gtgt, dtgt](const VBPoint& x) {
        return VBPoint{dtgt(x.fiber), gtgt(x.base)};
    };
    s.unit = [gunit](const VBPoint& e) {
        const AlgebraElement zero = AlgebraElement::zero(e.fiber[0].descriptor());
        return VBPoint{{e.fiber[0], e.fiber[1], e.fiber[2], zero, -1.0 * e.fiber[0],
                        -1.0 * e.fiber[1], e.fiber[2]},
                       gunit(e.base)};
    };
    s.inv = [ginv](const VBPoint& x) {
        const AlgebraElement zi = partial_inverse(x.base[3]);
        return VBPoint{{-1.0 * x.fiber[4], -1.0 * x.fiber[5], x.fiber[6],
                        -1.0 * (zi * x.fiber[3] * zi), -1.0 * x.fiber[0],
                        -1.0 * x.fiber[1], x.fiber[2]},
                       ginv(x.base)};
    };
    s.prod = [gsrc, gtgt, dsrc, dtgt, gprod](const VBPoint& x, const VBPoint& y) {
        detail::require_match(std::max(tuple_dist(gsrc(x.base), gtgt(y.base)),
                                       tuple_dist(dsrc(x.fiber), dtgt(y.fiber))),
                              tuple_norm(x.fiber) + tuple_norm(x.base),
                              "quotient pair velocity arrows do not match");
        return VBPoint{{x.fiber[0], x.fiber[1], x.fiber[2],
                        x.fiber[3] * y.base[3] + x.base[3] * y.fiber[3], y.fiber[4],
                        y.fiber[5], y.fiber[6]},
                       gprod(x.base, y.base)};
    };

    s.sample_base = [sa, sb, sy, p](Rng& rng) {
        return CoordTuple{sample_corner(sa, rng),  sample_corner(sb, rng),
                          sample_corner(sy, rng),  sample_frame(p, p, rng),
                          sample_corner(sa, rng),  sample_corner(sb, rng),
                          sample_corner(sy, rng)};
    };
    auto follow = [sa, sb, sy, p](const CoordTuple& g1, Rng& rng) {
        return CoordTuple{-1.0 * g1[4],          -1.0 * g1[5],
                          g1[6],                 sample_frame(p, p, rng),
                          sample_corner(sa, rng), sample_corner(sb, rng),
                          sample_corner(sy, rng)};
    };
    s.sample_composable_base = [sample = s.sample_base, follow](Rng& rng) {
        const CoordTuple g1 = sample(rng);
        return std::make_pair(g1, follow(g1, rng));
    };
    s.sample_composable_triple = [sample = s.sample_base, follow](Rng& rng) {
        const CoordTuple g1 = sample(rng);
        const CoordTuple g2 = follow(g1, rng);
        return std::array<CoordTuple, 3>{g1, g2, follow(g2, rng)};
    };

    s.core.slots = {sa, sb, sy, sz};
    s.core.inject = [gunit](const CoordTuple& m, const CoordTuple& k) {
        const AlgebraElement zero = AlgebraElement::zero(k[0].descriptor());
        return VBPoint{{k[0], k[1], k[2], k[3], zero, zero, zero}, gunit(m)};
    };
    return s;
}

/// Velocities of the reduced corner groupoid: the corner slot composes by
/// frame-transported addition, the frame slots multiply, the off-diagonal
/// slots form a pair structure.
inline VBGroupoidSpec reduced_corner_prolongation_spec(const ProjectionElement& p) {
    VBGroupoidSpec s;
    s.name = "reduced corner tangent prolongation";
    s.desc = p.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const AlgebraElement pe = p.element();
    const SlotCorner sc{pe, pe};
    const SlotCorner sy{one - pe, pe};
    s.omega_fiber = {sc, sy, sc, sy};
    s.side_fiber = {sy};

    auto gsrc = [](const CoordTuple& g) { return CoordTuple{g[3]}; };
    auto gtgt = [](const CoordTuple& g) { return CoordTuple{g[1]}; };
    auto gunit = [pe, d = s.desc](const CoordTuple& m) {
        return CoordTuple{AlgebraElement::zero(d), m[0], pe, m[0]};
    };
    auto ginv = [](const CoordTuple& g) {
        const AlgebraElement zi = partial_inverse(g[2]);
        return CoordTuple{-1.0 * (zi * g[0] * g[2]), g[3], zi, g[1]};
    };
    auto gprod = [](const CoordTuple& a, const CoordTuple& b) {
        return CoordTuple{a[0] + a[2] * b[0] * partial_inverse(a[2]), a[1],
                          a[2] * b[2], b[3]};
    };
    s.gamma_src = gsrc;
    s.gamma_tgt = gtgt;
    s.gamma_unit = gunit;
    s.gamma_inv = ginv;
    s.gamma_prod = gprod;

    s.src = [gsrc](const VBPoint& x) {
        return VBPoint{{x.fiber[3]}, gsrc(x.base)};
    };
    s.tgt = [gtgt](const VBPoint& x) {
        return VBPoint{{x.fiber[1]}, gtgt(x.base)};
    };
    s.unit = [gunit, d = s.desc](const VBPoint& e) {
        const AlgebraElement zero = AlgebraElement::zero(d);
        return VBPoint{{zero, e.fiber[0], zero, e.fiber[0]}, gunit(e.base)};
    };
    s.inv = [ginv](const VBPoint& x) {
        const CoordTuple& g = x.base;
        const CoordTuple& f = x.fiber;
        const AlgebraElement zi = partial_inverse(g[2]);
        return VBPoint{{zi * f[2] * zi * g[0] * g[2] - zi * f[0] * g[2] -
                            zi * g[0] * f[2],
                        f[3], -1.0 * (zi * f[2] * zi), f[1]},
                       ginv(g)};
    };
    s.prod = [gsrc, gtgt, gprod](const VBPoint& x, const VBPoint& y) {
        detail::require_match(std::max(tuple_dist(gsrc(x.base), gtgt(y.base)),
                                       dist(x.fiber[3], y.fiber[1])),
                              tuple_norm(x.fiber) + tuple_norm(x.base),
                              "reduced corner velocity arrows do not match");
        const CoordTuple& g1 = x.base;
        const CoordTuple& g2 = y.base;
        const CoordTuple& f1 = x.fiber;
        const CoordTuple& f2 = y.fiber;
        const AlgebraElement z1i = partial_inverse(g1[2]);
        return VBPoint{{f1[0] + f1[2] * g2[0] * z1i + g1[2] * f2[0] * z1i -
                            g1[2] * g2[0] * z1i * f1[2] * z1i,
                        f1[1], f1[2] * g2[2] + g1[2] * f2[2], f2[3]},
                       gprod(g1, g2)};
    };

    s.sample_base = [sc, sy, p](Rng& rng) {
        return CoordTuple{sample_corner(sc, rng), sample_corner(sy, rng),
                          sample_frame(p, p, rng), sample_corner(sy, rng)};
    };
    auto follow = [sc, sy, p](const CoordTuple& g1, Rng& rng) {
        return CoordTuple{sample_corner(sc, rng), g1[3], sample_frame(p, p, rng),
                          sample_corner(sy, rng)};
    };
    s.sample_composable_base = [sample = s.sample_base, follow](Rng& rng) {
        const CoordTuple g1 = sample(rng);
        return std::make_pair(g1, follow(g1, rng));
    };
    s.sample_composable_triple = [sample = s.sample_base, follow](Rng& rng) {
        const CoordTuple g1 = sample(rng);
        const CoordTuple g2 = follow(g1, rng);
        return std::array<CoordTuple, 3>{g1, g2, follow(g2, rng)};
    };

    s.core.slots = {sc, sy, sc};
    s.core.inject = [gunit, d = s.desc](const CoordTuple& m, const CoordTuple& k) {
        return VBPoint{{k[0], k[1], k[2], AlgebraElement::zero(d)}, gunit(m)};
    };
    return s;
}

inline VBGroupoidSpec reduced_prolongation_spec(ReducedGroupoid which,
                                                const ProjectionElement& p) {
    switch (which) {
    case ReducedGroupoid::kGaugeCotangent:
        return gauge_cotangent_prolongation_spec(p);
    case ReducedGroupoid::kQuotientPair:
        return quotient_pair_prolongation_spec(p);
    case ReducedGroupoid::kReducedCorner:
    default:
        return reduced_corner_prolongation_spec(p);
    }
}

// ---------------------------------------------------------------------------
// Anchor-as-morphism check for the reduced structures
// ---------------------------------------------------------------------------

/// Residuals of the four morphism equalities for the bracket anchor from the
/// dualized prolongation to the prolongation itself: source and target land
/// in the side bundles through the side leg, inverse and product commute
/// with the anchor on the total space.
struct SubPoissonReport {
    double src = 0.0;
    double tgt = 0.0;
    double inv = 0.0;
    double prod = 0.0;
    int samples = 0;
    double max_residual() const { return std::max({src, tgt, inv, prod}); }
    bool pass(double tol) const { return max_residual() <= tol; }
};

/// Sample the dual prolongation of the chosen reduced groupoid and test that
/// the anchor intertwines all four structural maps.  `corrupt_anchor` flips
/// the sign of the first anchor output slot (a negative control: the report
/// must then fail).
inline SubPoissonReport sub_poisson_groupoid_check(ReducedGroupoid which,
                                                   const ProjectionElement& p, int n,
                                                   Rng& rng,
                                                   bool corrupt_anchor = false) {
    const VBGroupoidSpec s = reduced_prolongation_spec(which, p);
    const VBGroupoidSpec d = dualize(s);
    auto sharp = [which, corrupt_anchor](const VBPoint& w) {
        CoordTuple f = reduced_sharp_fiber(which, w.fiber, w.base);
        if (corrupt_anchor) f[0] = -1.0 * f[0];
        return VBPoint{std::move(f), w.base};
    };
    auto side = [which](const VBPoint& k) {
        return VBPoint{reduced_sharp_side(which, k.fiber, k.base), k.base};
    };
    SubPoissonReport r;
    r.samples = n;
    auto record = [](double& slot, double v) { slot = std::max(slot, v); };
    for (int i = 0; i < n; ++i) {
        const CoordTuple gamma = s.sample_base(rng);
        const VBPoint w = vb_sample_arrow(d, gamma, rng);
        record(r.src, vb_dist(s.src(sharp(w)), side(d.src(w))));
        record(r.tgt, vb_dist(s.tgt(sharp(w)), side(d.tgt(w))));
        record(r.inv, vb_dist(s.inv(sharp(w)), sharp(d.inv(w))));
        const auto [w1, w2] = vb_sample_composable(d, rng);
        try {
            record(r.prod, vb_dist(s.prod(sharp(w1), sharp(w2)), sharp(d.prod(w1, w2))));
        } catch (const NonComposable&) {
            record(r.prod, 1.0);
        }
    }
    return r;
}

} // namespace bgl
