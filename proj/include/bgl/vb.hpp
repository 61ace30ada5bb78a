/** \file vb.hpp
    VB-groupoids over the block algebra: groupoids whose arrow space is a
    vector bundle over a base groupoid, compatibly on both levels.

    The layer is organized around a first-class spec record:

      * VBGroupoidSpec — carriers described as corner-constrained coordinate
        tuples (arrow fibres over base-groupoid arrows, side fibres over base
        points) plus structural callables and sampling generators;
      * vb_check — a generic axioms audit (groupoid laws on both levels,
        fibrewise linearity of the structural maps, projection/zero-section
        morphisms, double-source surjectivity, the interchange law);
      * core_compute — solves the core conditions (source fibre zero over a
        unit arrow) and validates the spec's hand parametrisation against the
        numeric kernel;
      * dualize — the trace-pairing dual spec over (Omega*, Gamma, K*, M),
        built by linear solves against the pairing, so the same checker runs
        on primal and dual towers.

    Concrete groupoids over the support-fixing bundle are provided as spec
    factories (tangent and cotangent pairs, the constant- and additive-corner
    pair groupoids, and both prolongation towers), together with their
    momentum maps, flat anchors, the sharp-morphism verification, and the
    gauge-coset representatives of tangent vectors.
*/
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bgl/poisson.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Coordinate tuples
// ---------------------------------------------------------------------------

/// Ordered list of algebra elements: the coordinates of one point of a
/// carrier (fibre slots or base slots).
using CoordTuple = std::vector<AlgebraElement>;

inline CoordTuple tuple_add(const CoordTuple& x, const CoordTuple& y) {
    if (x.size() != y.size()) throw DescriptorError("coordinate tuples have different lengths");
    CoordTuple out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back(x[i] + y[i]);
    return out;
}

inline CoordTuple tuple_sub(const CoordTuple& x, const CoordTuple& y) {
    if (x.size() != y.size()) throw DescriptorError("coordinate tuples have different lengths");
    CoordTuple out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back(x[i] - y[i]);
    return out;
}

inline CoordTuple tuple_scale(cplx c, const CoordTuple& x) {
    CoordTuple out;
    out.reserve(x.size());
    for (const AlgebraElement& v : x) out.push_back(c * v);
    return out;
}

inline double tuple_dist(const CoordTuple& x, const CoordTuple& y) {
    if (x.size() != y.size()) throw DescriptorError("coordinate tuples have different lengths");
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, dist(x[i], y[i]));
    return d;
}

inline double tuple_norm(const CoordTuple& x) {
    double n = 0.0;
    for (const AlgebraElement& v : x) n = std::max(n, v.norm());
    return n;
}

/// Slotwise trace pairing of a dual tuple against a primal tuple.
inline cplx tuple_pairing(const CoordTuple& dual, const CoordTuple& x) {
    if (dual.size() != x.size()) throw DescriptorError("coordinate tuples have different lengths");
    cplx t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) t += pairing(dual[i], x[i]);
    return t;
}

/// Flatten a tuple onto one long coordinate column (slot order preserved).
inline Eigen::VectorXcd stack_tuple(const CoordTuple& x) {
    int total = 0;
    for (const AlgebraElement& v : x) total += v.descriptor().total_dim();
    Eigen::VectorXcd out(total);
    int at = 0;
    for (const AlgebraElement& v : x) {
        const Eigen::VectorXcd piece = to_vector(v);
        out.segment(at, piece.size()) = piece;
        at += static_cast<int>(piece.size());
    }
    return out;
}

/// A point of a fibred carrier: linear fibre slots over base slots.
struct VBPoint {
    CoordTuple fiber;
    CoordTuple base;
};

inline double vb_dist(const VBPoint& x, const VBPoint& y) {
    return std::max(tuple_dist(x.fiber, y.fiber), tuple_dist(x.base, y.base));
}

// ---------------------------------------------------------------------------
// Corner-constrained slots
// ---------------------------------------------------------------------------

/// Corner declaration of one linear slot: admissible values satisfy
/// v = left * v * right for the stored (exact) projections.
struct SlotCorner {
    AlgebraElement left, right;
};

inline SlotCorner dual_corner(const SlotCorner& c) { return SlotCorner{c.right, c.left}; }

inline AlgebraElement corner_project(const SlotCorner& c, const AlgebraElement& x) {
    return c.left * x * c.right;
}

inline int corner_block_rank(const AlgebraElement& proj, int k) {
    return static_cast<int>(std::llround(proj.block(k).trace().real()));
}

/// Complex dimension of the corner L M R.
inline int corner_dim(const SlotCorner& c) {
    int total = 0;
    for (int k = 0; k < c.left.descriptor().blocks(); ++k)
        total += corner_block_rank(c.left, k) * corner_block_rank(c.right, k);
    return total;
}

/// Hilbert-Schmidt-orthonormal basis of a corner together with the
/// trace-dual basis: pairing(dual[i], basis[j]) = delta_ij.
struct CornerBasis {
    std::vector<AlgebraElement> basis, dual;
};

inline CornerBasis corner_basis(const SlotCorner& c) {
    const AlgebraDescriptor& d = c.left.descriptor();
    CornerBasis out;
    for (int k = 0; k < d.blocks(); ++k) {
        const int rl = corner_block_rank(c.left, k);
        const int rr = corner_block_rank(c.right, k);
        if (rl == 0 || rr == 0) continue;
        const Mat lb = range_basis(c.left.block(k), rl);
        const Mat rb = range_basis(c.right.block(k), rr);
        for (int a = 0; a < rl; ++a)
            for (int b = 0; b < rr; ++b) {
                AlgebraElement e = AlgebraElement::zero(d);
                AlgebraElement f = AlgebraElement::zero(d);
                e.block(k) = lb.col(a) * rb.col(b).adjoint();
                f.block(k) = rb.col(b) * lb.col(a).adjoint();
                out.basis.push_back(std::move(e));
                out.dual.push_back(std::move(f));
            }
    }
    return out;
}

/// Representative of a linear functional on a corner: sum of
/// functional(basis) * dual-basis, so pairing(result, v) = functional(v).
template <class F>
AlgebraElement assemble_dual(const SlotCorner& c, F&& functional) {
    const CornerBasis cb = corner_basis(c);
    AlgebraElement out = AlgebraElement::zero(c.left.descriptor());
    for (std::size_t i = 0; i < cb.basis.size(); ++i)
        out = out + functional(cb.basis[i]) * cb.dual[i];
    return out;
}

inline AlgebraElement sample_corner(const SlotCorner& c, Rng& rng) {
    return corner_project(c, random_element(c.left.descriptor(), rng));
}

inline CoordTuple sample_fiber(const std::vector<SlotCorner>& corners, Rng& rng) {
    CoordTuple out;
    out.reserve(corners.size());
    for (const SlotCorner& c : corners) out.push_back(sample_corner(c, rng));
    return out;
}

inline CoordTuple zero_fiber(const std::vector<SlotCorner>& corners) {
    CoordTuple out;
    out.reserve(corners.size());
    for (const SlotCorner& c : corners)
        out.push_back(AlgebraElement::zero(c.left.descriptor()));
    return out;
}

/// Well-conditioned full-corner-rank frame in p M pt: the polar isometry of
/// a random corner element plus a small perturbation (singular values stay
/// within [3/4, 5/4]).
inline AlgebraElement sample_frame(const ProjectionElement& p, const ProjectionElement& pt,
                                   Rng& rng) {
    const AlgebraDescriptor& d = p.descriptor();
    const AlgebraElement raw = p.element() * random_element(d, rng) * pt.element();
    const AlgebraElement u = polar_decompose(raw).u;
    const AlgebraElement bump = p.element() * random_element(d, rng) * pt.element();
    return u + (0.25 / std::max(1.0, bump.norm())) * bump;
}

// ---------------------------------------------------------------------------
// Spec records
// ---------------------------------------------------------------------------

/// Parametrisation of the core bundle: corner-typed parameter slots plus the
/// injection (base point m, parameters) -> core arrow over the unit at m.
struct CoreParam {
    std::vector<SlotCorner> slots;
    std::function<VBPoint(const CoordTuple&, const CoordTuple&)> inject;
};

/** A VB-groupoid as data: the arrow space is a vector bundle over the base
    groupoid Gamma (fibre slots `omega_fiber` over Gamma-tuples) and the side
    object is a vector bundle over the base points (fibre slots `side_fiber`
    over M-tuples).  Structural callables act on VBPoints; the Gamma-level
    groupoid has its own callables on plain tuples.  Every structural
    callable must preserve the declared corners (audited by vb_check). */
struct VBGroupoidSpec {
    std::string name;
    AlgebraDescriptor desc{std::vector<int>{1}};

    std::vector<SlotCorner> omega_fiber; ///< arrow fibre slots over Gamma
    std::vector<SlotCorner> side_fiber;  ///< side fibre slots over M

    std::function<CoordTuple(const CoordTuple&)> gamma_src, gamma_tgt, gamma_inv;
    std::function<CoordTuple(const CoordTuple&, const CoordTuple&)> gamma_prod;
    std::function<CoordTuple(const CoordTuple&)> gamma_unit; ///< M-tuple -> Gamma-tuple

    std::function<VBPoint(const VBPoint&)> src, tgt; ///< arrow -> side point
    std::function<VBPoint(const VBPoint&)> inv;
    std::function<VBPoint(const VBPoint&, const VBPoint&)> prod;
    std::function<VBPoint(const VBPoint&)> unit; ///< side point -> arrow

    std::function<CoordTuple(Rng&)> sample_base;
    std::function<std::pair<CoordTuple, CoordTuple>(Rng&)> sample_composable_base;
    std::function<std::array<CoordTuple, 3>(Rng&)> sample_composable_triple;

    CoreParam core; ///< hand parametrisation of the core (validated, not assumed)
};

/// The zero section over a base arrow.
inline VBPoint vb_zero_arrow(const VBGroupoidSpec& s, const CoordTuple& gamma) {
    return VBPoint{zero_fiber(s.omega_fiber), gamma};
}

/// The zero section of the side bundle over a base point.
inline VBPoint side_zero_point(const VBGroupoidSpec& s, const CoordTuple& m) {
    return VBPoint{zero_fiber(s.side_fiber), m};
}

/// Arrow with random corner fibres over a given base arrow.
inline VBPoint vb_sample_arrow(const VBGroupoidSpec& s, const CoordTuple& gamma, Rng& rng) {
    return VBPoint{sample_fiber(s.omega_fiber, rng), gamma};
}

/// Matrix of the fibrewise source map over one base arrow: columns are the
/// stacked source fibres of the corner-basis arrows.
inline Mat vb_source_matrix(const VBGroupoidSpec& s, const CoordTuple& gamma) {
    int rows = 0;
    for (const SlotCorner& c : s.side_fiber) rows += c.left.descriptor().total_dim();
    int cols = 0;
    for (const SlotCorner& c : s.omega_fiber) cols += corner_dim(c);
    Mat a = Mat::Zero(rows, cols);
    int j = 0;
    for (std::size_t i = 0; i < s.omega_fiber.size(); ++i) {
        const CornerBasis cb = corner_basis(s.omega_fiber[i]);
        for (const AlgebraElement& e : cb.basis) {
            VBPoint w = vb_zero_arrow(s, gamma);
            w.fiber[i] = e;
            if (rows > 0) a.col(j) = stack_tuple(s.src(w).fiber);
            ++j;
        }
    }
    return a;
}

/** Arrow over `gamma` whose source fibre equals `efiber`, from the minimum
    norm solve against the source matrix (linear in `efiber`, zero at zero).
    Throws SamplingError when the prescribed fibre is not attainable, i.e.
    when the double-source map fails to be surjective over this base. */
inline VBPoint vb_lift_source(const VBGroupoidSpec& s, const CoordTuple& gamma,
                              const CoordTuple& efiber) {
    VBPoint out = vb_zero_arrow(s, gamma);
    if (s.side_fiber.empty()) return out;
    const Mat a = vb_source_matrix(s, gamma);
    const Eigen::VectorXcd rhs = stack_tuple(efiber);
    const Eigen::VectorXcd coef = pseudo_inverse(a, s.desc.max_dim()) * rhs;
    if ((a * coef - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm()))
        throw SamplingError("prescribed source fibre is not attainable over this base arrow");
    int j = 0;
    for (std::size_t i = 0; i < s.omega_fiber.size(); ++i) {
        const CornerBasis cb = corner_basis(s.omega_fiber[i]);
        for (const AlgebraElement& e : cb.basis) out.fiber[i] = out.fiber[i] + coef(j++) * e;
    }
    return out;
}

/// Arrow over `gamma` with prescribed target fibre: the inverse of a source
/// lift over the inverse base arrow.
inline VBPoint vb_lift_target(const VBGroupoidSpec& s, const CoordTuple& gamma,
                              const CoordTuple& efiber) {
    return s.inv(vb_lift_source(s, s.gamma_inv(gamma), efiber));
}

/// A composable arrow pair sampled through the source lift: the right
/// factor's random fibre is corrected so its target matches exactly.
inline std::pair<VBPoint, VBPoint> vb_sample_composable(const VBGroupoidSpec& s, Rng& rng) {
    const auto [g1, g2] = s.sample_composable_base(rng);
    const VBPoint w = vb_sample_arrow(s, g1, rng);
    VBPoint v = vb_sample_arrow(s, g2, rng);
    const CoordTuple defect = tuple_sub(s.src(w).fiber, s.tgt(v).fiber);
    v.fiber = tuple_add(v.fiber, vb_lift_target(s, g2, defect).fiber);
    return {w, v};
}

/// A composable arrow triple (same correction applied twice along the chain).
inline std::array<VBPoint, 3> vb_sample_composable_triple(const VBGroupoidSpec& s, Rng& rng) {
    const std::array<CoordTuple, 3> g = s.sample_composable_triple(rng);
    const VBPoint w = vb_sample_arrow(s, g[0], rng);
    VBPoint v = vb_sample_arrow(s, g[1], rng);
    v.fiber = tuple_add(v.fiber,
                        vb_lift_target(s, g[1], tuple_sub(s.src(w).fiber, s.tgt(v).fiber)).fiber);
    VBPoint u = vb_sample_arrow(s, g[2], rng);
    u.fiber = tuple_add(u.fiber,
                        vb_lift_target(s, g[2], tuple_sub(s.src(v).fiber, s.tgt(u).fiber)).fiber);
    return {w, v, u};
}

// ---------------------------------------------------------------------------
// Axioms checker
// ---------------------------------------------------------------------------

/// Per-axiom worst residuals of a spec audit.
struct VBCheckReport {
    std::map<std::string, double> residuals;
    int samples = 0;

    double max_residual() const {
        double m = 0.0;
        for (const auto& [k, v] : residuals) m = std::max(m, v);
        return m;
    }
    bool pass(double tol) const { return max_residual() <= tol; }
};

/** Audit a spec on `n` random samples: groupoid axioms on both levels,
    corner preservation, fibrewise linearity of source/target/inverse/unit,
    the projection and zero-section groupoid morphisms, surjectivity of the
    double-source map, and the interchange law (plain and with random complex
    weights).  All residuals are exact-identity defects. */
inline VBCheckReport vb_check(const VBGroupoidSpec& s, int n, Rng& rng) {
    if (!s.src || !s.tgt || !s.inv || !s.prod || !s.unit || !s.sample_base ||
        !s.sample_composable_base || !s.sample_composable_triple)
        throw SamplingError("spec is missing structural callables or sampling generators");
    VBCheckReport report;
    report.samples = n;
    auto bump = [&report](const std::string& key, double v) {
        auto [it, inserted] = report.residuals.try_emplace(key, v);
        if (!inserted) it->second = std::max(it->second, v);
    };
    auto corner_defect = [&s](const VBPoint& x, const std::vector<SlotCorner>& corners) {
        double d = 0.0;
        for (std::size_t i = 0; i < corners.size(); ++i)
            d = std::max(d, dist(corner_project(corners[i], x.fiber[i]), x.fiber[i]));
        return d;
    };
    const int side_dim = [&s] {
        int t = 0;
        for (const SlotCorner& c : s.side_fiber) t += corner_dim(c);
        return t;
    }();

    for (int i = 0; i < n; ++i) {
        // base groupoid
        const CoordTuple g = s.sample_base(rng);
        const CoordTuple ms = s.gamma_src(g);
        const CoordTuple mt = s.gamma_tgt(g);
        bump("base.unit", tuple_dist(s.gamma_prod(g, s.gamma_unit(ms)), g));
        bump("base.unit", tuple_dist(s.gamma_prod(s.gamma_unit(mt), g), g));
        bump("base.inverse", tuple_dist(s.gamma_prod(g, s.gamma_inv(g)), s.gamma_unit(mt)));
        bump("base.inverse", tuple_dist(s.gamma_prod(s.gamma_inv(g), g), s.gamma_unit(ms)));
        {
            const std::array<CoordTuple, 3> t = s.sample_composable_triple(rng);
            bump("base.assoc", tuple_dist(s.gamma_prod(s.gamma_prod(t[0], t[1]), t[2]),
                                          s.gamma_prod(t[0], s.gamma_prod(t[1], t[2]))));
        }

        // arrow groupoid
        const VBPoint w = vb_sample_arrow(s, g, rng);
        const VBPoint sw = s.src(w);
        const VBPoint tw = s.tgt(w);
        bump("morphism.proj", tuple_dist(sw.base, ms));
        bump("morphism.proj", tuple_dist(tw.base, mt));
        bump("unit.absorb", vb_dist(s.prod(w, s.unit(sw)), w));
        bump("unit.absorb", vb_dist(s.prod(s.unit(tw), w), w));
        bump("inverse.law", vb_dist(s.prod(w, s.inv(w)), s.unit(tw)));
        bump("inverse.law", vb_dist(s.prod(s.inv(w), w), s.unit(sw)));
        bump("inverse.law", vb_dist(s.inv(s.inv(w)), w));
        bump("corners", corner_defect(w, s.omega_fiber));
        bump("corners", corner_defect(sw, s.side_fiber));
        bump("corners", corner_defect(tw, s.side_fiber));
        bump("corners", corner_defect(s.inv(w), s.omega_fiber));
        bump("corners", corner_defect(s.unit(sw), s.omega_fiber));

        {
            const auto [a, b] = vb_sample_composable(s, rng);
            const VBPoint ab = s.prod(a, b);
            bump("product.matching", vb_dist(s.src(ab), s.src(b)));
            bump("product.matching", vb_dist(s.tgt(ab), s.tgt(a)));
            bump("morphism.proj", tuple_dist(ab.base, s.gamma_prod(a.base, b.base)));
            bump("morphism.proj", tuple_dist(s.inv(a).base, s.gamma_inv(a.base)));
            bump("corners", corner_defect(ab, s.omega_fiber));
        }
        {
            const std::array<VBPoint, 3> t = vb_sample_composable_triple(s, rng);
            bump("assoc", vb_dist(s.prod(s.prod(t[0], t[1]), t[2]),
                                  s.prod(t[0], s.prod(t[1], t[2]))));
        }

        // fibrewise linearity over a fixed base
        {
            const VBPoint w1 = vb_sample_arrow(s, g, rng);
            const VBPoint w2 = vb_sample_arrow(s, g, rng);
            const cplx a = rng.cgaussian();
            const cplx b = rng.cgaussian();
            const VBPoint combo{tuple_add(tuple_scale(a, w1.fiber), tuple_scale(b, w2.fiber)), g};
            for (const auto& [label, map] :
                 std::initializer_list<std::pair<const char*, const std::function<VBPoint(const VBPoint&)>*>>{
                     {"linear.src", &s.src}, {"linear.tgt", &s.tgt}, {"linear.inv", &s.inv}}) {
                const VBPoint f1 = (*map)(w1);
                const VBPoint f2 = (*map)(w2);
                const VBPoint fc = (*map)(combo);
                bump(label, tuple_dist(fc.fiber, tuple_add(tuple_scale(a, f1.fiber),
                                                           tuple_scale(b, f2.fiber))));
                bump(label, tuple_dist(f1.base, fc.base));
            }
            const VBPoint e1{sample_fiber(s.side_fiber, rng), ms};
            const VBPoint e2{sample_fiber(s.side_fiber, rng), ms};
            const VBPoint u1 = s.unit(e1);
            const VBPoint u2 = s.unit(e2);
            const VBPoint uc = s.unit(
                VBPoint{tuple_add(tuple_scale(a, e1.fiber), tuple_scale(b, e2.fiber)), ms});
            bump("linear.unit", tuple_dist(uc.fiber, tuple_add(tuple_scale(a, u1.fiber),
                                                               tuple_scale(b, u2.fiber))));
            bump("linear.unit", tuple_dist(uc.base, u1.base));
            bump("morphism.proj", tuple_dist(u1.base, s.gamma_unit(ms)));
        }

        // zero sections form a groupoid morphism
        {
            const auto [g1, g2] = s.sample_composable_base(rng);
            bump("morphism.zero", vb_dist(s.prod(vb_zero_arrow(s, g1), vb_zero_arrow(s, g2)),
                                          vb_zero_arrow(s, s.gamma_prod(g1, g2))));
            bump("morphism.zero", vb_dist(s.inv(vb_zero_arrow(s, g1)),
                                          vb_zero_arrow(s, s.gamma_inv(g1))));
            bump("morphism.zero", vb_dist(s.unit(side_zero_point(s, s.gamma_src(g1))),
                                          vb_zero_arrow(s, s.gamma_unit(s.gamma_src(g1)))));
            bump("morphism.zero", vb_dist(s.src(vb_zero_arrow(s, g1)),
                                          side_zero_point(s, s.gamma_src(g1))));
        }

        // double-source surjectivity and exactness of the source lift
        {
            const Mat a = vb_source_matrix(s, g);
            const int rank = (a.rows() == 0 || a.cols() == 0)
                                 ? 0
                                 : numerical_rank(a, s.desc.max_dim());
            bump("double.source", static_cast<double>(side_dim - rank));
            const CoordTuple e = sample_fiber(s.side_fiber, rng);
            bump("double.source", tuple_dist(s.src(vb_lift_source(s, g, e)).fiber, e));
        }

        // interchange law on admissible quadruples
        {
            const auto [g1, g2] = s.sample_composable_base(rng);
            auto matched = [&](const VBPoint& top) {
                VBPoint nu = vb_sample_arrow(s, g2, rng);
                nu.fiber = tuple_add(
                    nu.fiber,
                    vb_lift_target(s, g2, tuple_sub(s.src(top).fiber, s.tgt(nu).fiber)).fiber);
                return nu;
            };
            const VBPoint w1 = vb_sample_arrow(s, g1, rng);
            const VBPoint w2 = vb_sample_arrow(s, g1, rng);
            const VBPoint n1 = matched(w1);
            const VBPoint n2 = matched(w2);
            const VBPoint sum_left{tuple_add(w1.fiber, w2.fiber), g1};
            const VBPoint sum_right{tuple_add(n1.fiber, n2.fiber), g2};
            bump("interchange", vb_dist(s.prod(sum_left, sum_right),
                                        VBPoint{tuple_add(s.prod(w1, n1).fiber,
                                                          s.prod(w2, n2).fiber),
                                                s.gamma_prod(g1, g2)}));
            const cplx a = rng.cgaussian();
            const cplx b = rng.cgaussian();
            const VBPoint mix_left{tuple_add(tuple_scale(a, w1.fiber), tuple_scale(b, w2.fiber)),
                                   g1};
            const VBPoint mix_right{tuple_add(tuple_scale(a, n1.fiber), tuple_scale(b, n2.fiber)),
                                    g2};
            bump("interchange.scaled",
                 vb_dist(s.prod(mix_left, mix_right),
                         VBPoint{tuple_add(tuple_scale(a, s.prod(w1, n1).fiber),
                                           tuple_scale(b, s.prod(w2, n2).fiber)),
                                 s.gamma_prod(g1, g2)}));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Core bundle
// ---------------------------------------------------------------------------

/// Validation summary of the core parametrisation against the numerically
/// solved core conditions (source fibre zero over a unit base arrow).
struct CoreBundle {
    int fiber_dim = 0;     ///< dimension of the parametrised core fibre
    int kernel_dim = 0;    ///< numeric dimension of the solved conditions
    double residual = 0.0; ///< worst violation of the core conditions
    bool spans = false;    ///< parametrisation injective with matching dimension

    bool consistent() const { return spans && fiber_dim == kernel_dim && residual <= 1e-8; }
};

/// Residual of the core-membership conditions for one arrow: the source
/// fibre must vanish and the base arrow must be the unit at its source.
inline double core_residual(const VBGroupoidSpec& s, const VBPoint& omega) {
    const double src_defect = tuple_norm(s.src(omega).fiber);
    const CoordTuple m = s.gamma_src(omega.base);
    return std::max(src_defect, tuple_dist(omega.base, s.gamma_unit(m)));
}

/// Solve the core conditions at sampled base points and validate the spec's
/// parametrisation: membership, injectivity, and dimension match.
inline CoreBundle core_compute(const VBGroupoidSpec& s, int samples, Rng& rng) {
    if (!s.core.inject) throw SamplingError("spec carries no core parametrisation");
    CoreBundle out;
    for (const SlotCorner& c : s.core.slots) out.fiber_dim += corner_dim(c);
    int omega_dim = 0;
    for (const SlotCorner& c : s.omega_fiber) omega_dim += corner_dim(c);

    out.spans = true;
    for (int i = 0; i < samples; ++i) {
        const CoordTuple m = s.gamma_src(s.sample_base(rng));
        const CoordTuple gu = s.gamma_unit(m);
        const Mat a = vb_source_matrix(s, gu);
        const int rank =
            (a.rows() == 0 || a.cols() == 0) ? 0 : numerical_rank(a, s.desc.max_dim());
        out.kernel_dim = std::max(out.kernel_dim, omega_dim - rank);

        // columns of the parametrisation, checked for membership
        Mat p = Mat::Zero(stack_tuple(zero_fiber(s.omega_fiber)).size(),
                          std::max(out.fiber_dim, 1));
        int j = 0;
        for (std::size_t slot = 0; slot < s.core.slots.size(); ++slot) {
            const CornerBasis cb = corner_basis(s.core.slots[slot]);
            for (const AlgebraElement& e : cb.basis) {
                CoordTuple params = zero_fiber(s.core.slots);
                params[slot] = e;
                const VBPoint k = s.core.inject(m, params);
                out.residual = std::max(out.residual, core_residual(s, k));
                p.col(j++) = stack_tuple(k.fiber);
            }
        }
        if (out.fiber_dim > 0 && numerical_rank(p, s.desc.max_dim()) != out.fiber_dim)
            out.spans = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dualization
// ---------------------------------------------------------------------------

namespace detail {

/// Coefficients of a core element in the parametrisation at m, by a
/// least-squares solve; throws when the element escapes the computed core.
inline CoordTuple core_coordinates(const VBGroupoidSpec& s, const CoordTuple& m,
                                   const CoordTuple& core_fiber) {
    CoordTuple params = zero_fiber(s.core.slots);
    const Eigen::VectorXcd rhs = stack_tuple(core_fiber);
    if (s.core.slots.empty()) {
        if (rhs.norm() > 1e-8 * std::max(1.0, rhs.norm()) && rhs.norm() > 1e-8)
            throw DegeneratePairing("core element outside the trivial core");
        return params;
    }
    int cols = 0;
    for (const SlotCorner& c : s.core.slots) cols += corner_dim(c);
    Mat p(rhs.size(), cols);
    std::vector<std::pair<std::size_t, AlgebraElement>> directions;
    int j = 0;
    for (std::size_t slot = 0; slot < s.core.slots.size(); ++slot) {
        const CornerBasis cb = corner_basis(s.core.slots[slot]);
        for (const AlgebraElement& e : cb.basis) {
            CoordTuple probe = zero_fiber(s.core.slots);
            probe[slot] = e;
            p.col(j++) = stack_tuple(s.core.inject(m, probe).fiber);
            directions.emplace_back(slot, e);
        }
    }
    const Eigen::VectorXcd coef = pseudo_inverse(p, s.desc.max_dim()) * rhs;
    if ((p * coef - rhs).norm() > 1e-7 * std::max(1.0, rhs.norm()))
        throw DegeneratePairing("arrow does not decompose through the core parametrisation");
    for (std::size_t k = 0; k < directions.size(); ++k)
        params[directions[k].first] =
            params[directions[k].first] + coef(static_cast<int>(k)) * directions[k].second;
    return params;
}

} // namespace detail

/** The trace-pairing dual spec over (Omega*, Gamma, K*, M).  Dual arrows are
    tuples in the swapped fibre corners over the same base arrow; dual side
    points are tuples in the swapped core-parameter corners.  The structural
    maps are defined by pairing identities and realized here as linear solves:

      <src*(Phi), k>  = <Phi, -(zero_gamma . k^{-1})>,
      <tgt*(Phi), k>  = <Phi, k . zero_gamma>,
      <inv*(Phi), w>  = -<Phi, inv(w)>,
      <Phi Psi, w v>  = <Phi, w> + <Psi, v>,
      <unit*(kap), w> = <kap, w - unit(src(w))>.

    The product decomposes a basis arrow u over gamma1 gamma2 as u = w v with
    v the source lift of src(u) over gamma2 and w = u v^{-1}.  An optional
    core parametrisation for the produced dual enables dualizing twice. */
inline VBGroupoidSpec dualize(const VBGroupoidSpec& s, CoreParam dual_core = {}) {
    if (!s.core.inject)
        throw DegeneratePairing("dualization requires a validated core parametrisation");
    VBGroupoidSpec d;
    d.name = s.name + " dual";
    d.desc = s.desc;
    for (const SlotCorner& c : s.omega_fiber) d.omega_fiber.push_back(dual_corner(c));
    for (const SlotCorner& c : s.core.slots) d.side_fiber.push_back(dual_corner(c));
    d.gamma_src = s.gamma_src;
    d.gamma_tgt = s.gamma_tgt;
    d.gamma_inv = s.gamma_inv;
    d.gamma_prod = s.gamma_prod;
    d.gamma_unit = s.gamma_unit;
    d.sample_base = s.sample_base;
    d.sample_composable_base = s.sample_composable_base;
    d.sample_composable_triple = s.sample_composable_triple;
    d.core = std::move(dual_core);

    auto against_core = [s](const CoordTuple& m,
                            const std::function<cplx(const VBPoint&)>& functional) {
        CoordTuple fiber;
        for (std::size_t slot = 0; slot < s.core.slots.size(); ++slot)
            fiber.push_back(
                assemble_dual(s.core.slots[slot], [&](const AlgebraElement& e) {
                    CoordTuple params = zero_fiber(s.core.slots);
                    params[slot] = e;
                    return functional(s.core.inject(m, params));
                }));
        return fiber;
    };
    auto against_fiber = [s](const CoordTuple& gamma,
                             const std::function<cplx(const VBPoint&)>& functional) {
        CoordTuple fiber;
        for (std::size_t slot = 0; slot < s.omega_fiber.size(); ++slot)
            fiber.push_back(
                assemble_dual(s.omega_fiber[slot], [&](const AlgebraElement& e) {
                    VBPoint w = vb_zero_arrow(s, gamma);
                    w.fiber[slot] = e;
                    return functional(w);
                }));
        return fiber;
    };

    d.src = [s, against_core](const VBPoint& phi) {
        const CoordTuple m = s.gamma_src(phi.base);
        const VBPoint zero = vb_zero_arrow(s, phi.base);
        return VBPoint{against_core(m,
                                    [&](const VBPoint& k) {
                                        return -tuple_pairing(phi.fiber,
                                                              s.prod(zero, s.inv(k)).fiber);
                                    }),
                       m};
    };
    d.tgt = [s, against_core](const VBPoint& phi) {
        const CoordTuple m = s.gamma_tgt(phi.base);
        const VBPoint zero = vb_zero_arrow(s, phi.base);
        return VBPoint{against_core(m,
                                    [&](const VBPoint& k) {
                                        return tuple_pairing(phi.fiber, s.prod(k, zero).fiber);
                                    }),
                       m};
    };
    d.inv = [s, against_fiber](const VBPoint& phi) {
        const CoordTuple gi = s.gamma_inv(phi.base);
        return VBPoint{against_fiber(gi,
                                     [&](const VBPoint& w) {
                                         return -tuple_pairing(phi.fiber, s.inv(w).fiber);
                                     }),
                       gi};
    };
    d.unit = [s, against_fiber](const VBPoint& kap) {
        const CoordTuple gu = s.gamma_unit(kap.base);
        return VBPoint{against_fiber(gu,
                                     [&](const VBPoint& w) {
                                         const CoordTuple rest = tuple_sub(
                                             w.fiber, s.unit(s.src(w)).fiber);
                                         return tuple_pairing(
                                             kap.fiber,
                                             detail::core_coordinates(s, kap.base, rest));
                                     }),
                       gu};
    };
    d.prod = [s, against_fiber, dsrc = d.src, dtgt = d.tgt](const VBPoint& phi,
                                                            const VBPoint& psi) {
        if (vb_dist(dsrc(phi), dtgt(psi)) > 1e-6 * (1.0 + tuple_norm(phi.fiber) +
                                                    tuple_norm(psi.fiber)))
            throw NonComposable("dual arrows do not match source to target");
        const CoordTuple g = s.gamma_prod(phi.base, psi.base);
        return VBPoint{against_fiber(g,
                                     [&](const VBPoint& u) {
                                         const VBPoint v = vb_lift_source(s, psi.base,
                                                                          s.src(u).fiber);
                                         const VBPoint w = s.prod(u, s.inv(v));
                                         return tuple_pairing(phi.fiber, w.fiber) +
                                                tuple_pairing(psi.fiber, v.fiber);
                                     }),
                       g};
    };
    return d;
}

// ---------------------------------------------------------------------------
// Spec comparison (hand formulas against generated duals)
// ---------------------------------------------------------------------------

/// Worst sampled disagreement of the five structural maps of two specs over
/// the same carriers.
struct SpecComparisonReport {
    double src = 0.0, tgt = 0.0, inv = 0.0, unit = 0.0, prod = 0.0;
    int samples = 0;

    double max_residual() const {
        return std::max({src, tgt, inv, unit, prod});
    }
};

inline SpecComparisonReport compare_specs(const VBGroupoidSpec& a, const VBGroupoidSpec& b,
                                          int n, Rng& rng) {
    SpecComparisonReport r;
    r.samples = n;
    for (int i = 0; i < n; ++i) {
        const CoordTuple g = a.sample_base(rng);
        const VBPoint w = vb_sample_arrow(a, g, rng);
        r.src = std::max(r.src, vb_dist(a.src(w), b.src(w)));
        r.tgt = std::max(r.tgt, vb_dist(a.tgt(w), b.tgt(w)));
        r.inv = std::max(r.inv, vb_dist(a.inv(w), b.inv(w)));
        const VBPoint e{sample_fiber(a.side_fiber, rng), a.gamma_src(g)};
        r.unit = std::max(r.unit, vb_dist(a.unit(e), b.unit(e)));
        const auto [x, y] = vb_sample_composable(a, rng);
        r.prod = std::max(r.prod, vb_dist(a.prod(x, y), b.prod(x, y)));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Shared base-groupoid attachments
// ---------------------------------------------------------------------------

namespace detail {

/// Pair groupoid of bundle points: arrows (eta, xi), units (eta, eta).
inline void attach_pair_base(VBGroupoidSpec& s, const ProjectionElement& p0) {
    s.gamma_src = [](const CoordTuple& g) { return CoordTuple{g[1]}; };
    s.gamma_tgt = [](const CoordTuple& g) { return CoordTuple{g[0]}; };
    s.gamma_unit = [](const CoordTuple& m) { return CoordTuple{m[0], m[0]}; };
    s.gamma_inv = [](const CoordTuple& g) { return CoordTuple{g[1], g[0]}; };
    s.gamma_prod = [](const CoordTuple& a, const CoordTuple& b) {
        return CoordTuple{a[0], b[1]};
    };
    const AlgebraDescriptor d = p0.descriptor();
    const AlgebraElement p0e = p0.element();
    auto point = [d, p0e](Rng& rng) { return random_element(d, rng) * p0e; };
    s.sample_base = [point](Rng& rng) { return CoordTuple{point(rng), point(rng)}; };
    s.sample_composable_base = [point](Rng& rng) {
        const AlgebraElement eta = point(rng);
        const AlgebraElement xi = point(rng);
        const AlgebraElement zeta = point(rng);
        return std::make_pair(CoordTuple{eta, xi}, CoordTuple{xi, zeta});
    };
    s.sample_composable_triple = [point](Rng& rng) {
        const AlgebraElement eta = point(rng);
        const AlgebraElement xi = point(rng);
        const AlgebraElement zeta = point(rng);
        const AlgebraElement omega = point(rng);
        return std::array<CoordTuple, 3>{CoordTuple{eta, xi}, CoordTuple{xi, zeta},
                                         CoordTuple{zeta, omega}};
    };
}

/// Cotangent-pair arrows (phi, eta, psi, xi) as a base groupoid.
inline void attach_cotangent_pair_base(VBGroupoidSpec& s, const ProjectionElement& p0) {
    s.gamma_src = [](const CoordTuple& g) { return CoordTuple{-g[2], g[3]}; };
    s.gamma_tgt = [](const CoordTuple& g) { return CoordTuple{g[0], g[1]}; };
    s.gamma_unit = [](const CoordTuple& m) { return CoordTuple{m[0], m[1], -m[0], m[1]}; };
    s.gamma_inv = [](const CoordTuple& g) { return CoordTuple{-g[2], g[3], -g[0], g[1]}; };
    s.gamma_prod = [](const CoordTuple& a, const CoordTuple& b) {
        return CoordTuple{a[0], a[1], b[2], b[3]};
    };
    const AlgebraDescriptor d = p0.descriptor();
    const AlgebraElement p0e = p0.element();
    auto arrow = [d, p0e](Rng& rng) {
        return CoordTuple{p0e * random_element(d, rng), random_element(d, rng) * p0e,
                          p0e * random_element(d, rng), random_element(d, rng) * p0e};
    };
    s.sample_base = arrow;
    auto follow = [d, p0e](const CoordTuple& g, Rng& rng) {
        return CoordTuple{-g[2], g[3], p0e * random_element(d, rng),
                          random_element(d, rng) * p0e};
    };
    s.sample_composable_base = [arrow, follow](Rng& rng) {
        const CoordTuple a = arrow(rng);
        return std::make_pair(a, follow(a, rng));
    };
    s.sample_composable_triple = [arrow, follow](Rng& rng) {
        const CoordTuple a = arrow(rng);
        const CoordTuple b = follow(a, rng);
        return std::array<CoordTuple, 3>{a, b, follow(b, rng)};
    };
}

/// Additive-corner arrows (chi, eta, xi) as a base groupoid.
inline void attach_additive_base(VBGroupoidSpec& s, const ProjectionElement& p0) {
    s.gamma_src = [](const CoordTuple& g) { return CoordTuple{g[2]}; };
    s.gamma_tgt = [](const CoordTuple& g) { return CoordTuple{g[1]}; };
    s.gamma_unit = [d = p0.descriptor()](const CoordTuple& m) {
        return CoordTuple{AlgebraElement::zero(d), m[0], m[0]};
    };
    s.gamma_inv = [](const CoordTuple& g) { return CoordTuple{-g[0], g[2], g[1]}; };
    s.gamma_prod = [](const CoordTuple& a, const CoordTuple& b) {
        return CoordTuple{a[0] + b[0], a[1], b[2]};
    };
    const AlgebraDescriptor d = p0.descriptor();
    const AlgebraElement p0e = p0.element();
    auto point = [d, p0e](Rng& rng) { return random_element(d, rng) * p0e; };
    auto corner = [d, p0e](Rng& rng) { return p0e * random_element(d, rng) * p0e; };
    s.sample_base = [point, corner](Rng& rng) {
        return CoordTuple{corner(rng), point(rng), point(rng)};
    };
    s.sample_composable_base = [point, corner](Rng& rng) {
        const AlgebraElement eta = point(rng);
        const AlgebraElement xi = point(rng);
        const AlgebraElement zeta = point(rng);
        return std::make_pair(CoordTuple{corner(rng), eta, xi},
                              CoordTuple{corner(rng), xi, zeta});
    };
    s.sample_composable_triple = [point, corner](Rng& rng) {
        const AlgebraElement eta = point(rng);
        const AlgebraElement xi = point(rng);
        const AlgebraElement zeta = point(rng);
        const AlgebraElement omega = point(rng);
        return std::array<CoordTuple, 3>{CoordTuple{corner(rng), eta, xi},
                                         CoordTuple{corner(rng), xi, zeta},
                                         CoordTuple{corner(rng), zeta, omega}};
    };
}

inline void require_match(double defect, double scale, const char* what) {
    if (defect > 1e-6 * (1.0 + scale)) throw NonComposable(what);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Concrete specs over the support-fixing bundle
// ---------------------------------------------------------------------------

/// Tangent vectors of pairs of bundle points: fibres (v, w) over (eta, xi)
/// with slotwise product (v, w)(w, z) = (v, z).
inline VBGroupoidSpec pair_tangent_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "pair tangent";
    s.desc = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const SlotCorner mp0{one, p0.element()};
    s.omega_fiber = {mp0, mp0};
    s.side_fiber = {mp0};
    detail::attach_pair_base(s, p0);
    s.src = [](const VBPoint& x) { return VBPoint{{x.fiber[1]}, {x.base[1]}}; };
    s.tgt = [](const VBPoint& x) { return VBPoint{{x.fiber[0]}, {x.base[0]}}; };
    s.unit = [](const VBPoint& e) {
        return VBPoint{{e.fiber[0], e.fiber[0]}, {e.base[0], e.base[0]}};
    };
    s.inv = [](const VBPoint& x) {
        return VBPoint{{x.fiber[1], x.fiber[0]}, {x.base[1], x.base[0]}};
    };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(std::max(dist(a.fiber[1], b.fiber[0]), dist(a.base[1], b.base[0])),
                              tuple_norm(a.fiber) + tuple_norm(a.base),
                              "tangent pairs do not match source to target");
        return VBPoint{{a.fiber[0], b.fiber[1]}, {a.base[0], b.base[1]}};
    };
    s.core.slots = {mp0};
    s.core.inject = [](const CoordTuple& m, const CoordTuple& k) {
        const AlgebraElement zero = AlgebraElement::zero(k[0].descriptor());
        return VBPoint{{k[0], zero}, {m[0], m[0]}};
    };
    return s;
}

/// Covectors of pairs of bundle points: fibres (phi, psi) over (eta, xi)
/// with source (-psi, xi), unit (c, -c), and product pattern
/// (phi, psi)(-psi, lambda) = (phi, lambda).
inline VBGroupoidSpec pair_cotangent_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "pair cotangent";
    s.desc = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const SlotCorner p0m{p0.element(), one};
    s.omega_fiber = {p0m, p0m};
    s.side_fiber = {p0m};
    detail::attach_pair_base(s, p0);
    s.src = [](const VBPoint& x) { return VBPoint{{-x.fiber[1]}, {x.base[1]}}; };
    s.tgt = [](const VBPoint& x) { return VBPoint{{x.fiber[0]}, {x.base[0]}}; };
    s.unit = [](const VBPoint& e) {
        return VBPoint{{e.fiber[0], -e.fiber[0]}, {e.base[0], e.base[0]}};
    };
    s.inv = [](const VBPoint& x) {
        return VBPoint{{-x.fiber[1], -x.fiber[0]}, {x.base[1], x.base[0]}};
    };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(
            std::max(dist(-1.0 * a.fiber[1], b.fiber[0]), dist(a.base[1], b.base[0])),
            tuple_norm(a.fiber) + tuple_norm(a.base),
            "covector pairs do not match source to target");
        return VBPoint{{a.fiber[0], b.fiber[1]}, {a.base[0], b.base[1]}};
    };
    s.core.slots = {p0m};
    s.core.inject = [](const CoordTuple& m, const CoordTuple& k) {
        const AlgebraElement zero = AlgebraElement::zero(k[0].descriptor());
        return VBPoint{{k[0], zero}, {m[0], m[0]}};
    };
    return s;
}

/// Pair arrows carrying a constant corner label: fibre (x) over (eta, xi),
/// composable only when the labels agree; the core is the zero bundle.
inline VBGroupoidSpec corner_pair_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "constant-corner pair";
    s.desc = p0.descriptor();
    const SlotCorner corner{p0.element(), p0.element()};
    s.omega_fiber = {corner};
    s.side_fiber = {corner};
    detail::attach_pair_base(s, p0);
    s.src = [](const VBPoint& x) { return VBPoint{{x.fiber[0]}, {x.base[1]}}; };
    s.tgt = [](const VBPoint& x) { return VBPoint{{x.fiber[0]}, {x.base[0]}}; };
    s.unit = [](const VBPoint& e) { return VBPoint{{e.fiber[0]}, {e.base[0], e.base[0]}}; };
    s.inv = [](const VBPoint& x) { return VBPoint{{x.fiber[0]}, {x.base[1], x.base[0]}}; };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(std::max(dist(a.fiber[0], b.fiber[0]), dist(a.base[1], b.base[0])),
                              tuple_norm(a.fiber) + tuple_norm(a.base),
                              "corner labels or base legs do not match");
        return VBPoint{{a.fiber[0]}, {a.base[0], b.base[1]}};
    };
    s.core.slots = {};
    s.core.inject = [d = s.desc](const CoordTuple& m, const CoordTuple&) {
        return VBPoint{{AlgebraElement::zero(d)}, {m[0], m[0]}};
    };
    return s;
}

/// Pair arrows carrying an additive corner label: fibre (chi) over
/// (eta, xi), product adds the labels, inverse negates the label and swaps
/// the legs; the side bundle is the zero bundle.
inline VBGroupoidSpec additive_pair_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "additive-corner pair";
    s.desc = p0.descriptor();
    const SlotCorner corner{p0.element(), p0.element()};
    s.omega_fiber = {corner};
    s.side_fiber = {};
    detail::attach_pair_base(s, p0);
    s.src = [](const VBPoint& x) { return VBPoint{{}, {x.base[1]}}; };
    s.tgt = [](const VBPoint& x) { return VBPoint{{}, {x.base[0]}}; };
    s.unit = [d = s.desc](const VBPoint& e) {
        return VBPoint{{AlgebraElement::zero(d)}, {e.base[0], e.base[0]}};
    };
    s.inv = [](const VBPoint& x) { return VBPoint{{-x.fiber[0]}, {x.base[1], x.base[0]}}; };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(dist(a.base[1], b.base[0]), tuple_norm(a.base),
                              "additive arrows do not match source to target");
        return VBPoint{{a.fiber[0] + b.fiber[0]}, {a.base[0], b.base[1]}};
    };
    s.core.slots = {corner};
    s.core.inject = [](const CoordTuple& m, const CoordTuple& k) {
        return VBPoint{{k[0]}, {m[0], m[0]}};
    };
    return s;
}

/// Velocities of covector pairs: fibres (dphi, deta, dpsi, dxi) over the
/// cotangent-pair arrows, with all structural maps the derivatives of the
/// cotangent-pair ones.
inline VBGroupoidSpec tangent_prolongation_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "pair cotangent tangent prolongation";
    s.desc = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const SlotCorner p0m{p0.element(), one};
    const SlotCorner mp0{one, p0.element()};
    s.omega_fiber = {p0m, mp0, p0m, mp0};
    s.side_fiber = {p0m, mp0};
    detail::attach_cotangent_pair_base(s, p0);
    s.src = [](const VBPoint& x) {
        return VBPoint{{-x.fiber[2], x.fiber[3]}, {-x.base[2], x.base[3]}};
    };
    s.tgt = [](const VBPoint& x) {
        return VBPoint{{x.fiber[0], x.fiber[1]}, {x.base[0], x.base[1]}};
    };
    s.unit = [](const VBPoint& e) {
        return VBPoint{{e.fiber[0], e.fiber[1], -e.fiber[0], e.fiber[1]},
                       {e.base[0], e.base[1], -e.base[0], e.base[1]}};
    };
    s.inv = [](const VBPoint& x) {
        return VBPoint{{-x.fiber[2], x.fiber[3], -x.fiber[0], x.fiber[1]},
                       {-x.base[2], x.base[3], -x.base[0], x.base[1]}};
    };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(
            std::max({dist(-1.0 * a.fiber[2], b.fiber[0]), dist(a.fiber[3], b.fiber[1]),
                      dist(-1.0 * a.base[2], b.base[0]), dist(a.base[3], b.base[1])}),
            tuple_norm(a.fiber) + tuple_norm(a.base),
            "velocity arrows do not match source to target");
        return VBPoint{{a.fiber[0], a.fiber[1], b.fiber[2], b.fiber[3]},
                       {a.base[0], a.base[1], b.base[2], b.base[3]}};
    };
    s.core.slots = {p0m, mp0};
    s.core.inject = [](const CoordTuple& m, const CoordTuple& k) {
        const AlgebraElement zphi = AlgebraElement::zero(k[0].descriptor());
        const AlgebraElement zeta = AlgebraElement::zero(k[0].descriptor());
        return VBPoint{{k[0], k[1], zphi, zeta}, {m[0], m[1], -m[0], m[1]}};
    };
    return s;
}

/// Covectors of covector pairs: fibres (fphi, feta, fpsi, fxi) in the
/// opposite corners over the cotangent-pair arrows; the displayed dual
/// structure (source (fpsi, -fxi), unit (a, b, a, -b), matching product).
inline VBGroupoidSpec dual_prolongation_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "pair cotangent dual prolongation";
    s.desc = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const SlotCorner p0m{p0.element(), one};
    const SlotCorner mp0{one, p0.element()};
    s.omega_fiber = {mp0, p0m, mp0, p0m};
    s.side_fiber = {mp0, p0m};
    detail::attach_cotangent_pair_base(s, p0);
    s.src = [](const VBPoint& x) {
        return VBPoint{{x.fiber[2], -x.fiber[3]}, {-x.base[2], x.base[3]}};
    };
    s.tgt = [](const VBPoint& x) {
        return VBPoint{{x.fiber[0], x.fiber[1]}, {x.base[0], x.base[1]}};
    };
    s.unit = [](const VBPoint& e) {
        return VBPoint{{e.fiber[0], e.fiber[1], e.fiber[0], -e.fiber[1]},
                       {e.base[0], e.base[1], -e.base[0], e.base[1]}};
    };
    s.inv = [](const VBPoint& x) {
        return VBPoint{{x.fiber[2], -x.fiber[3], x.fiber[0], -x.fiber[1]},
                       {-x.base[2], x.base[3], -x.base[0], x.base[1]}};
    };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(
            std::max({dist(a.fiber[2], b.fiber[0]), dist(-1.0 * a.fiber[3], b.fiber[1]),
                      dist(-1.0 * a.base[2], b.base[0]), dist(a.base[3], b.base[1])}),
            tuple_norm(a.fiber) + tuple_norm(a.base),
            "dual velocity arrows do not match source to target");
        return VBPoint{{a.fiber[0], a.fiber[1], b.fiber[2], b.fiber[3]},
                       {a.base[0], a.base[1], b.base[2], b.base[3]}};
    };
    return s;
}

/// Velocities of additive-corner arrows: fibres (dchi, v, w) over
/// (chi, eta, xi), adding in the corner leg.
inline VBGroupoidSpec additive_tangent_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "additive pair tangent prolongation";
    s.desc = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const SlotCorner corner{p0.element(), p0.element()};
    const SlotCorner mp0{one, p0.element()};
    s.omega_fiber = {corner, mp0, mp0};
    s.side_fiber = {mp0};
    detail::attach_additive_base(s, p0);
    s.src = [](const VBPoint& x) { return VBPoint{{x.fiber[2]}, {x.base[2]}}; };
    s.tgt = [](const VBPoint& x) { return VBPoint{{x.fiber[1]}, {x.base[1]}}; };
    s.unit = [d = s.desc](const VBPoint& e) {
        return VBPoint{{AlgebraElement::zero(d), e.fiber[0], e.fiber[0]},
                       {AlgebraElement::zero(d), e.base[0], e.base[0]}};
    };
    s.inv = [](const VBPoint& x) {
        return VBPoint{{-x.fiber[0], x.fiber[2], x.fiber[1]},
                       {-x.base[0], x.base[2], x.base[1]}};
    };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(std::max(dist(a.fiber[2], b.fiber[1]), dist(a.base[2], b.base[1])),
                              tuple_norm(a.fiber) + tuple_norm(a.base),
                              "additive velocity arrows do not match source to target");
        return VBPoint{{a.fiber[0] + b.fiber[0], a.fiber[1], b.fiber[2]},
                       {a.base[0] + b.base[0], a.base[1], b.base[2]}};
    };
    s.core.slots = {corner, mp0};
    s.core.inject = [d = s.desc](const CoordTuple& m, const CoordTuple& k) {
        const AlgebraElement zero = AlgebraElement::zero(d);
        return VBPoint{{k[0], k[1], zero}, {zero, m[0], m[0]}};
    };
    return s;
}

/// Covectors of additive-corner arrows: fibres (fchi, fphi, fpsi) over
/// (chi, eta, xi); the corner covector is shared along compositions.
inline VBGroupoidSpec additive_dual_spec(const ProjectionElement& p0) {
    VBGroupoidSpec s;
    s.name = "additive pair dual prolongation";
    s.desc = p0.descriptor();
    const AlgebraElement one = AlgebraElement::identity(s.desc);
    const SlotCorner corner{p0.element(), p0.element()};
    const SlotCorner p0m{p0.element(), one};
    s.omega_fiber = {corner, p0m, p0m};
    s.side_fiber = {corner, p0m};
    detail::attach_additive_base(s, p0);
    s.src = [](const VBPoint& x) { return VBPoint{{x.fiber[0], -x.fiber[2]}, {x.base[2]}}; };
    s.tgt = [](const VBPoint& x) { return VBPoint{{x.fiber[0], x.fiber[1]}, {x.base[1]}}; };
    s.unit = [d = s.desc](const VBPoint& e) {
        return VBPoint{{e.fiber[0], e.fiber[1], -e.fiber[1]},
                       {AlgebraElement::zero(d), e.base[0], e.base[0]}};
    };
    s.inv = [](const VBPoint& x) {
        return VBPoint{{x.fiber[0], -x.fiber[2], -x.fiber[1]},
                       {-x.base[0], x.base[2], x.base[1]}};
    };
    s.prod = [](const VBPoint& a, const VBPoint& b) {
        detail::require_match(
            std::max({dist(a.fiber[0], b.fiber[0]), dist(-1.0 * a.fiber[2], b.fiber[1]),
                      dist(a.base[2], b.base[1])}),
            tuple_norm(a.fiber) + tuple_norm(a.base),
            "additive covector arrows do not match source to target");
        return VBPoint{{a.fiber[0], a.fiber[1], b.fiber[2]},
                       {a.base[0] + b.base[0], a.base[1], b.base[2]}};
    };
    return s;
}

// ---------------------------------------------------------------------------
// Domain types of the pair tower
// ---------------------------------------------------------------------------

/// An arrow of the covector-pair groupoid with validated corners.
struct PairCotangentArrow {
    AlgebraElement phi, psi; ///< covector legs in p0 M
    BundlePoint eta, xi;     ///< base legs

    PairCotangentArrow(AlgebraElement phi_in, BundlePoint eta_in, AlgebraElement psi_in,
                       BundlePoint xi_in)
        : phi(std::move(phi_in)), psi(std::move(psi_in)), eta(std::move(eta_in)),
          xi(std::move(xi_in)) {
        const AlgebraElement p0 = eta.p0().element();
        if (dist(p0 * phi, phi) > 1e-10 * std::max(1.0, phi.norm()) ||
            dist(p0 * psi, psi) > 1e-10 * std::max(1.0, psi.norm()))
            throw CornerError("covector legs must lie in the dual corner p0 M");
    }

    VBPoint point() const { return VBPoint{{phi, psi}, {eta.element(), xi.element()}}; }
};

/// An arrow of the additive-corner groupoid with validated corner.
struct RightArrow {
    AlgebraElement chi; ///< corner label in p0 M p0
    BundlePoint eta, xi;

    RightArrow(AlgebraElement chi_in, BundlePoint eta_in, BundlePoint xi_in)
        : chi(std::move(chi_in)), eta(std::move(eta_in)), xi(std::move(xi_in)) {
        const AlgebraElement p0 = eta.p0().element();
        if (dist(p0 * chi * p0, chi) > 1e-10 * std::max(1.0, chi.norm()))
            throw CornerError("corner label must lie in p0 M p0");
    }

    VBPoint point() const { return VBPoint{{chi}, {eta.element(), xi.element()}}; }
};

/// Environment with both covector-pair legs declared in their corners.
inline Env pair_env(const PairCotangentArrow& at) {
    const AlgebraElement one = AlgebraElement::identity(at.phi.descriptor());
    const AlgebraElement p0 = at.eta.p0().element();
    Env env;
    env.set_cornered("phi", at.phi, p0, one);
    env.set_cornered("eta", at.eta.element(), one, p0);
    env.set_cornered("psi", at.psi, p0, one);
    env.set_cornered("xi", at.xi.element(), one, p0);
    return env;
}

/// Canonical bracket of the covector-pair carrier: the sum of the two
/// single-leg canonical brackets.
inline cplx pair_bracket(const Observable& f, const Observable& g,
                         const PairCotangentArrow& at) {
    const Env env = pair_env(at);
    return pairing(g.deriv(env, "eta"), f.deriv(env, "phi")) -
           pairing(f.deriv(env, "eta"), g.deriv(env, "phi")) +
           pairing(g.deriv(env, "xi"), f.deriv(env, "psi")) -
           pairing(f.deriv(env, "xi"), g.deriv(env, "psi"));
}

// ---------------------------------------------------------------------------
// Momentum maps and flat anchors of the pair tower
// ---------------------------------------------------------------------------

/// Momentum of a covector pair: phi eta + psi xi in p0 M p0.
inline AlgebraElement pair_momentum(const PairCotangentArrow& at) {
    return at.phi * at.eta.element() + at.psi * at.xi.element();
}

/// Membership in the zero-momentum subbundle.
inline bool in_zero_momentum_pair(const PairCotangentArrow& at, double tol = 1e-10) {
    return pair_momentum(at).norm() <= tol;
}

/// A covector of the covector-pair carrier in the flat realization.
struct PairFlatCovector {
    FlatCovector left, right;
};

/// Sharp map of the pair carrier: each leg is the canonical swap
/// (theta, v) = (-eta_flat, phi_flat).
inline std::pair<TangentAtCotangent, TangentAtCotangent> sub_anchor_2(
    const PairFlatCovector& w, const PairCotangentArrow& at) {
    return {sub_anchor_1(w.left, CotangentPoint(at.phi, at.eta)),
            sub_anchor_1(w.right, CotangentPoint(at.psi, at.xi))};
}

/// Single-leg flat momentum eta_flat eta - phi phi_flat in p0 M p0.
inline AlgebraElement j1_flat(const FlatCovector& w, const CotangentPoint& at) {
    return w.eta_flat * at.eta.element() - at.phi * w.phi_flat;
}

/// Pair flat momentum: the sum of the two single-leg flat momenta.
inline AlgebraElement j2_flat(const PairFlatCovector& w, const PairCotangentArrow& at) {
    return j1_flat(w.left, CotangentPoint(at.phi, at.eta)) +
           j1_flat(w.right, CotangentPoint(at.psi, at.xi));
}

/// Flat momentum of the additive tower: [chi, chi_flat] + phi eta + psi xi,
/// the corner-coadjoint term plus the pair momentum of the covector legs.
inline AlgebraElement j_flat(const AlgebraElement& chi_flat, const AlgebraElement& chi,
                             const AlgebraElement& phi, const AlgebraElement& eta,
                             const AlgebraElement& psi, const AlgebraElement& xi) {
    return commutator(chi, chi_flat) + phi * eta + psi * xi;
}

/// Sharp map of the dual prolongation in tuple form: covector fibres
/// (fphi, feta, fpsi, fxi) over an arrow go to the velocities
/// (-feta, fphi, -fxi, fpsi) over the same arrow.
inline VBPoint sharp_pair_prolonged(const VBPoint& dual_arrow) {
    return VBPoint{{-dual_arrow.fiber[1], dual_arrow.fiber[0], -dual_arrow.fiber[3],
                    dual_arrow.fiber[2]},
                   dual_arrow.base};
}

/// Sharp map of the side bundles: (fc, fb) over a covector point goes to the
/// velocity (-fb, fc).
inline VBPoint sharp_pair_side(const VBPoint& dual_side) {
    return VBPoint{{-dual_side.fiber[1], dual_side.fiber[0]}, dual_side.base};
}

/// Sharp map of the additive dual tower: (fchi, fphi, fpsi) over
/// (chi, eta, xi) goes to the coadjoint velocity (-[chi, fchi], 0, 0).
inline VBPoint sharp_additive(const VBPoint& dual_arrow) {
    const AlgebraDescriptor& d = dual_arrow.fiber[0].descriptor();
    return VBPoint{{-commutator(dual_arrow.base[0], dual_arrow.fiber[0]),
                    AlgebraElement::zero(d), AlgebraElement::zero(d)},
                   dual_arrow.base};
}

/// Side map over the additive tower: every dual side point goes to the zero
/// velocity over its base point.
inline VBPoint sharp_additive_side(const VBPoint& dual_side) {
    const AlgebraDescriptor& d = dual_side.fiber[0].descriptor();
    return VBPoint{{AlgebraElement::zero(d)}, dual_side.base};
}

// ---------------------------------------------------------------------------
// Sharp-morphism verification
// ---------------------------------------------------------------------------

/// Worst residuals of the four morphism equalities (source, target, inverse,
/// product) for the sharp maps of both towers.
struct SharpMorphismReport {
    double src_pair = 0.0, tgt_pair = 0.0, inv_pair = 0.0, prod_pair = 0.0;
    double src_additive = 0.0, tgt_additive = 0.0, inv_additive = 0.0, prod_additive = 0.0;
    int samples = 0;

    double max_residual() const {
        return std::max({src_pair, tgt_pair, inv_pair, prod_pair, src_additive, tgt_additive,
                         inv_additive, prod_additive});
    }
    bool pass(double tol) const { return max_residual() <= tol; }
};

/** Verify that the sharp maps intertwine the structural maps of the dual
    and tangent prolongations on random tuples: the side maps swap (or kill)
    the dual side fibres, the inverse and product commute with the sharp
    map.  All equalities are linear identities; `flip_sign` corrupts one
    component as a negative control. */
inline SharpMorphismReport sharp_morphism_check(const ProjectionElement& p0, int n, Rng& rng,
                                                bool flip_sign = false) {
    const VBGroupoidSpec tp = tangent_prolongation_spec(p0);
    const VBGroupoidSpec dp = dual_prolongation_spec(p0);
    const VBGroupoidSpec ta = additive_tangent_spec(p0);
    const VBGroupoidSpec da = additive_dual_spec(p0);
    const double sign = flip_sign ? -1.0 : 1.0;
    auto sharp2 = [sign](const VBPoint& x) {
        VBPoint out = sharp_pair_prolonged(x);
        out.fiber[0] = sign * out.fiber[0];
        return out;
    };
    SharpMorphismReport r;
    r.samples = n;
    for (int i = 0; i < n; ++i) {
        const VBPoint phi = vb_sample_arrow(dp, dp.sample_base(rng), rng);
        r.tgt_pair = std::max(r.tgt_pair,
                              vb_dist(tp.tgt(sharp2(phi)), sharp_pair_side(dp.tgt(phi))));
        r.src_pair = std::max(r.src_pair,
                              vb_dist(tp.src(sharp2(phi)), sharp_pair_side(dp.src(phi))));
        r.inv_pair = std::max(r.inv_pair, vb_dist(tp.inv(sharp2(phi)), sharp2(dp.inv(phi))));
        const auto [a, b] = vb_sample_composable(dp, rng);
        r.prod_pair = std::max(r.prod_pair, vb_dist(tp.prod(sharp2(a), sharp2(b)),
                                                    sharp2(dp.prod(a, b))));

        const VBPoint psi = vb_sample_arrow(da, da.sample_base(rng), rng);
        r.tgt_additive = std::max(
            r.tgt_additive, vb_dist(ta.tgt(sharp_additive(psi)), sharp_additive_side(da.tgt(psi))));
        r.src_additive = std::max(
            r.src_additive, vb_dist(ta.src(sharp_additive(psi)), sharp_additive_side(da.src(psi))));
        r.inv_additive = std::max(r.inv_additive, vb_dist(ta.inv(sharp_additive(psi)),
                                                          sharp_additive(da.inv(psi))));
        const auto [c, d] = vb_sample_composable(da, rng);
        r.prod_additive = std::max(r.prod_additive, vb_dist(ta.prod(sharp_additive(c),
                                                                    sharp_additive(d)),
                                                            sharp_additive(da.prod(c, d))));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Gauge-coset representatives of tangent vectors
// ---------------------------------------------------------------------------

/// A velocity of the covector carrier: covector and base components.
struct CotangentVelocity {
    AlgebraElement phi_dot, eta_dot;
};

/// Shift along the gauge orbit: (phi_dot - x phi, eta_dot + eta x).
inline CotangentVelocity gauge_shift(const CotangentVelocity& v, const CotangentPoint& at,
                                     const AlgebraElement& x) {
    return CotangentVelocity{v.phi_dot - x * at.phi, v.eta_dot + at.eta.element() * x};
}

/// Canonical coset representative: the shift by the least-squares corner
/// element x = -eta^{-1} eta_dot, whose base component is horizontal.
inline CotangentVelocity coset_representative(const CotangentVelocity& v,
                                              const CotangentPoint& at) {
    return gauge_shift(v, at, -1.0 * (partial_inverse(at.eta.element()) * v.eta_dot));
}

/// Constructive recovery of the gauge element between coset-equal
/// velocities: x with v' = shift(v, x), from the base components.
inline AlgebraElement coset_gauge_between(const CotangentVelocity& v,
                                          const CotangentVelocity& vp,
                                          const CotangentPoint& at) {
    return partial_inverse(at.eta.element()) * (vp.eta_dot - v.eta_dot);
}

/// Distance of two velocities through their canonical representatives.
inline double coset_distance(const CotangentVelocity& v, const CotangentVelocity& vp,
                             const CotangentPoint& at) {
    const CotangentVelocity a = coset_representative(v, at);
    const CotangentVelocity b = coset_representative(vp, at);
    return std::max(dist(a.phi_dot, b.phi_dot), dist(a.eta_dot, b.eta_dot));
}

/// A velocity of the covector-pair carrier.
struct PairVelocity {
    CotangentVelocity left, right;
};

/// Joint shift of a pair velocity by one corner element on both legs.
inline PairVelocity gauge_shift2(const PairVelocity& v, const PairCotangentArrow& at,
                                 const AlgebraElement& x) {
    return PairVelocity{gauge_shift(v.left, CotangentPoint(at.phi, at.eta), x),
                        gauge_shift(v.right, CotangentPoint(at.psi, at.xi), x)};
}

/// Canonical representative of the joint coset: the stacked least-squares
/// corner element over both base legs.
inline PairVelocity coset_representative2(const PairVelocity& v, const PairCotangentArrow& at) {
    const AlgebraElement eta = at.eta.element();
    const AlgebraElement xi = at.xi.element();
    const AlgebraElement gram = eta.adjoint() * eta + xi.adjoint() * xi;
    const AlgebraElement x = -1.0 * (partial_inverse(gram) *
                                     (eta.adjoint() * v.left.eta_dot +
                                      xi.adjoint() * v.right.eta_dot));
    return gauge_shift2(v, at, x);
}

inline double coset_distance2(const PairVelocity& v, const PairVelocity& vp,
                              const PairCotangentArrow& at) {
    const PairVelocity a = coset_representative2(v, at);
    const PairVelocity b = coset_representative2(vp, at);
    return std::max({dist(a.left.phi_dot, b.left.phi_dot), dist(a.left.eta_dot, b.left.eta_dot),
                     dist(a.right.phi_dot, b.right.phi_dot),
                     dist(a.right.eta_dot, b.right.eta_dot)});
}

/// Canonical representative of a bundle-point velocity coset: the component
/// orthogonal to the gauge directions.
inline AlgebraElement coset_representative_point(const AlgebraElement& v,
                                                 const BundlePoint& eta) {
    const AlgebraElement x = -1.0 * (partial_inverse(eta.element()) * v);
    return v + eta.element() * x;
}

/// A velocity of the additive-corner carrier.
struct RightVelocity {
    AlgebraElement chi_dot, v, w;
};

/// Joint shift of an additive-tower velocity: the corner leg moves by the
/// coadjoint action, the base legs by the gauge directions.
inline RightVelocity gauge_shift_right(const RightVelocity& u, const RightArrow& at,
                                       const AlgebraElement& x) {
    return RightVelocity{u.chi_dot + commutator(at.chi, x), u.v + at.eta.element() * x,
                         u.w + at.xi.element() * x};
}

/// Canonical representative over both base legs (stacked least squares).
inline RightVelocity coset_representative_right(const RightVelocity& u, const RightArrow& at) {
    const AlgebraElement eta = at.eta.element();
    const AlgebraElement xi = at.xi.element();
    const AlgebraElement gram = eta.adjoint() * eta + xi.adjoint() * xi;
    const AlgebraElement x =
        -1.0 * (partial_inverse(gram) * (eta.adjoint() * u.v + xi.adjoint() * u.w));
    return gauge_shift_right(u, at, x);
}

} // namespace bgl
