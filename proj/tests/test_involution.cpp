/** \file test_involution.cpp
    The arrow involution J, partial isometries and their classification,
    isometric arrow charts, Hermitian charts on unitary arrows, and the
    complement involution on the projection lattice.

    Frozen hand oracles:
      J(e12) = e12, J(2 e12) = e12/2, and on the section leg
      x = e11 + t e21: J(x) = x/(1+t^2) (legs are not J-fixed);
      scalar chart p = p~ = z0 = e11 in M2: x = e^{i theta} e11 gives
      h = theta e11 for theta in (-pi, pi) and the branch cut at theta = pi;
      complement transition at p = e11: y = t e21 maps to -t e12.
*/
#include <catch2/catch_amalgamated.hpp>

#include "bgl/bundle.hpp"
#include "bgl/involution.hpp"

using namespace bgl;

namespace {

const AlgebraDescriptor kM2({2});
const AlgebraDescriptor kM3({3});
const AlgebraDescriptor kM21({2, 1});

AlgebraElement e(const AlgebraDescriptor& d, int k, int i, int j) {
    return matrix_unit(d, k, i, j);
}

/// Partial isometry with source p and target of equal rank: the isometric
/// polar part of a generic compression q w p.
AlgebraElement random_isometry(const ProjectionElement& q, const ProjectionElement& p,
                               Rng& rng) {
    return polar_decompose(q.element() * random_element(p.descriptor(), rng) * p.element()).u;
}

/// Random corner coordinate in (1-p)Mp of norm about `scale`.
AlgebraElement random_corner(const ProjectionElement& p, Rng& rng, double scale) {
    const AlgebraElement one = AlgebraElement::identity(p.descriptor());
    const AlgebraElement raw =
        (one - p.element()) * random_element(p.descriptor(), rng) * p.element();
    return (scale / std::max(1e-12, raw.norm())) * raw;
}

/// Random Hermitian element of the corner pt M pt with Frobenius norm
/// `scale` (so all eigenvalues stay within [-scale, scale]).
AlgebraElement corner_hermitian(const ProjectionElement& pt, Rng& rng, double scale) {
    const AlgebraElement a =
        pt.element() * random_element(pt.descriptor(), rng) * pt.element();
    const AlgebraElement sym = a + a.adjoint();
    return (scale / std::max(1e-12, sym.norm())) * sym;
}

std::vector<int> random_ranks(const AlgebraDescriptor& d, Rng& rng) {
    std::vector<int> r;
    for (int k = 0; k < d.blocks(); ++k)
        r.push_back(static_cast<int>(rng.integer(static_cast<std::uint64_t>(d.dim(k)) + 1)));
    return r;
}

} // namespace

TEST_CASE("adjoint of the partial inverse on frozen arrows") {
    const GroupoidElement u(e(kM2, 0, 0, 1));
    CHECK(dist(j_involution(u).element(), e(kM2, 0, 0, 1)) < 1e-14);

    const GroupoidElement x2(2.0 * e(kM2, 0, 0, 1));
    CHECK(dist(j_involution(x2).element(), 0.5 * e(kM2, 0, 0, 1)) < 1e-14);

    // a section leg p + y is not J-fixed: J scales it by 1/(1+t^2)
    const double t = 0.7;
    const AlgebraElement leg = e(kM2, 0, 0, 0) + t * e(kM2, 0, 1, 0);
    CHECK(dist(j_involution(GroupoidElement(leg)).element(), (1.0 / (1.0 + t * t)) * leg) <
          1e-12);
}

TEST_CASE("the involution is an involutive automorphism of composition") {
    Rng rng(901);
    for (const AlgebraDescriptor& d : {kM2, kM3, kM21}) {
        for (int rep = 0; rep < 6; ++rep) {
            const GroupoidElement x(random_element(d, rng));
            const double scale = std::max(1.0, x.element().norm());

            const GroupoidElement jx = j_involution(x);
            CHECK(dist(j_involution(jx).element(), x.element()) <= 1e-10 * scale);
            CHECK(dist(jx.src().element(), x.src().element()) <= 1e-10);
            CHECK(dist(jx.tgt().element(), x.tgt().element()) <= 1e-10);

            // composable pair through shared middle projection
            std::vector<int> ranks;
            for (int k = 0; k < d.blocks(); ++k) ranks.push_back(d.dim(k) > 1 ? 1 : 0);
            const ProjectionElement qa = random_projection(d, ranks, rng);
            const ProjectionElement qb = random_projection(d, ranks, rng);
            const ProjectionElement qc = random_projection(d, ranks, rng);
            const GroupoidElement a(qa.element() * random_element(d, rng) * qb.element());
            const GroupoidElement b(qb.element() * random_element(d, rng) * qc.element());
            const GroupoidElement ab = compose(a, b);
            const GroupoidElement jab = compose(j_involution(a), j_involution(b));
            CHECK(dist(j_involution(ab).element(), jab.element()) <=
                  1e-10 * std::max(1.0, ab.element().norm()));
        }
    }
}

TEST_CASE("fixed points are exactly the partial isometries") {
    Rng rng(902);
    const AlgebraDescriptor ds[3] = {kM2, kM3, kM21};
    int misclassified = 0;
    int plain_fixed = 0;
    int constructed_unfixed = 0;
    for (int i = 0; i < 1000; ++i) {
        const AlgebraDescriptor& d = ds[i % 3];
        AlgebraElement x = AlgebraElement::zero(d);
        const bool constructed = (i % 2 == 0);
        if (constructed) {
            const std::vector<int> ranks = random_ranks(d, rng);
            x = random_isometry(random_projection(d, ranks, rng),
                                random_projection(d, ranks, rng), rng);
        } else {
            x = random_element(d, rng);
        }
        const bool j_fixed =
            dist(j_involution(GroupoidElement(x)).element(), x) <= 1e-8;
        const bool defect_small = is_partial_isometry(x, 1e-8);
        if (j_fixed != defect_small) ++misclassified;
        if (constructed && !j_fixed) ++constructed_unfixed;
        if (!constructed && j_fixed) ++plain_fixed;
    }
    CHECK(misclassified == 0);
    CHECK(constructed_unfixed == 0);
    CHECK(plain_fixed == 0);

    // the certified wrapper accepts isometries and rejects the rest
    const AlgebraElement good =
        random_isometry(random_projection(kM3, {2}, rng), random_projection(kM3, {2}, rng), rng);
    const PartialIsometry cert(good);
    CHECK(dist(cert.tgt().element() * good, good) < 1e-12);
    CHECK(dist(good * cert.src().element(), good) < 1e-12);
    CHECK_THROWS_AS(PartialIsometry(2.0 * e(kM2, 0, 0, 1)), ProjectionError);
    CHECK_THROWS_AS(PartialIsometry(random_element(kM3, rng)), ProjectionError);
}

TEST_CASE("isometric arrow charts split J into the middle factor") {
    Rng rng(903);
    for (const AlgebraDescriptor& d : {kM3, kM21}) {
        std::vector<int> ranks;
        for (int k = 0; k < d.blocks(); ++k) ranks.push_back(d.dim(k) > 1 ? d.dim(k) - 1 : 1);
        for (int rep = 0; rep < 5; ++rep) {
            const ProjectionElement p = random_projection(d, ranks, rng);
            const ProjectionElement pt = random_projection(d, ranks, rng);
            const AlgebraElement y = random_corner(p, rng, 0.6);
            const AlgebraElement yt = random_corner(pt, rng, 0.6);
            const AlgebraElement z =
                p.element() * random_element(d, rng) * pt.element();

            const GroupoidElement x =
                chart_psi_iso_inv(GroupoidChartTriple{p, pt, y, z, yt});
            const GroupoidChartTriple t = chart_psi_iso(p, pt, x);
            CHECK(dist(t.y_p, y) <= 1e-9);
            CHECK(dist(t.yt, yt) <= 1e-9);
            CHECK(dist(t.z, z) <= 1e-9 * std::max(1.0, z.norm()));
            CHECK(dist(chart_psi_iso_inv(t).element(), x.element()) <=
                  1e-9 * std::max(1.0, x.element().norm()));

            // corner coordinates agree with the plain arrow chart
            const GroupoidChartTriple plain = chart_psi(p, pt, x);
            CHECK(dist(plain.y_p, t.y_p) <= 1e-10);
            CHECK(dist(plain.yt, t.yt) <= 1e-10);

            // J fixes the corners and acts on the middle alone
            const GroupoidChartTriple tj = chart_psi_iso(p, pt, j_involution(x));
            CHECK(dist(tj.y_p, t.y_p) <= 1e-9);
            CHECK(dist(tj.yt, t.yt) <= 1e-9);
            CHECK(dist(tj.z, j_involution(GroupoidElement(t.z)).element()) <=
                  1e-9 * std::max(1.0, t.z.norm()));

            // corner-unitary middle <=> the arrow is a partial isometry
            const AlgebraElement zu = polar_decompose(z).u;
            const GroupoidElement xu =
                chart_psi_iso_inv(GroupoidChartTriple{p, pt, y, zu, yt});
            CHECK(is_partial_isometry(xu.element(), 1e-9));
            CHECK(dist(zu * zu.adjoint(), p.element()) <= 1e-10);
            const GroupoidElement xs =
                chart_psi_iso_inv(GroupoidChartTriple{p, pt, y, 1.3 * zu, yt});
            CHECK_FALSE(is_partial_isometry(xs.element(), 1e-3));
        }
    }
}

TEST_CASE("unitary charts have Hermitian generators and round trip") {
    Rng rng(904);
    for (const AlgebraDescriptor& d : {kM3, kM21}) {
        std::vector<int> ranks;
        for (int k = 0; k < d.blocks(); ++k) ranks.push_back(d.dim(k) > 1 ? d.dim(k) - 1 : 1);
        for (int rep = 0; rep < 5; ++rep) {
            const ProjectionElement p = random_projection(d, ranks, rng);
            const ProjectionElement pt = random_projection(d, ranks, rng);
            const AlgebraElement z0 = random_isometry(p, pt, rng);

            // the reference frame itself sits at the origin of the chart
            const UnitaryChartTriple at0 = unitary_chart(p, pt, z0, GroupoidElement(z0));
            CHECK(at0.y_p.norm() <= 1e-10);
            CHECK(at0.h.norm() <= 1e-10);
            CHECK(at0.yt.norm() <= 1e-10);

            // random unitary arrow built from Hermitian corner data
            const AlgebraElement y = random_corner(p, rng, 0.5);
            const AlgebraElement yt = random_corner(pt, rng, 0.5);
            const AlgebraElement h0 = corner_hermitian(pt, rng, 0.8);
            const GroupoidElement x =
                unitary_chart_inv(z0, UnitaryChartTriple{p, pt, y, h0, yt});
            CHECK(is_partial_isometry(x.element(), 1e-9));

            const UnitaryChartTriple t = unitary_chart(p, pt, z0, x);
            CHECK(dist(t.h, h0) <= 1e-9);
            CHECK(dist(t.h.adjoint(), t.h) <= 1e-9);
            CHECK(dist(t.y_p, y) <= 1e-9);
            CHECK(dist(t.yt, yt) <= 1e-9);
            CHECK(dist(unitary_chart_inv(z0, t).element(), x.element()) <= 1e-9);

            // an independent corner unitary also charts to a Hermitian h
            const AlgebraElement zu =
                polar_decompose(p.element() * random_element(d, rng) * pt.element()).u;
            const GroupoidElement x2 =
                chart_psi_iso_inv(GroupoidChartTriple{p, pt, y, zu, yt});
            const UnitaryChartTriple t2 = unitary_chart(p, pt, z0, x2);
            CHECK(dist(t2.h.adjoint(), t2.h) <= 1e-9);
            CHECK(dist(unitary_chart_inv(z0, t2).element(), x2.element()) <= 1e-9);

            // non-unitary middle shows up as an anti-Hermitian defect
            const GroupoidElement xbad =
                chart_psi_iso_inv(GroupoidChartTriple{p, pt, y, 1.3 * z0, yt});
            const UnitaryChartTriple tbad = unitary_chart(p, pt, z0, xbad);
            CHECK(dist(tbad.h.adjoint(), tbad.h) > 1e-3);

            CHECK_THROWS_AS(unitary_chart(p, pt, 1.3 * z0, x), CornerError);
        }
    }

    // frozen scalar chart in M2
    const ProjectionElement p(e(kM2, 0, 0, 0));
    const AlgebraElement z0 = e(kM2, 0, 0, 0);
    for (double theta : {-3.0, -1.0, 0.5, 3.0}) {
        const GroupoidElement x(cplx(std::cos(theta), std::sin(theta)) * e(kM2, 0, 0, 0));
        const UnitaryChartTriple t = unitary_chart(p, p, z0, x);
        CHECK(dist(t.h, theta * e(kM2, 0, 0, 0)) <= 1e-12);
    }
    const GroupoidElement xpi(cplx(-1.0, 0.0) * e(kM2, 0, 0, 0));
    CHECK_THROWS_AS(unitary_chart(p, p, z0, xpi), LogBranchError);

    // arrows outside the chart domain are rejected before taking logs
    const ProjectionElement pbig(e(kM3, 0, 0, 0) + e(kM3, 0, 1, 1));
    CHECK_THROWS_AS(
        unitary_chart(pbig, pbig, pbig.element(), GroupoidElement(e(kM3, 0, 2, 2))),
        NotInChart);
}

TEST_CASE("complement involution on the lattice") {
    Rng rng(905);

    // frozen curve at p = e11: y = t e21 maps to -t e12
    const ProjectionElement p2(e(kM2, 0, 0, 0));
    for (double t : {0.1, 1.0, 10.0}) {
        const AlgebraElement y = t * e(kM2, 0, 1, 0);
        CHECK(dist(perp_transition(p2, y), -t * e(kM2, 0, 0, 1)) <= 1e-12);
    }
    CHECK(perp_transition(p2, AlgebraElement::zero(kM2)).norm() <= 1e-13);
    CHECK_THROWS_AS(perp_transition(p2, e(kM2, 0, 1, 1)), NotInChart);

    for (const AlgebraDescriptor& d : {kM2, kM3, kM21}) {
        for (int rep = 0; rep < 6; ++rep) {
            std::vector<int> ranks = random_ranks(d, rng);
            bool proper = false; // keep 0 < rank < dim in at least one block
            for (int k = 0; k < d.blocks(); ++k)
                proper = proper || (ranks[k] > 0 && ranks[k] < d.dim(k));
            if (!proper) ranks[0] = std::max(1, d.dim(0) - 1);
            const ProjectionElement p = random_projection(d, ranks, rng);

            // contravariant rank bookkeeping
            for (int k = 0; k < d.blocks(); ++k)
                CHECK(perp(p).rank(k) == d.dim(k) - p.rank(k));

            const AlgebraElement y = random_corner(p, rng, 0.8);
            const AlgebraElement yp = perp_transition(p, y);

            // same point through the lattice charts directly
            const AlgebraElement one = AlgebraElement::identity(d);
            const ProjectionElement q = chart_phi_inv(p, y);
            const AlgebraElement via =
                chart_phi(perp(p), ProjectionElement(one - q.element()));
            CHECK(dist(yp, via) <= 1e-9 * std::max(1.0, yp.norm()));

            // involutive through the charts
            const AlgebraElement back = perp_transition(perp(p), yp);
            CHECK(dist(back, y) <= 1e-9 * std::max(1.0, y.norm()));
        }
    }
}

TEST_CASE("gauge arrows of isometric points are J-fixed") {
    Rng rng(906);
    const ProjectionElement p0 = random_projection(kM3, {2}, rng);
    const ProjectionElement full(AlgebraElement::identity(kM3));
    for (int rep = 0; rep < 6; ++rep) {
        const BundlePoint eta(random_isometry(full, p0, rng), p0);
        const BundlePoint xi(random_isometry(full, p0, rng), p0);
        const StructureGroupElement g(random_isometry(p0, p0, rng), p0);

        const GroupoidElement arrow = gauge_arrow(act(eta, g), act(xi, g));
        CHECK(is_partial_isometry(arrow.element(), 1e-9));
        CHECK(dist(j_involution(arrow).element(), arrow.element()) <= 1e-9);
        CHECK(dist(arrow.element(), gauge_arrow(eta, xi).element()) <= 1e-9);
    }
}
