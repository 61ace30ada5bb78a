/** \file test_tangent.cpp
    Tangent layer: chart quadruples and their transitions (finite-difference
    oracles against the base-chart transition), arrow-velocity transitions,
    vertical/horizontal splittings (single and pair), the semidirect tangent
    group and its action, left-translation flows, and chart cocycles.

    Frozen hand oracle (M2, p = p0 = e11, eta = e11):
      v = e21 has chart record a = e21, b = 0.
*/
#include <catch2/catch_amalgamated.hpp>

#include "bgl/tangent.hpp"

using namespace bgl;

namespace {

const AlgebraDescriptor kM2({2});
const AlgebraDescriptor kCM2({1, 2});

AlgebraElement e(const AlgebraDescriptor& d, int k, int i, int j) {
    return matrix_unit(d, k, i, j);
}

ProjectionElement corner_p0(const AlgebraDescriptor& d, const std::vector<int>& ranks) {
    AlgebraElement p = AlgebraElement::zero(d);
    for (int k = 0; k < d.blocks(); ++k)
        for (int r = 0; r < ranks[static_cast<std::size_t>(k)]; ++r) p.block(k)(r, r) = 1.0;
    return ProjectionElement(p);
}

BundlePoint random_point(const ProjectionElement& p0, Rng& rng) {
    return BundlePoint(random_element(p0.descriptor(), rng) * p0.element(), p0);
}

StructureGroupElement random_group(const ProjectionElement& p0, Rng& rng) {
    return StructureGroupElement(
        p0.element() * random_element(p0.descriptor(), rng) * p0.element() +
            2.0 * p0.element(),
        p0);
}

AlgebraElement random_corner(const AlgebraElement& l, const AlgebraElement& r, Rng& rng) {
    return l * random_element(l.descriptor(), rng) * r;
}

} // namespace

TEST_CASE("tangent chart: vertical vectors, frozen record, round trips") {
    const ProjectionElement p0(e(kM2, 0, 0, 0));
    const BundlePoint eta0(p0.element(), p0);

    // frozen: v = e21 at eta = e11 in the chart at p = e11
    const TangentChartQuad fr = t_chart(p0, TangentVector(e(kM2, 0, 1, 0), eta0));
    CHECK(dist(fr.a, e(kM2, 0, 1, 0)) < 1e-13);
    CHECK(fr.b.norm() < 1e-13);

    Rng rng(401);
    const ProjectionElement q0 = corner_p0(kCM2, {1, 1});
    const AlgebraElement one = AlgebraElement::identity(kCM2);
    int accepted = 0;
    while (accepted < 100) {
        const BundlePoint eta = random_point(q0, rng);
        const ProjectionElement p = random_projection(kCM2, {1, 1}, rng);
        if (!in_pi(p, gauge_base(eta))) continue;
        ++accepted;

        // vertical vectors have no base velocity
        const AlgebraElement x =
            random_corner(q0.element(), q0.element(), rng);
        const TangentChartQuad vert = t_chart(p, vertical_inject(x, eta));
        CHECK(vert.a.norm() < 1e-9);

        // corner memberships and round trip
        const TangentVector tv(random_element(kCM2, rng) * q0.element(), eta);
        const TangentChartQuad quad = t_chart(p, tv);
        CHECK(dist((one - p.element()) * quad.a * p.element(), quad.a) < 1e-9);
        CHECK(dist(p.element() * quad.b * p.element(), quad.b) < 1e-9);
        const TangentVector back = t_chart_inv(p, quad, q0);
        CHECK(dist(back.v, tv.v) < 1e-9 * std::max(1.0, tv.v.norm()));
        CHECK(dist(back.base.element(), eta.element()) < 1e-9);
    }
}

TEST_CASE("quadruple transition: identity, cross-check, FD oracle, linearity") {
    Rng rng(411);
    const ProjectionElement q0 = corner_p0(kCM2, {1, 1});
    const AlgebraElement one = AlgebraElement::identity(kCM2);

    int accepted = 0;
    while (accepted < 60) {
        const BundlePoint eta = random_point(q0, rng);
        const ProjectionElement p = random_projection(kCM2, {1, 1}, rng);
        const ProjectionElement pp = random_projection(kCM2, {1, 1}, rng);
        // margin guard keeps the FD probe inside both charts and the
        // corner inverses well conditioned
        const ProjectionElement gb = gauge_base(eta);
        if (in_pi_margin(p, gb) < 0.3 || in_pi_margin(pp, gb) < 0.3) continue;
        ++accepted;
        const TangentVector tv(random_element(kCM2, rng) * q0.element(), eta);
        const TangentChartQuad quad = t_chart(p, tv);

        // identity transition
        const TangentChartQuad same = t_transition(p, p, quad);
        CHECK(dist(same.a, quad.a) < 1e-10);
        CHECK(dist(same.b, quad.b) < 1e-10);

        // formula agrees with recomputing the chart at p'
        const TangentChartQuad via = t_transition(p, pp, quad);
        const TangentChartQuad direct = t_chart(pp, tv);
        const double scale = std::max(1.0, tv.v.norm());
        CHECK(dist(via.a, direct.a) < 1e-8 * scale);
        CHECK(dist(via.b, direct.b) < 1e-8 * scale);
        CHECK(dist(via.y, direct.y) < 1e-8);
        CHECK(dist(via.z, direct.z) < 1e-8 * scale);

        // a' is the finite difference of the base transition along a
        const double h = 1e-5;
        const AlgebraElement y_plus = lattice_transition(p, pp, quad.y + h * quad.a);
        const AlgebraElement y_minus = lattice_transition(p, pp, quad.y - h * quad.a);
        CHECK(dist(via.a, (1.0 / (2.0 * h)) * (y_plus - y_minus)) <
              1e-6 * std::max(1.0, via.a.norm()));

        // linearity in (a, b) at fixed base point
        const AlgebraElement a2 =
            random_corner(one - p.element(), p.element(), rng);
        const AlgebraElement b2 = random_corner(p.element(), p.element(), rng);
        const TangentChartQuad sum =
            t_transition(p, pp, TangentChartQuad{quad.a + a2, quad.b + b2, quad.y, quad.z});
        const TangentChartQuad second =
            t_transition(p, pp, TangentChartQuad{a2, b2, quad.y, quad.z});
        CHECK(dist(sum.a, via.a + second.a) < 1e-10 * std::max(1.0, sum.a.norm()));
        CHECK(dist(sum.b, via.b + second.b) < 1e-10 * std::max(1.0, sum.b.norm()));
    }

    // chain rule across three charts
    accepted = 0;
    while (accepted < 30) {
        const BundlePoint eta = random_point(q0, rng);
        const ProjectionElement p1 = random_projection(kCM2, {1, 1}, rng);
        const ProjectionElement p2 = random_projection(kCM2, {1, 1}, rng);
        const ProjectionElement p3 = random_projection(kCM2, {1, 1}, rng);
        const ProjectionElement gb = gauge_base(eta);
        if (in_pi_margin(p1, gb) < 0.3 || in_pi_margin(p2, gb) < 0.3 ||
            in_pi_margin(p3, gb) < 0.3)
            continue;
        ++accepted;
        const TangentVector tv(random_element(kCM2, rng) * q0.element(), eta);
        const TangentChartQuad q1 = t_chart(p1, tv);
        const TangentChartQuad stepped = t_transition(p2, p3, t_transition(p1, p2, q1));
        const TangentChartQuad direct = t_transition(p1, p3, q1);
        const double scale = std::max(1.0, tv.v.norm());
        CHECK(dist(stepped.a, direct.a) < 1e-8 * scale);
        CHECK(dist(stepped.b, direct.b) < 1e-8 * scale);
    }
}

TEST_CASE("arrow-velocity transition: identity, FD oracle, linearity") {
    Rng rng(421);
    const AlgebraDescriptor d = kCM2;
    const AlgebraElement one = AlgebraElement::identity(d);
    std::vector<int> ranks{1, 1};

    int accepted = 0;
    while (accepted < 40) {
        const ProjectionElement s = random_projection(d, ranks, rng);
        const ProjectionElement t = random_projection(d, ranks, rng);
        const AlgebraElement raw = t.element() * random_element(d, rng) * s.element();
        const GroupoidElement x((1.0 / raw.norm()) * raw);
        const ProjectionElement p = random_projection(d, ranks, rng);
        const ProjectionElement pt = random_projection(d, ranks, rng);
        const ProjectionElement pp = random_projection(d, ranks, rng);
        const ProjectionElement ptp = random_projection(d, ranks, rng);
        if (in_pi_margin(p, x.tgt()) < 0.3 || in_pi_margin(pt, x.src()) < 0.3 ||
            in_pi_margin(pp, x.tgt()) < 0.3 || in_pi_margin(ptp, x.src()) < 0.3)
            continue;
        ++accepted;

        const GroupoidChartTriple base = chart_psi(p, pt, x);
        const AlgebraElement a = random_corner(one - p.element(), p.element(), rng);
        const AlgebraElement b = random_corner(p.element(), pt.element(), rng);
        const AlgebraElement at = random_corner(one - pt.element(), pt.element(), rng);
        const TangentGroupoidCoords coords{a, b, at, base};

        // identity transition
        const TangentGroupoidCoords same = tangent_groupoid_transition(coords, p, pt);
        CHECK(dist(same.a, a) < 1e-10);
        CHECK(dist(same.b, b) < 1e-10);
        CHECK(dist(same.at, at) < 1e-10);

        // FD oracle: differentiate the base transition along the curve
        // (y + t a, z + t b, y~ + t a~)
        const TangentGroupoidCoords moved = tangent_groupoid_transition(coords, pp, ptp);
        const double h = 1e-5;
        const GroupoidChartTriple plus = groupoid_transition(
            GroupoidChartTriple{p, pt, base.y_p + h * a, base.z + h * b, base.yt + h * at},
            pp, ptp);
        const GroupoidChartTriple minus = groupoid_transition(
            GroupoidChartTriple{p, pt, base.y_p - h * a, base.z - h * b, base.yt - h * at},
            pp, ptp);
        const double inv_2h = 1.0 / (2.0 * h);
        CHECK(dist(moved.a, inv_2h * (plus.y_p - minus.y_p)) <
              1e-6 * std::max(1.0, moved.a.norm()));
        CHECK(dist(moved.b, inv_2h * (plus.z - minus.z)) <
              1e-6 * std::max(1.0, moved.b.norm()));
        CHECK(dist(moved.at, inv_2h * (plus.yt - minus.yt)) <
              1e-6 * std::max(1.0, moved.at.norm()));

        // exact linearity in the velocity slots
        const TangentGroupoidCoords doubled =
            tangent_groupoid_transition(TangentGroupoidCoords{2.0 * a, 2.0 * b, 2.0 * at, base},
                                        pp, ptp);
        CHECK(dist(doubled.a, 2.0 * moved.a) < 1e-12 * std::max(1.0, doubled.a.norm()));
        CHECK(dist(doubled.b, 2.0 * moved.b) < 1e-12 * std::max(1.0, doubled.b.norm()));
        CHECK(dist(doubled.at, 2.0 * moved.at) < 1e-12 * std::max(1.0, doubled.at.norm()));
    }
}

TEST_CASE("vertical/horizontal splitting is exact at every point") {
    Rng rng(431);
    const ProjectionElement q0 = corner_p0(kCM2, {1, 1});

    for (int trial = 0; trial < 50; ++trial) {
        const BundlePoint eta = random_point(q0, rng);
        const AlgebraElement x = random_corner(q0.element(), q0.element(), rng);
        const TangentVector vert = vertical_inject(x, eta);

        // image of the injection is killed by the projection
        CHECK(horizontal_project(vert).norm() < 1e-10 * std::max(1.0, x.norm()));

        // the projection only depends on the coset
        const TangentVector tv(random_element(kCM2, rng) * q0.element(), eta);
        const TangentVector shifted(tv.v + eta.element() * x, eta);
        CHECK(dist(horizontal_project(tv), horizontal_project(shifted)) < 1e-10);

        // injectivity: eta x = 0 forces x = 0
        CHECK(dist(partial_inverse(eta.element()) * vert.v, x) < 1e-9);
    }

    // nullity of the projection equals the dimension of the injected corner
    const BundlePoint eta = random_point(q0, rng);
    std::vector<AlgebraElement> fiber_basis;
    int corner_dim = 0;
    for (const AlgebraElement& u : matrix_units(kCM2)) {
        if ((u * q0.element()).norm() > 0.5) fiber_basis.push_back(u * q0.element());
        if ((q0.element() * u * q0.element()).norm() > 0.5) ++corner_dim;
    }
    Mat projection_map(kCM2.total_dim(), static_cast<int>(fiber_basis.size()));
    for (int j = 0; j < static_cast<int>(fiber_basis.size()); ++j)
        projection_map.col(j) = to_vector(
            horizontal_project(TangentVector(fiber_basis[static_cast<std::size_t>(j)], eta)));
    const int nullity = static_cast<int>(fiber_basis.size()) -
                        numerical_rank(projection_map, kCM2.max_dim());
    CHECK(nullity == corner_dim); // im(inject) = ker(project) by dimension
}

TEST_CASE("pair splitting kills exactly the shared vertical directions") {
    Rng rng(441);
    const ProjectionElement q0 = corner_p0(kCM2, {1, 1});

    for (int trial = 0; trial < 50; ++trial) {
        const BundlePoint eta = random_point(q0, rng);
        const BundlePoint xi = random_point(q0, rng);
        const AlgebraElement x = random_corner(q0.element(), q0.element(), rng);

        // injected pairs project to zero
        const auto [ve, vx] = vertical_inject2(x, eta, xi);
        const auto [re, rx] = horizontal_project2(ve, vx);
        CHECK(re.norm() < 1e-9 * std::max(1.0, x.norm()));
        CHECK(rx.norm() < 1e-9 * std::max(1.0, x.norm()));

        // projection is constant on diagonal cosets
        const TangentVector tv(random_element(kCM2, rng) * q0.element(), eta);
        const TangentVector tw(random_element(kCM2, rng) * q0.element(), xi);
        const auto [r1, r2] = horizontal_project2(tv, tw);
        const auto [s1, s2] = horizontal_project2(
            TangentVector(tv.v + eta.element() * x, eta),
            TangentVector(tw.v + xi.element() * x, xi));
        CHECK(dist(r1, s1) < 1e-9);
        CHECK(dist(r2, s2) < 1e-9);

        // zero representative happens only on the image of the injection
        if (re.norm() < 1e-9) {
            const AlgebraElement witness = partial_inverse(eta.element()) * ve.v;
            CHECK(dist(eta.element() * witness, ve.v) < 1e-9);
            CHECK(dist(xi.element() * witness, vx.v) < 1e-9);
        }
    }
}

TEST_CASE("semidirect tangent group: axioms and bundle action") {
    Rng rng(451);
    const ProjectionElement q0 = corner_p0(kCM2, {1, 1});

    for (int trial = 0; trial < 40; ++trial) {
        const SemidirectElement A{random_corner(q0.element(), q0.element(), rng),
                                  random_group(q0, rng)};
        const SemidirectElement B{random_corner(q0.element(), q0.element(), rng),
                                  random_group(q0, rng)};
        const SemidirectElement C{random_corner(q0.element(), q0.element(), rng),
                                  random_group(q0, rng)};

        // associativity, unit, inverse
        const SemidirectElement ab_c = semidirect_product(semidirect_product(A, B), C);
        const SemidirectElement a_bc = semidirect_product(A, semidirect_product(B, C));
        CHECK(dist(ab_c.x, a_bc.x) < 1e-10 * std::max(1.0, ab_c.x.norm()));
        CHECK(dist(ab_c.g.element(), a_bc.g.element()) < 1e-10);

        const SemidirectElement unit = semidirect_unit(q0);
        const SemidirectElement au = semidirect_product(A, unit);
        CHECK(dist(au.x, A.x) < 1e-11);
        const SemidirectElement ai = semidirect_product(A, semidirect_inverse(A));
        CHECK(ai.x.norm() < 1e-9);
        CHECK(dist(ai.g.element(), q0.element()) < 1e-9);

        // action law on tangent vectors of the bundle
        const BundlePoint eta = random_point(q0, rng);
        const TangentVector tv(random_element(kCM2, rng) * q0.element(), eta);
        const TangentVector two_step = tangent_action(tangent_action(tv, A), B);
        const TangentVector one_step = tangent_action(tv, semidirect_product(A, B));
        CHECK(dist(two_step.v, one_step.v) < 1e-9 * std::max(1.0, one_step.v.norm()));
        CHECK(dist(two_step.base.element(), one_step.base.element()) < 1e-10);
    }

    // pair-injection equivariance: acting after injecting equals injecting
    // the conjugated, shifted corner element at the moved points
    for (int trial = 0; trial < 30; ++trial) {
        const BundlePoint eta = random_point(q0, rng);
        const BundlePoint xi = random_point(q0, rng);
        const AlgebraElement xbar = random_corner(q0.element(), q0.element(), rng);
        const SemidirectElement A{random_corner(q0.element(), q0.element(), rng),
                                  random_group(q0, rng)};
        const auto [ie, ix] = vertical_inject2(xbar, eta, xi);
        const TangentVector moved_e = tangent_action(ie, A);
        const TangentVector moved_x = tangent_action(ix, A);
        const AlgebraElement gi = partial_inverse(A.g.element());
        const AlgebraElement conj = gi * (xbar + A.x) * A.g.element();
        const auto [je, jx] =
            vertical_inject2(conj, act(eta, A.g), act(xi, A.g));
        CHECK(dist(moved_e.v, je.v) < 1e-9 * std::max(1.0, je.v.norm()));
        CHECK(dist(moved_x.v, jx.v) < 1e-9 * std::max(1.0, jx.v.norm()));
    }
}

TEST_CASE("left-translation flows: group law and source preservation") {
    Rng rng(461);
    const AlgebraDescriptor d = kCM2;
    std::vector<int> ranks{1, 1};
    const ProjectionElement s = random_projection(d, ranks, rng);
    const ProjectionElement t = random_projection(d, ranks, rng);
    const GroupoidElement x(t.element() * random_element(d, rng) * s.element());
    const FlowGenerator f{0.7 * random_element(d, rng)};

    CHECK(dist(flow_translate(f, 0.0, x).element(), x.element()) < 1e-13);
    CHECK(dist(flow_translate(FlowGenerator{AlgebraElement::zero(d)}, 0.3, x).element(),
               x.element()) < 1e-13);

    for (double tt : {0.05, -0.1, 0.2}) {
        const GroupoidElement lx = flow_translate(f, tt, x);
        CHECK(dist(lx.src().element(), x.src().element()) < 1e-10);

        // one-parameter group law
        const GroupoidElement two = flow_translate(f, 0.07, lx);
        const GroupoidElement direct = flow_translate(f, tt + 0.07, x);
        CHECK(dist(two.element(), direct.element()) <
              1e-10 * std::max(1.0, direct.element().norm()));
    }

    // left translation commutes with right composition
    const ProjectionElement r = random_projection(d, ranks, rng);
    const GroupoidElement y(s.element() * random_element(d, rng) * r.element());
    const GroupoidElement lhs = flow_translate(f, 0.1, compose(x, y));
    const GroupoidElement rhs = compose(flow_translate(f, 0.1, x), y);
    CHECK(dist(lhs.element(), rhs.element()) < 1e-10 * std::max(1.0, lhs.element().norm()));
}

TEST_CASE("flow cocycles: unit, lifting identity, cocycle law, derivatives") {
    Rng rng(471);
    const AlgebraDescriptor d = kCM2;
    const ProjectionElement q0 = corner_p0(d, {1, 1});
    int accepted = 0, skipped = 0;

    while (accepted < 40 && skipped < 4000) {
        const ProjectionElement p = random_projection(d, {1, 1}, rng);
        const ProjectionElement q = random_projection(d, {1, 1}, rng);
        const FlowGenerator f{0.5 * random_element(d, rng)};
        const double t = rng.uniform(-0.2, 0.2);
        const double s = rng.uniform(-0.2, 0.2);
        if (!in_pi(p, q)) { ++skipped; continue; }

        // unit at t = 0
        CHECK(dist(cocycle(f, p, q, 0.0), p.element()) < 1e-12);

        const ProjectionElement qt = flow_lattice(f, t, q);
        const ProjectionElement qts = flow_lattice(f, t + s, q);
        if (!(in_pi(p, qt) && in_pi(p, qts))) { ++skipped; continue; }
        ++accepted;

        // lifting identity exp(tw) sigma_p(q) = sigma_p(lambda_t q) c_p(q,t)
        const AlgebraElement lhs = flow_factor(f, t) * chart_sigma(p, q);
        const AlgebraElement rhs = chart_sigma(p, qt) * cocycle(f, p, q, t);
        CHECK(dist(lhs, rhs) < 1e-9 * std::max(1.0, lhs.norm()));

        // cocycle law c(q, t+s) = c(lambda_t q, s) c(q, t)
        const AlgebraElement law_l = cocycle(f, p, q, t + s);
        const AlgebraElement law_r = cocycle(f, p, qt, s) * cocycle(f, p, q, t);
        CHECK(dist(law_l, law_r) < 1e-8 * std::max(1.0, law_l.norm()));

        // frame form: c = z(t) z(0)^{-1} through any point over q
        const BundlePoint over_q(
            q.element() * random_element(d, rng) * q0.element(), q0);
        const BundleChartPair z0 = bundle_chart(p, over_q);
        const BundleChartPair zt = bundle_chart(p, flow_point(f, t, over_q));
        CHECK(dist(zt.z * partial_inverse(z0.z), cocycle(f, p, q, t)) <
              1e-8 * std::max(1.0, zt.z.norm()));

        // derivative at zero is the chart velocity of the flow through eta
        const double h = 1e-5;
        const AlgebraElement fd_c =
            (1.0 / (2.0 * h)) * (cocycle(f, p, q, h) - cocycle(f, p, q, -h));
        const TangentVector flow_vec(f.w * over_q.element(), over_q);
        const TangentChartQuad quad = t_chart(p, flow_vec);
        CHECK(dist(fd_c, quad.b) < 1e-6 * std::max(1.0, quad.b.norm()));

        // arrow-frame derivative: d/dt z_pp~(t)|_0 = b_p z_pp~
        const ProjectionElement pt = random_projection(d, {1, 1}, rng);
        const GroupoidElement arrow(over_q.element() *
                                    random_corner(q0.element(), q0.element(), rng));
        if (!(in_pi(p, arrow.tgt()) && in_pi(pt, arrow.src()))) continue;
        const GroupoidChartTriple tri0 = chart_psi(p, pt, arrow);
        const GroupoidChartTriple tri_p = chart_psi(p, pt, flow_translate(f, h, arrow));
        const GroupoidChartTriple tri_m = chart_psi(p, pt, flow_translate(f, -h, arrow));
        const AlgebraElement fd_z = (1.0 / (2.0 * h)) * (tri_p.z - tri_m.z);
        CHECK(dist(fd_z, quad.b * tri0.z) < 1e-6 * std::max(1.0, fd_z.norm()));
    }
    REQUIRE(accepted == 40);
}
