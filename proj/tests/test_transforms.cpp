#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "rescale/transforms.hpp"

using namespace rescale;

TEST_CASE("phase-space change of variables") {
    PhasePoint p{{2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    auto q = to_rescaled(p, 2.0, 1.0, 3);
    CHECK(q.xi[0] == doctest::Approx(1.0));
    CHECK(q.eta[0] == doctest::Approx(0.0));
    CHECK(q.eta[1] == 0.0);

    // R=1, Rdot=0 is the identity
    auto qid = to_rescaled(p, 1.0, 0.0, 3);
    CHECK(qid.xi[0] == p.x[0]);
    CHECK(qid.eta[0] == p.v[0]);
}

TEST_CASE("round trip is the identity on random samples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_real_distribution<double> ur(0.1, 10.0);
    for (int it = 0; it < 10000; ++it) {
        const int d = 1 + static_cast<int>(rng() % 4);
        PhasePoint p;
        for (int k = 0; k < d; ++k) {
            p.x.push_back(u(rng));
            p.v.push_back(u(rng));
        }
        const double r = ur(rng), rdot = u(rng);
        auto back = from_rescaled(to_rescaled(p, r, rdot, d), r, rdot, d);
        for (int k = 0; k < d; ++k) {
            CHECK(back.x[k] == doctest::Approx(p.x[k]).epsilon(1e-12));
            CHECK(back.v[k] == doctest::Approx(p.v[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("unit sphere areas") {
    CHECK(unit_sphere_area(1) == doctest::Approx(2.0));
    CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * M_PI));
    CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * M_PI));
    CHECK(unit_sphere_area(4) == doctest::Approx(2.0 * M_PI * M_PI));
}

TEST_CASE("mass-preserving scaling constraint") {
    CHECK(mass_preserving_constraint(8.0, 4.0, 3));
    CHECK(mass_preserving_constraint(1.0, 1.0, 2));
    CHECK_FALSE(mass_preserving_constraint(2.0, 2.0, 1));
}

TEST_CASE("linear scaling exponents") {
    LinearScalingExponents s{3.0, 2.0};
    CHECK(s.f_factor(3) == doctest::Approx(std::pow(3.0, -1) * 8.0));
    CHECK(s.rho_factor() == doctest::Approx(9.0));
    CHECK(s.u_factor() == doctest::Approx(9.0 / 4.0));
    CHECK(s.force_factor() == doctest::Approx(9.0 / 2.0));
}

TEST_CASE("stationary profile: level and support") {
    StationaryState s{2.0 * M_PI, 2, 1.0};
    CHECK(s.radius() == doctest::Approx(1.0));
    CHECK(s.density_radial(0.5) == doctest::Approx(2.0));
    CHECK(s.density_radial(1.5) == 0.0);
}

TEST_CASE("stationary profile integrates to its mass") {
    for (int d : {1, 2, 3, 4}) {
        StationaryState s{3.7, d, 1.0};
        const double rb = s.radius();
        const int n = 20000;
        const double h = 2.0 * rb / n;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = (i + 0.5) * h;
            total += s.density_radial(r) * unit_sphere_area(d) * std::pow(r, d - 1.0) * h;
        }
        CHECK(total == doctest::Approx(3.7).epsilon(1e-6));
    }
}

TEST_CASE("stationary field: interior value and boundary continuity") {
    StationaryState s{2.0 * M_PI, 2, 1.0};
    auto f = s.field({0.5, 0.0}, -1);
    CHECK(f[0] == doctest::Approx(-0.5));
    CHECK(f[1] == doctest::Approx(0.0));

    StationaryState s3{4.0 * M_PI, 3, 1.0};
    CHECK(std::abs(s3.field_radial(2.0, -1)) == doctest::Approx(0.25));

    for (int d : {2, 3, 4}) {
        for (double mass : {0.3, 1.0, 17.0}) {
            StationaryState st{mass, d, 1.0};
            const double rb = st.radius();
            CHECK(std::abs(st.field_radial(rb * (1 - 1e-13), -1) -
                           st.field_radial(rb * (1 + 1e-13), -1)) < 1e-11);
        }
    }
}

TEST_CASE("kinetic interpolation bound on a phase-space box") {
    PhaseGrid1D g;
    g.x0 = -1.0;
    g.dx = 0.01;
    g.nx = 200;
    g.v0 = -0.5;
    g.dv = 0.01;
    g.nv = 100;
    g.f.assign(g.nx * g.nv, 1.0);
    auto sides = interpolation_bound(g, 1, 0.0);
    CHECK(sides.lhs <= sides.rhs);
    // box indicator: lhs/rhs = 2 / (3 (2/3)^(1/3))
    const double expected = 2.0 / (3.0 * std::cbrt(2.0 / 3.0));
    CHECK(sides.lhs / sides.rhs == doctest::Approx(expected).epsilon(1e-3));

    g.f.assign(g.nx * g.nv, 0.0);
    auto zero = interpolation_bound(g, 1, 0.0);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.rhs == 0.0);

    g.f[3] = -0.5;
    CHECK_THROWS_AS(interpolation_bound(g, 1, 0.0), std::invalid_argument);
}

TEST_CASE("interpolation bound holds on random densities") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        PhaseGrid1D g;
        g.x0 = -2.0;
        g.dx = 0.05;
        g.nx = 80;
        g.v0 = -2.0;
        g.dv = 0.05;
        g.nv = 80;
        g.f.resize(g.nx * g.nv);
        for (auto& v : g.f) v = u(rng) < 0.3 ? 0.0 : u(rng);
        const double shift = -1.0 + 2.0 * u(rng);
        auto sides = interpolation_bound(g, 1, shift);
        CHECK(sides.lhs <= sides.rhs * (1.0 + 1e-12));
    }
}
