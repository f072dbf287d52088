#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "rescale/errors.hpp"
#include "rescale/quantum.hpp"

using namespace rescale;
using cplx = std::complex<double>;

namespace {

// closed-form free Gaussian: psi0 = (pi s^2)^(-1/4) exp(-x^2/(2 s^2))
cplx free_gaussian(double x, double t, double sigma, double hbar) {
    const cplx beta(sigma * sigma, hbar * t);
    const cplx pref = std::pow(M_PI * sigma * sigma, -0.25) *
                      std::sqrt(cplx(sigma * sigma, 0.0) / beta);
    return pref * std::exp(-x * x / (2.0 * beta));
}

}  // namespace

TEST_CASE("free Gaussian dispersion matches the closed form") {
    const int n = 2048;
    const double length = 48.0, hbar = 1.0, sigma = 1.0;
    QuantumInitial init;
    init.sigma = sigma;
    init.mass = 1.0;
    WaveField w = gaussian_field(GridKind::Periodic1D, n, length, hbar, init);
    PotentialSpec pot;
    pot.kind = PotentialSpec::Kind::External;  // empty = free
    for (int k = 0; k < 100; ++k) split_step(w, pot, 0.01);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        const double x = w.coord(j);
        worst = std::max(worst, std::abs(w.psi[j] - free_gaussian(x, 1.0, sigma, hbar)));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("plane wave rotates its phase exactly") {
    const int n = 256;
    const double length = 16.0;
    WaveField w;
    w.kind = GridKind::Periodic1D;
    w.n = n;
    w.length = length;
    w.hbar = 1.0;
    w.psi.resize(n);
    const double k = 2.0 * M_PI * 5 / length;
    for (int j = 0; j < n; ++j) {
        const double x = w.coord(j);
        w.psi[j] = std::exp(cplx(0.0, k * x));
    }
    PotentialSpec pot;
    pot.kind = PotentialSpec::Kind::External;
    const double dt = 1e-3;
    for (int s = 0; s < 100; ++s) split_step(w, pot, dt);
    const cplx expect_phase = std::exp(cplx(0.0, -0.5 * k * k * 0.1));
    for (int j = 0; j < n; j += 31) {
        const double x = w.coord(j);
        const cplx expect = std::exp(cplx(0.0, k * x)) * expect_phase;
        CHECK(std::abs(w.psi[j] - expect) < 1e-11);
    }
}

TEST_CASE("mass is conserved to rounding by the split step") {
    QuantumInitial init;
    init.sigma = 1.2;
    init.mass = 2.5;
    WaveField w = gaussian_field(GridKind::Periodic1D, 512, 32.0, 1.0, init);
    PotentialSpec pot;
    pot.kind = PotentialSpec::Kind::Power;
    pot.p = 3.0;
    pot.eps = -1;
    auto mass = [&]() {
        double acc = 0.0;
        for (auto c : w.psi) acc += std::norm(c);
        return acc * w.spacing();
    };
    const double m0 = mass();
    for (int s = 0; s < 200; ++s) split_step(w, pot, 1e-3);
    CHECK(std::abs(mass() - m0) < 1e-10 * m0);
}

TEST_CASE("radial Poisson: uniform ball potential") {
    const int n = 4096;
    const double length = 8.0, a = 1.0, rho0 = 3.0;
    std::vector<double> rho(n + 1, 0.0);
    const double dr = length / n;
    for (int j = 0; j <= n; ++j) {
        const double r = j * dr;
        rho[j] = r < a ? rho0 : (r == a ? 0.5 * rho0 : 0.0);
    }
    auto v = poisson_potential(rho, GridKind::Radial3D, n, length);
    const double m = 4.0 / 3.0 * M_PI * a * a * a * rho0;
    for (double r : {0.25, 0.5, 0.9}) {
        const int j = static_cast<int>(r / dr);
        const double expect = rho0 * (a * a / 2.0 - r * r / 6.0);
        CHECK(v[j] == doctest::Approx(expect).epsilon(2e-3));
    }
    for (double r : {1.5, 2.0, 3.0}) {
        const int j = static_cast<int>(r / dr);
        CHECK(v[j] == doctest::Approx(m / (4.0 * M_PI * r)).epsilon(2e-3));
    }
    std::vector<double> zero(n + 1, 0.0);
    auto vz = poisson_potential(zero, GridKind::Radial3D, n, length);
    for (double x : vz) CHECK(x == 0.0);
}

TEST_CASE("periodic 2D Poisson gradient matches the plane kernel near the center") {
    const int n = 256;
    const double length = 24.0;
    std::vector<double> rho(static_cast<std::size_t>(n) * n, 0.0);
    const double h = length / n;
    auto coord = [&](int j) { return -0.5 * length + j * h; };
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double x = coord(a), y = coord(b);
            rho[static_cast<std::size_t>(a) * n + b] = std::exp(-2.0 * (x * x + y * y));
        }
    auto v = poisson_potential(rho, GridKind::Periodic2D, n, length);
    // spectral field by centered differences vs the free-space kernel sum
    for (int a = n / 2 - 3; a <= n / 2 + 3; a += 3)
        for (int b = n / 2 + 1; b <= n / 2 + 4; b += 3) {
            const double gx =
                -(v[static_cast<std::size_t>(a + 1) * n + b] -
                  v[static_cast<std::size_t>(a - 1) * n + b]) /
                (2.0 * h);
            const double gy =
                -(v[static_cast<std::size_t>(a) * n + b + 1] -
                  v[static_cast<std::size_t>(a) * n + b - 1]) /
                (2.0 * h);
            double ex = 0.0, ey = 0.0;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) {
                    const double dx = coord(a) - coord(p), dy = coord(b) - coord(q);
                    const double r2 = dx * dx + dy * dy;
                    if (r2 < 1e-12) continue;
                    const double c = rho[static_cast<std::size_t>(p) * n + q] * h * h /
                                     (2.0 * M_PI * r2);
                    ex += c * dx;
                    ey += c * dy;
                }
            const double mag = std::hypot(ex, ey);
            CHECK(std::hypot(gx - ex, gy - ey) < 0.01 * mag);
        }
}

TEST_CASE("velocity moments of the phase-space transform") {
    // plane wave: kinetic moment = hbar^2 k^2 * mass
    const int n = 256;
    const double length = 16.0;
    WaveField w;
    w.kind = GridKind::Periodic1D;
    w.n = n;
    w.length = length;
    w.hbar = 0.7;
    w.psi.resize(n);
    const double k = 2.0 * M_PI * 4 / length;
    for (int j = 0; j < n; ++j) w.psi[j] = std::exp(cplx(0.0, k * w.coord(j)));
    auto m = wigner_moments(w, 1.0, 0.0);
    CHECK(m.kinetic_shifted ==
          doctest::Approx(w.hbar * w.hbar * k * k * m.mass).epsilon(1e-10));

    // chirped Gaussian with the matching shift equals the unchirped value
    QuantumInitial plain;
    plain.sigma = 1.0;
    plain.mass = 1.0;
    QuantumInitial chirped = plain;
    chirped.chirp = 0.35;
    WaveField a = gaussian_field(GridKind::Periodic1D, 1024, 32.0, 1.0, plain);
    WaveField b = gaussian_field(GridKind::Periodic1D, 1024, 32.0, 1.0, chirped);
    auto ma = wigner_moments(a, 1.0, 0.0);
    auto mb = wigner_moments(b, 1.0, 2.0 * 0.35);  // shift = Rdot/R = 2*chirp
    CHECK(mb.kinetic_shifted == doctest::Approx(ma.kinetic_shifted).epsilon(1e-9));

    WaveField z = a;
    for (auto& c : z.psi) c = 0.0;
    auto mz = wigner_moments(z, 1.0, 0.0);
    CHECK(mz.mass == 0.0);
    CHECK(mz.kinetic_shifted == 0.0);
    CHECK(mz.x2 == 0.0);
}

TEST_CASE("interpolation lemma: endpoints and random radial profiles") {
    const int n = 512;
    const double length = 24.0;
    QuantumInitial init;
    init.sigma = 1.5;
    init.mass = 1.0;
    WaveField w = gaussian_field(GridKind::Radial3D, n, length, 1.0, init);

    auto p2 = interpolation_lemma_check(w, 1.0, 2.0);
    CHECK(p2.lhs == doctest::Approx(p2.rhs).epsilon(1e-12));

    auto p6 = interpolation_lemma_check(w, 1.0, 6.0);
    CHECK(p6.lhs <= p6.rhs);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        WaveField f = w;
        const double s1 = u(rng), s2 = u(rng), amp = u(rng), ph = u(rng);
        for (int j = 0; j <= n; ++j) {
            const double r = f.coord(j);
            const double env =
                std::exp(-0.5 * r * r / (s1 * s1)) + amp * std::exp(-0.5 * r * r / (s2 * s2));
            f.psi[j] = env * std::exp(cplx(0.0, ph * r * r / (1.0 + r)));
        }
        for (double p : {2.0, 3.0, 6.0})
            for (double t : {0.1, 1.0, 10.0}) {
                auto sides = interpolation_lemma_check(f, t, p);
                CHECK(sides.lhs <= sides.rhs * (1.0 + 1e-9));
            }
    }
    CHECK_THROWS_AS(interpolation_lemma_check(w, 1.0, 7.0), std::invalid_argument);
}

TEST_CASE("quadratic-phase frame closed forms") {
    ConformalFrame f{1.0, 1.0, 0.0};
    CHECK(f.omega(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(f.r(1.0) == doctest::Approx(3.0));
    CHECK(f.tau(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(coupling_is_critical(5.0, 1));
    CHECK_FALSE(coupling_is_critical(3.0, 1));

    // identity transform
    QuantumInitial init;
    init.sigma = 1.0;
    init.mass = 1.0;
    WaveField w = gaussian_field(GridKind::Periodic1D, 256, 24.0, 1.0, init);
    ConformalFrame id{0.0, 1.0, 0.0};
    auto v = pseudo_conformal_transform(w, id, 0.7, 0.5);
    for (int j = 0; j < w.n; ++j) CHECK(std::abs(v.psi[j] - w.psi[j]) < 1e-14);
    CHECK(v.length == w.length);
}

TEST_CASE("critical transform: evolve-and-pull-back equals direct evolution") {
    // d=1, p=5: transform at t=0, evolve v to tau(t*), pull back, compare
    const int n = 2048;
    const double length = 48.0, hbar = 1.0;
    const double omega0 = 0.5, t_star = 1.0;
    QuantumInitial init;
    init.sigma = 1.0;
    init.mass = 1.0;
    WaveField u0 = gaussian_field(GridKind::Periodic1D, n, length, hbar, init);
    PotentialSpec pot;
    pot.kind = PotentialSpec::Kind::Power;
    pot.p = 5.0;
    pot.eps = -1;

    ConformalFrame frame{omega0, 1.0, 0.0};
    const double alpha = 0.5;  // d/2

    // direct path
    WaveField u_direct = u0;
    const double dt = 2e-5;
    const int steps_t = static_cast<int>(std::lround(t_star / dt));
    const double dt_t = t_star / steps_t;
    for (int s = 0; s < steps_t; ++s) split_step(u_direct, pot, dt_t);

    // transformed path
    WaveField v = pseudo_conformal_transform(u0, frame, 0.0, alpha);
    const double tau_star = frame.tau(t_star);
    const int steps_tau = static_cast<int>(std::lround(tau_star / dt));
    const double dtau = tau_star / steps_tau;
    for (int s = 0; s < steps_tau; ++s) split_step(v, pot, dtau);
    WaveField u_back = pseudo_conformal_transform(v, frame, t_star, alpha, true);

    // u_back lives on the expanded box; compare on the overlap
    const double rr = frame.r(t_star);
    double err2 = 0.0, norm2 = 0.0;
    for (int j = 0; j < n; ++j) {
        const double x = u_back.coord(j);
        if (std::abs(x) > 0.45 * length) continue;
        const cplx direct = eval_periodic(u_direct, x);
        err2 += std::norm(u_back.psi[j] - direct) * u_back.spacing();
        norm2 += std::norm(direct) * u_back.spacing();
    }
    CHECK(rr == doctest::Approx(2.0));
    CHECK(std::sqrt(err2) < 1e-6);
    CHECK(norm2 > 0.9);  // most of the mass is inside the overlap
}

TEST_CASE("defocusing subcritical run: the power-law functional decreases") {
    QuantumConfig cfg;
    cfg.kind = GridKind::Periodic1D;
    cfg.n = 1024;
    cfg.length = 48.0;
    cfg.pot.kind = PotentialSpec::Kind::Power;
    cfg.pot.p = 3.0;
    cfg.pot.eps = -1;
    cfg.initial.sigma = 1.0;
    cfg.initial.mass = 2.0;
    cfg.dt = 2e-4;
    cfg.t_end = 1.5;
    cfg.cadence = 0.05;
    auto run = simulate_quantum(cfg);
    CHECK(nls_q_exponent(3.0, 1) == doctest::Approx(1.0));
    const double l0 = std::abs(run.series.front().total);
    for (std::size_t i = 1; i < run.series.size(); ++i)
        CHECK(run.series[i].total <= run.series[i - 1].total + 1e-6 * l0);
    // unscaled energy is conserved by the splitting to second order
    CHECK(run.series.back().energy ==
          doctest::Approx(run.series.front().energy).epsilon(1e-6));
}

TEST_CASE("free run conserves the quadratic invariant; critical run conserves the functional") {
    QuantumConfig cfg;
    cfg.kind = GridKind::Periodic1D;
    cfg.n = 2048;
    cfg.length = 64.0;
    cfg.pot.kind = PotentialSpec::Kind::Power;
    cfg.pot.p = 5.0;
    cfg.pot.eps = -1;
    cfg.pot.coupling = 0.0;  // free control
    cfg.initial.sigma = 1.0;
    cfg.initial.mass = 1.0;
    cfg.dt = 5e-4;
    cfg.t_end = 1.0;
    cfg.cadence = 0.1;
    cfg.track_pcl = true;
    cfg.omega0 = 1.0;
    auto run = simulate_quantum(cfg);
    const double i0 = run.series.front().linear_inv;  // = second moment at t = 0
    CHECK(i0 > 0.0);
    for (const auto& s : run.series)
        CHECK(std::abs(s.linear_inv - i0) < 1e-8 * i0);
    // the conserved functional of the linear flow is exact for coupling 0
    const double pcl0 = run.series.front().pcl;
    for (const auto& s : run.series)
        CHECK(std::abs(s.pcl - pcl0) < 1e-6 * std::abs(pcl0));
}

TEST_CASE("d=3 Poisson-coupled run: Lyapunov functional is non-increasing") {
    QuantumConfig cfg;
    cfg.kind = GridKind::Radial3D;
    cfg.n = 1024;
    cfg.length = 48.0;
    cfg.pot.kind = PotentialSpec::Kind::Poisson;
    cfg.pot.eps = -1;
    cfg.initial.sigma = 1.5;
    cfg.initial.mass = 2.0;
    cfg.dt = 5e-4;
    cfg.t_end = 2.0;
    cfg.cadence = 0.05;
    auto run = simulate_quantum(cfg);
    const double l0 = std::abs(run.series.front().total);
    for (std::size_t i = 1; i < run.series.size(); ++i)
        CHECK(run.series[i].total <= run.series[i - 1].total + 1e-6 * l0);
    CHECK(run.series.back().mass == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("coarse grids raise the aliasing warning") {
    QuantumConfig cfg;
    cfg.kind = GridKind::Periodic1D;
    cfg.n = 64;
    cfg.length = 12.0;
    cfg.pot.kind = PotentialSpec::Kind::Power;
    cfg.pot.p = 3.0;
    cfg.pot.eps = -1;
    cfg.initial.sigma = 0.25;
    cfg.initial.mass = 4.0;
    cfg.initial.k0 = 8.0;
    cfg.dt = 1e-3;
    cfg.t_end = 0.05;
    cfg.cadence = 0.01;
    cfg.boundary_tol = 1.0;  // the guard under test is the spectral tail
    auto run = simulate_quantum(cfg);
    CHECK(run.aliasing_warning);
}

TEST_CASE("potential phase guard rejects oversized steps") {
    QuantumInitial init;
    init.sigma = 0.5;
    init.mass = 50.0;
    WaveField w = gaussian_field(GridKind::Periodic1D, 256, 16.0, 1.0, init);
    PotentialSpec pot;
    pot.kind = PotentialSpec::Kind::Power;
    pot.p = 3.0;
    pot.eps = -1;
    CHECK_THROWS_AS(split_step(w, pot, 10.0), std::invalid_argument);
}

TEST_CASE("dispersion reaching the box edge aborts the run") {
    QuantumConfig cfg;
    cfg.kind = GridKind::Periodic1D;
    cfg.n = 256;
    cfg.length = 8.0;  // much too small for t_end
    cfg.pot.kind = PotentialSpec::Kind::External;
    cfg.initial.sigma = 1.0;
    cfg.initial.mass = 1.0;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    cfg.cadence = 0.1;
    CHECK_THROWS_AS(simulate_quantum(cfg), boundary_error);
}

TEST_CASE("frozen frame reduces the functional to energy plus second moment") {
    QuantumInitial init;
    init.sigma = 1.0;
    init.mass = 1.5;
    WaveField w = gaussian_field(GridKind::Radial3D, 512, 32.0, 1.0, init);
    std::vector<double> rho(w.samples());
    for (std::size_t j = 0; j < rho.size(); ++j) rho[j] = std::norm(w.psi[j]);
    auto v = poisson_potential(rho, GridKind::Radial3D, w.n, w.length);
    auto rec = lyapunov_sp(w, v, 1.0, 0.0, 3, 1.5);
    auto m = wigner_moments(w, 1.0, 0.0);
    CHECK(rec.total ==
          doctest::Approx(m.kinetic_shifted + potential_moment(w, v) + m.x2)
              .epsilon(1e-12));
    CHECK(rec.log_term == 0.0);
}

TEST_CASE("2D box with self-consistent coupling: functional drift is one-way") {
    // the zero-mode convention shifts the potential by a slowly varying
    // constant, so upticks are compared against the net decrease
    QuantumConfig cfg;
    cfg.kind = GridKind::Periodic2D;
    cfg.n = 128;
    cfg.length = 32.0;
    cfg.pot.kind = PotentialSpec::Kind::Poisson;
    cfg.pot.eps = -1;
    cfg.initial.sigma = 1.0;
    cfg.initial.mass = 2.0;
    cfg.dt = 1e-3;
    cfg.t_end = 1.5;
    cfg.cadence = 0.05;
    auto run = simulate_quantum(cfg);
    CHECK(run.series.back().mass == doctest::Approx(2.0).epsilon(1e-9));
    const double net = run.series.front().total - run.series.back().total;
    CHECK(net > 0.0);
    double worst = -1e300;
    for (std::size_t i = 1; i < run.series.size(); ++i)
        worst = std::max(worst, run.series[i].total - run.series[i - 1].total);
    CHECK(worst <= 0.01 * net);
    // d=2 functional includes the mass^2/(2 pi) log R term
    CHECK(run.records.back().log_term > 0.0);
}
