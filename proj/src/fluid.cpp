#include "rescale/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "rescale/errors.hpp"
#include "rescale/kinetic.hpp"
#include "rescale/transforms.hpp"

namespace rescale {

namespace {
double sqr(double x) { return x * x; }
}

double ShellSystem::mass() const {
    double acc = 0.0;
    for (double mi : m) acc += mi;
    return acc;
}

void ShellSystem::validate() const {
    if (vr.size() != r.size() || m.size() != r.size())
        throw std::invalid_argument("shells: array lengths disagree");
    if (d < 2) throw std::invalid_argument("shells: d >= 2 required");
    for (double ri : r)
        if (!(ri >= 0.0) || !std::isfinite(ri))
            throw std::invalid_argument("shells: radii must be finite and >= 0");
    for (double mi : m)
        if (!(mi > 0.0)) throw std::invalid_argument("shells: masses must be positive");
}

std::vector<double> shell_accelerations(const ShellSystem& s, int eps) {
    s.validate();
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return s.r[a] < s.r[b]; });
    const double area = unit_sphere_area(s.d);
    std::vector<double> acc(s.size(), 0.0);
    double before = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        double group = 0.0;
        const double r = s.r[idx[i]];
        while (j < idx.size() && s.r[idx[j]] == r) group += s.m[idx[j++]];
        if (r > 0.0) {
            const double m_eff = before + 0.5 * group;
            const double a = -eps * m_eff / (area * std::pow(r, s.d - 1.0));
            for (std::size_t k = i; k < j; ++k) acc[idx[k]] = a;
        }
        before += group;
        i = j;
    }
    return acc;
}

double shell_rho_u(const ShellSystem& s, int eps) {
    return pairwise_rho_u_radial(s.r, s.m, s.d, eps);
}

double shell_total_energy(const ShellSystem& s, int eps) {
    double kin = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) kin += s.m[i] * sqr(s.vr[i]);
    return 0.5 * kin + 0.5 * shell_rho_u(s, eps);
}

CounterexampleResult run_counterexample(double t_end, double dt) {
    if (!(t_end > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("run_counterexample: t_end and dt must be positive");
    // Both edges obey rdd = 1/r^2; first integral rdot^2 + 2/r.
    struct Branch {
        double r, v;
    };
    auto accel = [](double r) { return 1.0 / (r * r); };
    auto invariant = [&](const Branch& b) { return b.v * b.v + 2.0 / b.r; };
    auto rk4 = [&](Branch& b, double h) {
        const double r1 = b.r, v1 = b.v, a1 = accel(r1);
        const double r2 = r1 + 0.5 * h * v1, v2 = v1 + 0.5 * h * a1, a2 = accel(r2);
        const double r3 = r1 + 0.5 * h * v2, v3 = v1 + 0.5 * h * a2, a3 = accel(r3);
        const double r4 = r1 + h * v3, v4 = v1 + h * a3, a4 = accel(r4);
        b.r += h / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4);
        b.v += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    };

    Branch ball{1.0, 0.0}, annulus{2.0, 2.0};
    const double e_ball = invariant(ball), e_ann = invariant(annulus);
    CounterexampleResult out;
    double t = 0.0;
    while (t < t_end - 1e-12) {
        const double h = std::min(dt, t_end - t);
        rk4(ball, h);
        rk4(annulus, h);
        t += h;
        out.drift_ball = std::max(out.drift_ball, std::abs(invariant(ball) - e_ball));
        out.drift_annulus =
            std::max(out.drift_annulus, std::abs(invariant(annulus) - e_ann));
    }
    out.slope_ball = ball.r / t;
    out.slope_annulus = annulus.r / t;
    out.t_end = t;
    return out;
}

ShellSystem cold_ball_shells(int d, double mass, double radius, std::size_t k) {
    if (k == 0) throw std::invalid_argument("cold_ball_shells: k must be positive");
    ShellSystem s;
    s.d = d;
    s.r.resize(k);
    s.vr.assign(k, 0.0);
    s.m.assign(k, mass / k);
    for (std::size_t i = 0; i < k; ++i) {
        const double u = (i + 0.5) / k;  // enclosed mass fraction
        s.r[i] = radius * std::pow(u, 1.0 / d);
    }
    return s;
}

ShellRun simulate_ep_shells(const ShellConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
        throw std::invalid_argument("simulate_ep_shells: dt and t_end must be positive");
    ShellSystem s = cfg.initial;
    s.validate();
    if (s.d != cfg.d) throw std::invalid_argument("simulate_ep_shells: dimension mismatch");

    ShellRun run;
    run.config = cfg;
    const double mass = s.mass();

    ScalingParams sp = cfg.scaling;
    if (!cfg.scaling_given) sp = ScalingParams{cfg.d, cfg.eps, 1.0, 1.0, 0.0};
    ScalingState sc = initial_state(sp);

    auto emit = [&]() {
        LyapunovRecord rec;
        rec.t = sc.t;
        rec.r = sc.r;
        rec.rdot = sc.rdot;
        const double h = sc.rdot / sc.r;
        double kin_raw = 0.0, x2 = 0.0, u2 = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            kin_raw += s.m[i] * sqr(s.vr[i] - h * s.r[i]);
            x2 += s.m[i] * sqr(s.r[i]);
            u2 += s.m[i] * sqr(s.vr[i]);
        }
        const double rho_u = shell_rho_u(s, cfg.eps);
        const double bw = std::pow(sc.r, cfg.d - 2.0);
        rec.kinetic_raw = kin_raw;
        rec.rho_u = rho_u;
        rec.x2 = x2;
        rec.kinetic = bw * kin_raw;
        rec.potential = bw * rho_u - cfg.eps * x2 / (sc.r * sc.r);
        rec.log_term =
            cfg.d == 2 ? mass * mass / (2.0 * M_PI) * std::log(sc.r) : 0.0;
        rec.total = rec.kinetic + rec.potential + rec.log_term;
        rec.dldt_formula =
            (cfg.d - 4.0) * sc.rdot * std::pow(sc.r, cfg.d - 3.0) * kin_raw;
        run.records.push_back(rec);
        run.energy.push_back(shell_total_energy(s, cfg.eps));
        run.support_radius.push_back(*std::max_element(s.r.begin(), s.r.end()));
        run.rho_u2_series.push_back(u2);
        run.record_t.push_back(sc.t);
    };

    // KDK leapfrog; order changes between steps are counted as crossings
    std::vector<double> acc = shell_accelerations(s, cfg.eps);
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto order_signature = [&]() {
        std::vector<std::size_t> idx(s.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return s.r[a] < s.r[b]; });
        return idx;
    };
    std::vector<std::size_t> sig = order_signature();

    emit();
    double next_record = cfg.cadence;
    const std::size_t n_steps =
        static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double step = std::min(cfg.dt, cfg.t_end - sc.t);
        if (step <= 0.0) break;
        for (std::size_t i = 0; i < s.size(); ++i) s.vr[i] += 0.5 * step * acc[i];
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.r[i] += step * s.vr[i];
            if (s.r[i] < 0.0) {
                s.r[i] = -s.r[i];
                s.vr[i] = -s.vr[i];
            }
        }
        acc = shell_accelerations(s, cfg.eps);
        for (std::size_t i = 0; i < s.size(); ++i) s.vr[i] += 0.5 * step * acc[i];
        rk4_step(sp, sc, step);

        std::vector<std::size_t> sig_new = order_signature();
        if (sig_new != sig) {
            ++run.crossings;
            sig = std::move(sig_new);
        }
        const bool last = k + 1 == n_steps;
        if (sc.t >= next_record - 1e-9 || last) {
            emit();
            while (next_record <= sc.t + 1e-9) next_record += cfg.cadence;
        }
    }
    fill_dldt_numeric(run.records);
    run.final_state = s;
    return run;
}

void write_shell_csv(const ShellSystem& s, double t, const std::string& path,
                     bool append) {
    std::FILE* f = std::fopen(path.c_str(), append ? "ab" : "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    if (!append) std::fprintf(f, "t,shell_id,r,vr,mass\n");
    for (std::size_t i = 0; i < s.size(); ++i)
        std::fprintf(f, "%.17g,%zu,%.17g,%.17g,%.17g\n", t, i, s.r[i], s.vr[i], s.m[i]);
    std::fclose(f);
}

// ---------------------------------------------------------------------------
// isentropic gas

void EulerState1D::validate() const {
    if (u.size() != rho.size()) throw std::invalid_argument("euler: array lengths disagree");
    if (!(dx > 0.0)) throw std::invalid_argument("euler: dx must be positive");
    if (!(gamma_exp > 1.0)) throw std::invalid_argument("euler: gamma must exceed 1");
    for (double rv : rho)
        if (rv < 0.0) throw std::invalid_argument("euler: density must be nonnegative");
}

double euler_q_exponent(double gamma_exp, int d) {
    return std::min(2.0, (gamma_exp - 1.0) * d);
}

namespace {

EulerSample euler_sample(const EulerState1D& st, const PowerLawScale& sc, double q) {
    EulerSample out;
    out.t = sc.t;
    out.r = sc.r;
    out.rdot = sc.rdot;
    out.mass = 0.0;
    out.kinetic_shift = 0.0;
    out.x2 = 0.0;
    out.internal = 0.0;
    const double h = sc.rdot / sc.r;
    for (std::size_t i = 0; i < st.size(); ++i) {
        const double x = st.x0 + i * st.dx;
        out.mass += st.rho[i] * st.dx;
        out.kinetic_shift += st.rho[i] * sqr(st.u[i] - h * x) * st.dx;
        out.x2 += st.rho[i] * x * x * st.dx;
        out.internal += std::pow(st.rho[i], st.gamma_exp) * st.dx;
    }
    out.internal *= 2.0 / st.gamma_exp;
    const double bw = std::pow(sc.r, q);
    out.dispersion = bw * out.kinetic_shift + out.x2 / (sc.r * sc.r) + bw * out.internal;
    return out;
}

}  // namespace

EulerRun simulate_euler_gas(const EulerState1D& initial, const EulerConfig& cfg) {
    initial.validate();
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
        throw std::invalid_argument("simulate_euler_gas: dt and t_end must be positive");
    EulerState1D st = initial;
    const std::size_t n = st.size();
    const double g = st.gamma_exp;
    const double q = euler_q_exponent(g, 1);

    // R for the dispersion functional: Rdd = R^-(q+1), R(0)=r0, Rdot(0)=0.
    PowerLawScale sc;
    sc.q = q;
    sc.r = cfg.r0;

    EulerRun run;
    auto idx = [&](std::ptrdiff_t i) {
        return static_cast<std::size_t>((i % static_cast<std::ptrdiff_t>(n) + n) % n);
    };

    run.series.push_back(euler_sample(st, sc, q));
    run.snapshots.push_back(st);
    double next_record = cfg.cadence;

    std::vector<double> rho_new(n), u_new(n);
    const std::size_t n_steps =
        static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double dt = std::min(cfg.dt, cfg.t_end - sc.t);
        if (dt <= 0.0) break;

        // steepness monitor (classical-solution regime only)
        double steep = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double du = (st.u[idx(i + 1)] - st.u[idx(i - 1)]) / (2.0 * st.dx);
            steep = std::max(steep, std::abs(du));
        }
        if (steep * dt > cfg.steepness_limit) {
            run.shock_terminated = true;
            break;
        }

        // conservative mass update with upwind interface fluxes
        for (std::size_t i = 0; i < n; ++i) {
            auto flux = [&](std::size_t l, std::size_t rix) {
                const double uf = 0.5 * (st.u[l] + st.u[rix]);
                return uf >= 0.0 ? st.rho[l] * uf : st.rho[rix] * uf;
            };
            const double fr = flux(i, idx(i + 1));
            const double fl = flux(idx(i - 1), i);
            rho_new[i] = st.rho[i] - dt / st.dx * (fr - fl);
            if (rho_new[i] < 0.0) rho_new[i] = 0.0;
        }
        // velocity: upwind advection + pressure source -d/dx rho^(g-1)
        for (std::size_t i = 0; i < n; ++i) {
            const double a = st.u[i];
            const double dudx = a >= 0.0
                                    ? (st.u[i] - st.u[idx(i - 1)]) / st.dx
                                    : (st.u[idx(i + 1)] - st.u[i]) / st.dx;
            const double pl = std::pow(st.rho[idx(i - 1)], g - 1.0);
            const double pr = std::pow(st.rho[idx(i + 1)], g - 1.0);
            u_new[i] = a - dt * (a * dudx + (pr - pl) / (2.0 * st.dx));
        }
        st.rho.swap(rho_new);
        st.u.swap(u_new);
        sc.step(dt);

        const bool last = k + 1 == n_steps;
        if (sc.t >= next_record - 1e-9 || last) {
            run.series.push_back(euler_sample(st, sc, q));
            while (next_record <= sc.t + 1e-9) next_record += cfg.cadence;
        }
    }
    run.snapshots.push_back(st);
    run.t_final = sc.t;
    return run;
}

void write_euler_functional_csv(const EulerRun& run, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t,R,Rdot,D\n");
    for (const auto& s : run.series)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", s.t, s.r, s.rdot, s.dispersion);
    std::fclose(f);
}

void write_euler_state_csv(const EulerRun& run, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t,x,rho,u\n");
    const double times[2] = {0.0, run.t_final};
    for (int s = 0; s < 2 && s < static_cast<int>(run.snapshots.size()); ++s) {
        const EulerState1D& st = run.snapshots[s];
        for (std::size_t i = 0; i < st.size(); ++i)
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", times[s], st.x0 + i * st.dx,
                         st.rho[i], st.u[i]);
    }
    std::fclose(f);
}

}  // namespace rescale
