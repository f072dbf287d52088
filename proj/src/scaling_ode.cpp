#include "rescale/scaling_ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rescale/errors.hpp"

namespace rescale {

namespace {

// Integer power; d stays small so this beats std::pow and keeps results
// bit-reproducible across libm versions.
double powi(double x, int n) {
    if (n < 0) return 1.0 / powi(x, -n);
    double acc = 1.0, base = x;
    while (n > 0) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

double pow_half_d(double r, int d) {
    // R^(-d/2)
    double p = powi(r, d);
    return 1.0 / std::sqrt(p);
}

}  // namespace

void ScalingParams::validate() const {
    if (d < 1) throw std::invalid_argument("scaling: dimension must be >= 1");
    if (eps != 1 && eps != -1) throw std::invalid_argument("scaling: eps must be +1 or -1");
    if (!(c0 > 0.0)) throw std::invalid_argument("scaling: c0 must be positive");
    if (!(r0 > 0.0)) throw std::invalid_argument("scaling: R0 must be positive");
}

ScalingState initial_state(const ScalingParams& p) {
    p.validate();
    return ScalingState{0.0, p.r0, p.rdot0, 0.0};
}

double scaling_accel(const ScalingParams& p, double r) {
    return -static_cast<double>(p.eps) * p.c0 * powi(r, 1 - p.d);
}

void rk4_step(const ScalingParams& p, ScalingState& s, double dt,
              double collapse_floor) {
    if (!(dt > 0.0)) throw std::invalid_argument("scaling: step size must be positive");
    const double floor = collapse_floor < 0.0 ? 1e-6 * p.r0 : collapse_floor;

    const double r1 = s.r, v1 = s.rdot;
    const double a1 = scaling_accel(p, r1);
    const double r2 = r1 + 0.5 * dt * v1, v2 = v1 + 0.5 * dt * a1;
    const double a2 = scaling_accel(p, r2);
    const double r3 = r1 + 0.5 * dt * v2, v3 = v1 + 0.5 * dt * a2;
    const double a3 = scaling_accel(p, r3);
    const double r4 = r1 + dt * v3, v4 = v1 + dt * a3;
    const double a4 = scaling_accel(p, r4);

    const double tau_w0 = pow_half_d(r1, p.d);
    s.r += dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
    s.rdot += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    s.t += dt;

    if (s.r <= floor || !std::isfinite(s.r)) {
        if (p.eps == +1)
            throw collapse_error("scaling: R reached the collapse floor at t=" +
                                 std::to_string(s.t));
        throw std::runtime_error("scaling: R left the positive domain (step too large?)");
    }
    s.tau += 0.5 * dt * (tau_w0 + pow_half_d(s.r, p.d));
}

ClosedForm1D closed_form_r(const ScalingParams& p, double t) {
    p.validate();
    if (p.d != 1)
        throw std::invalid_argument("closed_form_r: exact parabola only exists for d = 1");
    const double a = -static_cast<double>(p.eps) * p.c0;
    return ClosedForm1D{0.5 * a * t * t + p.rdot0 * t + p.r0, a * t + p.rdot0};
}

double first_integral(const ScalingParams& p, double r, double rdot) {
    p.validate();
    if (p.d == 1)
        throw std::invalid_argument("first_integral: undefined for d = 1 (use closed_form_r)");
    if (!(r > 0.0)) throw std::invalid_argument("first_integral: R must be positive");
    const double e = static_cast<double>(p.eps);
    if (p.d == 2) return 0.5 * rdot * rdot + e * p.c0 * std::log(r);
    return 0.5 * rdot * rdot - e * p.c0 / (p.d - 2) * powi(r, 2 - p.d);
}

ScalingSolution integrate_r(const ScalingParams& p, double t_end, double dt,
                            double collapse_floor) {
    p.validate();
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate_r: t_end must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_r: dt must be positive");

    const std::size_t n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    ScalingSolution sol;
    sol.params = p;
    sol.t.reserve(n + 1);
    sol.r.reserve(n + 1);
    sol.rdot.reserve(n + 1);
    sol.tau.reserve(n + 1);

    ScalingState s = initial_state(p);
    auto push = [&](const ScalingState& st) {
        sol.t.push_back(st.t);
        sol.r.push_back(st.r);
        sol.rdot.push_back(st.rdot);
        sol.tau.push_back(st.tau);
    };
    push(s);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = std::min(dt, t_end - s.t);
        if (step <= 0.0) break;
        rk4_step(p, s, step, collapse_floor);
        push(s);
    }
    return sol;
}

double ScalingSolution::r_at(double time) const {
    if (t.empty()) throw std::invalid_argument("ScalingSolution: empty");
    if (time < t.front() - 1e-12 || time > t.back() + 1e-12)
        throw std::invalid_argument("ScalingSolution: time outside sampled window");
    auto it = std::upper_bound(t.begin(), t.end(), time);
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    if (i + 1 >= t.size()) i = t.size() - 2;
    const double h = t[i + 1] - t[i];
    const double s = (time - t[i]) / h;
    // Hermite basis on (r, rdot) endpoint data
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * r[i] + h10 * h * rdot[i] + h01 * r[i + 1] + h11 * h * rdot[i + 1];
}

double ScalingSolution::rdot_at(double time) const {
    if (t.empty()) throw std::invalid_argument("ScalingSolution: empty");
    auto it = std::upper_bound(t.begin(), t.end(), time);
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    if (i + 1 >= t.size()) i = t.size() - 2;
    const double h = t[i + 1] - t[i];
    const double s = (time - t[i]) / h;
    // Hermite on (rdot, rddot); accelerations recomputed from the force law
    const double a0 = scaling_accel(params, r[i]);
    const double a1 = scaling_accel(params, r[i + 1]);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * rdot[i] + h10 * h * a0 + h01 * rdot[i + 1] + h11 * h * a1;
}

void ScalingSolution::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t,R,Rdot,tau,first_integral\n");
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double fi = params.d >= 2 ? first_integral(params, r[i], rdot[i]) : 0.0;
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t[i], r[i], rdot[i], tau[i], fi);
    }
    std::fclose(f);
}

TauLimit tau_infinity(const ScalingSolution& sol) {
    const ScalingParams& p = sol.params;
    if (p.eps != -1)
        throw std::invalid_argument("tau_infinity: defined for the plasma case only");
    TauLimit out;
    if (p.d <= 2) {
        out.finite = false;  // R grows at most like t*sqrt(log t): integral diverges
        return out;
    }
    const double r_e = sol.r.back();
    const double v_e = sol.rdot.back();
    if (!(v_e > 0.0))
        throw std::invalid_argument("tau_infinity: window too short, Rdot not yet positive");
    // tail: int_{t_e}^inf (r_e + v_e s)^(-d/2) ds = r_e^(1-d/2) / (v_e (d/2-1))
    const double tail = std::pow(r_e, 1.0 - 0.5 * p.d) / (v_e * (0.5 * p.d - 1.0));
    out.finite = true;
    out.value = sol.tau.back() + tail;
    return out;
}

double lambda_rescale_check(const ScalingSolution& sol, double lambda, double fd_step) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda_rescale_check: lambda must be > 0");
    const ScalingParams& p = sol.params;
    const double t_max = sol.t.back();
    const double window = t_max / lambda;  // R(lambda t) needs lambda*t <= t_max
    const double h = fd_step;
    if (window <= 8.0 * h)
        throw std::invalid_argument("lambda_rescale_check: sampled range too short for this lambda");

    const double scale = std::pow(p.c0, -1.0 / p.d) * std::pow(lambda, -2.0 / p.d);
    auto r_lambda = [&](double time) { return scale * sol.r_at(lambda * time); };
    // Richardson-extrapolated central second difference kills the h^2 term,
    // which otherwise grows like lambda^(3+) through the time compression; the
    // stencil widens with t because rounding noise scales with R while the
    // higher derivatives decay.
    auto second_derivative = [&](double time, double hh) {
        const double rc = r_lambda(time);
        const double d1 =
            (r_lambda(time + hh) - 2.0 * rc + r_lambda(time - hh)) / (hh * hh);
        const double d2 =
            (r_lambda(time + 2.0 * hh) - 2.0 * rc + r_lambda(time - 2.0 * hh)) /
            (4.0 * hh * hh);
        return (4.0 * d1 - d2) / 3.0;
    };

    double worst = 0.0;
    const int n_probe = 200;
    for (int k = 0; k <= n_probe; ++k) {
        // interior 95% of the overlap: at the right edge the stencil would be
        // forced narrow and the difference quotient becomes rounding noise
        const double time = 2.0 * h + (0.95 * window - 2.0 * h) * k / n_probe;
        double hh = h * (1.0 + time);
        hh = std::min(hh, 0.49 * (window - time));
        hh = std::min(hh, 0.49 * time);
        hh = std::max(hh, h);
        const double rc = r_lambda(time);
        const double res =
            second_derivative(time, hh) + static_cast<double>(p.eps) * std::pow(rc, 1.0 - p.d);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

double PowerLawScale::accel(double rr) const { return std::pow(rr, -(q + 1.0)); }

double PowerLawScale::invariant() const { return rdot * rdot + 2.0 / q * std::pow(r, -q); }

void PowerLawScale::step(double h) {
    const double r1 = r, v1 = rdot, a1 = accel(r1);
    const double r2 = r1 + 0.5 * h * v1, v2 = v1 + 0.5 * h * a1, a2 = accel(r2);
    const double r3 = r1 + 0.5 * h * v2, v3 = v1 + 0.5 * h * a2, a3 = accel(r3);
    const double r4 = r1 + h * v3, v4 = v1 + h * a3, a4 = accel(r4);
    r += h / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4);
    rdot += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    t += h;
}

GrowthLaw asymptotic_growth(int d) {
    if (d < 1) throw std::invalid_argument("asymptotic_growth: d >= 1 required");
    GrowthLaw law;
    law.d = d;
    if (d == 1)
        law.description = "t^2";
    else if (d == 2)
        law.description = "t*sqrt(log t)";
    else
        law.description = "t";
    return law;
}

double GrowthLaw::evaluate(double t) const {
    if (d == 1) return t * t;
    if (d == 2) return t * std::sqrt(std::log(t));
    return t;
}

GrowthFit fit_growth(const ScalingSolution& sol, const GrowthLaw& law,
                     double t_lo, double t_hi) {
    if (!(t_hi > t_lo) || t_lo <= (law.d == 2 ? 1.0 : 0.0))
        throw std::invalid_argument("fit_growth: bad window");
    double lo = 1e300, hi = -1e300, last = 0.0;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        if (sol.t[i] < t_lo || sol.t[i] > t_hi) continue;
        const double ratio = sol.r[i] / law.evaluate(sol.t[i]);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        last = ratio;
    }
    if (hi < lo) throw std::invalid_argument("fit_growth: window contains no samples");
    return GrowthFit{last, hi / lo - 1.0};
}

}  // namespace rescale
