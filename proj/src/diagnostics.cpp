#include "rescale/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rescale {

void fill_dldt_numeric(std::vector<LyapunovRecord>& series) {
    const std::size_t n = series.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (n < 2) {
            series[i].dldt_numeric = 0.0;
            continue;
        }
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 < n ? i + 1 : i;
        const double dt = series[hi].t - series[lo].t;
        series[i].dldt_numeric =
            dt > 0.0 ? (series[hi].total - series[lo].total) / dt : 0.0;
    }
}

void write_lyapunov_csv(const std::vector<LyapunovRecord>& series,
                        const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t,R,Rdot,K,P,logTerm,L,dLdt_formula,dLdt_numeric\n");
    for (const auto& r : series)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                     r.r, r.rdot, r.kinetic, r.potential, r.log_term, r.total,
                     r.dldt_formula, r.dldt_numeric);
    std::fclose(f);
}

LyapunovRecord lyapunov_vp(const ParticleEnsemble& e, double rho_u,
                           const ScalingState& s, double mass, int eps) {
    const int d = e.geom == Geometry::Planar2D ? 2 : e.d;
    LyapunovRecord rec;
    rec.t = s.t;
    rec.r = s.r;
    rec.rdot = s.rdot;
    const KineticMoments m = kinetic_moments(e, s.r, s.rdot);
    const double bw = std::pow(s.r, d - 2.0);
    rec.kinetic_raw = m.kinetic_raw;
    rec.rho_u = rho_u;
    rec.x2 = m.x2;
    rec.kinetic = bw * m.kinetic_raw;
    rec.potential = bw * rho_u - eps * m.x2 / (s.r * s.r);
    rec.log_term = d == 2 ? mass * mass / (2.0 * M_PI) * std::log(s.r) : 0.0;
    rec.total = rec.kinetic + rec.potential + rec.log_term;
    rec.dldt_formula = (d - 4.0) * s.rdot * std::pow(s.r, d - 3.0) * m.kinetic_raw;
    return rec;
}

LyapunovRecord lyapunov_ep(const ShellSystem& shells, const ScalingState& s, int eps) {
    LyapunovRecord rec;
    rec.t = s.t;
    rec.r = s.r;
    rec.rdot = s.rdot;
    const double h = s.rdot / s.r;
    double kin = 0.0, x2 = 0.0;
    for (std::size_t i = 0; i < shells.size(); ++i) {
        kin += shells.m[i] * (shells.vr[i] - h * shells.r[i]) * (shells.vr[i] - h * shells.r[i]);
        x2 += shells.m[i] * shells.r[i] * shells.r[i];
    }
    const double rho_u = shell_rho_u(shells, eps);
    const double mass = shells.mass();
    const int d = shells.d;
    const double bw = std::pow(s.r, d - 2.0);
    rec.kinetic_raw = kin;
    rec.rho_u = rho_u;
    rec.x2 = x2;
    rec.kinetic = bw * kin;
    rec.potential = bw * rho_u - eps * x2 / (s.r * s.r);
    rec.log_term = d == 2 ? mass * mass / (2.0 * M_PI) * std::log(s.r) : 0.0;
    rec.total = rec.kinetic + rec.potential + rec.log_term;
    rec.dldt_formula = (d - 4.0) * s.rdot * std::pow(s.r, d - 3.0) * kin;
    return rec;
}

double lower_bound_2d(double mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("lower_bound_2d: mass must be positive");
    return mass * mass / (4.0 * M_PI) * (1.0 - std::log(mass / (2.0 * M_PI)));
}

StrichartzIntegral strichartz_integral(const std::vector<LyapunovRecord>& series, int d) {
    if (d != 2 && d != 3)
        throw std::invalid_argument("strichartz_integral: stated for d = 2, 3");
    StrichartzIntegral out;
    out.t.reserve(series.size());
    out.running.reserve(series.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i > 0) {
            const auto& a = series[i - 1];
            const auto& b = series[i];
            const double fa = a.rdot * std::pow(a.r, d - 3.0) * a.kinetic_raw;
            const double fb = b.rdot * std::pow(b.r, d - 3.0) * b.kinetic_raw;
            acc += 0.5 * (fa + fb) * (b.t - a.t);
        }
        out.t.push_back(series[i].t);
        out.running.push_back(acc);
    }
    out.total = acc;
    return out;
}

double StrichartzIntegral::tail_fraction(double window_start) const {
    if (running.empty() || total <= 0.0) return 0.0;
    double at_window = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= window_start) at_window = running[i];
    }
    return (total - at_window) / total;
}

DecayFit fit_decay(const std::vector<double>& scale, const std::vector<double>& value,
                   double scale_lo, double scale_hi) {
    if (scale.size() != value.size())
        throw std::invalid_argument("fit_decay: series lengths disagree");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < scale.size(); ++i) {
        if (scale[i] < scale_lo || scale[i] > scale_hi) continue;
        if (!(scale[i] > 0.0) || !(value[i] > 0.0)) continue;
        const double x = std::log(scale[i]), y = std::log(value[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) throw std::invalid_argument("fit_decay: degenerate window (fewer than 3 points)");
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-14 * n * sxx)
        throw std::invalid_argument("fit_decay: degenerate window (no scale spread)");
    DecayFit fit;
    fit.exponent = (n * sxy - sx * sy) / det;
    const double intercept = (sy - fit.exponent * sx) / n;
    fit.prefactor = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < scale.size(); ++i) {
        if (scale[i] < scale_lo || scale[i] > scale_hi) continue;
        if (!(scale[i] > 0.0) || !(value[i] > 0.0)) continue;
        const double r = std::log(value[i]) - (intercept + fit.exponent * std::log(scale[i]));
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / n);
    fit.window_lo = scale_lo;
    fit.window_hi = scale_hi;
    fit.n_points = n;
    return fit;
}

double liminf_window(const std::vector<double>& t, const std::vector<double>& value,
                     double window) {
    if (t.size() != value.size() || t.empty())
        throw std::invalid_argument("liminf_window: malformed series");
    const double start = t.back() - window;
    double m = 1e300;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= start) m = std::min(m, value[i]);
    return m;
}

std::vector<double> weighted_series(const std::vector<double>& t,
                                    const std::vector<double>& value, bool log_weight) {
    std::vector<double> out(value.size());
    for (std::size_t i = 0; i < value.size(); ++i)
        out[i] = value[i] * (log_weight ? std::log(t[i] + 2.0) : 1.0);
    return out;
}

double dual_norm_d12(const ParticleEnsemble& e, int d) {
    return std::sqrt(radial_field_energy(e, d));
}

SupportGrowthVerdict support_growth_check(const std::vector<double>& support_radius,
                                          const std::vector<LyapunovRecord>& series,
                                          double mass, double window_start) {
    if (support_radius.size() != series.size())
        throw std::invalid_argument("support_growth_check: series lengths disagree");
    SupportGrowthVerdict v;
    if (series.empty()) return v;
    const double l0 = series.front().total;
    double min_ratio = 1e300;
    bool chain = true;
    const double coef = mass * mass / (2.0 * M_PI);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double r_sup = support_radius[i];
        const double rr = series[i].r;
        if (series[i].t >= window_start) min_ratio = std::min(min_ratio, r_sup / rr);
        if (coef * (std::log(rr) - std::log(2.0 * r_sup)) > series[i].total + 1e-9 ||
            series[i].total > l0 + 1e-9 * std::max(1.0, std::abs(l0)))
            chain = false;
    }
    v.min_ratio = min_ratio;
    v.ratio_positive = min_ratio > 0.0 && min_ratio < 1e300;
    v.chain_holds = chain;
    return v;
}

LogLimits2D ep_log_limits_2d(const ShellRun& run) {
    if (run.config.d != 2)
        throw std::invalid_argument("ep_log_limits_2d: d = 2 run required");
    if (run.records.empty()) throw std::invalid_argument("ep_log_limits_2d: empty run");
    const LyapunovRecord& last = run.records.back();
    LogLimits2D out;
    const double lr = std::log(last.r);
    out.potential_ratio = last.rho_u / lr;
    out.kinetic_ratio = run.rho_u2_series.back() / lr;
    out.moment_ratio = last.x2 / (last.r * last.r);
    return out;
}

}  // namespace rescale
