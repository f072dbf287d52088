#include "rescale/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace rescale {

namespace {

double sqr(double x) { return x * x; }

// Inverse normal CDF (Acklam's rational approximation, |rel err| < 1.2e-9);
// plenty for initial sampling, and bit-stable across libm versions.
double inv_norm(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("inv_norm: p in (0,1) required");
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
    }
    if (p > phigh) {
        const double q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Kronecker low-discrepancy sequence (R_s per Roberts); component k of
// sample i is frac(0.5 + (i+1) * gamma^-(k+1)) with gamma the root of
// x^(s+1) = x + 1.
struct QuasiSeq {
    std::vector<double> alpha;
    std::uint64_t offset;
    QuasiSeq(int dims, std::uint64_t seed) : alpha(dims), offset(seed % 1000003) {
        double g = 1.5;
        for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / (dims + 1));
        double a = 1.0 / g;
        for (int k = 0; k < dims; ++k) {
            alpha[k] = a;
            a /= g;
        }
    }
    double u(std::uint64_t i, int k) const {
        double v = 0.5 + static_cast<double>(i + 1 + offset) * alpha[k];
        v -= std::floor(v);
        // keep away from {0,1} for inverse-CDF use
        return std::min(std::max(v, 1e-12), 1.0 - 1e-12);
    }
};

struct UniformSource {
    bool stratified;
    QuasiSeq quasi;
    std::mt19937_64 rng;
    UniformSource(int dims, std::uint64_t seed, bool strat)
        : stratified(strat), quasi(dims, seed), rng(seed) {}
    double operator()(std::uint64_t i, int k) {
        if (stratified) return quasi.u(i, k);
        return std::min(std::max(std::generate_canonical<double, 53>(rng), 1e-12),
                        1.0 - 1e-12);
    }
};

// Gaussian-ball radial mass CDF table (d dims, unit scale); inverted by
// monotone interpolation.
struct GaussianRadiusTable {
    std::vector<double> r, cdf;
    explicit GaussianRadiusTable(int d) {
        const int n = 4096;
        const double rmax = 8.0;
        r.resize(n + 1);
        cdf.resize(n + 1);
        double acc = 0.0;
        double prev = 0.0;
        r[0] = 0.0;
        cdf[0] = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double ri = rmax * i / n;
            const double fi = std::pow(ri, d - 1.0) * std::exp(-0.5 * ri * ri);
            acc += 0.5 * (prev + fi) * (rmax / n);
            prev = fi;
            r[i] = ri;
            cdf[i] = acc;
        }
        for (double& c : cdf) c /= acc;
    }
    double invert(double u) const {
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::size_t i = it == cdf.begin() ? 1 : static_cast<std::size_t>(it - cdf.begin());
        if (i >= cdf.size()) i = cdf.size() - 1;
        const double c0 = cdf[i - 1], c1 = cdf[i];
        const double s = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
        return r[i - 1] + s * (r[i] - r[i - 1]);
    }
};

std::vector<std::size_t> sorted_order(const std::vector<double>& key) {
    std::vector<std::size_t> idx(key.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    return idx;
}

std::vector<double> planar_radii(const ParticleEnsemble& e) {
    std::vector<double> r(e.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        r[i] = std::hypot(e.pos[i], e.pos2[i]);
    return r;
}

}  // namespace

double ParticleEnsemble::mass() const {
    double m = 0.0;
    for (double wi : w) m += wi;
    return m;
}

void ParticleEnsemble::validate() const {
    if (w.size() != pos.size() || vel.size() != pos.size())
        throw std::invalid_argument("ensemble: array lengths disagree");
    if (geom == Geometry::Radial) {
        if (ell.size() != pos.size())
            throw std::invalid_argument("ensemble: radial geometry needs ell");
        for (double r : pos)
            if (r < 0.0) throw std::invalid_argument("ensemble: radial positions must be >= 0");
    }
    if (geom == Geometry::Planar2D &&
        (pos2.size() != pos.size() || vel2.size() != pos.size()))
        throw std::invalid_argument("ensemble: planar geometry needs both components");
    for (double wi : w)
        if (!(wi > 0.0)) throw std::invalid_argument("ensemble: weights must be positive");
}

FieldSolution sheet_field_1d(const ParticleEnsemble& e, bool with_energy) {
    if (e.geom != Geometry::Cartesian1D)
        throw std::invalid_argument("sheet_field_1d: cartesian-1d geometry required");
    const std::size_t n = e.size();
    FieldSolution out;
    out.accel.assign(n, 0.0);
    const double m_total = e.mass();
    const auto idx = sorted_order(e.pos);

    double left = 0.0;
    std::size_t i = 0;
    while (i < n) {
        // group of exactly equal positions
        std::size_t j = i;
        double group_w = 0.0;
        while (j < n && e.pos[idx[j]] == e.pos[idx[i]]) group_w += e.w[idx[j++]];
        const double field = left + 0.5 * group_w - 0.5 * m_total;
        for (std::size_t k = i; k < j; ++k) out.accel[idx[k]] = field;
        left += group_w;
        i = j;
    }
    if (with_energy) out.rho_u = pairwise_rho_u_1d(e.pos, e.w);
    return out;
}

double pairwise_rho_u_1d(const std::vector<double>& x, const std::vector<double>& w) {
    // -(1/2) sum_ij w_i w_j |x_i - x_j| via prefix sums on the sorted order
    const auto idx = sorted_order(x);
    double acc = 0.0, w_pref = 0.0, wx_pref = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double xi = x[idx[k]], wi = w[idx[k]];
        acc += wi * (xi * w_pref - wx_pref);
        w_pref += wi;
        wx_pref += wi * xi;
    }
    return -acc;  // double sum counts each pair twice; -(1/2)*2*acc
}

double pairwise_rho_u_radial(const std::vector<double>& radii,
                             const std::vector<double>& weights, int d, int eps) {
    if (d < 2) throw std::invalid_argument("pairwise_rho_u_radial: d >= 2 required");
    const auto idx = sorted_order(radii);
    const double area = unit_sphere_area(d);
    auto kernel = [&](double r) {
        if (d == 2) return eps / (2.0 * M_PI) * std::log(r);
        return -eps / ((d - 2.0) * area * std::pow(r, d - 2.0));
    };
    double sum = 0.0, w_before = 0.0;
    std::size_t i = 0;
    const std::size_t n = idx.size();
    while (i < n) {
        std::size_t j = i;
        double group_w = 0.0;
        const double r = radii[idx[i]];
        while (j < n && radii[idx[j]] == r) group_w += weights[idx[j++]];
        if (r > 0.0) sum += kernel(r) * (group_w * group_w + 2.0 * group_w * w_before);
        w_before += group_w;
        i = j;
    }
    return sum;
}

FieldSolution radial_field(const ParticleEnsemble& e, int eps, bool with_energy) {
    if (e.geom != Geometry::Radial && e.geom != Geometry::Planar2D)
        throw std::invalid_argument("radial_field: radial or planar geometry required");
    const int d = e.geom == Geometry::Planar2D ? 2 : e.d;
    if (d < 2) throw std::invalid_argument("radial_field: d >= 2 required");

    const std::vector<double> radii =
        e.geom == Geometry::Planar2D ? planar_radii(e) : e.pos;
    const auto idx = sorted_order(radii);
    const double area = unit_sphere_area(d);

    std::vector<double> mag(e.size(), 0.0);
    double w_before = 0.0;
    std::size_t i = 0;
    const std::size_t n = idx.size();
    while (i < n) {
        std::size_t j = i;
        double group_w = 0.0;
        const double r = radii[idx[i]];
        while (j < n && radii[idx[j]] == r) group_w += e.w[idx[j]], ++j;
        if (r > 0.0) {
            const double m_eff = w_before + 0.5 * group_w;
            const double f = -eps * m_eff / (area * std::pow(r, d - 1.0));
            for (std::size_t k = i; k < j; ++k) mag[idx[k]] = f;
        }
        w_before += group_w;
        i = j;
    }

    FieldSolution out;
    if (e.geom == Geometry::Radial) {
        out.accel = std::move(mag);
    } else {
        out.accel.assign(n, 0.0);
        out.accel2.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double r = radii[k];
            if (r > 0.0) {
                out.accel[k] = mag[k] * e.pos[k] / r;
                out.accel2[k] = mag[k] * e.pos2[k] / r;
            }
        }
    }
    if (with_energy) out.rho_u = pairwise_rho_u_radial(radii, e.w, d, eps);
    return out;
}

FieldSolution step_leapfrog(ParticleEnsemble& e, const FieldSolution& field,
                            double dt, int eps, double b0, bool with_energy) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_leapfrog: dt must be positive");
    const std::size_t n = e.size();

    switch (e.geom) {
        case Geometry::Cartesian1D: {
            for (std::size_t i = 0; i < n; ++i) e.vel[i] += 0.5 * dt * field.accel[i];
            for (std::size_t i = 0; i < n; ++i) e.pos[i] += dt * e.vel[i];
            FieldSolution f1 = sheet_field_1d(e, with_energy);
            for (std::size_t i = 0; i < n; ++i) e.vel[i] += 0.5 * dt * f1.accel[i];
            return f1;
        }
        case Geometry::Radial: {
            auto accel_of = [&](const FieldSolution& f, std::size_t i) {
                const double r = e.pos[i];
                const double cf = (e.ell[i] != 0.0 && r > 0.0)
                                      ? e.ell[i] * e.ell[i] / (r * r * r)
                                      : 0.0;
                return f.accel[i] + cf;
            };
            for (std::size_t i = 0; i < n; ++i) e.vel[i] += 0.5 * dt * accel_of(field, i);
            for (std::size_t i = 0; i < n; ++i) {
                e.pos[i] += dt * e.vel[i];
                if (e.pos[i] < 0.0) {  // passed through the origin (ell = 0 paths)
                    e.pos[i] = -e.pos[i];
                    e.vel[i] = -e.vel[i];
                }
            }
            FieldSolution f1 = radial_field(e, eps, with_energy);
            for (std::size_t i = 0; i < n; ++i) e.vel[i] += 0.5 * dt * accel_of(f1, i);
            return f1;
        }
        case Geometry::Planar2D: {
            const double th = 0.5 * b0 * dt;
            const double c = std::cos(th), s = std::sin(th);
            auto rotate = [&](std::size_t i) {
                const double v1 = e.vel[i], v2 = e.vel2[i];
                e.vel[i] = c * v1 - s * v2;
                e.vel2[i] = s * v1 + c * v2;
            };
            for (std::size_t i = 0; i < n; ++i) {
                e.vel[i] += 0.5 * dt * field.accel[i];
                e.vel2[i] += 0.5 * dt * field.accel2[i];
                rotate(i);
            }
            for (std::size_t i = 0; i < n; ++i) {
                e.pos[i] += dt * e.vel[i];
                e.pos2[i] += dt * e.vel2[i];
            }
            FieldSolution f1 = radial_field(e, eps, with_energy);
            for (std::size_t i = 0; i < n; ++i) {
                rotate(i);
                e.vel[i] += 0.5 * dt * f1.accel[i];
                e.vel2[i] += 0.5 * dt * f1.accel2[i];
            }
            return f1;
        }
    }
    throw std::logic_error("step_leapfrog: unknown geometry");
}

KineticMoments kinetic_moments(const ParticleEnsemble& e, double r, double rdot) {
    const double h = rdot / r;
    KineticMoments m;
    switch (e.geom) {
        case Geometry::Cartesian1D:
            for (std::size_t i = 0; i < e.size(); ++i) {
                m.kinetic_raw += e.w[i] * sqr(e.vel[i] - h * e.pos[i]);
                m.x2 += e.w[i] * sqr(e.pos[i]);
            }
            break;
        case Geometry::Radial:
            for (std::size_t i = 0; i < e.size(); ++i) {
                const double tang2 =
                    e.pos[i] > 0.0 ? sqr(e.ell[i] / e.pos[i]) : 0.0;
                m.kinetic_raw += e.w[i] * (sqr(e.vel[i] - h * e.pos[i]) + tang2);
                m.x2 += e.w[i] * sqr(e.pos[i]);
            }
            break;
        case Geometry::Planar2D:
            for (std::size_t i = 0; i < e.size(); ++i) {
                m.kinetic_raw += e.w[i] * (sqr(e.vel[i] - h * e.pos[i]) +
                                           sqr(e.vel2[i] - h * e.pos2[i]));
                m.x2 += e.w[i] * (sqr(e.pos[i]) + sqr(e.pos2[i]));
                // x . eta_perp = -(x ^ v); the Hubble shift drops out
                m.cross -= e.w[i] * (e.pos[i] * e.vel2[i] - e.pos2[i] * e.vel[i]);
            }
            break;
    }
    return m;
}

double total_energy(const ParticleEnsemble& e, int eps) {
    double kin = 0.0;
    switch (e.geom) {
        case Geometry::Cartesian1D:
            for (std::size_t i = 0; i < e.size(); ++i) kin += e.w[i] * sqr(e.vel[i]);
            return 0.5 * kin + 0.5 * pairwise_rho_u_1d(e.pos, e.w);
        case Geometry::Radial:
            for (std::size_t i = 0; i < e.size(); ++i) {
                const double tang2 = e.pos[i] > 0.0 ? sqr(e.ell[i] / e.pos[i]) : 0.0;
                kin += e.w[i] * (sqr(e.vel[i]) + tang2);
            }
            return 0.5 * kin + 0.5 * pairwise_rho_u_radial(e.pos, e.w, e.d, eps);
        case Geometry::Planar2D: {
            for (std::size_t i = 0; i < e.size(); ++i)
                kin += e.w[i] * (sqr(e.vel[i]) + sqr(e.vel2[i]));
            return 0.5 * kin +
                   0.5 * pairwise_rho_u_radial(planar_radii(e), e.w, 2, eps);
        }
    }
    throw std::logic_error("total_energy: unknown geometry");
}

ParticleEnsemble sample_ensemble(int d, const SamplerConfig& cfg) {
    if (cfg.n == 0) throw std::invalid_argument("sampler: n must be positive");
    if (!(cfg.mass > 0.0)) throw std::invalid_argument("sampler: mass must be positive");
    ParticleEnsemble e;
    const double wp = cfg.mass / cfg.n;

    switch (cfg.profile) {
        case ProfileKind::ColdSlab: {
            e.geom = Geometry::Cartesian1D;
            e.d = 1;
            e.pos.resize(cfg.n);
            e.vel.assign(cfg.n, 0.0);
            e.w.assign(cfg.n, wp);
            for (std::size_t i = 0; i < cfg.n; ++i)
                e.pos[i] = -cfg.extent + (i + 0.5) * 2.0 * cfg.extent / cfg.n;
            break;
        }
        case ProfileKind::ColdBall: {
            e.geom = Geometry::Radial;
            e.d = d;
            e.pos.resize(cfg.n);
            e.vel.assign(cfg.n, 0.0);
            e.ell.assign(cfg.n, 0.0);
            e.w.assign(cfg.n, wp);
            for (std::size_t i = 0; i < cfg.n; ++i) {
                const double u = (i + 0.5) / cfg.n;  // mass fraction stratum
                e.pos[i] = cfg.extent * std::pow(u, 1.0 / d);
            }
            break;
        }
        case ProfileKind::WarmBall:
        case ProfileKind::WarmGaussian: {
            if (d < 2) throw std::invalid_argument("sampler: radial profile needs d >= 2");
            e.geom = Geometry::Radial;
            e.d = d;
            const std::size_t half = (cfg.n + 1) / 2;
            UniformSource unif(4, cfg.seed, cfg.stratified);
            GaussianRadiusTable table(d);
            for (std::size_t i = 0; i < half; ++i) {
                const double u = (i + 0.5) / half;
                double r;
                if (cfg.profile == ProfileKind::WarmBall)
                    r = cfg.extent * std::pow(u, 1.0 / d);
                else
                    r = cfg.extent * table.invert(u);
                const double vr = cfg.sigma_v * inv_norm(unif(i, 0));
                // tangential speed^2: sigma^2 * chi^2_(d-1)
                double vt2 = 0.0;
                for (int k = 0; k < d - 1; ++k)
                    vt2 += sqr(cfg.sigma_v * inv_norm(unif(i, 1 + k)));
                const double ellv = r * std::sqrt(vt2);
                // antithetic pair in v_r zeroes the net radial momentum
                e.pos.push_back(r);
                e.vel.push_back(vr);
                e.ell.push_back(ellv);
                if (e.pos.size() < cfg.n) {
                    e.pos.push_back(r);
                    e.vel.push_back(-vr);
                    e.ell.push_back(ellv);
                }
            }
            e.w.assign(e.pos.size(), cfg.mass / e.pos.size());
            break;
        }
        case ProfileKind::WarmDisk2D: {
            e.geom = Geometry::Planar2D;
            e.d = 2;
            const std::size_t half = (cfg.n + 1) / 2;
            UniformSource unif(5, cfg.seed, cfg.stratified);
            const double golden = 0.61803398874989484820;
            for (std::size_t i = 0; i < half; ++i) {
                const double u = (i + 0.5) / half;
                const double r = cfg.extent * std::sqrt(u);
                double th = 2.0 * M_PI * std::fmod(0.5 + (i + 1) * golden, 1.0);
                const double x1 = r * std::cos(th), x2 = r * std::sin(th);
                const double v1 = cfg.sigma_v * inv_norm(unif(i, 0));
                const double v2 = cfg.sigma_v * inv_norm(unif(i, 1));
                e.pos.push_back(x1);
                e.pos2.push_back(x2);
                e.vel.push_back(v1);
                e.vel2.push_back(v2);
                if (e.pos.size() < cfg.n) {
                    // mirror image: zeroes the net angular momentum exactly
                    e.pos.push_back(x1);
                    e.pos2.push_back(-x2);
                    e.vel.push_back(v1);
                    e.vel2.push_back(-v2);
                }
            }
            e.w.assign(e.pos.size(), cfg.mass / e.pos.size());
            break;
        }
    }
    e.validate();
    return e;
}

namespace {

FieldSolution compute_field(const ParticleEnsemble& e, int eps, bool with_energy) {
    return e.geom == Geometry::Cartesian1D ? sheet_field_1d(e, with_energy)
                                           : radial_field(e, eps, with_energy);
}

LyapunovRecord make_record(const ParticleEnsemble& e, double rho_u,
                           const ScalingState& s, double mass, int d, int eps) {
    LyapunovRecord rec;
    rec.t = s.t;
    rec.r = s.r;
    rec.rdot = s.rdot;
    const KineticMoments m = kinetic_moments(e, s.r, s.rdot);
    rec.kinetic_raw = m.kinetic_raw;
    rec.rho_u = rho_u;
    rec.x2 = m.x2;
    const double bw = std::pow(s.r, d - 2.0);
    rec.kinetic = bw * m.kinetic_raw;
    rec.potential = bw * rho_u - eps * m.x2 / (s.r * s.r);
    rec.log_term = d == 2 ? mass * mass / (2.0 * M_PI) * std::log(s.r) : 0.0;
    rec.total = rec.kinetic + rec.potential + rec.log_term;
    rec.dldt_formula = (d - 4.0) * s.rdot * std::pow(s.r, d - 3.0) * m.kinetic_raw;
    return rec;
}

double max_radius(const ParticleEnsemble& e) {
    double r = 0.0;
    if (e.geom == Geometry::Planar2D) {
        for (std::size_t i = 0; i < e.size(); ++i)
            r = std::max(r, std::hypot(e.pos[i], e.pos2[i]));
    } else {
        for (double p : e.pos) r = std::max(r, std::abs(p));
    }
    return r;
}

double max_speed(const ParticleEnsemble& e) {
    double v = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double s = std::abs(e.vel[i]);
        if (e.geom == Geometry::Planar2D) s = std::hypot(e.vel[i], e.vel2[i]);
        if (e.geom == Geometry::Radial && e.pos[i] > 0.0)
            s = std::hypot(e.vel[i], e.ell[i] / e.pos[i]);
        v = std::max(v, s);
    }
    return v;
}

}  // namespace

KineticRun simulate_vp(const KineticConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
        throw std::invalid_argument("simulate_vp: dt and t_end must be positive");
    KineticRun run;
    run.config = cfg;

    ParticleEnsemble e = sample_ensemble(cfg.d, cfg.sampler);
    if (e.geom != cfg.geom)
        throw std::invalid_argument("simulate_vp: sampler profile does not match geometry");
    const double mass = e.mass();

    ScalingParams sp = cfg.scaling;
    if (!cfg.scaling_given) sp = ScalingParams{cfg.d, cfg.eps, 1.0, 1.0, 0.0};
    ScalingState s = initial_state(sp);

    const int d = cfg.geom == Geometry::Planar2D ? 2 : cfg.d;
    const double lp = (d + 2.0) / d;

    FieldSolution field = compute_field(e, cfg.eps, true);

    auto emit = [&]() {
        run.records.push_back(make_record(e, field.rho_u, s, mass, d, cfg.eps));
        const double rmax = max_radius(e);
        run.support_radius.push_back(rmax);
        run.energy.push_back(total_energy(e, cfg.eps));
        if (cfg.geom != Geometry::Cartesian1D)
            run.rho_lp_norm.push_back(
                radial_density_lp_norm(e, lp, std::max(rmax, 1e-12)));
        if (cfg.geom == Geometry::Planar2D) {
            const KineticMoments m = kinetic_moments(e, s.r, s.rdot);
            run.cross_term.push_back(m.cross);
        }
        if (max_speed(e) * cfg.dt >
            cfg.cfl_fraction * std::max(rmax, 1e-12) / static_cast<double>(e.size()))
            run.cfl_warning = true;
    };
    auto snap = [&]() { run.snapshots.push_back(KineticSnapshot{s.t, e}); };

    if (cfg.geom == Geometry::Planar2D) {
        double rss = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double c = e.w[i] * (e.pos[i] * e.vel2[i] - e.pos2[i] * e.vel[i]);
            rss += c * c;
            sum -= c;
        }
        run.cross_noise_floor = std::sqrt(rss);
        if (std::abs(sum) > 3.0 * run.cross_noise_floor + 1e-12)
            run.symmetry_warning = true;
    }

    emit();
    snap();

    const double b0 = cfg.geom == Geometry::Planar2D ? cfg.b0 : 0.0;
    double next_record = cfg.cadence;
    double next_snapshot = cfg.snapshot_every > 0 ? cfg.snapshot_every : 2.0 * cfg.t_end;
    const std::size_t n_steps =
        static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double step = std::min(cfg.dt, cfg.t_end - s.t);
        if (step <= 0.0) break;
        const bool last = k + 1 == n_steps || s.t + step >= cfg.t_end - 1e-12;
        const bool record_now = s.t + step >= next_record - 1e-9 || last;
        rk4_step(sp, s, step);
        field = step_leapfrog(e, field, step, cfg.eps, b0, record_now);
        if (record_now) {
            emit();
            while (next_record <= s.t + 1e-9) next_record += cfg.cadence;
        }
        if (s.t >= next_snapshot - 1e-9 || last) {
            snap();
            while (next_snapshot <= s.t + 1e-9) next_snapshot += cfg.snapshot_every;
        }
    }
    fill_dldt_numeric(run.records);
    return run;
}

KineticRun simulate_vpm(const KineticConfig& cfg) {
    if (cfg.geom != Geometry::Planar2D)
        throw std::invalid_argument("simulate_vpm: planar-2d geometry required");
    return simulate_vp(cfg);
}

void write_snapshot_csv(const KineticRun& run, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    const Geometry g = run.config.geom;
    if (g == Geometry::Cartesian1D)
        std::fprintf(f, "t,id,x,v,weight\n");
    else if (g == Geometry::Radial)
        std::fprintf(f, "t,id,r,vr,ell,weight\n");
    else
        std::fprintf(f, "t,id,x1,x2,v1,v2,weight\n");
    for (const auto& snap : run.snapshots) {
        const ParticleEnsemble& e = snap.state;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (g == Geometry::Cartesian1D)
                std::fprintf(f, "%.17g,%zu,%.17g,%.17g,%.17g\n", snap.t, i, e.pos[i],
                             e.vel[i], e.w[i]);
            else if (g == Geometry::Radial)
                std::fprintf(f, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g\n", snap.t, i,
                             e.pos[i], e.vel[i], e.ell[i], e.w[i]);
            else
                std::fprintf(f, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", snap.t, i,
                             e.pos[i], e.pos2[i], e.vel[i], e.vel2[i], e.w[i]);
        }
    }
    std::fclose(f);
}

double weak_norm_distance(const GriddedDensity1D& nu, const StationaryState& target) {
    if (target.d != 1)
        throw std::invalid_argument("weak_norm_distance: 1D target required");
    if (nu.values.empty() || !(nu.dx > 0.0))
        throw std::invalid_argument("weak_norm_distance: malformed grid");
    double mass = 0.0;
    for (double v : nu.values) mass += v * nu.dx;
    if (std::abs(mass - target.mass) > 1e-8 * std::max(1.0, target.mass))
        throw std::invalid_argument("weak_norm_distance: mass mismatch");

    const double level = target.density_radial(0.0);
    const double radius = target.radius();
    const double gl = nu.x0, gr = nu.x0 + nu.values.size() * nu.dx;
    const double lo = std::min(gl, -radius) - nu.dx;
    const double hi = std::max(gr, radius) + nu.dx;
    const double h = nu.dx / 8.0;  // refined midpoint rule over both supports
    const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / h));
    auto nu_at = [&](double x) {
        if (x < gl || x >= gr) return 0.0;
        std::size_t j = static_cast<std::size_t>((x - gl) / nu.dx);
        if (j >= nu.values.size()) j = nu.values.size() - 1;
        return nu.values[j];
    };
    double phi = 0.0, dist = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double xm = lo + (k + 0.5) * h;
        const double target_val = std::abs(xm) <= radius ? level : 0.0;
        phi += (nu_at(xm) - target_val) * h;
        dist += std::min(std::abs(phi), 1.0) * h;
    }
    return dist;
}

double sheet_field_distance(const ParticleEnsemble& e, const StationaryState& target,
                            double r_scale, double xi_max, std::size_t grid) {
    if (e.geom != Geometry::Cartesian1D)
        throw std::invalid_argument("sheet_field_distance: cartesian-1d geometry required");
    if (target.d != 1)
        throw std::invalid_argument("sheet_field_distance: 1D stationary target required");
    const double m_total = e.mass();
    const auto idx = sorted_order(e.pos);
    std::vector<double> xs(idx.size());
    std::vector<double> cum(idx.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        acc += e.w[idx[k]];
        xs[k] = e.pos[idx[k]];
        cum[k] = acc;
    }
    const double level = target.density_radial(0.0);  // d * c0
    const double rb = target.radius();
    const double h = 2.0 * xi_max / grid;
    double dist2 = 0.0;
    for (std::size_t g = 0; g < grid; ++g) {
        const double xi = -xi_max + (g + 0.5) * h;
        const double x = r_scale * xi;
        // -dU at x: mass strictly left (grid points are almost surely between sheets)
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const double left = it == xs.begin() ? 0.0 : cum[static_cast<std::size_t>(it - xs.begin()) - 1];
        const double field_num = left - 0.5 * m_total;
        // stationary: -dW = level*xi inside, +-M/2 outside
        const double field_inf =
            std::abs(xi) <= rb ? level * xi : (xi > 0 ? 0.5 : -0.5) * target.mass;
        dist2 += (field_num - field_inf) * (field_num - field_inf) * h;
    }
    return std::sqrt(dist2);
}

double radial_density_lp_norm(const ParticleEnsemble& e, double p, double r_max,
                              std::size_t bins) {
    if (!(r_max > 0.0) || bins == 0)
        throw std::invalid_argument("radial_density_lp_norm: bad arguments");
    const int d = e.geom == Geometry::Planar2D ? 2 : e.d;
    const std::vector<double> radii =
        e.geom == Geometry::Planar2D ? planar_radii(e) : e.pos;
    std::vector<double> m(bins, 0.0);
    const double dr = r_max / bins;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        std::size_t b = static_cast<std::size_t>(std::abs(radii[i]) / dr);
        if (b >= bins) b = bins - 1;
        m[b] += e.w[i];
    }
    const double area = unit_sphere_area(d);
    double acc = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double r0 = b * dr, r1 = r0 + dr;
        const double vol = area / d * (std::pow(r1, d) - std::pow(r0, d));
        if (m[b] > 0.0) acc += std::pow(m[b] / vol, p) * vol;
    }
    return std::pow(acc, 1.0 / p);
}

double radial_field_energy(const ParticleEnsemble& e, int d) {
    if (d < 3)
        throw std::invalid_argument("radial_field_energy: d >= 3 required "
                                    "(the dual norm is unavailable for d = 2)");
    // identical to int rho U in the plasma sign convention
    const std::vector<double> radii =
        e.geom == Geometry::Planar2D ? planar_radii(e) : e.pos;
    return pairwise_rho_u_radial(radii, e.w, d, -1);
}

}  // namespace rescale
