#include "rescale/quantum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "rescale/errors.hpp"

namespace rescale {

namespace {

double sqr(double x) { return x * x; }

// ---------------------------------------------------------------------------
// FFTW plan caches (ESTIMATE plans, persistent buffers; copies in/out are
// negligible next to the transforms)

struct Cplx1D {
    int n;
    std::vector<std::complex<double>> buf;
    fftw_plan fwd, bwd;
    explicit Cplx1D(int n_) : n(n_), buf(n_) {
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
};

struct Cplx2D {
    int n;
    std::vector<std::complex<double>> buf;
    fftw_plan fwd, bwd;
    explicit Cplx2D(int n_) : n(n_), buf(static_cast<std::size_t>(n_) * n_) {
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
};

struct Sine1D {  // DST-I on m interior points; applying twice scales by 2(m+1)
    int m;
    std::vector<double> buf;
    fftw_plan plan;
    explicit Sine1D(int m_) : m(m_), buf(m_) {
        plan = fftw_plan_r2r_1d(m, buf.data(), buf.data(), FFTW_RODFT00, FFTW_ESTIMATE);
    }
};

struct Cosine1D {  // DCT-I on m+1 points
    int m;
    std::vector<double> buf;
    fftw_plan plan;
    explicit Cosine1D(int m_) : m(m_), buf(m_ + 1) {
        plan = fftw_plan_r2r_1d(m + 1, buf.data(), buf.data(), FFTW_REDFT00, FFTW_ESTIMATE);
    }
};

Cplx1D& cplx1d(int n) {
    static std::map<int, Cplx1D> cache;
    return cache.try_emplace(n, n).first->second;
}
Cplx2D& cplx2d(int n) {
    static std::map<int, Cplx2D> cache;
    return cache.try_emplace(n, n).first->second;
}
Sine1D& sine1d(int m) {
    static std::map<int, Sine1D> cache;
    return cache.try_emplace(m, m).first->second;
}
Cosine1D& cosine1d(int m) {
    static std::map<int, Cosine1D> cache;
    return cache.try_emplace(m, m).first->second;
}

double wavenumber(int j, int n, double length) {
    const int k = j <= n / 2 ? j : j - n;
    return 2.0 * M_PI * k / length;
}

// Sine-space representation of u = r*psi for the radial grid: coefficients
// c_m with u_j = sum_m c_m sin(pi j m / n).
void radial_sine_coeffs(const WaveField& w, std::vector<double>& cr,
                        std::vector<double>& ci) {
    const int n = w.n;
    const int m = n - 1;
    Sine1D& s = sine1d(m);
    cr.resize(m);
    ci.resize(m);
    for (int j = 1; j < n; ++j) s.buf[j - 1] = w.coord(j) * w.psi[j].real();
    fftw_execute(s.plan);
    for (int k = 0; k < m; ++k) cr[k] = s.buf[k] / n;
    for (int j = 1; j < n; ++j) s.buf[j - 1] = w.coord(j) * w.psi[j].imag();
    fftw_execute(s.plan);
    for (int k = 0; k < m; ++k) ci[k] = s.buf[k] / n;
}

// Evaluate sum_m c_m (m pi / L) cos(pi j m / n) on the grid (derivative of the
// sine series).
std::vector<double> cosine_eval_derivative(const std::vector<double>& c, int n,
                                           double length) {
    Cosine1D& co = cosine1d(n);
    co.buf[0] = 0.0;
    co.buf[n] = 0.0;
    for (int m = 1; m < n; ++m) co.buf[m] = 0.5 * c[m - 1] * (m * M_PI / length);
    fftw_execute(co.plan);
    return std::vector<double>(co.buf.begin(), co.buf.end());
}

// d(psi)/dr on the radial grid via u = r psi: psi' = (u' - psi)/r.
std::vector<std::complex<double>> radial_derivative(const WaveField& w) {
    std::vector<double> cr, ci;
    radial_sine_coeffs(w, cr, ci);
    const std::vector<double> dur = cosine_eval_derivative(cr, w.n, w.length);
    const std::vector<double> dui = cosine_eval_derivative(ci, w.n, w.length);
    std::vector<std::complex<double>> dpsi(w.samples());
    for (int j = 1; j <= w.n; ++j) {
        const double r = w.coord(j);
        dpsi[j] = (std::complex<double>(dur[j], dui[j]) - w.psi[j]) / r;
    }
    dpsi[0] = 0.0;  // radial regularity
    return dpsi;
}

std::vector<std::complex<double>> periodic_gradient_axis(const WaveField& w, int axis) {
    if (w.kind == GridKind::Periodic1D) {
        Cplx1D& f = cplx1d(w.n);
        std::copy(w.psi.begin(), w.psi.end(), f.buf.begin());
        fftw_execute(f.fwd);
        for (int j = 0; j < w.n; ++j)
            f.buf[j] *= std::complex<double>(0.0, wavenumber(j, w.n, w.length));
        fftw_execute(f.bwd);
        std::vector<std::complex<double>> g(w.samples());
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = f.buf[j] / double(w.n);
        return g;
    }
    Cplx2D& f = cplx2d(w.n);
    std::copy(w.psi.begin(), w.psi.end(), f.buf.begin());
    fftw_execute(f.fwd);
    for (int a = 0; a < w.n; ++a)
        for (int b = 0; b < w.n; ++b) {
            const double k = wavenumber(axis == 0 ? a : b, w.n, w.length);
            f.buf[static_cast<std::size_t>(a) * w.n + b] *= std::complex<double>(0.0, k);
        }
    fftw_execute(f.bwd);
    std::vector<std::complex<double>> g(w.samples());
    const double norm = 1.0 / (static_cast<double>(w.n) * w.n);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = f.buf[j] * norm;
    return g;
}

}  // namespace

// ---------------------------------------------------------------------------

int WaveField::dim() const {
    switch (kind) {
        case GridKind::Periodic1D: return 1;
        case GridKind::Periodic2D: return 2;
        case GridKind::Radial3D: return 3;
    }
    return 0;
}

double WaveField::spacing() const { return length / n; }

double WaveField::coord(int j) const {
    if (kind == GridKind::Radial3D) return j * spacing();
    return -0.5 * length + j * spacing();
}

std::size_t WaveField::samples() const {
    switch (kind) {
        case GridKind::Periodic1D: return static_cast<std::size_t>(n);
        case GridKind::Periodic2D: return static_cast<std::size_t>(n) * n;
        case GridKind::Radial3D: return static_cast<std::size_t>(n) + 1;
    }
    return 0;
}

void WaveField::validate() const {
    if (n < 4) throw std::invalid_argument("wave field: n >= 4 required");
    if (!(length > 0.0)) throw std::invalid_argument("wave field: length must be positive");
    if (!(hbar > 0.0)) throw std::invalid_argument("wave field: hbar must be positive");
    if (psi.size() != samples())
        throw std::invalid_argument("wave field: sample count mismatch");
}

void PotentialSpec::validate() const {
    if (kind == Kind::Power && !(p > 1.0))
        throw std::invalid_argument("potential: power exponent must exceed 1");
    if (kind == Kind::Poisson && eps != -1)
        throw std::invalid_argument("potential: the self-consistent coupling is electrostatic only");
}

// Quadrature weight of sample j (volume element).
namespace {
double quad_weight(const WaveField& w, int j) {
    const double h = w.spacing();
    switch (w.kind) {
        case GridKind::Periodic1D: return h;
        case GridKind::Periodic2D: return h * h;
        case GridKind::Radial3D: {
            const double r = w.coord(j);
            const double tw = (j == 0 || j == w.n) ? 0.5 : 1.0;
            return 4.0 * M_PI * r * r * h * tw;
        }
    }
    return 0.0;
}
}  // namespace

std::vector<double> poisson_potential(const std::vector<double>& rho, GridKind kind,
                                      int n, double length) {
    if (kind == GridKind::Periodic2D) {
        if (rho.size() != static_cast<std::size_t>(n) * n)
            throw std::invalid_argument("poisson: density size mismatch");
        Cplx2D& f = cplx2d(n);
        for (std::size_t j = 0; j < rho.size(); ++j) f.buf[j] = rho[j];
        fftw_execute(f.fwd);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const double k2 = sqr(wavenumber(a, n, length)) +
                                  sqr(wavenumber(b, n, length));
                auto& c = f.buf[static_cast<std::size_t>(a) * n + b];
                c = k2 > 0.0 ? c / k2 : 0.0;  // zero-mode convention
            }
        fftw_execute(f.bwd);
        std::vector<double> v(rho.size());
        const double norm = 1.0 / (static_cast<double>(n) * n);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = f.buf[j].real() * norm;
        return v;
    }
    if (kind == GridKind::Radial3D) {
        if (rho.size() != static_cast<std::size_t>(n) + 1)
            throw std::invalid_argument("poisson: density size mismatch");
        const double dr = length / n;
        // V(r) = (1/r) int_0^r rho s^2 ds + int_r^L rho s ds
        std::vector<double> inner(n + 1, 0.0), outer(n + 1, 0.0), v(n + 1);
        for (int j = 1; j <= n; ++j) {
            const double s0 = (j - 1) * dr, s1 = j * dr;
            inner[j] = inner[j - 1] +
                       0.5 * dr * (rho[j - 1] * s0 * s0 + rho[j] * s1 * s1);
        }
        for (int j = n - 1; j >= 0; --j) {
            const double s0 = j * dr, s1 = (j + 1) * dr;
            outer[j] = outer[j + 1] + 0.5 * dr * (rho[j] * s0 + rho[j + 1] * s1);
        }
        for (int j = 1; j <= n; ++j) v[j] = inner[j] / (j * dr) + outer[j];
        v[0] = outer[0];
        return v;
    }
    throw std::invalid_argument("poisson: self-consistent coupling needs a 2D box or a radial 3D grid");
}

std::vector<double> evaluate_potential(const WaveField& w, const PotentialSpec& pot) {
    pot.validate();
    std::vector<double> v(w.samples(), 0.0);
    switch (pot.kind) {
        case PotentialSpec::Kind::External:
            if (!pot.external.empty()) {
                if (pot.external.size() != w.samples())
                    throw std::invalid_argument("potential: external size mismatch");
                v = pot.external;
            }
            break;
        case PotentialSpec::Kind::Power:
            for (std::size_t j = 0; j < v.size(); ++j)
                v[j] = -pot.eps * pot.coupling *
                       std::pow(std::norm(w.psi[j]), 0.5 * (pot.p - 1.0));
            break;
        case PotentialSpec::Kind::Poisson: {
            std::vector<double> rho(w.samples());
            for (std::size_t j = 0; j < rho.size(); ++j) rho[j] = std::norm(w.psi[j]);
            v = poisson_potential(rho, w.kind, w.n, w.length);
            if (pot.coupling != 1.0)
                for (double& x : v) x *= pot.coupling;
            break;
        }
    }
    return v;
}

namespace {

void half_kick(WaveField& w, const PotentialSpec& pot, double dt) {
    const std::vector<double> v = evaluate_potential(w, pot);
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    if (vmax * 0.5 * dt / w.hbar >= M_PI)
        throw std::invalid_argument("split_step: potential phase per half step reaches pi; reduce dt");
    for (std::size_t j = 0; j < w.psi.size(); ++j) {
        const double th = -v[j] * 0.5 * dt / w.hbar;
        w.psi[j] *= std::complex<double>(std::cos(th), std::sin(th));
    }
}

double drift(WaveField& w, double dt) {
    double total = 0.0, tail = 0.0;
    switch (w.kind) {
        case GridKind::Periodic1D: {
            Cplx1D& f = cplx1d(w.n);
            std::copy(w.psi.begin(), w.psi.end(), f.buf.begin());
            fftw_execute(f.fwd);
            for (int j = 0; j < w.n; ++j) {
                const double k = wavenumber(j, w.n, w.length);
                const double mag = std::norm(f.buf[j]);
                total += mag;
                if (std::abs(k) > 0.875 * M_PI * w.n / w.length) tail += mag;
                const double th = -0.5 * w.hbar * k * k * dt;
                f.buf[j] *= std::complex<double>(std::cos(th), std::sin(th));
            }
            fftw_execute(f.bwd);
            for (std::size_t j = 0; j < w.psi.size(); ++j) w.psi[j] = f.buf[j] / double(w.n);
            break;
        }
        case GridKind::Periodic2D: {
            Cplx2D& f = cplx2d(w.n);
            std::copy(w.psi.begin(), w.psi.end(), f.buf.begin());
            fftw_execute(f.fwd);
            const double kcut = sqr(0.875 * M_PI * w.n / w.length);
            for (int a = 0; a < w.n; ++a)
                for (int b = 0; b < w.n; ++b) {
                    const double k2 = sqr(wavenumber(a, w.n, w.length)) +
                                      sqr(wavenumber(b, w.n, w.length));
                    auto& c = f.buf[static_cast<std::size_t>(a) * w.n + b];
                    const double mag = std::norm(c);
                    total += mag;
                    if (k2 > kcut) tail += mag;
                    const double th = -0.5 * w.hbar * k2 * dt;
                    c *= std::complex<double>(std::cos(th), std::sin(th));
                }
            fftw_execute(f.bwd);
            const double norm = 1.0 / (static_cast<double>(w.n) * w.n);
            for (std::size_t j = 0; j < w.psi.size(); ++j) w.psi[j] = f.buf[j] * norm;
            break;
        }
        case GridKind::Radial3D: {
            std::vector<double> cr, ci;
            radial_sine_coeffs(w, cr, ci);
            const int m = w.n - 1;
            for (int k = 0; k < m; ++k) {
                const double kk = (k + 1) * M_PI / w.length;
                const double mag = cr[k] * cr[k] + ci[k] * ci[k];
                total += mag;
                if (kk > 0.875 * M_PI * w.n / w.length) tail += mag;
                const double th = -0.5 * w.hbar * kk * kk * dt;
                const double c = std::cos(th), s = std::sin(th);
                // multiply (cr + i ci) by e^{i th}
                const double nr = cr[k] * c - ci[k] * s;
                const double ni = cr[k] * s + ci[k] * c;
                cr[k] = nr;
                ci[k] = ni;
            }
            Sine1D& sn = sine1d(m);
            std::vector<double> ur(w.n + 1), ui(w.n + 1);
            for (int k = 0; k < m; ++k) sn.buf[k] = cr[k];
            fftw_execute(sn.plan);
            for (int j = 1; j < w.n; ++j) ur[j] = 0.5 * sn.buf[j - 1];
            for (int k = 0; k < m; ++k) sn.buf[k] = ci[k];
            fftw_execute(sn.plan);
            for (int j = 1; j < w.n; ++j) ui[j] = 0.5 * sn.buf[j - 1];
            for (int j = 1; j < w.n; ++j)
                w.psi[j] = std::complex<double>(ur[j], ui[j]) / w.coord(j);
            w.psi[w.n] = 0.0;
            // even extension through the origin
            w.psi[0] = (4.0 * w.psi[1] - w.psi[2]) / 3.0;
            break;
        }
    }
    return total > 0.0 ? tail / total : 0.0;
}

}  // namespace

double split_step(WaveField& w, const PotentialSpec& pot, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("split_step: dt must be positive");
    w.validate();
    half_kick(w, pot, dt);
    const double tail = drift(w, dt);
    half_kick(w, pot, dt);
    return tail;
}

WignerMoments wigner_moments(const WaveField& w, double r, double rdot) {
    w.validate();
    WignerMoments m;
    const double alpha = rdot / (r * w.hbar);  // shift / hbar
    if (w.kind == GridKind::Radial3D) {
        const auto dpsi = radial_derivative(w);
        for (int j = 0; j <= w.n; ++j) {
            const double rr = w.coord(j);
            const double wt = quad_weight(w, j);
            const double den = std::norm(w.psi[j]);
            m.mass += den * wt;
            m.x2 += rr * rr * den * wt;
            const std::complex<double> shifted =
                dpsi[j] - std::complex<double>(0.0, alpha * rr) * w.psi[j];
            m.kinetic_shifted += std::norm(shifted) * wt;
        }
        m.kinetic_shifted *= w.hbar * w.hbar;
        return m;
    }
    const int axes = w.kind == GridKind::Periodic1D ? 1 : 2;
    std::vector<std::vector<std::complex<double>>> grads;
    for (int a = 0; a < axes; ++a) grads.push_back(periodic_gradient_axis(w, a));
    for (std::size_t j = 0; j < w.samples(); ++j) {
        const double wt = quad_weight(w, static_cast<int>(j));
        const double den = std::norm(w.psi[j]);
        double x[2] = {0.0, 0.0};
        if (w.kind == GridKind::Periodic1D) {
            x[0] = w.coord(static_cast<int>(j));
        } else {
            x[0] = w.coord(static_cast<int>(j) / w.n);
            x[1] = w.coord(static_cast<int>(j) % w.n);
        }
        double x2 = 0.0, kin = 0.0;
        for (int a = 0; a < axes; ++a) {
            x2 += x[a] * x[a];
            const std::complex<double> shifted =
                grads[a][j] - std::complex<double>(0.0, alpha * x[a]) * w.psi[j];
            kin += std::norm(shifted);
        }
        m.mass += den * wt;
        m.x2 += x2 * den * wt;
        m.kinetic_shifted += kin * wt;
    }
    m.kinetic_shifted *= w.hbar * w.hbar;
    return m;
}

double potential_moment(const WaveField& w, const std::vector<double>& v) {
    if (v.size() != w.samples())
        throw std::invalid_argument("potential_moment: size mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
        acc += v[j] * std::norm(w.psi[j]) * quad_weight(w, static_cast<int>(j));
    return acc;
}

double density_lp_norm(const WaveField& w, double p) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.samples(); ++j)
        acc += std::pow(std::norm(w.psi[j]), p) * quad_weight(w, static_cast<int>(j));
    return std::pow(acc, 1.0 / p);
}

LyapunovRecord lyapunov_sp(const WaveField& w, const std::vector<double>& v,
                           double r, double rdot, int d, double mass) {
    LyapunovRecord rec;
    rec.r = r;
    rec.rdot = rdot;
    const WignerMoments m = wigner_moments(w, r, rdot);
    const double rho_u = potential_moment(w, v);
    const double bw = std::pow(r, d - 2.0);
    rec.kinetic_raw = m.kinetic_shifted;
    rec.rho_u = rho_u;
    rec.x2 = m.x2;
    rec.kinetic = bw * m.kinetic_shifted;
    rec.potential = bw * rho_u + m.x2 / (r * r);
    rec.log_term = d == 2 ? mass * mass / (2.0 * M_PI) * std::log(r) : 0.0;
    rec.total = rec.kinetic + rec.potential + rec.log_term;
    rec.dldt_formula = (d - 4.0) * rdot * std::pow(r, d - 3.0) * m.kinetic_shifted;
    return rec;
}

double nls_q_exponent(double p, int d) { return std::min(0.5 * (p - 1.0) * d, 2.0); }

LyapunovRecord lyapunovnls_impl(const WaveField& w, double p, double coupling,
                                double r, double rdot, int d) {
    LyapunovRecord rec;
    rec.r = r;
    rec.rdot = rdot;
    const WignerMoments m = wigner_moments(w, r, rdot);
    double pp = 0.0;
    for (std::size_t j = 0; j < w.samples(); ++j)
        pp += std::pow(std::norm(w.psi[j]), 0.5 * (p + 1.0)) *
              quad_weight(w, static_cast<int>(j));
    const double q = nls_q_exponent(p, d);
    const double bw = std::pow(r, q);
    rec.kinetic_raw = m.kinetic_shifted;
    rec.rho_u = 2.0 * coupling / (p + 1.0) * pp;
    rec.x2 = m.x2;
    rec.kinetic = bw * m.kinetic_shifted;
    rec.potential = bw * rec.rho_u + m.x2 / (r * r);
    rec.total = rec.kinetic + rec.potential;
    return rec;
}

LyapunovRecord lyapunov_nls(const WaveField& w, double p, double coupling,
                            double r, double rdot, int d) {
    return lyapunovnls_impl(w, p, coupling, r, rdot, d);
}

double sobolev_constant_d3() {
    // sharp constant of ||u||_{L^6} <= S ||grad u||_{L^2} on R^3
    return std::pow(M_PI * M_PI / 4.0, 1.0 / 6.0) * 2.0 / (std::sqrt(3.0) * M_PI);
}

InterpolationSides2 interpolation_lemma_check(const WaveField& w, double t, double p) {
    if (w.kind != GridKind::Radial3D)
        throw std::invalid_argument("interpolation_lemma_check: radial 3D grid required");
    if (!(t > 0.0)) throw std::invalid_argument("interpolation_lemma_check: t > 0 required");
    const int d = 3;
    if (p < 2.0 || p > 2.0 * d / (d - 2.0))
        throw std::invalid_argument("interpolation_lemma_check: p outside [2, 2d/(d-2)]");
    const double a = 0.5 * d * (2.0 / p - (d - 2.0) / static_cast<double>(d));

    const auto dpsi = radial_derivative(w);
    double norm_p = 0.0, norm_2 = 0.0, jnorm = 0.0;
    for (int j = 0; j <= w.n; ++j) {
        const double wt = quad_weight(w, j);
        const double r = w.coord(j);
        const double amp = std::abs(w.psi[j]);
        norm_p += std::pow(amp, p) * wt;
        norm_2 += amp * amp * wt;
        jnorm += std::norm(r * w.psi[j] + std::complex<double>(0.0, t) * dpsi[j]) * wt;
    }
    InterpolationSides2 out;
    out.lhs = std::pow(norm_p, 1.0 / p);
    out.rhs = std::pow(sobolev_constant_d3(), 1.0 - a) * std::pow(norm_2, 0.5 * a) *
              std::pow(std::sqrt(jnorm) / t, 1.0 - a);
    return out;
}

double ConformalFrame::omega(double t) const { return omega0 / (1.0 + 2.0 * omega0 * t); }
double ConformalFrame::r(double t) const { return r0 * (1.0 + 2.0 * omega0 * t); }
double ConformalFrame::tau(double t) const {
    return t / (r0 * r0 * (1.0 + 2.0 * omega0 * t)) + tau0;
}

bool coupling_is_critical(double p, int d, double tol) {
    return std::abs(p - 1.0 - 4.0 / d) <= tol;
}

WaveField pseudo_conformal_transform(const WaveField& w, const ConformalFrame& frame,
                                     double t, double alpha, bool inverse) {
    w.validate();
    if (w.kind == GridKind::Radial3D)
        throw std::invalid_argument("pseudo_conformal_transform: periodic grids only");
    const double r = frame.r(t);
    const double om = frame.omega(t);
    WaveField out = w;
    out.length = inverse ? w.length * r : w.length / r;
    const double amp = inverse ? std::pow(r, -alpha) : std::pow(r, alpha);
    for (std::size_t j = 0; j < w.samples(); ++j) {
        double x2;
        if (w.kind == GridKind::Periodic1D) {
            // physical coordinate: u-grid for forward, v-grid scaled up for inverse
            const double c = w.coord(static_cast<int>(j));
            x2 = sqr(inverse ? c * r : c);
        } else {
            const double c0 = w.coord(static_cast<int>(j) / w.n);
            const double c1 = w.coord(static_cast<int>(j) % w.n);
            x2 = inverse ? (sqr(c0 * r) + sqr(c1 * r)) : (sqr(c0) + sqr(c1));
        }
        const double th = (inverse ? +1.0 : -1.0) * om * x2 / w.hbar;
        out.psi[j] = amp * w.psi[j] * std::complex<double>(std::cos(th), std::sin(th));
    }
    return out;
}

double pcl_functional(const WaveField& w, double r, double omega, int eps,
                      double coupling) {
    const int d = w.dim();
    // shift 2*omega equals Rdot/R in this frame
    const WignerMoments m = wigner_moments(w, 1.0, 2.0 * omega);
    const double pexp = (d + 2.0) / d;  // |psi|^{2(d+2)/d} = (|psi|^2)^pexp
    double pot = 0.0;
    for (std::size_t j = 0; j < w.samples(); ++j)
        pot += std::pow(std::norm(w.psi[j]), pexp) * quad_weight(w, static_cast<int>(j));
    // coefficient 2 c d/(d+2) = 2*(2 c/(p+1)) at p+1 = 2(d+2)/d: the potential
    // share of the conserved Hamiltonian, twice the physical energy density
    return r * r * m.kinetic_shifted - 2.0 * eps * coupling * d / (d + 2.0) * r * r * pot;
}

double linear_invariant(const WaveField& w, double t) {
    if (w.kind == GridKind::Radial3D) {
        const auto dpsi = radial_derivative(w);
        double acc = 0.0;
        for (int j = 0; j <= w.n; ++j)
            acc += std::norm(w.coord(j) * w.psi[j] +
                             std::complex<double>(0.0, t * w.hbar) * dpsi[j]) *
                   quad_weight(w, j);
        return acc;
    }
    const int axes = w.kind == GridKind::Periodic1D ? 1 : 2;
    double acc = 0.0;
    for (int a = 0; a < axes; ++a) {
        const auto g = periodic_gradient_axis(w, a);
        for (std::size_t j = 0; j < w.samples(); ++j) {
            const double x = w.kind == GridKind::Periodic1D
                                 ? w.coord(static_cast<int>(j))
                                 : (a == 0 ? w.coord(static_cast<int>(j) / w.n)
                                           : w.coord(static_cast<int>(j) % w.n));
            acc += std::norm(x * w.psi[j] + std::complex<double>(0.0, t * w.hbar) * g[j]) *
                   quad_weight(w, static_cast<int>(j));
        }
    }
    return acc;
}

std::complex<double> eval_periodic(const WaveField& w, double x) {
    if (w.kind != GridKind::Periodic1D)
        throw std::invalid_argument("eval_periodic: 1D field required");
    Cplx1D& f = cplx1d(w.n);
    std::copy(w.psi.begin(), w.psi.end(), f.buf.begin());
    fftw_execute(f.fwd);
    std::complex<double> acc = 0.0;
    for (int j = 0; j < w.n; ++j) {
        const double k = wavenumber(j, w.n, w.length);
        const double th = k * (x + 0.5 * w.length);
        // coefficients are relative to sample index; coord(0) = -L/2
        acc += f.buf[j] * std::complex<double>(std::cos(th), std::sin(th));
    }
    return acc / double(w.n);
}

WaveField gaussian_field(GridKind kind, int n, double length, double hbar,
                         const QuantumInitial& init) {
    WaveField w;
    w.kind = kind;
    w.n = n;
    w.length = length;
    w.hbar = hbar;
    w.psi.assign(w.samples(), 0.0);
    for (std::size_t j = 0; j < w.samples(); ++j) {
        double x2, x0;
        if (kind == GridKind::Periodic2D) {
            const double a = w.coord(static_cast<int>(j) / n);
            const double b = w.coord(static_cast<int>(j) % n);
            x2 = a * a + b * b;
            x0 = a;
        } else {
            x0 = w.coord(static_cast<int>(j));
            x2 = x0 * x0;
        }
        const double env = std::exp(-0.5 * x2 / (init.sigma * init.sigma));
        const double th = (init.chirp * x2 + init.k0 * x0) / hbar;
        w.psi[j] = env * std::complex<double>(std::cos(th), std::sin(th));
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < w.samples(); ++j)
        norm += std::norm(w.psi[j]) * quad_weight(w, static_cast<int>(j));
    const double scale = std::sqrt(init.mass / norm);
    for (auto& c : w.psi) c *= scale;
    return w;
}

QuantumRun simulate_quantum(const QuantumConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
        throw std::invalid_argument("simulate_quantum: dt and t_end must be positive");
    cfg.pot.validate();

    QuantumRun run;
    run.config = cfg;
    WaveField w = gaussian_field(cfg.kind, cfg.n, cfg.length, cfg.hbar, cfg.initial);
    const int d = w.dim();
    const double mass0 = cfg.initial.mass;

    const bool poisson = cfg.pot.kind == PotentialSpec::Kind::Poisson;
    const bool power = cfg.pot.kind == PotentialSpec::Kind::Power && cfg.pot.coupling != 0.0;
    const bool free_eq = !poisson && !power;

    // scale factor: plasma equation for the Poisson coupling, power-law
    // companion for the defocusing nonlinearity, frozen otherwise
    ScalingParams sp{d, -1, 1.0, 1.0, 0.0};
    ScalingState sc = initial_state(sp);
    PowerLawScale pls;
    pls.q = power ? nls_q_exponent(cfg.pot.p, d) : 1.0;
    const ConformalFrame frame{cfg.omega0, 1.0, 0.0};

    double t = 0.0;
    auto emit = [&]() {
        QuantumSample s;
        s.t = t;
        double r = 1.0, rdot = 0.0;
        if (poisson) {
            r = sc.r;
            rdot = sc.rdot;
        } else if (power) {
            r = pls.r;
            rdot = pls.rdot;
        }
        s.r = r;
        s.rdot = rdot;
        const WignerMoments m = wigner_moments(w, r, rdot);
        const WignerMoments m0 = wigner_moments(w, 1.0, 0.0);
        s.mass = m.mass;
        s.kinetic_shifted = m.kinetic_shifted;
        s.x2 = m.x2;
        LyapunovRecord rec;
        if (poisson) {
            const std::vector<double> v = evaluate_potential(w, cfg.pot);
            rec = lyapunov_sp(w, v, r, rdot, d, mass0);
            s.rho_u = rec.rho_u;
            s.energy = 0.5 * m0.kinetic_shifted + 0.5 * s.rho_u;
        } else if (power) {
            rec = lyapunov_nls(w, cfg.pot.p, cfg.pot.coupling, r, rdot, d);
            s.rho_u = rec.rho_u;
            // conserved energy: hbar^2/2 int|grad|^2 - 2 eps c/(p+1) int |psi|^(p+1)
            double pp = 0.0;
            for (std::size_t j = 0; j < w.samples(); ++j)
                pp += std::pow(std::norm(w.psi[j]), 0.5 * (cfg.pot.p + 1.0)) *
                      quad_weight(w, static_cast<int>(j));
            s.energy = 0.5 * m0.kinetic_shifted -
                       2.0 * cfg.pot.eps * cfg.pot.coupling / (cfg.pot.p + 1.0) * pp;
        } else {
            rec = lyapunov_sp(w, std::vector<double>(w.samples(), 0.0), 1.0, 0.0, d, mass0);
            s.rho_u = 0.0;
            s.energy = 0.5 * m0.kinetic_shifted;
        }
        rec.t = t;
        s.total = rec.total;
        if (cfg.track_pcl) {
            const double c =
                cfg.pot.kind == PotentialSpec::Kind::Power ? cfg.pot.coupling : 0.0;
            s.pcl = pcl_functional(w, frame.r(t), frame.omega(t), cfg.pot.eps, c);
        }
        if (free_eq) s.linear_inv = linear_invariant(w, t);
        if (d == 3) s.lp_norm = density_lp_norm(w, 10.0 / 3.0);
        run.series.push_back(s);
        run.records.push_back(rec);
    };

    emit();
    double next_record = cfg.cadence;
    const std::size_t n_steps =
        static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double step = std::min(cfg.dt, cfg.t_end - t);
        if (step <= 0.0) break;
        const double tail = split_step(w, cfg.pot, step);
        if (tail > 1e-8) run.aliasing_warning = true;
        if (poisson) rk4_step(sp, sc, step);
        if (power) pls.step(step);
        t += step;
        const bool last = k + 1 == n_steps;
        if (t >= next_record - 1e-9 || last) {
            // box-boundary guard: free-space claims need negligible edge density
            double edge = 0.0, peak = 0.0;
            for (std::size_t j = 0; j < w.samples(); ++j)
                peak = std::max(peak, std::norm(w.psi[j]));
            if (w.kind == GridKind::Periodic1D)
                edge = std::norm(w.psi[0]);
            else if (w.kind == GridKind::Radial3D)
                edge = std::norm(w.psi[w.n - 1]);
            else
                for (int b = 0; b < w.n; ++b)
                    edge = std::max(edge, std::norm(w.psi[static_cast<std::size_t>(b)]));
            if (edge > cfg.boundary_tol * peak)
                throw boundary_error("simulate_quantum: dispersion reached the box boundary at t=" +
                                     std::to_string(t));
            emit();
            while (next_record <= t + 1e-9) next_record += cfg.cadence;
        }
    }
    fill_dldt_numeric(run.records);
    run.final_state = w;
    return run;
}

void write_quantum_csv(const QuantumRun& run, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t,mass,kinetic_shifted,potential,x2,L,PCL\n");
    for (const auto& s : run.series)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.mass,
                     s.kinetic_shifted, s.rho_u, s.x2, s.total, s.pcl);
    std::fclose(f);
}

void write_field_binary(const WaveField& w, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    for (std::size_t j = 0; j < w.samples(); ++j) {
        double row[4];
        int cols = 0;
        if (w.kind == GridKind::Periodic2D) {
            row[cols++] = w.coord(static_cast<int>(j) / w.n);
            row[cols++] = w.coord(static_cast<int>(j) % w.n);
        } else {
            row[cols++] = w.coord(static_cast<int>(j));
        }
        row[cols++] = w.psi[j].real();
        row[cols++] = w.psi[j].imag();
        std::fwrite(row, sizeof(double), cols, f);
    }
    std::fclose(f);
}

}  // namespace rescale
