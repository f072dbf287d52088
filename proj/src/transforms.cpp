#include "rescale/transforms.hpp"

#include <cmath>
#include <stdexcept>

namespace rescale {

namespace {

void check_dim(const std::vector<double>& a, int d, const char* what) {
    if (static_cast<int>(a.size()) != d)
        throw std::invalid_argument(std::string(what) + ": vector length does not match d");
}

}  // namespace

RescaledPoint to_rescaled(const PhasePoint& p, double r, double rdot, int d) {
    if (!(r > 0.0)) throw std::invalid_argument("to_rescaled: R must be positive");
    check_dim(p.x, d, "to_rescaled");
    check_dim(p.v, d, "to_rescaled");
    const double vel_scale = std::pow(r, 0.5 * d - 1.0);
    const double hubble = rdot / r;
    RescaledPoint q;
    q.xi.resize(p.x.size());
    q.eta.resize(p.x.size());
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        q.xi[i] = p.x[i] / r;
        q.eta[i] = vel_scale * (p.v[i] - hubble * p.x[i]);
    }
    return q;
}

PhasePoint from_rescaled(const RescaledPoint& q, double r, double rdot, int d) {
    if (!(r > 0.0)) throw std::invalid_argument("from_rescaled: R must be positive");
    check_dim(q.xi, d, "from_rescaled");
    check_dim(q.eta, d, "from_rescaled");
    const double vel_scale = std::pow(r, 1.0 - 0.5 * d);
    PhasePoint p;
    p.x.resize(q.xi.size());
    p.v.resize(q.xi.size());
    for (std::size_t i = 0; i < q.xi.size(); ++i) {
        p.x[i] = r * q.xi[i];
        p.v[i] = rdot * q.xi[i] + vel_scale * q.eta[i];
    }
    return p;
}

double unit_sphere_area(int d) {
    if (d < 1) throw std::invalid_argument("unit_sphere_area: d >= 1 required");
    // |S^0| = 2, |S^1| = 2pi, |S^2| = 4pi, |S^3| = 2pi^2, ...
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

double unit_ball_volume(int d) { return unit_sphere_area(d) / d; }

double LinearScalingExponents::f_factor(int d) const {
    return std::pow(lambda, 2.0 - d) * std::pow(mu, static_cast<double>(d));
}
double LinearScalingExponents::rho_factor() const { return lambda * lambda; }
double LinearScalingExponents::u_factor() const { return lambda * lambda / (mu * mu); }
double LinearScalingExponents::force_factor() const { return lambda * lambda / mu; }

bool mass_preserving_constraint(double lambda, double mu, int d) {
    if (!(lambda > 0.0) || !(mu > 0.0))
        throw std::invalid_argument("mass_preserving_constraint: factors must be positive");
    const double lhs = lambda * lambda;
    const double rhs = std::pow(mu, static_cast<double>(d));
    return std::abs(lhs - rhs) <= 1e-12 * std::max(lhs, rhs);
}

double StationaryState::radius() const {
    if (!(mass > 0.0)) throw std::invalid_argument("StationaryState: mass must be positive");
    return std::pow(mass / (c0 * unit_sphere_area(d)), 1.0 / d);
}

double StationaryState::density_radial(double xi_norm) const {
    return xi_norm <= radius() ? d * c0 : 0.0;
}

double StationaryState::density(const std::vector<double>& xi) const {
    double n2 = 0.0;
    for (double c : xi) n2 += c * c;
    return density_radial(std::sqrt(n2));
}

double StationaryState::field_radial(double xi_norm, int eps) const {
    const double rb = radius();
    if (xi_norm <= rb) return eps * c0 * xi_norm;
    // exterior: total mass M seen as a point source
    return eps * mass / (unit_sphere_area(d) * std::pow(xi_norm, d - 1.0));
}

std::vector<double> StationaryState::field(const std::vector<double>& xi, int eps) const {
    double n2 = 0.0;
    for (double c : xi) n2 += c * c;
    const double norm = std::sqrt(n2);
    std::vector<double> out(xi.size(), 0.0);
    if (norm == 0.0) {
        if (radius() > 0.0) return out;  // interior branch: field vanishes at the origin
        throw std::invalid_argument("StationaryState::field: singular at the origin");
    }
    const double mag = field_radial(norm, eps);
    for (std::size_t i = 0; i < xi.size(); ++i) out[i] = mag * xi[i] / norm;
    return out;
}

double interpolation_constant(int d) {
    if (d < 1) throw std::invalid_argument("interpolation_constant: d >= 1 required");
    const double wd = unit_ball_volume(d);
    return (d + 2.0) / d * std::pow(0.5 * d * wd, 2.0 / (d + 2.0));
}

InterpolationSides interpolation_bound(const PhaseGrid1D& grid, int d, double shift) {
    if (grid.nx == 0 || grid.nv == 0 || grid.f.size() != grid.nx * grid.nv)
        throw std::invalid_argument("interpolation_bound: malformed grid");
    double f_inf = 0.0;
    double moment = 0.0;
    const double cell = grid.dx * grid.dv;
    std::vector<double> rho(grid.nx, 0.0);
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
        const double x = grid.x0 + (ix + 0.5) * grid.dx;
        const double w = shift * x;
        for (std::size_t iv = 0; iv < grid.nv; ++iv) {
            const double val = grid.at(ix, iv);
            if (val < 0.0)
                throw std::invalid_argument("interpolation_bound: density must be nonnegative");
            const double v = grid.v0 + (iv + 0.5) * grid.dv;
            rho[ix] += val * grid.dv;
            moment += val * (v - w) * (v - w) * cell;
            f_inf = std::max(f_inf, val);
        }
    }
    const double p = (d + 2.0) / d;
    double lhs_p = 0.0;
    for (double rv : rho) lhs_p += std::pow(rv, p) * grid.dx;
    InterpolationSides out;
    out.lhs = std::pow(lhs_p, 1.0 / p);
    out.rhs = interpolation_constant(d) * std::pow(f_inf, 2.0 / (d + 2.0)) *
              std::pow(moment, d / (d + 2.0));
    return out;
}

}  // namespace rescale
