#ifndef RESCALE_TRANSFORMS_HPP
#define RESCALE_TRANSFORMS_HPP

// Phase-space change of variables driven by the scale factor R(t),
//   xi = x / R,   eta = R^(d/2-1) (v - (Rdot/R) x),
// the mass-preserving linear scaling family, the rescaled stationary states
// and the kinetic interpolation inequality.

#include <cstddef>
#include <vector>

namespace rescale {

struct PhasePoint {
    std::vector<double> x;
    std::vector<double> v;
};

struct RescaledPoint {
    std::vector<double> xi;
    std::vector<double> eta;
};

RescaledPoint to_rescaled(const PhasePoint& p, double r, double rdot, int d);
PhasePoint from_rescaled(const RescaledPoint& q, double r, double rdot, int d);

// Surface area of the unit sphere S^(d-1) in R^d: 2 pi^(d/2) / Gamma(d/2).
double unit_sphere_area(int d);
// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

// Exponent bookkeeping for the linear scaling family
//   f -> lambda^(2-d) mu^d f(lambda t, mu x, mu v / lambda).
struct LinearScalingExponents {
    double lambda = 1.0;
    double mu = 1.0;
    double f_factor(int d) const;
    double rho_factor() const;    // lambda^2
    double u_factor() const;      // lambda^2 mu^-2
    double force_factor() const;  // lambda^2 mu^-1
};

// True iff the scaling preserves the L1 norm of rho: lambda^2 = mu^d.
bool mass_preserving_constraint(double lambda, double mu, int d);

// Uniform-ball steady state of the rescaled system with total mass M.
// With the force constant c0, the flat density level is d*c0 and the support
// radius (M / (c0 |S^(d-1)|))^(1/d).
struct StationaryState {
    double mass = 1.0;
    int d = 3;
    double c0 = 1.0;

    double radius() const;
    double density(const std::vector<double>& xi) const;
    double density_radial(double xi_norm) const;
    // eps*c0*xi inside the ball, eps*(M/|S^(d-1)|) xi/|xi|^d outside;
    // continuous across the boundary.
    std::vector<double> field(const std::vector<double>& xi, int eps) const;
    double field_radial(double xi_norm, int eps) const;
};

// Nonnegative density on a uniform (x, v) phase-space grid (1D x 1D); cell
// value is the average over the cell.
struct PhaseGrid1D {
    double x0 = 0.0, dx = 1.0;
    double v0 = 0.0, dv = 1.0;
    std::size_t nx = 0, nv = 0;
    std::vector<double> f;  // row-major, f[ix*nv + iv]

    double at(std::size_t ix, std::size_t iv) const { return f[ix * nv + iv]; }
};

// Constant in  ||rho||_{(d+2)/d} <= C(d) ||f||_inf^{2/(d+2)} (int f |v-w|^2)^{d/(d+2)},
// from splitting the v-integral at the radius that balances the bulk and tail:
//   C(d) = (d+2)/d * (d w_d / 2)^{2/(d+2)},  w_d = |B^d(1)|.
double interpolation_constant(int d);

struct InterpolationSides {
    double lhs;
    double rhs;
};

// Evaluates both sides of the interpolation inequality on gridded data with
// the velocity shift w(x) = shift * x. Throws on negative density.
InterpolationSides interpolation_bound(const PhaseGrid1D& grid, int d, double shift);

}  // namespace rescale

#endif
