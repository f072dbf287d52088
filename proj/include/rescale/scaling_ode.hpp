#ifndef RESCALE_SCALING_ODE_HPP
#define RESCALE_SCALING_ODE_HPP

// The master scale factor R(t) solves
//
//     Rdd + eps * c0 * R^(1-d) = 0,
//
// eps = -1 (repulsive / plasma) or +1 (attractive / gravitational).
// Everything downstream (particle, shell, fluid and wave diagnostics) is
// driven by a trajectory of this equation, so this module also carries the
// first integrals, closed forms, rescaling invariance and growth asymptotics.

#include <cstddef>
#include <string>
#include <vector>

namespace rescale {

struct ScalingParams {
    int d = 3;           // spatial dimension, >= 1
    int eps = -1;        // -1 plasma, +1 gravitational
    double c0 = 1.0;     // force constant, > 0
    double r0 = 1.0;     // R(0) > 0
    double rdot0 = 0.0;  // Rdot(0)

    void validate() const;
};

// Instantaneous state used by integrate_r and by simulators that advance the
// scale factor in lockstep with their own time step.
struct ScalingState {
    double t = 0.0;
    double r = 1.0;
    double rdot = 0.0;
    double tau = 0.0;  // integral of R^(-d/2) dt
};

ScalingState initial_state(const ScalingParams& p);

// Acceleration -eps*c0*R^(1-d).
double scaling_accel(const ScalingParams& p, double r);

// One classical 4th-order step of (R, Rdot); tau advances by the trapezoid
// rule on R^(-d/2). Throws collapse_error if eps=+1 and R falls below
// collapse_floor (default 1e-6 * r0 when < 0 is passed).
void rk4_step(const ScalingParams& p, ScalingState& s, double dt,
              double collapse_floor = -1.0);

struct ScalingSolution {
    ScalingParams params;
    std::vector<double> t;     // strictly increasing sample grid
    std::vector<double> r;     // R > 0 at every sample
    std::vector<double> rdot;
    std::vector<double> tau;   // non-decreasing

    std::size_t size() const { return t.size(); }

    // Cubic Hermite interpolation of R / Rdot inside the sampled window.
    double r_at(double time) const;
    double rdot_at(double time) const;

    void write_csv(const std::string& path) const;  // t,R,Rdot,tau,first_integral
};

// d=1 closed form: R(t) = -(eps*c0/2) t^2 + rdot0 t + r0.
// Throws std::invalid_argument unless params.d == 1.
struct ClosedForm1D {
    double r;
    double rdot;
};
ClosedForm1D closed_form_r(const ScalingParams& p, double t);

// Conserved quantity of the R-equation:
//   d = 2 :  Rdot^2/2 + eps*c0*log(R)
//   d >= 3:  Rdot^2/2 - eps*c0/(d-2) * R^(2-d)
// Throws std::invalid_argument for d = 1 (use closed_form_r there).
double first_integral(const ScalingParams& p, double r, double rdot);

// Fixed-step RK4 integration to t_end; samples every step.
ScalingSolution integrate_r(const ScalingParams& p, double t_end,
                            double dt = 1e-3, double collapse_floor = -1.0);

struct TauLimit {
    bool finite = false;
    double value = 0.0;  // prefix integral + extrapolated tail when finite
};

// tau_inf = integral of R^(-d/2) over [0, inf): finite iff d >= 3 in the
// plasma case. The tail beyond the sampled window uses R(t) ~ R_e + Rdot_e*(t-t_e).
TauLimit tau_infinity(const ScalingSolution& sol);

// Max residual of Rdd_lambda + eps * R_lambda^(1-d) over the overlap window,
// where R_lambda(t) = c0^(-1/d) * lambda^(-2/d) * R(lambda t). The second
// derivative is formed by central differences on the interpolated trajectory.
double lambda_rescale_check(const ScalingSolution& sol, double lambda,
                            double fd_step = 1e-4);

// Companion scale equation Rdd = R^-(q+1) with real exponent q > 0 (the gas
// and power-nonlinearity functionals use it); first integral Rdot^2 + (2/q) R^-q.
struct PowerLawScale {
    double q = 1.0;
    double t = 0.0, r = 1.0, rdot = 0.0;
    double accel(double rr) const;
    double invariant() const;
    void step(double h);  // one RK4 step
};

// Plasma-case growth law: t^2 (d=1), t*sqrt(log t) (d=2), t (d >= 3).
struct GrowthLaw {
    int d;
    std::string description;
    double evaluate(double t) const;
};
GrowthLaw asymptotic_growth(int d);

struct GrowthFit {
    double ratio_last;   // R/law at the window end
    double drift;        // max/min - 1 of R/law over the window
};
GrowthFit fit_growth(const ScalingSolution& sol, const GrowthLaw& law,
                     double t_lo, double t_hi);

}  // namespace rescale

#endif
