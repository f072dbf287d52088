#ifndef RESCALE_DIAGNOSTICS_HPP
#define RESCALE_DIAGNOSTICS_HPP

// Assembly and audits of the Lyapunov functionals, the time-integrated
// dissipation bound, decay-rate fits, dual norms and support-growth checks,
// working off simulator snapshots and record series.

#include <cstddef>
#include <vector>

#include "rescale/fluid.hpp"
#include "rescale/kinetic.hpp"
#include "rescale/records.hpp"
#include "rescale/scaling_ode.hpp"

namespace rescale {

// Lyapunov record from a kinetic snapshot; rho_u is the pairwise potential
// moment (the field solver provides it).
LyapunovRecord lyapunov_vp(const ParticleEnsemble& e, double rho_u,
                           const ScalingState& s, double mass, int eps);

// Same for a shell system (fluid kinetic term).
LyapunovRecord lyapunov_ep(const ShellSystem& shells, const ScalingState& s, int eps);

// M^2/(4 pi) (1 - log(M / 2 pi)): the d = 2 floor of L in the plasma case.
double lower_bound_2d(double mass);

// Running integral of Rdot R^(d-3) * kinetic_raw over a record series
// (trapezoid); `tail_fraction(window)` reports the share gained after
// t >= window_start.
struct StrichartzIntegral {
    std::vector<double> t;
    std::vector<double> running;
    double total = 0.0;
    double tail_fraction(double window_start) const;
};
StrichartzIntegral strichartz_integral(const std::vector<LyapunovRecord>& series, int d);

// Least-squares slope of log(value) against log(scale) over the window.
DecayFit fit_decay(const std::vector<double>& scale, const std::vector<double>& value,
                   double scale_lo, double scale_hi);

// Trailing minimum over the last `window` span of the series; optionally
// weights the series by h(t) first.
double liminf_window(const std::vector<double>& t, const std::vector<double>& value,
                     double window);
std::vector<double> weighted_series(const std::vector<double>& t,
                                    const std::vector<double>& value, bool log_weight);

// ||grad U||_{L2} for a radial ensemble (d >= 3): certified upper bound on
// the dual weak norm of rho.
double dual_norm_d12(const ParticleEnsemble& e, int d);

// d = 2 support growth: checks inf r(t)/R(t) > 0 over the trailing window and
// the chain M^2/(2 pi) (log R - log 2r) <= L(t) <= L(0) pointwise.
struct SupportGrowthVerdict {
    bool ratio_positive = false;
    bool chain_holds = false;
    double min_ratio = 0.0;
};
SupportGrowthVerdict support_growth_check(const std::vector<double>& support_radius,
                                          const std::vector<LyapunovRecord>& series,
                                          double mass, double window_start);

// d = 2 long-horizon limits for the pressureless system:
//   int rho U / log R  -> -M^2/(2 pi)
//   int rho |u|^2 / log R -> +M^2/(2 pi)
//   int rho |x|^2 / R^2  -> M^2/(4 pi)
struct LogLimits2D {
    double potential_ratio = 0.0;
    double kinetic_ratio = 0.0;
    double moment_ratio = 0.0;
};
LogLimits2D ep_log_limits_2d(const ShellRun& run);

}  // namespace rescale

#endif
