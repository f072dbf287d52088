#ifndef RESCALE_FLUID_HPP
#define RESCALE_FLUID_HPP

// Radially symmetric pressureless Euler--Poisson dynamics as concentric mass
// shells (exact in Lagrangian form for radial data), the two reduced ODEs of
// the non-convergence construction, and a 1D isentropic gas solver with the
// dispersion functional D(t).

#include <cstddef>
#include <string>
#include <vector>

#include "rescale/records.hpp"
#include "rescale/scaling_ode.hpp"

namespace rescale {

struct ShellSystem {
    int d = 3;
    std::vector<double> r;   // radii > 0
    std::vector<double> vr;  // radial velocities
    std::vector<double> m;   // shell masses > 0

    std::size_t size() const { return r.size(); }
    double mass() const;
    void validate() const;
};

// Outward acceleration m_eff / (|S^(d-1)| r^(d-1)) per shell in the plasma
// case (inward for eps=+1); m_eff counts interior shells plus half of own
// mass and half of exact radius ties. Shells at r = 0 get zero force.
std::vector<double> shell_accelerations(const ShellSystem& s, int eps);

// Pairwise int rho U and total energy for the shell system.
double shell_rho_u(const ShellSystem& s, int eps);
double shell_total_energy(const ShellSystem& s, int eps);

// ---------------------------------------------------------------------------
// Reduced two-ODE construction: inner ball edge Rdd = 1/R^2 (R0=1, Rdot0=0)
// and annulus edge R1dd = 1/R1^2 (R10=2, Rdot10=2). Returns R/t and R1/t at
// t_end and the worst first-integral drift along each branch.

struct CounterexampleResult {
    double slope_ball = 0.0;
    double slope_annulus = 0.0;
    double drift_ball = 0.0;     // max |E(t)-E(0)| of Rdot^2 - 2*(-1/R)
    double drift_annulus = 0.0;
    double t_end = 0.0;
};

CounterexampleResult run_counterexample(double t_end, double dt = 1e-3);

// ---------------------------------------------------------------------------
// Shell simulation driver

struct ShellConfig {
    int d = 3;
    int eps = -1;
    double dt = 1e-3;
    double t_end = 10.0;
    double cadence = 0.1;
    ShellSystem initial;
    ScalingParams scaling;
    bool scaling_given = false;
};

struct ShellRun {
    ShellConfig config;
    std::vector<LyapunovRecord> records;
    std::vector<double> energy;          // unscaled total energy per record
    std::vector<double> support_radius;  // max shell radius per record
    std::vector<double> rho_u2_series;   // int rho |u|^2 per record
    std::size_t crossings = 0;           // shell-order swap events
    ShellSystem final_state;
    std::vector<double> record_t;
};

ShellRun simulate_ep_shells(const ShellConfig& cfg);

// Uniform cold ball of given mass and edge radius split into k shells
// (equal-mass strata).
ShellSystem cold_ball_shells(int d, double mass, double radius, std::size_t k);

void write_shell_csv(const ShellSystem& s, double t, const std::string& path,
                     bool append = false);

// ---------------------------------------------------------------------------
// 1D isentropic gas, p = rho^(gamma-1)

struct EulerState1D {
    double x0 = 0.0;   // left cell center
    double dx = 1.0;
    std::vector<double> rho;
    std::vector<double> u;
    double gamma_exp = 2.0;  // gamma > 1

    std::size_t size() const { return rho.size(); }
    void validate() const;
};

struct EulerSample {
    double t, r, rdot;
    double dispersion;      // D(t)
    double kinetic_shift;   // int rho |u - (Rdot/R)x|^2
    double x2;              // int rho |x|^2
    double internal;        // (2/gamma) int rho^gamma
    double mass;
};

struct EulerRun {
    std::vector<EulerSample> series;
    std::vector<EulerState1D> snapshots;
    bool shock_terminated = false;
    double t_final = 0.0;
};

// Finite-volume mass update + upwind velocity advection with the pressure
// source; D(t) uses q = min(2, (gamma-1)d) with d = 1 and R solving
// Rdd = R^-(q+1), R(0)=R0, Rdot(0)=0. Terminates when max|du/dx| dt > 0.5.
struct EulerConfig {
    double dt = 1e-4;
    double t_end = 1.0;
    double cadence = 0.01;
    double r0 = 1.0;
    double steepness_limit = 0.5;
};

EulerRun simulate_euler_gas(const EulerState1D& initial, const EulerConfig& cfg);

double euler_q_exponent(double gamma_exp, int d);

void write_euler_functional_csv(const EulerRun& run, const std::string& path);
void write_euler_state_csv(const EulerRun& run, const std::string& path);

}  // namespace rescale

#endif
