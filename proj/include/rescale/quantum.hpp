#ifndef RESCALE_QUANTUM_HPP
#define RESCALE_QUANTUM_HPP

// Split-step spectral solvers for
//
//     i hbar psi_t = -(hbar^2/2) lap psi + V psi
//
// with V external, self-consistent (-lap V = |psi|^2, electrostatic), or a
// power nonlinearity V = -eps |psi|^(p-1). Grids: periodic 1D/2D boxes and a
// radial 3D grid (Dirichlet at the outer edge, u = r psi in sine space).
// Quadratic wavefunction functionals stand in for the velocity moments of the
// phase-space transform, so the kinetic Lyapunov diagnostics carry over.

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "rescale/records.hpp"
#include "rescale/scaling_ode.hpp"

namespace rescale {

enum class GridKind { Periodic1D, Periodic2D, Radial3D };

struct WaveField {
    GridKind kind = GridKind::Periodic1D;
    int n = 0;            // points per axis; Radial3D stores n+1 samples on [0, L]
    double length = 1.0;  // periodic box edge [-L/2, L/2) or radial extent
    double hbar = 1.0;
    std::vector<std::complex<double>> psi;

    int dim() const;
    double spacing() const;
    double coord(int j) const;  // x of index j on one axis (radial: r_j)
    std::size_t samples() const;
    void validate() const;
};

struct PotentialSpec {
    enum class Kind { External, Poisson, Power } kind = Kind::Power;
    double p = 3.0;         // power exponent, > 1
    int eps = -1;           // sign: i hbar psi_t = ... - eps |psi|^(p-1) psi
    double coupling = 1.0;  // 0 gives the free equation
    std::vector<double> external;  // Kind::External samples (empty = free)

    void validate() const;
};

// Potential on the grid for the current psi.
std::vector<double> evaluate_potential(const WaveField& w, const PotentialSpec& pot);

// -lap V = rho with the zero-mode of V set to 0 (periodic) or the decaying
// radial Green's function (Radial3D).
std::vector<double> poisson_potential(const std::vector<double>& rho, GridKind kind,
                                      int n, double length);

// Strang step: half potential kick, full spectral drift, half potential kick
// (V recomputed from psi for the self-consistent kinds). Throws when the
// potential phase per half step reaches pi. Returns the spectral tail mass
// fraction (top eighth of |k|) observed during the drift.
double split_step(WaveField& w, const PotentialSpec& pot, double dt);

struct WignerMoments {
    double mass = 0.0;             // int |psi|^2
    double kinetic_shifted = 0.0;  // hbar^2 int |(grad - i (Rdot/(hbar R)) x) psi|^2
    double x2 = 0.0;               // int |x|^2 |psi|^2
};

// Velocity moments of the phase-space transform of psi, with the velocity
// shift (Rdot/R) x applied through the quadratic phase.
WignerMoments wigner_moments(const WaveField& w, double r, double rdot);

double potential_moment(const WaveField& w, const std::vector<double>& v);  // int V |psi|^2

// ||  |psi|^2 ||_{L^p}
double density_lp_norm(const WaveField& w, double p);

// Lyapunov functional of the Poisson-coupled equation: for d = 3, 4
//   L = R^(d-2) (kinetic_shifted + int V |psi|^2) + R^-2 int |x|^2 |psi|^2,
// with the extra mass^2/(2 pi) log R term for d = 2.
LyapunovRecord lyapunov_sp(const WaveField& w, const std::vector<double>& v,
                           double r, double rdot, int d, double mass);

// Power-nonlinearity Lyapunov functional (defocusing):
//   L = R^q (kinetic_shifted + 2/(p+1) int |psi|^(p+1)) + R^-2 int |x|^2|psi|^2,
// q = min((p-1) d / 2, 2) and R from Rdd = R^-(q+1).
LyapunovRecord lyapunov_nls(const WaveField& w, double p, double coupling,
                            double r, double rdot, int d);
double nls_q_exponent(double p, int d);

// Interpolation check on a radial 3D field:
//   ||u||_p <= S^(1-a) ||u||_2^a (||(x + i t grad) u||_2 / t)^(1-a),
// a = d/2 (2/p - (d-2)/d), S the sharp Sobolev constant for d = 3.
struct InterpolationSides2 {
    double lhs;
    double rhs;
};
InterpolationSides2 interpolation_lemma_check(const WaveField& w, double t, double p);
double sobolev_constant_d3();

// ---------------------------------------------------------------------------
// Quadratic-phase rescaling frame: omega' = -2 omega^2, Rdot = 2 omega R,
// tau' = 1/R^2, solved by
//   omega(t) = omega0/(1+2 omega0 t),  R(t) = R0 (1+2 omega0 t),
//   tau(t) = t/(R0^2 (1+2 omega0 t)) + tau0.
struct ConformalFrame {
    double omega0 = 0.0;
    double r0 = 1.0;
    double tau0 = 0.0;

    double omega(double t) const;
    double r(double t) const;
    double tau(double t) const;
};

bool coupling_is_critical(double p, int d, double tol = 1e-12);

// Change of unknown u(t,x) = R^-alpha exp(i omega |x|^2 / hbar) v(tau, x/R).
// Forward (inverse = false) maps the u-field at time t to the v-field on the
// contracted grid (box length / R); inverse maps back. alpha = d/2 preserves
// the L2 norm.
WaveField pseudo_conformal_transform(const WaveField& w, const ConformalFrame& frame,
                                     double t, double alpha, bool inverse = false);

// Conserved functional of the critical defocusing equation:
//   hbar^2 R^2 int |(grad - i (2 omega/hbar) x)u|^2
//     - 2 eps c d/(d+2) R^2 int |u|^(2(d+2)/d).
// The asymptotic form is the same call with R = t, omega = 1/(2t); coupling 0
// leaves the quadratic invariant of the free flow.
double pcl_functional(const WaveField& w, double r, double omega, int eps,
                      double coupling = 1.0);

// Free pseudo-conformal invariant  ||(x + i t hbar grad) psi||^2.
double linear_invariant(const WaveField& w, double t);

// Trigonometric evaluation of a periodic 1D field between grid points.
std::complex<double> eval_periodic(const WaveField& w, double x);

// ---------------------------------------------------------------------------
// Evolution driver

struct QuantumInitial {
    double sigma = 1.0;   // Gaussian width
    double mass = 1.0;    // L2 normalization
    double chirp = 0.0;   // quadratic phase exp(i chirp |x|^2 / hbar)
    double k0 = 0.0;      // plane-wave boost along x (periodic grids)
};

WaveField gaussian_field(GridKind kind, int n, double length, double hbar,
                         const QuantumInitial& init);

struct QuantumConfig {
    GridKind kind = GridKind::Periodic1D;
    int n = 1024;
    double length = 64.0;
    double hbar = 1.0;
    PotentialSpec pot;
    QuantumInitial initial;
    double dt = 1e-4;
    double t_end = 1.0;
    double cadence = 0.01;
    double omega0 = 0.0;          // conformal frame for the conserved functional
    bool track_pcl = false;
    double boundary_tol = 1e-10;  // abort when edge density exceeds tol * peak
};

struct QuantumSample {
    double t = 0, r = 1, rdot = 0;
    double mass = 0, kinetic_shifted = 0, rho_u = 0, x2 = 0;
    double total = 0;             // Lyapunov L (kind-appropriate)
    double pcl = 0;               // conserved functional (when tracked)
    double linear_inv = 0;        // free invariant (coupling 0 runs)
    double lp_norm = 0;           // || |psi|^2 ||_{(d+... ) } : L^{10/3} for d=3
    double energy = 0;            // unscaled conserved energy
};

struct QuantumRun {
    QuantumConfig config;
    std::vector<QuantumSample> series;
    std::vector<LyapunovRecord> records;
    WaveField final_state;
    bool aliasing_warning = false;
};

QuantumRun simulate_quantum(const QuantumConfig& cfg);

void write_quantum_csv(const QuantumRun& run, const std::string& path);
void write_field_binary(const WaveField& w, const std::string& path);

}  // namespace rescale

#endif
