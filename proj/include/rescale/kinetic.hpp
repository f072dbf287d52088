#ifndef RESCALE_KINETIC_HPP
#define RESCALE_KINETIC_HPP

// Particle solvers for the Vlasov--Poisson system: the exact 1D sheet model,
// radially symmetric ensembles in d >= 2 (weighted shells carrying angular
// momentum), and the planar 2D model with an external magnetic field B0.
//
// Weighted sheets/shells are exact measure solutions of the radially
// symmetric system, so the Lyapunov identities hold for them up to time
// discretization error; forces cost O(N log N) via sorting.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rescale/records.hpp"
#include "rescale/scaling_ode.hpp"
#include "rescale/transforms.hpp"

namespace rescale {

enum class Geometry { Cartesian1D, Radial, Planar2D };

struct ParticleEnsemble {
    Geometry geom = Geometry::Cartesian1D;
    int d = 1;

    // Cartesian1D: pos = x, vel = v                      (ell, pos2, vel2 unused)
    // Radial:      pos = r >= 0, vel = v_r, ell = |L|    (per unit mass)
    // Planar2D:    pos = x1, pos2 = x2, vel = v1, vel2 = v2
    std::vector<double> pos, vel, ell, pos2, vel2;
    std::vector<double> w;

    std::size_t size() const { return pos.size(); }
    double mass() const;
    void validate() const;
};

struct FieldSolution {
    std::vector<double> accel;   // Cartesian1D / Radial: signed magnitude along x / r
    std::vector<double> accel2;  // Planar2D second component
    double rho_u = 0.0;          // int rho U  (pairwise kernel, geometry-specific)
};

// Exact 1D electrostatic field: accel_i = (weight strictly left + own/2) - M/2.
// Ties share the group field value. Plasma sign convention (eps = -1).
FieldSolution sheet_field_1d(const ParticleEnsemble& e, bool with_energy = true);

// Radially symmetric field in d >= 2; force magnitude -eps * m_eff / (|S^(d-1)| r^(d-1))
// outward with m_eff = mass strictly inside + half own + half of exact ties.
// Works for Radial ensembles and for Planar2D ensembles (radius = |x|).
FieldSolution radial_field(const ParticleEnsemble& e, int eps, bool with_energy = true);

// int rho U for the ring/shell kernel (d >= 2), diagonal included:
//   d  = 2:  eps/(2 pi) * sum w_i w_j log max(r_i, r_j)
//   d >= 3: -eps * sum w_i w_j / ((d-2)|S^(d-1)| max(r_i,r_j)^(d-2))
double pairwise_rho_u_radial(const std::vector<double>& radii,
                             const std::vector<double>& weights, int d, int eps);

// int rho U for 1D sheets: -(1/2) sum w_i w_j |x_i - x_j|  (eps = -1 kernel).
double pairwise_rho_u_1d(const std::vector<double>& x, const std::vector<double>& w);

// One kick-drift-kick step starting from the field at the current positions;
// returns the field at the new positions so steps can be chained with one
// field evaluation each. Radial geometry conserves each particle's angular
// momentum exactly (it enters as the centrifugal term ell^2/r^3); Planar2D
// applies the magnetic rotation by angle b0*dt/2 around each half kick.
FieldSolution step_leapfrog(ParticleEnsemble& e, const FieldSolution& field,
                            double dt, int eps, double b0 = 0.0,
                            bool with_energy = true);

// Shifted kinetic moment sum w |v - (Rdot/R) x|^2, second moment sum w |x|^2,
// and (Planar2D) the angular cross term sum w (x . eta_perp) = -sum w (x ^ v).
struct KineticMoments {
    double kinetic_raw = 0.0;
    double x2 = 0.0;
    double cross = 0.0;
};
KineticMoments kinetic_moments(const ParticleEnsemble& e, double r, double rdot);

// Total unscaled energy of the particle system (kinetic + pairwise potential).
double total_energy(const ParticleEnsemble& e, int eps);

// ---------------------------------------------------------------------------
// Initial data

enum class ProfileKind {
    ColdSlab,      // Cartesian1D: uniform on [-extent, extent], v = 0
    ColdBall,      // Radial: uniform-density ball, v = 0
    WarmBall,      // Radial: uniform ball, isotropic Maxwellian sigma_v
    WarmGaussian,  // Radial: Gaussian profile (scale = extent), Maxwellian
    WarmDisk2D     // Planar2D: uniform disk, Maxwellian, mirror-paired
};

struct SamplerConfig {
    ProfileKind profile = ProfileKind::ColdSlab;
    double mass = 2.0;
    double extent = 1.0;  // support radius / slab half-width / Gaussian scale
    double sigma_v = 0.0;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    bool stratified = true;  // deterministic quasi-uniform strata (default)
};

ParticleEnsemble sample_ensemble(int d, const SamplerConfig& cfg);

// ---------------------------------------------------------------------------
// Simulation driver

struct KineticConfig {
    Geometry geom = Geometry::Radial;
    int d = 3;
    int eps = -1;
    double b0 = 0.0;  // Planar2D only
    double dt = 1e-3;
    double t_end = 10.0;
    double cadence = 0.1;       // diagnostic sampling interval
    double snapshot_every = 0;  // 0: first/last only
    SamplerConfig sampler;
    ScalingParams scaling;       // used when scaling_given
    bool scaling_given = false;  // else R0=1, Rdot0=0, c0=1 with (d, eps)
    double cfl_fraction = 0.5;
};

struct KineticSnapshot {
    double t;
    ParticleEnsemble state;
};

struct KineticRun {
    KineticConfig config;
    std::vector<LyapunovRecord> records;
    std::vector<KineticSnapshot> snapshots;
    std::vector<double> rho_lp_norm;     // ||rho||_{(d+2)/d} per record
    std::vector<double> support_radius;  // max particle radius per record
    std::vector<double> cross_term;      // Planar2D, per record
    std::vector<double> energy;          // unscaled total energy per record
    double cross_noise_floor = 0.0;      // rss of w*(x . eta_perp) at t = 0
    bool cfl_warning = false;
    bool symmetry_warning = false;
};

KineticRun simulate_vp(const KineticConfig& cfg);
KineticRun simulate_vpm(const KineticConfig& cfg);  // Planar2D with b0

void write_snapshot_csv(const KineticRun& run, const std::string& path);

// ---------------------------------------------------------------------------
// Weak-metric distance and density norms

struct GriddedDensity1D {
    double x0 = 0.0, dx = 1.0;
    std::vector<double> values;
};

// Bounded-Lipschitz distance between a 1D density and the stationary profile:
// int min(|Phi|, 1) with Phi the antiderivative of (nu - nu_inf). Masses must
// agree to 1e-8.
double weak_norm_distance(const GriddedDensity1D& nu, const StationaryState& target);

// L2 distance between the rescaled sheet field xi -> -dU(t, r_scale*xi) and
// the stationary field of `target`, on a uniform xi grid over [-xi_max, xi_max].
double sheet_field_distance(const ParticleEnsemble& e, const StationaryState& target,
                            double r_scale, double xi_max = 3.0,
                            std::size_t grid = 4096);

// ||rho||_{L^p} from a radial or planar ensemble via an equal-width radial
// histogram up to r_max.
double radial_density_lp_norm(const ParticleEnsemble& e, double p, double r_max,
                              std::size_t bins = 128);

// int |grad U|^2 of a radial ensemble, d >= 3 (equals int rho U for eps=-1);
// certified upper bound for the dual weak norm of rho.
double radial_field_energy(const ParticleEnsemble& e, int d);

}  // namespace rescale

#endif
