#ifndef RESCALE_RECORDS_HPP
#define RESCALE_RECORDS_HPP

#include <string>
#include <vector>

namespace rescale {

// One Lyapunov audit sample. Conventions:
//   K       = R^(d-2) * (shifted kinetic moment)      [B-weighted]
//   P       = R^(d-2) * int rho U  -  eps R^(-2) int rho |x|^2
//   logTerm = M^2/(2 pi) log R for d = 2, else 0
//   L       = K + P + logTerm
//   dLdt_formula = (d-4) Rdot R^(d-3) * (shifted kinetic moment, unweighted)
struct LyapunovRecord {
    double t = 0.0;
    double r = 1.0;
    double rdot = 0.0;
    double kinetic = 0.0;      // K
    double potential = 0.0;    // P
    double log_term = 0.0;
    double total = 0.0;        // L
    double dldt_formula = 0.0;
    double dldt_numeric = 0.0;  // centered difference, filled by the series pass

    // auxiliary raw moments kept for audits and rate fits
    double kinetic_raw = 0.0;   // int |v - (Rdot/R)x|^2 dmu, no B weight
    double rho_u = 0.0;         // int rho U
    double x2 = 0.0;            // int rho |x|^2
};

void fill_dldt_numeric(std::vector<LyapunovRecord>& series);

void write_lyapunov_csv(const std::vector<LyapunovRecord>& series,
                        const std::string& path);

struct DecayFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;  // rms of log-log fit residuals
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t n_points = 0;
};

}  // namespace rescale

#endif
