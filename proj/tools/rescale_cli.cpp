// Experiment runner: one preset scenario per certified claim, configurable
// through `key = value` config files and command-line flags. Outputs are
// deterministic CSV files plus a manifest recording the resolved
// configuration and its hash.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rescale/diagnostics.hpp"
#include "rescale/errors.hpp"
#include "rescale/fluid.hpp"
#include "rescale/kinetic.hpp"
#include "rescale/quantum.hpp"
#include "rescale/scaling_ode.hpp"
#include "rescale/transforms.hpp"

namespace fs = std::filesystem;
using namespace rescale;

namespace {

using Params = std::map<std::string, std::string>;

struct Scenario {
    std::string id;
    std::string summary;
    Params defaults;
    void (*run)(const Params&, const fs::path&);
};

const std::string& lookup(const Params& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end())
        throw std::invalid_argument("missing configuration key: " + key);
    return it->second;
}
double getd(const Params& p, const std::string& key) {
    const std::string& v = lookup(p, key);
    try {
        return std::stod(v);
    } catch (const std::logic_error&) {
        throw std::invalid_argument("configuration key is not a number: " + key);
    }
}
long geti(const Params& p, const std::string& key) {
    const std::string& v = lookup(p, key);
    try {
        return std::stol(v);
    } catch (const std::logic_error&) {
        throw std::invalid_argument("configuration key is not an integer: " + key);
    }
}

// line-oriented `key = value` config with [section] headers; keys are stored
// as section.key (the bare key for the leading unnamed section)
Params parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file " + path);
    Params out;
    std::string line, section;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line without '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        out[section.empty() ? key : section + "." + key] = val;
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string canonical(const Params& p) {
    std::ostringstream os;
    for (const auto& [k, v] : p) os << k << " = " << v << "\n";
    return os.str();
}

void write_manifest(const fs::path& out, const std::string& id, const Params& p,
                    const std::vector<std::string>& notes) {
    std::ofstream m(out / "manifest.txt");
    m << "scenario = " << id << "\n";
    m << "version = " << RESCALE_VERSION << "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical(p))));
    m << "config_hash = " << buf << "\n";
    m << "--- resolved configuration ---\n" << canonical(p);
    for (const auto& n : notes) m << "note: " << n << "\n";
}

void write_summary(const fs::path& out, const std::vector<std::pair<std::string, double>>& kv) {
    std::FILE* f = std::fopen((out / "summary.csv").string().c_str(), "wb");
    std::fprintf(f, "key,value\n");
    for (const auto& [k, v] : kv) std::fprintf(f, "%s,%.17g\n", k.c_str(), v);
    std::fclose(f);
}

// --------------------------------------------------------------------------
// scenario bodies

void run_counterexample_scenario(const Params& p, const fs::path& out) {
    auto res = run_counterexample(getd(p, "t_end"), getd(p, "dt"));
    write_summary(out, {{"slope_ball", res.slope_ball},
                        {"slope_annulus", res.slope_annulus},
                        {"drift_ball", res.drift_ball},
                        {"drift_annulus", res.drift_annulus},
                        {"t_end", res.t_end}});
}

KineticConfig kinetic_config(const Params& p, Geometry geom, int d, ProfileKind prof) {
    KineticConfig cfg;
    cfg.geom = geom;
    cfg.d = d;
    cfg.eps = -1;
    cfg.dt = getd(p, "dt");
    cfg.t_end = getd(p, "t_end");
    cfg.cadence = getd(p, "cadence");
    cfg.sampler.profile = prof;
    cfg.sampler.n = static_cast<std::size_t>(geti(p, "sampler.n"));
    cfg.sampler.mass = getd(p, "sampler.mass");
    cfg.sampler.extent = getd(p, "sampler.extent");
    cfg.sampler.sigma_v = getd(p, "sampler.sigma_v");
    cfg.sampler.seed = static_cast<std::uint64_t>(geti(p, "seed"));
    return cfg;
}

void emit_kinetic_outputs(const KineticRun& run, const fs::path& out, int d) {
    write_lyapunov_csv(run.records, (out / "lyapunov.csv").string());
    write_snapshot_csv(run, (out / "snapshots.csv").string());
    if (d >= 2) {
        std::FILE* f = std::fopen((out / "norms.csv").string().c_str(), "wb");
        std::fprintf(f, "t,R,rho_lp,strichartz,dual_weighted,support\n");
        StrichartzIntegral si;
        const bool has_si = d == 2 || d == 3;
        if (has_si) si = strichartz_integral(run.records, d);
        for (std::size_t i = 0; i < run.records.size(); ++i) {
            const auto& r = run.records[i];
            const double dual =
                d >= 3 ? std::pow(r.r, 0.5 * (d - 2.0)) * std::sqrt(std::max(0.0, r.rho_u))
                       : 0.0;
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.r,
                         run.rho_lp_norm[i], has_si ? si.running[i] : 0.0, dual,
                         run.support_radius[i]);
        }
        std::fclose(f);
    }
}

void run_vp1d(const Params& p, const fs::path& out) {
    KineticConfig cfg = kinetic_config(p, Geometry::Cartesian1D, 1, ProfileKind::ColdSlab);
    cfg.scaling = ScalingParams{1, -1, 2.0, 1.0, 2.0};  // R = (1+t)^2 frame
    cfg.scaling_given = true;
    cfg.snapshot_every = cfg.t_end / 16.0;
    auto run = simulate_vp(cfg);
    write_lyapunov_csv(run.records, (out / "lyapunov.csv").string());
    write_snapshot_csv(run, (out / "snapshots.csv").string());
    // rescaled field distance per snapshot
    StationaryState target{cfg.sampler.mass, 1, 2.0};
    std::FILE* f = std::fopen((out / "fielddist.csv").string().c_str(), "wb");
    std::fprintf(f, "t,R,distance\n");
    for (const auto& snap : run.snapshots) {
        const double rr = (1.0 + snap.t) * (1.0 + snap.t);
        std::fprintf(f, "%.17g,%.17g,%.17g\n", snap.t, rr,
                     sheet_field_distance(snap.state, target, rr));
    }
    std::fclose(f);
}

void run_vp_radial(const Params& p, const fs::path& out) {
    const int d = static_cast<int>(geti(p, "d"));
    KineticConfig cfg = kinetic_config(p, Geometry::Radial, d, ProfileKind::WarmBall);
    auto run = simulate_vp(cfg);
    emit_kinetic_outputs(run, out, d);
    write_summary(out, {{"mass", cfg.sampler.mass},
                        {"L0", run.records.front().total},
                        {"L_end", run.records.back().total},
                        {"lower_bound_2d", d == 2 ? lower_bound_2d(cfg.sampler.mass) : 0.0},
                        {"cfl_warning", run.cfl_warning ? 1.0 : 0.0}});
}

void run_vpm(const Params& p, const fs::path& out) {
    KineticConfig cfg = kinetic_config(p, Geometry::Planar2D, 2, ProfileKind::WarmDisk2D);
    cfg.b0 = getd(p, "b0");
    auto run = simulate_vpm(cfg);
    emit_kinetic_outputs(run, out, 2);
    std::FILE* f = std::fopen((out / "cross.csv").string().c_str(), "wb");
    std::fprintf(f, "t,cross_term,noise_floor\n");
    for (std::size_t i = 0; i < run.records.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g\n", run.records[i].t, run.cross_term[i],
                     run.cross_noise_floor);
    std::fclose(f);
}

void run_ep_shells(const Params& p, const fs::path& out) {
    const int d = static_cast<int>(geti(p, "d"));
    ShellConfig cfg;
    cfg.d = d;
    cfg.eps = -1;
    cfg.dt = getd(p, "dt");
    cfg.t_end = getd(p, "t_end");
    cfg.cadence = getd(p, "cadence");
    cfg.initial = cold_ball_shells(d, getd(p, "sampler.mass"), getd(p, "sampler.extent"),
                                   static_cast<std::size_t>(geti(p, "sampler.n")));
    auto run = simulate_ep_shells(cfg);
    write_lyapunov_csv(run.records, (out / "lyapunov.csv").string());
    write_shell_csv(run.final_state, run.record_t.back(), (out / "shells.csv").string());
    std::vector<std::pair<std::string, double>> kv = {
        {"mass", getd(p, "sampler.mass")},
        {"L0", run.records.front().total},
        {"L_end", run.records.back().total},
        {"crossings", static_cast<double>(run.crossings)}};
    if (d == 2) {
        auto lim = ep_log_limits_2d(run);
        kv.push_back({"potential_over_logR", lim.potential_ratio});
        kv.push_back({"kinetic_over_logR", lim.kinetic_ratio});
        kv.push_back({"moment_over_R2", lim.moment_ratio});
        kv.push_back({"lower_bound", lower_bound_2d(getd(p, "sampler.mass"))});
    }
    write_summary(out, kv);
}

void run_euler(const Params& p, const fs::path& out) {
    const int n = static_cast<int>(geti(p, "model.n_grid"));
    EulerState1D st;
    st.x0 = -0.5 * getd(p, "model.length");
    st.dx = getd(p, "model.length") / n;
    st.gamma_exp = getd(p, "model.gamma");
    st.rho.resize(n);
    st.u.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double x = st.x0 + i * st.dx;
        st.rho[i] = getd(p, "model.background") + std::exp(-x * x);
    }
    EulerConfig cfg;
    cfg.dt = getd(p, "dt");
    cfg.t_end = getd(p, "t_end");
    cfg.cadence = getd(p, "cadence");
    auto run = simulate_euler_gas(st, cfg);
    write_euler_functional_csv(run, (out / "functional.csv").string());
    write_euler_state_csv(run, (out / "state.csv").string());
    write_summary(out, {{"D0", run.series.front().dispersion},
                        {"D_end", run.series.back().dispersion},
                        {"shock_terminated", run.shock_terminated ? 1.0 : 0.0},
                        {"t_final", run.t_final}});
}

QuantumConfig quantum_config(const Params& p, GridKind kind) {
    QuantumConfig cfg;
    cfg.kind = kind;
    cfg.n = static_cast<int>(geti(p, "model.n_grid"));
    cfg.length = getd(p, "model.length");
    cfg.dt = getd(p, "dt");
    cfg.t_end = getd(p, "t_end");
    cfg.cadence = getd(p, "cadence");
    cfg.initial.sigma = getd(p, "model.sigma");
    cfg.initial.mass = getd(p, "sampler.mass");
    return cfg;
}

void emit_quantum_outputs(const QuantumRun& run, const fs::path& out) {
    write_quantum_csv(run, (out / "quantum.csv").string());
    write_field_binary(run.final_state, (out / "field_final.bin").string());
    std::FILE* f = std::fopen((out / "invariants.csv").string().c_str(), "wb");
    std::fprintf(f, "t,linear_invariant,energy,lp_norm,R,Rdot\n");
    for (const auto& s : run.series)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.linear_inv,
                     s.energy, s.lp_norm, s.r, s.rdot);
    std::fclose(f);
}

void run_nls(const Params& p, const fs::path& out) {
    QuantumConfig cfg = quantum_config(p, GridKind::Periodic1D);
    cfg.pot.kind = PotentialSpec::Kind::Power;
    cfg.pot.p = getd(p, "model.p");
    cfg.pot.eps = -1;
    cfg.pot.coupling = getd(p, "model.coupling");
    cfg.track_pcl = true;
    cfg.omega0 = getd(p, "model.omega0");
    auto run = simulate_quantum(cfg);
    emit_quantum_outputs(run, out);
    write_summary(out, {{"pcl_start", run.series.front().pcl},
                        {"pcl_end", run.series.back().pcl},
                        {"critical", coupling_is_critical(cfg.pot.p, 1) ? 1.0 : 0.0},
                        {"aliasing_warning", run.aliasing_warning ? 1.0 : 0.0}});
    if (!coupling_is_critical(cfg.pot.p, 1) && cfg.pot.coupling != 0.0)
        std::fprintf(stderr,
                     "note: p=%g is off-critical in d=1; the conserved functional "
                     "is tracked but not certified\n",
                     cfg.pot.p);
}

void run_sp(const Params& p, const fs::path& out) {
    QuantumConfig cfg = quantum_config(p, GridKind::Radial3D);
    cfg.pot.kind = PotentialSpec::Kind::Poisson;
    cfg.pot.eps = -1;
    auto run = simulate_quantum(cfg);
    emit_quantum_outputs(run, out);
    write_summary(out, {{"L0", run.series.front().total},
                        {"L_end", run.series.back().total},
                        {"mass", run.series.back().mass}});
}

void run_scaling_survey(const Params& p, const fs::path& out) {
    std::vector<std::pair<std::string, double>> kv;
    for (int d = 1; d <= 4; ++d) {
        ScalingParams sp{d, -1, 1.0, 1.0, 0.0};
        auto sol = integrate_r(sp, getd(p, "t_end"), getd(p, "dt"));
        char name[32];
        std::snprintf(name, sizeof name, "scaling_d%d.csv", d);
        sol.write_csv((out / name).string());
        if (d >= 2) {
            kv.push_back({"lambda2_residual_d" + std::to_string(d),
                          lambda_rescale_check(sol, 2.0)});
            auto tl = tau_infinity(sol);
            kv.push_back({"tau_infinity_d" + std::to_string(d),
                          tl.finite ? tl.value : -1.0});
        }
    }
    write_summary(out, kv);
}

const std::vector<Scenario>& registry() {
    static const std::vector<Scenario> list = {
        {"counterexample-d3",
         "two-shell construction: edge slopes sqrt(2) and sqrt(5) forbid profile convergence",
         {{"t_end", "1000"}, {"dt", "1e-3"}, {"seed", "1"}},
         run_counterexample_scenario},
        {"vp1d-cold-slab",
         "1D sheet plasma: rescaled field converges to the flat profile like 1/(1+t)",
         {{"t_end", "1000"}, {"dt", "0.01"}, {"cadence", "10"}, {"seed", "1"},
          {"sampler.n", "10000"}, {"sampler.mass", "2"}, {"sampler.extent", "1"},
          {"sampler.sigma_v", "0"}},
         run_vp1d},
        {"vp3d-warm",
         "3D radial plasma: monotone rescaled energy, bounded dissipation integral, density decay",
         {{"d", "3"}, {"t_end", "1000"}, {"dt", "0.015"}, {"cadence", "0.5"},
          {"seed", "1"}, {"sampler.n", "4096"}, {"sampler.mass", "2"},
          {"sampler.extent", "1"}, {"sampler.sigma_v", "0.35"}},
         run_vp_radial},
        {"vp4d-constancy",
         "4D radial plasma: the rescaled energy is a conserved quantity",
         {{"d", "4"}, {"t_end", "10"}, {"dt", "1e-3"}, {"cadence", "0.1"},
          {"seed", "1"}, {"sampler.n", "4096"}, {"sampler.mass", "2"},
          {"sampler.extent", "1"}, {"sampler.sigma_v", "0.35"}},
         run_vp_radial},
        {"vp2d-lower-bound",
         "2D radial plasma: rescaled energy stays above its closed-form floor",
         {{"d", "2"}, {"t_end", "100"}, {"dt", "2e-3"}, {"cadence", "0.5"},
          {"seed", "1"}, {"sampler.n", "4096"}, {"sampler.mass", "3"},
          {"sampler.extent", "1"}, {"sampler.sigma_v", "0.3"}},
         run_vp_radial},
        {"vpm2d-magnetized",
         "magnetized 2D plasma: angular cross term and monotonicity of the rescaled energy",
         {{"t_end", "10"}, {"dt", "1e-3"}, {"cadence", "0.1"}, {"seed", "1"},
          {"b0", "1"}, {"sampler.n", "4096"}, {"sampler.mass", "2"},
          {"sampler.extent", "1"}, {"sampler.sigma_v", "0.3"}},
         run_vpm},
        {"ep-shells-d3",
         "3D pressureless shells: monotone rescaled energy while profiles need not converge",
         {{"d", "3"}, {"t_end", "100"}, {"dt", "1e-3"}, {"cadence", "0.5"},
          {"seed", "1"}, {"sampler.n", "256"}, {"sampler.mass", "12.566370614359172"},
          {"sampler.extent", "1"}},
         run_ep_shells},
        {"ep-shells-d2",
         "2D pressureless shells: log-scaled limits of energy, potential and second moment",
         {{"d", "2"}, {"t_end", "1000"}, {"dt", "2e-3"}, {"cadence", "5"},
          {"seed", "1"}, {"sampler.n", "256"}, {"sampler.mass", "3"},
          {"sampler.extent", "1"}},
         run_ep_shells},
        {"euler-gas-1d",
         "1D isentropic gas: weighted dispersion functional decreases until steepening",
         {{"t_end", "2"}, {"dt", "2e-4"}, {"cadence", "0.02"}, {"seed", "1"},
          {"model.n_grid", "1024"}, {"model.length", "20"}, {"model.gamma", "2"},
          {"model.background", "0.02"}},
         run_euler},
        {"nls-critical-d1",
         "critical defocusing wave equation: quadratic-phase functional is conserved",
         {{"t_end", "1"}, {"dt", "1e-4"}, {"cadence", "0.02"}, {"seed", "1"},
          {"model.n_grid", "4096"}, {"model.length", "64"}, {"model.p", "5"},
          {"model.coupling", "1"}, {"model.omega0", "1"}, {"model.sigma", "1"},
          {"sampler.mass", "1"}},
         run_nls},
        {"nls-defocusing-p3-d1",
         "subcritical defocusing wave equation: the power-law weighted energy decreases",
         {{"t_end", "1.5"}, {"dt", "2e-4"}, {"cadence", "0.05"}, {"seed", "1"},
          {"model.n_grid", "2048"}, {"model.length", "64"}, {"model.p", "3"},
          {"model.coupling", "1"}, {"model.omega0", "0"}, {"model.sigma", "1"},
          {"sampler.mass", "2"}},
         run_nls},
        {"free-schrodinger-d1",
         "free wave packet control: quadratic invariant of the linear flow is exact",
         {{"t_end", "1"}, {"dt", "5e-4"}, {"cadence", "0.05"}, {"seed", "1"},
          {"model.n_grid", "4096"}, {"model.length", "64"}, {"model.p", "5"},
          {"model.coupling", "0"}, {"model.omega0", "1"}, {"model.sigma", "1"},
          {"sampler.mass", "1"}},
         run_nls},
        {"sp3d-radial",
         "3D self-consistent wave equation: monotone rescaled energy and density decay",
         {{"t_end", "20"}, {"dt", "5e-4"}, {"cadence", "0.2"}, {"seed", "1"},
          {"model.n_grid", "2048"}, {"model.length", "96"}, {"model.sigma", "1.5"},
          {"sampler.mass", "2"}},
         run_sp},
        {"scaling-survey",
         "scale-factor equation: growth laws, rescaled-time limits, rescaling invariance",
         {{"t_end", "200"}, {"dt", "1e-3"}, {"seed", "1"}},
         run_scaling_survey},
    };
    return list;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-dependent rescaling experiment runner"};
    std::string scenario, config_path, out_dir;
    bool list = false;
    double dt = -1, t_end = -1, cadence = -1;
    long seed = -1;
    app.add_option("--scenario", scenario, "scenario id (see --list)");
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "sampler seed");
    app.add_option("--dt", dt, "time step");
    app.add_option("--t-end", t_end, "final time");
    app.add_option("--cadence", cadence, "diagnostic interval");
    app.add_flag("--list", list, "list scenarios");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& s : registry())
            std::printf("%-22s %s\n", s.id.c_str(), s.summary.c_str());
        return 0;
    }

    try {
        Params file_params;
        if (!config_path.empty()) file_params = parse_config_file(config_path);
        if (scenario.empty() && file_params.count("scenario"))
            scenario = file_params.at("scenario");
        if (scenario.empty()) {
            std::fprintf(stderr, "error: no scenario given (use --scenario or --list)\n");
            return 1;
        }
        const Scenario* found = nullptr;
        for (const auto& s : registry())
            if (s.id == scenario) found = &s;
        if (!found) {
            const Scenario* best = nullptr;
            std::size_t best_d = 1e9;
            for (const auto& s : registry()) {
                const std::size_t d = edit_distance(scenario, s.id);
                if (d < best_d) {
                    best_d = d;
                    best = &s;
                }
            }
            std::fprintf(stderr, "error: unknown scenario '%s'; did you mean '%s'?\n",
                         scenario.c_str(), best ? best->id.c_str() : "");
            return 1;
        }

        Params params = found->defaults;
        for (const auto& [k, v] : file_params)
            if (k != "scenario") params[k] = v;
        if (dt > 0) params["dt"] = std::to_string(dt);
        if (t_end > 0) params["t_end"] = std::to_string(t_end);
        if (cadence > 0) params["cadence"] = std::to_string(cadence);
        if (seed >= 0) params["seed"] = std::to_string(seed);

        fs::path out;
        if (!out_dir.empty()) {
            out = out_dir;
        } else {
            const char* root = std::getenv("RESCALE_OUT_DIR");
            out = fs::path(root ? root : "runs") / found->id;
        }
        fs::create_directories(out);

        found->run(params, out);
        write_manifest(out, found->id, params, {});
        std::printf("wrote %s\n", out.string().c_str());
        return 0;
    } catch (const collapse_error& e) {
        std::fprintf(stderr, "runtime abort: %s\n", e.what());
        return 2;
    } catch (const shock_error& e) {
        std::fprintf(stderr, "runtime abort: %s\n", e.what());
        return 2;
    } catch (const boundary_error& e) {
        std::fprintf(stderr, "runtime abort: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
