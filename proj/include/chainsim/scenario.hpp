#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chainsim/bath.hpp"
#include "chainsim/chain.hpp"
#include "chainsim/dynamics.hpp"
#include "chainsim/entanglement.hpp"
#include "chainsim/errors.hpp"
#include "chainsim/redfield.hpp"
#include "chainsim/units.hpp"

namespace chainsim {

enum class StateBasis { Eigen, Computational };

inline const char* to_string(StateBasis b) {
    return b == StateBasis::Eigen ? "eigen" : "computational";
}

struct ScenarioConfig {
    // [chain]
    int n_sites = 2;
    double heisenberg_ghz = 0.0;  // exchange bandwidth (l_max - l_min) J / h
    double splitting_ghz = 0.0;   // level splitting 2B / h
    // [bath]
    double temperature_ghz = 0.0;
    double radius_m = 0.0;
    double current_a = 0.0;
    double density_kg_m3 = 0.0;
    double speed_m_s = 0.0;
    double spacing_over_r = 4.0;
    // [run]
    double t_max_ns = 0.0;
    double dt_ns = 0.0;       // 0 = automatic
    long long output_stride = 0;  // 0 = automatic
    CouplingMode coupling_mode = CouplingMode::Auto;
    double secular_tol_radns = 1e-6;
    std::vector<double> initial_state;  // real amplitudes
    StateBasis initial_basis = StateBasis::Eigen;

    std::string name = "scenario";

    void validate() const {
        if (n_sites < 2 || n_sites > 4) throw ConfigError("n_sites must be 2, 3, or 4");
        if (!(heisenberg_ghz > 0.0)) throw ConfigError("heisenberg_GHz must be > 0");
        if (!(splitting_ghz >= 0.0)) throw ConfigError("splitting_GHz must be >= 0");
        if (!(temperature_ghz > 0.0)) throw ConfigError("temperature_GHz must be > 0");
        if (!(t_max_ns > 0.0)) throw ConfigError("t_max_ns must be > 0");
        if (!(dt_ns >= 0.0)) throw ConfigError("dt_ns must be >= 0");
        if (output_stride < 0) throw ConfigError("output_stride must be >= 0");
        if (!(secular_tol_radns > 0.0)) throw ConfigError("secular_tol_radns must be > 0");
        const size_t dim = size_t{1} << n_sites;
        if (initial_state.size() != dim)
            throw ConfigError("initial_state needs " + std::to_string(dim) +
                              " amplitudes for n_sites = " + std::to_string(n_sites));
        double norm2 = 0.0;
        for (double a : initial_state) {
            if (!std::isfinite(a)) throw ConfigError("initial_state amplitudes must be finite");
            norm2 += a * a;
        }
        if (norm2 <= 0.0) throw ConfigError("initial_state must not be the zero vector");
        BathSpec b = bath();
        b.validate();
    }

    ChainSpec chain() const {
        ChainSpec c;
        c.n_sites = n_sites;
        c.exchange_j = two_pi * heisenberg_ghz / exchange_bandwidth_factor(n_sites);
        c.splitting_b = pi * splitting_ghz;
        return c;
    }

    BathSpec bath() const {
        BathSpec b;
        b.temperature_ghz = temperature_ghz;
        b.radius_m = radius_m;
        b.current_a = current_a;
        b.density_kg_m3 = density_kg_m3;
        b.sound_speed_m_s = speed_m_s;
        b.spacing_over_r = spacing_over_r;
        return b;
    }
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmtg(double v, int prec = 10) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("value for '" + key + "' is not a number: '" + v + "'");
    return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("value for '" + key + "' is not an integer: '" + v + "'");
    return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list for '" + key + "'");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("empty list for '" + key + "'");
    return out;
}

}  // namespace detail

// INI-style round-trippable configuration:
//   [chain] n_sites, heisenberg_GHz, splitting_GHz
//   [bath]  temperature_GHz, radius_m, current_A, density_kg_m3, speed_m_s, spacing_over_R
//   [run]   t_max_ns, dt_ns, output_stride, coupling_mode, secular_tol_radns,
//           initial_state, initial_basis
// '#' or ';' start a comment; unknown sections or keys are hard errors.
inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::map<std::string, bool> seen;
    std::string section;
    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = raw;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "chain" && section != "bath" && section != "run")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string full = section + "." + key;
        if (seen[full]) throw ConfigError("duplicate key '" + full + "'");
        seen[full] = true;

        if (full == "chain.n_sites") cfg.n_sites = static_cast<int>(detail::parse_int(full, value));
        else if (full == "chain.heisenberg_GHz") cfg.heisenberg_ghz = detail::parse_double(full, value);
        else if (full == "chain.splitting_GHz") cfg.splitting_ghz = detail::parse_double(full, value);
        else if (full == "bath.temperature_GHz") cfg.temperature_ghz = detail::parse_double(full, value);
        else if (full == "bath.radius_m") cfg.radius_m = detail::parse_double(full, value);
        else if (full == "bath.current_A") cfg.current_a = detail::parse_double(full, value);
        else if (full == "bath.density_kg_m3") cfg.density_kg_m3 = detail::parse_double(full, value);
        else if (full == "bath.speed_m_s") cfg.speed_m_s = detail::parse_double(full, value);
        else if (full == "bath.spacing_over_R") cfg.spacing_over_r = detail::parse_double(full, value);
        else if (full == "run.t_max_ns") cfg.t_max_ns = detail::parse_double(full, value);
        else if (full == "run.dt_ns") cfg.dt_ns = detail::parse_double(full, value);
        else if (full == "run.output_stride") cfg.output_stride = detail::parse_int(full, value);
        else if (full == "run.coupling_mode") cfg.coupling_mode = coupling_mode_from_string(value);
        else if (full == "run.secular_tol_radns") cfg.secular_tol_radns = detail::parse_double(full, value);
        else if (full == "run.initial_state") cfg.initial_state = detail::parse_list(full, value);
        else if (full == "run.initial_basis") {
            if (value == "eigen") cfg.initial_basis = StateBasis::Eigen;
            else if (value == "computational") cfg.initial_basis = StateBasis::Computational;
            else throw ConfigError("initial_basis must be 'eigen' or 'computational'");
        } else if (full == "run.name") cfg.name = value;
        else throw ConfigError("unknown key '" + full + "'");
    }
    for (const char* req : {"chain.n_sites", "chain.heisenberg_GHz", "chain.splitting_GHz",
                            "bath.temperature_GHz", "bath.radius_m", "bath.current_A",
                            "bath.density_kg_m3", "bath.speed_m_s", "run.t_max_ns",
                            "run.initial_state"})
        if (!seen[req]) throw ConfigError(std::string("missing required key '") + req + "'");
    cfg.validate();
    return cfg;
}

inline std::string emit_config(const ScenarioConfig& cfg) {
    using detail::fmt17;
    std::ostringstream o;
    o << "[chain]\n";
    o << "n_sites = " << cfg.n_sites << "\n";
    o << "heisenberg_GHz = " << fmt17(cfg.heisenberg_ghz) << "\n";
    o << "splitting_GHz = " << fmt17(cfg.splitting_ghz) << "\n";
    o << "\n[bath]\n";
    o << "temperature_GHz = " << fmt17(cfg.temperature_ghz) << "\n";
    o << "radius_m = " << fmt17(cfg.radius_m) << "\n";
    o << "current_A = " << fmt17(cfg.current_a) << "\n";
    o << "density_kg_m3 = " << fmt17(cfg.density_kg_m3) << "\n";
    o << "speed_m_s = " << fmt17(cfg.speed_m_s) << "\n";
    o << "spacing_over_R = " << fmt17(cfg.spacing_over_r) << "\n";
    o << "\n[run]\n";
    o << "name = " << cfg.name << "\n";
    o << "t_max_ns = " << fmt17(cfg.t_max_ns) << "\n";
    o << "dt_ns = " << fmt17(cfg.dt_ns) << "\n";
    o << "output_stride = " << cfg.output_stride << "\n";
    o << "coupling_mode = " << to_string(cfg.coupling_mode) << "\n";
    o << "secular_tol_radns = " << fmt17(cfg.secular_tol_radns) << "\n";
    o << "initial_basis = " << to_string(cfg.initial_basis) << "\n";
    o << "initial_state = ";
    for (size_t i = 0; i < cfg.initial_state.size(); ++i)
        o << (i ? "," : "") << fmt17(cfg.initial_state[i]);
    o << "\n";
    return o.str();
}

inline std::vector<std::string> preset_names() {
    return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};
}

inline ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    c.density_kg_m3 = 5000.0;
    c.speed_m_s = 5000.0;
    c.spacing_over_r = 4.0;
    auto large_rings = [&] { c.radius_m = 10e-6; c.current_a = 3e-6; };
    auto small_rings = [&] { c.radius_m = 10e-9; c.current_a = 0.1e-6; };
    if (name == "fig1") {
        c.n_sites = 2; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.5; c.temperature_ghz = 0.3;
        large_rings();
        c.initial_basis = StateBasis::Eigen;
        c.initial_state = {0, 0, 0, 1};
        c.t_max_ns = 1.0e7;
    } else if (name == "fig2") {
        c.n_sites = 3; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.5; c.temperature_ghz = 0.3;
        large_rings();
        c.initial_basis = StateBasis::Eigen;
        c.initial_state = {0, 0, 0, 1, 0, 0, 1, 0};
        c.t_max_ns = 2.0e5;
    } else if (name == "fig3") {
        c.n_sites = 2; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.5; c.temperature_ghz = 0.3;
        large_rings();
        c.initial_basis = StateBasis::Computational;
        c.initial_state = {1, 0, 0, 1};
        c.t_max_ns = 1.0e5;
    } else if (name == "fig4") {
        c.n_sites = 2; c.heisenberg_ghz = 1.0; c.splitting_ghz = 0.5; c.temperature_ghz = 0.1;
        large_rings();
        c.initial_basis = StateBasis::Computational;
        c.initial_state = {0, 1, 0, 0};
        c.t_max_ns = 6.0e5;
    } else if (name == "fig5") {
        c.n_sites = 2; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.5; c.temperature_ghz = 0.3;
        small_rings();
        c.coupling_mode = CouplingMode::Collective;
        c.initial_basis = StateBasis::Eigen;
        c.initial_state = {1, 1, 1, 1};
        c.t_max_ns = 3.0e16;
    } else if (name == "fig6") {
        c.n_sites = 2; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.0; c.temperature_ghz = 0.2;
        large_rings();
        c.initial_basis = StateBasis::Eigen;
        c.initial_state = {1, 1, 1, 1};
        c.t_max_ns = 2.0e5;
    } else if (name == "fig7") {
        c.n_sites = 3; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.5; c.temperature_ghz = 0.3;
        small_rings();
        c.coupling_mode = CouplingMode::Collective;
        c.initial_basis = StateBasis::Eigen;
        c.initial_state = {0, 0, 0, 0, 1, 1, 0, 0};
        c.t_max_ns = 1.3e17;
    } else if (name == "fig8") {
        c.n_sites = 3; c.heisenberg_ghz = 1.0; c.splitting_ghz = 1.0; c.temperature_ghz = 0.1;
        large_rings();
        c.initial_basis = StateBasis::Computational;
        c.initial_state = {1, -1, 1, -1, 1, -1, 1, -1};
        c.t_max_ns = 1.0e6;
    } else {
        throw ConfigError("unknown preset '" + name + "' (fig1 .. fig8)");
    }
    c.validate();
    return c;
}

struct RunResult {
    ScenarioConfig config;
    EigenSystem es;
    RateTable rates;
    Generator gen;
    Mat rho0;        // eigenbasis, sorted indices
    Trajectory traj;
    Mat stationary;
    double final_td_stationary = 0.0;

    // Entanglement track (n_sites == 2 only): one entry per stored sample.
    int eof_pair_a = -1, eof_pair_d = -1;  // sorted indices of the scanned pair
    std::vector<EofBounds> eof;

    std::string csv_text;
    std::string report_text;

    std::string state_label(int sorted_idx) const {
        return "psi" + std::to_string(es.reference_index[sorted_idx]);
    }
};

namespace detail {

inline Mat initial_density_matrix(const ScenarioConfig& cfg, const EigenSystem& es) {
    const int d = es.dim;
    RVec amps(d);
    for (int i = 0; i < d; ++i) amps(i) = cfg.initial_state[i];
    RVec v(d);
    if (cfg.initial_basis == StateBasis::Computational) {
        v = es.vectors.transpose() * amps;
    } else {
        // Eigen-basis amplitudes are indexed by reference label.
        for (int label = 1; label <= d; ++label)
            v(es.reference_position[label - 1]) = amps(label - 1);
    }
    v.normalize();
    Mat rho = (v * v.transpose()).cast<cplx>();
    return rho;
}

inline std::vector<std::pair<int, int>> label_pairs(int dim) {
    std::vector<std::pair<int, int>> out;
    for (int a = 1; a <= dim; ++a)
        for (int b = a + 1; b <= dim; ++b) out.emplace_back(a, b);
    return out;
}

}  // namespace detail

inline RunResult run_scenario(const ScenarioConfig& cfg_in, bool with_dynamics = true) {
    ScenarioConfig cfg = cfg_in;
    cfg.validate();

    RunResult r;
    r.config = cfg;
    r.es = diagonalize(cfg.chain());
    r.rates = transition_rates(r.es, cfg.bath(), cfg.coupling_mode);
    const SecularFilter sec = secular_filter(r.es, cfg.secular_tol_radns);
    r.gen = build_generator(r.es, r.rates, sec);
    r.rho0 = detail::initial_density_matrix(cfg, r.es);

    if (with_dynamics) {
        EvolveOptions opt;
        opt.t_max_ns = cfg.t_max_ns;
        opt.dt_ns = cfg.dt_ns;
        opt.output_stride = cfg.output_stride;
        opt.max_samples = 800;
        r.traj = evolve(r.gen, r.rho0, opt);
        r.stationary = stationary_state(r.gen, &r.rho0);
        r.final_td_stationary = trace_distance(r.traj.final_state(), r.stationary);

        if (cfg.n_sites == 2) {
            // Scan the dominant initial coherence (label-lexicographic on ties).
            int pa = r.es.reference_position[0], pd = r.es.reference_position[1];
            double best = -1.0;
            for (const auto& [la, lb] : detail::label_pairs(r.es.dim)) {
                const int a = r.es.reference_position[la - 1];
                const int b = r.es.reference_position[lb - 1];
                const double mag = std::abs(r.rho0(a, b));
                if (mag > best + 1e-15) { best = mag; pa = a; pd = b; }
            }
            r.eof_pair_a = pa;
            r.eof_pair_d = pd;
            r.eof.reserve(r.traj.states.size());
            for (size_t i = 0; i < r.traj.states.size(); ++i) {
                const Mat lab = lab_frame_state(r.gen, r.traj.states[i], r.traj.times_ns[i]);
                r.eof.push_back(eof_bounds(r.es, lab, pa, pd));
            }
        }
    }

    // ---- trajectory CSV ----
    if (with_dynamics) {
        using detail::fmt17;
        std::ostringstream csv;
        const int d = r.es.dim;
        csv << "time_ns";
        for (int label = 1; label <= d; ++label) csv << ",pop_psi" << label;
        for (const auto& [la, lb] : detail::label_pairs(d))
            csv << ",re_c_psi" << la << "_psi" << lb << ",im_c_psi" << la << "_psi" << lb;
        if (cfg.n_sites == 2) csv << ",eof,eof_upper,eof_lower,eof_avg";
        csv << "\n";
        for (size_t i = 0; i < r.traj.states.size(); ++i) {
            const Mat& rho = r.traj.states[i];
            csv << fmt17(r.traj.times_ns[i]);
            for (int label = 1; label <= d; ++label) {
                const int p = r.es.reference_position[label - 1];
                csv << "," << fmt17(rho(p, p).real());
            }
            for (const auto& [la, lb] : detail::label_pairs(d)) {
                const cplx c = rho(r.es.reference_position[la - 1], r.es.reference_position[lb - 1]);
                csv << "," << fmt17(c.real()) << "," << fmt17(c.imag());
            }
            if (cfg.n_sites == 2) {
                const auto& e = r.eof[i];
                csv << "," << fmt17(e.eof) << "," << fmt17(e.upper) << "," << fmt17(e.lower)
                    << "," << fmt17(e.average);
            }
            csv << "\n";
        }
        r.csv_text = csv.str();
    }

    // ---- report ----
    {
        using detail::fmtg;
        std::ostringstream rep;
        std::ostringstream mach;
        const int d = r.es.dim;
        const auto ops = site_flip_operators(r.es);
        const BathSpec bath = cfg.bath();

        rep << "scenario: " << cfg.name << "\n";
        rep << "sites: " << cfg.n_sites << "  exchange bandwidth " << fmtg(cfg.heisenberg_ghz)
            << " GHz (J = " << fmtg(cfg.chain().exchange_j) << " rad/ns), splitting "
            << fmtg(cfg.splitting_ghz) << " GHz (B = " << fmtg(cfg.chain().splitting_b)
            << " rad/ns)\n";
        rep << "bath: T = " << fmtg(cfg.temperature_ghz) << " GHz, R = " << fmtg(cfg.radius_m)
            << " m, I = " << fmtg(cfg.current_a) << " A, rho = " << fmtg(cfg.density_kg_m3)
            << " kg/m3, c = " << fmtg(cfg.speed_m_s) << " m/s, spacing = "
            << fmtg(cfg.spacing_over_r) << " R\n";
        rep << "coupling mode: " << to_string(cfg.coupling_mode) << "\n\n";

        mach << "name=" << cfg.name << "\n";
        mach << "n_sites=" << cfg.n_sites << "\n";
        mach << "coupling_mode=" << to_string(cfg.coupling_mode) << "\n";

        rep << "eigenstates (energy ascending):\n";
        rep << "  idx  label   E/h [GHz]        l        m\n";
        for (int i = 0; i < d; ++i) {
            rep << "  " << i + 1 << "    " << r.state_label(i) << "    "
                << fmtg(radns_to_ghz(r.es.energies(i)), 12) << "    "
                << fmtg(r.es.l_numbers[i]) << "    " << r.es.m_quantum[i] << "\n";
            mach << "energy_ghz_" << r.state_label(i) << "="
                 << detail::fmt17(radns_to_ghz(r.es.energies(i))) << "\n";
            mach << "l_" << r.state_label(i) << "=" << detail::fmt17(r.es.l_numbers[i]) << "\n";
            mach << "m_" << r.state_label(i) << "=" << r.es.m_quantum[i] << "\n";
        }
        mach << "sorted_labels=";
        for (int i = 0; i < d; ++i) mach << (i ? "," : "") << r.state_label(i);
        mach << "\n";

        const auto comps = frequency_components(r.es, ops);
        rep << "\ntransition frequencies (single-site flips):\n";
        int ci = 0;
        for (const auto& c : comps) {
            rep << "  " << fmtg(radns_to_ghz(c.omega), 12) << " GHz:";
            for (const auto& e : c.entries)
                if (e.op == 0)
                    rep << "  " << r.state_label(e.a) << "<->" << r.state_label(e.b);
            rep << "\n";
            mach << "transition_ghz_" << ++ci << "=" << detail::fmt17(radns_to_ghz(c.omega))
                 << "\n";
        }

        if (!r.rates.tags.empty()) {
            rep << "\nsite-pair regimes (omega * tau_jk against " << fmtg(collective_cut)
                << " / " << fmtg(independent_cut) << "):\n";
            for (const auto& t : r.rates.tags) {
                rep << "  (" << t.j << "," << t.k << ") at " << fmtg(radns_to_ghz(t.omega), 6)
                    << " GHz: omega*tau = " << fmtg(t.omega_tau, 6) << " -> "
                    << to_string(t.regime) << "\n";
            }
        }
        mach << "quadrature_fallback=" << (r.rates.quadrature_fallback ? 1 : 0) << "\n";

        // Decoherence table and relaxation matrix.
        rep << "\ndecoherence rates Gamma_bar [1/ns] (upper triangle):\n";
        for (const auto& [la, lb] : detail::label_pairs(d)) {
            const int pa = r.es.reference_position[la - 1];
            const int pb = r.es.reference_position[lb - 1];
            const double gbar = decoherence_rate(r.gen, pa, pb);
            rep << "  psi" << la << ",psi" << lb << ": " << fmtg(gbar, 8) << "\n";
            mach << "gammabar_psi" << la << "_psi" << lb << "=" << detail::fmt17(gbar) << "\n";
        }
        const RMat relax = relaxation_rates(r.es, r.rates);
        rep << "relaxation flows R(to,from) [1/ns], nonzero off-diagonal:\n";
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                if (a == b || relax(a, b) == 0.0) continue;
                rep << "  " << r.state_label(b) << " -> " << r.state_label(a) << ": "
                    << fmtg(relax(a, b), 8) << "\n";
                mach << "relax_" << r.state_label(b) << "_to_" << r.state_label(a) << "="
                     << detail::fmt17(relax(a, b)) << "\n";
            }
        }

        const Network sel = transition_network(r.es, ops);
        RMat rate_w = relax;
        for (int a = 0; a < d; ++a) rate_w(a, a) = 0.0;
        const Network ratenet = network_from_weights(0.5 * (rate_w + rate_w.transpose()), 1e-300);
        auto net_line = [&](const char* tag, const Network& n) {
            rep << tag << ": " << n.edges.size() << " edges, " << n.n_components
                << " components;";
            for (auto [a, b] : n.edges)
                rep << " " << r.state_label(a) << "-" << r.state_label(b);
            rep << "\n";
        };
        rep << "\n";
        net_line("selection-rule network", sel);
        net_line("rate network", ratenet);
        mach << "selection_edges=" << sel.edges.size() << "\n";
        mach << "selection_components=" << sel.n_components << "\n";
        mach << "rate_edges=" << ratenet.edges.size() << "\n";
        mach << "rate_components=" << ratenet.n_components << "\n";

        // Markov sanity: every bath memory scale must sit far below the
        // slowest system response we keep.
        double fastest = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                if (a != b) fastest = std::max(fastest, std::abs(relax(a, b)));
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b)
                fastest = std::max(fastest, decoherence_rate(r.gen, a, b));
        const double tau_pair_max = bath.tau_pair_ns(1, cfg.n_sites);
        const double thermal_time = 1.0 / (two_pi * cfg.temperature_ghz);
        rep << "\nmarkov scales [ns]: tau_ring = " << fmtg(bath.tau_ring_ns())
            << ", max tau_pair = " << fmtg(tau_pair_max) << ", thermal = "
            << fmtg(thermal_time) << "; fastest kept rate = " << fmtg(fastest, 6)
            << " 1/ns (product " << fmtg(fastest * std::max({bath.tau_ring_ns(), tau_pair_max,
                                                             thermal_time}), 6)
            << ")\n";
        mach << "markov_tau_ring_ns=" << detail::fmt17(bath.tau_ring_ns()) << "\n";
        mach << "markov_tau_pair_max_ns=" << detail::fmt17(tau_pair_max) << "\n";
        mach << "markov_thermal_time_ns=" << detail::fmt17(thermal_time) << "\n";
        mach << "markov_fastest_rate=" << detail::fmt17(fastest) << "\n";

        if (with_dynamics) {
            rep << "\nrun: dt = " << fmtg(r.traj.diag.dt_ns) << " ns, " << r.traj.diag.steps
                << " steps, stride " << r.traj.diag.stride << ", " << r.traj.states.size()
                << " stored samples\n";
            rep << "diagnostics: trace drift " << fmtg(r.traj.diag.trace_drift, 6)
                << ", hermiticity " << fmtg(r.traj.diag.hermiticity_defect, 6)
                << ", min eigenvalue " << fmtg(r.traj.diag.min_population_eigenvalue, 6)
                << ", coherence bound " << fmtg(r.traj.diag.coherence_bound, 6)
                << (r.traj.diag.positivity_flag ? "  [positivity flag]" : "") << "\n";
            mach << "dt_ns=" << detail::fmt17(r.traj.diag.dt_ns) << "\n";
            mach << "steps=" << r.traj.diag.steps << "\n";
            mach << "trace_drift=" << detail::fmt17(r.traj.diag.trace_drift) << "\n";
            mach << "hermiticity=" << detail::fmt17(r.traj.diag.hermiticity_defect) << "\n";
            mach << "min_eigenvalue=" << detail::fmt17(r.traj.diag.min_population_eigenvalue)
                 << "\n";
            mach << "coherence_bound=" << detail::fmt17(r.traj.diag.coherence_bound) << "\n";
            mach << "positivity_flag=" << (r.traj.diag.positivity_flag ? 1 : 0) << "\n";

            rep << "stationary populations:";
            for (int label = 1; label <= d; ++label) {
                const int p = r.es.reference_position[label - 1];
                rep << " " << r.state_label(p) << "=" << fmtg(r.stationary(p, p).real(), 8);
                mach << "stationary_" << r.state_label(p) << "="
                     << detail::fmt17(r.stationary(p, p).real()) << "\n";
            }
            rep << "\nfinal state: trace distance to stationary = "
                << fmtg(r.final_td_stationary, 8) << "\n";
            mach << "final_td_stationary=" << detail::fmt17(r.final_td_stationary) << "\n";

            if (cfg.n_sites == 2 && !r.eof.empty()) {
                double emax = 0.0;
                for (const auto& e : r.eof) emax = std::max(emax, e.eof);
                rep << "entanglement of formation: initial " << fmtg(r.eof.front().eof, 8)
                    << ", final " << fmtg(r.eof.back().eof, 8) << ", max " << fmtg(emax, 8)
                    << " (scanned pair " << r.state_label(r.eof_pair_a) << ","
                    << r.state_label(r.eof_pair_d) << ")\n";
                mach << "eof_initial=" << detail::fmt17(r.eof.front().eof) << "\n";
                mach << "eof_final=" << detail::fmt17(r.eof.back().eof) << "\n";
                mach << "eof_max=" << detail::fmt17(emax) << "\n";
                mach << "eof_pair=" << r.state_label(r.eof_pair_a) << ","
                     << r.state_label(r.eof_pair_d) << "\n";
            }
        }

        rep << "\n== machine block ==\n" << mach.str();
        r.report_text = rep.str();
    }

    return r;
}

inline void write_outputs(const RunResult& r, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/config.ini");
        if (!f) throw ConfigError("cannot write to '" + out_dir + "'");
        f << emit_config(r.config);
    }
    if (!r.csv_text.empty()) {
        std::ofstream f(out_dir + "/trajectory.csv");
        f << r.csv_text;
    }
    {
        std::ofstream f(out_dir + "/report.txt");
        f << r.report_text;
    }
}

// ---- parameter sweep ----

inline const std::map<std::string, double ScenarioConfig::*>& sweep_axes() {
    static const std::map<std::string, double ScenarioConfig::*> axes = {
        {"heisenberg_GHz", &ScenarioConfig::heisenberg_ghz},
        {"splitting_GHz", &ScenarioConfig::splitting_ghz},
        {"temperature_GHz", &ScenarioConfig::temperature_ghz},
        {"radius_m", &ScenarioConfig::radius_m},
        {"current_A", &ScenarioConfig::current_a},
        {"density_kg_m3", &ScenarioConfig::density_kg_m3},
        {"speed_m_s", &ScenarioConfig::speed_m_s},
        {"spacing_over_R", &ScenarioConfig::spacing_over_r},
        {"t_max_ns", &ScenarioConfig::t_max_ns},
    };
    return axes;
}

struct SweepRun {
    double value = 0.0;
    std::string dir;
    bool ok = false;
    bool physics_error = false;
    std::string message;
    // quick metrics
    double final_td = std::numeric_limits<double>::quiet_NaN();
    double eof_final = std::numeric_limits<double>::quiet_NaN();
    int rate_edges = -1;
    int rate_components = -1;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepRun> runs;
    std::string summary_csv;
    bool all_ok() const {
        return std::all_of(runs.begin(), runs.end(), [](const SweepRun& r) { return r.ok; });
    }
    bool any_physics_error() const {
        return std::any_of(runs.begin(), runs.end(),
                           [](const SweepRun& r) { return r.physics_error; });
    }
};

inline SweepResult sweep(const ScenarioConfig& base, const std::string& axis,
                         const std::vector<double>& values, const std::string& out_root) {
    const auto& axes = sweep_axes();
    const auto it = axes.find(axis);
    if (it == axes.end()) {
        std::string known;
        for (const auto& [k, v] : axes) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("axis '" + axis + "' is not sweepable (choose one of: " + known + ")");
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    double ScenarioConfig::*member = it->second;

    std::vector<std::future<SweepRun>> futures;
    futures.reserve(values.size());
    for (double v : values) {
        futures.push_back(std::async(std::launch::async, [&, v]() {
            SweepRun run;
            run.value = v;
            run.dir = out_root + "/" + axis + "=" + detail::fmtg(v, 10);
            try {
                ScenarioConfig cfg = base;
                cfg.*member = v;
                cfg.name = base.name + "@" + axis + "=" + detail::fmtg(v, 10);
                RunResult res = run_scenario(cfg);
                write_outputs(res, run.dir);
                run.ok = true;
                run.final_td = res.final_td_stationary;
                if (!res.eof.empty()) run.eof_final = res.eof.back().eof;
                RMat w = relaxation_rates(res.es, res.rates);
                for (int a = 0; a < res.es.dim; ++a) w(a, a) = 0.0;
                const Network net = network_from_weights(0.5 * (w + w.transpose()), 1e-300);
                run.rate_edges = static_cast<int>(net.edges.size());
                run.rate_components = net.n_components;
            } catch (const PhysicsError& e) {
                run.physics_error = true;
                run.message = e.what();
            } catch (const Error& e) {
                run.message = e.what();
            }
            return run;
        }));
    }

    SweepResult out;
    out.axis = axis;
    std::ostringstream csv;
    csv << axis << ",status,rate_edges,rate_components,final_td_stationary,eof_final,dir\n";
    for (auto& f : futures) {
        SweepRun run = f.get();
        csv << detail::fmt17(run.value) << ","
            << (run.ok ? "ok" : (run.physics_error ? "physics_error" : "error")) << ","
            << run.rate_edges << "," << run.rate_components << ","
            << detail::fmt17(run.final_td) << "," << detail::fmt17(run.eof_final) << ","
            << run.dir << "\n";
        out.runs.push_back(std::move(run));
    }
    out.summary_csv = csv.str();

    namespace fs = std::filesystem;
    fs::create_directories(out_root);
    std::ofstream f(out_root + "/sweep_summary.csv");
    f << out.summary_csv;
    return out;
}

}  // namespace chainsim
