#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbfed/forcing.hpp"
#include "cbfed/integrate.hpp"
#include "cbfed/params.hpp"
#include "cbfed/periodic.hpp"

namespace cbfed {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ForcingConfig {
    bool is_random = false;
    // random band-limited generator
    std::uint64_t seed = 1;
    double amplitude = 0.0;
    int k2_max = 2;
    int harmonic_cutoff = 1;
    // explicit modal profiles
    std::vector<ModalProfile> profiles;

    ForcingSpec materialize(GridPtr grid, double period) const {
        if (is_random)
            return random_forcing(grid, seed, amplitude, k2_max, harmonic_cutoff, period);
        ForcingSpec spec;
        spec.profiles = profiles;
        return spec;
    }
};

struct SolverConfig {
    enum class Mode { periodic, linear, picard, verify, sweep };
    Mode mode = Mode::periodic;
    double tol = 1e-9;
    int max_iter = 50;
    SolveOptions::Accel accel = SolveOptions::Accel::none;
    int anderson_window = 3;
    int temporal_harmonics = 0;
    int linear_samples = 256;

    SolveOptions options() const {
        SolveOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.accel = accel;
        o.anderson_window = anderson_window;
        o.temporal_harmonics = temporal_harmonics;
        return o;
    }
};

struct SweepConfig {
    std::vector<double> beta{1.0};
    std::vector<double> gamma{0.0};
    std::vector<double> amplitude{0.1};
};

struct RunConfig {
    PhysicalParams params;
    int n_per_axis = 32;
    double dealias_fraction = 2.0 / 3.0;
    IntegratorConfig integrator;
    ForcingConfig forcing;
    SolverConfig solver;
    SweepConfig sweep;
    std::string output_dir = "out";

    GridPtr make_grid() const {
        return std::make_shared<Grid>(params.dim, n_per_axis, params.box_length, dealias_fraction);
    }

    void validate() const {
        params.validate();
        auto grid = make_grid();
        integrator.validate(*grid);
        ForcingSpec spec;
        spec.profiles = forcing.profiles;
        spec.validate(*grid);
    }
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object())
        throw ConfigError(path + ": expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(path + "." + item.key() + ": unknown key");
}

inline double get_num(const json& j, const std::string& path, const char* key, double dflt) {
    if (!j.contains(key))
        return dflt;
    const auto& v = j.at(key);
    if (!v.is_number())
        throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

inline int get_int(const json& j, const std::string& path, const char* key, int dflt) {
    if (!j.contains(key))
        return dflt;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<int>();
}

inline std::string get_str(const json& j, const std::string& path, const char* key,
                           const std::string& dflt) {
    if (!j.contains(key))
        return dflt;
    const auto& v = j.at(key);
    if (!v.is_string())
        throw ConfigError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline Complex get_complex(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path + ": expected [re, im]");
    return Complex(v[0].get<double>(), v[1].get<double>());
}

} // namespace detail

inline RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    detail::reject_unknown(root, "config",
                           {"params", "grid", "integrator", "forcing", "solver", "sweep", "output"});
    if (!root.contains("params") || !root.contains("grid"))
        throw ConfigError("config: 'params' and 'grid' sections are required");

    RunConfig cfg;
    {
        const auto& p = root.at("params");
        detail::reject_unknown(p, "params",
                               {"mu", "alpha", "beta", "gamma", "r", "q", "period", "dim",
                                "box_length"});
        cfg.params.mu = detail::get_num(p, "params", "mu", cfg.params.mu);
        cfg.params.alpha = detail::get_num(p, "params", "alpha", cfg.params.alpha);
        cfg.params.beta = detail::get_num(p, "params", "beta", cfg.params.beta);
        cfg.params.gamma = detail::get_num(p, "params", "gamma", cfg.params.gamma);
        cfg.params.r = detail::get_num(p, "params", "r", cfg.params.r);
        cfg.params.q = detail::get_num(p, "params", "q", cfg.params.q);
        cfg.params.period = detail::get_num(p, "params", "period", cfg.params.period);
        cfg.params.dim = detail::get_int(p, "params", "dim", cfg.params.dim);
        cfg.params.box_length = detail::get_num(p, "params", "box_length", cfg.params.box_length);
    }
    {
        const auto& g = root.at("grid");
        detail::reject_unknown(g, "grid", {"n_per_axis", "dealias_fraction"});
        cfg.n_per_axis = detail::get_int(g, "grid", "n_per_axis", cfg.n_per_axis);
        cfg.dealias_fraction = detail::get_num(g, "grid", "dealias_fraction", cfg.dealias_fraction);
    }
    // default Galerkin level: the full dealiased band of the grid
    cfg.integrator.galerkin_cutoff = 0;
    if (root.contains("integrator")) {
        const auto& it = root.at("integrator");
        detail::reject_unknown(it, "integrator",
                               {"n_steps", "scheme", "galerkin_cutoff", "state_cadence",
                                "diag_stride", "padding_factor", "power_padding_factor"});
        cfg.integrator.n_steps = detail::get_int(it, "integrator", "n_steps", cfg.integrator.n_steps);
        std::string scheme = detail::get_str(it, "integrator", "scheme", "imex_if2");
        if (scheme == "imex_if2")
            cfg.integrator.scheme = IntegratorConfig::Scheme::imex_if2;
        else if (scheme == "oracle_rk4")
            cfg.integrator.scheme = IntegratorConfig::Scheme::oracle_rk4;
        else
            throw ConfigError("integrator.scheme: must be 'imex_if2' or 'oracle_rk4'");
        cfg.integrator.galerkin_cutoff =
            detail::get_int(it, "integrator", "galerkin_cutoff", 0);
        cfg.integrator.state_cadence =
            detail::get_int(it, "integrator", "state_cadence", cfg.integrator.state_cadence);
        cfg.integrator.diag_stride =
            detail::get_int(it, "integrator", "diag_stride", cfg.integrator.diag_stride);
        cfg.integrator.nonlinear.padding_factor = detail::get_num(
            it, "integrator", "padding_factor", cfg.integrator.nonlinear.padding_factor);
        cfg.integrator.nonlinear.power_padding_factor =
            detail::get_num(it, "integrator", "power_padding_factor",
                            cfg.integrator.nonlinear.power_padding_factor);
    }
    if (cfg.integrator.galerkin_cutoff == 0) {
        int kmax = static_cast<int>(std::floor(cfg.dealias_fraction * (cfg.n_per_axis / 2.0)));
        if (kmax >= cfg.n_per_axis / 2)
            kmax = cfg.n_per_axis / 2 - 1;
        cfg.integrator.galerkin_cutoff = kmax * kmax; // radial ball inside the band
    }
    if (root.contains("forcing")) {
        const auto& f = root.at("forcing");
        detail::reject_unknown(f, "forcing", {"profiles", "random"});
        if (f.contains("random") && f.contains("profiles"))
            throw ConfigError("forcing: give either 'profiles' or 'random', not both");
        if (f.contains("random")) {
            const auto& r = f.at("random");
            detail::reject_unknown(r, "forcing.random",
                                   {"seed", "amplitude", "k2_max", "harmonic_cutoff"});
            cfg.forcing.is_random = true;
            if (r.contains("seed")) {
                if (!r.at("seed").is_number_unsigned() && !r.at("seed").is_number_integer())
                    throw ConfigError("forcing.random.seed: expected an integer");
                cfg.forcing.seed = r.at("seed").get<std::uint64_t>();
            }
            cfg.forcing.amplitude = detail::get_num(r, "forcing.random", "amplitude", 0.1);
            cfg.forcing.k2_max = detail::get_int(r, "forcing.random", "k2_max", 2);
            cfg.forcing.harmonic_cutoff = detail::get_int(r, "forcing.random", "harmonic_cutoff", 1);
        } else if (f.contains("profiles")) {
            const auto& arr = f.at("profiles");
            if (!arr.is_array())
                throw ConfigError("forcing.profiles: expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                std::string path = "forcing.profiles[" + std::to_string(i) + "]";
                const auto& e = arr[i];
                detail::reject_unknown(e, path, {"k", "amplitude", "harmonics"});
                ModalProfile prof;
                if (!e.contains("k") || !e.at("k").is_array())
                    throw ConfigError(path + ".k: expected an array of integers");
                const auto& karr = e.at("k");
                if (karr.size() < 2 || karr.size() > 3)
                    throw ConfigError(path + ".k: expected 2 or 3 entries");
                for (std::size_t d = 0; d < karr.size(); ++d) {
                    if (!karr[d].is_number_integer())
                        throw ConfigError(path + ".k: expected integers");
                    prof.k[d] = karr[d].get<int>();
                }
                if (!e.contains("amplitude") || !e.at("amplitude").is_array())
                    throw ConfigError(path + ".amplitude: expected an array of [re, im] pairs");
                const auto& aarr = e.at("amplitude");
                if (aarr.size() < 2 || aarr.size() > 3)
                    throw ConfigError(path + ".amplitude: expected 2 or 3 entries");
                for (std::size_t d = 0; d < aarr.size(); ++d)
                    prof.amplitude[d] =
                        detail::get_complex(aarr[d], path + ".amplitude[" + std::to_string(d) + "]");
                prof.temporal = {Complex(1.0, 0.0)};
                if (e.contains("harmonics")) {
                    const auto& harr = e.at("harmonics");
                    if (!harr.is_array())
                        throw ConfigError(path + ".harmonics: expected an array");
                    int hmax = 0;
                    std::vector<std::pair<int, Complex>> entries;
                    for (std::size_t hI = 0; hI < harr.size(); ++hI) {
                        const auto& he = harr[hI];
                        std::string hpath = path + ".harmonics[" + std::to_string(hI) + "]";
                        if (!he.is_array() || he.size() != 3 || !he[0].is_number_integer())
                            throw ConfigError(hpath + ": expected [h, re, im]");
                        int h = he[0].get<int>();
                        if (h < 0)
                            throw ConfigError(hpath + ": harmonic index must be >= 0");
                        entries.emplace_back(h, Complex(he[1].get<double>(), he[2].get<double>()));
                        hmax = std::max(hmax, h);
                    }
                    prof.temporal.assign(static_cast<std::size_t>(hmax) + 1, Complex(0, 0));
                    for (const auto& [h, c] : entries)
                        prof.temporal[static_cast<std::size_t>(h)] += c;
                    if (std::abs(prof.temporal[0].imag()) > 0.0)
                        throw ConfigError(path + ".harmonics: h=0 coefficient must be real");
                }
                cfg.forcing.profiles.push_back(prof);
            }
        }
    }
    if (root.contains("solver")) {
        const auto& s = root.at("solver");
        detail::reject_unknown(s, "solver",
                               {"mode", "tol", "max_iter", "acceleration", "anderson_window",
                                "temporal_harmonics", "linear_samples"});
        std::string mode = detail::get_str(s, "solver", "mode", "periodic");
        if (mode == "periodic")
            cfg.solver.mode = SolverConfig::Mode::periodic;
        else if (mode == "linear")
            cfg.solver.mode = SolverConfig::Mode::linear;
        else if (mode == "picard")
            cfg.solver.mode = SolverConfig::Mode::picard;
        else if (mode == "verify")
            cfg.solver.mode = SolverConfig::Mode::verify;
        else if (mode == "sweep")
            cfg.solver.mode = SolverConfig::Mode::sweep;
        else
            throw ConfigError("solver.mode: must be periodic|linear|picard|verify|sweep");
        cfg.solver.tol = detail::get_num(s, "solver", "tol", cfg.solver.tol);
        cfg.solver.max_iter = detail::get_int(s, "solver", "max_iter", cfg.solver.max_iter);
        std::string accel = detail::get_str(s, "solver", "acceleration", "none");
        if (accel == "none")
            cfg.solver.accel = SolveOptions::Accel::none;
        else if (accel == "anderson")
            cfg.solver.accel = SolveOptions::Accel::anderson;
        else
            throw ConfigError("solver.acceleration: must be 'none' or 'anderson'");
        cfg.solver.anderson_window =
            detail::get_int(s, "solver", "anderson_window", cfg.solver.anderson_window);
        cfg.solver.temporal_harmonics =
            detail::get_int(s, "solver", "temporal_harmonics", cfg.solver.temporal_harmonics);
        cfg.solver.linear_samples =
            detail::get_int(s, "solver", "linear_samples", cfg.solver.linear_samples);
    }
    if (root.contains("sweep")) {
        const auto& s = root.at("sweep");
        detail::reject_unknown(s, "sweep", {"beta", "gamma", "amplitude"});
        auto read_list = [&](const char* key, std::vector<double>& out) {
            if (!s.contains(key))
                return;
            const auto& arr = s.at(key);
            if (!arr.is_array() || arr.empty())
                throw ConfigError(std::string("sweep.") + key + ": expected a nonempty array");
            out.clear();
            for (const auto& v : arr) {
                if (!v.is_number())
                    throw ConfigError(std::string("sweep.") + key + ": expected numbers");
                out.push_back(v.get<double>());
            }
        };
        read_list("beta", cfg.sweep.beta);
        read_list("gamma", cfg.sweep.gamma);
        read_list("amplitude", cfg.sweep.amplitude);
    }
    if (root.contains("output")) {
        const auto& o = root.at("output");
        detail::reject_unknown(o, "output", {"directory"});
        cfg.output_dir = detail::get_str(o, "output", "directory", cfg.output_dir);
    }
    cfg.validate();
    return cfg;
}

/// Canonical full-document echo; emit(parse(doc)) re-parses to an equal config.
inline json config_to_json(const RunConfig& cfg) {
    json root;
    root["params"] = {{"mu", cfg.params.mu},       {"alpha", cfg.params.alpha},
                      {"beta", cfg.params.beta},   {"gamma", cfg.params.gamma},
                      {"r", cfg.params.r},         {"q", cfg.params.q},
                      {"period", cfg.params.period}, {"dim", cfg.params.dim},
                      {"box_length", cfg.params.box_length}};
    root["grid"] = {{"n_per_axis", cfg.n_per_axis}, {"dealias_fraction", cfg.dealias_fraction}};
    root["integrator"] = {
        {"n_steps", cfg.integrator.n_steps},
        {"scheme", cfg.integrator.scheme == IntegratorConfig::Scheme::imex_if2 ? "imex_if2"
                                                                               : "oracle_rk4"},
        {"galerkin_cutoff", cfg.integrator.galerkin_cutoff},
        {"state_cadence", cfg.integrator.state_cadence},
        {"diag_stride", cfg.integrator.diag_stride},
        {"padding_factor", cfg.integrator.nonlinear.padding_factor},
        {"power_padding_factor", cfg.integrator.nonlinear.power_padding_factor}};
    if (cfg.forcing.is_random) {
        root["forcing"]["random"] = {{"seed", cfg.forcing.seed},
                                     {"amplitude", cfg.forcing.amplitude},
                                     {"k2_max", cfg.forcing.k2_max},
                                     {"harmonic_cutoff", cfg.forcing.harmonic_cutoff}};
    } else if (!cfg.forcing.profiles.empty()) {
        json arr = json::array();
        for (const auto& p : cfg.forcing.profiles) {
            json e;
            json karr = json::array();
            for (int d = 0; d < cfg.params.dim; ++d)
                karr.push_back(p.k[d]);
            e["k"] = karr;
            json aarr = json::array();
            for (int d = 0; d < cfg.params.dim; ++d)
                aarr.push_back({p.amplitude[d].real(), p.amplitude[d].imag()});
            e["amplitude"] = aarr;
            json harr = json::array();
            for (std::size_t h = 0; h < p.temporal.size(); ++h)
                if (p.temporal[h] != Complex(0, 0))
                    harr.push_back({static_cast<int>(h), p.temporal[h].real(), p.temporal[h].imag()});
            e["harmonics"] = harr;
            arr.push_back(e);
        }
        root["forcing"]["profiles"] = arr;
    }
    const char* mode = "periodic";
    switch (cfg.solver.mode) {
    case SolverConfig::Mode::periodic: mode = "periodic"; break;
    case SolverConfig::Mode::linear: mode = "linear"; break;
    case SolverConfig::Mode::picard: mode = "picard"; break;
    case SolverConfig::Mode::verify: mode = "verify"; break;
    case SolverConfig::Mode::sweep: mode = "sweep"; break;
    }
    root["solver"] = {{"mode", mode},
                      {"tol", cfg.solver.tol},
                      {"max_iter", cfg.solver.max_iter},
                      {"acceleration",
                       cfg.solver.accel == SolveOptions::Accel::anderson ? "anderson" : "none"},
                      {"anderson_window", cfg.solver.anderson_window},
                      {"temporal_harmonics", cfg.solver.temporal_harmonics},
                      {"linear_samples", cfg.solver.linear_samples}};
    if (cfg.solver.mode == SolverConfig::Mode::sweep)
        root["sweep"] = {{"beta", cfg.sweep.beta},
                         {"gamma", cfg.sweep.gamma},
                         {"amplitude", cfg.sweep.amplitude}};
    root["output"] = {{"directory", cfg.output_dir}};
    return root;
}

inline std::string emit_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2); }

} // namespace cbfed
