#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbfed/forcing.hpp"
#include "cbfed/nonlinear.hpp"
#include "cbfed/params.hpp"
#include "cbfed/spectral.hpp"

namespace cbfed {

struct BlowupError : std::runtime_error {
    BlowupError(double time, double norm)
        : std::runtime_error("integrator blow-up at t=" + std::to_string(time) +
                             ", ||v||_H=" + std::to_string(norm)),
          t(time), h_norm(norm) {}
    double t;
    double h_norm;
};

struct IntegratorConfig {
    enum class Scheme { imex_if2, oracle_rk4 };

    int n_steps = 1024;
    Scheme scheme = Scheme::imex_if2;
    int galerkin_cutoff = 0;     ///< ModeSet cutoff m (integer |k|^2 units)
    int state_cadence = 1;       ///< thin stored states to every n-th step
    int diag_stride = 1;         ///< diagnostics sampling stride
    NonlinearEvalConfig nonlinear;

    ModeSet mode_set() const { return ModeSet{galerkin_cutoff}; }

    void validate(const Grid& grid) const {
        if (n_steps < 16)
            throw std::invalid_argument("integrator: n_steps must be >= 16");
        if (state_cadence < 1 || diag_stride < 1)
            throw std::invalid_argument("integrator: cadence values must be >= 1");
        mode_set().validate(grid);
        nonlinear.validate();
    }
};

struct DiagnosticsRow {
    double time;
    double h;      ///< ||v||_H
    double v;      ///< ||v||_V
    double lr;     ///< ||v||_{L^{r+1}}
    double lq;     ///< ||v||_{L^{q+1}}
    double f_pair; ///< <f(t), v>
};

/// Time-sampled states plus per-step scalar diagnostics over one period.
struct Trajectory {
    std::vector<double> times;          ///< state sample instants
    std::vector<SpectralField> states;  ///< thinned by state_cadence
    std::vector<DiagnosticsRow> diag;   ///< every diag_stride steps
    double period = 0.0;
    double dt = 0.0;

    const SpectralField& final_state() const {
        if (states.empty())
            throw std::logic_error("trajectory: no states recorded");
        return states.back();
    }
};

namespace detail {

/// P(beta |u|^{r-1}u + gamma |u|^{q-1}u) in a single padded sweep.
inline SpectralField damping_sum(const SpectralField& u, const PhysicalParams& p,
                                 const NonlinearEvalConfig& cfg) {
    const Grid& g = u.grid();
    int pad_n = cfg.power_pad_n(g);
    auto phys = padded_physical(u, pad_n);
    std::size_t ptotal = phys[0].size();
    int dim = g.dim();
    for (std::size_t i = 0; i < ptotal; ++i) {
        double mag2 = 0.0;
        for (int c = 0; c < dim; ++c)
            mag2 += phys[c][i] * phys[c][i];
        double fr = 0.0, fq = 0.0;
        if (p.beta != 0.0)
            fr = p.r == 1.0 ? 1.0 : (mag2 == 0.0 ? 0.0 : std::pow(mag2, 0.5 * (p.r - 1.0)));
        if (p.gamma != 0.0)
            fq = p.q == 1.0 ? 1.0 : (mag2 == 0.0 ? 0.0 : std::pow(mag2, 0.5 * (p.q - 1.0)));
        double factor = p.beta * fr + p.gamma * fq;
        for (int c = 0; c < dim; ++c)
            phys[c][i] *= factor;
    }
    return leray_project(padded_spectral(u.grid_ptr(), phys, pad_n));
}

/// N(v) = -P_m[B(v) + beta C(v) + gamma Ct(v)]; the explicit part of the
/// integrating-factor scheme (forcing and the linear part handled exactly).
inline SpectralField explicit_rhs(const SpectralField& v, const PhysicalParams& p,
                                  const ModeSet& m, const NonlinearEvalConfig& cfg) {
    SpectralField acc = bilinear_map(v, v, cfg);
    if (p.beta != 0.0 || p.gamma != 0.0)
        acc += damping_sum(v, p, cfg);
    acc *= -1.0;
    auto out = galerkin_truncate(std::move(acc), m);
    out.set_divergence_free(true);
    return out;
}

inline std::pair<double, double> lp_pair(const SpectralField& u, double p1, double p2) {
    const Grid& g = u.grid();
    int pad_n = 2 * g.n();
    auto mag = pointwise_magnitude(u, pad_n);
    return {lp_norm_from_magnitude(mag, p1, g.box_length(), g.dim(), pad_n),
            lp_norm_from_magnitude(mag, p2, g.box_length(), g.dim(), pad_n)};
}

inline DiagnosticsRow diag_row(const SpectralField& v, GridPtr grid, const PhysicalParams& p,
                               const ForcingSpec& f, double t) {
    DiagnosticsRow row;
    row.time = t;
    row.h = h_norm(v);
    row.v = v_norm(v);
    auto lp = lp_pair(v, p.r + 1.0, p.q + 1.0);
    row.lr = lp.first;
    row.lq = lp.second;
    row.f_pair = f.empty() ? 0.0 : dot_h(build_forcing(grid, f, p.period, t), v);
    return row;
}

/// Per-mode exact step response of the forcing through the linear factor:
/// integral_0^dt e^{-w (dt-s)} f_k(t_n + s) ds, evaluated per profile and
/// temporal harmonic in closed form.
struct ForcingStepper {
    struct Entry {
        std::size_t profile;
        double omega;
        std::vector<Complex> phi; ///< phi_h for h = 0..H
    };

    GridPtr grid;
    const ForcingSpec* spec = nullptr;
    double period = 0.0, dt = 0.0;
    std::vector<Entry> entries;

    ForcingStepper(GridPtr g, const ForcingSpec& f, const PhysicalParams& p, double step)
        : grid(std::move(g)), spec(&f), period(p.period), dt(step) {
        const Grid& gr = *grid;
        for (std::size_t i = 0; i < f.profiles.size(); ++i) {
            const auto& prof = f.profiles[i];
            int k2 = prof.k[0] * prof.k[0] + prof.k[1] * prof.k[1] + prof.k[2] * prof.k[2];
            Entry e;
            e.profile = i;
            e.omega = p.mu * gr.lambda_scale() * k2 + p.alpha;
            int hmax = prof.max_harmonic();
            e.phi.resize(static_cast<std::size_t>(hmax) + 1);
            for (int h = 0; h <= hmax; ++h) {
                double Om = kTwoPi * h / period;
                Complex denom(e.omega, Om);
                Complex num = std::exp(Complex(0.0, Om * dt)) - std::exp(Complex(-e.omega * dt, 0.0));
                e.phi[h] = num / denom;
            }
            entries.push_back(std::move(e));
        }
    }

    /// Accumulate the step response starting at time t into `out`.
    void add_step_response(SpectralField& out, double t) const {
        for (const auto& e : entries) {
            const auto& prof = spec->profiles[e.profile];
            double tr = std::remainder(t, period);
            double base = kTwoPi * tr / period;
            // s is real: conjugate harmonic pairs recombine
            double s = prof.temporal[0].real() * e.phi[0].real();
            for (std::size_t h = 1; h < prof.temporal.size(); ++h) {
                Complex rot(std::cos(base * h), std::sin(base * h));
                s += 2.0 * (prof.temporal[h] * rot * e.phi[h]).real();
            }
            std::array<Complex, 3> amp;
            for (int c = 0; c < 3; ++c)
                amp[c] = prof.amplitude[c] * s;
            out.add_mode(prof.k, amp);
        }
    }
};

} // namespace detail

/// Full Galerkin right side  P_m[f(t) - B(v) - alpha v - beta C(v)
/// - gamma Ct(v)] - mu A v.  Used directly by the oracle integrator and for
/// term-by-term validation; the production scheme splits off the stiff
/// linear part.
inline SpectralField rhs_eval(const SpectralField& v, double t, const PhysicalParams& params,
                              const ForcingSpec& f, const ModeSet& m,
                              const NonlinearEvalConfig& cfg = {}) {
    if (!supported_in(v, m))
        throw std::invalid_argument("rhs_eval: state has coefficients outside the mode set");
    GridPtr grid = v.grid_ptr();
    SpectralField acc = f.empty() ? SpectralField::zero(grid)
                                  : build_forcing(grid, f, params.period, t);
    acc -= bilinear_map(v, v, cfg);
    if (params.beta != 0.0 || params.gamma != 0.0)
        acc -= detail::damping_sum(v, params, cfg);
    acc = galerkin_truncate(std::move(acc), m);
    // linear part, diagonal in the eigenbasis
    const Grid& g = *grid;
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        double w = params.mu * g.lambda(idx) + params.alpha;
        for (int c = 0; c < g.dim(); ++c)
            acc.set_coeff(c, idx, acc.coeff(c, idx) - w * v.coeff(c, idx));
    }
    acc.set_divergence_free(true);
    return acc;
}

/// One period of the Galerkin flow with the exponential integrating-factor
/// scheme: the linear factor e^{-(mu lambda_k + alpha) dt} and the forcing
/// convolution are applied exactly per mode; B, C, Ct advance with a
/// two-stage explicit (Heun) rule.
inline Trajectory integrate_period(const SpectralField& v0, const PhysicalParams& params,
                                   const ForcingSpec& f, const IntegratorConfig& cfg);

/// Dense classical RK4 over the same ODE; validation only, no
/// integrating-factor shortcuts.
inline Trajectory oracle_integrate(const SpectralField& v0, const PhysicalParams& params,
                                   const ForcingSpec& f, const ModeSet& m, double dt,
                                   const NonlinearEvalConfig& nlcfg = {}, int diag_stride = 1,
                                   int state_cadence = 1) {
    params.validate();
    GridPtr grid = v0.grid_ptr();
    m.validate(*grid);
    f.validate(*grid);
    if (m.count_retained(*grid) > 500)
        throw std::invalid_argument("oracle_integrate: more than 500 retained modes");
    if (!supported_in(v0, m, 1e-14 * (1.0 + h_norm(v0))))
        throw std::invalid_argument("oracle_integrate: v0 not supported in the mode set");
    double T = params.period;
    int n = static_cast<int>(std::llround(T / dt));
    if (n < 1)
        throw std::invalid_argument("oracle_integrate: dt exceeds the period");
    dt = T / n;

    Trajectory traj;
    traj.period = T;
    traj.dt = dt;
    double guard = 1e6 * std::max(1e-12, std::max(h_norm(v0), 1.0));

    SpectralField v = galerkin_truncate(v0, m);
    v.set_divergence_free(true);
    auto record = [&](int step, double t, const SpectralField& state) {
        if (step % diag_stride == 0 || step == n)
            traj.diag.push_back(detail::diag_row(state, grid, params, f, t));
        if (step % state_cadence == 0 || step == n) {
            traj.times.push_back(t);
            traj.states.push_back(state);
        }
    };
    record(0, 0.0, v);
    for (int i = 0; i < n; ++i) {
        double t = T * i / n;
        auto k1 = rhs_eval(v, t, params, f, m, nlcfg);
        auto k2 = rhs_eval(v + 0.5 * dt * k1, t + 0.5 * dt, params, f, m, nlcfg);
        auto k3 = rhs_eval(v + 0.5 * dt * k2, t + 0.5 * dt, params, f, m, nlcfg);
        auto k4 = rhs_eval(v + dt * k3, t + dt, params, f, m, nlcfg);
        SpectralField incr = k1;
        incr += 2.0 * k2;
        incr += 2.0 * k3;
        incr += k4;
        v += (dt / 6.0) * incr;
        double tn = T * (i + 1) / n;
        if (h_norm(v) > guard)
            throw BlowupError(tn, h_norm(v));
        record(i + 1, tn, v);
    }
    return traj;
}

inline Trajectory integrate_period(const SpectralField& v0, const PhysicalParams& params,
                                   const ForcingSpec& f, const IntegratorConfig& cfg) {
    params.validate();
    GridPtr grid = v0.grid_ptr();
    cfg.validate(*grid);
    f.validate(*grid);
    ModeSet m = cfg.mode_set();
    if (!supported_in(v0, m, 1e-14 * (1.0 + h_norm(v0))))
        throw std::invalid_argument("integrate_period: v0 not supported in the mode set");
    if (cfg.scheme == IntegratorConfig::Scheme::oracle_rk4)
        return oracle_integrate(v0, params, f, m, params.period / cfg.n_steps, cfg.nonlinear,
                                cfg.diag_stride, cfg.state_cadence);

    const Grid& g = *grid;
    double T = params.period;
    int n = cfg.n_steps;
    double dt = T / n;

    ForcingSpec fproj = f;
    fproj.project_amplitudes();

    // per-mode linear decay over one step
    std::vector<double> decay(g.total());
    for (std::size_t idx = 0; idx < g.total(); ++idx)
        decay[idx] = std::exp(-(params.mu * g.lambda(idx) + params.alpha) * dt);

    detail::ForcingStepper fstep(grid, fproj, params, dt);

    Trajectory traj;
    traj.period = T;
    traj.dt = dt;
    double guard = 1e6 * std::max(1e-12, std::max(h_norm(v0), 1.0));

    SpectralField v = galerkin_truncate(v0, m);
    v.set_divergence_free(true);
    auto record = [&](int step, double t, const SpectralField& state) {
        if (step % cfg.diag_stride == 0 || step == n)
            traj.diag.push_back(detail::diag_row(state, grid, params, fproj, t));
        if (step % cfg.state_cadence == 0 || step == n) {
            traj.times.push_back(t);
            traj.states.push_back(state);
        }
    };
    record(0, 0.0, v);

    auto scale_modes = [&](SpectralField& field) {
        for (int c = 0; c < g.dim(); ++c) {
            auto& comp = field.component(c);
            for (std::size_t idx = 0; idx < comp.size(); ++idx)
                comp[idx] *= decay[idx];
        }
    };

    for (int i = 0; i < n; ++i) {
        double t = T * i / n;
        SpectralField n0 = detail::explicit_rhs(v, params, m, cfg.nonlinear);
        SpectralField forced(grid);
        fstep.add_step_response(forced, t);
        forced = galerkin_truncate(std::move(forced), m);
        forced.set_divergence_free(true);

        // predictor: v~ = e^{-w dt} (v + dt N(v)) + F
        SpectralField pred = v + dt * n0;
        scale_modes(pred);
        pred += forced;
        pred.set_divergence_free(true);

        SpectralField n1 = detail::explicit_rhs(pred, params, m, cfg.nonlinear);

        // corrector: v' = e^{-w dt} (v + dt/2 N(v)) + F + dt/2 N(v~)
        SpectralField next = v + (0.5 * dt) * n0;
        scale_modes(next);
        next += forced;
        next += (0.5 * dt) * n1;
        next.set_divergence_free(true);

        v = std::move(next);
        double tn = T * (i + 1) / n;
        double hn = h_norm(v);
        if (hn > guard)
            throw BlowupError(tn, hn);
        record(i + 1, tn, v);
    }
    return traj;
}

/// Poincare (period) map T_m(v0) = v(T): pure function of v0 for fixed data.
inline SpectralField poincare_map(const SpectralField& v0, const PhysicalParams& params,
                                  const ForcingSpec& f, const IntegratorConfig& cfg) {
    IntegratorConfig slim = cfg;
    slim.state_cadence = cfg.n_steps; // endpoints only
    slim.diag_stride = cfg.n_steps;
    return integrate_period(v0, params, f, slim).final_state();
}

} // namespace cbfed
