#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbfed/analysis.hpp"
#include "cbfed/forcing.hpp"
#include "cbfed/integrate.hpp"

namespace cbfed {

struct SolveOptions {
    double tol = 1e-9;
    int max_iter = 50;
    enum class Accel { none, anderson } accel = Accel::none;
    int anderson_window = 3;
    int temporal_harmonics = 0; ///< Phi-iteration cutoff H; 0 means n_steps/4

    void validate() const {
        if (!(tol > 0.0))
            throw std::invalid_argument("solve: tol must be positive");
        if (max_iter < 1)
            throw std::invalid_argument("solve: max_iter must be >= 1");
        if (accel == Accel::anderson && anderson_window < 1)
            throw std::invalid_argument("solve: anderson window must be >= 1");
    }
};

struct PeriodicSolveReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;      ///< ||v^n - T(v^n)||_H per iterate
    std::vector<double> empirical_contraction; ///< consecutive residual ratios
    double fitted_contraction = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> predicted_rate;      ///< e^{-L T} for the best certified L
    UniquenessReport uniqueness;
    std::optional<SpectralField> final_state;  ///< periodic initial condition v(0)
    std::optional<Trajectory> orbit;           ///< converged orbit over [0,T]
    bool accelerated = false;                  ///< Anderson mixing was active
    bool contraction_certified = false;        ///< empirical factor < 1 observed
    double invariant_radius = 0.0;             ///< R, when beta > 0
    bool initial_outside_ball = false;
    double temporal_truncation = 0.0;          ///< Phi route harmonic-drop diagnostic
    std::string note;
};

/// Least-squares per-iteration ratio from a residual history.
inline double contraction_estimate(const std::vector<double>& residuals) {
    if (residuals.size() < 3)
        throw std::invalid_argument("contraction_estimate: need at least 3 residuals");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        if (residuals[i] > 0.0 && std::isfinite(residuals[i])) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(residuals[i]));
        }
    }
    if (xs.size() < 2)
        return 0.0; // residuals identically ~0: immediate convergence
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::exp(slope);
}

/// Invariant-ball radius of the Poincare map:
///   R^2 = [ (1/mu) int_0^T e^{-(lambda1 mu + alpha)(T-t)} ||f(t)||_{V'}^2 dt
///           + ((r-q)/(r+1)) (2(q+1)/(beta(r+1)))^{(r-q)/(q+1)} |Omega|
///             / (lambda1 mu + alpha) ]
///         / (1 - e^{-(lambda1 mu + alpha) T}).
/// Independent of the Galerkin level.
inline double invariant_radius(const PhysicalParams& p, const ForcingSpec& f, GridPtr grid) {
    p.require_beta_positive("invariant_radius");
    const Grid& g = *grid;
    double T = p.period;
    double w1 = g.lambda1() * p.mu + p.alpha;

    double forcing_term = 0.0;
    if (!f.empty()) {
        // composite 8-point Gauss-Legendre over the forcing's harmonics
        static const double gx[4] = {0.1834346424956498, 0.5255324099163290,
                                     0.7966664774136267, 0.9602898564975363};
        static const double gw[4] = {0.3626837833783620, 0.3137066458778873,
                                     0.2223810344533745, 0.1012285362903763};
        int panels = std::max(16, 4 * (f.max_harmonic() + 1));
        for (int pn = 0; pn < panels; ++pn) {
            double a = T * pn / panels;
            double b = T * (pn + 1) / panels;
            double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (int j = 0; j < 4; ++j) {
                for (double sgn : {-1.0, 1.0}) {
                    double t = mid + sgn * half * gx[j];
                    double val = std::exp(-w1 * (T - t)) * forcing_vprime_sq(grid, f, T, t);
                    forcing_term += half * gw[j] * val;
                }
            }
        }
        forcing_term /= p.mu;
    }
    double const_term = ((p.r - p.q) / (p.r + 1.0)) *
                        std::pow(2.0 * (p.q + 1.0) / (p.beta * (p.r + 1.0)),
                                 (p.r - p.q) / (p.q + 1.0)) *
                        g.volume() / w1;
    double r2 = (forcing_term + const_term) / (1.0 - std::exp(-w1 * T));
    return std::sqrt(r2);
}

namespace detail {

// --- Anderson mixing (type II, difference form) -------------------------

inline std::vector<double> flatten(const SpectralField& v) {
    std::vector<double> out;
    const Grid& g = v.grid();
    out.reserve(2 * g.dim() * g.total());
    for (int c = 0; c < g.dim(); ++c)
        for (std::size_t i = 0; i < g.total(); ++i) {
            out.push_back(v.coeff(c, i).real());
            out.push_back(v.coeff(c, i).imag());
        }
    return out;
}

inline SpectralField unflatten(GridPtr grid, const std::vector<double>& data) {
    SpectralField v(grid);
    const Grid& g = *grid;
    std::size_t p = 0;
    for (int c = 0; c < g.dim(); ++c)
        for (std::size_t i = 0; i < g.total(); ++i) {
            v.set_coeff(c, i, Complex(data[p], data[p + 1]));
            p += 2;
        }
    v.set_divergence_free(true);
    return v;
}

class AndersonMixer {
  public:
    explicit AndersonMixer(int window) : window_(window) {}

    /// Next iterate from the pair (x, g(x)).
    std::vector<double> step(const std::vector<double>& x, const std::vector<double>& gx) {
        std::size_t n = x.size();
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = gx[i] - x[i];
        if (!xs_.empty()) {
            std::vector<double> dx(n), df(n);
            for (std::size_t i = 0; i < n; ++i) {
                dx[i] = x[i] - xs_.back()[i];
                df[i] = f[i] - fs_.back()[i];
            }
            dxs_.push_back(std::move(dx));
            dfs_.push_back(std::move(df));
            if (static_cast<int>(dxs_.size()) > window_) {
                dxs_.erase(dxs_.begin());
                dfs_.erase(dfs_.begin());
            }
        }
        xs_.push_back(x);
        fs_.push_back(f);
        if (xs_.size() > 2) {
            xs_.erase(xs_.begin());
            fs_.erase(fs_.begin());
        }
        std::size_t m = dxs_.size();
        if (m == 0)
            return gx;
        // least squares min || f - dF gamma || via ridge-stabilized normal equations
        std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
        std::vector<double> rhs(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    s += dfs_[i][k] * dfs_[j][k];
                a[i][j] = a[j][i] = s;
            }
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += dfs_[i][k] * f[k];
            rhs[i] = s;
        }
        double trace = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            trace += a[i][i];
        double ridge = 1e-12 * (trace > 0 ? trace : 1.0);
        for (std::size_t i = 0; i < m; ++i)
            a[i][i] += ridge;
        std::vector<double> gamma = solve_spd(a, rhs);
        std::vector<double> next(n);
        for (std::size_t k = 0; k < n; ++k) {
            double corr = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                corr += (dxs_[j][k] + dfs_[j][k]) * gamma[j];
            next[k] = x[k] + f[k] - corr;
        }
        return next;
    }

  private:
    static std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
        std::size_t m = b.size();
        for (std::size_t i = 0; i < m; ++i) { // Gaussian elimination, partial pivot
            std::size_t piv = i;
            for (std::size_t r = i + 1; r < m; ++r)
                if (std::abs(a[r][i]) > std::abs(a[piv][i]))
                    piv = r;
            std::swap(a[i], a[piv]);
            std::swap(b[i], b[piv]);
            if (a[i][i] == 0.0)
                continue;
            for (std::size_t r = i + 1; r < m; ++r) {
                double fac = a[r][i] / a[i][i];
                for (std::size_t c2 = i; c2 < m; ++c2)
                    a[r][c2] -= fac * a[i][c2];
                b[r] -= fac * b[i];
            }
        }
        std::vector<double> x(m, 0.0);
        for (std::size_t ii = m; ii-- > 0;) {
            double s = b[ii];
            for (std::size_t c2 = ii + 1; c2 < m; ++c2)
                s -= a[ii][c2] * x[c2];
            x[ii] = a[ii][ii] != 0.0 ? s / a[ii][ii] : 0.0;
        }
        return x;
    }

    int window_;
    std::vector<std::vector<double>> xs_, fs_, dxs_, dfs_;
};

} // namespace detail

/// Fixed-point iteration v^{n+1} = T_m(v^n) on the Poincare map, with
/// optional Anderson mixing for regimes without a contraction certificate.
inline PeriodicSolveReport solve_periodic(const PhysicalParams& params, const ForcingSpec& f,
                                          GridPtr grid, const IntegratorConfig& cfg,
                                          const SolveOptions& opts,
                                          const SpectralField* v0_init = nullptr) {
    params.validate();
    opts.validate();
    cfg.validate(*grid);
    f.validate(*grid);

    PeriodicSolveReport rep;
    if (params.beta > 0.0) {
        rep.uniqueness = compute_thresholds(params, grid->lambda1());
        if (rep.uniqueness.applicable_rate)
            rep.predicted_rate = std::exp(-*rep.uniqueness.applicable_rate * params.period);
        rep.invariant_radius = invariant_radius(params, f, grid);
    }

    SpectralField v = v0_init ? galerkin_truncate(*v0_init, cfg.mode_set())
                              : SpectralField::zero(grid);
    v.set_divergence_free(true);
    if (rep.invariant_radius > 0.0 && h_norm(v) > rep.invariant_radius) {
        rep.initial_outside_ball = true;
        rep.note = "initial state outside the invariant ball; proceeding anyway";
    }

    detail::AndersonMixer mixer(opts.anderson_window);
    rep.accelerated = opts.accel == SolveOptions::Accel::anderson;

    for (int it = 0; it < opts.max_iter; ++it) {
        SpectralField mapped = poincare_map(v, params, f, cfg);
        double resid = h_norm(v - mapped);
        rep.residual_history.push_back(resid);
        rep.iterations = it + 1;
        if (resid <= opts.tol) {
            rep.converged = true;
            break;
        }
        if (rep.accelerated) {
            auto next = mixer.step(detail::flatten(v), detail::flatten(mapped));
            v = galerkin_truncate(detail::unflatten(grid, next), cfg.mode_set());
            v.set_divergence_free(true);
        } else {
            v = std::move(mapped);
        }
    }

    for (std::size_t i = 0; i + 1 < rep.residual_history.size(); ++i) {
        double prev = rep.residual_history[i];
        if (prev > 0.0)
            rep.empirical_contraction.push_back(rep.residual_history[i + 1] / prev);
    }
    if (rep.residual_history.size() >= 3)
        rep.fitted_contraction = contraction_estimate(rep.residual_history);
    if (!rep.empirical_contraction.empty())
        rep.contraction_certified =
            *std::max_element(rep.empirical_contraction.begin(), rep.empirical_contraction.end()) < 1.0;

    rep.final_state = v;
    if (rep.converged)
        rep.orbit = integrate_period(v, params, f, cfg);
    return rep;
}

// --- Appendix route: periodic Green kernel and the Phi iteration ---------

/// Harmonic response coefficients of du/dt + w u = h with h given by the
/// profile's temporal coefficients: u_h = c_h / (w + i 2 pi h / T).
inline std::vector<Complex> linear_periodic_response(const ModalProfile& prof, double omega,
                                                     double period) {
    std::vector<Complex> out(prof.temporal.size());
    for (std::size_t h = 0; h < prof.temporal.size(); ++h) {
        double Om = kTwoPi * static_cast<double>(h) / period;
        out[h] = prof.temporal[h] / Complex(omega, Om);
    }
    return out;
}

/// Unique T-periodic solution of the linear problem
///   du/dt + (mu A + alpha I) u = f,   u(0) = u(T),
/// evaluated mode-by-mode in closed form (the periodic Green kernel applied
/// to the forcing's temporal harmonics).  Trajectory is sampled on n_samples
/// uniform intervals and satisfies u(0) = u(T) exactly.
inline Trajectory solve_linear_periodic(const PhysicalParams& params, GridPtr grid,
                                        const ForcingSpec& f, int n_samples = 256) {
    params.validate();
    f.validate(*grid);
    const Grid& g = *grid;
    if (!(params.mu * g.lambda1() + params.alpha > 0.0))
        throw std::invalid_argument("solve_linear_periodic: omega_k must be positive");
    ForcingSpec fproj = f;
    fproj.project_amplitudes();
    double T = params.period;

    struct Resp {
        const ModalProfile* prof;
        std::vector<Complex> harmonics;
    };
    std::vector<Resp> responses;
    for (const auto& prof : fproj.profiles) {
        int k2 = prof.k[0] * prof.k[0] + prof.k[1] * prof.k[1] + prof.k[2] * prof.k[2];
        double omega = params.mu * g.lambda_scale() * k2 + params.alpha;
        responses.push_back({&prof, linear_periodic_response(prof, omega, T)});
    }

    Trajectory traj;
    traj.period = T;
    traj.dt = T / n_samples;
    for (int i = 0; i <= n_samples; ++i) {
        double t = (i == n_samples) ? 0.0 : T * i / n_samples; // exact periodic closure
        SpectralField state(grid);
        for (const auto& rsp : responses) {
            double base = kTwoPi * std::remainder(t, T) / T;
            Complex s = rsp.harmonics[0]; // real: c0 / omega
            for (std::size_t h = 1; h < rsp.harmonics.size(); ++h) {
                Complex rot(std::cos(base * h), std::sin(base * h));
                s += rsp.harmonics[h] * rot + std::conj(rsp.harmonics[h] * rot);
            }
            std::array<Complex, 3> amp;
            for (int c = 0; c < 3; ++c)
                amp[c] = rsp.prof->amplitude[c] * s.real();
            state.add_mode(rsp.prof->k, amp);
        }
        state.set_divergence_free(true);
        double tn = T * i / n_samples;
        traj.times.push_back(tn);
        traj.states.push_back(state);
        traj.diag.push_back(detail::diag_row(state, grid, params, fproj, tn));
    }
    return traj;
}

/// Phi iteration for the strong periodic regime:
///   v^{n+1} = S(f - B(v^n) - beta C(v^n) - gamma Ct(v^n)),
/// with S the periodic Green-kernel solve applied harmonic-by-harmonic to the
/// time-sampled right side.  Reports the empirical Lipschitz factor of Phi.
inline PeriodicSolveReport picard_strong(const PhysicalParams& params, const ForcingSpec& f,
                                         GridPtr grid, const IntegratorConfig& cfg,
                                         const SolveOptions& opts) {
    params.validate();
    opts.validate();
    cfg.validate(*grid);
    f.validate(*grid);
    const Grid& g = *grid;
    if (!(params.mu * g.lambda1() + params.alpha > 0.0))
        throw std::invalid_argument("picard_strong: omega_k must be positive");
    ForcingSpec fproj = f;
    fproj.project_amplitudes();

    // temporal grid size: next transform-friendly size >= cfg.n_steps
    int nt = cfg.n_steps;
    auto supported = [](int n) {
        while (n % 2 == 0)
            n /= 2;
        return n == 1 || n == 3;
    };
    while (!supported(nt))
        ++nt;
    int H = opts.temporal_harmonics > 0 ? opts.temporal_harmonics : cfg.n_steps / 4;
    H = std::min(H, nt / 2 - 1);
    double T = params.period;
    ModeSet m = cfg.mode_set();

    Fft tplan(static_cast<std::size_t>(nt));

    PeriodicSolveReport rep;
    if (params.beta > 0.0) {
        rep.uniqueness = compute_thresholds(params, g.lambda1());
        if (rep.uniqueness.applicable_rate)
            rep.predicted_rate = std::exp(-*rep.uniqueness.applicable_rate * params.period);
    }

    std::vector<SpectralField> v(nt, SpectralField::zero(grid));
    for (auto& s : v)
        s.set_divergence_free(true);

    // modes the solve touches
    std::vector<std::size_t> active;
    for (std::size_t idx = 0; idx < g.total(); ++idx)
        if (g.in_band(idx) && m.contains_k2(g.k2int(idx)))
            active.push_back(idx);

    double first_scale = 0.0;
    double prev_delta = -1.0;
    std::vector<SpectralField> fres(nt, SpectralField(grid));
    for (int i = 0; i < nt; ++i)
        fres[i] = build_forcing(grid, fproj, T, T * i / nt);

    for (int it = 0; it < opts.max_iter; ++it) {
        // right side G_i = P_m[f(t_i) - B(v_i) - beta C(v_i) - gamma Ct(v_i)]
        std::vector<SpectralField> rhs;
        rhs.reserve(nt);
        for (int i = 0; i < nt; ++i) {
            SpectralField gfield = fres[i];
            gfield += detail::explicit_rhs(v[i], params, m, cfg.nonlinear);
            rhs.push_back(galerkin_truncate(std::move(gfield), m));
        }
        // per-mode temporal solve
        std::vector<SpectralField> next(nt, SpectralField(grid));
        double dropped = 0.0, kept = 0.0;
        std::vector<Complex> series(nt);
        for (std::size_t idx : active) {
            double omega = params.mu * g.lambda(idx) + params.alpha;
            for (int c = 0; c < g.dim(); ++c) {
                for (int i = 0; i < nt; ++i)
                    series[i] = rhs[i].coeff(c, idx);
                tplan.forward(series.data());
                for (int h = 0; h < nt; ++h) {
                    int hs = h <= nt / 2 ? h : h - nt; // signed harmonic
                    Complex& ch = series[h];
                    ch /= static_cast<double>(nt);
                    double mag = std::abs(ch);
                    if (std::abs(hs) > H) {
                        dropped += mag * mag;
                        ch = Complex(0, 0);
                    } else {
                        kept += mag * mag;
                        ch /= Complex(omega, kTwoPi * hs / T);
                    }
                }
                tplan.inverse(series.data());
                for (int i = 0; i < nt; ++i)
                    next[i].set_coeff(c, idx, series[i]);
            }
        }
        for (auto& s : next)
            s.set_divergence_free(true);
        rep.temporal_truncation = kept > 0.0 ? std::sqrt(dropped / (kept + dropped)) : 0.0;

        double delta = 0.0, scale = 0.0;
        for (int i = 0; i < nt; ++i) {
            delta = std::max(delta, h_norm(next[i] - v[i]));
            scale = std::max(scale, h_norm(next[i]));
        }
        v = std::move(next);
        rep.residual_history.push_back(delta);
        rep.iterations = it + 1;
        if (prev_delta > 0.0)
            rep.empirical_contraction.push_back(delta / prev_delta);
        prev_delta = delta;
        if (it == 0)
            first_scale = std::max(scale, 1e-300);
        if (delta <= opts.tol) {
            rep.converged = true;
            break;
        }
        if (scale > 1e3 * first_scale) {
            rep.note = "Phi iteration diverged (norm growth beyond 1e3 x first iterate)";
            break;
        }
    }

    if (!rep.empirical_contraction.empty()) {
        double worst =
            *std::max_element(rep.empirical_contraction.begin(), rep.empirical_contraction.end());
        rep.contraction_certified = worst < 1.0;
    } else if (rep.converged) {
        rep.contraction_certified = true; // Phi(0) already a fixed point
    }
    if (rep.residual_history.size() >= 3)
        rep.fitted_contraction = contraction_estimate(rep.residual_history);

    rep.final_state = v.empty() ? SpectralField::zero(grid) : v[0];
    if (rep.converged) {
        Trajectory traj;
        traj.period = T;
        traj.dt = T / nt;
        for (int i = 0; i <= nt; ++i) {
            const SpectralField& state = v[static_cast<std::size_t>(i % nt)];
            double t = T * i / nt;
            traj.times.push_back(t);
            traj.states.push_back(state);
            traj.diag.push_back(detail::diag_row(state, grid, params, fproj, t));
        }
        rep.orbit = std::move(traj);
    }
    return rep;
}

} // namespace cbfed
