#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cbfed/forcing.hpp"
#include "cbfed/integrate.hpp"
#include "cbfed/params.hpp"

namespace cbfed {

/// Closed-form uniqueness thresholds and the decay rates they certify.
///
/// zeta/eta are defined for r > 3, kappa for r = 3 (and q < 3); out-of-domain
/// entries stay empty.  Margins: L = mu lambda1 + 2 alpha - zeta,
/// L1 = 2((mu - 1/beta) lambda1 + alpha - eta),
/// Ltilde = alpha + (mu - 1/beta) lambda1 - kappa.  The certified energy
/// decay rate is L, L1 or 2 Ltilde for the respective condition.
struct UniquenessReport {
    std::optional<double> zeta;
    std::optional<double> eta;
    std::optional<double> kappa;
    std::optional<double> zeta_gamma0; ///< sharper gamma = 0 constant
    std::optional<double> L;
    std::optional<double> L1;
    std::optional<double> Ltilde;
    bool condition_supercritical_A = false; ///< mu lambda1 + 2 alpha > zeta
    bool condition_supercritical_B = false; ///< (mu-1/beta) lambda1 + alpha > eta and beta mu > 1
    bool condition_critical = false;        ///< beta mu > 1 and margin over kappa
    std::optional<double> applicable_rate;  ///< best certified energy decay rate
};

namespace detail {

/// x^e with the q -> 1+ limit convention: expressions of the form
/// (c (q-1))^{e(q-1)} tend to 1, so a zero exponent always yields 1.
inline double pow_limit(double base, double expo) {
    if (expo == 0.0)
        return 1.0;
    return std::pow(base, expo);
}

/// Shared gamma-dependent addend of zeta and eta.
inline double gamma_addend(const PhysicalParams& p) {
    double a = std::abs(p.gamma) * p.q * std::pow(2.0, p.q - 2.0);
    double lead = std::pow(a, (p.r - 1.0) / (p.r - p.q));
    double mid = (p.r - p.q) / (p.r - 1.0);
    double small = pow_limit(2.0 * (p.q - 1.0) / (p.beta * (p.r - 1.0)), (p.q - 1.0) / (p.r - 1.0));
    double bracket = 1.0 + std::pow(2.0, (p.q - 1.0) / (p.r - 1.0));
    return lead * mid * small * bracket;
}

} // namespace detail

inline UniquenessReport compute_thresholds(const PhysicalParams& p, double lambda1) {
    p.require_beta_positive("compute_thresholds");
    if (!(p.r > p.q) || !(p.q >= 1.0))
        throw std::invalid_argument("compute_thresholds: need r > q >= 1");
    UniquenessReport rep;
    if (p.r > 3.0) {
        double conv = std::pow(1.0 / (2.0 * p.mu), (p.r - 1.0) / (p.r - 3.0)) *
                      ((p.r - 3.0) / (p.r - 1.0)) *
                      std::pow(8.0 / (p.beta * (p.r - 1.0)), 2.0 / (p.r - 3.0));
        double conv_sharp = std::pow(1.0 / (2.0 * p.mu), (p.r - 1.0) / (p.r - 3.0)) *
                            ((p.r - 3.0) / (p.r - 1.0)) *
                            std::pow(4.0 / (p.beta * (p.r - 1.0)), 2.0 / (p.r - 3.0));
        double g = detail::gamma_addend(p);
        rep.zeta = 2.0 * (conv + g);
        rep.zeta_gamma0 = 2.0 * conv_sharp;
        rep.eta = p.beta / 4.0 + g;
        rep.L = p.mu * lambda1 + 2.0 * p.alpha - *rep.zeta;
        rep.L1 = 2.0 * ((p.mu - 1.0 / p.beta) * lambda1 + p.alpha - *rep.eta);
        rep.condition_supercritical_A = *rep.L > 0.0;
        rep.condition_supercritical_B = *rep.L1 > 0.0 && p.beta * p.mu > 1.0;
    }
    if (p.r == 3.0 && p.q < 3.0) {
        double a = std::abs(p.gamma) * p.q * std::pow(2.0, p.q - 2.0);
        double kappa = std::pow(a, 2.0 / (3.0 - p.q)) * ((3.0 - p.q) / 2.0) *
                       detail::pow_limit((p.q - 1.0) / p.beta, (p.q - 1.0) / 2.0) *
                       (1.0 + std::pow(2.0, (p.q - 1.0) / 2.0));
        rep.kappa = kappa;
        rep.Ltilde = p.alpha + (p.mu - 1.0 / p.beta) * lambda1 - kappa;
        rep.condition_critical = p.beta * p.mu > 1.0 && *rep.Ltilde > 0.0;
    }
    double best = 0.0;
    if (rep.condition_supercritical_A)
        best = std::max(best, *rep.L);
    if (rep.condition_supercritical_B)
        best = std::max(best, *rep.L1);
    if (rep.condition_critical)
        best = std::max(best, 2.0 * *rep.Ltilde);
    if (best > 0.0)
        rep.applicable_rate = best;
    return rep;
}

// --- energy bookkeeping -------------------------------------------------

/// Per-window residual of the energy balance
///   ||v(t2)||^2 - ||v(t1)||^2
///   + 2 int_{t1}^{t2} (mu ||v||_V^2 + alpha ||v||_H^2 + beta ||v||_{r+1}^{r+1}
///                      + gamma ||v||_{q+1}^{q+1} - <f,v>) dt
/// with the time integral by composite trapezoid over the diagnostics.
inline std::vector<double> energy_residual_series(const Trajectory& traj,
                                                  const PhysicalParams& params) {
    if (traj.diag.size() < 2)
        throw std::invalid_argument("energy_residual_series: trajectory has no diagnostics");
    std::vector<double> out;
    out.reserve(traj.diag.size() - 1);
    auto dissipation = [&](const DiagnosticsRow& d) {
        return params.mu * d.v * d.v + params.alpha * d.h * d.h +
               params.beta * std::pow(d.lr, params.r + 1.0) +
               params.gamma * std::pow(d.lq, params.q + 1.0) - d.f_pair;
    };
    for (std::size_t i = 0; i + 1 < traj.diag.size(); ++i) {
        const auto& a = traj.diag[i];
        const auto& b = traj.diag[i + 1];
        double dt = b.time - a.time;
        double integral = 0.5 * dt * (dissipation(a) + dissipation(b));
        out.push_back(b.h * b.h - a.h * a.h + 2.0 * integral);
    }
    return out;
}

inline double whole_period_energy_residual(const Trajectory& traj, const PhysicalParams& params) {
    double acc = 0.0;
    for (double r : energy_residual_series(traj, params))
        acc += r;
    return acc;
}

struct AprioriReport {
    double K = 0.0;         ///< dissipation budget over one period
    double sup_bound = 0.0; ///< (1/(mu lambda1 T) + 1) K
    bool satisfied = false;
    double margin = 0.0;    ///< sup_bound - sup_t ||v||^2
    double integrated_margin = 0.0; ///< worst margin of the integrated form
};

/// A-priori bound for periodic orbits:
///   K = 2 ((r-q)/(r+1)) (2(q+1)/(beta(r+1)))^{(r-q)/(q+1)} |Omega| T
///       + (1/mu) int_0^T ||f||_{V'}^2 dt,
///   sup_t ||v(t)||_H^2 <= (1/(mu lambda1 T) + 1) K,
/// plus the integrated form checked along the trajectory.
inline AprioriReport apriori_bound_check(const Trajectory& traj, const PhysicalParams& params,
                                         const ForcingSpec& f, GridPtr grid) {
    params.require_beta_positive("apriori_bound_check");
    if (traj.diag.empty())
        throw std::invalid_argument("apriori_bound_check: trajectory has no diagnostics");
    const Grid& g = *grid;
    double T = params.period;
    double omega_vol = g.volume();
    double lam1 = g.lambda1();

    double const_term = 2.0 * ((params.r - params.q) / (params.r + 1.0)) *
                        std::pow(2.0 * (params.q + 1.0) / (params.beta * (params.r + 1.0)),
                                 (params.r - params.q) / (params.q + 1.0)) *
                        omega_vol * T;
    // forcing integral by fine trapezoid over the temporal harmonics
    int nq = 64 * std::max(1, f.max_harmonic() + 1);
    double finteg = 0.0;
    for (int i = 0; i <= nq; ++i) {
        double t = T * i / nq;
        double w = (i == 0 || i == nq) ? 0.5 : 1.0;
        finteg += w * forcing_vprime_sq(grid, f, T, t);
    }
    finteg *= T / nq;

    AprioriReport rep;
    rep.K = const_term + finteg / params.mu;
    rep.sup_bound = (1.0 / (params.mu * lam1 * T) + 1.0) * rep.K;

    double sup_h2 = 0.0;
    for (const auto& d : traj.diag)
        sup_h2 = std::max(sup_h2, d.h * d.h);
    rep.margin = rep.sup_bound - sup_h2;

    // integrated form: ||v(t)||^2 + mu int ||v||_V^2 + 2 alpha int ||v||^2
    //                  + 2 beta int ||v||_{r+1}^{r+1} <= sup_bound
    double iv = 0.0, ih = 0.0, ir = 0.0;
    double worst = rep.sup_bound - traj.diag.front().h * traj.diag.front().h;
    for (std::size_t i = 0; i + 1 < traj.diag.size(); ++i) {
        const auto& a = traj.diag[i];
        const auto& b = traj.diag[i + 1];
        double dt = b.time - a.time;
        iv += 0.5 * dt * (a.v * a.v + b.v * b.v);
        ih += 0.5 * dt * (a.h * a.h + b.h * b.h);
        ir += 0.5 * dt * (std::pow(a.lr, params.r + 1.0) + std::pow(b.lr, params.r + 1.0));
        double lhs = b.h * b.h + params.mu * iv + 2.0 * params.alpha * ih + 2.0 * params.beta * ir;
        worst = std::min(worst, rep.sup_bound - lhs);
    }
    rep.integrated_margin = worst;
    rep.satisfied = rep.margin >= 0.0 && rep.integrated_margin >= 0.0;
    return rep;
}

// --- decay fits ------------------------------------------------------------

struct DecayFit {
    double rate = 0.0;     ///< fitted exponential rate of ||va - vb||_H^2
    double r_squared = 0.0;
    std::size_t samples = 0;
};

/// Least-squares slope of log ||va(t) - vb(t)||_H^2 against t over the window
/// where the difference energy exceeds 1e-12.
inline DecayFit decay_rate_fit(const Trajectory& a, const Trajectory& b) {
    if (a.times.size() != b.times.size() || a.times.empty())
        throw std::invalid_argument("decay_rate_fit: trajectories have different sampling");
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        if (a.times[i] != b.times[i])
            throw std::invalid_argument("decay_rate_fit: time grids differ");
        double d2 = std::pow(h_norm(a.states[i] - b.states[i]), 2);
        if (d2 > 1e-12) {
            ts.push_back(a.times[i]);
            ys.push_back(std::log(d2));
        }
    }
    if (ts.size() < 2)
        throw std::invalid_argument("decay_rate_fit: indistinguishable trajectories");
    double n = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double denom = n * stt - st * st;
    if (denom == 0.0)
        throw std::invalid_argument("decay_rate_fit: degenerate time grid");
    double slope = (n * sty - st * sy) / denom;
    DecayFit fit;
    fit.rate = -slope;
    fit.samples = ts.size();
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    double intercept = (sy - slope * st) / n;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double e = ys[i] - (intercept + slope * ts[i]);
        ss_res += e * e;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace cbfed
