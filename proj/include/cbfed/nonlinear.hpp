#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cbfed/spectral.hpp"

namespace cbfed {

/// Padding policy for pseudo-spectral products.  Quadratic terms use the
/// 3/2 rule (exact dealiasing); power nonlinearities |u|^{p-1}u are not
/// band-limited and use a wider quadrature grid instead.
struct NonlinearEvalConfig {
    double padding_factor = 1.5;
    double power_padding_factor = 2.0;

    void validate() const {
        if (!(padding_factor >= 1.5))
            throw std::invalid_argument("nonlinear: padding_factor must be >= 3/2");
        if (!(power_padding_factor >= 1.0))
            throw std::invalid_argument("nonlinear: power_padding_factor must be >= 1");
    }

    int pad_n(const Grid& g) const { return snap(g, padding_factor); }
    int power_pad_n(const Grid& g) const { return snap(g, power_padding_factor); }

  private:
    // Snap the requested size up to one of the plan sizes (2^a or 3*2^a).
    static int snap(const Grid& g, double factor) {
        int want = static_cast<int>(std::ceil(factor * g.n()));
        for (int cand : {g.n(), 3 * g.n() / 2, 2 * g.n(), 3 * g.n(), 4 * g.n()})
            if (cand >= want)
                return cand;
        throw std::invalid_argument("nonlinear: padding factor too large");
    }
};

namespace detail {

/// Inverse transforms of every component of u on an n_pad grid.
inline std::vector<std::vector<double>> padded_physical(const SpectralField& u, int pad_n) {
    const Grid& g = u.grid();
    int dim = g.dim();
    std::size_t ptotal = 1;
    for (int d = 0; d < dim; ++d)
        ptotal *= static_cast<std::size_t>(pad_n);
    std::vector<std::vector<double>> phys(dim);
    for (int c = 0; c < dim; ++c) {
        std::vector<Complex> padded(ptotal, Complex(0.0, 0.0));
        for (std::size_t idx = 0; idx < g.total(); ++idx) {
            Complex val = u.coeff(c, idx);
            if (val == Complex(0.0, 0.0))
                continue;
            const auto& kv = g.kvec(idx);
            std::size_t pidx = 0;
            for (int d = 0; d < dim; ++d) {
                int i = kv[d] >= 0 ? kv[d] : kv[d] + pad_n;
                pidx = pidx * static_cast<std::size_t>(pad_n) + static_cast<std::size_t>(i);
            }
            padded[pidx] = val;
        }
        cbfed::detail::transform_axes(g, padded, pad_n, false);
        phys[c].resize(ptotal);
        for (std::size_t i = 0; i < ptotal; ++i)
            phys[c][i] = padded[i].real();
    }
    return phys;
}

/// Forward transform of per-component physical data on the padded grid,
/// restricted back to the dealiased band of the base grid.
inline SpectralField padded_spectral(GridPtr grid, const std::vector<std::vector<double>>& phys,
                                     int pad_n) {
    const Grid& g = *grid;
    int dim = g.dim();
    std::size_t ptotal = phys[0].size();
    SpectralField out(grid);
    double scale = 1.0 / static_cast<double>(ptotal);
    for (int c = 0; c < dim; ++c) {
        std::vector<Complex> data(ptotal);
        for (std::size_t i = 0; i < ptotal; ++i)
            data[i] = Complex(phys[c][i], 0.0);
        cbfed::detail::transform_axes(g, data, pad_n, true);
        for (std::size_t idx = 0; idx < g.total(); ++idx) {
            if (!g.in_band(idx) || g.k2int(idx) == 0)
                continue;
            const auto& kv = g.kvec(idx);
            std::size_t pidx = 0;
            for (int d = 0; d < dim; ++d) {
                int i = kv[d] >= 0 ? kv[d] : kv[d] + pad_n;
                pidx = pidx * static_cast<std::size_t>(pad_n) + static_cast<std::size_t>(i);
            }
            out.set_coeff(c, idx, data[pidx] * scale);
        }
    }
    return out;
}

/// Dealiased (u.grad)v without the Leray projection.
inline SpectralField convective_raw(const SpectralField& u, const SpectralField& v,
                                    const NonlinearEvalConfig& cfg) {
    u.check_same_grid(v);
    const Grid& g = u.grid();
    int dim = g.dim();
    int pad_n = cfg.pad_n(g);

    auto uphys = padded_physical(u, pad_n);

    // grad v in spectral space, one padded inverse transform per (i,j) entry
    double kscale = kTwoPi / g.box_length();
    std::size_t ptotal = uphys[0].size();
    std::vector<std::vector<double>> result(dim);
    for (int i = 0; i < dim; ++i)
        result[i].assign(ptotal, 0.0);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            std::vector<Complex> padded(ptotal, Complex(0.0, 0.0));
            for (std::size_t idx = 0; idx < g.total(); ++idx) {
                Complex val = v.coeff(i, idx);
                if (val == Complex(0.0, 0.0))
                    continue;
                const auto& kv = g.kvec(idx);
                std::size_t pidx = 0;
                for (int d = 0; d < dim; ++d) {
                    int ii = kv[d] >= 0 ? kv[d] : kv[d] + pad_n;
                    pidx = pidx * static_cast<std::size_t>(pad_n) + static_cast<std::size_t>(ii);
                }
                padded[pidx] = Complex(0.0, kscale * kv[j]) * val;
            }
            cbfed::detail::transform_axes(g, padded, pad_n, false);
            for (std::size_t p = 0; p < ptotal; ++p)
                result[i][p] += uphys[j][p] * padded[p].real();
        }
    }
    return padded_spectral(u.grid_ptr(), result, pad_n);
}

} // namespace detail

/// b(u,v,w) = integral of (u.grad)v . w over the box.
inline double trilinear_form(const SpectralField& u, const SpectralField& v, const SpectralField& w,
                             const NonlinearEvalConfig& cfg = {}) {
    u.check_same_grid(v);
    u.check_same_grid(w);
    SpectralField conv = detail::convective_raw(u, v, cfg);
    return dot_h(conv, w);
}

/// B(u,v) = P[(u.grad)v], dealiased.
inline SpectralField bilinear_map(const SpectralField& u, const SpectralField& v,
                                  const NonlinearEvalConfig& cfg = {}) {
    return leray_project(detail::convective_raw(u, v, cfg));
}

/// C(u) = P(|u|^{p-1} u) evaluated pointwise on the power-padded grid.
/// The product |u|^{p-1}u is continuous at u = 0 for every p >= 1; the
/// singular factor is avoided by branching on |u| = 0.
inline SpectralField damping_map(const SpectralField& u, double exponent,
                                 const NonlinearEvalConfig& cfg = {}) {
    if (!(exponent >= 1.0))
        throw std::invalid_argument("damping_map: exponent must be >= 1");
    const Grid& g = u.grid();
    int pad_n = cfg.power_pad_n(g);
    auto phys = detail::padded_physical(u, pad_n);
    std::size_t ptotal = phys[0].size();
    int dim = g.dim();
    for (std::size_t p = 0; p < ptotal; ++p) {
        double mag2 = 0.0;
        for (int c = 0; c < dim; ++c)
            mag2 += phys[c][p] * phys[c][p];
        double factor;
        if (exponent == 1.0)
            factor = 1.0;
        else if (mag2 == 0.0)
            factor = 0.0;
        else
            factor = std::pow(mag2, 0.5 * (exponent - 1.0));
        for (int c = 0; c < dim; ++c)
            phys[c][p] *= factor;
    }
    return leray_project(detail::padded_spectral(u.grid_ptr(), phys, pad_n));
}

} // namespace cbfed
