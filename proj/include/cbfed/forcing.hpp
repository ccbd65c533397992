#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "cbfed/rng.hpp"
#include "cbfed/spectral.hpp"

namespace cbfed {

/// One forcing term: spatial mode k with a complex amplitude vector and a
/// real-valued temporal profile
///   h(t) = c0 + 2 Re sum_{h>=1} c_h e^{i 2 pi h t / T}.
/// Hermitian symmetry in the harmonic index is built in by storing only
/// h >= 0; the spatial conjugate partner at -k is added automatically.
struct ModalProfile {
    std::array<int, 3> k{0, 0, 0};
    std::array<Complex, 3> amplitude{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
    std::vector<Complex> temporal{Complex(1, 0)}; ///< c_0, c_1, ..., c_H

    int max_harmonic() const { return static_cast<int>(temporal.size()) - 1; }

    double profile(double t, double period) const {
        // exact reduction keeps f bitwise T-periodic whenever t+T is exact
        double tr = std::remainder(t, period);
        double base = kTwoPi * tr / period;
        double val = temporal[0].real();
        for (std::size_t h = 1; h < temporal.size(); ++h) {
            double ang = base * static_cast<double>(h);
            val += 2.0 * (temporal[h].real() * std::cos(ang) - temporal[h].imag() * std::sin(ang));
        }
        return val;
    }
};

struct ForcingSpec {
    std::vector<ModalProfile> profiles;

    bool empty() const { return profiles.empty(); }

    int max_harmonic() const {
        int h = 0;
        for (const auto& p : profiles)
            h = std::max(h, p.max_harmonic());
        return h;
    }

    /// Project amplitudes onto the plane orthogonal to k.  Returns the list
    /// of profiles that needed fixing (surfaced as warnings by callers).
    std::vector<std::size_t> project_amplitudes() {
        std::vector<std::size_t> touched;
        for (std::size_t i = 0; i < profiles.size(); ++i) {
            auto& p = profiles[i];
            double k2 = 0.0;
            Complex dot(0, 0);
            for (int c = 0; c < 3; ++c) {
                k2 += double(p.k[c]) * p.k[c];
                dot += double(p.k[c]) * p.amplitude[c];
            }
            if (k2 == 0.0)
                continue;
            if (std::abs(dot) > 1e-14) {
                for (int c = 0; c < 3; ++c)
                    p.amplitude[c] -= double(p.k[c]) * dot / k2;
                touched.push_back(i);
            }
        }
        return touched;
    }

    void validate(const Grid& grid) const {
        for (const auto& p : profiles) {
            if (p.temporal.empty())
                throw std::invalid_argument("forcing: empty temporal profile");
            if (std::abs(p.temporal[0].imag()) > 0.0)
                throw std::invalid_argument("forcing: c_0 must be real for a real profile");
            int k2 = p.k[0] * p.k[0] + p.k[1] * p.k[1] + p.k[2] * p.k[2];
            if (k2 == 0)
                throw std::invalid_argument("forcing: the mean mode cannot be forced");
            for (int d = 0; d < grid.dim(); ++d)
                if (std::abs(p.k[d]) > grid.kmax())
                    throw std::invalid_argument("forcing: mode outside the dealiased band");
            if (grid.dim() == 2 && p.k[2] != 0)
                throw std::invalid_argument("forcing: k[2] must be zero in 2D");
        }
    }
};

/// f(t) = P g(t) assembled on the grid; always Leray-projected and exactly
/// T-periodic.
inline SpectralField build_forcing(GridPtr grid, const ForcingSpec& spec, double period, double t) {
    SpectralField f(grid);
    for (const auto& p : spec.profiles) {
        double h = p.profile(t, period);
        std::array<Complex, 3> amp;
        for (int c = 0; c < 3; ++c)
            amp[c] = p.amplitude[c] * h;
        f.add_mode(p.k, amp);
    }
    return leray_project(std::move(f));
}

inline double forcing_vprime_sq(GridPtr grid, const ForcingSpec& spec, double period, double t) {
    double n = vprime_norm(build_forcing(grid, spec, period, t));
    return n * n;
}

/// Band-limited random forcing with reproducible counter-based draws.
/// Amplitudes are rescaled so that sup_t ||f(t)||_H equals `amplitude`.
inline ForcingSpec random_forcing(GridPtr grid, std::uint64_t seed, double amplitude, int k2_max,
                                  int harmonic_cutoff, double period) {
    SplitMix64 rng(seed);
    ForcingSpec spec;
    const Grid& g = *grid;
    int cap = std::min(g.kmax(), static_cast<int>(std::floor(std::sqrt(double(k2_max)))));
    auto consider = [&](int a, int b, int c) {
        int k2 = a * a + b * b + c * c;
        if (k2 == 0 || k2 > k2_max)
            return;
        int lead = a != 0 ? a : (b != 0 ? b : c);
        if (lead <= 0)
            return; // one representative per +/-k pair
        ModalProfile p;
        p.k = {a, b, c};
        for (int d = 0; d < g.dim(); ++d)
            p.amplitude[d] = Complex(rng.next_symmetric(), rng.next_symmetric());
        p.temporal.assign(static_cast<std::size_t>(harmonic_cutoff) + 1, Complex(0, 0));
        p.temporal[0] = Complex(rng.next_symmetric(), 0.0);
        for (int h = 1; h <= harmonic_cutoff; ++h)
            p.temporal[h] = 0.5 * Complex(rng.next_symmetric(), rng.next_symmetric());
        spec.profiles.push_back(p);
    };
    if (g.dim() == 2) {
        for (int a = -cap; a <= cap; ++a)
            for (int b = -cap; b <= cap; ++b)
                consider(a, b, 0);
    } else {
        for (int a = -cap; a <= cap; ++a)
            for (int b = -cap; b <= cap; ++b)
                for (int c = -cap; c <= cap; ++c)
                    consider(a, b, c);
    }
    spec.project_amplitudes();
    // normalize the sup over one period
    double sup = 0.0;
    const int samples = 256;
    for (int i = 0; i < samples; ++i) {
        double t = period * i / samples;
        sup = std::max(sup, h_norm(build_forcing(grid, spec, period, t)));
    }
    if (sup > 0.0 && amplitude > 0.0) {
        double scale = amplitude / sup;
        for (auto& p : spec.profiles)
            for (auto& a : p.amplitude)
                a *= scale;
    } else if (amplitude == 0.0) {
        spec.profiles.clear();
    }
    return spec;
}

} // namespace cbfed
