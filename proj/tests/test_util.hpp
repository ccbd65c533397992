#pragma once

#include <array>
#include <memory>

#include "cbfed/rng.hpp"
#include "cbfed/spectral.hpp"

namespace cbfed::test {

inline GridPtr make_grid(int dim, int n, double box = kTwoPi) {
    return std::make_shared<Grid>(dim, n, box);
}

/// Random Hermitian field band-limited to |k_i| <= kcap (defaults to half the
/// dealias band so that high powers stay inside quadrature-exact range).
inline SpectralField random_field(GridPtr grid, SplitMix64& rng, int kcap = 0, bool solenoidal = false) {
    const Grid& g = *grid;
    if (kcap <= 0)
        kcap = std::max(1, g.kmax() / 2);
    SpectralField f(grid);
    int lo = -kcap, hi = kcap;
    std::array<int, 3> k{0, 0, 0};
    auto visit = [&](int k0, int k1, int k2) {
        k = {k0, k1, k2};
        // one representative per +/-k pair: first nonzero component positive
        int lead = k0 != 0 ? k0 : (k1 != 0 ? k1 : k2);
        if (lead <= 0)
            return;
        std::array<Complex, 3> amp;
        for (int c = 0; c < g.dim(); ++c)
            amp[c] = Complex(rng.next_symmetric(), rng.next_symmetric());
        f.add_mode(k, amp);
    };
    if (g.dim() == 2) {
        for (int k0 = lo; k0 <= hi; ++k0)
            for (int k1 = lo; k1 <= hi; ++k1)
                visit(k0, k1, 0);
    } else {
        for (int k0 = lo; k0 <= hi; ++k0)
            for (int k1 = lo; k1 <= hi; ++k1)
                for (int k2 = lo; k2 <= hi; ++k2)
                    visit(k0, k1, k2);
    }
    if (solenoidal)
        return leray_project(std::move(f));
    return f;
}

} // namespace cbfed::test
