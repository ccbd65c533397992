#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "cbfed/fft.hpp"
#include "cbfed/params.hpp"

namespace cbfed {

/// Collocation grid on the periodic box [0,L]^dim.
///
/// Wave indices are integers k in [-n/2+1, n/2-1] per axis; the retained
/// (dealiased) band is |k_i| <= kmax = floor(dealias_fraction * n/2), so the
/// band is always symmetric under k -> -k and excludes the Nyquist line.
/// Stokes eigenvalues are lambda_k = (2 pi / L)^2 |k|^2.
class Grid {
  public:
    Grid(int dim, int n_per_axis, double box_length = kTwoPi,
         double dealias_fraction = 2.0 / 3.0)
        : dim_(dim), n_(n_per_axis), box_(box_length), dealias_(dealias_fraction) {
        if (dim_ != 2 && dim_ != 3)
            throw std::invalid_argument("grid.dim must be 2 or 3");
        if (n_ < 8 || (n_ & (n_ - 1)) != 0)
            throw std::invalid_argument("grid.n_per_axis must be a power of two >= 8");
        if (!(box_ > 0.0))
            throw std::invalid_argument("grid.box_length must be positive");
        if (!(dealias_ > 0.0) || dealias_ > 1.0)
            throw std::invalid_argument("grid.dealias_fraction must lie in (0,1]");
        kmax_ = static_cast<int>(std::floor(dealias_ * (n_ / 2.0)));
        if (kmax_ >= n_ / 2)
            kmax_ = n_ / 2 - 1;
        if (kmax_ < 1)
            throw std::invalid_argument("grid: dealias band is empty");
        total_ = 1;
        for (int d = 0; d < dim_; ++d)
            total_ *= static_cast<std::size_t>(n_);
        kvec_.resize(total_);
        k2_.resize(total_);
        in_band_.resize(total_);
        for (std::size_t idx = 0; idx < total_; ++idx) {
            std::array<int, 3> kv{0, 0, 0};
            std::size_t rem = idx;
            for (int d = dim_ - 1; d >= 0; --d) {
                int i = static_cast<int>(rem % n_);
                rem /= n_;
                kv[d] = freq(i);
            }
            kvec_[idx] = kv;
            int k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
            k2_[idx] = k2;
            bool band = true;
            for (int d = 0; d < dim_; ++d)
                band = band && std::abs(kv[d]) <= kmax_;
            in_band_[idx] = band ? 1 : 0;
        }
        // Transform plans for the base grid and the padded product grids.
        for (int np : {n_, 3 * n_ / 2, 2 * n_, 3 * n_, 4 * n_})
            plans_.emplace(np, Fft(static_cast<std::size_t>(np)));
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double box_length() const { return box_; }
    double dealias_fraction() const { return dealias_; }
    int kmax() const { return kmax_; }
    std::size_t total() const { return total_; }
    double volume() const { return std::pow(box_, dim_); }
    /// (2 pi / L)^2, the factor turning integer |k|^2 into lambda_k.
    double lambda_scale() const { double s = kTwoPi / box_; return s * s; }
    double lambda1() const { return lambda_scale(); }

    const std::array<int, 3>& kvec(std::size_t idx) const { return kvec_[idx]; }
    int k2int(std::size_t idx) const { return k2_[idx]; }
    double lambda(std::size_t idx) const { return lambda_scale() * k2_[idx]; }
    bool in_band(std::size_t idx) const { return in_band_[idx] != 0; }

    int freq(int i) const { return i <= n_ / 2 ? i : i - n_; }
    int index_of_freq(int k) const { return k >= 0 ? k : k + n_; }

    std::size_t linear_index(const std::array<int, 3>& k) const {
        std::size_t idx = 0;
        for (int d = 0; d < dim_; ++d)
            idx = idx * n_ + static_cast<std::size_t>(index_of_freq(k[d]));
        return idx;
    }

    const Fft& plan(int size) const {
        auto it = plans_.find(size);
        if (it == plans_.end())
            throw std::invalid_argument("grid: no transform plan for size " + std::to_string(size));
        return it->second;
    }

    bool same_as(const Grid& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && box_ == o.box_ && dealias_ == o.dealias_;
    }

  private:
    int dim_, n_;
    double box_, dealias_;
    int kmax_ = 0;
    std::size_t total_ = 0;
    std::vector<std::array<int, 3>> kvec_;
    std::vector<int> k2_;
    std::vector<std::uint8_t> in_band_;
    std::map<int, Fft> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Galerkin level: retain every wave index with 0 < |k|^2 <= cutoff
/// (integer units).  Nested by construction and symmetric under k -> -k.
struct ModeSet {
    int cutoff = 0;

    bool contains_k2(int k2) const { return k2 > 0 && k2 <= cutoff; }

    void validate(const Grid& grid) const {
        if (cutoff < 1)
            throw std::invalid_argument("mode set: cutoff must be >= 1");
        if (cutoff > grid.kmax() * grid.kmax() * grid.dim())
            throw std::invalid_argument("mode set: cutoff exceeds the dealiased band");
    }

    std::size_t count_retained(const Grid& grid) const {
        std::size_t c = 0;
        for (std::size_t idx = 0; idx < grid.total(); ++idx)
            if (grid.in_band(idx) && contains_k2(grid.k2int(idx)))
                ++c;
        return c;
    }
};

// --- raw transform pair -----------------------------------------------------
//
// Coefficient convention: u(x) = sum_k uhat(k) e^{i (2 pi / L) k . x}, so the
// forward map is the DFT scaled by 1/n^dim and the inverse is the plain
// unnormalized synthesis sum.  forward(inverse(c)) == c to rounding.

namespace detail {

inline void transform_axes(const Grid& grid, std::vector<Complex>& data, int n, bool fwd) {
    const Fft& plan = grid.plan(n);
    int dim = grid.dim();
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d)
        total *= static_cast<std::size_t>(n);
    std::vector<Complex> line(static_cast<std::size_t>(n));
    for (int axis = 0; axis < dim; ++axis) {
        std::size_t stride = 1;
        for (int d = axis + 1; d < dim; ++d)
            stride *= static_cast<std::size_t>(n);
        std::size_t nlines = total / static_cast<std::size_t>(n);
        for (std::size_t l = 0; l < nlines; ++l) {
            // Decompose the line id into the base offset for this axis.
            std::size_t outer = l / stride;
            std::size_t inner = l % stride;
            std::size_t base = outer * stride * static_cast<std::size_t>(n) + inner;
            for (int i = 0; i < n; ++i)
                line[i] = data[base + static_cast<std::size_t>(i) * stride];
            if (fwd)
                plan.forward(line.data());
            else
                plan.inverse(line.data());
            for (int i = 0; i < n; ++i)
                data[base + static_cast<std::size_t>(i) * stride] = line[i];
        }
    }
}

} // namespace detail

/// DFT of one scalar component: physical samples -> coefficients.
inline std::vector<Complex> physical_to_spectral(const Grid& grid, const std::vector<double>& values) {
    if (values.size() != grid.total())
        throw std::invalid_argument("transform: physical array does not match grid");
    std::vector<Complex> data(values.begin(), values.end());
    detail::transform_axes(grid, data, grid.n(), true);
    double scale = 1.0 / static_cast<double>(grid.total());
    for (auto& c : data)
        c *= scale;
    return data;
}

/// Synthesis of one scalar component: coefficients -> physical samples.
inline std::vector<double> spectral_to_physical(const Grid& grid, std::vector<Complex> coeffs) {
    if (coeffs.size() != grid.total())
        throw std::invalid_argument("transform: coefficient array does not match grid");
    detail::transform_axes(grid, coeffs, grid.n(), false);
    std::vector<double> out(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        out[i] = coeffs[i].real();
    return out;
}

/// Divergence-free, mean-zero velocity field stored as Fourier coefficients
/// per component.  Coefficients outside the dealiased band are zero.
class SpectralField {
  public:
    SpectralField() = default;

    explicit SpectralField(GridPtr grid) : grid_(std::move(grid)) {
        comp_.assign(grid_->dim(), std::vector<Complex>(grid_->total(), Complex(0.0, 0.0)));
    }

    static SpectralField zero(GridPtr grid) { return SpectralField(std::move(grid)); }

    /// Build from per-component physical samples; truncates to the dealiased
    /// band and removes the mean.
    static SpectralField from_physical(GridPtr grid, const std::vector<std::vector<double>>& values) {
        if (static_cast<int>(values.size()) != grid->dim())
            throw std::invalid_argument("from_physical: component count does not match grid");
        SpectralField f(grid);
        for (int c = 0; c < grid->dim(); ++c) {
            f.comp_[c] = physical_to_spectral(*grid, values[c]);
            for (std::size_t idx = 0; idx < grid->total(); ++idx)
                if (!grid->in_band(idx) || grid->k2int(idx) == 0)
                    f.comp_[c][idx] = Complex(0.0, 0.0);
        }
        return f;
    }

    std::vector<std::vector<double>> to_physical() const {
        std::vector<std::vector<double>> out;
        out.reserve(comp_.size());
        for (const auto& c : comp_)
            out.push_back(spectral_to_physical(*grid_, c));
        return out;
    }

    const Grid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    int dim() const { return grid_->dim(); }
    bool divergence_free() const { return divergence_free_; }
    void set_divergence_free(bool v) { divergence_free_ = v; }

    Complex coeff(int c, std::size_t idx) const { return comp_[c][idx]; }
    void set_coeff(int c, std::size_t idx, Complex v) { comp_[c][idx] = v; }
    std::vector<Complex>& component(int c) { return comp_[c]; }
    const std::vector<Complex>& component(int c) const { return comp_[c]; }

    /// Set the Hermitian pair (k, -k) so the physical field stays real.
    void set_mode(const std::array<int, 3>& k, const std::array<Complex, 3>& amplitude) {
        std::array<int, 3> mk{-k[0], -k[1], -k[2]};
        std::size_t ik = grid_->linear_index(k);
        std::size_t imk = grid_->linear_index(mk);
        for (int c = 0; c < dim(); ++c) {
            comp_[c][ik] = amplitude[c];
            comp_[c][imk] = std::conj(amplitude[c]);
        }
    }

    void add_mode(const std::array<int, 3>& k, const std::array<Complex, 3>& amplitude) {
        std::array<int, 3> mk{-k[0], -k[1], -k[2]};
        std::size_t ik = grid_->linear_index(k);
        std::size_t imk = grid_->linear_index(mk);
        for (int c = 0; c < dim(); ++c) {
            comp_[c][ik] += amplitude[c];
            comp_[c][imk] += std::conj(amplitude[c]);
        }
    }

    SpectralField& operator+=(const SpectralField& o) {
        check_same_grid(o);
        for (int c = 0; c < dim(); ++c)
            for (std::size_t i = 0; i < comp_[c].size(); ++i)
                comp_[c][i] += o.comp_[c][i];
        divergence_free_ = divergence_free_ && o.divergence_free_;
        return *this;
    }

    SpectralField& operator-=(const SpectralField& o) {
        check_same_grid(o);
        for (int c = 0; c < dim(); ++c)
            for (std::size_t i = 0; i < comp_[c].size(); ++i)
                comp_[c][i] -= o.comp_[c][i];
        divergence_free_ = divergence_free_ && o.divergence_free_;
        return *this;
    }

    SpectralField& operator*=(double s) {
        for (auto& comp : comp_)
            for (auto& v : comp)
                v *= s;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    void check_same_grid(const SpectralField& o) const {
        if (!grid_->same_as(*o.grid_))
            throw std::invalid_argument("field: grids do not match");
    }

  private:
    GridPtr grid_;
    std::vector<std::vector<Complex>> comp_;
    bool divergence_free_ = false;
};

// --- modewise operators -------------------------------------------------

/// Helmholtz-Leray projection: uhat -> uhat - k (k.uhat)/|k|^2, k=0 zeroed.
inline SpectralField leray_project(SpectralField u) {
    const Grid& g = u.grid();
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        int k2 = g.k2int(idx);
        if (k2 == 0) {
            for (int c = 0; c < g.dim(); ++c)
                u.set_coeff(c, idx, Complex(0.0, 0.0));
            continue;
        }
        const auto& kv = g.kvec(idx);
        Complex dot(0.0, 0.0);
        for (int c = 0; c < g.dim(); ++c)
            dot += static_cast<double>(kv[c]) * u.coeff(c, idx);
        dot /= static_cast<double>(k2);
        for (int c = 0; c < g.dim(); ++c)
            u.set_coeff(c, idx, u.coeff(c, idx) - static_cast<double>(kv[c]) * dot);
    }
    u.set_divergence_free(true);
    return u;
}

/// Stokes operator A = -P Lap: multiply each mode by lambda_k.
inline SpectralField stokes_apply(SpectralField u) {
    if (!u.divergence_free())
        throw std::invalid_argument("stokes_apply: input must be divergence-free");
    const Grid& g = u.grid();
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        double lam = g.lambda(idx);
        for (int c = 0; c < g.dim(); ++c)
            u.set_coeff(c, idx, lam * u.coeff(c, idx));
    }
    return u;
}

/// Zero every coefficient outside the mode set; idempotent.
inline SpectralField galerkin_truncate(SpectralField u, const ModeSet& m) {
    const Grid& g = u.grid();
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        if (!m.contains_k2(g.k2int(idx)) || !g.in_band(idx)) {
            for (int c = 0; c < g.dim(); ++c)
                u.set_coeff(c, idx, Complex(0.0, 0.0));
        }
    }
    return u;
}

inline bool supported_in(const SpectralField& u, const ModeSet& m, double tol = 0.0) {
    const Grid& g = u.grid();
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        if (m.contains_k2(g.k2int(idx)) && g.in_band(idx))
            continue;
        for (int c = 0; c < g.dim(); ++c)
            if (std::abs(u.coeff(c, idx)) > tol)
                return false;
    }
    return true;
}

// --- inner products and norms ------------------------------------------

/// L^2(Omega) pairing via Parseval: <u,v> = L^dim sum_k uhat . conj(vhat).
inline double dot_h(const SpectralField& u, const SpectralField& v) {
    u.check_same_grid(v);
    const Grid& g = u.grid();
    double acc = 0.0;
    for (int c = 0; c < g.dim(); ++c) {
        const auto& a = u.component(c);
        const auto& b = v.component(c);
        for (std::size_t i = 0; i < a.size(); ++i)
            acc += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    }
    return g.volume() * acc;
}

enum class NormKind { H, V, Vprime, Lp };

/// Physical magnitudes |u(x)| on a padded collocation grid (quadrature grid
/// for the L^p norms and the damping diagnostics).
inline std::vector<double> pointwise_magnitude(const SpectralField& u, int pad_n) {
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
        detail::transform_axes(g, padded, pad_n, false);
        phys[c].resize(ptotal);
        for (std::size_t i = 0; i < ptotal; ++i)
            phys[c][i] = padded[i].real();
    }
    std::vector<double> mag(ptotal);
    for (std::size_t i = 0; i < ptotal; ++i) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c)
            s += phys[c][i] * phys[c][i];
        mag[i] = std::sqrt(s);
    }
    return mag;
}

inline double lp_norm_from_magnitude(const std::vector<double>& mag, double p, double box, int dim,
                                     int pad_n) {
    double cell = std::pow(box / pad_n, dim);
    double acc = 0.0;
    for (double m : mag)
        acc += std::pow(m, p);
    return std::pow(acc * cell, 1.0 / p);
}

inline double field_norm(const SpectralField& u, NormKind kind, double p = 2.0) {
    const Grid& g = u.grid();
    switch (kind) {
    case NormKind::H:
        return std::sqrt(dot_h(u, u));
    case NormKind::V: {
        double acc = 0.0;
        for (int c = 0; c < g.dim(); ++c) {
            const auto& a = u.component(c);
            for (std::size_t i = 0; i < a.size(); ++i)
                acc += g.lambda(i) * std::norm(a[i]);
        }
        return std::sqrt(g.volume() * acc);
    }
    case NormKind::Vprime: {
        double acc = 0.0;
        for (int c = 0; c < g.dim(); ++c) {
            const auto& a = u.component(c);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (g.k2int(i) > 0)
                    acc += std::norm(a[i]) / g.lambda(i);
        }
        return std::sqrt(g.volume() * acc);
    }
    case NormKind::Lp: {
        if (!(p >= 1.0))
            throw std::invalid_argument("norm: Lp exponent must be >= 1");
        int pad_n = 2 * g.n();
        auto mag = pointwise_magnitude(u, pad_n);
        return lp_norm_from_magnitude(mag, p, g.box_length(), g.dim(), pad_n);
    }
    }
    throw std::logic_error("norm: unknown kind");
}

inline double h_norm(const SpectralField& u) { return field_norm(u, NormKind::H); }
inline double v_norm(const SpectralField& u) { return field_norm(u, NormKind::V); }
inline double vprime_norm(const SpectralField& u) { return field_norm(u, NormKind::Vprime); }
inline double lp_norm(const SpectralField& u, double p) { return field_norm(u, NormKind::Lp, p); }

// --- consistency checks ---------------------------------------------------

inline double hermitian_defect(const SpectralField& u) {
    const Grid& g = u.grid();
    double worst = 0.0, scale = 0.0;
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        const auto& kv = g.kvec(idx);
        bool rep = true; // visit each +/-k pair once
        for (int d = 0; d < g.dim(); ++d) {
            if (kv[d] > 0)
                break;
            if (kv[d] < 0) {
                rep = false;
                break;
            }
        }
        if (!rep)
            continue;
        std::array<int, 3> mk{-kv[0], -kv[1], -kv[2]};
        if (std::abs(mk[0]) > g.n() / 2 - 1 || std::abs(mk[1]) > g.n() / 2 - 1 ||
            (g.dim() == 3 && std::abs(mk[2]) > g.n() / 2 - 1))
            continue;
        std::size_t imk = g.linear_index(mk);
        for (int c = 0; c < g.dim(); ++c) {
            Complex a = u.coeff(c, idx);
            Complex b = u.coeff(c, imk);
            worst = std::max(worst, std::abs(a - std::conj(b)));
            scale = std::max(scale, std::abs(a));
        }
    }
    return scale > 0.0 ? worst / scale : worst;
}

/// max_k |k . uhat(k)| / max_k |uhat(k)|.
inline double divergence_defect(const SpectralField& u) {
    const Grid& g = u.grid();
    double worst = 0.0, scale = 0.0;
    for (std::size_t idx = 0; idx < g.total(); ++idx) {
        const auto& kv = g.kvec(idx);
        Complex dot(0.0, 0.0);
        for (int c = 0; c < g.dim(); ++c) {
            Complex a = u.coeff(c, idx);
            dot += static_cast<double>(kv[c]) * a;
            scale = std::max(scale, std::abs(a));
        }
        worst = std::max(worst, std::abs(dot));
    }
    return scale > 0.0 ? worst / scale : worst;
}

} // namespace cbfed
