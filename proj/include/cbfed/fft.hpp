#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cbfed {

using Complex = std::complex<double>;

/// In-place complex FFT for sizes n = 2^a or n = 3*2^a.
///
/// forward() applies the unnormalized DFT with kernel e^{-2pi i jk/n};
/// inverse() applies the unnormalized conjugate transform.  A plan is
/// immutable after construction and safe to share between threads.
class Fft {
  public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0)
            throw std::invalid_argument("Fft: size must be positive");
        std::size_t m = n;
        while (m % 2 == 0)
            m /= 2;
        if (m == 3) {
            radix3_ = true;
            m2_ = n / 3;
        } else if (m == 1) {
            radix3_ = false;
            m2_ = n;
        } else {
            throw std::invalid_argument("Fft: size must be 2^a or 3*2^a");
        }
        twiddle_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            double ang = -2.0 * pi_ * static_cast<double>(j) / static_cast<double>(n_);
            twiddle_[j] = Complex(std::cos(ang), std::sin(ang));
        }
        bitrev_.resize(m2_);
        std::size_t log2m = 0;
        while ((std::size_t(1) << log2m) < m2_)
            ++log2m;
        for (std::size_t i = 0; i < m2_; ++i) {
            std::size_t rev = 0;
            for (std::size_t b = 0; b < log2m; ++b)
                if (i & (std::size_t(1) << b))
                    rev |= std::size_t(1) << (log2m - 1 - b);
            bitrev_[i] = rev;
        }
    }

    std::size_t size() const { return n_; }

    void forward(Complex* data) const { run(data, false); }
    void inverse(Complex* data) const { run(data, true); }

  private:
    static constexpr double pi_ = 3.141592653589793238462643383279502884;

    void run(Complex* data, bool conj) const {
        if (n_ == 1)
            return;
        if (!radix3_) {
            pow2(data, n_, 1, conj);
            return;
        }
        // Decimation in time by 3: three power-of-two sub-transforms
        // recombined with length-n twiddles.
        std::vector<Complex> sub(n_);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t j = 0; j < m2_; ++j)
                sub[r * m2_ + j] = data[3 * j + r];
        for (std::size_t r = 0; r < 3; ++r)
            pow2(&sub[r * m2_], m2_, n_ / m2_, conj);
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t s = k % m2_;
            Complex w1 = tw(k, conj);
            Complex w2 = tw((2 * k) % n_, conj);
            data[k] = sub[s] + w1 * sub[m2_ + s] + w2 * sub[2 * m2_ + s];
        }
    }

    Complex tw(std::size_t j, bool conj) const {
        Complex w = twiddle_[j];
        return conj ? std::conj(w) : w;
    }

    // Iterative radix-2 on a length-m slice; twiddles are strided out of the
    // length-n table (stride = n/m * extra).
    void pow2(Complex* a, std::size_t m, std::size_t table_stride, bool conj) const {
        if (m == 1)
            return;
        if (m == m2_) {
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t j = bitrev_[i];
                if (i < j)
                    std::swap(a[i], a[j]);
            }
        } else {
            // Only the precomputed size is ever used in practice.
            throw std::logic_error("Fft: internal size mismatch");
        }
        for (std::size_t len = 2; len <= m; len <<= 1) {
            std::size_t half = len / 2;
            std::size_t step = (m / len) * table_stride;
            for (std::size_t base = 0; base < m; base += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    Complex w = tw(j * step, conj);
                    Complex u = a[base + j];
                    Complex v = a[base + j + half] * w;
                    a[base + j] = u + v;
                    a[base + j + half] = u - v;
                }
            }
        }
    }

    std::size_t n_;
    std::size_t m2_;
    bool radix3_ = false;
    std::vector<Complex> twiddle_;
    std::vector<std::size_t> bitrev_;
};

} // namespace cbfed
