#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cbfed {

inline constexpr double kTwoPi = 6.283185307179586476925286766559005768;

/// Model constants of the damped/pumped incompressible system
///   dv/dt - mu Lap(v) + (v.grad)v + alpha v + beta |v|^{r-1} v
///         + gamma |v|^{q-1} v + grad p = g,   div v = 0,
/// on the periodic box [0, box_length]^dim with period-T forcing.
struct PhysicalParams {
    double mu = 1.0;     ///< viscosity, > 0
    double alpha = 1.0;  ///< linear (Darcy) damping coefficient, > 0
    double beta = 1.0;   ///< absorption coefficient, > 0
    double gamma = 0.0;  ///< pumping (< 0) or extra damping (> 0)
    double r = 3.0;      ///< absorption exponent, >= 1
    double q = 1.0;      ///< secondary exponent, 1 <= q < r
    double period = 1.0; ///< forcing period T, > 0
    int dim = 2;         ///< spatial dimension, 2 or 3
    double box_length = kTwoPi;

    void validate() const {
        if (!(mu > 0.0))
            throw std::invalid_argument("params.mu must be positive");
        if (!(alpha > 0.0))
            throw std::invalid_argument("params.alpha must be positive");
        if (!(beta >= 0.0))
            throw std::invalid_argument("params.beta must be nonnegative");
        if (!(q >= 1.0))
            throw std::invalid_argument("params.q must be at least 1");
        if (!(r > q))
            throw std::invalid_argument("params: r must exceed q");
        if (!(period > 0.0))
            throw std::invalid_argument("params.period must be positive");
        if (dim != 2 && dim != 3)
            throw std::invalid_argument("params.dim must be 2 or 3");
        if (!(box_length > 0.0))
            throw std::invalid_argument("params.box_length must be positive");
    }

    /// beta = 0 is tolerated by the integrator (linear regression runs) but
    /// rejected by every formula that divides by it.
    void require_beta_positive(const std::string& who) const {
        if (!(beta > 0.0))
            throw std::invalid_argument(who + ": beta must be positive");
    }

    double volume() const { return std::pow(box_length, dim); }
};

} // namespace cbfed
