#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "permfield/errors.hpp"

namespace permfield {

/// Adaptive Gauss-Kronrod on (a,b). Throws QuadratureFailure when the
/// error estimate does not reach rel_tol (relative to the value, with an
/// absolute floor for integrals near zero).
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 double abs_floor = 1e-300) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, 15, rel_tol, &err);
    if (err > rel_tol * std::max(std::abs(v), abs_floor) && err > 1e2 * abs_floor) {
        // One retry in log coordinates; 1/t-type integrands flatten there.
        if (a > 0.0 && b > a) {
            double err2 = 0.0;
            auto g = [&](double s) {
                const double t = std::exp(s);
                return f(t) * t;
            };
            const double v2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                g, std::log(a), std::log(b), 15, rel_tol, &err2);
            if (err2 <= rel_tol * std::max(std::abs(v2), abs_floor)) return v2;
        }
        throw QuadratureFailure("quadrature did not converge to requested tolerance");
    }
    return v;
}

/// Upper truncation point T >= a such that the tail of an integrand bounded by
/// scale * t^poly_degree * exp(-decay * t) contributes less than tail_abs.
inline double truncation_point(double a, double decay, int poly_degree, double scale,
                               double tail_abs) {
    double t = std::max(a, 1.0);
    for (int i = 0; i < 400; ++i) {
        const double bound =
            scale * std::pow(t, poly_degree) * std::exp(-decay * t) / decay;
        if (bound < tail_abs) return t;
        t *= 1.25;
    }
    throw QuadratureFailure("no admissible truncation point (decay too slow?)");
}

}  // namespace permfield
