#pragma once

/// Scalar special functions: harmonic-oscillator eigenfunctions (Hermite
/// functions), the Dawson integral, and the standard-normal quantile.
/// Everything here is pure and allocation-free unless stated otherwise.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace homodyne {

/// Largest photon number accepted by the oscillator-eigenfunction routines.
inline constexpr int kHermiteCap = 64;

/// pi^(-1/4), the ground-state peak value.
inline constexpr double kQuarticRootPiInv = 0.7511255444649425;

namespace detail {

/// Fills out[0..nmax] with the normalized oscillator eigenfunctions
/// psi_n(x) = pi^(-1/4) (2^n n!)^(-1/2) H_n(x) exp(-x^2/2) via the stable
/// three-term recurrence on the normalized functions themselves:
///   psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}.
inline void hermite_all(int nmax, double x, std::span<double> out) {
    const double psi0 = kQuarticRootPiInv * std::exp(-0.5 * x * x);
    out[0] = psi0;
    if (nmax == 0) return;
    out[1] = std::numbers::sqrt2 * x * psi0;
    for (int n = 1; n < nmax; ++n) {
        const double np1 = static_cast<double>(n + 1);
        out[n + 1] = std::sqrt(2.0 / np1) * x * out[n] -
                     std::sqrt(static_cast<double>(n) / np1) * out[n - 1];
    }
}

}  // namespace detail

/// Normalized harmonic-oscillator eigenfunction psi_n(x). Stable for all
/// supported n (raw Hermite polynomials are never formed).
inline double hermite_wavefunction(int n, double x) {
    if (n < 0 || n > kHermiteCap) {
        throw std::range_error("hermite_wavefunction: photon number out of supported range");
    }
    std::array<double, kHermiteCap + 1> buf;
    detail::hermite_all(n, x, std::span<double>(buf.data(), static_cast<std::size_t>(n) + 1));
    return buf[static_cast<std::size_t>(n)];
}

/// psi_0(x) .. psi_nmax(x) in one pass (the common bulk-evaluation path).
inline std::vector<double> hermite_wavefunctions(int nmax, double x) {
    if (nmax < 0 || nmax > kHermiteCap) {
        throw std::range_error("hermite_wavefunctions: photon number out of supported range");
    }
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1);
    detail::hermite_all(nmax, x, out);
    return out;
}

/// Dawson integral F(x) = exp(-x^2) * Int_0^x exp(t^2) dt, computed by
/// Rybicki's sampled-Gaussian expansion (step h = 0.25, truncated where the
/// terms fall below double precision) with a Maclaurin series near zero.
/// Absolute accuracy ~1e-16 over the whole real line.
inline double dawson(double x) {
    constexpr double h = 0.25;
    constexpr int n_terms = 13;  // exp(-((2*13)*h)^2) ~ 4e-19
    const double ax = std::abs(x);
    if (ax < 0.2) {
        // F(x) = sum_k (-2)^k x^(2k+1) / (2k+1)!!
        const double x2 = x * x;
        double term = x;
        double sum = x;
        for (int k = 0; k < 12; ++k) {
            term *= -2.0 * x2 / static_cast<double>(2 * k + 3);
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    // exp(-(2i+1)^2 h^2), i = 0..n_terms-1.
    static const std::array<double, n_terms> gauss_table = [] {
        std::array<double, n_terms> t{};
        for (int i = 0; i < n_terms; ++i) {
            const double m = (2.0 * i + 1.0) * h;
            t[static_cast<std::size_t>(i)] = std::exp(-m * m);
        }
        return t;
    }();
    const long long n0 = 2 * std::llround(0.5 * ax / h);
    const double xp = ax - static_cast<double>(n0) * h;
    const double expxp = std::exp(-xp * xp);
    const double u = std::exp(2.0 * xp * h);     // |2*xp*h| <= h^2*... bounded
    const double u2 = u * u;
    double up = u;
    double dn = 1.0 / u;
    double sum = 0.0;
    for (int i = 0; i < n_terms; ++i) {
        const double m = 2.0 * i + 1.0;
        sum += gauss_table[static_cast<std::size_t>(i)] *
               (up / (static_cast<double>(n0) + m) + dn / (static_cast<double>(n0) - m));
        up *= u2;
        dn /= u2;
    }
    const double out = expxp * sum * std::numbers::inv_sqrtpi;
    return x >= 0.0 ? out : -out;
}

/// Standard-normal quantile (inverse CDF), Wichura's algorithm AS 241
/// (PPND16 variant), |error| < 1e-15 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie strictly inside (0,1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return (q < 0.0) ? -value : value;
}

}  // namespace homodyne
