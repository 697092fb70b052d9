#pragma once

/// Small numeric utilities shared across the library: compensated and
/// pairwise summation (for run-to-run deterministic reductions), Simpson
/// integration on uniform grids, linear interpolation, a dense linear solver
/// and radix-2 FFT for the fitting and spectral routines, and a complex-
/// Hermitian Jacobi eigensolver for the small matrices that appear in state
/// validation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "homodyne/errors.hpp"

namespace homodyne {

/// Neumaier-compensated accumulator. Summation order is fixed by call order,
/// so reductions built on it are bit-reproducible.
class KahanSum {
public:
    void add(double value) {
        double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value)) {
            comp_ += (sum_ - t) + value;
        } else {
            comp_ += (value - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Pairwise (tree) sum over a contiguous range. The reduction tree depends
/// only on the element count, giving deterministic results independent of
/// any outer processing order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        KahanSum s;
        for (double x : v) s.add(x);
        return s.value();
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Simpson's rule on a uniformly spaced grid of `n` nodes with spacing `dx`.
/// Requires n >= 2; an even node count is handled by a trapezoid on the
/// final interval.
inline double simpson_uniform(std::span<const double> f, double dx) {
    const std::size_t n = f.size();
    if (n < 2) throw std::invalid_argument("simpson_uniform: need at least 2 nodes");
    if (n == 2) return 0.5 * dx * (f[0] + f[1]);
    // Largest odd node count <= n covered by Simpson proper.
    const std::size_t m = (n % 2 == 1) ? n : n - 1;
    KahanSum s;
    s.add(f[0]);
    for (std::size_t i = 1; i + 1 < m; i += 2) s.add(4.0 * f[i]);
    for (std::size_t i = 2; i + 1 < m; i += 2) s.add(2.0 * f[i]);
    s.add(f[m - 1]);
    double result = s.value() * dx / 3.0;
    if (m != n) result += 0.5 * dx * (f[n - 2] + f[n - 1]);
    return result;
}

/// Linear interpolation of tabulated values y(x) on a uniform ascending grid
/// [x0, x0 + (n-1)*dx]. Queries outside the grid clamp to the end values.
inline double lerp_uniform(std::span<const double> y, double x0, double dx, double x) {
    if (y.empty()) throw std::invalid_argument("lerp_uniform: empty table");
    const double u = (x - x0) / dx;
    if (u <= 0.0) return y.front();
    const double last = static_cast<double>(y.size() - 1);
    if (u >= last) return y.back();
    const std::size_t i = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(i);
    return y[i] + frac * (y[i + 1] - y[i]);
}

/// Solves the dense linear system A x = b (A row-major, n x n) by Gaussian
/// elimination with partial pivoting. Intended for the small normal-equation
/// systems of the least-squares fits in this library.
inline std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, int n) {
    if (n < 1 || a.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n) ||
        b.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("solve_linear: size mismatch");
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        }
        if (std::abs(a[piv * n + col]) < 1e-300) {
            throw NumericalError("solve_linear: singular matrix");
        }
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return x;
}

/// In-place radix-2 decimation-in-time FFT. The length must be a power of
/// two; `inverse` applies the conjugate transform including the 1/n factor.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("fft_radix2: length must be a power of two");
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi /
                             static_cast<double>(len);
        const std::complex<double> w_len(std::cos(angle), std::sin(angle));
        for (std::size_t base = 0; base < n; base += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[base + k];
                const std::complex<double> v = a[base + k + len / 2] * w;
                a[base + k] = u + v;
                a[base + k + len / 2] = u - v;
                w *= w_len;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= scale;
    }
}

/// Eigenvalues of a Hermitian matrix (row-major, dim x dim) via cyclic
/// complex Jacobi rotations. Intended for the small (dim <= ~64) matrices
/// used in this library; returns eigenvalues sorted ascending.
inline std::vector<double> hermitian_eigenvalues(std::span<const std::complex<double>> a_in,
                                                 std::size_t dim) {
    if (a_in.size() != dim * dim) {
        throw std::invalid_argument("hermitian_eigenvalues: size mismatch");
    }
    std::vector<std::complex<double>> a(a_in.begin(), a_in.end());
    auto at = [&](std::size_t r, std::size_t c) -> std::complex<double>& {
        return a[r * dim + c];
    };
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < dim; ++p)
            for (std::size_t q = p + 1; q < dim; ++q) off += std::norm(at(p, q));
        if (off < 1e-28 * static_cast<double>(dim * dim)) break;
        for (std::size_t p = 0; p < dim; ++p) {
            for (std::size_t q = p + 1; q < dim; ++q) {
                const std::complex<double> apq = at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double app = at(p, p).real();
                const double aqq = at(q, q).real();
                // Rotate so the (p,q) element vanishes: diagonalize the 2x2
                // Hermitian block [[app, apq], [conj(apq), aqq]].
                const double tau = (aqq - app) / (2.0 * std::abs(apq));
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const std::complex<double> phase = apq / std::abs(apq);
                // Column/row updates: new basis e_p' = c e_p - s conj(phase) e_q,
                // e_q' = s phase e_p + c e_q.
                for (std::size_t k = 0; k < dim; ++k) {
                    const std::complex<double> akp = at(k, p);
                    const std::complex<double> akq = at(k, q);
                    at(k, p) = c * akp - s * std::conj(phase) * akq;
                    at(k, q) = s * phase * akp + c * akq;
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    const std::complex<double> apk = at(p, k);
                    const std::complex<double> aqk = at(q, k);
                    at(p, k) = c * apk - s * phase * aqk;
                    at(q, k) = s * std::conj(phase) * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(dim);
    for (std::size_t i = 0; i < dim; ++i) ev[i] = at(i, i).real();
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace homodyne
