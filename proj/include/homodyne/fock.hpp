#pragma once

/// Quantum states in a truncated Fock basis: density-matrix construction,
/// the photon-loss channel, quadrature marginals, overlap/fidelity, and
/// photon statistics.
///
/// Quadrature convention (used by every module in this library):
///   x_theta = (a e^{-i theta} + a^dagger e^{+i theta}) / sqrt(2)
/// so the vacuum variance is 1/2 and a coherent state |alpha> has
///   <x_theta> = sqrt(2) |alpha| cos(theta - arg alpha).
/// In the variance-1/4 convention divide quadrature values by sqrt(2).

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "homodyne/numerics.hpp"
#include "homodyne/special.hpp"

namespace homodyne {

/// Vacuum quadrature variance fixed by the library-wide convention.
inline constexpr double kVacuumQuadratureVariance = 0.5;

/// Complex density matrix over photon numbers 0 .. dim-1. Hermitian by
/// construction; unit trace. Weight lost to basis truncation at construction
/// time is recorded in trace_deficit (the matrix itself is renormalized, and
/// the deficit is reported rather than discarded silently).
class DensityMatrix {
public:
    explicit DensityMatrix(int dim) : dim_(dim) {
        if (dim < 1) throw std::invalid_argument("DensityMatrix: dim must be >= 1");
        elements_.assign(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim),
                         {0.0, 0.0});
    }

    int dim() const { return dim_; }

    std::complex<double>& at(int m, int n) {
        return elements_[static_cast<std::size_t>(m) * static_cast<std::size_t>(dim_) +
                         static_cast<std::size_t>(n)];
    }
    const std::complex<double>& at(int m, int n) const {
        return elements_[static_cast<std::size_t>(m) * static_cast<std::size_t>(dim_) +
                         static_cast<std::size_t>(n)];
    }

    const std::vector<std::complex<double>>& elements() const { return elements_; }
    std::vector<std::complex<double>>& elements() { return elements_; }

    /// Probability weight beyond the truncation that was renormalized away
    /// when the state was built (0 for exactly representable states).
    double trace_deficit() const { return trace_deficit_; }
    void set_trace_deficit(double d) { trace_deficit_ = d; }

    /// Construction notes (e.g. truncation warnings); informational only.
    const std::vector<std::string>& notes() const { return notes_; }
    void add_note(std::string note) { notes_.push_back(std::move(note)); }

private:
    int dim_;
    std::vector<std::complex<double>> elements_;
    double trace_deficit_ = 0.0;
    std::vector<std::string> notes_;
};

inline double trace_of(const DensityMatrix& rho) {
    KahanSum t;
    for (int n = 0; n < rho.dim(); ++n) t.add(rho.at(n, n).real());
    return t.value();
}

/// Forces exact Hermitian symmetry (used after elementwise construction).
inline void hermitize(DensityMatrix& rho) {
    for (int m = 0; m < rho.dim(); ++m) {
        rho.at(m, m) = {rho.at(m, m).real(), 0.0};
        for (int n = m + 1; n < rho.dim(); ++n) {
            const std::complex<double> avg = 0.5 * (rho.at(m, n) + std::conj(rho.at(n, m)));
            rho.at(m, n) = avg;
            rho.at(n, m) = std::conj(avg);
        }
    }
}

/// Pure photon-number state |n><n|.
inline DensityMatrix fock_density_matrix(int n, int dim) {
    if (n < 0) throw std::range_error("fock_density_matrix: negative photon number");
    if (n >= dim) throw std::range_error("fock_density_matrix: photon number exceeds truncation");
    DensityMatrix rho(dim);
    rho.at(n, n) = {1.0, 0.0};
    return rho;
}

inline DensityMatrix vacuum_density_matrix(int dim) { return fock_density_matrix(0, dim); }

/// Coherent state |alpha><alpha| truncated to dim photon numbers. The
/// truncated tail weight is recorded as trace_deficit and the matrix is
/// renormalized to unit trace.
inline DensityMatrix coherent_density_matrix(std::complex<double> alpha, int dim) {
    if (dim < 1) throw std::invalid_argument("coherent_density_matrix: dim must be >= 1");
    const double a2 = std::norm(alpha);
    DensityMatrix rho(dim);
    std::vector<std::complex<double>> c(static_cast<std::size_t>(dim));
    if (a2 == 0.0) {
        c[0] = 1.0;
    } else {
        const double log_abs_alpha = 0.5 * std::log(a2);
        const double phase = std::arg(alpha);
        for (int n = 0; n < dim; ++n) {
            // |c_n| in log space to stay finite for large n; phase n*arg(alpha).
            const double log_mag =
                -0.5 * a2 + n * log_abs_alpha - 0.5 * std::lgamma(static_cast<double>(n) + 1.0);
            c[static_cast<std::size_t>(n)] = std::polar(std::exp(log_mag), phase * n);
        }
    }
    KahanSum norm_sum;
    for (int n = 0; n < dim; ++n) norm_sum.add(std::norm(c[static_cast<std::size_t>(n)]));
    const double kept = norm_sum.value();
    const double deficit = 1.0 - kept;
    const double scale = 1.0 / std::sqrt(kept);
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            rho.at(m, n) = (c[static_cast<std::size_t>(m)] * scale) *
                           std::conj(c[static_cast<std::size_t>(n)] * scale);
        }
    }
    rho.set_trace_deficit(deficit);
    if (a2 > 0.5 * dim) {
        rho.add_note("coherent amplitude is large for this truncation (|alpha|^2 > dim/2); "
                     "tail weight " + std::to_string(deficit) + " was renormalized");
    }
    return rho;
}

/// Photon-loss channel with transmissivity eta (beamsplitter-admixed vacuum):
///   rho'_{m,n} = sum_k sqrt(C(m+k,k) C(n+k,k)) eta^{(m+n)/2} (1-eta)^k rho_{m+k,n+k}.
/// Trace-preserving; coherent states map to coherent states of amplitude
/// sqrt(eta) alpha.
inline DensityMatrix apply_loss(const DensityMatrix& rho, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::domain_error("apply_loss: efficiency must lie in [0,1]");
    }
    const int dim = rho.dim();
    if (eta == 1.0) return rho;
    DensityMatrix out(dim);
    out.set_trace_deficit(rho.trace_deficit());
    if (eta == 0.0) {
        out.at(0, 0) = {trace_of(rho), 0.0};
        return out;
    }
    const double log_eta = std::log(eta);
    const double log_one_minus = std::log1p(-eta);
    auto log_binom = [](int n, int k) {
        return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    };
    for (int m = 0; m < dim; ++m) {
        for (int n = m; n < dim; ++n) {
            std::complex<double> acc{0.0, 0.0};
            for (int k = 0; m + k < dim && n + k < dim; ++k) {
                const double log_coeff = 0.5 * (log_binom(m + k, k) + log_binom(n + k, k)) +
                                         0.5 * (m + n) * log_eta + k * log_one_minus;
                acc += std::exp(log_coeff) * rho.at(m + k, n + k);
            }
            out.at(m, n) = acc;
            out.at(n, m) = std::conj(acc);
        }
    }
    hermitize(out);
    return out;
}

/// Quadrature probability density pr(x, theta) of the state:
///   pr = sum_{m,n} rho_{mn} e^{-i(m-n) theta} psi_m(x) psi_n(x),
/// evaluated through its banded form. Tiny negative values from roundoff
/// are clamped to zero.
inline double marginal_density(const DensityMatrix& rho, double theta, double x) {
    const int dim = rho.dim();
    const auto psi = hermite_wavefunctions(dim - 1, x);
    // C_d = sum_n rho_{n+d,n} psi_{n+d} psi_n; pr = C_0 + 2 sum_d Re(e^{-i d theta} C_d).
    double value = 0.0;
    for (int n = 0; n < dim; ++n) {
        value += rho.at(n, n).real() * psi[static_cast<std::size_t>(n)] *
                 psi[static_cast<std::size_t>(n)];
    }
    const std::complex<double> rot = std::polar(1.0, -theta);
    std::complex<double> rot_d = rot;
    for (int d = 1; d < dim; ++d) {
        std::complex<double> band{0.0, 0.0};
        for (int n = 0; n + d < dim; ++n) {
            band += rho.at(n + d, n) * (psi[static_cast<std::size_t>(n + d)] *
                                        psi[static_cast<std::size_t>(n)]);
        }
        value += 2.0 * (rot_d * band).real();
        rot_d *= rot;
    }
    if (value < 0.0) {
        if (value < -1e-7) {
            throw std::domain_error("marginal_density: density significantly negative; "
                                    "the state is not physical");
        }
        value = 0.0;
    }
    return value;
}

/// <a> = sum_m sqrt(m) rho_{m,m-1}; for a coherent state this is alpha.
inline std::complex<double> coherent_amplitude(const DensityMatrix& rho) {
    std::complex<double> acc{0.0, 0.0};
    for (int m = 1; m < rho.dim(); ++m) {
        acc += std::sqrt(static_cast<double>(m)) * rho.at(m, m - 1);
    }
    return acc;
}

/// Mean quadrature <x_theta> = sqrt(2) Re(<a> e^{-i theta}).
inline double marginal_mean(const DensityMatrix& rho, double theta) {
    return std::numbers::sqrt2 * (coherent_amplitude(rho) * std::polar(1.0, -theta)).real();
}

/// F = <alpha| rho |alpha>. Imaginary residue below 1e-9 is discarded.
inline double fidelity_with_coherent(const DensityMatrix& rho, std::complex<double> alpha) {
    const int dim = rho.dim();
    const double a2 = std::norm(alpha);
    std::vector<std::complex<double>> c(static_cast<std::size_t>(dim));
    if (a2 == 0.0) {
        c[0] = 1.0;
    } else {
        const double log_abs_alpha = 0.5 * std::log(a2);
        const double phase = std::arg(alpha);
        for (int n = 0; n < dim; ++n) {
            const double log_mag =
                -0.5 * a2 + n * log_abs_alpha - 0.5 * std::lgamma(static_cast<double>(n) + 1.0);
            c[static_cast<std::size_t>(n)] = std::polar(std::exp(log_mag), phase * n);
        }
    }
    std::complex<double> acc{0.0, 0.0};
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            acc += std::conj(c[static_cast<std::size_t>(m)]) * rho.at(m, n) *
                   c[static_cast<std::size_t>(n)];
        }
    }
    return acc.real();
}

inline double mean_photon_number(const DensityMatrix& rho) {
    KahanSum acc;
    for (int n = 0; n < rho.dim(); ++n) acc.add(n * rho.at(n, n).real());
    return acc.value();
}

/// Diagonal of the density matrix: p(n), summing to the trace.
inline std::vector<double> photon_number_distribution(const DensityMatrix& rho) {
    std::vector<double> p(static_cast<std::size_t>(rho.dim()));
    for (int n = 0; n < rho.dim(); ++n) p[static_cast<std::size_t>(n)] = rho.at(n, n).real();
    return p;
}

/// Smallest eigenvalue (positivity diagnostic for constructed states).
inline double min_eigenvalue(const DensityMatrix& rho) {
    const auto ev = hermitian_eigenvalues(rho.elements(), static_cast<std::size_t>(rho.dim()));
    return ev.front();
}

}  // namespace homodyne
