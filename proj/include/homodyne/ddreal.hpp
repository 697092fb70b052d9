#pragma once

#include <cmath>

namespace homodyne {

/// Extended-precision scalar held as an unevaluated sum of two doubles,
/// giving roughly 31 significant decimal digits. Used where a recurrence
/// amplifies seed roundoff far beyond double precision; only the small set
/// of operations needed for that is provided.
struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;

    constexpr DoubleDouble() = default;
    constexpr DoubleDouble(double h) : hi(h) {}
    constexpr DoubleDouble(double h, double l) : hi(h), lo(l) {}

    /// Nearest double.
    double value() const { return hi + lo; }
};

namespace detail {

/// Error-free transform: hi + lo == a + b exactly.
inline DoubleDouble two_sum(double a, double b) {
    const double s = a + b;
    const double t = s - a;
    return {s, (a - (s - t)) + (b - t)};
}

/// two_sum shortcut valid when |a| >= |b|.
inline DoubleDouble fast_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

/// Error-free transform: hi + lo == a * b exactly (Veltkamp splitting).
inline DoubleDouble two_prod(double a, double b) {
    constexpr double kSplit = 134217729.0;  // 2^27 + 1
    const double p = a * b;
    const double ca = kSplit * a;
    const double a_hi = ca - (ca - a);
    const double a_lo = a - a_hi;
    const double cb = kSplit * b;
    const double b_hi = cb - (cb - b);
    const double b_lo = b - b_hi;
    return {p, ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo};
}

}  // namespace detail

/// Sum accurate to the full double-double precision even under cancellation.
inline DoubleDouble operator+(DoubleDouble a, DoubleDouble b) {
    DoubleDouble s = detail::two_sum(a.hi, b.hi);
    const DoubleDouble t = detail::two_sum(a.lo, b.lo);
    s = detail::fast_two_sum(s.hi, s.lo + t.hi);
    return detail::fast_two_sum(s.hi, s.lo + t.lo);
}

inline DoubleDouble operator-(DoubleDouble a) { return {-a.hi, -a.lo}; }

inline DoubleDouble operator-(DoubleDouble a, DoubleDouble b) { return a + (-b); }

inline DoubleDouble operator*(DoubleDouble a, DoubleDouble b) {
    const DoubleDouble p = detail::two_prod(a.hi, b.hi);
    return detail::fast_two_sum(p.hi, p.lo + (a.hi * b.lo + a.lo * b.hi));
}

inline DoubleDouble operator+(DoubleDouble a, double b) { return a + DoubleDouble(b); }
inline DoubleDouble operator-(DoubleDouble a, double b) { return a - DoubleDouble(b); }
inline DoubleDouble operator*(DoubleDouble a, double b) { return a * DoubleDouble(b); }
inline DoubleDouble operator*(double a, DoubleDouble b) { return DoubleDouble(a) * b; }

/// Quotient by a double, accurate to double-double precision.
inline DoubleDouble operator/(DoubleDouble a, double b) {
    const double q = a.hi / b;
    const DoubleDouble r = a - detail::two_prod(q, b);
    return detail::fast_two_sum(q, (r.hi + r.lo) / b);
}

/// Quotient of two doubles, accurate to double-double precision.
inline DoubleDouble dd_div(double a, double b) {
    return DoubleDouble(a) / b;
}

/// Square root accurate to double-double precision (one Newton refinement of
/// the double result).
inline DoubleDouble dd_sqrt(DoubleDouble a) {
    const double s = std::sqrt(a.hi);
    const DoubleDouble r = a - detail::two_prod(s, s);
    return detail::fast_two_sum(s, (r.hi + r.lo) / (2.0 * s));
}

}  // namespace homodyne
