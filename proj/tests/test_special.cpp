#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "homodyne/numerics.hpp"
#include "homodyne/rng.hpp"
#include "homodyne/special.hpp"

using namespace homodyne;

TEST_CASE("oscillator eigenfunctions match high-precision reference values", "[special]") {
    // Reference values computed independently at 50-digit precision.
    CHECK(hermite_wavefunction(0, 0.0) == Catch::Approx(0.751125544464942).epsilon(1e-12));
    CHECK(hermite_wavefunction(1, 0.0) == 0.0);
    CHECK(hermite_wavefunction(2, 1.0) == Catch::Approx(0.32214418255673759).epsilon(1e-12));
    CHECK(hermite_wavefunction(5, 0.7) == Catch::Approx(0.32729676349851069).epsilon(1e-12));
    CHECK(hermite_wavefunction(20, 3.1) == Catch::Approx(0.33035639934976876).epsilon(1e-11));
    CHECK(hermite_wavefunction(50, 10.0) == Catch::Approx(0.33463391455873535).epsilon(1e-10));
    CHECK(hermite_wavefunction(50, 2.5) == Catch::Approx(-0.24653923927084446).epsilon(1e-10));
    CHECK(hermite_wavefunction(30, 0.0) == Catch::Approx(-0.28549139533060874).epsilon(1e-11));
}

TEST_CASE("oscillator eigenfunctions: parity and bulk evaluation", "[special]") {
    for (int n : {0, 1, 2, 5, 11}) {
        const double x = 1.37;
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        CHECK(hermite_wavefunction(n, -x) ==
              Catch::Approx(sign * hermite_wavefunction(n, x)).margin(1e-15));
    }
    const auto all = hermite_wavefunctions(25, 0.83);
    REQUIRE(all.size() == 26);
    for (int n = 0; n <= 25; ++n) {
        CHECK(all[static_cast<std::size_t>(n)] ==
              Catch::Approx(hermite_wavefunction(n, 0.83)).margin(1e-15));
    }
}

TEST_CASE("oscillator eigenfunctions are orthonormal under quadrature", "[special]") {
    const double half = 10.0;
    const int n_nodes = 4001;
    const double dx = 2.0 * half / (n_nodes - 1);
    std::vector<std::vector<double>> table(static_cast<std::size_t>(n_nodes));
    for (int k = 0; k < n_nodes; ++k) {
        table[static_cast<std::size_t>(k)] = hermite_wavefunctions(12, -half + k * dx);
    }
    std::vector<double> prod(static_cast<std::size_t>(n_nodes));
    for (int m = 0; m <= 12; ++m) {
        for (int n = m; n <= 12; ++n) {
            for (int k = 0; k < n_nodes; ++k) {
                prod[static_cast<std::size_t>(k)] =
                    table[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] *
                    table[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
            }
            const double integral = simpson_uniform(prod, dx);
            const double expected = (m == n) ? 1.0 : 0.0;
            INFO("m=" << m << " n=" << n);
            CHECK(integral == Catch::Approx(expected).margin(1e-9));
        }
    }
}

TEST_CASE("oscillator eigenfunction cap is enforced", "[special]") {
    CHECK_THROWS_AS(hermite_wavefunction(kHermiteCap + 1, 0.0), std::range_error);
    CHECK_THROWS_AS(hermite_wavefunction(-1, 0.0), std::range_error);
    CHECK_NOTHROW(hermite_wavefunction(kHermiteCap, 0.0));
}

TEST_CASE("Dawson integral matches reference values on both branches", "[special]") {
    CHECK(dawson(0.0) == 0.0);
    CHECK(dawson(0.05) == Catch::Approx(0.049916749940509244).epsilon(1e-14));
    CHECK(dawson(0.2) == Catch::Approx(0.19475103336802805).epsilon(1e-14));
    CHECK(dawson(0.5) == Catch::Approx(0.4244363835020223).epsilon(1e-14));
    CHECK(dawson(1.0) == Catch::Approx(0.53807950691276842).epsilon(1e-14));
    CHECK(dawson(2.5) == Catch::Approx(0.22308372216743548).epsilon(1e-14));
    CHECK(dawson(5.0) == Catch::Approx(0.10213407442427684).epsilon(1e-14));
    CHECK(dawson(10.0) == Catch::Approx(0.050253847187598528).epsilon(1e-14));
    CHECK(dawson(25.0) == Catch::Approx(0.020016038554466408).epsilon(1e-14));
    CHECK(dawson(-1.3) == Catch::Approx(-0.48339751738482414).epsilon(1e-14));
}

TEST_CASE("normal quantile matches reference values and inverts the CDF", "[special]") {
    CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-15));
    CHECK(normal_quantile(0.975) == Catch::Approx(1.9599639845400542).epsilon(1e-14));
    CHECK(normal_quantile(0.01) == Catch::Approx(-2.3263478740408411).epsilon(1e-14));
    CHECK(normal_quantile(0.8) == Catch::Approx(0.84162123357291421).epsilon(1e-14));
    CHECK(normal_quantile(1e-9) == Catch::Approx(-5.9978070150076869).epsilon(1e-13));
    CHECK(normal_quantile(0.3) == Catch::Approx(-0.52440051270804078).epsilon(1e-14));
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);

    auto phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
    for (double x = -3.0; x <= 3.0; x += 0.37) {
        CHECK(normal_quantile(phi(x)) == Catch::Approx(x).margin(1e-9));
    }
}

TEST_CASE("random streams are deterministic and independent of creation order", "[rng]") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RngStream c(42, 8);
    RngStream d(43, 7);
    CHECK(RngStream(42, 7).next_u64() != c.next_u64());
    CHECK(RngStream(42, 7).next_u64() != d.next_u64());
}

TEST_CASE("uniform draws lie strictly inside (0,1) with the right mean", "[rng]") {
    RngStream s(123, 0);
    KahanSum sum;
    double lo = 1.0, hi = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum.add(u);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(sum.value() / n == Catch::Approx(0.5).margin(0.002));
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("normal draws have the right first two moments", "[rng]") {
    RngStream s(99, 1);
    const int n = 200000;
    KahanSum sum, sum2;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum.add(z);
        sum2.add(z * z);
    }
    const double mean = sum.value() / n;
    const double var = sum2.value() / n - mean * mean;
    CHECK(mean == Catch::Approx(0.0).margin(0.01));
    CHECK(var == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("Poisson draws match mean and variance in both regimes", "[rng]") {
    RngStream s(7, 3);
    for (double mean : {3.7, 40.0, 1.0e6}) {
        const int n = (mean > 100.0) ? 20000 : 100000;
        KahanSum sum, sum2;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(s.poisson(mean));
            sum.add(k);
            sum2.add(k * k);
        }
        const double m = sum.value() / n;
        const double v = sum2.value() / n - m * m;
        CHECK(m == Catch::Approx(mean).epsilon(5.0 / std::sqrt(static_cast<double>(n))));
        CHECK(v == Catch::Approx(mean).epsilon(0.05));
    }
    CHECK_THROWS_AS(s.poisson(-1.0), std::domain_error);
}

TEST_CASE("numeric utilities: Simpson rule and interpolation", "[numerics]") {
    // Integral of sin on [0, pi] = 2.
    const int n = 2001;
    const double dx = std::numbers::pi / (n - 1);
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = std::sin(i * dx);
    CHECK(simpson_uniform(f, dx) == Catch::Approx(2.0).epsilon(1e-12));

    std::vector<double> line = {1.0, 3.0, 5.0};
    CHECK(lerp_uniform(line, 0.0, 1.0, 0.5) == Catch::Approx(2.0));
    CHECK(lerp_uniform(line, 0.0, 1.0, -1.0) == Catch::Approx(1.0));
    CHECK(lerp_uniform(line, 0.0, 1.0, 9.0) == Catch::Approx(5.0));
}

TEST_CASE("numeric utilities: Hermitian eigensolver", "[numerics]") {
    using cd = std::complex<double>;
    // 3x3 Hermitian matrix with known spectrum: diag(1,2,3) conjugated by a
    // unitary built from a complex rotation; spectrum must be preserved.
    std::vector<cd> a = {
        cd(2.0, 0.0),  cd(0.5, 0.25), cd(0.0, -0.3),
        cd(0.5, -0.25), cd(1.5, 0.0), cd(0.7, 0.0),
        cd(0.0, 0.3),  cd(0.7, 0.0),  cd(2.5, 0.0)};
    const auto ev = hermitian_eigenvalues(a, 3);
    REQUIRE(ev.size() == 3);
    // Trace and Frobenius norm invariants.
    CHECK(ev[0] + ev[1] + ev[2] == Catch::Approx(6.0).epsilon(1e-12));
    double frob = 0.0;
    for (const auto& z : a) frob += std::norm(z);
    CHECK(ev[0] * ev[0] + ev[1] * ev[1] + ev[2] * ev[2] == Catch::Approx(frob).epsilon(1e-12));
    CHECK(ev[0] <= ev[1]);
    CHECK(ev[1] <= ev[2]);
}
