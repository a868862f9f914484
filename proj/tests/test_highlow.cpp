#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <furstlab/furstlab.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

using namespace furstlab;

namespace {

std::vector<std::complex<double>> dft_naive(const std::vector<std::complex<double>>& a) {
    size_t n = a.size();
    std::vector<std::complex<double>> out(n);
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0;
        for (size_t j = 0; j < n; ++j)
            s += a[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(j * k) / double(n));
        out[k] = s;
    }
    return out;
}

} // namespace

TEST_CASE("taper profile values") {
    CHECK(detail::taper_q(0.0) == 1.0);
    CHECK(detail::taper_q(-2.9) == 1.0);
    CHECK(detail::taper_q(3.0) == 1.0);
    CHECK(detail::taper_q(3.5) == doctest::Approx(0.5));
    CHECK(detail::taper_q(4.0) == 0.0);
    CHECK(detail::taper_q(-5.0) == 0.0);
}

TEST_CASE("closed form of the smoothed profile energy") {
    // Simpson quadrature of q^2 over one axis must give 27/4
    auto q2 = [](double t) { double v = detail::taper_q(t); return v * v; };
    int steps = 4000;
    double h = 8.0 / steps, sum = q2(-4.0) + q2(4.0);
    for (int i = 1; i < steps; ++i) sum += (i % 2 ? 4.0 : 2.0) * q2(-4.0 + i * h);
    double integral = sum * h / 3.0;
    CHECK(integral == doctest::Approx(27.0 / 4.0).epsilon(1e-8));

    // horizontal stretch 1/2, vertical stretch 3 delta
    double expect = integral * 0.5 * integral * 3.0 * Scale(6).value();
    CHECK(tube_profile_l2_sq(Scale(6)) == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("fft agrees with the naive transform at mixed radix lengths") {
    std::mt19937_64 rng(301);
    for (long long n : {5LL, 10LL, 20LL, 40LL}) {
        std::vector<std::complex<double>> a((size_t)n), scratch((size_t)n);
        for (auto& z : a)
            z = {double(rng() % 1000) / 500.0 - 1.0, double(rng() % 1000) / 500.0 - 1.0};
        std::vector<std::complex<double>> want = dft_naive(a);
        detail::fft_rec(a.data(), n, scratch.data());
        for (size_t k = 0; k < (size_t)n; ++k) {
            CHECK(a[k].real() == doctest::Approx(want[k].real()).epsilon(1e-9));
            CHECK(a[k].imag() == doctest::Approx(want[k].imag()).epsilon(1e-9));
        }
    }

    // impulse transforms to the flat spectrum
    std::vector<std::complex<double>> e(10, 0.0), scratch(10);
    e[0] = 1.0;
    detail::fft_rec(e.data(), 10, scratch.data());
    for (const auto& z : e) CHECK(std::abs(z - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("2d fft satisfies parseval on random fields") {
    std::mt19937_64 rng(307);
    long long N = 10;
    std::vector<std::complex<double>> f((size_t)(N * N));
    double direct = 0;
    for (auto& z : f) {
        z = {double(rng() % 1000) / 500.0 - 1.0, 0.0};
        direct += std::norm(z);
    }
    std::vector<std::complex<double>> g = f;
    detail::fft2(g, N);
    double hat = 0;
    for (const auto& z : g) hat += std::norm(z);
    CHECK(hat / double(N * N) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("single tube decomposition stays under the profile energy") {
    CubeSet P(Scale(5), {{0, 0, 1, 1.0}});
    TubeSet one(Scale(5), TubeMode::distinct, {{0, 0, 1}});
    HighLowReport rep = highlow_decompose(P, one, 4, 0.0);
    CHECK(rep.parseval_rel_error < 1e-10);
    CHECK(rep.high_energy >= 0.0);
    // the high part of a single smoothed tube cannot exceed its total energy
    // (2% slack for the delta-step Riemann sampling)
    CHECK(rep.high_energy <= tube_profile_l2_sq(Scale(5)) * 1.02);
}

TEST_CASE("coarser split moves more energy into the high part") {
    NiceConfiguration cfg = grid_example(Scale(5), 1.0, 1.0);
    HighLowReport r2 = highlow_decompose(cfg.P, cfg.tubes, 2, 0.1);
    HighLowReport r8 = highlow_decompose(cfg.P, cfg.tubes, 8, 0.1);
    HighLowReport r32 = highlow_decompose(cfg.P, cfg.tubes, 32, 0.1);
    CHECK(r2.parseval_rel_error < 1e-10);
    CHECK(r2.high_energy <= r8.high_energy);
    CHECK(r8.high_energy <= r32.high_energy);
}

TEST_CASE("report fields are internally consistent") {
    NiceConfiguration cfg = grid_example(Scale(5), 0.5, 1.0);
    long long S = 4;
    double eps = 0.05;
    HighLowReport rep = highlow_decompose(cfg.P, cfg.tubes, S, eps);

    IncidenceResult tot = incidence_exact(cfg.P, cfg.tubes, Scale(5), Rat(6));
    CHECK(rep.total_incidence == tot.total);

    TubeSet coarse = cfg.tubes.parent_set(Scale(3));
    IncidenceResult low = incidence_exact(cfg.P, coarse, Scale(3), Rat(6));
    CHECK(rep.low_incidence == low.total);
    CHECK(rep.low_term == doctest::Approx(std::pow(4.0, -0.95) * low.total));

    double want_bound = std::sqrt(double(S) / Scale(5).value() *
                                  double(cfg.tubes.total_mult()) * cfg.P.sum_weight_sq());
    CHECK(rep.bound_high == doctest::Approx(want_bound));
    CHECK(rep.fitted_constant ==
          doctest::Approx(rep.total_incidence / (rep.bound_high + rep.low_term)));
    CHECK(rep.energy_ratio ==
          doctest::Approx(rep.high_energy /
                          (double(S) * Scale(5).value() * double(cfg.tubes.total_mult()))));
    CHECK(rep.tube_total_mult == cfg.tubes.total_mult());
}

TEST_CASE("split parameter validation") {
    CubeSet P(Scale(4), {{0, 0, 1, 1.0}});
    TubeSet T(Scale(4), TubeMode::distinct, {{0, 0, 1}});
    CHECK_THROWS(highlow_decompose(P, T, 3, 0.0));   // not a power of two
    CHECK_THROWS(highlow_decompose(P, T, 1, 0.0));   // below 2
    CHECK_THROWS(highlow_decompose(P, T, 32, 0.0));  // above 2^n
    TubeSet T5(Scale(5), TubeMode::distinct, {{0, 0, 1}});
    CHECK_THROWS(highlow_decompose(P, T5, 4, 0.0));  // scale mismatch
}
