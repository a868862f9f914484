#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cube_set.hpp"
#include "incidence.hpp"
#include "tube_set.hpp"

namespace furstlab {

// High-low frequency decomposition of the tube sum. The union of smoothed
// tube indicators is sampled on a torus grid over [-2, 3)^2 at resolution
// delta (side N = 5 * 2^n), transformed, and split at frequency radius
// ~ (S delta)^{-1}. The high-frequency energy is compared against the
// S delta |T| prediction, and the low part is re-counted combinatorially as
// an incidence problem at the coarser scale S delta.

namespace detail {

/// Raised-cosine bump: 1 on |t| <= 3, cos^2 taper to 0 at |t| = 4.
inline double taper_q(double t) {
    double a = std::fabs(t);
    if (a <= 3.0) return 1.0;
    if (a >= 4.0) return 0.0;
    double c = std::cos(std::numbers::pi * (a - 3.0) / 2.0);
    return c * c;
}

inline void fft_rec(std::complex<double>* a, long long n, std::complex<double>* scratch) {
    if (n <= 1) return;
    if (n % 2 == 1) {
        // naive DFT for the odd base length (5 here)
        for (long long k = 0; k < n; ++k) {
            std::complex<double> s = 0;
            for (long long j = 0; j < n; ++j)
                s += a[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(j * k) / double(n));
            scratch[k] = s;
        }
        for (long long k = 0; k < n; ++k) a[k] = scratch[k];
        return;
    }
    long long h = n / 2;
    for (long long i = 0; i < h; ++i) {
        scratch[i] = a[2 * i];
        scratch[h + i] = a[2 * i + 1];
    }
    fft_rec(scratch, h, a);
    fft_rec(scratch + h, h, a);
    for (long long k = 0; k < h; ++k) {
        std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi * double(k) / double(n));
        std::complex<double> e = scratch[k], o = w * scratch[h + k];
        a[k] = e + o;
        a[k + h] = e - o;
    }
}

/// In-place 2D FFT of a row-major N x N field (rows, transpose, rows).
inline void fft2(std::vector<std::complex<double>>& f, long long N) {
    std::vector<std::complex<double>> scratch(N);
    for (long long r = 0; r < N; ++r) fft_rec(f.data() + r * N, N, scratch.data());
    for (long long i = 0; i < N; ++i)
        for (long long j = i + 1; j < N; ++j) std::swap(f[i * N + j], f[j * N + i]);
    for (long long r = 0; r < N; ++r) fft_rec(f.data() + r * N, N, scratch.data());
}

} // namespace detail

/// Squared L2 norm of one smoothed tube indicator, exact closed form:
/// the profile is a product of two raised-cosine bumps with horizontal
/// du = 0.5 dx and vertical dv = 3 delta dy, each bump having integral
/// squared 27/4.
inline double tube_profile_l2_sq(Scale delta) {
    return (27.0 / 4.0) * (27.0 / 4.0) * 0.5 * 3.0 * delta.value();
}

struct HighLowReport {
    long long S = 0;
    double eps = 0;
    double total_incidence = 0;   // exact weighted count at scale delta
    double low_incidence = 0;     // exact weighted count at scale S delta
    double low_term = 0;          // S^{-1+eps} * low_incidence
    double high_energy = 0;       // L2^2 of the high-frequency tube sum
    double bound_high = 0;        // sqrt(S delta^{-1} |T| sum w^2)
    double energy_ratio = 0;      // high_energy / (S delta |T|)
    double parseval_rel_error = 0;
    long long tube_total_mult = 0;
    double fitted_constant = 0;   // total / (bound_high + low_term)
};

/// Run the full decomposition. S must be a power of two in [2, 2^n].
inline HighLowReport highlow_decompose(const CubeSet& P, const TubeSet& tubes, long long S,
                                       double eps) {
    if (P.scale().n != tubes.scale().n)
        throw std::invalid_argument("highlow_decompose: P and tubes must share a scale");
    int n = P.scale().n;
    if (S < 2 || S > (1LL << n) || (S & (S - 1)) != 0)
        throw std::invalid_argument("highlow_decompose: S must be a power of two in [2, 2^n]");

    HighLowReport rep;
    rep.S = S;
    rep.eps = eps;
    rep.tube_total_mult = tubes.total_mult();
    double delta = P.scale().value();

    rep.total_incidence = incidence_exact(P, tubes, P.scale(), Rat(6)).total;
    int sk = 0;
    while ((1LL << sk) < S) ++sk;
    Scale coarse(n - sk);
    TubeSet coarse_tubes = tubes.parent_set(coarse);
    rep.low_incidence = incidence_exact(P, coarse_tubes, coarse, Rat(6)).total;
    rep.low_term = std::pow(double(S), -1.0 + eps) * rep.low_incidence;
    rep.bound_high =
        std::sqrt(double(S) / delta * double(rep.tube_total_mult) * P.sum_weight_sq());

    // sample the smoothed tube sum on the [-2, 3)^2 torus grid
    long long N = 5LL << n;
    std::vector<std::complex<double>> field((size_t)(N * N));
    std::vector<long long> cols;  // columns where the horizontal taper is nonzero
    std::vector<double> qcol;
    for (long long i = 0; i < N; ++i) {
        double x = (double(i) + 0.5) * delta - 2.0;
        double qu = detail::taper_q((x - 0.5) / 0.5);
        if (qu > 0) { cols.push_back(i); qcol.push_back(qu); }
    }

    const auto& entries = tubes.entries();
    size_t a = 0;
    std::vector<long long> r0(cols.size());
    std::vector<std::vector<double>> prof(cols.size());
    while (a < entries.size()) {
        size_t b = a;
        long long ia = entries[a].ia;
        while (b < entries.size() && entries[b].ia == ia) ++b;
        // per-column vertical profile relative to the intercept index
        for (size_t c = 0; c < cols.size(); ++c) {
            double x = (double(cols[c]) + 0.5) * delta - 2.0;
            double base = (double(ia) + 0.5) * delta * x;  // spine minus intercept
            // rows j = ib + r with |(r delta - 2 - base) / (3 delta)| < 4
            long long rlo = (long long)std::floor((2.0 + base) / delta - 12.0);
            long long rhi = (long long)std::ceil((2.0 + base) / delta + 12.0);
            r0[c] = rlo;
            auto& pv = prof[c];
            pv.assign((size_t)(rhi - rlo + 1), 0.0);
            for (long long r = rlo; r <= rhi; ++r) {
                double v = (double(r) * delta - 2.0 - base) / (3.0 * delta);
                pv[(size_t)(r - rlo)] = qcol[c] * detail::taper_q(v);
            }
        }
        for (size_t e = a; e < b; ++e) {
            double m = double(entries[e].mult);
            for (size_t c = 0; c < cols.size(); ++c) {
                long long j = ((entries[e].ib + r0[c]) % N + N) % N;
                std::complex<double>* colp = field.data() + cols[c] * N;
                for (size_t t = 0; t < prof[c].size(); ++t) {
                    colp[j] += m * prof[c][t];
                    if (++j == N) j = 0;
                }
            }
        }
        a = b;
    }

    double direct_energy = 0;
    for (const auto& z : field) direct_energy += std::norm(z);

    detail::fft2(field, N);

    double R = 5.0 * std::pow(double(S), -1.0 + eps / 2.0) * std::exp2(double(n));
    double hat_energy = 0, high = 0;
    for (long long k1 = 0; k1 < N; ++k1) {
        long long f1 = k1 <= N / 2 ? k1 : k1 - N;
        for (long long k2 = 0; k2 < N; ++k2) {
            long long f2 = k2 <= N / 2 ? k2 : k2 - N;
            double e = std::norm(field[(size_t)(k1 * N + k2)]);
            hat_energy += e;
            double m = std::sqrt(double(f1 * f1 + f2 * f2));
            double w;  // low-pass weight, cos^2 rolloff over the last unit
            if (m <= R - 1.0) w = 1.0;
            else if (m >= R) w = 0.0;
            else {
                double c = std::cos(std::numbers::pi * (m - R + 1.0) / 2.0);
                w = c * c;
            }
            high += e * (1.0 - w) * (1.0 - w);
        }
    }
    double cell = delta * delta / double(N * N);
    rep.high_energy = high * cell;
    rep.parseval_rel_error =
        direct_energy > 0 ? std::fabs(hat_energy / double(N * N) - direct_energy) / direct_energy
                          : 0.0;
    rep.energy_ratio = rep.high_energy / (double(S) * delta * double(rep.tube_total_mult));
    rep.fitted_constant = rep.total_incidence / (rep.bound_high + rep.low_term);
    return rep;
}

} // namespace furstlab
