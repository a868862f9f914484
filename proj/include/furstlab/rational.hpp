#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace furstlab {

/// Exact rational on 64-bit numerator/denominator with 128-bit intermediates.
/// Always normalized: den > 0, gcd(|num|, den) == 1. All dyadic-geometry
/// predicates in the library run on this type so results are bit-reproducible.
class Rat {
public:
    constexpr Rat() : num_(0), den_(1) {}
    constexpr Rat(long long n) : num_(n), den_(1) {}
    Rat(long long n, long long d) {
        if (d == 0) throw std::invalid_argument("Rat: zero denominator");
        __int128 nn = n, dd = d;
        if (dd < 0) { nn = -nn; dd = -dd; }
        reduce_assign(nn, dd);
    }

    long long num() const { return num_; }
    long long den() const { return den_; }

    friend Rat operator+(const Rat& a, const Rat& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                    i128(a.den_) * b.den_);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                    i128(a.den_) * b.den_);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        if (b.num_ == 0) throw std::invalid_argument("Rat: division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rat operator-() const { Rat r; r.num_ = -num_; r.den_ = den_; return r; }

    Rat& operator+=(const Rat& o) { *this = *this + o; return *this; }
    Rat& operator-=(const Rat& o) { *this = *this - o; return *this; }
    Rat& operator*=(const Rat& o) { *this = *this * o; return *this; }
    Rat& operator/=(const Rat& o) { *this = *this / o; return *this; }

    friend bool operator==(const Rat& a, const Rat& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
    friend bool operator<(const Rat& a, const Rat& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
    friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
    friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

    double to_double() const { return double(num_) / double(den_); }

    /// Largest integer <= value.
    long long floor() const {
        long long q = num_ / den_;
        if (num_ % den_ != 0 && num_ < 0) --q;
        return q;
    }
    /// Smallest integer >= value.
    long long ceil() const {
        long long q = num_ / den_;
        if (num_ % den_ != 0 && num_ > 0) ++q;
        return q;
    }
    bool is_integer() const { return den_ == 1; }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_)
                         : std::to_string(num_) + "/" + std::to_string(den_);
    }

    static Rat min(const Rat& a, const Rat& b) { return a < b ? a : b; }
    static Rat max(const Rat& a, const Rat& b) { return a < b ? b : a; }

private:
    using i128 = __int128;

    static Rat make(i128 n, i128 d) {
        Rat r;
        if (d < 0) { n = -n; d = -d; }
        r.reduce_assign(n, d);
        return r;
    }

    void reduce_assign(__int128 n, __int128 d) {
        __int128 an = n < 0 ? -n : n;
        __int128 g = gcd128(an, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("Rat: 64-bit overflow after reduction");
        num_ = (long long)n;
        den_ = (long long)d;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }

    long long num_;
    long long den_;
};

/// Best rational approximation of x with denominator at most max_den
/// (continued-fraction convergents). Exact for the short decimals and dyadics
/// that appear as command-line parameters.
inline Rat rat_from_double(double x, long long max_den = 1000000) {
    if (!(x == x) || x > 9e15 || x < -9e15)
        throw std::invalid_argument("rat_from_double: value out of range");
    bool neg = x < 0;
    double v = neg ? -x : x;
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = v;
    for (int it = 0; it < 64; ++it) {
        long long a = (long long)frac;
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double rem = frac - double(a);
        if (rem < 1e-15) break;
        frac = 1.0 / rem;
    }
    Rat r(neg ? -p1 : p1, q1);
    return r;
}

} // namespace furstlab
