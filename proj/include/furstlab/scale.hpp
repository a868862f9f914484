#pragma once

#include <cstdint>
#include <stdexcept>

#include "rational.hpp"

namespace furstlab {

/// Dyadic scale 2^{-n}, n >= 0. Strong type so scale exponents never mix with
/// grid indices.
struct Scale {
    int n = 0;

    Scale() = default;
    explicit Scale(int exponent) : n(exponent) {
        if (exponent < 0 || exponent > 40)
            throw std::invalid_argument("Scale: exponent out of [0,40]");
    }

    long long cells() const { return 1LL << n; }          // cells per unit length
    double value() const { return 1.0 / double(cells()); } // 2^{-n}
    Rat rat() const { return Rat(1, cells()); }

    friend bool operator==(Scale a, Scale b) { return a.n == b.n; }
    friend bool operator!=(Scale a, Scale b) { return a.n != b.n; }
    /// Finer scale = larger exponent; a < b means a is coarser than b.
    bool coarser_than(Scale b) const { return n < b.n; }
    bool finer_or_equal(Scale b) const { return n >= b.n; }
};

/// Requires coarse.n <= fine.n; returns the index shift between the grids.
inline int scale_shift(Scale fine, Scale coarse) {
    if (coarse.n > fine.n)
        throw std::invalid_argument("scale_shift: target scale is finer than source");
    return fine.n - coarse.n;
}

} // namespace furstlab
