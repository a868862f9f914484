#pragma once

#include <compare>
#include <cstdint>

#include "rational.hpp"
#include "scale.hpp"

namespace furstlab {

/// Half-open dyadic square [ix*2^-n, (ix+1)*2^-n) x [iy*2^-n, (iy+1)*2^-n).
/// Indices may be negative (tube parameter cubes live in [-1,1) x [-2,2)).
struct DyadicCube {
    Scale scale;
    long long ix = 0;
    long long iy = 0;

    DyadicCube() = default;
    DyadicCube(Scale s, long long x, long long y) : scale(s), ix(x), iy(y) {}

    Rat x0() const { return Rat(ix, scale.cells()); }
    Rat y0() const { return Rat(iy, scale.cells()); }
    Rat x1() const { return Rat(ix + 1, scale.cells()); }
    Rat y1() const { return Rat(iy + 1, scale.cells()); }
    Rat center_x() const { return Rat(2 * ix + 1, 2 * scale.cells()); }
    Rat center_y() const { return Rat(2 * iy + 1, 2 * scale.cells()); }
    double side() const { return scale.value(); }

    /// Ancestor cube at a coarser (or equal) scale. Arithmetic right shift is
    /// floor division, which is exactly the dyadic parent map for negative
    /// indices too.
    DyadicCube parent(Scale coarse) const {
        int k = scale_shift(scale, coarse);
        return DyadicCube(coarse, ix >> k, iy >> k);
    }

    friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
        return a.scale == b.scale && a.ix == b.ix && a.iy == b.iy;
    }
    /// Lexicographic (ix, iy); used for deterministic iteration and witness
    /// tie-breaking. Only meaningful between cubes at the same scale.
    friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
        if (a.ix != b.ix) return a.ix < b.ix;
        return a.iy < b.iy;
    }
};

/// Index-only key for containers (scale held by the owning set).
struct CellIndex {
    long long ix = 0;
    long long iy = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

} // namespace furstlab
