#pragma once

#include <stdexcept>

#include "cube.hpp"
#include "rational.hpp"
#include "scale.hpp"

namespace furstlab {

/// Line y = a x + b (the point-line duality map applied to (a,b)).
struct Line {
    Rat a;
    Rat b;
    Rat eval(const Rat& x) const { return a * x + b; }
};

/// Dyadic delta-tube: the union of lines y = a x + b over (a,b) in a dyadic
/// parameter cube of side Delta inside [-1,1) x [-2,2). The tube inherits the
/// parameter cube's scale.
struct DyadicTube {
    DyadicCube param;

    DyadicTube() = default;
    explicit DyadicTube(DyadicCube p) : param(p) {}
    DyadicTube(Scale s, long long ia, long long ib) : param(s, ia, ib) {}

    Scale scale() const { return param.scale; }
    Rat slope_lo() const { return param.x0(); }
    Rat slope_hi() const { return param.x1(); }
    Rat icpt_lo() const { return param.y0(); }
    Rat icpt_hi() const { return param.y1(); }
    Line spine() const { return Line{param.center_x(), param.center_y()}; }

    /// True iff the parameter cube lies in the legal dual window
    /// [-1,1) x [-2,2).
    bool in_dual_window() const {
        long long c = scale().cells();
        return param.ix >= -c && param.ix < c && param.iy >= -2 * c && param.iy < 2 * c;
    }

    DyadicTube parent(Scale coarse) const { return DyadicTube(param.parent(coarse)); }

    friend bool operator==(const DyadicTube& a, const DyadicTube& b) {
        return a.param == b.param;
    }
    friend bool operator<(const DyadicTube& a, const DyadicTube& b) {
        return a.param < b.param;
    }
};

/// Envelope of the tube's line family over the closed parameter cube at
/// abscissa x: every line value a x + b with (a,b) in the cube lies in
/// [env_low(x), env_high(x)]. min/max over a closed rectangle of the bilinear
/// a x + b sits at parameter corners.
inline Rat tube_env_low(const DyadicTube& T, const Rat& x) {
    Rat lo = T.slope_lo() * x;
    Rat hi = T.slope_hi() * x;
    return Rat::min(lo, hi) + T.icpt_lo();
}
inline Rat tube_env_high(const DyadicTube& T, const Rat& x) {
    Rat lo = T.slope_lo() * x;
    Rat hi = T.slope_hi() * x;
    return Rat::max(lo, hi) + T.icpt_hi();
}

/// Fat tube cT = { (x,y) : |y - (a x + b)| <= c*Delta for some (a,b) in the
/// parameter cube }, the vertical-margin fattening at the tube's own scale.
/// Point membership, exact.
inline bool point_in_fat_tube(const Rat& x, const Rat& y, const DyadicTube& T, const Rat& c) {
    Rat margin = c * T.scale().rat();
    return y >= tube_env_low(T, x) - margin && y <= tube_env_high(T, x) + margin;
}

/// Cube containment p ⊂ cT, decided by exact corner tests. The slab region
/// between the two envelopes is vertically convex per column and the
/// envelopes' extrema over an x-interval not straddling 0 are at the interval
/// endpoints; if the cube straddles x = 0 the kink at 0 is included.
/// (Dyadic cubes never straddle 0, but the predicate stays exact for any
/// rational box via the extra test point.)
inline bool cube_in_fat_tube(const DyadicCube& p, const DyadicTube& T, const Rat& c) {
    Rat margin = c * T.scale().rat();
    Rat xs[3] = {p.x0(), p.x1(), Rat(0)};
    int nx = (p.x0() < Rat(0) && Rat(0) < p.x1()) ? 3 : 2;
    Rat max_low = tube_env_low(T, xs[0]);
    Rat min_high = tube_env_high(T, xs[0]);
    for (int i = 1; i < nx; ++i) {
        max_low = Rat::max(max_low, tube_env_low(T, xs[i]));
        min_high = Rat::min(min_high, tube_env_high(T, xs[i]));
    }
    return p.y0() >= max_low - margin && p.y1() <= min_high + margin;
}

/// Row range [r_lo, r_hi] (inclusive) of grid cells at scale `grid` in column
/// `col` whose cubes are contained in cT. Empty range reported via
/// r_lo > r_hi. Exact integer arithmetic throughout.
struct RowRange {
    long long lo = 0;
    long long hi = -1;
    bool empty() const { return lo > hi; }
};

inline RowRange fat_tube_rows(const DyadicTube& T, const Rat& c, Scale grid, long long col) {
    Rat cell = grid.rat();
    Rat x0 = Rat(col) * cell;
    Rat x1 = Rat(col + 1) * cell;
    Rat margin = c * T.scale().rat();
    Rat max_low = Rat::max(tube_env_low(T, x0), tube_env_low(T, x1));
    Rat min_high = Rat::min(tube_env_high(T, x0), tube_env_high(T, x1));
    // r*cell >= max_low - margin  and  (r+1)*cell <= min_high + margin
    RowRange rr;
    rr.lo = ((max_low - margin) / cell).ceil();
    rr.hi = ((min_high + margin) / cell).floor() - 1;
    return rr;
}

/// Lemma-2.7-style containment: every point of the window [-1,2)^2 on the
/// (delta/4)-grid that lies within sup-distance Delta of 6T also lies in
/// 6(T^Delta). Per column the hypothesis and conclusion sets are intervals
/// with exact rational endpoints, so the grid test reduces to interval
/// containment of the extreme grid points. Requires Delta > 30*delta.
inline bool thicken_containment_check(const DyadicTube& T, Scale Delta) {
    Scale delta = T.scale();
    if (!(Rat(30) * delta.rat() < Delta.rat()))
        throw std::invalid_argument("thicken_containment_check: requires Delta > 30*delta");
    DyadicTube TD = T.parent(Delta);

    Rat six(6);
    Rat dmarg = six * delta.rat();   // 6*delta fattening of T
    Rat Dmarg = six * Delta.rat();   // 6*Delta fattening of T^Delta
    Rat D = Delta.rat();

    // grid step delta/4 over [-1,2)
    Scale g(delta.n + 2);
    Rat step = g.rat();
    long long c0 = (Rat(-1) / step).ceil();
    long long c1 = (Rat(2) / step).floor();
    for (long long col = c0; col <= c1; ++col) {
        Rat x = Rat(col) * step;
        if (x < Rat(-1) || !(x < Rat(2))) continue;
        // hypothesis interval at x: exists (x', y') in 6T with |x-x'| <= Delta,
        // |y-y'| <= Delta. env extrema over [x-Delta, x+Delta]: endpoints, plus
        // the kink at 0 when straddled.
        Rat xa = x - D, xb = x + D;
        Rat lo_h = Rat::min(tube_env_low(T, xa), tube_env_low(T, xb));
        Rat hi_h = Rat::max(tube_env_high(T, xa), tube_env_high(T, xb));
        if (xa < Rat(0) && Rat(0) < xb) {
            lo_h = Rat::min(lo_h, tube_env_low(T, Rat(0)));
            hi_h = Rat::max(hi_h, tube_env_high(T, Rat(0)));
        }
        lo_h = lo_h - dmarg - D;
        hi_h = hi_h + dmarg + D;
        // conclusion interval at x for 6(T^Delta)
        Rat lo_c = tube_env_low(TD, x) - Dmarg;
        Rat hi_c = tube_env_high(TD, x) + Dmarg;
        // grid rows of the hypothesis interval clipped to [-1,2)
        Rat ylo = Rat::max(lo_h, Rat(-1));
        Rat yhi = Rat::min(hi_h, Rat(2));
        if (yhi < ylo) continue;
        long long r0 = (ylo / step).ceil();
        long long r1 = (yhi / step).floor();
        if (!(Rat(r1) * step < Rat(2))) --r1;  // window is half-open at y = 2
        if (r0 > r1) continue;
        Rat y_first = Rat(r0) * step;
        Rat y_last = Rat(r1) * step;
        if (!(y_first >= lo_c) || !(y_last <= hi_c)) return false;
    }
    return true;
}

} // namespace furstlab
