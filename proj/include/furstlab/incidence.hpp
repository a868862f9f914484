#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "cube_set.hpp"
#include "rational.hpp"
#include "tube.hpp"
#include "tube_set.hpp"

namespace furstlab {

// Incidence counting between a weighted cube set and a tube family at a
// common coarse scale Delta. A cube cell Q in D_Delta is incident to tube T
// when Q sits inside the fattening cT (corner test, exact rationals). The
// weighted count sums cube mass times tube multiplicity over incident pairs.

struct TubeIncidence {
    long long cube_count = 0;  // distinct Delta-cells incident to the tube
    double weighted = 0;       // sum of incident cube mass times tube mult
};

struct IncidenceResult {
    double total = 0;           // weighted incidence count
    long long pair_count = 0;   // sum of mult_Q * mult_T over incident pairs
    std::map<CellIndex, TubeIncidence> per_tube;
    std::map<CellIndex, long long> per_cube;  // tube multiplicity hitting each cell
};

namespace detail {

struct DeltaCell {
    long long ix, iy;
    long long mult;
    double mass;  // sum of mult * weight of the delta-cubes inside
};

/// Aggregate P into its Delta-cell decomposition, sorted by (ix, iy).
inline std::vector<DeltaCell> aggregate_cells(const CubeSet& P, Scale Delta) {
    int k = scale_shift(P.scale(), Delta);
    std::map<CellIndex, DeltaCell> acc;
    for (const auto& e : P.entries()) {
        CellIndex c{e.ix >> k, e.iy >> k};
        auto& cell = acc.try_emplace(c, DeltaCell{c.ix, c.iy, 0, 0.0}).first->second;
        cell.mult += e.mult;
        cell.mass += double(e.mult) * e.weight;
    }
    std::vector<DeltaCell> out;
    out.reserve(acc.size());
    for (const auto& [c, cell] : acc) out.push_back(cell);
    return out;
}

} // namespace detail

/// Exact weighted incidence count between P (any scale finer or equal to
/// Delta) and tubes at scale Delta, using the fattening factor `fat`
/// (6 for incidence counting, 4 for membership checks).
inline IncidenceResult incidence_exact(const CubeSet& P, const TubeSet& tubes, Scale Delta,
                                       const Rat& fat = Rat(6)) {
    if (tubes.scale().n != Delta.n)
        throw std::invalid_argument("incidence_exact: tube scale must equal Delta");
    std::vector<detail::DeltaCell> cells = detail::aggregate_cells(P, Delta);

    // column index: cells grouped by ix with iy sorted inside each group
    std::map<long long, std::vector<const detail::DeltaCell*>> columns;
    for (const auto& c : cells) columns[c.ix].push_back(&c);

    IncidenceResult res;
    for (const auto& te : tubes.entries()) {
        DyadicTube T(Delta, te.ia, te.ib);
        TubeIncidence ti;
        for (const auto& [col, col_cells] : columns) {
            RowRange rr = fat_tube_rows(T, fat, Delta, col);
            if (rr.lo > rr.hi) continue;
            for (const detail::DeltaCell* c : col_cells) {
                if (c->iy < rr.lo || c->iy > rr.hi) continue;
                ti.cube_count += 1;
                ti.weighted += c->mass * double(te.mult);
                res.pair_count += c->mult * te.mult;
                res.per_cube[CellIndex{c->ix, c->iy}] += te.mult;
            }
        }
        if (ti.cube_count > 0) {
            res.per_tube[CellIndex{te.ia, te.ib}] = ti;
            res.total += ti.weighted;
        }
    }
    return res;
}

/// Cells of D_Delta(P) that are b-rich for the family: mass at least b and
/// contained in the 4-fattening of the tube. Returns tube -> rich cell count.
inline std::map<CellIndex, long long> rich_tube_census(const CubeSet& P, const TubeSet& tubes,
                                                       double b) {
    Scale Delta = tubes.scale();
    std::vector<detail::DeltaCell> cells = detail::aggregate_cells(P, Delta);
    std::map<long long, std::vector<const detail::DeltaCell*>> columns;
    for (const auto& c : cells)
        if (c.mass >= b) columns[c.ix].push_back(&c);

    std::map<CellIndex, long long> census;
    for (const auto& te : tubes.entries()) {
        DyadicTube T(Delta, te.ia, te.ib);
        long long rich = 0;
        for (const auto& [col, col_cells] : columns) {
            RowRange rr = fat_tube_rows(T, Rat(4), Delta, col);
            for (const detail::DeltaCell* c : col_cells)
                if (c->iy >= rr.lo && c->iy <= rr.hi) ++rich;
        }
        census[CellIndex{te.ia, te.ib}] = rich;
    }
    return census;
}

// --------------------------------------------------------------------------
// Pair energy: for each unordered pair of cubes in distinct Delta-cells,
// count the tubes whose 6-fattening contains both cubes, against the
// analytic prediction 2 m1 m2 / max(dist, delta) summed over pairs.
// --------------------------------------------------------------------------

struct EnergyResult {
    long long pair_count = 0;       // ordered pairs in distinct cells
    double tube_weighted = 0;       // sum over pairs of joint tube count
    double analytic = 0;            // sum of 2 m1 m2 / max(dist, delta)
};

namespace detail {

/// Range of intercepts ib such that both cubes lie in 6T for slope cell ia.
/// For each cube corner x in {x0, x1} the envelope constraints give an exact
/// rational window for b; intersecting over both cubes and both corners
/// yields [lo, hi] in intercept cells.
inline bool joint_intercept_range(const CubeEntry& p, const CubeEntry& q, long long ia, int n,
                                  long long& lo, long long& hi) {
    // For a cube [x0,x1] x [y0,y1] and tube slopes a in [a0, a1] (cells ia,
    // ia+1 scaled by delta), containment in the 6-fat tube needs, for both
    // x corners,
    //   y1 <= max(a0 x, a1 x) + b + 7 delta   and   y0 >= min(a0 x, a1 x) + b - 6 delta
    // with b = ib delta. Work in units of delta; slopes are ia, ia + 1.
    auto corner_bounds = [&](const CubeEntry& e, long long& blo, long long& bhi) {
        // exact in units of delta^2 denominators: a x has numerator ia * x_cells
        // with x in cells, but x spans [x0, x1] = [e.ix, e.ix + 1] delta.
        // Evaluate at both x corners.
        blo = LLONG_MIN;
        bhi = LLONG_MAX;
        for (int cx = 0; cx <= 1; ++cx) {
            long long x = e.ix + cx;  // corner in cells
            long long a0x = ia * x, a1x = (ia + 1) * x;  // units delta^2 / delta = cell * delta
            long long mn = std::min(a0x, a1x), mx = std::max(a0x, a1x);
            // y1 = e.iy + 1 (cells); need (e.iy + 1) <= mx / 2^n + ib + 7
            //   => ib >= e.iy + 1 - 7 - mx / 2^n => ib >= ceil((e.iy - 6) - mx / 2^n)
            // y0 = e.iy; need e.iy >= mn / 2^n + ib - 6 => ib <= floor(e.iy + 6 - mn / 2^n)
            long long cells = 1LL << n;
            // ceil(A - mx / cells) with A integer: A - floor(mx / cells)
            long long lo1 = (e.iy - 6) - floor_div(mx, cells);
            long long hi1 = e.iy + 6 + floor_div(-mn, cells);  // floor(A - mn/cells) = A + floor(-mn/cells)
            blo = std::max(blo, lo1);
            bhi = std::min(bhi, hi1);
        }
    };
    long long lo1, hi1, lo2, hi2;
    corner_bounds(p, lo1, hi1);
    corner_bounds(q, lo2, hi2);
    lo = std::max(lo1, lo2);
    hi = std::min(hi1, hi2);
    long long w = 1LL << (n + 1);
    lo = std::max(lo, -w);
    hi = std::min(hi, w - 1);
    return lo <= hi;
}

} // namespace detail

/// Tube-counting pair energy over cubes in distinct Delta-cells. Requires the
/// Delta-cells of P to be pairwise separated (non-adjacent), which keeps the
/// per-pair tube count comparable with the analytic bound.
inline EnergyResult energy_triples(const CubeSet& P, Scale Delta) {
    if (!delta_cells_separated(P, Delta))
        throw std::invalid_argument("energy_triples: Delta-cells of P must be separated");
    int n = P.scale().n;
    double delta = P.scale().value();
    int k = scale_shift(P.scale(), Delta);
    const auto& es = P.entries();

    EnergyResult res;
    for (size_t i = 0; i < es.size(); ++i) {
        for (size_t j = i + 1; j < es.size(); ++j) {
            if ((es[i].ix >> k) == (es[j].ix >> k) && (es[i].iy >> k) == (es[j].iy >> k))
                continue;  // same Delta-cell
            res.pair_count += 2;
            long long joint = 0;
            long long amax = 1LL << n;
            for (long long ia = -amax; ia < amax; ++ia) {
                long long lo, hi;
                if (detail::joint_intercept_range(es[i], es[j], ia, n, lo, hi))
                    joint += hi - lo + 1;
            }
            res.tube_weighted += 2.0 * double(es[i].mult) * double(es[j].mult) * double(joint);
            double dx = (double(es[i].ix) - double(es[j].ix)) * delta;
            double dy = (double(es[i].iy) - double(es[j].iy)) * delta;
            double dist = std::sqrt(dx * dx + dy * dy);
            res.analytic += 2.0 * double(es[i].mult) * double(es[j].mult) / std::max(dist, delta);
        }
    }
    return res;
}

} // namespace furstlab
