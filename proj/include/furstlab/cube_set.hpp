#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "cube.hpp"
#include "scale.hpp"

namespace furstlab {

namespace detail {

inline long long floor_div(long long a, long long b) {
    long long q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace detail

/// One record of a weighted cube multiset.
struct CubeEntry {
    long long ix = 0;
    long long iy = 0;
    long long mult = 1;    // multiset multiplicity (integer)
    double weight = 1.0;   // weight function w(p), applied per occurrence
};

/// Finite multiset of dyadic delta-cubes with per-cube weights. Immutable
/// after construction; entries are kept sorted by (ix, iy) so every scan and
/// every serialization is deterministic.
class CubeSet {
public:
    CubeSet() = default;
    CubeSet(Scale s, std::vector<CubeEntry> entries) : scale_(s) {
        std::sort(entries.begin(), entries.end(),
                  [](const CubeEntry& a, const CubeEntry& b) {
                      if (a.ix != b.ix) return a.ix < b.ix;
                      return a.iy < b.iy;
                  });
        // merge duplicates: multiplicities add, weights average weighted by mult
        for (const auto& e : entries) {
            if (e.mult <= 0) throw std::invalid_argument("CubeSet: mult must be positive");
            if (!entries_.empty() && entries_.back().ix == e.ix && entries_.back().iy == e.iy) {
                CubeEntry& last = entries_.back();
                double tot = double(last.mult) * last.weight + double(e.mult) * e.weight;
                last.mult += e.mult;
                last.weight = tot / double(last.mult);
            } else {
                entries_.push_back(e);
            }
        }
    }

    Scale scale() const { return scale_; }
    const std::vector<CubeEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    /// Number of distinct delta-cubes.
    long long distinct_count() const { return (long long)entries_.size(); }
    /// Multiset size (with repetition), the paper's |P| for multisets.
    long long total_mult() const {
        long long s = 0;
        for (const auto& e : entries_) s += e.mult;
        return s;
    }
    double total_weight() const {
        double s = 0;
        for (const auto& e : entries_) s += double(e.mult) * e.weight;
        return s;
    }
    double sum_weight_sq() const {
        double s = 0;
        for (const auto& e : entries_) s += double(e.mult) * e.weight * e.weight;
        return s;
    }

    DyadicCube cube(const CubeEntry& e) const { return DyadicCube(scale_, e.ix, e.iy); }

    bool contains(long long ix, long long iy) const {
        CubeEntry probe{ix, iy, 1, 0.0};
        auto it = std::lower_bound(entries_.begin(), entries_.end(), probe,
                                   [](const CubeEntry& a, const CubeEntry& b) {
                                       if (a.ix != b.ix) return a.ix < b.ix;
                                       return a.iy < b.iy;
                                   });
        return it != entries_.end() && it->ix == ix && it->iy == iy;
    }

private:
    Scale scale_;
    std::vector<CubeEntry> entries_;
};

/// |P|_Delta: number of distinct Delta-ancestors of the cubes of P.
/// Coarser-than-delta Delta is required; Delta == delta returns the distinct
/// cube count.
inline long long covering_number(const CubeSet& P, Scale Delta) {
    int k = scale_shift(P.scale(), Delta);
    std::set<CellIndex> parents;
    for (const auto& e : P.entries())
        parents.insert(CellIndex{e.ix >> k, e.iy >> k});
    return (long long)parents.size();
}

/// Distinct Delta-ancestor cells, sorted, with aggregated multiplicity/weight.
inline CubeSet parent_set(const CubeSet& P, Scale Delta) {
    int k = scale_shift(P.scale(), Delta);
    std::map<CellIndex, std::pair<long long, double>> agg;
    for (const auto& e : P.entries()) {
        auto& slot = agg[CellIndex{e.ix >> k, e.iy >> k}];
        slot.first += e.mult;
        slot.second += double(e.mult) * e.weight;
    }
    std::vector<CubeEntry> out;
    out.reserve(agg.size());
    for (const auto& [cell, mw] : agg)
        out.push_back(CubeEntry{cell.ix, cell.iy, mw.first, mw.second / double(mw.first)});
    return CubeSet(Delta, std::move(out));
}

/// Rescale map phi_Q: the cubes of P inside the coarse cube Q, renormalized so
/// Q becomes [0,1)^2. Result lives at scale 2^{-(n-m)}.
inline CubeSet rescale_cubeset(const CubeSet& P, const DyadicCube& Q) {
    int k = scale_shift(P.scale(), Q.scale);
    std::vector<CubeEntry> out;
    for (const auto& e : P.entries()) {
        if ((e.ix >> k) == Q.ix && (e.iy >> k) == Q.iy)
            out.push_back(CubeEntry{e.ix - (Q.ix << k), e.iy - (Q.iy << k), e.mult, e.weight});
    }
    if (out.empty())
        throw std::invalid_argument("rescale_cubeset: Q contains no cube of P");
    return CubeSet(Scale(k), std::move(out));
}

/// True iff the distinct Delta-cells occupied by P are pairwise at Euclidean
/// distance >= Delta (as closed boxes): every pair of occupied cells differs
/// by >= 2 in some coordinate.
inline bool delta_cells_separated(const CubeSet& P, Scale Delta) {
    int k = scale_shift(P.scale(), Delta);
    std::set<CellIndex> cells;
    for (const auto& e : P.entries()) cells.insert(CellIndex{e.ix >> k, e.iy >> k});
    std::vector<CellIndex> v(cells.begin(), cells.end());
    for (size_t i = 0; i < v.size(); ++i)
        for (size_t j = i + 1; j < v.size(); ++j) {
            long long dx = v[i].ix > v[j].ix ? v[i].ix - v[j].ix : v[j].ix - v[i].ix;
            long long dy = v[i].iy > v[j].iy ? v[i].iy - v[j].iy : v[j].iy - v[i].iy;
            if (dx < 2 && dy < 2) return false;
        }
    return true;
}

/// 1D counterpart used by the sum-product experiments; stored in the same
/// on-disk format with iy = 0.
class CubeSet1D {
public:
    CubeSet1D() = default;
    CubeSet1D(Scale s, std::vector<long long> indices) : scale_(s), idx_(std::move(indices)) {
        std::sort(idx_.begin(), idx_.end());
        idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
    }
    Scale scale() const { return scale_; }
    const std::vector<long long>& indices() const { return idx_; }
    long long count() const { return (long long)idx_.size(); }

    long long covering(Scale Delta) const {
        int k = scale_shift(scale_, Delta);
        long long n = 0, prev = 0;
        bool first = true;
        for (long long i : idx_) {
            long long p = i >> k;
            if (first || p != prev) { ++n; prev = p; first = false; }
        }
        return n;
    }

private:
    Scale scale_;
    std::vector<long long> idx_;
};

} // namespace furstlab
