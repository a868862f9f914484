#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "cube_set.hpp"
#include "tube.hpp"

namespace furstlab {

enum class TubeMode { distinct, multi };

/// Finite family of dyadic tubes at one scale, either a plain set (distinct)
/// or a multiset (multi). Entries sorted by parameter cube for determinism.
class TubeSet {
public:
    struct Entry {
        long long ia = 0;  // slope cell index
        long long ib = 0;  // intercept cell index
        long long mult = 1;
    };

    TubeSet() = default;
    TubeSet(Scale s, TubeMode mode, std::vector<Entry> entries)
        : scale_(s), mode_(mode) {
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.ia != b.ia) return a.ia < b.ia;
            return a.ib < b.ib;
        });
        for (const auto& e : entries) {
            if (e.mult <= 0) throw std::invalid_argument("TubeSet: mult must be positive");
            if (!entries_.empty() && entries_.back().ia == e.ia && entries_.back().ib == e.ib)
                entries_.back().mult += e.mult;
            else
                entries_.push_back(e);
        }
        if (mode_ == TubeMode::distinct)
            for (auto& e : entries_) e.mult = 1;
        long long c = scale_.cells();
        for (const auto& e : entries_)
            if (e.ia < -c || e.ia >= c || e.ib < -2 * c || e.ib >= 2 * c)
                throw std::invalid_argument(
                    "TubeSet: parameter cube outside dual window [-1,1)x[-2,2)");
    }

    Scale scale() const { return scale_; }
    TubeMode mode() const { return mode_; }
    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    long long distinct_count() const { return (long long)entries_.size(); }
    long long total_mult() const {
        long long s = 0;
        for (const auto& e : entries_) s += e.mult;
        return s;
    }

    DyadicTube tube(const Entry& e) const { return DyadicTube(scale_, e.ia, e.ib); }

    /// Family of Delta-parents T^Delta, multiplicities summed (multi mode).
    TubeSet parent_set(Scale Delta) const {
        int k = scale_shift(scale_, Delta);
        std::map<CellIndex, long long> agg;
        for (const auto& e : entries_) agg[CellIndex{e.ia >> k, e.ib >> k}] += e.mult;
        std::vector<Entry> out;
        out.reserve(agg.size());
        for (const auto& [cell, m] : agg) out.push_back(Entry{cell.ix, cell.iy, m});
        return TubeSet(Delta, TubeMode::multi, std::move(out));
    }

    /// |T|_Delta, distinct Delta-parents.
    long long covering(Scale Delta) const {
        int k = scale_shift(scale_, Delta);
        std::set<CellIndex> parents;
        for (const auto& e : entries_) parents.insert(CellIndex{e.ia >> k, e.ib >> k});
        return (long long)parents.size();
    }

    /// Dual cubes of the tube parameters as a CubeSet (for regularity checks
    /// on tube families).
    CubeSet dual_cubes() const {
        std::vector<CubeEntry> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(CubeEntry{e.ia, e.ib, e.mult, 1.0});
        return CubeSet(scale_, std::move(out));
    }

private:
    Scale scale_;
    TubeMode mode_ = TubeMode::distinct;
    std::vector<Entry> entries_;
};

} // namespace furstlab
