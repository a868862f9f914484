#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cube_set.hpp"

namespace furstlab {

namespace detail {

/// floor(sqrt(v)), exact (double seed plus integer fix-up).
inline long long isqrt_ll(long long v) {
    if (v < 0) throw std::invalid_argument("isqrt_ll: negative input");
    long long r = (long long)std::sqrt((double)v);
    while (r > 0 && r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

/// Distinct cube centers in half-cell units (2*ix+1, 2*iy+1), grouped by
/// column for fast exact ball counting. Multiplicities are ignored: the
/// regularity statistics below are about the support of P.
class CenterIndex {
public:
    explicit CenterIndex(const CubeSet& P) {
        if (P.empty()) throw std::invalid_argument("CenterIndex: empty cube set");
        min_ix_ = max_ix_ = P.entries().front().ix;
        min_iy_ = max_iy_ = P.entries().front().iy;
        for (const auto& e : P.entries()) {
            long long cx = 2 * e.ix + 1;
            if (cols_.empty() || cols_.back().x != cx) cols_.push_back(Column{cx, {}});
            cols_.back().ys.push_back(2 * e.iy + 1);
            min_ix_ = std::min(min_ix_, e.ix);
            max_ix_ = std::max(max_ix_, e.ix);
            min_iy_ = std::min(min_iy_, e.iy);
            max_iy_ = std::max(max_iy_, e.iy);
        }
    }

    /// Distinct cubes whose center lies within Euclidean distance sqrt(r2)
    /// of (cx, cy); all coordinates in half-cell units.
    long long count_in_ball(long long cx, long long cy, long long r2) const {
        long long b = isqrt_ll(r2);
        long long n = 0;
        auto first = std::lower_bound(
            cols_.begin(), cols_.end(), cx - b,
            [](const Column& c, long long v) { return c.x < v; });
        for (auto it = first; it != cols_.end() && it->x <= cx + b; ++it) {
            long long dx = it->x - cx;
            long long rem = r2 - dx * dx;
            if (rem < 0) continue;
            long long by = isqrt_ll(rem);
            auto l = std::lower_bound(it->ys.begin(), it->ys.end(), cy - by);
            auto r = std::upper_bound(it->ys.begin(), it->ys.end(), cy + by);
            n += r - l;
        }
        return n;
    }

    long long min_ix() const { return min_ix_; }
    long long max_ix() const { return max_ix_; }
    long long min_iy() const { return min_iy_; }
    long long max_iy() const { return max_iy_; }
    long long distinct() const {
        long long n = 0;
        for (const auto& c : cols_) n += (long long)c.ys.size();
        return n;
    }

private:
    struct Column {
        long long x;
        std::vector<long long> ys;
    };
    std::vector<Column> cols_;
    long long min_ix_ = 0, max_ix_ = 0, min_iy_ = 0, max_iy_ = 0;
};

} // namespace detail

/// Witness ball B(center, sqrt(2) * 2^{-r_exp}) realizing the reported
/// constant. Centers are exact rationals.
struct BallWitness {
    Rat cx;
    Rat cy;
    int r_exp = 0;
    long long count = 0;  // distinct cubes of P inside the ball
};

/// Result of one regularity scan. best_constant is the maximum of the scan's
/// ratio over the documented ball family; the witness realizes it.
struct RegularityReport {
    std::string cls;   // "frostman", "katz_tao", "ad_upper", "ad_lower"
    double s = 0;
    double best_constant = 0;
    BallWitness witness;

    std::string jsonl() const {
        std::string out = "{\"class\":\"" + cls + "\",\"s\":" + detail::fmt_g17(s) +
                          ",\"best_constant\":" + detail::fmt_g17(best_constant) +
                          ",\"witness\":{\"cx\":\"" + witness.cx.str() + "\",\"cy\":\"" +
                          witness.cy.str() + "\",\"r\":" +
                          detail::fmt_g17(std::exp2(-double(witness.r_exp))) +
                          ",\"count\":" + std::to_string(witness.count) + "}}";
        return out;
    }
};

// --------------------------------------------------------------------------
// Ball family. For a radius r = 2^{-mr} (cell side relative to the unit
// square) the scan uses closed balls B(z, r*sqrt(2)) where z runs over
//   * the centers of the r-grid cells within two cells of P's bounding box
//     (frostman / katz_tao / ad_upper), and
//   * the centers of P's own cubes (ad_lower).
// The sqrt(2) fattening makes every ball that the continuous definition
// quantifies over comparable to a ball of the family, and keeps the
// membership predicate exact: in half-cell units of the delta-grid the
// squared radius is 2^{2k+3} with k = n - mr, an integer.
// --------------------------------------------------------------------------

namespace detail {

template <typename Fn>
void scan_grid_centered_balls(const CenterIndex& idx, int n, int mr, Fn&& visit) {
    int k = n - mr;
    if (k < 0 || k > 28) throw std::invalid_argument("ball scan: radius out of range");
    long long step = 1LL << k;
    long long jx0 = floor_div(idx.min_ix(), step) - 2, jx1 = floor_div(idx.max_ix(), step) + 2;
    long long jy0 = floor_div(idx.min_iy(), step) - 2, jy1 = floor_div(idx.max_iy(), step) + 2;
    long long r2 = 1LL << (2 * k + 3);
    for (long long jx = jx0; jx <= jx1; ++jx)
        for (long long jy = jy0; jy <= jy1; ++jy) {
            long long cx = (2 * jx + 1) << k, cy = (2 * jy + 1) << k;
            long long cnt = idx.count_in_ball(cx, cy, r2);
            if (cnt > 0) visit(jx, jy, cnt);
        }
}

inline Rat grid_center_coord(long long j, int mr) { return Rat(2 * j + 1, 2LL << mr); }

} // namespace detail

/// Frostman constant of P at exponent s over the given radii: the maximum of
///   |P ∩ B| / (r^s |P|)
/// over the documented ball family, together with a witness ball. |P| and the
/// ball counts are distinct-cube counts. Radii are passed as scales r = 2^{-mr}
/// and scanned in the given order; ties keep the earliest witness.
inline RegularityReport frostman_constant(const CubeSet& P, double s,
                                          const std::vector<Scale>& ball_scales) {
    detail::CenterIndex idx(P);
    int n = P.scale().n;
    double total = double(idx.distinct());
    RegularityReport rep{"frostman", s, 0.0, {}};
    for (Scale r : ball_scales) {
        int mr = r.n;
        if (mr < 0 || mr > n) throw std::invalid_argument("frostman_constant: radius finer than delta");
        detail::scan_grid_centered_balls(idx, n, mr, [&](long long jx, long long jy, long long cnt) {
            double ratio = double(cnt) * std::exp2(double(mr) * s) / total;
            if (ratio > rep.best_constant) {
                rep.best_constant = ratio;
                rep.witness = BallWitness{detail::grid_center_coord(jx, mr),
                                          detail::grid_center_coord(jy, mr), mr, cnt};
            }
        });
    }
    return rep;
}

inline std::vector<Scale> all_ball_scales(const CubeSet& P) {
    std::vector<Scale> v;
    for (int mr = 0; mr <= P.scale().n; ++mr) v.push_back(Scale(mr));
    return v;
}

/// Katz-Tao constant: max over the family of |P ∩ B| / (r/delta)^s, all dyadic
/// radii in [delta, 1]. A (delta, s)-set in the Katz-Tao sense has this
/// bounded by an absolute constant. Identity with the Frostman scan:
/// katz_tao = frostman * |P| * delta^s when both use the same radii.
inline RegularityReport katz_tao_constant(const CubeSet& P, double s) {
    detail::CenterIndex idx(P);
    int n = P.scale().n;
    RegularityReport rep{"katz_tao", s, 0.0, {}};
    for (int mr = 0; mr <= n; ++mr) {
        detail::scan_grid_centered_balls(idx, n, mr, [&](long long jx, long long jy, long long cnt) {
            double ratio = double(cnt) * std::exp2(-double(n - mr) * s);
            if (ratio > rep.best_constant) {
                rep.best_constant = ratio;
                rep.witness = BallWitness{detail::grid_center_coord(jx, mr),
                                          detail::grid_center_coord(jy, mr), mr, cnt};
            }
        });
    }
    return rep;
}

/// Ahlfors-David constants (upper, lower) at exponent s over all dyadic radii:
///   upper: max |P ∩ B| / (r^s |P|)        over grid-centered balls,
///   lower: max r^s |P| / |P ∩ B(p, ..)|   over balls centered at cubes of P.
/// The lower scan's balls always contain their own center cube, so the ratio
/// is finite. A set is (delta, s, C)-regular when both are <= C.
inline std::pair<RegularityReport, RegularityReport> ad_regular_constants(const CubeSet& P,
                                                                          double s) {
    detail::CenterIndex idx(P);
    int n = P.scale().n;
    RegularityReport up = frostman_constant(P, s, all_ball_scales(P));
    up.cls = "ad_upper";
    double total = double(idx.distinct());
    RegularityReport lo{"ad_lower", s, 0.0, {}};
    for (int mr = 0; mr <= n; ++mr) {
        long long r2 = 1LL << (2 * (n - mr) + 3);
        for (const auto& e : P.entries()) {
            long long cnt = idx.count_in_ball(2 * e.ix + 1, 2 * e.iy + 1, r2);
            double ratio = total * std::exp2(-double(mr) * s) / double(cnt);
            if (ratio > lo.best_constant) {
                lo.best_constant = ratio;
                lo.witness = BallWitness{Rat(2 * e.ix + 1, 2LL << n),
                                         Rat(2 * e.iy + 1, 2LL << n), mr, cnt};
            }
        }
    }
    return {up, lo};
}

// --------------------------------------------------------------------------
// Uniformity and branching functions.
// --------------------------------------------------------------------------

/// Window sizes N_j and verdict for the uniformity check along a scale ladder.
struct UniformityReport {
    bool uniform = true;
    std::vector<long long> windows;  // N_j per ladder step, coarse to fine
    int failed_level = -1;           // first step violating [N_j/2, N_j), or -1
};

/// A set is uniform along the ladder when at each step every occupied parent
/// cell has its child-cell count inside [N_j/2, N_j), where N_j is the
/// smallest power of two exceeding the maximum count at that step. The ladder
/// runs coarse to fine, must end at P's scale, and implicitly starts at the
/// unit scale.
inline UniformityReport is_uniform(const CubeSet& P, const std::vector<Scale>& ladder) {
    if (P.empty()) throw std::invalid_argument("is_uniform: empty cube set");
    std::vector<Scale> steps;
    steps.push_back(Scale(0));
    for (Scale s : ladder) {
        if (s.n <= steps.back().n)
            throw std::invalid_argument("is_uniform: ladder must be strictly decreasing in scale");
        steps.push_back(s);
    }
    if (steps.back().n != P.scale().n)
        throw std::invalid_argument("is_uniform: ladder must end at the set's scale");

    UniformityReport rep;
    int n = P.scale().n;
    for (size_t j = 1; j < steps.size(); ++j) {
        int kc = n - steps[j].n;      // shift to child cells
        int kp = n - steps[j - 1].n;  // shift to parent cells
        std::map<CellIndex, std::set<CellIndex>> children;
        for (const auto& e : P.entries())
            children[CellIndex{e.ix >> kp, e.iy >> kp}].insert(CellIndex{e.ix >> kc, e.iy >> kc});
        long long maxc = 0, minc = LLONG_MAX;
        for (const auto& [q, kids] : children) {
            maxc = std::max(maxc, (long long)kids.size());
            minc = std::min(minc, (long long)kids.size());
        }
        long long N = 1;
        while (N <= maxc) N <<= 1;
        rep.windows.push_back(N);
        if (minc < N / 2 && rep.uniform) {
            rep.uniform = false;
            rep.failed_level = (int)j;
        }
    }
    return rep;
}

/// Branching function of P along the ladder 2^{-jT}: f(j) = log2 |P|_{2^{-jT}} / T,
/// extended piecewise linearly. Values are exact when the covering numbers are
/// powers of two and dyadic approximations within 2^{-32} otherwise. Nondecreasing
/// with increments in [0, 2] per unit step.
struct BranchingFunction {
    int T = 1;
    int m = 0;
    std::vector<Rat> values;  // values[j] = f(j), j = 0..m, values[0] = 0

    Rat eval(const Rat& x) const {
        if (x < Rat(0) || x > Rat(m))
            throw std::invalid_argument("BranchingFunction::eval: x outside [0, m]");
        long long j = x.floor();
        if (j == m) return values[m];
        Rat frac = x - Rat(j);
        return values[j] + (values[j + 1] - values[j]) * frac;
    }
    /// Chord slope s_f(a, b) = (f(b) - f(a)) / (b - a).
    Rat chord(const Rat& a, const Rat& b) const {
        if (!(a < b)) throw std::invalid_argument("BranchingFunction::chord: need a < b");
        return (eval(b) - eval(a)) / (b - a);
    }
};

inline Rat log2_as_rat(long long count, int T) {
    if (count <= 0) throw std::invalid_argument("log2_as_rat: count must be positive");
    // exact when count is a power of two
    if ((count & (count - 1)) == 0) {
        int e = 0;
        while ((1LL << e) < count) ++e;
        return Rat(e, T);
    }
    long long num = llround(std::log2(double(count)) * 4294967296.0);
    return Rat(num, (long long)T << 32);
}

/// Computes the branching function of P for block size T. Requires T | n and
/// P uniform along the ladder; otherwise callers should uniformize first.
inline BranchingFunction branching_function(const CubeSet& P, int T) {
    int n = P.scale().n;
    if (T <= 0 || n % T != 0)
        throw std::invalid_argument("branching_function: T must divide the scale exponent");
    int m = n / T;
    std::vector<Scale> ladder;
    for (int j = 1; j <= m; ++j) ladder.push_back(Scale(j * T));
    UniformityReport u = is_uniform(P, ladder);
    if (!u.uniform)
        throw std::invalid_argument(
            "branching_function: set is not uniform along the 2^{-jT} ladder (level " +
            std::to_string(u.failed_level) + "); uniformize first");
    BranchingFunction f;
    f.T = T;
    f.m = m;
    f.values.push_back(Rat(0));
    for (int j = 1; j <= m; ++j) f.values.push_back(log2_as_rat(covering_number(P, Scale(j * T)), T));
    return f;
}

// --------------------------------------------------------------------------
// Branching-function file format:
//   BRANCH v1 T=<T>
//   <j> <num> <den>     (one line per j = 0..m, f(j) = num/den)
// --------------------------------------------------------------------------

inline void write_branching(std::ostream& os, const BranchingFunction& f) {
    os << "BRANCH v1 T=" << f.T << "\n";
    for (int j = 0; j <= f.m; ++j)
        os << j << " " << f.values[j].num() << " " << f.values[j].den() << "\n";
}

inline void write_branching_file(const std::string& path, const BranchingFunction& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_branching(os, f);
}

inline BranchingFunction read_branching(std::istream& is) {
    std::string tag, ver, tkv;
    if (!(is >> tag >> ver >> tkv) || tag != "BRANCH" || ver != "v1" || tkv.rfind("T=", 0) != 0)
        throw std::runtime_error("bad BRANCH header");
    BranchingFunction f;
    f.T = std::stoi(tkv.substr(2));
    long long j, num, den;
    std::vector<Rat> vals;
    while (is >> j) {
        if (!(is >> num >> den)) throw std::runtime_error("bad or truncated BRANCH record");
        if (j != (long long)vals.size()) throw std::runtime_error("BRANCH: indices must be consecutive");
        vals.push_back(Rat(num, den));
    }
    is.clear();
    std::string leftover;
    if (is >> leftover) throw std::runtime_error("bad BRANCH record near: " + leftover);
    if (vals.empty() || !(vals.front() == Rat(0)))
        throw std::runtime_error("BRANCH: must start with f(0) = 0");
    f.values = std::move(vals);
    f.m = (int)f.values.size() - 1;
    return f;
}

inline BranchingFunction read_branching_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_branching(is);
}

} // namespace furstlab
