#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cube_set.hpp"
#include "regularity.hpp"
#include "tube_set.hpp"

namespace furstlab {

// --------------------------------------------------------------------------
// 1D Cantor-style axis patterns. The unit interval is refined in blocks of
// T scale levels; at block level i the construction keeps k_i of the 2^T
// sub-cells of every surviving cell, with the kept offsets spread evenly
// across [0, 2^T). The branch counts k_i are chosen greedily so the running
// dimension log2(prod k)/(T (i+1)) tracks the target s.
// --------------------------------------------------------------------------

struct CantorAxis {
    int n = 0;
    int T = 1;
    std::vector<int> branches;        // k_i per block level
    std::vector<long long> indices;   // selected cells in [0, 2^n), sorted
    double achieved_dim = 0;          // log2 |indices| / n
};

namespace detail {

inline std::vector<int> spread_offsets(int k, int q) {
    // k evenly spread picks from {0, ..., q-1}, endpoints included
    std::vector<int> off;
    if (k <= 1) { off.push_back(0); return off; }
    for (int i = 0; i < k; ++i)
        off.push_back((int)llround(double(i) * double(q - 1) / double(k - 1)));
    return off;
}

inline std::vector<long long> expand_axis(int n, int T, const std::vector<int>& branches) {
    int levels = n / T;
    if ((int)branches.size() != levels)
        throw std::invalid_argument("axis schedule length must be n/T");
    int q = 1 << T;
    std::vector<long long> cells{0};
    for (int i = 0; i < levels; ++i) {
        int k = branches[i];
        if (k < 1 || k > q) throw std::invalid_argument("axis branch count outside [1, 2^T]");
        std::vector<int> off = spread_offsets(k, q);
        std::vector<long long> next;
        next.reserve(cells.size() * off.size());
        for (long long c : cells)
            for (int o : off) next.push_back((c << T) + o);
        cells.swap(next);
    }
    return cells;  // construction order is already sorted (offsets increasing)
}

} // namespace detail

/// Greedy branch schedule tracking dimension s; T = 0 picks the block size
/// dividing n whose achieved dimension is closest to s.
inline CantorAxis cantor_axis(int n, double s, int T = 0) {
    if (n <= 0) throw std::invalid_argument("cantor_axis: need n >= 1");
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("cantor_axis: need s in [0, 1]");
    auto build = [&](int bt) {
        CantorAxis ax;
        ax.n = n;
        ax.T = bt;
        int levels = n / bt, q = 1 << bt;
        double log2prod = 0;
        for (int i = 0; i < levels; ++i) {
            int best_k = 1;
            double best_err = 1e300;
            for (int k = 1; k <= q; ++k) {
                double err = std::fabs((log2prod + std::log2(double(k))) / (double(bt) * (i + 1)) - s);
                if (err < best_err - 1e-15) { best_err = err; best_k = k; }
            }
            ax.branches.push_back(best_k);
            log2prod += std::log2(double(best_k));
        }
        ax.indices = detail::expand_axis(n, bt, ax.branches);
        ax.achieved_dim = std::log2(double(ax.indices.size())) / double(n);
        return ax;
    };
    if (T > 0) {
        if (n % T != 0) throw std::invalid_argument("cantor_axis: T must divide n");
        return build(T);
    }
    CantorAxis best;
    double best_err = 1e300;
    for (int bt = 1; bt <= std::min(n, 6); ++bt) {
        if (n % bt != 0) continue;
        CantorAxis ax = build(bt);
        double err = std::fabs(ax.achieved_dim - s);
        if (err < best_err - 1e-12) { best_err = err; best = ax; }
    }
    return best;
}

/// Cantor set of dimension ~s inside [1, 2] (cell indices in [2^n, 2^{n+1})).
inline CubeSet1D cantor_1d(Scale delta, double s, int T = 0) {
    int n = delta.n;
    CantorAxis ax = cantor_axis(n, s, T);
    std::vector<long long> idx;
    idx.reserve(ax.indices.size());
    for (long long i : ax.indices) idx.push_back(i + (1LL << n));
    return CubeSet1D(delta, std::move(idx));
}

/// Product of two Cantor axes: dimension dim_x horizontally, dim_y vertically.
inline CubeSet cantor_product(Scale delta, double dim_x, double dim_y, int T = 0) {
    CantorAxis ax = cantor_axis(delta.n, dim_x, T);
    CantorAxis ay = cantor_axis(delta.n, dim_y, T);
    if ((long long)ax.indices.size() * (long long)ay.indices.size() > (1LL << 22))
        throw std::invalid_argument("cantor_product: output too large");
    std::vector<CubeEntry> out;
    out.reserve(ax.indices.size() * ay.indices.size());
    for (long long ix : ax.indices)
        for (long long iy : ay.indices) out.push_back(CubeEntry{ix, iy, 1, 1.0});
    return CubeSet(delta, std::move(out));
}

/// Full interval horizontally, Cantor axis of dimension s vertically.
inline CubeSet interval_cross_cantor(Scale delta, double s, int T = 0) {
    CantorAxis ay = cantor_axis(delta.n, s, T);
    long long w = delta.cells();
    if (w * (long long)ay.indices.size() > (1LL << 22))
        throw std::invalid_argument("interval_cross_cantor: output too large");
    std::vector<CubeEntry> out;
    for (long long ix = 0; ix < w; ++ix)
        for (long long iy : ay.indices) out.push_back(CubeEntry{ix, iy, 1, 1.0});
    return CubeSet(delta, std::move(out));
}

/// Separated configuration: every second Delta-cell in each direction carries
/// per_cell delta-cubes spread along the cell's diagonal. The occupied
/// Delta-cells are pairwise separated, as the pair-energy estimates require.
inline CubeSet well_spaced(Scale delta, Scale Delta, long long per_cell) {
    int k = scale_shift(delta, Delta);
    long long q = 1LL << k;  // delta-cubes per Delta-cell side
    if (per_cell < 1 || per_cell > q)
        throw std::invalid_argument("well_spaced: per_cell must be in [1, Delta/delta]");
    std::vector<CubeEntry> out;
    long long cells = Delta.cells();
    for (long long cx = 0; cx < cells; cx += 2)
        for (long long cy = 0; cy < cells; cy += 2)
            for (long long t = 0; t < per_cell; ++t) {
                long long l = per_cell == 1 ? 0 : llround(double(t) * double(q - 1) / double(per_cell - 1));
                out.push_back(CubeEntry{cx * q + l, cy * q + l, 1, 1.0});
            }
    return CubeSet(delta, std::move(out));
}

/// Product set with explicit per-level branch schedules on each axis
/// (schedule length n/T, entries in [1, 2^T]). Used to engineer branching
/// functions with prescribed slopes.
inline CubeSet block_product(Scale delta, int T, const std::vector<int>& xs,
                             const std::vector<int>& ys) {
    if (T <= 0 || delta.n % T != 0)
        throw std::invalid_argument("block_product: T must divide the scale exponent");
    std::vector<long long> ax = detail::expand_axis(delta.n, T, xs);
    std::vector<long long> ay = detail::expand_axis(delta.n, T, ys);
    if ((long long)ax.size() * (long long)ay.size() > (1LL << 22))
        throw std::invalid_argument("block_product: output too large");
    std::vector<CubeEntry> out;
    for (long long ix : ax)
        for (long long iy : ay) out.push_back(CubeEntry{ix, iy, 1, 1.0});
    return CubeSet(delta, std::move(out));
}

// --------------------------------------------------------------------------
// Configurations: a cube set P together with a tube family through each cube.
// Invariants: every attached tube's parameter cube lies in the dual window
// and the tube meets its cube; family sizes lie in [M/2, 2M]; the slope
// pattern per cube is a (delta, s)-set (certified by the Katz-Tao scan).
// --------------------------------------------------------------------------

struct NiceConfiguration {
    std::string name;
    CubeSet P;
    TubeSet tubes;  // distinct union of all per-cube families
    std::vector<std::vector<std::uint32_t>> per_cube;  // tube ids per P entry
    double s = 0, t = 0;
    long long M = 0;  // per-cube family size target
    double predicted_ratio_exponent = 0;  // conjectured log_{1/delta}(|T| / M)
};

namespace detail {

struct TubeCollector {
    std::map<CellIndex, std::uint32_t> id;
    std::vector<std::vector<CellIndex>> raw;  // per cube, in P-entry order

    void add(size_t cube_idx, long long ia, long long ib) {
        if (raw.size() <= cube_idx) raw.resize(cube_idx + 1);
        raw[cube_idx].push_back(CellIndex{ia, ib});
        id.emplace(CellIndex{ia, ib}, 0);
    }

    void finalize(Scale scale, TubeSet& tubes, std::vector<std::vector<std::uint32_t>>& per_cube) {
        std::uint32_t next = 0;
        for (auto& [cell, v] : id) v = next++;  // ids in sorted parameter order
        std::vector<TubeSet::Entry> entries;
        entries.reserve(id.size());
        for (const auto& [cell, v] : id) entries.push_back(TubeSet::Entry{cell.ix, cell.iy, 1});
        tubes = TubeSet(scale, TubeMode::distinct, std::move(entries));
        per_cube.clear();
        per_cube.reserve(raw.size());
        for (auto& v : raw) {
            std::vector<std::uint32_t> ids;
            ids.reserve(v.size());
            for (const auto& cell : v) ids.push_back(id[cell]);
            std::sort(ids.begin(), ids.end());
            ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
            per_cube.push_back(std::move(ids));
        }
    }
};

inline double predicted_ratio(double s, double t) {
    return std::min({t, (s + t) / 2.0, 1.0});
}

} // namespace detail

/// Aligned grid configuration, sharp for the tube-count exponent (s+t)/2 in
/// the range 0 < s <= 1, s <= t <= 2 - s. Points form an X x Y lattice with
/// spacings chosen so that lines through lattice points with slopes from an
/// arithmetic progression hit intercepts exactly on the lattice: the tube
/// family reuses maximally.
///   slope spacing 2^{rs} cells, rs = round(n (1 - s)),  M = 2^{n - rs} slopes
///   x spacing 2^{rx} cells,     rx = round(n (1 - (t - s)/2))
///   y spacing 2^{rs + rx - n} cells (integral since s + t <= 2).
inline NiceConfiguration grid_example(Scale delta, double s, double t) {
    int n = delta.n;
    if (!(s > 0 && s <= 1.0 && t >= s && t <= 2.0 - s))
        throw std::invalid_argument("grid_example: need 0 < s <= 1 and s <= t <= 2 - s");
    int rs = (int)llround(double(n) * (1.0 - s));
    int rx = (int)llround(double(n) * (1.0 - (t - s) / 2.0));
    rs = std::max(0, std::min(n, rs));
    rx = std::max(0, std::min(n, rx));
    if (rs + rx < n) rx = n - rs;  // keep the y spacing at least one cell

    long long kk = 1LL << rs;          // slope spacing in cells
    long long dxc = 1LL << rx;         // x spacing in cells
    long long hyc = 1LL << (rs + rx - n);  // y spacing in cells
    long long X = 1LL << (n - rx);
    long long Y = 1LL << (2 * n - rs - rx);
    long long J = 1LL << (n - rs);     // slopes per point

    std::vector<CubeEntry> pts;
    pts.reserve(X * Y);
    for (long long i = 0; i < X; ++i)
        for (long long j = 0; j < Y; ++j) pts.push_back(CubeEntry{i * dxc, j * hyc, 1, 1.0});
    NiceConfiguration cfg;
    cfg.name = "grid";
    cfg.P = CubeSet(delta, std::move(pts));
    cfg.s = s;
    cfg.t = t;
    cfg.M = J;
    cfg.predicted_ratio_exponent = detail::predicted_ratio(s, t);

    detail::TubeCollector col;
    size_t idx = 0;
    for (const auto& e : cfg.P.entries()) {
        long long i = e.ix / dxc;
        for (long long jj = 0; jj < J; ++jj) {
            // line through the cube's corner: y = (jj kk delta) x + ib delta
            long long ib = e.iy - jj * i * hyc;
            col.add(idx, jj * kk, ib);
        }
        ++idx;
    }
    col.finalize(delta, cfg.tubes, cfg.per_cube);
    return cfg;
}

/// Cantor-product configuration for the s = t regime: P is a product of two
/// dimension-t/2 axes, slopes run over a dimension-s Cantor pattern, and each
/// tube is snapped so its corner line passes through the cube's corner.
inline NiceConfiguration cantor_configuration(Scale delta, double s, double t, int T = 0) {
    int n = delta.n;
    NiceConfiguration cfg;
    cfg.name = "cantor-config";
    cfg.P = cantor_product(delta, t / 2.0, t / 2.0, T);
    cfg.s = s;
    cfg.t = t;
    cfg.predicted_ratio_exponent = detail::predicted_ratio(s, t);
    CantorAxis slopes = cantor_axis(n, s, T);
    cfg.M = (long long)slopes.indices.size();

    long long cells = 1LL << n;
    detail::TubeCollector col;
    size_t idx = 0;
    for (const auto& e : cfg.P.entries()) {
        for (long long ia : slopes.indices) {
            long long ib = e.iy + detail::floor_div(-ia * e.ix, cells);
            col.add(idx, ia, ib);
        }
        ++idx;
    }
    col.finalize(delta, cfg.tubes, cfg.per_cube);
    return cfg;
}

/// Random configuration: P is drawn by top-down subsampling with level-j
/// target 2^{t j}; each cube gets one slope per stratum of a division of the
/// slope range into ~2^{s n} strata, snapped through the cube's corner.
/// Fully deterministic for a fixed seed.
inline NiceConfiguration random_nice_configuration(Scale delta, double s, double t,
                                                   unsigned long long seed) {
    int n = delta.n;
    std::mt19937_64 rng(seed);
    std::vector<CellIndex> cur{CellIndex{0, 0}};
    for (int j = 1; j <= n; ++j) {
        std::vector<CellIndex> children;
        children.reserve(cur.size() * 4);
        for (const auto& c : cur)
            for (int dx = 0; dx < 2; ++dx)
                for (int dy = 0; dy < 2; ++dy)
                    children.push_back(CellIndex{2 * c.ix + dx, 2 * c.iy + dy});
        long long target = llround(std::exp2(t * double(j)));
        target = std::max(1LL, std::min<long long>(target, (long long)children.size()));
        for (long long i = 0; i < target; ++i) {
            size_t k = (size_t)i + (size_t)(rng() % (children.size() - i));
            std::swap(children[i], children[k]);
        }
        children.resize(target);
        std::sort(children.begin(), children.end());
        cur.swap(children);
    }
    std::vector<CubeEntry> pts;
    pts.reserve(cur.size());
    for (const auto& c : cur) pts.push_back(CubeEntry{c.ix, c.iy, 1, 1.0});

    NiceConfiguration cfg;
    cfg.name = "random";
    cfg.P = CubeSet(delta, std::move(pts));
    cfg.s = s;
    cfg.t = t;
    cfg.predicted_ratio_exponent = detail::predicted_ratio(s, t);

    long long cells = 1LL << n;
    long long M = llround(std::exp2(s * double(n)));
    M = std::max(1LL, std::min(M, cells));
    cfg.M = M;
    detail::TubeCollector col;
    size_t idx = 0;
    for (const auto& e : cfg.P.entries()) {
        for (long long k = 0; k < M; ++k) {
            long long lo = k * cells / M;
            long long hi = (k + 1) * cells / M - 1;
            long long ia = lo + (long long)(rng() % (unsigned long long)(hi - lo + 1));
            long long ib = e.iy + detail::floor_div(-ia * e.ix, cells);
            col.add(idx, ia, ib);
        }
        ++idx;
    }
    col.finalize(delta, cfg.tubes, cfg.per_cube);
    return cfg;
}

/// Structural validation of a configuration: family sizes within [M/2, 2M],
/// every attached tube's parameter cube in the dual window (enforced by
/// TubeSet) and the tube meeting its cube inside the 4-fattening. Reports the
/// worst per-cube Katz-Tao constant of the slope family at exponent s over a
/// deterministic sample of cubes.
struct ConfigurationCheck {
    bool ok = true;
    std::string issue;
    double worst_family_kt = 0;
    long long min_family = 0, max_family = 0;
};

inline ConfigurationCheck validate_nice_configuration(const NiceConfiguration& cfg,
                                                      long long max_cube_checks = 32,
                                                      unsigned long long seed = 7) {
    ConfigurationCheck rep;
    if (cfg.P.empty() || cfg.per_cube.size() != cfg.P.entries().size()) {
        rep.ok = false;
        rep.issue = "per-cube family list does not match the cube set";
        return rep;
    }
    rep.min_family = LLONG_MAX;
    for (const auto& fam : cfg.per_cube) {
        rep.min_family = std::min(rep.min_family, (long long)fam.size());
        rep.max_family = std::max(rep.max_family, (long long)fam.size());
    }
    if (rep.min_family < (cfg.M + 1) / 2 || rep.max_family > 2 * cfg.M) {
        rep.ok = false;
        rep.issue = "family size outside [M/2, 2M]";
        return rep;
    }
    std::vector<size_t> order(cfg.per_cube.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < order.size() && (long long)i < max_cube_checks; ++i) {
        size_t k = i + (size_t)(rng() % (order.size() - i));
        std::swap(order[i], order[k]);
    }
    if ((long long)order.size() > max_cube_checks) order.resize(max_cube_checks);

    for (size_t oi : order) {
        const CubeEntry& e = cfg.P.entries()[oi];
        DyadicCube p(cfg.P.scale(), e.ix, e.iy);
        std::vector<TubeSet::Entry> fam;
        for (std::uint32_t id : cfg.per_cube[oi]) {
            const auto& te = cfg.tubes.entries()[id];
            fam.push_back(te);
            if (!cube_in_fat_tube(p, DyadicTube(cfg.tubes.scale(), te.ia, te.ib), Rat(4))) {
                rep.ok = false;
                rep.issue = "tube misses its cube: cube=(" + std::to_string(e.ix) + "," +
                            std::to_string(e.iy) + ") tube=(" + std::to_string(te.ia) + "," +
                            std::to_string(te.ib) + ")";
                return rep;
            }
        }
        TubeSet fam_set(cfg.tubes.scale(), TubeMode::distinct, std::move(fam));
        RegularityReport kt = katz_tao_constant(fam_set.dual_cubes(), cfg.s);
        rep.worst_family_kt = std::max(rep.worst_family_kt, kt.best_constant);
    }
    return rep;
}

} // namespace furstlab
