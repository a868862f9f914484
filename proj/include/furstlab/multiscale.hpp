#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cube_set.hpp"
#include "regularity.hpp"

namespace furstlab {

// --------------------------------------------------------------------------
// Slope predicates on branching functions. All exact rational arithmetic.
// A branching function is piecewise affine with integer breakpoints, so each
// predicate only needs to test the breakpoints inside the interval plus the
// interval endpoints.
// --------------------------------------------------------------------------

inline Rat slope(const BranchingFunction& f, const Rat& a, const Rat& b) {
    return f.chord(a, b);
}

/// |f(x) - f(c) - s_f(c,d) (x - c)| <= eps (d - c) on [c, d].
inline bool is_eps_linear(const BranchingFunction& f, const Rat& c, const Rat& d, const Rat& eps) {
    Rat ch = f.chord(c, d);
    Rat slack = eps * (d - c);
    Rat fc = f.eval(c);
    for (long long j = c.floor(); j <= d.ceil(); ++j) {
        Rat x(j);
        if (x < c) x = c;
        if (x > d) x = d;
        Rat dev = f.eval(x) - fc - ch * (x - c);
        if (dev > slack || -dev > slack) return false;
    }
    return true;
}

/// f(x) >= f(c) + sigma (x - c) - eps (d - c) on [c, d].
inline bool is_eps_superlinear(const BranchingFunction& f, const Rat& c, const Rat& d,
                               const Rat& sigma, const Rat& eps) {
    Rat slack = eps * (d - c);
    Rat fc = f.eval(c);
    for (long long j = c.floor(); j <= d.ceil(); ++j) {
        Rat x(j);
        if (x < c) x = c;
        if (x > d) x = d;
        if (f.eval(x) < fc + sigma * (x - c) - slack) return false;
    }
    return true;
}

/// Crossover abscissa of the two-line envelope
///   min{ f(c) + u (x - c), f(d) - s (d - x) },
/// clamped to [c, d]. Left of it the u-line is the minimum.
inline Rat envelope_crossover(const BranchingFunction& f, const Rat& c, const Rat& d,
                              const Rat& s, const Rat& u) {
    Rat x = (f.eval(d) - f.eval(c) + u * c - s * d) / (u - s);
    if (x < c) x = c;
    if (x > d) x = d;
    return x;
}

/// f(x) >= min{ f(c) + u (x - c), f(d) - s (d - x) } - eps (d - c) on [c, d].
/// The envelope is concave piecewise linear, so it suffices to test f's
/// breakpoints, the endpoints, and the crossover point.
inline bool envelope_lower_bound_holds(const BranchingFunction& f, const Rat& c, const Rat& d,
                                       const Rat& s, const Rat& u, const Rat& eps) {
    Rat slack = eps * (d - c);
    Rat fc = f.eval(c), fd = f.eval(d);
    auto env = [&](const Rat& x) {
        return Rat::min(fc + u * (x - c), fd - s * (d - x));
    };
    auto ok = [&](const Rat& x) { return f.eval(x) >= env(x) - slack; };
    for (long long j = c.floor(); j <= d.ceil(); ++j) {
        Rat x(j);
        if (x < c) x = c;
        if (x > d) x = d;
        if (!ok(x)) return false;
    }
    return ok(envelope_crossover(f, c, d, s, u));
}

// --------------------------------------------------------------------------
// Uniformization. Processing scale blocks of size T from the finest level
// upward, each step keeps only the parent cells whose child count falls in
// one chosen dyadic class [2^k, 2^{k+1}), k in {0, ..., 2T}; removing a
// parent removes its whole subtree and leaves the finer, already-enforced
// levels untouched. The class sequence is chosen to maximize the number of
// surviving delta-cubes (exhaustive search with branch-and-bound when the
// sequence space is small, greedy per level otherwise).
// --------------------------------------------------------------------------

struct UniformizeResult {
    CubeSet P;                  // surviving cubes, original mult/weight
    std::vector<int> classes;   // chosen class k_j per level, coarse to fine
    long long kept = 0;         // distinct cubes kept
    long long original = 0;     // distinct cubes in the input
    bool exhaustive = true;     // false when the greedy fallback ran
};

namespace detail {

/// Distinct child cells (scale shift kc from the delta-grid) per parent cell
/// (shift kp). Child cells of one parent are not contiguous in (ix, iy) order,
/// so the children are deduplicated globally first.
inline std::map<CellIndex, long long> child_counts(const std::vector<CellIndex>& alive, int kc,
                                                   int kp) {
    std::vector<CellIndex> children;
    children.reserve(alive.size());
    for (const auto& c : alive) children.push_back(CellIndex{c.ix >> kc, c.iy >> kc});
    std::sort(children.begin(), children.end());
    children.erase(std::unique(children.begin(), children.end()), children.end());
    std::map<CellIndex, long long> counts;
    int sh = kp - kc;
    for (const auto& ch : children) ++counts[CellIndex{ch.ix >> sh, ch.iy >> sh}];
    return counts;
}

struct UniformizeSearch {
    int T = 1;
    int n = 0;
    std::vector<int> best_classes;
    long long best_kept = -1;

    // Process level j (children at scale jT, parents at (j-1)T), keeping only
    // parents of one class, then recurse on the coarser level.
    void search(std::vector<CellIndex>& alive, int j, std::vector<int>& chosen) {
        if ((long long)alive.size() < best_kept) return;  // cannot improve or tie
        if (j == 0) {
            std::vector<int> seq(chosen.rbegin(), chosen.rend());  // coarse-to-fine order
            if ((long long)alive.size() > best_kept ||
                ((long long)alive.size() == best_kept && seq > best_classes)) {
                best_kept = (long long)alive.size();
                best_classes = seq;
            }
            return;
        }
        int kc = n - j * T, kp = n - (j - 1) * T;
        std::map<CellIndex, long long> counts = child_counts(alive, kc, kp);
        for (int k = 2 * T; k >= 0; --k) {
            long long lo = 1LL << k, hi = 2LL << k;
            std::vector<CellIndex> next;
            for (const auto& c : alive) {
                auto it = counts.find(CellIndex{c.ix >> kp, c.iy >> kp});
                if (it->second >= lo && it->second < hi) next.push_back(c);
            }
            if (next.empty()) continue;
            chosen.push_back(k);
            search(next, j - 1, chosen);
            chosen.pop_back();
        }
    }
};

} // namespace detail

inline UniformizeResult uniformize(const CubeSet& P, int T, long long max_sequences = 20000) {
    int n = P.scale().n;
    if (T <= 0 || n % T != 0)
        throw std::invalid_argument("uniformize: T must divide the scale exponent");
    if (P.empty()) throw std::invalid_argument("uniformize: empty cube set");
    int levels = n / T;

    std::vector<CellIndex> alive;
    for (const auto& e : P.entries()) alive.push_back(CellIndex{e.ix, e.iy});

    UniformizeResult res;
    res.original = (long long)alive.size();

    double seq_space = std::pow(double(2 * T + 1), double(levels));
    if (seq_space <= double(max_sequences)) {
        detail::UniformizeSearch s;
        s.T = T;
        s.n = n;
        std::vector<int> chosen;
        s.search(alive, levels, chosen);
        res.classes = s.best_classes;
        res.exhaustive = true;
    } else {
        // greedy: per level keep the class retaining the most cubes,
        // breaking ties toward the larger class
        res.exhaustive = false;
        std::vector<int> seq;
        for (int j = levels; j >= 1; --j) {
            int kc = n - j * T, kp = n - (j - 1) * T;
            std::map<CellIndex, long long> counts = detail::child_counts(alive, kc, kp);
            int best_k = 0;
            long long best = -1;
            for (int k = 2 * T; k >= 0; --k) {
                long long lo = 1LL << k, hi = 2LL << k, kept = 0;
                for (const auto& c : alive) {
                    long long cc = counts[CellIndex{c.ix >> kp, c.iy >> kp}];
                    if (cc >= lo && cc < hi) ++kept;
                }
                if (kept > best) { best = kept; best_k = k; }
            }
            long long lo = 1LL << best_k, hi = 2LL << best_k;
            std::vector<CellIndex> next;
            for (const auto& c : alive) {
                long long cc = counts[CellIndex{c.ix >> kp, c.iy >> kp}];
                if (cc >= lo && cc < hi) next.push_back(c);
            }
            alive.swap(next);
            seq.push_back(best_k);
        }
        res.classes.assign(seq.rbegin(), seq.rend());
    }

    // replay the chosen class sequence to materialize the surviving set
    std::vector<CellIndex> cur;
    for (const auto& e : P.entries()) cur.push_back(CellIndex{e.ix, e.iy});
    for (int j = levels; j >= 1; --j) {
        int kc = n - j * T, kp = n - (j - 1) * T;
        std::map<CellIndex, long long> counts = detail::child_counts(cur, kc, kp);
        int k = res.classes[(size_t)(j - 1)];  // classes are stored coarse to fine
        long long lo = 1LL << k, hi = 2LL << k;
        std::vector<CellIndex> next;
        for (const auto& c : cur) {
            long long cc = counts[CellIndex{c.ix >> kp, c.iy >> kp}];
            if (cc >= lo && cc < hi) next.push_back(c);
        }
        cur.swap(next);
    }
    res.kept = (long long)cur.size();
    if (cur.empty()) throw std::runtime_error("uniformize: chosen classes kept nothing");

    std::set<CellIndex> keep(cur.begin(), cur.end());
    std::vector<CubeEntry> out;
    for (const auto& e : P.entries())
        if (keep.count(CellIndex{e.ix, e.iy})) out.push_back(e);
    res.P = CubeSet(P.scale(), std::move(out));
    return res;
}

// --------------------------------------------------------------------------
// Interval decomposition of a branching function.
//
// Given 0 < s < t < u and 0 < eps < min(u - s, 1/2), and f with
//   f(x) >= t x - eps^2 m   for x in [0, m],   f(m) <= (t + eps^2) m,
// the decomposition covers [0, m] up to an O(eps m) leftover by disjoint
// intervals of two kinds:
//   'a': eps-linear with chord slope in [s, u];
//   'b': eps-superlinear with chord slope in [s, u], and f stays above the
//        two-line envelope min{u-line from the left end, s-line into the
//        right end} minus eps (d - c).
// Every output interval is re-verified with exact rational arithmetic before
// the call returns.
// --------------------------------------------------------------------------

struct DecompParams {
    Rat s, t, u, eps;
};

struct DecompInterval {
    Rat c, d;
    char kind = 'a';   // 'a' or 'b'
    Rat chord;         // s_f(c, d)
    Rat crossover;     // for 'b': envelope switch point in [c, d]
};

struct IntervalDecomposition {
    DecompParams params;
    int m = 0;
    std::vector<DecompInterval> intervals;  // disjoint, sorted by left end
    Rat uncovered;        // total length of [0, m] not covered
    Rat uncovered_bound;  // proven cap: (2 + 1/(t-s) + 2 eps/(u-t)) * eps * m
    Rat tau;              // min interval length / m (0 when empty)
    Rat tau_initial;      // min piece length / m after the first pass
    int iterations = 0;
};

namespace detail {

struct PieceA {
    Rat c, d;
    bool sup = false;      // chord-u superlinear piece
    bool weakened = false; // right end moved during the second pass
};

/// First pass: split [0, m] into maximal eps^2-linear pieces with chord in
/// [0, u], falling back to exact chord-u excursion pieces of g = f - u x
/// where no linear piece starts. The unreturned tail of g (length at most
/// 2 eps^2 m / (u - t)) is left uncovered.
inline std::vector<PieceA> initial_pieces(const BranchingFunction& f, const DecompParams& pr,
                                          Rat& uncovered_tail) {
    std::vector<PieceA> out;
    Rat m((long long)f.m);
    Rat eps2 = pr.eps * pr.eps;
    Rat x(0);
    uncovered_tail = Rat(0);
    while (x < m) {
        // largest y <= m at an integer (or m) with chord <= u and eps^2-linear
        bool found = false;
        for (long long j = f.m; j > x.floor(); --j) {
            Rat y(j);
            if (!(x < y)) break;
            if (f.chord(x, y) <= pr.u && is_eps_linear(f, x, y, eps2)) {
                out.push_back(PieceA{x, y, false, false});
                x = y;
                found = true;
                break;
            }
        }
        if (found) continue;
        // excursion of g = f - u x from level g(x): largest y with
        // g >= g(x) on [x, y] and g(y) = g(x); exact chord-u piece
        Rat gx = f.eval(x) - pr.u * x;
        Rat y = x;
        Rat cur = x;
        bool dropped_below = false;
        while (cur < m && !dropped_below) {
            Rat nxt = Rat(cur.floor() + 1);
            if (nxt > m) nxt = m;
            Rat g0 = f.eval(cur) - pr.u * cur;
            Rat g1 = f.eval(nxt) - pr.u * nxt;
            if (g0 < gx) { dropped_below = true; break; }  // defensive; g0 >= gx is invariant
            if (g1 >= gx) {
                if (g1 == gx) y = nxt;
            } else {
                // affine segment crosses the level; crossing point is the last touch
                Rat sl = (g1 - g0) / (nxt - cur);
                y = cur + (gx - g0) / sl;
                dropped_below = true;
                break;
            }
            cur = nxt;
        }
        if (y > x) {
            out.push_back(PieceA{x, y, true, false});
            x = y;
        } else {
            // g never returns to the level: unreturned tail, leave uncovered
            uncovered_tail = m - x;
            break;
        }
    }
    return out;
}

} // namespace detail

inline IntervalDecomposition decompose_branching(const BranchingFunction& f, Rat s, Rat t, Rat u,
                                                 Rat eps) {
    if (!(Rat(0) < s && s < t && t < u))
        throw std::invalid_argument("decompose_branching: need 0 < s < t < u");
    if (!(Rat(0) < eps && eps < Rat::min(u - s, Rat(1, 2))))
        throw std::invalid_argument("decompose_branching: need 0 < eps < min(u - s, 1/2)");
    Rat m((long long)f.m);
    if (!(m > Rat(0))) throw std::invalid_argument("decompose_branching: empty domain");
    Rat eps2 = eps * eps;
    for (int j = 0; j <= f.m; ++j)
        if (f.values[j] < t * Rat(j) - eps2 * m)
            throw std::invalid_argument("decompose_branching: f(x) >= t x - eps^2 m fails at x = " +
                                        std::to_string(j));
    if (f.values[f.m] > (t + eps2) * m)
        throw std::invalid_argument("decompose_branching: f(m) <= (t + eps^2) m fails");

    DecompParams pr{s, t, u, eps};
    IntervalDecomposition dec;
    dec.params = pr;
    dec.m = f.m;
    dec.uncovered = Rat(0);

    Rat tail(0);
    std::vector<detail::PieceA> pieces = detail::initial_pieces(f, pr, tail);

    dec.tau_initial = Rat(0);
    for (const auto& p : pieces) {
        Rat len = (p.d - p.c) / m;
        if (dec.tau_initial == Rat(0) || len < dec.tau_initial) dec.tau_initial = len;
    }

    // Second pass, right to left. Pieces with chord >= s (or exact chord-u
    // superlinear pieces) are emitted as they stand; where the chord drops
    // below s, the last point c' with s_f(c', d_k) = s is located and the
    // degenerate envelope interval [c', d_k] is emitted, shortening or
    // absorbing the piece containing c'.
    std::vector<DecompInterval> emitted;
    int k = (int)pieces.size() - 1;
    int guard = 3 * (int)pieces.size() + 10;
    while (k >= 0) {
        if (--guard < 0)
            throw std::runtime_error("decompose_branching: processing loop failed to terminate");
        ++dec.iterations;
        detail::PieceA& pc = pieces[k];
        Rat tk = f.chord(pc.c, pc.d);
        if (pc.sup) {
            emitted.push_back(DecompInterval{pc.c, pc.d, 'b', tk, pc.d});
            --k;
            continue;
        }
        if (tk >= s) {
            emitted.push_back(DecompInterval{pc.c, pc.d, 'a', tk, Rat(0)});
            --k;
            continue;
        }
        // chord below s: either the remaining prefix is negligible and is
        // dropped whole (it is shorter than eps m / (t - s)) ...
        if (pc.d <= eps * m / (t - s)) {
            k = -1;
            break;
        }
        // ... or find the largest c' in (0, c_k) with s_f(c', d_k) = s.
        // h(x) = f(x) - s x; solve h(x) = h(d_k), scanning segments right to left.
        Rat target = f.eval(pc.d) - s * pc.d;
        Rat cprime = Rat(-1);
        {
            Rat hi = pc.c;
            while (hi > Rat(0)) {
                Rat lo = Rat(hi.ceil() - 1);
                if (lo < Rat(0)) lo = Rat(0);
                Rat hlo = f.eval(lo) - s * lo, hhi = f.eval(hi) - s * hi;
                if (hlo == target && hhi == target) { cprime = hi; break; }
                if ((hlo <= target && target <= hhi) || (hhi <= target && target <= hlo)) {
                    if (hhi == hlo) { cprime = hi; break; }
                    Rat x = lo + (target - hlo) / ((hhi - hlo) / (hi - lo));
                    if (x > Rat(0)) { cprime = x; break; }
                }
                hi = lo;
            }
        }
        if (!(cprime > Rat(0) && cprime < pc.c))
            throw std::runtime_error("decompose_branching: no crossing point; preconditions violated");

        // locate the piece containing c'
        int l = -1;
        for (int i = k - 1; i >= 0; --i)
            if (pieces[i].c <= cprime && cprime <= pieces[i].d) { l = i; break; }

        Rat chord_b = f.chord(cprime, pc.d);  // equals s by construction
        if (l < 0) {
            // c' in a gap: pieces right of it are covered by the emitted
            // interval; resume left of the gap
            emitted.push_back(DecompInterval{cprime, pc.d, 'b', chord_b,
                                             envelope_crossover(f, cprime, pc.d, s, u)});
            int nk = -1;
            for (int i = k - 1; i >= 0; --i)
                if (pieces[i].d < cprime) { nk = i; break; }
            k = nk;
            continue;
        }
        detail::PieceA& pl = pieces[l];
        if (pl.sup) {
            // merge: the whole superlinear piece joins the envelope interval
            emitted.push_back(DecompInterval{pl.c, pc.d, 'b', f.chord(pl.c, pc.d),
                                             envelope_crossover(f, pl.c, pc.d, s, u)});
            k = l - 1;
            continue;
        }
        if (cprime - pl.c <= Rat(2) * eps * (pl.d - pl.c)) {
            // short stub left of c': discard it (at most a 2 eps fraction)
            emitted.push_back(DecompInterval{cprime, pc.d, 'b', chord_b,
                                             envelope_crossover(f, cprime, pc.d, s, u)});
            k = l - 1;
            continue;
        }
        // replace the linear piece by its prefix [c_l, c'] and emit [c', d_k].
        // The prefix stays eps-linear; if its chord left the [0, u] range
        // (possible only within eps/2 of u) fall back to discarding the stub.
        Rat chord_prefix = f.chord(pl.c, cprime);
        emitted.push_back(DecompInterval{cprime, pc.d, 'b', chord_b,
                                         envelope_crossover(f, cprime, pc.d, s, u)});
        if (chord_prefix <= u) {
            pl.d = cprime;
            pl.weakened = true;
            k = l;
        } else {
            k = l - 1;  // rare: prefix chord pushed past u, discard the prefix
        }
    }

    std::sort(emitted.begin(), emitted.end(),
              [](const DecompInterval& a, const DecompInterval& b) { return a.c < b.c; });
    dec.intervals = std::move(emitted);

    // exact re-verification of every emitted interval
    for (const auto& iv : dec.intervals) {
        if (!(Rat(0) <= iv.c && iv.c < iv.d && iv.d <= m))
            throw std::runtime_error("decompose_branching: interval outside [0, m]");
        Rat ch = f.chord(iv.c, iv.d);
        if (!(ch == iv.chord)) throw std::runtime_error("decompose_branching: chord mismatch");
        if (ch < s || ch > u)
            throw std::runtime_error("decompose_branching: chord outside [s, u]");
        if (iv.kind == 'a') {
            if (!is_eps_linear(f, iv.c, iv.d, eps))
                throw std::runtime_error("decompose_branching: type-a interval not eps-linear");
        } else {
            if (!is_eps_superlinear(f, iv.c, iv.d, ch, eps))
                throw std::runtime_error("decompose_branching: type-b interval not eps-superlinear");
            if (!envelope_lower_bound_holds(f, iv.c, iv.d, s, u, eps))
                throw std::runtime_error("decompose_branching: type-b envelope bound fails");
        }
    }
    for (size_t i = 1; i < dec.intervals.size(); ++i)
        if (dec.intervals[i].c < dec.intervals[i - 1].d)
            throw std::runtime_error("decompose_branching: intervals overlap");

    Rat covered(0);
    for (const auto& iv : dec.intervals) covered += iv.d - iv.c;
    dec.uncovered = m - covered;  // authoritative: complement of the output
    dec.uncovered_bound = (Rat(2) + Rat(1) / (t - s) + Rat(2) * eps / (u - t)) * eps * m;

    dec.tau = Rat(0);
    for (const auto& iv : dec.intervals) {
        Rat len = (iv.d - iv.c) / m;
        if (dec.tau == Rat(0) || len < dec.tau) dec.tau = len;
    }
    return dec;
}

// --------------------------------------------------------------------------
// Scale classification. For each decomposition interval [c, d] (endpoints
// snapped inward to integers) the set inside every cell p at scale 2^{-cT}
// is rescaled to the unit square and covered at scale 2^{-(d-c)T}; the
// covering P_j is then checked against the interval's kind:
//   'a': both Ahlfors-David constants at exponent s_f(c,d) are at most
//        2^{T ((d-c) eps + 3)};
//   'b': every cell carries the same covering count (the global average),
//        and for every dyadic r in [2^{-(d-c)T}, 1] and every r-cell Q,
//        |P_j ∩ Q| <= 2^{T ((d-c) eps + 3)} max(r^{2-s} |P_j|, (r 2^{(d-c)T})^s).
// --------------------------------------------------------------------------

struct ScaleClassification {
    struct IntervalCheck {
        int index = 0;
        char kind = 'a';
        int c = 0, d = 0;      // snapped integer endpoints
        bool skipped = false;  // interval thinner than one level after snapping
        bool pass = true;
        long long cells_checked = 0;
        double threshold = 0;
        double worst = 0;     // worst constant or count/cap ratio encountered
        std::string witness;  // empty when pass
    };
    std::vector<IntervalCheck> intervals;
    bool all_pass = true;
};

inline ScaleClassification classify_scales(const CubeSet& P, const BranchingFunction& f,
                                           const IntervalDecomposition& dec,
                                           long long max_cells = 64, unsigned long long seed = 1) {
    int n = P.scale().n;
    if (n != f.m * f.T)
        throw std::invalid_argument("classify_scales: branching function does not match the set");
    int T = f.T;
    double s_par = dec.params.s.to_double();
    double eps_d = dec.params.eps.to_double();

    ScaleClassification out;
    int idx = -1;
    for (const auto& iv : dec.intervals) {
        ++idx;
        ScaleClassification::IntervalCheck ck;
        ck.index = idx;
        ck.kind = iv.kind;
        ck.c = (int)iv.c.ceil();
        ck.d = (int)iv.d.floor();
        if (ck.d - ck.c < 1) {
            ck.skipped = true;
            out.intervals.push_back(ck);
            continue;
        }
        int span = ck.d - ck.c;
        ck.threshold = std::exp2(double(T) * (double(span) * eps_d + 3.0));

        CubeSet coarse = parent_set(P, Scale(ck.c * T));
        std::vector<CellIndex> cells;
        for (const auto& e : coarse.entries()) cells.push_back(CellIndex{e.ix, e.iy});
        if ((long long)cells.size() > max_cells) {
            std::mt19937_64 rng(seed + (unsigned long long)idx * 1000003ULL);
            for (long long i = 0; i < max_cells; ++i) {
                size_t j = i + (size_t)(rng() % (cells.size() - i));
                std::swap(cells[i], cells[j]);
            }
            cells.resize(max_cells);
            std::sort(cells.begin(), cells.end());
        }

        // expected per-cell covering count for the exact-count check
        long long cov_d = covering_number(P, Scale(ck.d * T));
        long long cov_c = covering_number(P, Scale(ck.c * T));

        for (const auto& cell : cells) {
            if (!ck.pass) break;
            ++ck.cells_checked;
            CubeSet R = rescale_cubeset(P, DyadicCube(Scale(ck.c * T), cell.ix, cell.iy));
            CubeSet Pj = parent_set(R, Scale(span * T));
            if (iv.kind == 'a') {
                double tj = iv.chord.to_double();
                auto [up, lo] = ad_regular_constants(Pj, tj);
                double worst = std::max(up.best_constant, lo.best_constant);
                ck.worst = std::max(ck.worst, worst);
                if (worst > ck.threshold * (1.0 + 1e-12)) {
                    ck.pass = false;
                    ck.witness = "cell=(" + std::to_string(cell.ix) + "," + std::to_string(cell.iy) +
                                 ") ad_constant=" + detail::fmt_g17(worst) +
                                 " threshold=" + detail::fmt_g17(ck.threshold);
                }
            } else {
                long long count = Pj.distinct_count();
                if (cov_c * count != cov_d) {
                    ck.pass = false;
                    ck.worst = double(count);
                    ck.witness = "cell=(" + std::to_string(cell.ix) + "," + std::to_string(cell.iy) +
                                 ") count=" + std::to_string(count) + " expected=" +
                                 std::to_string(cov_d) + "/" + std::to_string(cov_c);
                    break;
                }
                // two-regime cap over all dyadic r-cells
                for (int l = 0; l <= span * T && ck.pass; ++l) {
                    double cap = ck.threshold *
                                 std::max(std::exp2(-double(l) * (2.0 - s_par)) * double(count),
                                          std::exp2(double(span * T - l) * s_par));
                    CubeSet Q = parent_set(Pj, Scale(l));
                    for (const auto& q : Q.entries()) {
                        // distinct sub-cells of Pj under q
                        long long inner = 0;
                        int sh = span * T - l;
                        for (const auto& e : Pj.entries())
                            if ((e.ix >> sh) == q.ix && (e.iy >> sh) == q.iy) ++inner;
                        ck.worst = std::max(ck.worst, double(inner) / cap);
                        if (double(inner) > cap + 1e-6) {
                            ck.pass = false;
                            ck.witness = "cell=(" + std::to_string(cell.ix) + "," +
                                         std::to_string(cell.iy) + ") r_exp=" + std::to_string(l) +
                                         " Q=(" + std::to_string(q.ix) + "," + std::to_string(q.iy) +
                                         ") count=" + std::to_string(inner) +
                                         " cap=" + detail::fmt_g17(cap);
                            break;
                        }
                    }
                }
            }
        }
        if (!ck.pass) out.all_pass = false;
        out.intervals.push_back(ck);
    }
    return out;
}

} // namespace furstlab
