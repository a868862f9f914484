#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cube_set.hpp"
#include "tube_set.hpp"

namespace furstlab {

/// Deterministic float formatting: integers print bare, everything else with
/// enough digits to round-trip. Used by every writer so repeated runs are
/// byte-identical.
inline std::string format_weight(double w) {
    if (w == (double)(long long)w && w > -1e15 && w < 1e15)
        return std::to_string((long long)w);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    return buf;
}

// ---------------------------------------------------------------------------
// CUBESET v1
//   header: CUBESET v1 n=<exp>
//   record: n ix iy mult weight
// ---------------------------------------------------------------------------

inline void write_cubeset(std::ostream& os, const CubeSet& P) {
    os << "CUBESET v1 n=" << P.scale().n << "\n";
    for (const auto& e : P.entries())
        os << P.scale().n << " " << e.ix << " " << e.iy << " " << e.mult << " "
           << format_weight(e.weight) << "\n";
}

inline void write_cubeset_file(const std::string& path, const CubeSet& P) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    write_cubeset(f, P);
}

inline CubeSet read_cubeset(std::istream& is) {
    std::string tag, ver, nfield;
    is >> tag >> ver >> nfield;
    if (tag != "CUBESET" || ver != "v1" || nfield.rfind("n=", 0) != 0)
        throw std::runtime_error("bad CUBESET header");
    int n = std::stoi(nfield.substr(2));
    std::vector<CubeEntry> entries;
    long long rn, ix, iy, mult;
    double w;
    // A record that fails to parse must throw, not end the loop: otherwise a
    // corrupt file silently loads as a truncated set.
    while (is >> rn) {
        if (!(is >> ix >> iy >> mult >> w))
            throw std::runtime_error("bad or truncated CUBESET record");
        if (rn != n) throw std::runtime_error("CUBESET record scale differs from header");
        entries.push_back(CubeEntry{ix, iy, mult, w});
    }
    is.clear();
    std::string leftover;
    if (is >> leftover) throw std::runtime_error("bad CUBESET record near: " + leftover);
    return CubeSet(Scale(n), std::move(entries));
}

inline CubeSet read_cubeset_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_cubeset(f);
}

// ---------------------------------------------------------------------------
// TUBESET v1
//   header: TUBESET v1 n=<exp> mode=<distinct|multi>
//   record: n ia ib mult weight   (weight column kept for format symmetry)
// ---------------------------------------------------------------------------

inline void write_tubeset(std::ostream& os, const TubeSet& T) {
    os << "TUBESET v1 n=" << T.scale().n << " mode="
       << (T.mode() == TubeMode::distinct ? "distinct" : "multi") << "\n";
    for (const auto& e : T.entries())
        os << T.scale().n << " " << e.ia << " " << e.ib << " " << e.mult << " 1\n";
}

inline void write_tubeset_file(const std::string& path, const TubeSet& T) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    write_tubeset(f, T);
}

inline TubeSet read_tubeset(std::istream& is) {
    std::string tag, ver, nfield, modefield;
    is >> tag >> ver >> nfield >> modefield;
    if (tag != "TUBESET" || ver != "v1" || nfield.rfind("n=", 0) != 0 ||
        modefield.rfind("mode=", 0) != 0)
        throw std::runtime_error("bad TUBESET header");
    int n = std::stoi(nfield.substr(2));
    std::string mode = modefield.substr(5);
    if (mode != "distinct" && mode != "multi")
        throw std::runtime_error("bad TUBESET mode: " + mode);
    std::vector<TubeSet::Entry> entries;
    long long rn, ia, ib, mult;
    double w;
    while (is >> rn) {
        if (!(is >> ia >> ib >> mult >> w))
            throw std::runtime_error("bad or truncated TUBESET record");
        if (rn != n) throw std::runtime_error("TUBESET record scale differs from header");
        entries.push_back(TubeSet::Entry{ia, ib, mult});
    }
    is.clear();
    std::string leftover;
    if (is >> leftover) throw std::runtime_error("bad TUBESET record near: " + leftover);
    return TubeSet(Scale(n), mode == "distinct" ? TubeMode::distinct : TubeMode::multi,
                   std::move(entries));
}

inline TubeSet read_tubeset_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_tubeset(f);
}

/// 1D sets reuse CUBESET v1 with iy = 0.
inline void write_cubeset1d_file(const std::string& path, const CubeSet1D& A) {
    std::vector<CubeEntry> entries;
    for (long long i : A.indices()) entries.push_back(CubeEntry{i, 0, 1, 1.0});
    write_cubeset_file(path, CubeSet(A.scale(), std::move(entries)));
}

inline CubeSet1D read_cubeset1d_file(const std::string& path) {
    CubeSet P = read_cubeset_file(path);
    std::vector<long long> idx;
    for (const auto& e : P.entries()) idx.push_back(e.ix);
    return CubeSet1D(P.scale(), std::move(idx));
}

} // namespace furstlab
