#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fit.hpp"
#include "generators.hpp"
#include "highlow.hpp"
#include "incidence.hpp"
#include "regularity.hpp"

namespace furstlab {

// --------------------------------------------------------------------------
// Experiment specs: flat key=value text files with '#' comments. Every run
// is deterministic for a fixed spec (fixed seeds, sorted iteration) and
// writes its artifacts (CSV ladder, JSON fit summary, SVG plot) into an
// output directory.
// --------------------------------------------------------------------------

struct ExperimentSpec {
    std::string kind;
    std::map<std::string, std::string> params;

    static ExperimentSpec parse(std::istream& in) {
        ExperimentSpec spec;
        std::string line;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        while (std::getline(in, line)) {
            size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;
            size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("experiment spec: expected key=value, got: " + line);
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key == "kind") spec.kind = val;
            else spec.params[key] = val;
        }
        if (spec.kind.empty()) throw std::invalid_argument("experiment spec: missing kind=");
        return spec;
    }

    static ExperimentSpec parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open experiment spec: " + path);
        return parse(in);
    }

    std::string get(const std::string& key, const std::string& dflt = "") const {
        auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    }
    double get_num(const std::string& key, double dflt) const {
        auto it = params.find(key);
        return it == params.end() ? dflt : std::stod(it->second);
    }
    long long get_int(const std::string& key, long long dflt) const {
        auto it = params.find(key);
        return it == params.end() ? dflt : std::stoll(it->second);
    }
};

struct ExperimentResult {
    std::string name;
    std::map<std::string, double> metrics;
    std::vector<std::string> files;
};

/// Conjectured exponents for the cube-count and tube-count forms of the
/// incidence problem with point dimension t and per-point slope dimension s.
inline double conjectured_dim_exponent(double s, double t) {
    return std::min({s + t, (3 * s + t) / 2.0, s + 1.0});
}
inline double conjectured_tube_exponent(double s, double t) {
    return std::min({t, (s + t) / 2.0, 1.0});
}

namespace detail {

/// Minimal log-log scatter plot with the fitted line, deterministic output.
inline void write_scatter_svg(const std::string& path, const std::string& title,
                              const std::vector<double>& xs, const std::vector<double>& ys,
                              const LineFit& fit, const std::string& xlabel,
                              const std::string& ylabel) {
    double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
    for (double v : xs) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : ys) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    for (double x : {xmin, xmax}) {
        double y = fit.slope * x + fit.intercept;
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (xmax - xmin < 1e-9) { xmin -= 1; xmax += 1; }
    if (ymax - ymin < 1e-9) { ymin -= 1; ymax += 1; }
    const double W = 640, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
    auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
    char buf[256];
    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  title.c_str());
    out << buf;
    // axes
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ML,
                  H - MB, W - MR, H - MB);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", ML,
                  MT, ML, H - MB);
    out << buf;
    for (int i = 0; i <= 4; ++i) {
        double tx = xmin + (xmax - xmin) * i / 4.0;
        double ty = ymin + (ymax - ymin) * i / 4.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"11\" "
                      "font-family=\"sans-serif\">%.3g</text>\n",
                      px(tx), H - MB + 18, tx);
        out << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\" "
                      "font-family=\"sans-serif\">%.3g</text>\n",
                      ML - 6, py(ty) + 4, ty);
        out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"12\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  (ML + W - MR) / 2, H - 12, xlabel.c_str());
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"16\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"12\" "
                  "font-family=\"sans-serif\" transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                  (MT + H - MB) / 2, (MT + H - MB) / 2, ylabel.c_str());
    out << buf;
    // fitted line
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#c03030\" "
                  "stroke-width=\"1.5\"/>\n",
                  px(xmin), py(fit.slope * xmin + fit.intercept), px(xmax),
                  py(fit.slope * xmax + fit.intercept));
    out << buf;
    for (size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"4\" fill=\"#3060c0\"/>\n", px(xs[i]),
                      py(ys[i]));
        out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" font-family=\"sans-serif\" "
                  "fill=\"#c03030\">slope %.4f</text>\n",
                  ML + 10, MT + 16, fit.slope);
    out << buf;
    out << "</svg>\n";
}

inline void write_fit_json(const std::string& path, const std::string& name, const LineFit& fit,
                           const std::map<std::string, double>& extra) {
    std::ofstream out(path);
    out << "{\n  \"experiment\": \"" << name << "\",\n";
    out << "  \"slope\": " << fmt_g17(fit.slope) << ",\n";
    out << "  \"intercept\": " << fmt_g17(fit.intercept) << ",\n";
    out << "  \"max_residual\": " << fmt_g17(fit.max_residual);
    for (const auto& [k, v] : extra) out << ",\n  \"" << k << "\": " << fmt_g17(v);
    out << "\n}\n";
}

inline NiceConfiguration make_configuration(const std::string& family, Scale delta, double s,
                                            double t, unsigned long long seed) {
    if (family == "grid") return grid_example(delta, s, t);
    if (family == "cantor") return cantor_configuration(delta, s, t);
    if (family == "random") return random_nice_configuration(delta, s, t, seed);
    throw std::invalid_argument("unknown configuration family: " + family);
}

} // namespace detail

/// Tube-count ladder for one configuration family: the number of distinct
/// tubes needed by a (delta, s) family through each point of a t-dimensional
/// set, fitted against log2(1/delta).
inline ExperimentResult run_furstenberg(const ExperimentSpec& spec, const std::string& outdir) {
    std::string family = spec.get("family", "grid");
    double s = spec.get_num("s", 0.5), t = spec.get_num("t", 1.0);
    int nmin = (int)spec.get_int("nmin", 4), nmax = (int)spec.get_int("nmax", 8);
    unsigned long long seed = (unsigned long long)spec.get_int("seed", 1);
    std::string name = spec.get("name", "furstenberg-" + family);

    std::vector<double> xs, ys;
    std::ostringstream csv;
    csv << "n,points,slopes_per_point,tubes,log2_tube_ratio\n";
    for (int n = nmin; n <= nmax; ++n) {
        NiceConfiguration cfg = detail::make_configuration(family, Scale(n), s, t, seed + n);
        double ratio = double(cfg.tubes.distinct_count()) / double(cfg.M);
        xs.push_back(double(n));
        ys.push_back(std::log2(ratio));
        csv << n << "," << cfg.P.distinct_count() << "," << cfg.M << ","
            << cfg.tubes.distinct_count() << "," << detail::fmt_g17(std::log2(ratio)) << "\n";
    }
    LineFit fit = fit_line(xs, ys);

    ExperimentResult res;
    res.name = name;
    res.metrics["fitted_exponent"] = fit.slope;
    res.metrics["predicted_exponent"] = conjectured_tube_exponent(s, t);
    res.metrics["predicted_dim_exponent"] = conjectured_dim_exponent(s, t);
    res.metrics["max_residual"] = fit.max_residual;
    res.metrics["s"] = s;
    res.metrics["t"] = t;

    std::filesystem::create_directories(outdir);
    std::string base = outdir + "/" + name;
    { std::ofstream f(base + "_ladder.csv"); f << csv.str(); }
    detail::write_fit_json(base + "_fit.json", name, fit, res.metrics);
    detail::write_scatter_svg(base + "_plot.svg", name + ": tube count growth", xs, ys, fit,
                              "log2(1/delta)", "log2(|T| / M)");
    res.files = {base + "_ladder.csv", base + "_fit.json", base + "_plot.svg"};
    return res;
}

/// Orthogonal projection statistics for a product set: covering numbers of
/// the projections over a fan of directions, the directions whose projection
/// is small (exceptional set), and the arc-covering growth of that set.
inline ExperimentResult run_projection(const ExperimentSpec& spec, const std::string& outdir) {
    double dim = spec.get_num("dim", 1.0);
    double u = spec.get_num("u", 0.7);
    double tol = spec.get_num("tol", 0.1);
    int nmin = (int)spec.get_int("nmin", 5), nmax = (int)spec.get_int("nmax", 9);
    long long fan = spec.get_int("directions_per_scale", 4);
    std::string name = spec.get("name", "projection");

    std::vector<double> xs, ys;
    std::ostringstream csv;
    csv << "n,directions,exceptional,exceptional_arcs\n";
    double exceptional_fraction = 0;
    for (int n = nmin; n <= nmax; ++n) {
        Scale delta(n);
        CubeSet E = cantor_product(delta, dim / 2.0, dim / 2.0);
        long long thetas = fan << n;
        long long exceptional = 0;
        std::set<long long> arcs;
        for (long long i = 0; i < thetas; ++i) {
            double theta = std::numbers::pi * (double(i) + 0.5) / double(thetas);
            double c = std::cos(theta), s = std::sin(theta);
            double d = delta.value();
            std::vector<std::pair<long long, long long>> iv;
            iv.reserve(E.entries().size());
            for (const auto& e : E.entries()) {
                double xlo = double(e.ix) * d, xhi = xlo + d;
                double ylo = double(e.iy) * d, yhi = ylo + d;
                double lo = (c >= 0 ? xlo : xhi) * c + ylo * s;
                double hi = (c >= 0 ? xhi : xlo) * c + yhi * s;
                iv.emplace_back((long long)std::floor(lo / d), (long long)std::floor(hi / d));
            }
            std::sort(iv.begin(), iv.end());
            long long cover = 0, cur_hi = LLONG_MIN;
            for (const auto& [lo, hi] : iv) {
                if (lo > cur_hi) {
                    cover += hi - lo + 1;
                    cur_hi = hi;
                } else if (hi > cur_hi) {
                    cover += hi - cur_hi;
                    cur_hi = hi;
                }
            }
            if (std::log2(double(cover)) / double(n) < u - tol) {
                ++exceptional;
                arcs.insert((i << n) / thetas);  // delta-arc index of theta
            }
        }
        xs.push_back(double(n));
        ys.push_back(std::log2(double(std::max<long long>((long long)arcs.size(), 1))));
        exceptional_fraction = double(exceptional) / double(thetas);
        csv << n << "," << thetas << "," << exceptional << "," << arcs.size() << "\n";
    }
    LineFit fit = fit_line(xs, ys);

    ExperimentResult res;
    res.name = name;
    res.metrics["arc_exponent"] = fit.slope;
    res.metrics["exceptional_dim_bound"] = std::max(2.0 * u - dim, 0.0);
    res.metrics["exceptional_fraction_finest"] = exceptional_fraction;
    res.metrics["dim"] = dim;
    res.metrics["u"] = u;

    std::filesystem::create_directories(outdir);
    std::string base = outdir + "/" + name;
    { std::ofstream f(base + "_ladder.csv"); f << csv.str(); }
    detail::write_fit_json(base + "_fit.json", name, fit, res.metrics);
    detail::write_scatter_svg(base + "_plot.svg", name + ": exceptional arc growth", xs, ys, fit,
                              "log2(1/delta)", "log2(arcs)");
    res.files = {base + "_ladder.csv", base + "_fit.json", base + "_plot.svg"};
    return res;
}

namespace detail {

/// Covering counts of A+A and A.A at scale delta, for A in [1, 2].
inline std::pair<long long, long long> sum_product_counts(const CubeSet1D& A) {
    int n = A.scale().n;
    const auto& idx = A.indices();
    long long span = 5LL << n;
    std::vector<char> sum_hit((size_t)span, 0), prod_hit((size_t)span, 0);
    for (long long i : idx)
        for (long long j : idx) {
            // [i delta, (i+1) delta] + [j delta, (j+1) delta] covers cells i+j, i+j+1
            sum_hit[(size_t)(i + j)] = 1;
            sum_hit[(size_t)(i + j + 1)] = 1;
            // product covers [i j delta^2, (i+1)(j+1) delta^2]
            long long lo = (i * j) >> n;
            long long hi = ((i + 1) * (j + 1) - 1) >> n;
            for (long long cidx = lo; cidx <= hi; ++cidx) prod_hit[(size_t)cidx] = 1;
        }
    long long sums = 0, prods = 0;
    for (char c : sum_hit) sums += c;
    for (char c : prod_hit) prods += c;
    return {sums, prods};
}

} // namespace detail

/// Sum-product growth: covering numbers of A+A and A.A against |A|, either
/// along a scale ladder (family=interval) or at one scale (family=cantor).
inline ExperimentResult run_sumproduct(const ExperimentSpec& spec, const std::string& outdir) {
    std::string family = spec.get("family", "interval");
    std::string name = spec.get("name", "sumproduct-" + family);
    ExperimentResult res;
    res.name = name;
    std::filesystem::create_directories(outdir);
    std::string base = outdir + "/" + name;

    std::ostringstream csv;
    csv << "n,count,sums,products,log2_count,log2_max\n";
    if (family == "interval") {
        int nmin = (int)spec.get_int("nmin", 4), nmax = (int)spec.get_int("nmax", 9);
        std::vector<double> xs, ys;
        for (int n = nmin; n <= nmax; ++n) {
            std::vector<long long> all;
            for (long long i = 1LL << n; i < (2LL << n); ++i) all.push_back(i);
            CubeSet1D A(Scale(n), std::move(all));
            auto [sums, prods] = detail::sum_product_counts(A);
            double lmax = std::log2(double(std::max(sums, prods)));
            xs.push_back(std::log2(double(A.count())));
            ys.push_back(lmax);
            csv << n << "," << A.count() << "," << sums << "," << prods << ","
                << detail::fmt_g17(std::log2(double(A.count()))) << "," << detail::fmt_g17(lmax)
                << "\n";
        }
        LineFit fit = fit_line(xs, ys);
        res.metrics["growth_slope"] = fit.slope;
        res.metrics["max_residual"] = fit.max_residual;
        detail::write_fit_json(base + "_fit.json", name, fit, res.metrics);
        detail::write_scatter_svg(base + "_plot.svg", name + ": max(|A+A|,|A.A|) vs |A|", xs, ys,
                                  fit, "log2|A|", "log2 max(|A+A|,|A.A|)");
        res.files = {base + "_ladder.csv", base + "_fit.json", base + "_plot.svg"};
    } else if (family == "cantor") {
        int n = (int)spec.get_int("n", 10);
        double s = spec.get_num("s", 0.5);
        CubeSet1D A = cantor_1d(Scale(n), s);
        auto [sums, prods] = detail::sum_product_counts(A);
        double lmax = std::log2(double(std::max(sums, prods)));
        csv << n << "," << A.count() << "," << sums << "," << prods << ","
            << detail::fmt_g17(std::log2(double(A.count()))) << "," << detail::fmt_g17(lmax)
            << "\n";
        res.metrics["input_exponent"] = std::log2(double(A.count())) / double(n);
        res.metrics["growth_exponent"] = lmax / double(n);
        res.metrics["sums"] = double(sums);
        res.metrics["products"] = double(prods);
        res.files = {base + "_ladder.csv"};
    } else {
        throw std::invalid_argument("sumproduct family must be interval or cantor");
    }
    { std::ofstream f(base + "_ladder.csv"); f << csv.str(); }
    return res;
}

/// Frequency-split calibration ladder: runs the decomposition on the aligned
/// grid and on random configurations across scales and reports the worst
/// fitted constants, for freezing acceptance thresholds.
inline ExperimentResult run_highlow_calibration(const ExperimentSpec& spec,
                                                const std::string& outdir) {
    int nmin = (int)spec.get_int("nmin", 5), nmax = (int)spec.get_int("nmax", 7);
    double eps = spec.get_num("eps", 0.1);
    double s = spec.get_num("s", 0.7), t = spec.get_num("t", 1.0);
    unsigned long long seed = (unsigned long long)spec.get_int("seed", 11);
    std::string name = spec.get("name", "highlow-calibration");

    ExperimentResult res;
    res.name = name;
    std::ostringstream csv;
    csv << "family,n,S,total,low_term,bound_high,high_energy,energy_ratio,parseval_rel_error,"
           "fitted\n";
    double max_fitted = 0, max_fitted_norm = 0, max_ratio = 0, max_parseval = 0;
    std::vector<double> xs, ys;
    for (int n = nmin; n <= nmax; ++n) {
        for (const std::string family : {"grid", "random"}) {
            NiceConfiguration cfg =
                family == "grid" ? grid_example(Scale(n), 1.0, 1.0)
                                 : random_nice_configuration(Scale(n), s, t, seed + n);
            long long S = 1LL << std::max(1, (n + 1) / 2);
            HighLowReport rep = highlow_decompose(cfg.P, cfg.tubes, S, eps);
            csv << family << "," << n << "," << rep.S << ","
                << detail::fmt_g17(rep.total_incidence) << "," << detail::fmt_g17(rep.low_term)
                << "," << detail::fmt_g17(rep.bound_high) << ","
                << detail::fmt_g17(rep.high_energy) << "," << detail::fmt_g17(rep.energy_ratio)
                << "," << detail::fmt_g17(rep.parseval_rel_error) << ","
                << detail::fmt_g17(rep.fitted_constant) << "\n";
            max_fitted = std::max(max_fitted, rep.fitted_constant);
            max_fitted_norm = std::max(max_fitted_norm, rep.fitted_constant / double(n * n));
            max_ratio = std::max(max_ratio, rep.energy_ratio);
            max_parseval = std::max(max_parseval, rep.parseval_rel_error);
            if (family == "grid") {
                xs.push_back(double(n));
                ys.push_back(rep.fitted_constant);
            }
        }
    }
    res.metrics["max_fitted_constant"] = max_fitted;
    res.metrics["max_fitted_over_log2sq"] = max_fitted_norm;
    res.metrics["max_energy_ratio"] = max_ratio;
    res.metrics["max_parseval_rel_error"] = max_parseval;

    std::filesystem::create_directories(outdir);
    std::string base = outdir + "/" + name;
    { std::ofstream f(base + "_ladder.csv"); f << csv.str(); }
    LineFit fit = fit_line(xs, ys);
    detail::write_fit_json(base + "_fit.json", name, fit, res.metrics);
    detail::write_scatter_svg(base + "_plot.svg", name + ": fitted constant (grid family)", xs,
                              ys, fit, "log2(1/delta)", "fitted constant");
    res.files = {base + "_ladder.csv", base + "_fit.json", base + "_plot.svg"};
    return res;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& outdir) {
    if (spec.kind == "furstenberg") return run_furstenberg(spec, outdir);
    if (spec.kind == "projection") return run_projection(spec, outdir);
    if (spec.kind == "sumproduct") return run_sumproduct(spec, outdir);
    if (spec.kind == "highlow-calibration") return run_highlow_calibration(spec, outdir);
    throw std::invalid_argument("unknown experiment kind: " + spec.kind);
}

} // namespace furstlab
