// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NLHJB_IO_HPP
#define NLHJB_IO_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlhjb/grid.hpp"
#include "nlhjb/problem.hpp"

namespace nlhjb {

/// 17 significant digits: lossless decimal round-trip for IEEE doubles.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// GridFunction CSV: a '#'-prefixed header block encoding the geometry and
// far-field model, then (x, value) rows.
// ---------------------------------------------------------------------------

inline void write_grid_function(std::ostream& os, const GridFunction& u) {
    const auto& ff = u.farfield();
    os << "# grid x0 " << fmt17(u.xlo()) << " h " << fmt17(u.h()) << " n "
       << u.size() << "\n";
    os << "# farfield " << ff.kind_name();
    switch (ff.kind) {
    case FarFieldModel::Kind::Zero: break;
    case FarFieldModel::Kind::Constant: os << " value " << fmt17(ff.value); break;
    case FarFieldModel::Kind::PowerGrowth:
        os << " amp " << fmt17(ff.amp) << " beta " << fmt17(ff.beta) << " anchor "
           << fmt17(ff.anchor);
        break;
    case FarFieldModel::Kind::Periodic: os << " period " << fmt17(ff.period); break;
    }
    os << "\n";
    os << "x,value\n";
    for (std::size_t i = 0; i < u.size(); ++i)
        os << fmt17(u.x(i)) << "," << fmt17(u[i]) << "\n";
}

inline void write_grid_function(const std::string& path, const GridFunction& u) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_grid_function(os, u);
}

inline GridFunction read_grid_function(std::istream& is) {
    std::string line;
    double x0 = 0.0, h = 0.0;
    std::size_t n = 0;
    FarFieldModel ff;
    bool saw_grid = false;
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag;
            ls >> tag;
            if (tag == "grid") {
                std::string k;
                while (ls >> k) {
                    if (k == "x0") ls >> x0;
                    else if (k == "h") ls >> h;
                    else if (k == "n") ls >> n;
                }
                saw_grid = true;
            } else if (tag == "farfield") {
                std::string kind;
                ls >> kind;
                if (kind == "zero") ff = FarFieldModel::zero();
                else if (kind == "constant") {
                    std::string k; double v;
                    ls >> k >> v;
                    ff = FarFieldModel::constant(v);
                } else if (kind == "power_growth") {
                    std::string k; double a = 0, b = 0, L = 1;
                    while (ls >> k) {
                        if (k == "amp") ls >> a;
                        else if (k == "beta") ls >> b;
                        else if (k == "anchor") ls >> L;
                    }
                    ff = FarFieldModel::power_growth(a, b, L);
                } else if (kind == "periodic") {
                    std::string k; double T;
                    ls >> k >> T;
                    ff = FarFieldModel::periodic(T);
                } else {
                    throw std::runtime_error("unknown far field kind: " + kind);
                }
            }
            continue;
        }
        if (line.rfind("x,", 0) == 0) continue;  // column header
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed grid csv row: " + line);
        vals.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
    }
    if (!saw_grid || vals.size() != n)
        throw std::runtime_error("grid csv header/row mismatch");
    GridFunction u(x0, h, n, ff);
    for (std::size_t i = 0; i < n; ++i) u[i] = vals[i];
    return u;
}

inline GridFunction read_grid_function(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_grid_function(is);
}

// ---------------------------------------------------------------------------
// Key-value problem config.
//
// Schema (one `key = value` per line, '#' comments):
//   order.s            fractional order, in (1/2, 1)
//   hamiltonian.m      gradient growth exponent, > 1
//   source.kind        power_growth
//   source.c0          amplitude of f
//   source.gamma       growth exponent of f
//   truncation.radii   comma-separated increasing radii
//   seed               64-bit unsigned
//   grid.h             optional grid spacing (default 0.125)
//   dim                optional, 1 or 2 (default 1)
// ---------------------------------------------------------------------------

struct RunConfig {
    ProblemSpec spec;
    std::uint64_t seed = 0;
    double grid_h = 0.125;
    std::map<std::string, std::string> raw;
};

inline RunConfig parse_config(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }

    auto get = [&](const std::string& k, const std::string& dflt) {
        const auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    };
    auto require = [&](const std::string& k) {
        const auto it = kv.find(k);
        if (it == kv.end()) throw std::invalid_argument("config missing key: " + k);
        return it->second;
    };

    RunConfig rc;
    rc.raw = kv;
    rc.spec.order.s = std::strtod(require("order.s").c_str(), nullptr);
    rc.spec.dim = std::atoi(get("dim", "1").c_str());
    rc.spec.hamiltonian =
        HamiltonianSpec::power_law(std::strtod(require("hamiltonian.m").c_str(), nullptr));
    const std::string kind = get("source.kind", "power_growth");
    if (kind != "power_growth")
        throw std::invalid_argument("unsupported source.kind in config: " + kind);
    rc.spec.source =
        SourceTerm::power_growth(std::strtod(require("source.c0").c_str(), nullptr),
                                 std::strtod(require("source.gamma").c_str(), nullptr));
    {
        std::istringstream rs(require("truncation.radii"));
        std::string tok;
        while (std::getline(rs, tok, ','))
            rc.spec.truncation_plan.push_back(std::strtod(tok.c_str(), nullptr));
    }
    rc.spec.order.validate();
    rc.spec.kernel = KernelSpec::fractional_laplacian(rc.spec.dim, rc.spec.order.s);
    rc.spec.regime = rc.spec.recompute_regime();
    rc.seed = std::strtoull(get("seed", "0").c_str(), nullptr, 10);
    rc.grid_h = std::strtod(get("grid.h", "0.125").c_str(), nullptr);
    return rc;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    return parse_config(is);
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

inline void write_validation_report(std::ostream& os, const ValidationReport& rep) {
    os << "assumption,status,metric,witness\n";
    for (const auto& e : rep.entries)
        os << e.name << "," << (e.pass ? "pass" : "fail") << "," << fmt17(e.metric)
           << "," << e.witness << "\n";
}

struct LambdaTableRow {
    double alpha = 0.0;
    double n = 0.0;
    double lambda_alpha = 0.0;
    double residual = 0.0;
};

inline void write_lambda_table(std::ostream& os,
                               const std::vector<LambdaTableRow>& rows) {
    os << "alpha,n,lambda_alpha,residual\n";
    for (const auto& r : rows)
        os << fmt17(r.alpha) << "," << fmt17(r.n) << "," << fmt17(r.lambda_alpha)
           << "," << fmt17(r.residual) << "\n";
}

}  // namespace nlhjb

#endif  // NLHJB_IO_HPP
