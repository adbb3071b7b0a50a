#pragma once

// Plain-text output shared by the CLI and tests. Numbers are written with 17
// significant digits so a file read back reproduces the doubles exactly.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blowup/model.hpp"
#include "blowup/phase.hpp"

namespace blowup::io {

inline std::string g17(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

/// xi,f,fprime,g,dg with a header row and LF line endings.
inline void write_profile_csv(std::ostream& os, const Profile& prof) {
    const Params& p = prof.params();
    os << "xi,f,fprime,g,dg\n";
    for (const auto& s : prof.samples()) {
        const double g = std::max(s.g, 0.0);
        os << g17(s.xi) << ',' << g17(f_from_g(p, g)) << ',' << g17(fprime_from_g(p, g, s.dg)) << ','
           << g17(s.g) << ',' << g17(s.dg) << '\n';
    }
}

/// Reads a profile CSV back (xi, g and dg columns are used).
inline Profile read_profile_csv(std::istream& is, const Params& p) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("xi,f,fprime,g,dg", 0) != 0) {
        throw DomainError("read_profile_csv: missing header");
    }
    std::vector<ProfileState> s;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
        if (v.size() != 5) throw DomainError("read_profile_csv: expected 5 columns");
        s.push_back({v[0], v[3], v[4]});
    }
    return Profile(p, std::move(s), Tabulated{});
}

/// eta,X,Y,Z,cylinder_value.
inline void write_orbit_csv(std::ostream& os, const Params& p, const std::vector<double>& eta,
                            const std::vector<PhaseState>& states) {
    os << "eta,X,Y,Z,cylinder_value\n";
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const auto& s = states[i];
        os << g17(eta[i]) << ',' << g17(s.X) << ',' << g17(s.Y) << ',' << g17(s.Z) << ','
           << g17(cylinder_value(p, s)) << '\n';
    }
}

}  // namespace blowup::io
