#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "inflab/errors.hpp"
#include "inflab/grid.hpp"

namespace inflab {

/// 17 significant digits: round-trips IEEE doubles exactly.
inline std::string num17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Field dump: header `x,y,value`, rows ordered by y then x.
inline void write_field_csv(const ScalarField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "x,y,value\n";
    const GridSpec& g = f.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out << num17(g.x(i)) << ',' << num17(g.y(j)) << ',' << num17(f.v[g.idx(i, j)])
                << '\n';
    if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace inflab
