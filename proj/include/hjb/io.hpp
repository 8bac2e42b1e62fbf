#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hjb/grid.hpp"

namespace hjb {

// Plain-text solution dump, format id "hjbgrid/1". Header lines carry the
// lattice metadata; one line per valued node follows with integer indices,
// class tag (i = interior, b = band) and the value at 17 significant digits,
// in ascending flat order.
void write_solution_dump(std::ostream& os, const std::string& problem,
                         const GridFunction& v);

struct DumpNode {
    Offset idx{0, 0, 0};
    NodeClass cls = NodeClass::unused;
    double value = 0.0;
};

struct SolutionDump {
    std::string problem;
    int dim = 0;
    double h = 0.0;
    Offset lo{0, 0, 0}, hi{0, 0, 0};
    std::vector<Offset> directions;  // unsigned representatives
    std::vector<DumpNode> nodes;     // ascending flat order
};

// Parse a dump produced by write_solution_dump. Throws std::runtime_error on
// malformed input (bad magic, truncated node list, unknown class tag).
SolutionDump read_solution_dump(std::istream& is);

}  // namespace hjb
