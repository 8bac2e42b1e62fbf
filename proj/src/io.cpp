#include "hjb/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hjb {

namespace {

std::string full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

}  // namespace

void write_solution_dump(std::ostream& os, const std::string& problem,
                         const GridFunction& v) {
    const Grid& g = *v.grid;
    os << "hjbgrid/1\n";
    os << "problem " << problem << '\n';
    os << "dim " << g.dim << '\n';
    os << "h " << full(g.h) << '\n';
    os << "box";
    for (int a = 0; a < g.dim; ++a)
        os << ' ' << g.lo[static_cast<size_t>(a)] << ' ' << g.hi[static_cast<size_t>(a)];
    os << '\n';
    os << "directions " << g.dirs.d1() << '\n';
    for (int k = 0; k < g.dirs.d1(); ++k) {
        const Offset& e = g.dirs.offset(k + 1);
        os << 'd';
        for (int a = 0; a < g.dim; ++a) os << ' ' << e[static_cast<size_t>(a)];
        os << '\n';
    }
    os << "nodes " << (g.interior.size() + g.band.size()) << '\n';
    // single merged ascending pass over both classes
    size_t bi = 0;
    auto emit = [&](std::int64_t id, char tag) {
        const Offset idx = g.unflat(id);
        for (int a = 0; a < g.dim; ++a) os << idx[static_cast<size_t>(a)] << ' ';
        os << tag << ' ' << full(v[id]) << '\n';
    };
    for (std::int64_t id : g.interior) {
        while (bi < g.band.size() && g.band[bi] < id) emit(g.band[bi++], 'b');
        emit(id, 'i');
    }
    while (bi < g.band.size()) emit(g.band[bi++], 'b');
}

SolutionDump read_solution_dump(std::istream& is) {
    SolutionDump d;
    std::string line;
    auto next = [&](const char* what) {
        if (!std::getline(is, line))
            throw std::runtime_error(std::string("solution dump: truncated before ") + what);
        return std::istringstream(line);
    };

    next("magic");
    if (line != "hjbgrid/1")
        throw std::runtime_error("solution dump: bad magic line '" + line + "'");

    std::string key;
    {
        auto ss = next("problem");
        ss >> key >> d.problem;
        if (key != "problem") throw std::runtime_error("solution dump: expected 'problem'");
    }
    {
        auto ss = next("dim");
        ss >> key >> d.dim;
        if (key != "dim" || d.dim < 1 || d.dim > 3)
            throw std::runtime_error("solution dump: bad 'dim' line");
    }
    {
        auto ss = next("h");
        ss >> key >> d.h;
        if (key != "h" || !(d.h > 0)) throw std::runtime_error("solution dump: bad 'h' line");
    }
    {
        auto ss = next("box");
        ss >> key;
        if (key != "box") throw std::runtime_error("solution dump: expected 'box'");
        for (int a = 0; a < d.dim; ++a) {
            if (!(ss >> d.lo[static_cast<size_t>(a)] >> d.hi[static_cast<size_t>(a)]))
                throw std::runtime_error("solution dump: short 'box' line");
        }
    }
    int ndirs = 0;
    {
        auto ss = next("directions");
        ss >> key >> ndirs;
        if (key != "directions" || ndirs < 1)
            throw std::runtime_error("solution dump: bad 'directions' line");
    }
    for (int k = 0; k < ndirs; ++k) {
        auto ss = next("direction entry");
        ss >> key;
        Offset e{0, 0, 0};
        for (int a = 0; a < d.dim; ++a) {
            if (!(ss >> e[static_cast<size_t>(a)]))
                throw std::runtime_error("solution dump: short direction entry");
        }
        if (key != "d") throw std::runtime_error("solution dump: expected 'd' entry");
        d.directions.push_back(e);
    }
    long nnodes = 0;
    {
        auto ss = next("nodes");
        ss >> key >> nnodes;
        if (key != "nodes" || nnodes < 0)
            throw std::runtime_error("solution dump: bad 'nodes' line");
    }
    d.nodes.reserve(static_cast<size_t>(nnodes));
    for (long n = 0; n < nnodes; ++n) {
        auto ss = next("node entry");
        DumpNode node;
        for (int a = 0; a < d.dim; ++a) {
            if (!(ss >> node.idx[static_cast<size_t>(a)]))
                throw std::runtime_error("solution dump: short node entry");
        }
        char tag = 0;
        if (!(ss >> tag >> node.value))
            throw std::runtime_error("solution dump: short node entry");
        if (tag == 'i')
            node.cls = NodeClass::interior;
        else if (tag == 'b')
            node.cls = NodeClass::band;
        else
            throw std::runtime_error(std::string("solution dump: unknown class tag '") + tag +
                                     "'");
        d.nodes.push_back(node);
    }
    return d;
}

}  // namespace hjb
